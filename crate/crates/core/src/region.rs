use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `Π [lo_i, hi_i]` in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidRegion(format!(
                "bounds have lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidRegion(format!("axis {}: need lo < hi, got [{a}, {b}]", i + 1)));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![-r; n], vec![r; n])
    }

    /// The default neighbourhood `[-1, 1]^n`.
    pub fn unit_cube(n: usize) -> Self {
        Self::cube(n, 1.0).expect("unit cube is valid")
    }

    /// Parses `lo1,hi1,lo2,hi2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let vals: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidRegion(format!("bad number {s:?}"))))
            .collect::<Result<_>>()?;
        if vals.is_empty() || vals.len() % 2 != 0 {
            return Err(Error::InvalidRegion("expected lo,hi pairs".into()));
        }
        let (lo, hi) = vals.chunks(2).map(|c| (c[0], c[1])).unzip();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| a + (b - a) * rng.gen::<f64>()).collect()
    }

    /// Drops the first coordinate.
    pub fn tail(&self) -> Option<Region> {
        (self.dim() > 1).then(|| Region { lo: self.lo[1..].to_vec(), hi: self.hi[1..].to_vec() })
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.dim() });
        }
        Ok(())
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.lo.iter().zip(&self.hi).map(|(a, b)| format!("{a},{b}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_volume() {
        let r = Region::parse("-1,1,-1,1").unwrap();
        assert_eq!(r.dim(), 2);
        assert_eq!(r.volume(), 4.0);
        assert_eq!(r.to_string(), "-1,1,-1,1");
        assert!(r.contains(&[1.0, -1.0]));
        assert!(!r.contains(&[1.1, 0.0]));
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(Region::parse("1,1").is_err());
        assert!(Region::parse("0,1,2").is_err());
        assert!(Region::parse("a,b").is_err());
        assert!(Region::new(vec![0.0], vec![f64::NAN]).is_err());
    }
}
