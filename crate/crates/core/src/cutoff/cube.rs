use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::profile::{even_profile, MAX_ORDER};
use crate::error::{Error, Result};

/// The half-open cube `Π [k_i 2^{-j}, (k_i + 1) 2^{-j})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: Vec<i64>,
}

impl DyadicCube {
    pub fn new(level: u32, index: Vec<i64>) -> Self {
        Self { level, index }
    }

    /// The level-`level` cube containing `x`.
    pub fn containing(level: u32, x: &[f64]) -> Self {
        let side = side_of(level);
        Self { level, index: x.iter().map(|v| (v / side).floor() as i64).collect() }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        side_of(self.level)
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&k| (k as f64 + 0.5) * s).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let s = self.side();
        x.iter().zip(&self.index).all(|(v, &k)| k as f64 * s <= *v && *v < (k + 1) as f64 * s)
    }

    /// Coordinates of `x` relative to the cube, scaled so that the cube is
    /// `[-1, 1]^n` and its `3/2` dilate is `[-3/2, 3/2]^n`.
    pub fn local(&self, x: &[f64]) -> Vec<f64> {
        let s = self.side();
        x.iter().zip(&self.index).map(|(v, &k)| (v - (k as f64 + 0.5) * s) / (s / 2.0)).collect()
    }

    /// `x` lies in the open `3/2` dilate, outside of which the bump vanishes.
    pub fn dilate_contains(&self, x: &[f64]) -> bool {
        self.local(x).iter().all(|u| u.abs() < 1.5)
    }

    /// The ancestor at a coarser level.
    pub fn ancestor(&self, level: u32) -> Option<DyadicCube> {
        (level <= self.level).then(|| {
            let shift = self.level - level;
            DyadicCube { level, index: self.index.iter().map(|&k| k >> shift).collect() }
        })
    }

    /// The bump `ψ_Q(x) = Π_i b(|u_i|)`, `u = (x - c_Q) / (s_Q / 2)`.
    pub fn bump(&self, x: &[f64]) -> f64 {
        self.local(x).iter().map(|&u| even_profile(u)[0]).product()
    }

    /// `D^α ψ_Q(x)` for a multi-index with every `α_i ≤ 3`.
    pub fn bump_derivative(&self, x: &[f64], alpha: &[u32]) -> Result<f64> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: alpha.len() });
        }
        if alpha.iter().any(|&a| a as usize > MAX_ORDER) {
            return Err(Error::InvalidArgument(format!("derivative orders above {MAX_ORDER} are not available")));
        }
        let scale = 2.0 / self.side();
        Ok(self
            .local(x)
            .iter()
            .zip(alpha)
            .map(|(&u, &a)| even_profile(u)[a as usize] * scale.powi(a as i32))
            .product())
    }
}

pub(crate) fn side_of(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

/// The level `j` with `2^{-j} = eps`, for `eps` a non-positive power of two.
pub fn dyadic_level(eps: f64) -> Result<u32> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must lie in (0, 1]")));
    }
    let j = -eps.log2();
    if j.fract() != 0.0 || side_of(j as u32) != eps {
        return Err(Error::InvalidArgument(format!("ε = {eps} is not a power of two")));
    }
    Ok(j as u32)
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let n = points.first().ok_or(Error::EmptySet)?.len();
    if n == 0 {
        return Err(Error::InvalidArgument("points must have at least one coordinate".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("points must be finite".into()));
    }
    Ok(n)
}

/// The level-`j` cubes meeting `K`, where `2^{-j} = ε`, in index order.
pub fn dyadic_cover(points: &[Vec<f64>], eps: f64) -> Result<Vec<DyadicCube>> {
    check_points(points)?;
    let level = dyadic_level(eps)?;
    let cubes: BTreeSet<DyadicCube> = points.iter().map(|p| DyadicCube::containing(level, p)).collect();
    Ok(cubes.into_iter().collect())
}

/// The level-`level` cubes meeting the closed box `[p - r, p + r]` around
/// some point `p` of `K`.
///
/// The union of the closed cubes then contains the `r`-neighbourhood of `K`
/// in the max norm, so a cutoff built on them is identically 1 there.
pub fn dyadic_cover_with_margin(points: &[Vec<f64>], level: u32, margin: f64) -> Result<Vec<DyadicCube>> {
    let n = check_points(points)?;
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::InvalidArgument(format!("margin {margin} must be non-negative")));
    }
    let s = side_of(level);
    let mut cubes = BTreeSet::new();
    for p in points {
        let lo: Vec<i64> = p.iter().map(|v| ((v - margin) / s).floor() as i64).collect();
        let hi: Vec<i64> = p.iter().map(|v| ((v + margin) / s).floor() as i64).collect();
        let mut idx = lo.clone();
        loop {
            cubes.insert(DyadicCube::new(level, idx.clone()));
            let mut d = 0;
            while d < n {
                if idx[d] < hi[d] {
                    idx[d] += 1;
                    break;
                }
                idx[d] = lo[d];
                d += 1;
            }
            if d == n {
                break;
            }
        }
    }
    Ok(cubes.into_iter().collect())
}

/// A cover of `K` by cubes of side `s ≤ ε` with `N s^{d} ≤ Λ + ε`, where
/// `N` is the number of cubes and `d = n - l p′` the measure dimension:
/// the side is halved from the largest dyadic `s ≤ ε` until the sum fits.
pub fn hausdorff_cover(points: &[Vec<f64>], eps: f64, d: f64, lambda: f64) -> Result<Vec<DyadicCube>> {
    check_points(points)?;
    if !(d > 0.0) {
        return Err(Error::Precondition(format!("n - l p′ = {d} must be positive")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Precondition(format!("Λ = {lambda} must be non-negative")));
    }
    let mut level = dyadic_level(eps)?;
    loop {
        let cubes: BTreeSet<DyadicCube> = points.iter().map(|p| DyadicCube::containing(level, p)).collect();
        if cubes.len() as f64 * side_of(level).powf(d) <= lambda + eps {
            return Ok(cubes.into_iter().collect());
        }
        level += 1;
        if level > 1000 {
            return Err(Error::InvalidCover("no dyadic cover satisfies the measure bound".into()));
        }
    }
}

/// A disjoint mixed-level collection tiling `[0, 2^{-lo+2})^n`: the level-`j`
/// cubes fill the max-norm shell `2^{-j+1} ≤ |x|_∞ < 2^{-j+2}` for
/// `lo ≤ j ≤ hi`, and level-`hi` cubes fill the remaining corner box.
/// Sides shrink towards the origin as in a Whitney decomposition.
pub fn whitney_fixture(n: usize, lo: u32, hi: u32) -> Result<Vec<DyadicCube>> {
    if n == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!("need n ≥ 1 and lo ≤ hi, got n = {n}, {lo}..={hi}")));
    }
    let mut cubes = Vec::new();
    for level in lo..=hi {
        let limit: i64 = 4;
        let count = (limit as usize).pow(n as u32);
        for c in 0..count {
            let mut rem = c;
            let idx: Vec<i64> = (0..n)
                .map(|_| {
                    let k = (rem % limit as usize) as i64;
                    rem /= limit as usize;
                    k
                })
                .collect();
            let in_shell = idx.iter().any(|&k| k >= 2);
            if in_shell || level == hi {
                cubes.push(DyadicCube::new(level, idx));
            }
        }
    }
    Ok(cubes)
}

/// One row per cube: level, then index coordinates.
pub fn write_cover_csv<W: Write>(cubes: &[DyadicCube], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = cubes.first().map_or(0, DyadicCube::dim);
    let mut header = vec!["level".to_string()];
    header.extend((1..=n).map(|i| format!("k{i}")));
    w.write_record(&header)?;
    for c in cubes {
        let mut row = vec![c.level.to_string()];
        row.extend(c.index.iter().map(|k| k.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        let q = DyadicCube::new(2, vec![1, -2]);
        assert_eq!(q.bump(&q.center()), 1.0);
        let c = q.center();
        let s = q.side();
        assert_eq!(q.bump(&[c[0] + 0.75 * s, c[1]]), 0.0);
        assert_eq!(q.bump(&[c[0], c[1] - 0.8 * s]), 0.0);
        let mid = q.bump(&[c[0] + 0.625 * s, c[1]]);
        assert!(mid > 0.0 && mid < 1.0);
        let d = q.bump_derivative(&[c[0] + 0.625 * s, c[1]], &[1, 0]).unwrap();
        assert!(d.abs() <= super::super::profile::max_slope() * 2.0 / s);
    }

    #[test]
    fn containment_is_half_open() {
        let q = DyadicCube::new(2, vec![0, 0]);
        assert!(q.contains(&[0.0, 0.0]));
        assert!(!q.contains(&[0.25, 0.0]));
        assert_eq!(DyadicCube::containing(2, &[0.25, -1e-12]).index, vec![1, -1]);
    }

    #[test]
    fn covers() {
        let origin = vec![vec![0.0, 0.0]];
        let c = dyadic_cover(&origin, 0.25).unwrap();
        assert_eq!(c, vec![DyadicCube::new(2, vec![0, 0])]);
        for j in 1..8u32 {
            let seg: Vec<Vec<f64>> = (0..=1000).map(|i| vec![i as f64 / 1000.0, 0.0]).collect();
            let m = dyadic_cover(&seg, side_of(j)).unwrap().len();
            assert!(m == (1 << j) || m == (1 << j) + 1, "level {j}: {m}");
        }
        assert!(dyadic_cover(&origin, 0.3).is_err());
        assert_eq!(dyadic_cover(&[], 0.25).unwrap_err(), Error::EmptySet);
    }

    #[test]
    fn circle_cover_count() {
        let circle: Vec<Vec<f64>> = (0..20_000)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 20_000.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let m = dyadic_cover(&circle, side_of(5)).unwrap().len() as f64;
        let nominal = std::f64::consts::TAU / side_of(5);
        assert!(m >= 0.5 * nominal && m <= 1.5 * nominal, "{m}");
    }

    #[test]
    fn margin_cover_contains_the_neighbourhood() {
        let cubes = dyadic_cover_with_margin(&[vec![0.3, 0.3]], 3, 0.0625).unwrap();
        assert_eq!(cubes.len(), 4);
        let cubes = dyadic_cover_with_margin(&[vec![0.5, 0.5]], 3, 0.0).unwrap();
        assert_eq!(cubes.len(), 1);
    }

    #[test]
    fn hausdorff_cover_of_a_point_shrinks() {
        let c = hausdorff_cover(&[vec![0.0, 0.0]], 0.25, 0.2, 0.0).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].side().powf(0.2) <= 0.25);
        assert!((2.0 * c[0].side()).powf(0.2) > 0.25);
        assert!(matches!(hausdorff_cover(&[vec![0.0]], 0.25, -0.1, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn whitney_fixture_is_a_tiling() {
        let cubes = whitney_fixture(2, 2, 6).unwrap();
        let area: f64 = cubes.iter().map(|c| c.side().powi(2)).sum();
        assert!((area - 1.0).abs() < 1e-15);
        assert_eq!(cubes.len(), 12 * 5 + 4);
    }
}
