use std::collections::{HashMap, HashSet};

use super::cube::DyadicCube;
use super::profile::even_profile;
use crate::error::{Error, Result};

/// Value, gradient and Hessian of a function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `n × n`.
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(n: usize, value: f64) -> Self {
        Self { value, grad: vec![0.0; n], hess: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn mul(&self, other: &Jet2) -> Jet2 {
        let n = self.dim();
        let (a, b) = (self, other);
        let grad = (0..n).map(|i| a.grad[i] * b.value + a.value * b.grad[i]).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = a.hess[i * n + j] * b.value
                    + a.grad[i] * b.grad[j]
                    + b.grad[i] * a.grad[j]
                    + a.value * b.hess[i * n + j];
            }
        }
        Jet2 { value: a.value * b.value, grad, hess }
    }

    /// `1 - self`.
    pub fn complement(&self) -> Jet2 {
        Jet2 {
            value: 1.0 - self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }

    /// `D^α` for `|α| ≤ 2`.
    pub fn derivative(&self, alpha: &[u32]) -> Result<f64> {
        let n = self.dim();
        if alpha.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
        }
        let nz: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0).collect();
        match (alpha.iter().sum::<u32>(), nz.as_slice()) {
            (0, _) => Ok(self.value),
            (1, [i]) => Ok(self.grad[*i]),
            (2, [i]) => Ok(self.hess[i * n + i]),
            (2, [i, j]) => Ok(self.hess[i * n + j]),
            (k, _) => Err(Error::InvalidArgument(format!("order {k} exceeds the second-order jet"))),
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn hess_norm(&self) -> f64 {
        self.hess.iter().map(|h| h * h).sum::<f64>().sqrt()
    }
}

/// Second-order jet of the bump `ψ_Q` at `x`.
pub fn bump_jet(cube: &DyadicCube, x: &[f64]) -> Jet2 {
    let n = cube.dim();
    let scale = 2.0 / cube.side();
    let mut jet = Jet2::constant(n, 1.0);
    for (i, u) in cube.local(x).into_iter().enumerate() {
        let d = even_profile(u);
        let mut factor = Jet2::constant(n, d[0]);
        factor.grad[i] = d[1] * scale;
        factor.hess[i * n + i] = d[2] * scale * scale;
        jet = jet.mul(&factor);
    }
    jet
}

/// The partition `φ_k = ψ_k Π_{j<k} (1 - ψ_j)` over a disjoint family of
/// dyadic cubes listed by decreasing side, with `χ = Σ φ_k = 1 - Π (1 - ψ_j)`.
#[derive(Debug, Clone)]
pub struct CutoffPartition {
    cubes: Vec<DyadicCube>,
    num_vars: usize,
    levels: Vec<u32>,
    lookup: HashMap<DyadicCube, usize>,
}

impl CutoffPartition {
    pub fn new(cubes: Vec<DyadicCube>) -> Result<Self> {
        let num_vars = cubes.first().ok_or(Error::EmptySet)?.dim();
        if num_vars == 0 {
            return Err(Error::InvalidCover("cubes need at least one coordinate".into()));
        }
        if let Some(c) = cubes.iter().find(|c| c.dim() != num_vars) {
            return Err(Error::DimensionMismatch { expected: num_vars, got: c.dim() });
        }
        if let Some(w) = cubes.windows(2).find(|w| w[0].level > w[1].level) {
            return Err(Error::InvalidCover(format!(
                "cubes must be sorted by decreasing side: level {} follows level {}",
                w[1].level, w[0].level
            )));
        }
        let mut levels: Vec<u32> = cubes.iter().map(|c| c.level).collect();
        levels.dedup();
        let mut lookup = HashMap::with_capacity(cubes.len());
        for (i, c) in cubes.iter().enumerate() {
            if lookup.insert(c.clone(), i).is_some() {
                return Err(Error::InvalidCover(format!("cube {c:?} appears twice")));
            }
        }
        let present: HashSet<&DyadicCube> = cubes.iter().collect();
        for c in &cubes {
            for &l in levels.iter().take_while(|&&l| l < c.level) {
                let a = c.ancestor(l).expect("coarser level");
                if present.contains(&a) {
                    return Err(Error::InvalidCover(format!("cube {c:?} overlaps {a:?}")));
                }
            }
        }
        Ok(Self { cubes, num_vars, levels, lookup })
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: x.len() });
        }
        Ok(())
    }

    /// Indices, ascending, of the cubes whose open `3/2` dilate contains `x`.
    pub fn active(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check(x)?;
        let n = self.num_vars;
        let mut out = Vec::new();
        for &level in &self.levels {
            let home = DyadicCube::containing(level, x);
            let mut offset = vec![-1i64; n];
            loop {
                let idx = home.index.iter().zip(&offset).map(|(k, o)| k + o).collect();
                let q = DyadicCube::new(level, idx);
                if let Some(&i) = self.lookup.get(&q) {
                    if q.dilate_contains(x) {
                        out.push(i);
                    }
                }
                let mut d = 0;
                while d < n && offset[d] == 1 {
                    offset[d] = -1;
                    d += 1;
                }
                if d == n {
                    break;
                }
                offset[d] += 1;
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn psi(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.cube(i)?.bump(x))
    }

    fn cube(&self, i: usize) -> Result<&DyadicCube> {
        self.cubes
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("cube {i} out of range for {} cubes", self.cubes.len())))
    }

    /// `φ_i(x)`.
    pub fn phi(&self, i: usize, x: &[f64]) -> Result<f64> {
        let psi = self.psi(i, x)?;
        if psi == 0.0 {
            return Ok(0.0);
        }
        let rest: f64 = self.active(x)?.into_iter().take_while(|&j| j < i).map(|j| 1.0 - self.cubes[j].bump(x)).product();
        Ok(psi * rest)
    }

    /// Nonzero `(i, φ_i(x))`, in cube order.
    pub fn phis(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let mut rest = 1.0;
        let mut out = Vec::new();
        for i in self.active(x)? {
            let psi = self.cubes[i].bump(x);
            let phi = psi * rest;
            if phi != 0.0 {
                out.push((i, phi));
            }
            rest *= 1.0 - psi;
        }
        Ok(out)
    }

    /// `χ(x) = 1 - Π_j (1 - ψ_j(x))`.
    pub fn chi(&self, x: &[f64]) -> Result<f64> {
        let prod: f64 = self.active(x)?.into_iter().map(|i| 1.0 - self.cubes[i].bump(x)).product();
        Ok(1.0 - prod)
    }

    /// `Σ_i φ_i(x)`, summed term by term.
    pub fn phi_sum(&self, x: &[f64]) -> Result<f64> {
        Ok(self.phis(x)?.into_iter().map(|(_, p)| p).sum())
    }

    pub fn phi_jet(&self, i: usize, x: &[f64]) -> Result<Jet2> {
        self.check(x)?;
        let mut jet = bump_jet(self.cube(i)?, x);
        if jet.value == 0.0 && jet.grad.iter().all(|&g| g == 0.0) {
            return Ok(jet);
        }
        for j in self.active(x)?.into_iter().take_while(|&j| j < i) {
            jet = jet.mul(&bump_jet(&self.cubes[j], x).complement());
        }
        Ok(jet)
    }

    pub fn chi_jet(&self, x: &[f64]) -> Result<Jet2> {
        let mut prod = Jet2::constant(self.num_vars, 1.0);
        for i in self.active(x)? {
            prod = prod.mul(&bump_jet(&self.cubes[i], x).complement());
        }
        Ok(prod.complement())
    }
}

/// Validates the family and wraps it as a [`CutoffPartition`].
pub fn build_partition(cubes: Vec<DyadicCube>) -> Result<CutoffPartition> {
    CutoffPartition::new(cubes)
}
