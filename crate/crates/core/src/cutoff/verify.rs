use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cube::{dyadic_cover, dyadic_cover_with_margin, dyadic_level, hausdorff_cover, side_of, DyadicCube};
use super::partition::{build_partition, CutoffPartition};
use crate::error::{Error, Result};
use crate::fit::{fit_line, ExponentFit};
use crate::numeric::{compensated_sum, substream, substream2};

const CHUNK: usize = 1024;

fn chunks(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(CHUNK)).map(|c| (c, CHUNK.min(samples - c * CHUNK))).collect()
}

fn point_in<R: Rng>(rng: &mut R, cube: &DyadicCube, dilation: f64) -> Vec<f64> {
    let half = cube.side() / 2.0 * dilation;
    cube.center().iter().map(|c| c + half * rng.gen_range(-1.0..1.0)).collect()
}

/// Sampled checks of the partition identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionChecks {
    /// `max |Σ φ_i - 1|` over points of `∪ Q_i`.
    pub unity_residual: f64,
    /// Points outside `∪ (3/2) Q_i` where some `ψ_i` is nonzero.
    pub support_violations: usize,
    /// `max |χ - Σ φ_i|` with `χ` from the product identity.
    pub telescoping_residual: f64,
    /// Points where `χ ∉ [0, 1]`.
    pub range_violations: usize,
    pub inside_samples: usize,
    pub outside_samples: usize,
}

/// Samples `samples` points of `∪ Q_i` and `samples` points of the
/// complement of `∪ (3/2) Q_i` near the family.
///
/// Support is tested against every cube directly, without the neighbour
/// lookup used for evaluation.
pub fn verify_partition(p: &CutoffPartition, samples: usize, seed: u64) -> Result<PartitionChecks> {
    let cubes = p.cubes();
    let n = p.num_vars();
    let weights: Vec<f64> = cubes.iter().map(|c| c.side().powi(n as i32)).collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::InvalidCover(e.to_string()))?;
    let inside: Vec<(f64, f64, usize)> = chunks(samples)
        .into_par_iter()
        .map(|(c, m)| -> Result<(f64, f64, usize)> {
            let mut rng = substream2(seed, 0, c as u64);
            let (mut unity, mut tele, mut range) = (0.0f64, 0.0f64, 0);
            for _ in 0..m {
                let q = &cubes[pick.sample(&mut rng)];
                let x = point_in(&mut rng, q, 1.0);
                let sum = p.phi_sum(&x)?;
                let chi = p.chi(&x)?;
                unity = unity.max((sum - 1.0).abs());
                tele = tele.max((chi - sum).abs());
                range += usize::from(!(0.0..=1.0).contains(&chi));
            }
            Ok((unity, tele, range))
        })
        .collect::<Result<_>>()?;

    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for c in cubes {
        let (ctr, r) = (c.center(), c.side());
        for i in 0..n {
            lo[i] = lo[i].min(ctr[i] - r);
            hi[i] = hi[i].max(ctr[i] + r);
        }
    }
    let outside: Vec<(usize, usize)> = chunks(samples)
        .into_par_iter()
        .map(|(c, m)| {
            let mut rng = substream2(seed, 1, c as u64);
            let (mut tried, mut bad) = (0, 0);
            let mut accepted = 0;
            while accepted < m && tried < 100 * m {
                tried += 1;
                let x: Vec<f64> = (0..n).map(|i| rng.gen_range(lo[i]..hi[i])).collect();
                if cubes.iter().any(|q| q.dilate_contains(&x)) {
                    continue;
                }
                accepted += 1;
                bad += usize::from(cubes.iter().any(|q| q.bump(&x) != 0.0));
            }
            (accepted, bad)
        })
        .collect();
    Ok(PartitionChecks {
        unity_residual: inside.iter().map(|r| r.0).fold(0.0, f64::max),
        support_violations: outside.iter().map(|r| r.1).sum(),
        telescoping_residual: inside.iter().map(|r| r.1).fold(0.0, f64::max),
        range_violations: inside.iter().map(|r| r.2).sum(),
        inside_samples: samples,
        outside_samples: outside.iter().map(|r| r.0).sum(),
    })
}

/// The cutoff `χ` for `K` at scale `ε`: cubes of side `ε/2` meeting the
/// closed max-norm `ε/4` neighbourhood of `K`, so `χ ≡ 1` there.
pub fn neighbourhood_cutoff(points: &[Vec<f64>], eps: f64) -> Result<CutoffPartition> {
    let level = dyadic_level(eps)? + 1;
    build_partition(dyadic_cover_with_margin(points, level, eps / 4.0)?)
}

/// Count of sampled points within max-norm distance `ε/4` of `K` where
/// [`neighbourhood_cutoff`] is not exactly 1.
pub fn verify_identically_one_near(points: &[Vec<f64>], eps: f64, samples: usize, seed: u64) -> Result<usize> {
    let p = neighbourhood_cutoff(points, eps)?;
    let n = p.num_vars();
    let r = eps / 4.0;
    chunks(samples)
        .into_par_iter()
        .map(|(c, m)| -> Result<usize> {
            let mut rng = substream(seed ^ 0x6e65_6172, c as u64);
            let mut bad = 0;
            for _ in 0..m {
                let k = &points[rng.gen_range(0..points.len())];
                let x: Vec<f64> = (0..n).map(|i| k[i] + rng.gen_range(-r..=r)).collect();
                bad += usize::from(p.chi(&x)? != 1.0);
            }
            Ok(bad)
        })
        .sum()
}

/// Observed `sup |D^α φ_i| · s_i^{|α|}` per cube and its spread across levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeBound {
    pub alpha: Vec<u32>,
    pub per_cube: Vec<f64>,
    /// `(level, max over cubes of that level)`.
    pub per_level: Vec<(u32, f64)>,
    pub max: f64,
    /// Largest over smallest per-level maximum.
    pub uniformity_ratio: f64,
}

/// Monte Carlo sup of the normalized derivative of each `φ_i` over `(3/2) Q_i`.
pub fn verify_derivative_bound(p: &CutoffPartition, alpha: &[u32], samples: usize, seed: u64) -> Result<DerivativeBound> {
    if alpha.len() != p.num_vars() {
        return Err(Error::DimensionMismatch { expected: p.num_vars(), got: alpha.len() });
    }
    let order: u32 = alpha.iter().sum();
    if order > 2 {
        return Err(Error::InvalidArgument(format!("|α| = {order} exceeds 2")));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let per_cube: Vec<f64> = (0..p.len())
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let q = &p.cubes()[i];
            let norm = q.side().powi(order as i32);
            let mut rng = substream(seed, i as u64);
            let mut sup = 0.0f64;
            for _ in 0..samples {
                let x = point_in(&mut rng, q, 1.5);
                sup = sup.max(p.phi_jet(i, &x)?.derivative(alpha)?.abs() * norm);
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    let mut per_level: Vec<(u32, f64)> = Vec::new();
    for (q, &v) in p.cubes().iter().zip(&per_cube) {
        match per_level.last_mut() {
            Some((l, m)) if *l == q.level => *m = m.max(v),
            _ => per_level.push((q.level, v)),
        }
    }
    let max = per_level.iter().map(|l| l.1).fold(0.0, f64::max);
    let min = per_level.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
    Ok(DerivativeBound { alpha: alpha.to_vec(), per_cube, per_level, max, uniformity_ratio: max / min })
}

/// `‖D^k χ‖_{L^{p′}}` by Monte Carlo over the union of dilates, where the
/// pointwise size of `D^k χ` is `|χ|`, `|∇χ|` or the Frobenius norm of the
/// Hessian for `k = 0, 1, 2`.
///
/// Points are drawn from a dilate chosen by volume and weighted by one over
/// the number of dilates containing them.
pub fn cutoff_norm(p: &CutoffPartition, order: u32, p_prime: f64, samples: usize, seed: u64) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("order {order} exceeds 2")));
    }
    if !(p_prime >= 1.0) {
        return Err(Error::InvalidArgument(format!("p′ = {p_prime} must be at least 1")));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let n = p.num_vars() as i32;
    let vols: Vec<f64> = p.cubes().iter().map(|c| (1.5 * c.side()).powi(n)).collect();
    let total = compensated_sum(vols.iter().copied());
    let pick = WeightedIndex::new(&vols).map_err(|e| Error::InvalidCover(e.to_string()))?;
    let parts: Vec<f64> = chunks(samples)
        .into_par_iter()
        .map(|(c, m)| -> Result<f64> {
            let mut rng = substream(seed, c as u64);
            let mut terms = Vec::with_capacity(m);
            for _ in 0..m {
                let q = &p.cubes()[pick.sample(&mut rng)];
                let x = point_in(&mut rng, q, 1.5);
                let mult = p.active(&x)?.len() as f64;
                let jet = p.chi_jet(&x)?;
                let size = match order {
                    0 => jet.value.abs(),
                    1 => jet.grad_norm(),
                    _ => jet.hess_norm(),
                };
                terms.push(size.powf(p_prime) / mult);
            }
            Ok(compensated_sum(terms))
        })
        .collect::<Result<_>>()?;
    Ok((total * compensated_sum(parts) / samples as f64).powf(1.0 / p_prime))
}

/// Scaling of `‖D^α χ_ε‖_{L^{p′}}` with `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlestReport {
    pub levels: Vec<u32>,
    /// Norms for the level-`j` cover of `K` by cubes of side `ε = 2^{-j}`.
    pub direct_norms: Vec<f64>,
    /// Fit of `log₂ ‖D^α χ_ε‖` against `log₂ ε` for the direct covers.
    pub direct: ExponentFit,
    /// Norms for the covers with `N s^{n - l p′} ≤ Λ + ε`.
    pub bound_norms: Vec<f64>,
    pub bound_sides: Vec<f64>,
    pub bound: ExponentFit,
    /// `l - |α|`, plus `1/p′` when `Λ = 0`.
    pub bound_slope: f64,
}

impl FlestReport {
    /// The measured slope for the bound covers is at least `bound_slope - tol`.
    pub fn consistent_with_bound(&self, tol: f64) -> bool {
        self.bound.slope >= self.bound_slope - tol
    }
}

/// Fits `‖D^α χ_ε‖_{L^{p′}} ~ ε^slope` over `ε = 2^{-j}`, `j ∈ levels`,
/// for covers of `K` at scale `ε`.
///
/// Two families are measured: the plain level-`j` cover, and the cover of
/// [`hausdorff_cover`] whose cubes satisfy `Σ s^{n - l p′} ≤ Λ + ε`. The
/// second is the one the norm bound `ε^{l - |α|} (Λ + ε)^{1/p′}` refers to.
#[allow(clippy::too_many_arguments)]
pub fn verify_flest(
    points: &[Vec<f64>],
    levels: &[u32],
    l: f64,
    p_prime: f64,
    lambda: f64,
    order: u32,
    samples: usize,
    seed: u64,
) -> Result<FlestReport> {
    let n = points.first().ok_or(Error::EmptySet)?.len() as f64;
    let d = n - l * p_prime;
    if !(d > 0.0) {
        return Err(Error::Precondition(format!("n - l p′ = {d} must be positive")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Precondition(format!("Λ = {lambda} must be non-negative")));
    }
    if levels.len() < 3 {
        return Err(Error::InsufficientSample(format!("{} scales, need at least 3", levels.len())));
    }
    let mut direct_norms = Vec::new();
    let mut bound_norms = Vec::new();
    let mut bound_sides = Vec::new();
    for (k, &j) in levels.iter().enumerate() {
        let eps = side_of(j);
        let p = build_partition(dyadic_cover(points, eps)?)?;
        direct_norms.push(cutoff_norm(&p, order, p_prime, samples, substream(seed, k as u64).gen())?);
        let cover = hausdorff_cover(points, eps, d, lambda)?;
        bound_sides.push(cover[0].side());
        let p = build_partition(cover)?;
        bound_norms.push(cutoff_norm(&p, order, p_prime, samples, substream2(seed, 1, k as u64).gen())?);
    }
    let fit = |norms: &[f64]| {
        let pts: Vec<(f64, f64)> = levels.iter().zip(norms).map(|(&j, v)| (-(j as f64), v.log2())).collect();
        fit_line(&pts)
    };
    let bound_slope = l - order as f64 + if lambda == 0.0 { 1.0 / p_prime } else { 0.0 };
    Ok(FlestReport {
        levels: levels.to_vec(),
        direct: fit(&direct_norms)?,
        bound: fit(&bound_norms)?,
        direct_norms,
        bound_norms,
        bound_sides,
        bound_slope,
    })
}
