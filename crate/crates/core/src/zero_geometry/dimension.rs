use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::distance::ZeroIndex;
use super::sample::ZeroSample;
use crate::error::{Error, Result};
use crate::fit::{fit_line, ExponentFit};
use crate::numeric::substream2;
use crate::poly::SparsePolynomial;
use crate::region::Region;

/// Dyadic levels `k` (scales `ε = 2^{-k}`) used when none are given.
pub const DEFAULT_LEVELS: [u32; 6] = [3, 4, 5, 6, 7, 8];
const MIN_POINTS: usize = 1000;
const MIN_LEVELS: usize = 4;
const CHUNK: usize = 1024;
/// Cells within this many steps of an occupied cell are searched.
const STENCIL_RADIUS: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DimensionMethod {
    BoxCount,
    NeighborhoodVolume,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub fit: ExponentFit,
    /// Estimated dimension, clamped to `[0, n]`.
    pub dim_value: f64,
    pub method: DimensionMethod,
    /// `(k, log₂ count)` or `(−k, log₂ volume)` per level.
    pub points: Vec<(f64, f64)>,
}

fn check_levels(levels: &[u32]) -> Result<()> {
    let distinct: HashSet<u32> = levels.iter().copied().collect();
    if distinct.len() < MIN_LEVELS {
        return Err(Error::InsufficientSample(format!(
            "{} distinct dyadic levels, need at least {MIN_LEVELS}",
            distinct.len()
        )));
    }
    Ok(())
}

fn check_sample(sample: &ZeroSample) -> Result<()> {
    if sample.len() < MIN_POINTS {
        return Err(Error::InsufficientSample(format!("{} points, need at least {MIN_POINTS}", sample.len())));
    }
    Ok(())
}

fn cell_of(x: &[f64], side: f64) -> Vec<i64> {
    x.iter().map(|v| (v / side).floor() as i64).collect()
}

/// Box-counting dimension: slope of `log₂ #{occupied cells of side 2^{-k}}` against `k`.
pub fn box_dimension(sample: &ZeroSample, levels: &[u32]) -> Result<DimensionEstimate> {
    check_sample(sample)?;
    check_levels(levels)?;
    let points: Vec<(f64, f64)> = levels
        .iter()
        .map(|&k| {
            let side = (-(k as f64)).exp2();
            let cells: HashSet<Vec<i64>> = sample.points.iter().map(|p| cell_of(p, side)).collect();
            (k as f64, (cells.len() as f64).log2())
        })
        .collect();
    let fit = fit_line(&points)?;
    let dim_value = fit.slope.clamp(0.0, sample.num_vars as f64);
    Ok(DimensionEstimate { fit, dim_value, method: DimensionMethod::BoxCount, points })
}

/// Tube-volume exponent: slope `n − ℓ` of `log₂ |{x ∈ U : dist(x, Z_f) < ε}|`
/// against `log₂ ε`, reported as `dim_value = n − slope`.
///
/// The tube is sampled from the cells near occupied cells of the sample,
/// and membership uses the upper distance estimate of [`ZeroIndex`].
pub fn neighborhood_volume_exponent(
    f: &SparsePolynomial,
    region: &Region,
    sample: &ZeroSample,
    levels: &[u32],
    samples: usize,
    seed: u64,
) -> Result<DimensionEstimate> {
    check_sample(sample)?;
    check_levels(levels)?;
    region.check_dim(f.num_vars())?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let index = ZeroIndex::new(f, sample)?;
    let n = f.num_vars();
    let mut points = Vec::with_capacity(levels.len());
    for &k in levels {
        let eps = (-(k as f64)).exp2();
        let cells = candidate_cells(sample, eps);
        let chunks = samples.div_ceil(CHUNK);
        let hits: usize = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = substream2(seed, k as u64, c as u64);
                let m = CHUNK.min(samples - c * CHUNK);
                let mut x = vec![0.0; n];
                let mut hits = 0;
                for _ in 0..m {
                    let cell = &cells[rng.gen_range(0..cells.len())];
                    for (xi, &ci) in x.iter_mut().zip(cell) {
                        *xi = (ci as f64 + rng.gen::<f64>()) * eps;
                    }
                    if region.contains(&x) && index.distance(&x).is_ok_and(|(_, d)| d < eps) {
                        hits += 1;
                    }
                }
                hits
            })
            .sum();
        let volume = cells.len() as f64 * eps.powi(n as i32) * hits as f64 / samples as f64;
        points.push((eps.log2(), volume.log2()));
    }
    let fit = fit_line(&points)?;
    let dim_value = (n as f64 - fit.slope).clamp(0.0, n as f64);
    Ok(DimensionEstimate { fit, dim_value, method: DimensionMethod::NeighborhoodVolume, points })
}

/// Sorted cells of side `eps` within [`STENCIL_RADIUS`] of an occupied cell.
fn candidate_cells(sample: &ZeroSample, eps: f64) -> Vec<Vec<i64>> {
    let n = sample.num_vars;
    let occupied: HashSet<Vec<i64>> = sample.points.iter().map(|p| cell_of(p, eps)).collect();
    let width = (2 * STENCIL_RADIUS + 1) as usize;
    let stencil = width.pow(n as u32);
    let mut out = BTreeSet::new();
    for c in &occupied {
        for s in 0..stencil {
            let mut rem = s;
            let cell: Vec<i64> = c
                .iter()
                .map(|&ci| {
                    let off = (rem % width) as i64 - STENCIL_RADIUS;
                    rem /= width;
                    ci + off
                })
                .collect();
            out.insert(cell);
        }
    }
    out.into_iter().collect()
}
