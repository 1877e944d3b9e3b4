//! Empirical Łojasiewicz and singularity exponents at the origin.
//!
//! Distance and gradient exponents are read off lower envelopes: probes are
//! binned by a dyadic scale, the smallest observed value in each bin is
//! kept, and a line is fitted through the per-bin minima. The singularity
//! exponent comes from the scaling `|{|f| ≤ t}| ~ t^θ` of sublevel volumes.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_line, ExponentFit};
use crate::numeric::{random_unit_vector, substream, substream2};
use crate::poly::{GradientField, SparsePolynomial};
use crate::quadrature::cover::{LevelBand, LevelCover};
use crate::quadrature::Budget;
use crate::region::Region;
use crate::zero_geometry::{box_dimension, sample_zero_set, ZeroIndex, ZeroSample, DEFAULT_LEVELS, DEFAULT_RESIDUAL_TOL};

/// Fits with `r²` below this are flagged.
pub const LOW_CONFIDENCE_R2: f64 = 0.9;
/// Minimum number of envelope points left after trimming.
pub const MIN_ENVELOPE_POINTS: usize = 8;
/// Bins dropped at each end of the scale range before fitting.
const TRIM: usize = 2;
/// Probe offsets have coordinates of size `2^{-s}`, `s` in this range.
const DIST_SCALES: (f64, f64) = (1.0, 16.0);
const GRAD_SCALES: (f64, f64) = (1.0, 40.0);
/// Anchors farther than this from the origin are not used for gradient probes.
const LOCAL_RADIUS: f64 = 0.25;
const CHUNK: usize = 1024;

/// A fitted exponent together with the envelope points it was fitted to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub fit: ExponentFit,
    /// `r²` below [`LOW_CONFIDENCE_R2`].
    pub low_confidence: bool,
    pub points: Vec<(f64, f64)>,
}

impl ExponentEstimate {
    fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        let fit = fit_line(&points)?;
        Ok(Self { low_confidence: fit.r_squared < LOW_CONFIDENCE_R2, fit, points })
    }

    fn exact(value: f64) -> Self {
        Self { fit: ExponentFit::exact(value), low_confidence: false, points: Vec::new() }
    }

    pub fn value(&self) -> f64 {
        self.fit.slope
    }
}

/// Random offset whose coordinates live on independent dyadic scales.
///
/// Offsets are isotropic or have independent log-uniform coordinates; with
/// `zeros`, a third of them also have some coordinates set to zero, so that
/// axis directions are probed exactly.
fn probe_offset<R: Rng>(rng: &mut R, n: usize, scales: (f64, f64), zeros: bool) -> Vec<f64> {
    let (s_lo, s_hi) = scales;
    let scale = |rng: &mut R| (-rng.gen_range(s_lo..s_hi)).exp2();
    match rng.gen_range(0..if zeros { 3 } else { 2 }) {
        0 => {
            let r = scale(rng);
            random_unit_vector(rng, n).into_iter().map(|v| r * v).collect()
        }
        mode => {
            let keep = rng.gen_range(0..n);
            (0..n)
                .map(|i| {
                    if mode == 2 && i != keep && rng.gen_bool(0.5) {
                        0.0
                    } else {
                        let s = scale(rng);
                        if rng.gen_bool(0.5) {
                            s
                        } else {
                            -s
                        }
                    }
                })
                .collect()
        }
    }
}

/// Per-bin minima of `y` with bins `floor(key)`, trimmed at both ends.
fn lower_envelope(samples: impl IntoIterator<Item = (f64, f64, f64)>) -> Vec<(f64, f64)> {
    let mut bins: std::collections::BTreeMap<i64, (f64, f64)> = std::collections::BTreeMap::new();
    for (key, x, y) in samples {
        if !(key.is_finite() && x.is_finite() && y.is_finite()) {
            continue;
        }
        let e = bins.entry(key.floor() as i64).or_insert((x, y));
        if y < e.1 {
            *e = (x, y);
        }
    }
    let all: Vec<(f64, f64)> = bins.into_values().collect();
    if all.len() <= 2 * TRIM {
        return Vec::new();
    }
    all[TRIM..all.len() - TRIM].to_vec()
}

fn check_envelope(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < MIN_ENVELOPE_POINTS {
        return Err(Error::InsufficientSample(format!(
            "{} envelope bins, need at least {MIN_ENVELOPE_POINTS}",
            points.len()
        )));
    }
    Ok(())
}

/// Anchor for probe `k`: the origin for even `k`, a sample point otherwise.
/// The flag tells whether the origin was chosen.
fn anchor<'a>(k: usize, origin: &'a [f64], anchors: &'a [&'a Vec<f64>], rng: &mut impl Rng) -> (&'a [f64], bool) {
    if k % 2 == 0 || anchors.is_empty() {
        (origin, true)
    } else {
        (anchors[rng.gen_range(0..anchors.len())], false)
    }
}

/// Distance exponent `α̂`: slope of `log₂ min|f|` against `log₂ d` over
/// probes binned by their distance `d` to `Z_f`.
///
/// Probes are offsets on independent dyadic scales around the origin and
/// around sample points; `d` is the upper estimate of [`ZeroIndex`].
pub fn loja_distance_exponent(
    f: &SparsePolynomial,
    region: &Region,
    sample: &ZeroSample,
    probes: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    region.check_dim(f.num_vars())?;
    let index = ZeroIndex::new(f, sample)?;
    let n = f.num_vars();
    let origin = vec![0.0; n];
    let anchors: Vec<&Vec<f64>> = sample.points.iter().collect();
    let min_dist = (-DIST_SCALES.1 - 1.0).exp2();
    let raw: Vec<(f64, f64, f64)> = (0..probes.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(seed, c as u64);
            let mut out = Vec::with_capacity(CHUNK);
            for k in c * CHUNK..(probes.min((c + 1) * CHUNK)) {
                let (z, at_origin) = anchor(k, &origin, &anchors, &mut rng);
                let off = probe_offset(&mut rng, n, DIST_SCALES, at_origin);
                let x: Vec<f64> = z.iter().zip(&off).map(|(a, b)| a + b).collect();
                if !region.contains(&x) {
                    continue;
                }
                let fx = f.value(&x).abs();
                if let Ok((_, d)) = index.distance(&x) {
                    if fx > 0.0 && d >= min_dist {
                        out.push((d.log2(), d.log2(), fx.log2()));
                    }
                }
            }
            out
        })
        .collect();
    let points = lower_envelope(raw);
    check_envelope(&points)?;
    ExponentEstimate::from_points(points)
}

/// Gradient exponent `β̂₀`: slope of the lower envelope of `log₂ |∇f|`
/// against `log₂ |f|` over probes approaching `Z_f` near the origin.
///
/// When `f(0) ≠ 0` or `∇f(0) ≠ 0` the inequality `|∇f| ≥ c|f|^β` holds
/// with `β = 0` near the origin and that value is returned directly.
pub fn loja_gradient_exponent(
    f: &SparsePolynomial,
    sample: &ZeroSample,
    probes: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = f.num_vars();
    let origin = vec![0.0; n];
    let field = GradientField::new(f);
    if f.value(&origin) != 0.0 || field.grad_norm(&origin) != 0.0 {
        return Ok(ExponentEstimate::exact(0.0));
    }
    let anchors: Vec<&Vec<f64>> =
        sample.points.iter().filter(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt() <= LOCAL_RADIUS).collect();
    let raw: Vec<(f64, f64, f64)> = (0..probes.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream2(seed, 1, c as u64);
            let mut out = Vec::with_capacity(CHUNK);
            for k in c * CHUNK..(probes.min((c + 1) * CHUNK)) {
                let (z, at_origin) = anchor(k, &origin, &anchors, &mut rng);
                let off = probe_offset(&mut rng, n, GRAD_SCALES, at_origin);
                let x: Vec<f64> = z.iter().zip(&off).map(|(a, b)| a + b).collect();
                let fx = field.value(&x).abs();
                let g = field.grad_norm(&x);
                if fx > 0.0 && g > 0.0 {
                    out.push((fx.log2(), fx.log2(), g.log2()));
                }
            }
            out
        })
        .collect();
    let points = lower_envelope(raw);
    check_envelope(&points)?;
    ExponentEstimate::from_points(points)
}

/// Sublevel-volume scaling of `f` on `U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityEstimate {
    /// `α̂₀ = θ`, the slope of `log₂ v(t)` against `log₂ t`.
    pub estimate: ExponentEstimate,
    /// Slope of `log₂ (v(t) / ln(1/t))`, which removes a single logarithmic
    /// factor such as the one in `v(t) ≈ 4t(1 + ln(1/t))` for `x1*x2`.
    pub log_corrected: ExponentFit,
    /// `(t, v(t), standard error)` per level.
    pub volumes: Vec<(f64, f64, f64)>,
}

/// Singularity exponent `α̂₀` from sublevel volumes `v(t) = |{x ∈ U : |f(x)| ≤ t}|`
/// at `t = 2^{-k}`, `k = 2, …, j_max`.
///
/// `∫_U |f|^{-α}` is finite exactly when `α < θ` if `v(t) ~ t^θ`; this is
/// assumed, not checked, for the power-law growth of the examples.
pub fn singularity_exponent(
    f: &SparsePolynomial,
    region: &Region,
    budget: &Budget,
    seed: u64,
) -> Result<SingularityEstimate> {
    region.check_dim(f.num_vars())?;
    if f.is_zero() {
        return Err(Error::FunctionVanishes);
    }
    if f.value(&vec![0.0; f.num_vars()]) != 0.0 {
        return Err(Error::Precondition("f(0) = 0 is required".into()));
    }
    let field = GradientField::new(f);
    let levels: Vec<i32> = (2..=budget.j_max).collect();
    let volumes: Vec<(f64, f64, f64)> = levels
        .par_iter()
        .map(|&k| {
            let t = (-k as f64).exp2();
            let cover = LevelCover::build(&field, region, LevelBand::sublevel(t), budget.max_cover_boxes);
            let mut rng = substream2(seed, 2, k as u64);
            let est = cover.estimate(&field, budget.samples_per_shell, &mut rng, |_, _| 1.0);
            (t, est.measure, est.measure_var.sqrt())
        })
        .collect();
    let usable: Vec<&(f64, f64, f64)> = volumes.iter().filter(|v| v.1 > 0.0).collect();
    if usable.len() < MIN_ENVELOPE_POINTS + 2 * TRIM {
        return Err(Error::InsufficientSample(format!("{} non-empty sublevel sets", usable.len())));
    }
    let window = &usable[TRIM..usable.len() - TRIM];
    let points: Vec<(f64, f64)> = window.iter().map(|v| (v.0.log2(), v.1.log2())).collect();
    let corrected: Vec<(f64, f64)> = window.iter().map(|v| (v.0.log2(), (v.1 / (1.0 / v.0).ln()).log2())).collect();
    Ok(SingularityEstimate {
        estimate: ExponentEstimate::from_points(points)?,
        log_corrected: fit_line(&corrected)?,
        volumes,
    })
}

/// Combined estimate of `α̂₀ + β̂₀ − 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub alpha0: ExponentEstimate,
    pub beta0: ExponentEstimate,
    pub alpha_dist: ExponentEstimate,
    pub inequality_margin: f64,
    /// Fit standard errors of `α̂₀` and `β̂₀` added in quadrature.
    pub margin_stderr: f64,
    /// Box-counting estimate of `n − dim Z_f`.
    pub codimension: f64,
    pub low_confidence: bool,
    pub warnings: Vec<String>,
}

/// Probes used by [`exponent_inequality_report`] for each envelope fit.
pub const REPORT_PROBES: usize = 40_000;
/// Zero-set sample size used by [`exponent_inequality_report`].
pub const REPORT_SAMPLE: usize = 4_000;

/// Estimates `α̂₀`, `β̂₀` and `α̂` and the margin `α̂₀ + β̂₀ − 1`.
///
/// A warning is attached when the estimated codimension of `Z_f` is below
/// 2, where the inequality `α₀ + β₀ ≥ 1` is not expected to hold.
pub fn exponent_inequality_report(
    f: &SparsePolynomial,
    region: &Region,
    budget: &Budget,
    seed: u64,
) -> Result<ExponentReport> {
    let sample = sample_zero_set(f, region, REPORT_SAMPLE, DEFAULT_RESIDUAL_TOL, seed)?;
    let n = f.num_vars() as f64;
    let codimension = n - box_dimension(&sample, &DEFAULT_LEVELS)?.dim_value;
    let alpha0 = singularity_exponent(f, region, budget, seed)?.estimate;
    let beta0 = loja_gradient_exponent(f, &sample, REPORT_PROBES, seed)?;
    let alpha_dist = loja_distance_exponent(f, region, &sample, REPORT_PROBES, seed)?;
    let mut warnings = Vec::new();
    if codimension < 1.5 {
        warnings.push(format!("estimated codimension {codimension:.2} of the zero set is below 2"));
    }
    let low_confidence = alpha0.low_confidence || beta0.low_confidence || alpha_dist.low_confidence;
    if low_confidence {
        warnings.push("a fit has r² below 0.9".into());
    }
    Ok(ExponentReport {
        inequality_margin: alpha0.value() + beta0.value() - 1.0,
        margin_stderr: alpha0.fit.slope_stderr.hypot(beta0.fit.slope_stderr),
        alpha0,
        beta0,
        alpha_dist,
        codimension,
        low_confidence,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(s: &str, n: usize) -> (SparsePolynomial, Region, ZeroSample) {
        let f = SparsePolynomial::parse_with_vars(s, n).unwrap();
        let u = Region::unit_cube(n);
        let z = sample_zero_set(&f, &u, 2000, DEFAULT_RESIDUAL_TOL, 7).unwrap();
        (f, u, z)
    }

    #[test]
    fn distance_exponents() {
        let (f, u, z) = setup("x1^2 + x2^2", 2);
        let a = loja_distance_exponent(&f, &u, &z, 20_000, 1).unwrap();
        assert!((a.value() - 2.0).abs() < 0.1, "{a:?}");
        let (f, u, z) = setup("x1*x2", 2);
        let a = loja_distance_exponent(&f, &u, &z, 20_000, 1).unwrap();
        assert!((a.value() - 2.0).abs() < 0.1, "{a:?}");
        let (f, u, z) = setup("x1", 1);
        let a = loja_distance_exponent(&f, &u, &z, 20_000, 1).unwrap();
        assert!((a.value() - 1.0).abs() < 0.05, "{a:?}");
    }

    #[test]
    fn gradient_exponents() {
        let (f, _, z) = setup("x1^2 + x2^2", 2);
        let b = loja_gradient_exponent(&f, &z, 20_000, 1).unwrap();
        assert!((b.value() - 0.5).abs() < 0.05, "{b:?}");
        let (f, _, z) = setup("x1^2 + x2^4", 2);
        let b = loja_gradient_exponent(&f, &z, 20_000, 1).unwrap();
        assert!((b.value() - 0.75).abs() < 0.05, "{b:?}");
        let (f, _, z) = setup("x1", 1);
        let b = loja_gradient_exponent(&f, &z, 20_000, 1).unwrap();
        assert!(b.fit.is_exact() && b.value() == 0.0);
    }

    #[test]
    fn singularity_exponents() {
        let b = Budget::quick();
        let u2 = Region::unit_cube(2);
        let s = singularity_exponent(&SparsePolynomial::parse("x1^2 + x2^2").unwrap(), &u2, &b, 1).unwrap();
        assert!((s.estimate.value() - 1.0).abs() < 0.1, "{s:?}");
        let s = singularity_exponent(&SparsePolynomial::parse("x1*x2").unwrap(), &u2, &b, 1).unwrap();
        assert!((s.log_corrected.slope - 1.0).abs() < 0.1, "{s:?}");
        let f = SparsePolynomial::parse("x1^2 + x2^2 + x3^2").unwrap();
        let s = singularity_exponent(&f, &Region::unit_cube(3), &b, 1).unwrap();
        assert!((s.estimate.value() - 1.5).abs() < 0.1, "{s:?}");
    }

    #[test]
    fn singularity_needs_a_zero_at_the_origin() {
        let f = SparsePolynomial::parse("x1 + 1").unwrap();
        let err = singularity_exponent(&f, &Region::unit_cube(1), &Budget::quick(), 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
