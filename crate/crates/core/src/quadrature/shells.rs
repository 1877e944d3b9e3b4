use rayon::prelude::*;
use serde::Serialize;

use super::cover::{LevelBand, LevelCover};
use super::{Budget, Integrand};
use crate::error::{Error, Result};
use crate::fit::{fit_line_weighted, ExponentFit};
use crate::numeric::{compensated_sum, substream};
use crate::poly::{GradientField, SparsePolynomial};
use crate::region::Region;

/// Minimum hits for a shell to enter the decay fit.
const MIN_HITS: usize = 16;
/// Relative standard error above which a shell counts as unresolved.
const MAX_REL_SE: f64 = 0.25;
/// Stream offset so that negative levels map to distinct substreams.
const LEVEL_STREAM_OFFSET: i64 = 1 << 16;

/// One dyadic level shell `E_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shell {
    pub level: i32,
    pub measure: f64,
    pub measure_se: f64,
    /// `∫_{E_j ∩ U}` of the integrand (equal to `measure` for [`Integrand::Measure`]).
    pub contribution: f64,
    pub contribution_se: f64,
    pub hits: usize,
    pub samples: usize,
    pub cover_volume: f64,
}

impl Shell {
    fn resolved(&self) -> bool {
        self.hits >= MIN_HITS && self.contribution > 0.0 && self.contribution_se <= MAX_REL_SE * self.contribution
    }
}

/// Per-level contributions of the dyadic shells to an integral over `U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellProfile {
    pub integrand: Integrand,
    /// Shells in strictly increasing level order.
    pub shells: Vec<Shell>,
    pub j_max: i32,
    pub region_volume: f64,
    /// Sampled points with `|f|` below the sink threshold, excluded from all shells.
    pub sink: usize,
    /// `true` when `{|f| ≤ 2^{-j_max-1}} ∩ U` is provably empty.
    pub tail_empty: bool,
}

impl ShellProfile {
    pub fn exponent(&self) -> Option<f64> {
        self.integrand.exponent()
    }

    pub fn total_measure(&self) -> f64 {
        compensated_sum(self.shells.iter().map(|s| s.measure))
    }

    pub fn partial_sum(&self) -> f64 {
        compensated_sum(self.shells.iter().map(|s| s.contribution))
    }

    pub fn partial_sum_se(&self) -> f64 {
        self.shells.iter().map(|s| s.contribution_se.powi(2)).sum::<f64>().sqrt()
    }

    pub fn shell(&self, level: i32) -> Option<&Shell> {
        self.shells.iter().find(|s| s.level == level)
    }

    /// Weighted fit of `log₂ c_j` against `j` over the deepest half of the
    /// resolved shells.
    pub fn decay_fit(&self) -> Result<ExponentFit> {
        let resolved: Vec<&Shell> = self.shells.iter().filter(|s| s.resolved()).collect();
        if resolved.len() < 4 {
            return Err(Error::InsufficientSample(format!("{} resolved shells", resolved.len())));
        }
        let window = &resolved[resolved.len() / 2..];
        let window = if window.len() < 4 { &resolved[resolved.len() - 4..] } else { window };
        let pts: Vec<(f64, f64)> = window.iter().map(|s| (s.level as f64, s.contribution.log2())).collect();
        let w: Vec<f64> = window
            .iter()
            .map(|s| {
                let sd = (s.contribution_se / (s.contribution * std::f64::consts::LN_2)).max(1e-6);
                1.0 / (sd * sd)
            })
            .collect();
        fit_line_weighted(&pts, &w)
    }
}

/// Outcome of a singular integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictKind {
    Convergent { value: f64, error_bar: f64 },
    Divergent { tail_growth_rate: f64 },
    Inconclusive { reason: String },
}

impl VerdictKind {
    pub fn label(&self) -> &'static str {
        match self {
            VerdictKind::Convergent { .. } => "CONVERGENT",
            VerdictKind::Divergent { .. } => "DIVERGENT",
            VerdictKind::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }

    pub fn is_convergent(&self) -> bool {
        matches!(self, VerdictKind::Convergent { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, VerdictKind::Divergent { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralVerdict {
    pub kind: VerdictKind,
    /// Decay fit of the deepest resolved shells, when available.
    pub fit: Option<ExponentFit>,
    pub partial_sum: f64,
    /// Geometric extrapolation beyond `j_max` (zero unless convergent).
    pub tail: f64,
    pub profile: ShellProfile,
}

fn check_inputs(f: &SparsePolynomial, region: &Region, j_max: i32) -> Result<()> {
    region.check_dim(f.num_vars())?;
    if j_max < 4 {
        return Err(Error::InvalidArgument(format!("j_max must be at least 4, got {j_max}")));
    }
    if f.is_zero() {
        return Err(Error::FunctionVanishes);
    }
    Ok(())
}

fn detect_vanishing(f: &SparsePolynomial, region: &Region, seed: u64) -> Result<()> {
    let mut rng = substream(seed, u64::MAX);
    if (0..256).all(|_| f.value(&region.sample(&mut rng)).abs() < super::cover::SINK_THRESHOLD) {
        return Err(Error::FunctionVanishes);
    }
    Ok(())
}

/// First level whose shell can meet `U`: the shell containing `max |f|`.
fn first_level(f: &SparsePolynomial, region: &Region) -> i32 {
    let max = f.range_over(region.lo(), region.hi()).mag();
    if max <= 1.0 {
        0
    } else {
        (-max.log2()).floor() as i32
    }
}

/// Estimates every shell of `f` on `U` for the given integrand.
pub fn integrate_shells(
    f: &SparsePolynomial,
    region: &Region,
    integrand: Integrand,
    budget: &Budget,
    seed: u64,
) -> Result<ShellProfile> {
    check_inputs(f, region, budget.j_max)?;
    detect_vanishing(f, region, seed)?;
    let field = GradientField::new(f);
    let j_min = first_level(f, region);
    let levels: Vec<i32> = (j_min..=budget.j_max).collect();
    let results: Vec<(Shell, usize)> = levels
        .par_iter()
        .map(|&level| {
            let band = LevelBand::shell(level);
            let cover = LevelCover::build(&field, region, band, budget.max_cover_boxes);
            let mut rng = substream(seed, (level as i64 + LEVEL_STREAM_OFFSET) as u64);
            let est = match integrand {
                Integrand::Measure => cover.estimate(&field, budget.samples_per_shell, &mut rng, |_, _| 1.0),
                Integrand::GradLog { p } => {
                    cover.estimate(&field, budget.samples_per_shell, &mut rng, |x, fx| {
                        (field.grad_norm(x) / fx).powf(p)
                    })
                }
                Integrand::AbsLog { p } => {
                    cover.estimate(&field, budget.samples_per_shell, &mut rng, |_, fx| fx.ln().abs().powf(p))
                }
            };
            let (contribution, contribution_var) = match integrand {
                Integrand::Measure => (est.measure, est.measure_var),
                _ => (est.integral, est.integral_var),
            };
            let shell = Shell {
                level,
                measure: est.measure,
                measure_se: est.measure_var.sqrt(),
                contribution,
                contribution_se: contribution_var.sqrt(),
                hits: est.hits,
                samples: est.samples,
                cover_volume: est.cover_volume,
            };
            (shell, est.sink)
        })
        .collect();
    let tail_cover = LevelCover::build(
        &field,
        region,
        LevelBand::sublevel((-(budget.j_max as f64) - 1.0).exp2()),
        budget.max_cover_boxes.min(512),
    );
    let sink = results.iter().map(|r| r.1).sum();
    Ok(ShellProfile {
        integrand,
        shells: results.into_iter().map(|r| r.0).collect(),
        j_max: budget.j_max,
        region_volume: region.volume(),
        sink,
        tail_empty: tail_cover.is_empty(),
    })
}

/// Monte Carlo measures of the level shells `E_j ∩ U`, `j ≤ j_max`.
///
/// Levels start at 0, or lower when `|f|` exceeds 1 somewhere on `U`.
pub fn shell_decompose(
    f: &SparsePolynomial,
    region: &Region,
    j_max: i32,
    samples_per_shell: usize,
    seed: u64,
) -> Result<ShellProfile> {
    let budget = Budget { samples_per_shell, j_max, ..Budget::default() };
    integrate_shells(f, region, Integrand::Measure, &budget, seed)
}

/// Classifies a shell profile as convergent, divergent or inconclusive.
pub fn classify(profile: ShellProfile, budget: &Budget) -> Result<IntegralVerdict> {
    let partial_sum = profile.partial_sum();
    let partial_se = profile.partial_sum_se();
    let populated: Vec<&Shell> = profile.shells.iter().filter(|s| s.cover_volume > 0.0).collect();
    let unresolved = populated.iter().filter(|s| s.contribution_se > MAX_REL_SE * s.contribution).count();
    if !populated.is_empty() && 2 * unresolved > populated.len() {
        return Err(Error::BudgetExhausted(format!(
            "{unresolved} of {} shells have relative standard error above {MAX_REL_SE}",
            populated.len()
        )));
    }
    if profile.tail_empty {
        let fit = profile.decay_fit().ok();
        return Ok(IntegralVerdict {
            kind: VerdictKind::Convergent { value: partial_sum, error_bar: partial_se },
            fit,
            partial_sum,
            tail: 0.0,
            profile,
        });
    }
    let fit = match profile.decay_fit() {
        Ok(fit) => fit,
        Err(e) => {
            return Ok(IntegralVerdict {
                kind: VerdictKind::Inconclusive { reason: e.to_string() },
                fit: None,
                partial_sum,
                tail: 0.0,
                profile,
            })
        }
    };
    let slope = fit.slope;
    let band = budget.z_score * fit.slope_stderr;
    let margin = budget.slope_margin;
    let (kind, tail) = if slope <= -margin - band {
        let ratio = slope.exp2();
        let last = fit.predict(profile.j_max as f64).exp2();
        let tail = last * ratio / (1.0 - ratio);
        (VerdictKind::Convergent { value: partial_sum + tail, error_bar: partial_se + tail }, tail)
    } else if slope >= -margin + band {
        (VerdictKind::Divergent { tail_growth_rate: slope }, 0.0)
    } else {
        let reason = format!(
            "decay slope {slope:.4} is within {band:.4} of the convergence threshold -{margin}"
        );
        (VerdictKind::Inconclusive { reason }, 0.0)
    };
    Ok(IntegralVerdict { kind, fit: Some(fit), partial_sum, tail, profile })
}

/// Integrates `integrand` shell by shell and classifies the result.
pub fn integrate(
    f: &SparsePolynomial,
    region: &Region,
    integrand: Integrand,
    budget: &Budget,
    seed: u64,
) -> Result<IntegralVerdict> {
    if let Some(p) = integrand.exponent() {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponent must be positive, got {p}")));
        }
    }
    let profile = integrate_shells(f, region, integrand, budget, seed)?;
    classify(profile, budget)
}

/// `∫_U |∇f/f|^p`.
pub fn integrate_grad_log(
    f: &SparsePolynomial,
    p: f64,
    region: &Region,
    budget: &Budget,
    seed: u64,
) -> Result<IntegralVerdict> {
    integrate(f, region, Integrand::GradLog { p }, budget, seed)
}

/// `∫_U |log|f||^p`.
pub fn integrate_abs_log(
    f: &SparsePolynomial,
    p: f64,
    region: &Region,
    budget: &Budget,
    seed: u64,
) -> Result<IntegralVerdict> {
    integrate(f, region, Integrand::AbsLog { p }, budget, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> SparsePolynomial {
        SparsePolynomial::parse(s).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = Region::unit_cube(2);
        let b = Budget::quick();
        assert_eq!(
            integrate_grad_log(&SparsePolynomial::zero(2), 1.0, &u, &b, 1).unwrap_err(),
            Error::FunctionVanishes
        );
        assert!(matches!(
            integrate_grad_log(&p("x1"), 1.0, &u, &b, 1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(shell_decompose(&p("x1*x2"), &u, 3, 100, 1).is_err());
        assert!(integrate_grad_log(&p("x1*x2"), -1.0, &u, &b, 1).is_err());
    }

    #[test]
    fn one_variable_shell_measure() {
        let prof = shell_decompose(&p("x1"), &Region::unit_cube(1), 8, 4000, 5).unwrap();
        let s1 = prof.shell(1).unwrap();
        assert!((s1.measure - 0.5).abs() < 3.0 * s1.measure_se + 1e-12, "{s1:?}");
        assert!(s1.measure_se < 5e-3);
        assert!(prof.shells.windows(2).all(|w| w[0].level < w[1].level));
    }

    #[test]
    fn levels_extend_below_zero_when_f_exceeds_one() {
        let prof = shell_decompose(&p("x1^2 + x2^2"), &Region::unit_cube(2), 6, 2000, 1).unwrap();
        assert_eq!(prof.shells[0].level, -2);
        assert!((prof.total_measure() - 4.0).abs() < 0.1);
    }

    #[test]
    fn bounded_away_from_zero_is_a_finite_sum() {
        let v = integrate_grad_log(&p("x1 + 3"), 2.0, &Region::unit_cube(1), &Budget::quick(), 2).unwrap();
        assert!(v.profile.tail_empty);
        // ∫_{-1}^{1} (x+3)^{-2} dx = 1/2 - 1/4.
        match v.kind {
            VerdictKind::Convergent { value, .. } => assert!((value - 0.25).abs() < 0.01, "{value}"),
            k => panic!("{k:?}"),
        }
    }
}
