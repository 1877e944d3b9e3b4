use serde::Serialize;

use super::shells::{integrate_grad_log, VerdictKind};
use super::Budget;
use crate::error::{Error, Result};
use crate::poly::SparsePolynomial;
use crate::region::Region;

/// One bisection probe of `∫_U |∇f/f|^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub p: f64,
    pub verdict: String,
    pub slope: Option<f64>,
    pub rebudgeted: bool,
}

/// Critical integrability exponent `γ* = sup { p : ∫_U |∇f/f|^p < ∞ }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalExponent {
    /// Midpoint of the final bisection bracket.
    pub estimate: f64,
    /// Largest probe classified CONVERGENT and smallest classified DIVERGENT.
    pub bracket: (f64, f64),
    pub bracket_width: f64,
    /// Some probe stayed INCONCLUSIVE after re-budgeting; the reported
    /// bracket is then wider than the bisection tolerance.
    pub widened: bool,
    pub probes: Vec<Probe>,
}

fn probe(
    f: &SparsePolynomial,
    p: f64,
    region: &Region,
    budget: &Budget,
    seed: u64,
    log: &mut Vec<Probe>,
) -> Result<VerdictKind> {
    let mut v = integrate_grad_log(f, p, region, budget, seed)?;
    let mut rebudgeted = false;
    if matches!(v.kind, VerdictKind::Inconclusive { .. }) {
        v = integrate_grad_log(f, p, region, &budget.doubled(), seed)?;
        rebudgeted = true;
    }
    log.push(Probe { p, verdict: v.kind.label().to_string(), slope: v.fit.as_ref().map(|f| f.slope), rebudgeted });
    Ok(v.kind)
}

/// Bisects on `p` between a convergent `p_lo` and a divergent `p_hi`
/// until the bracket is at most `tol` wide.
///
/// A probe that stays INCONCLUSIVE after one doubling of the budget has a
/// decay slope at the convergence threshold; bisection continues from it
/// as a lower end, and the reported `bracket` keeps the last strictly
/// CONVERGENT probe as its lower end.
pub fn critical_exponent(
    f: &SparsePolynomial,
    region: &Region,
    search: (f64, f64),
    tol: f64,
    budget: &Budget,
    seed: u64,
) -> Result<CriticalExponent> {
    let (p_lo, p_hi) = search;
    if !(p_lo > 0.0 && p_lo < p_hi && tol > 0.0) {
        return Err(Error::BadBracket(format!("need 0 < p_lo < p_hi and tol > 0, got ({p_lo}, {p_hi}), tol {tol}")));
    }
    let mut probes = Vec::new();
    let lo_kind = probe(f, p_lo, region, budget, seed, &mut probes)?;
    if !lo_kind.is_convergent() {
        return Err(Error::BadBracket(format!("p_lo = {p_lo} is {}, expected CONVERGENT", lo_kind.label())));
    }
    let hi_kind = probe(f, p_hi, region, budget, seed, &mut probes)?;
    if !hi_kind.is_divergent() {
        return Err(Error::BadBracket(format!("p_hi = {p_hi} is {}, expected DIVERGENT", hi_kind.label())));
    }
    let (mut lo, mut hi, mut conv_lo) = (p_lo, p_hi, p_lo);
    let mut widened = false;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match probe(f, mid, region, budget, seed, &mut probes)? {
            VerdictKind::Convergent { .. } => {
                lo = mid;
                conv_lo = mid;
            }
            VerdictKind::Divergent { .. } => hi = mid,
            VerdictKind::Inconclusive { .. } => {
                lo = mid;
                widened = true;
            }
        }
    }
    Ok(CriticalExponent {
        estimate: 0.5 * (lo + hi),
        bracket: (conv_lo, hi),
        bracket_width: hi - conv_lo,
        widened,
        probes,
    })
}

/// [`critical_exponent`] with the default budget.
pub fn critical_exponent_default(
    f: &SparsePolynomial,
    region: &Region,
    search: (f64, f64),
    tol: f64,
    seed: u64,
) -> Result<CriticalExponent> {
    critical_exponent(f, region, search, tol, &Budget::default(), seed)
}
