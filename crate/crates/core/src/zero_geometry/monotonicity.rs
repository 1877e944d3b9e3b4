use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::substream;
use crate::poly::{SparsePolynomial, UnivariateRestriction, ZERO_COEFF_RTOL};
use crate::region::Region;

const SCAN_POINTS: usize = 4096;
const ROOT_TOL: f64 = 1e-10;

/// Points in `(a, b)` where `t ↦ ∂₁f(t, x′)` changes sign, in increasing order.
pub fn monotonicity_breakpoints(f: &SparsePolynomial, rest: &[f64], interval: (f64, f64)) -> Result<Vec<f64>> {
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("bad interval ({a}, {b})")));
    }
    let coeffs = f.slice_in_first(rest)?;
    let floor = ZERO_COEFF_RTOL * f.slice_scale(rest);
    if coeffs.iter().all(|c| c.abs() <= floor) {
        return Err(Error::IdenticallySingularSlice);
    }
    let deriv: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| if c.abs() <= floor { 0.0 } else { k as f64 * c })
        .collect();
    if deriv.iter().all(|&c| c == 0.0) {
        return Ok(Vec::new());
    }
    let d = UnivariateRestriction::from_coeffs(deriv);
    let h = (b - a) / SCAN_POINTS as f64;
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for k in 0..=SCAN_POINTS {
        let t = if k == SCAN_POINTS { b } else { a + h * k as f64 };
        let v = d.eval(t);
        if v == 0.0 {
            continue;
        }
        if let Some((s, sv)) = last {
            if sv.signum() != v.signum() {
                let r = bisect(&d, s, t);
                if r > a && r < b {
                    out.push(r);
                }
            }
        }
        last = Some((t, v));
    }
    Ok(out)
}

fn bisect(d: &UnivariateRestriction, mut lo: f64, mut hi: f64) -> f64 {
    let s = d.eval(lo).signum();
    while hi - lo > ROOT_TOL {
        let m = 0.5 * (lo + hi);
        let v = d.eval(m);
        if v == 0.0 {
            return m;
        }
        if v.signum() == s {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Breakpoint counts over random slices `x′` of `U`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MonotonicityStats {
    /// Largest number of breakpoints on any slice.
    pub max_changes: usize,
    pub slices: usize,
    /// Slices on which `f(·, x′)` vanishes identically (skipped).
    pub degenerate_slices: usize,
    /// `deg_{x₁} f − 1`, the bound from counting roots of `∂₁f(·, x′)`.
    pub root_bound: usize,
}

/// Maximum of [`monotonicity_breakpoints`] over `slice_count` uniform slices
/// of `U`, on the interval spanned by `U` in `x₁`.
pub fn max_monotonicity_changes(
    f: &SparsePolynomial,
    region: &Region,
    slice_count: usize,
    seed: u64,
) -> Result<MonotonicityStats> {
    region.check_dim(f.num_vars())?;
    if slice_count == 0 {
        return Err(Error::InvalidArgument("slice_count must be at least 1".into()));
    }
    let interval = (region.lo()[0], region.hi()[0]);
    let tail = region.tail();
    let counts: Vec<Option<usize>> = (0..slice_count)
        .into_par_iter()
        .map(|k| {
            let rest = tail.as_ref().map_or_else(Vec::new, |t| t.sample(&mut substream(seed, k as u64)));
            match monotonicity_breakpoints(f, &rest, interval) {
                Ok(b) => Ok(Some(b.len())),
                Err(Error::IdenticallySingularSlice) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(MonotonicityStats {
        max_changes: counts.iter().flatten().copied().max().unwrap_or(0),
        slices: slice_count,
        degenerate_slices: counts.iter().filter(|c| c.is_none()).count(),
        root_bound: (f.degree_in(0) as usize).saturating_sub(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> SparsePolynomial {
        SparsePolynomial::parse(s).unwrap()
    }

    #[test]
    fn breakpoint_examples() {
        let b = monotonicity_breakpoints(&p("x1^2 + x2^2"), &[0.5], (-1.0, 1.0)).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].abs() < 1e-10);

        let b = monotonicity_breakpoints(&p("x1^3 - x1"), &[], (-2.0, 2.0)).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_eq!(b.len(), 2);
        assert!((b[0] + r).abs() < 1e-9 && (b[1] - r).abs() < 1e-9);

        assert!(monotonicity_breakpoints(&p("x1*x2"), &[0.3], (-1.0, 1.0)).unwrap().is_empty());
    }

    #[test]
    fn zero_slice() {
        assert_eq!(
            monotonicity_breakpoints(&p("x1*x2"), &[0.0], (-1.0, 1.0)).unwrap_err(),
            Error::IdenticallySingularSlice
        );
    }

    #[test]
    fn slice_statistics() {
        let u = Region::unit_cube(2);
        let s = max_monotonicity_changes(&p("x1^2 + x2^2"), &u, 100, 1).unwrap();
        assert_eq!((s.max_changes, s.root_bound, s.degenerate_slices), (1, 1, 0));
        let s = max_monotonicity_changes(&p("x1^3 - x1*x2"), &u, 100, 1).unwrap();
        assert_eq!(s.max_changes, 2);
        assert_eq!(max_monotonicity_changes(&p("x1*x2"), &u, 100, 1).unwrap().max_changes, 0);
    }
}
