use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::substream;
use crate::poly::{GradientField, SparsePolynomial};
use crate::region::Region;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_DESCENT_STEPS: usize = 200;
/// Extra Newton steps taken after the residual first drops below tolerance,
/// so that points near singular zeros are resolved well below the
/// `residual_tol^{1/k}` scale that the tolerance alone guarantees.
pub const MAX_POLISH_STEPS: usize = 60;
const MAX_HALVINGS: usize = 40;

/// Points of `U` where `|f| ≤ residual_tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSample {
    pub num_vars: usize,
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Number of Newton steps that produced each point.
    pub trace_lengths: Vec<usize>,
    pub residual_tol: f64,
    pub attempts: usize,
}

impl ZeroSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Image of the sample under the projection dropping the first coordinate.
    pub fn project_tail(&self) -> Result<ZeroSample> {
        if self.num_vars < 2 {
            return Err(Error::InvalidArgument("cannot project a one-dimensional sample".into()));
        }
        Ok(ZeroSample {
            num_vars: self.num_vars - 1,
            points: self.points.iter().map(|p| p[1..].to_vec()).collect(),
            ..self.clone()
        })
    }

    /// One row per point: coordinates, residual and descent trace length.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.num_vars).map(|i| format!("x{i}")).collect();
        header.push("residual".into());
        header.push("steps".into());
        w.write_record(&header)?;
        for ((p, r), s) in self.points.iter().zip(&self.residuals).zip(&self.trace_lengths) {
            let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            row.push(r.to_string());
            row.push(s.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `Z_f ∩ U` by damped Newton descent from uniform random starts.
///
/// Steps are backtracking Newton corrections (see `newton_step`). A start
/// is accepted when it ends in `U` with `|f| ≤ residual_tol`. Starts are
/// drawn in rounds until `count` points are accepted or `20·count` starts
/// have been tried.
pub fn sample_zero_set(
    f: &SparsePolynomial,
    region: &Region,
    count: usize,
    residual_tol: f64,
    seed: u64,
) -> Result<ZeroSample> {
    region.check_dim(f.num_vars())?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    if !(residual_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("residual_tol must be positive, got {residual_tol}")));
    }
    let field = GradientField::new(f);
    let max_attempts = 20 * count;
    let mut accepted: Vec<(Vec<f64>, f64, usize)> = Vec::with_capacity(count);
    let mut attempts = 0;
    while accepted.len() < count && attempts < max_attempts {
        let round = (count - accepted.len()).max(64).min(max_attempts - attempts);
        let found: Vec<Option<(Vec<f64>, f64, usize)>> = (attempts..attempts + round)
            .into_par_iter()
            .map(|k| {
                let mut rng = substream(seed, k as u64);
                descend(&field, region, region.sample(&mut rng), residual_tol)
            })
            .collect();
        attempts += round;
        accepted.extend(found.into_iter().flatten());
    }
    accepted.truncate(count);
    if accepted.len() * 10 < count {
        return Err(Error::EmptyAfterBudget { accepted: accepted.len(), requested: count });
    }
    let mut sample = ZeroSample {
        num_vars: f.num_vars(),
        points: Vec::with_capacity(accepted.len()),
        residuals: Vec::with_capacity(accepted.len()),
        trace_lengths: Vec::with_capacity(accepted.len()),
        residual_tol,
        attempts,
    };
    for (p, r, s) in accepted {
        sample.points.push(p);
        sample.residuals.push(r);
        sample.trace_lengths.push(s);
    }
    Ok(sample)
}

/// Newton descent on `|f|`; returns the end point, its residual and the step count.
fn descend(field: &GradientField, region: &Region, mut x: Vec<f64>, tol: f64) -> Option<(Vec<f64>, f64, usize)> {
    let mut fx = field.value(&x).abs();
    let mut steps = 0;
    let mut polish = 0;
    while steps < MAX_DESCENT_STEPS + MAX_POLISH_STEPS {
        if fx <= tol {
            if polish == MAX_POLISH_STEPS || fx == 0.0 {
                break;
            }
            polish += 1;
        } else if steps >= MAX_DESCENT_STEPS {
            break;
        }
        match newton_step(field, &x, fx) {
            Some((y, fy)) => {
                x = y;
                fx = fy;
                steps += 1;
            }
            None => break,
        }
    }
    (fx <= tol && region.contains(&x)).then_some((x, fx, steps))
}

/// One backtracking Newton step.
///
/// Candidates are the minimum-norm correction `f ∇f / |∇f|²` and the
/// one-coordinate corrections `f / ∂_i f`. The shortest candidate that at
/// least halves `|f|` is taken, otherwise the one with the smallest `|f|`.
/// Coordinate steps keep descent from zigzagging in the flat directions of
/// anisotropic zeros such as that of `x1^2 + x2^4`.
pub(crate) fn newton_step(field: &GradientField, x: &[f64], fx_abs: f64) -> Option<(Vec<f64>, f64)> {
    let n = x.len();
    let mut g = vec![0.0; n];
    field.grad_into(x, &mut g);
    let gn2: f64 = g.iter().map(|v| v * v).sum();
    if !(gn2 > 0.0) || !gn2.is_finite() {
        return None;
    }
    let fx = field.value(x);
    let mut directions = vec![g.iter().map(|gi| fx / gn2 * gi).collect::<Vec<f64>>()];
    for i in 0..n {
        if g[i] != 0.0 && n > 1 {
            let mut d = vec![0.0; n];
            d[i] = fx / g[i];
            directions.push(d);
        }
    }
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for d in directions {
        let Some((y, fy, len)) = backtrack(field, x, &d, fx_abs) else { continue };
        let better = match &best {
            None => true,
            Some((_, bf, blen)) => {
                let (halves, best_halves) = (fy <= fx_abs / 2.0, *bf <= fx_abs / 2.0);
                match (halves, best_halves) {
                    (true, true) => len < *blen,
                    (true, false) => true,
                    (false, true) => false,
                    (false, false) => fy < *bf,
                }
            }
        };
        if better {
            best = Some((y, fy, len));
        }
    }
    best.map(|(y, fy, _)| (y, fy))
}

fn backtrack(field: &GradientField, x: &[f64], d: &[f64], fx_abs: f64) -> Option<(Vec<f64>, f64, f64)> {
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return None;
    }
    let mut t = 1.0;
    for _ in 0..MAX_HALVINGS {
        let y: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi - t * di).collect();
        let fy = field.value(&y).abs();
        if fy < fx_abs {
            return Some((y, fy, t * norm));
        }
        t *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> SparsePolynomial {
        SparsePolynomial::parse(s).unwrap()
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn isolated_zero() {
        let f = p("x1^2 + x2^2");
        let s = sample_zero_set(&f, &Region::unit_cube(2), 500, DEFAULT_RESIDUAL_TOL, 1).unwrap();
        assert_eq!(s.len(), 500);
        for (x, r) in s.points.iter().zip(&s.residuals) {
            assert!(norm(x) < 1e-5);
            assert!(*r <= DEFAULT_RESIDUAL_TOL);
            assert_eq!(f.value(x).abs(), *r);
        }
    }

    #[test]
    fn coordinate_axes() {
        let s = sample_zero_set(&p("x1*x2"), &Region::unit_cube(2), 500, DEFAULT_RESIDUAL_TOL, 2).unwrap();
        assert!(s.points.iter().all(|x| x[0].abs().min(x[1].abs()) < 1e-5));
    }

    #[test]
    fn shifted_circle() {
        let u = Region::cube(2, 2.0).unwrap();
        let s = sample_zero_set(&p("x1^2 + x2^2 - 1"), &u, 500, DEFAULT_RESIDUAL_TOL, 3).unwrap();
        assert!(s.points.iter().all(|x| (norm(x) - 1.0).abs() < 1e-5));
    }

    #[test]
    fn anisotropic_zero() {
        let f = p("x1^2 + x2^4");
        let s = sample_zero_set(&f, &Region::unit_cube(2), 500, DEFAULT_RESIDUAL_TOL, 6).unwrap();
        assert_eq!(s.len(), 500);
        assert!(s.points.iter().all(|x| x[0].abs() < 1e-5 && x[1].abs() < 1e-2));
    }

    #[test]
    fn no_zero_in_region() {
        let err = sample_zero_set(&p("x1^2 + 1"), &Region::unit_cube(1), 50, DEFAULT_RESIDUAL_TOL, 4).unwrap_err();
        assert_eq!(err, Error::EmptyAfterBudget { accepted: 0, requested: 50 });
    }

    #[test]
    fn deterministic() {
        let f = p("x1^3 - x1*x2 + x2^2");
        let a = sample_zero_set(&f, &Region::unit_cube(2), 300, DEFAULT_RESIDUAL_TOL, 9).unwrap();
        let b = sample_zero_set(&f, &Region::unit_cube(2), 300, DEFAULT_RESIDUAL_TOL, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_export() {
        let s = sample_zero_set(&p("x1"), &Region::unit_cube(1), 3, DEFAULT_RESIDUAL_TOL, 5).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,residual,steps\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
