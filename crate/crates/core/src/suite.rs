//! The fixed list of reference checks run by the `suite` command.
//!
//! Each check is a known fact about a small polynomial (a verdict, an
//! exponent, a dimension) evaluated with the library's estimators and
//! compared to its closed-form value under a fixed tolerance.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::cutoff::{
    build_partition, verify_derivative_bound, verify_flest, verify_identically_one_near, verify_partition,
    whitney_fixture,
};
use crate::error::{Error, Result};
use crate::exponents::{exponent_inequality_report, ExponentReport};
use crate::numeric::{random_unit_vector, substream2};
use crate::poly::SparsePolynomial;
use crate::quadrature::{
    critical_exponent, integrate_abs_log, integrate_grad_log, radial_blowup_check, Budget, RadialVerdict,
    VerdictKind,
};
use crate::region::Region;
use crate::zero_geometry::{
    box_dimension, max_monotonicity_changes, neighborhood_volume_exponent, sample_zero_set, DEFAULT_LEVELS,
    DEFAULT_RESIDUAL_TOL,
};

/// Points sampled on each zero set for the dimension checks.
pub const DIMENSION_SAMPLE: usize = 20_000;
/// Probes per level for the tube-volume fit.
pub const TUBE_PROBES: usize = 20_000;
pub const RAYS: usize = 20;
pub const SLICES: usize = 200;
pub const CRITICAL_TOL: f64 = 0.05;

/// Outcome of one reference check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCheck {
    /// Group of related checks this one belongs to, numbered from 1.
    pub group: u32,
    pub name: String,
    pub polynomial: Option<String>,
    pub passed: bool,
    pub payload: Value,
    pub error_bars: Value,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

struct Runner {
    checks: Vec<SuiteCheck>,
}

type CheckResult = Result<(bool, Value, Value)>;

impl Runner {
    fn run(&mut self, group: u32, name: &str, poly: Option<&str>, body: impl FnOnce() -> CheckResult) {
        let start = Instant::now();
        let (passed, payload, error_bars) = match body() {
            Ok(r) => r,
            Err(e) => (false, json!({ "error": e.to_string() }), Value::Null),
        };
        self.checks.push(SuiteCheck {
            group,
            name: name.to_string(),
            polynomial: poly.map(str::to_string),
            passed,
            payload,
            error_bars,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
}

fn poly(text: &str, n: usize) -> Result<SparsePolynomial> {
    SparsePolynomial::parse_with_vars(text, n)
}

fn verdict_check(f: &str, n: usize, p: f64, log_lp: bool, expect_convergent: bool, budget: &Budget, seed: u64) -> CheckResult {
    let g = poly(f, n)?;
    let u = Region::unit_cube(n);
    let v = if log_lp { integrate_abs_log(&g, p, &u, budget, seed)? } else { integrate_grad_log(&g, p, &u, budget, seed)? };
    let passed = if expect_convergent { v.kind.is_convergent() } else { v.kind.is_divergent() };
    let bars = match &v.kind {
        VerdictKind::Convergent { error_bar, .. } => json!({ "value": error_bar }),
        _ => json!({ "decay_slope": v.fit.as_ref().map(|f| f.slope_stderr) }),
    };
    Ok((
        passed,
        json!({
            "p": p,
            "expected": if expect_convergent { "CONVERGENT" } else { "DIVERGENT" },
            "verdict": v.kind,
            "decay_slope": v.fit.as_ref().map(|f| f.slope),
            "partial_sum": v.partial_sum,
        }),
        bars,
    ))
}

fn critical_check(f: &str, n: usize, bracket: (f64, f64), oracle: f64, tol: f64, budget: &Budget, seed: u64) -> CheckResult {
    let g = poly(f, n)?;
    let c = critical_exponent(&g, &Region::unit_cube(n), bracket, CRITICAL_TOL, budget, seed)?;
    Ok((
        (c.estimate - oracle).abs() <= tol,
        json!({ "estimate": c.estimate, "bracket": c.bracket, "oracle": oracle, "tolerance": tol, "widened": c.widened }),
        json!({ "bracket_width": c.bracket_width }),
    ))
}

/// Runs every reference check. Failures of individual checks, including
/// errors, are recorded in the returned rows rather than propagated.
pub fn run_suite(budget: &Budget, seed: u64) -> Vec<SuiteCheck> {
    let mut r = Runner { checks: Vec::new() };
    let b = budget;

    r.run(1, "grad_log_converges_below_one", Some("x1*x2"), || verdict_check("x1*x2", 2, 0.9, false, true, b, seed));
    r.run(1, "grad_log_diverges_above_one", Some("x1*x2"), || verdict_check("x1*x2", 2, 1.1, false, false, b, seed));
    r.run(1, "critical_exponent", Some("x1*x2"), || critical_check("x1*x2", 2, (0.5, 1.5), 1.0, 0.1, b, seed));

    for (f, n, bracket, oracle, tol) in [
        ("x1^2 + x2^2", 2, (1.0, 3.0), 2.0, 0.1),
        ("x1^2 + x2^4", 2, (1.0, 2.5), 1.5, 0.1),
        ("x1^2 + x2^2 + x3^2", 3, (2.0, 4.0), 3.0, 0.15),
    ] {
        r.run(2, "critical_exponent", Some(f), || critical_check(f, n, bracket, oracle, tol, b, seed));
    }

    let sphere = "x1^2 + x2^2 + x3^2";
    r.run(3, "grad_log_diverges_at_codimension", Some(sphere), || verdict_check(sphere, 3, 3.0, false, false, b, seed));
    r.run(3, "grad_log_converges_below_codimension", Some(sphere), || {
        verdict_check(sphere, 3, 2.7, false, true, b, seed)
    });

    for (f, n) in [
        ("x1^2 + x2^2", 2),
        ("x1^2 + x2^4", 2),
        ("x1^2 + x2^2 + x3^2", 3),
        ("x1^4 + x2^4 + x3^4 + 2*x1^2*x2^2 + 2*x1^2*x3^2 + 2*x2^2*x3^2", 3),
    ] {
        r.run(4, "grad_log_integrable", Some(f), || verdict_check(f, n, 1.0, false, true, b, seed));
    }

    for f in ["x1*x2", "x1^2 + x2^4"] {
        for p in [1.0, 2.0, 4.0] {
            r.run(5, &format!("log_lp_integrable_p{p}"), Some(f), || verdict_check(f, 2, p, true, true, b, seed));
        }
    }
    r.run(5, "log_l1_closed_form", Some("x1"), || {
        let v = integrate_abs_log(&poly("x1", 1)?, 1.0, &Region::unit_cube(1), b, seed)?;
        let (value, bar) = match v.kind {
            VerdictKind::Convergent { value, error_bar } => (value, error_bar),
            _ => return Ok((false, json!({ "verdict": v.kind }), Value::Null)),
        };
        Ok(((value - 2.0).abs() <= 0.04, json!({ "value": value, "oracle": 2.0, "relative_tolerance": 0.02 }), json!({ "value": bar })))
    });

    for f in ["x1^2 + x2^2", "x1*x2"] {
        r.run(6, "radial_blowup", Some(f), || {
            let g = poly(f, 2)?;
            let (mut divergent, mut degenerate) = (0, 0);
            let mut orders = Vec::new();
            for k in 0..RAYS {
                let omega = random_unit_vector(&mut substream2(seed, 6, k as u64), 2);
                match radial_blowup_check(&g, &omega, 1.0) {
                    Ok(c) => {
                        divergent += usize::from(c.verdict == RadialVerdict::Divergent);
                        orders.push(c.order);
                    }
                    Err(Error::DegenerateRay) => degenerate += 1,
                    Err(e) => return Err(e),
                }
            }
            let checked = RAYS - degenerate;
            Ok((
                checked > 0 && divergent == checked,
                json!({ "rays": RAYS, "degenerate": degenerate, "divergent": divergent, "vanishing_orders": orders }),
                Value::Null,
            ))
        });
    }

    // Each report feeds several checks; its cost is booked on the first.
    let mut reports: HashMap<&str, (Result<ExponentReport>, f64)> = HashMap::new();
    for (f, n) in [("x1^2 + x2^2", 2), ("x1^2 + x2^4", 2), ("x1^2 + x2^2 + x3^2", 3)] {
        let start = Instant::now();
        let rep = poly(f, n).and_then(|g| exponent_inequality_report(&g, &Region::unit_cube(n), b, seed));
        reports.insert(f, (rep, start.elapsed().as_secs_f64() * 1e3));
    }
    let report = |f: &str| reports[f].0.clone();
    for (f, oracle) in [("x1^2 + x2^2", 0.5), ("x1^2 + x2^4", 0.5), ("x1^2 + x2^2 + x3^2", 1.0)] {
        r.run(7, "exponent_inequality_margin", Some(f), || {
            let rep = report(f)?;
            let m = rep.inequality_margin;
            Ok((
                m >= -0.1 && (m - oracle).abs() <= 0.15,
                json!({
                    "margin": m,
                    "oracle": oracle,
                    "alpha0": rep.alpha0.value(),
                    "beta0": rep.beta0.value(),
                    "codimension": rep.codimension,
                    "warnings": rep.warnings,
                }),
                json!({ "margin": rep.margin_stderr }),
            ))
        });
        if let Some(last) = r.checks.last_mut() {
            last.wall_time_ms += reports[f].1;
        }
    }
    r.run(8, "lojasiewicz_fits", Some("x1^2 + x2^2"), || {
        let rep = report("x1^2 + x2^2")?;
        let (a, bt) = (&rep.alpha_dist.fit, &rep.beta0.fit);
        Ok((
            (a.slope - 2.0).abs() <= 0.1 && (bt.slope - 0.5).abs() <= 0.05 && a.r_squared >= 0.95 && bt.r_squared >= 0.95,
            json!({ "alpha": a.slope, "alpha_r2": a.r_squared, "beta0": bt.slope, "beta0_r2": bt.r_squared }),
            json!({ "alpha": a.slope_stderr, "beta0": bt.slope_stderr }),
        ))
    });
    r.run(8, "lojasiewicz_gradient_fit", Some("x1^2 + x2^4"), || {
        let rep = report("x1^2 + x2^4")?;
        let bt = &rep.beta0.fit;
        Ok((
            (bt.slope - 0.75).abs() <= 0.05 && bt.r_squared >= 0.95,
            json!({ "beta0": bt.slope, "beta0_r2": bt.r_squared }),
            json!({ "beta0": bt.slope_stderr }),
        ))
    });

    for (f, n, oracle) in [("x1^2 + x2^2", 2, 0.0), ("x1*x2", 2, 1.0), ("x1^2 + x2^2", 3, 1.0)] {
        r.run(9, &format!("zero_set_dimension_R{n}"), Some(f), || {
            let g = poly(f, n)?;
            let u = Region::unit_cube(n);
            let z = sample_zero_set(&g, &u, DIMENSION_SAMPLE, DEFAULT_RESIDUAL_TOL, seed)?;
            let bx = box_dimension(&z, &DEFAULT_LEVELS)?;
            let tube = neighborhood_volume_exponent(&g, &u, &z, &DEFAULT_LEVELS, TUBE_PROBES, seed)?;
            let proj = box_dimension(&z.project_tail()?, &DEFAULT_LEVELS)?;
            let passed = (bx.dim_value - oracle).abs() <= 0.15
                && (tube.dim_value - oracle).abs() <= 0.15
                && proj.dim_value <= bx.dim_value + 0.2;
            Ok((
                passed,
                json!({
                    "oracle": oracle,
                    "box": bx.dim_value,
                    "tube": tube.dim_value,
                    "projection": proj.dim_value,
                }),
                json!({ "box": bx.fit.slope_stderr, "tube": tube.fit.slope_stderr }),
            ))
        });
    }

    for (f, expected, exact) in [("x1^2 + x2^2", 1, true), ("x1^3 - x1*x2", 2, false), ("x1*x2", 0, true)] {
        r.run(10, "monotonicity_changes", Some(f), || {
            let s = max_monotonicity_changes(&poly(f, 2)?, &Region::unit_cube(2), SLICES, seed)?;
            let ok = if exact { s.max_changes == expected } else { s.max_changes <= expected };
            Ok((ok && s.max_changes <= s.root_bound, serde_json::to_value(&s).expect("serializable"), Value::Null))
        });
    }

    r.run(11, "partition_identities", None, || {
        let p = build_partition(whitney_fixture(2, 2, 6)?)?;
        let c = verify_partition(&p, 10_000, seed)?;
        Ok((
            c.unity_residual <= 1e-12
                && c.support_violations == 0
                && c.telescoping_residual <= 1e-13
                && c.range_violations == 0,
            serde_json::to_value(&c).expect("serializable"),
            Value::Null,
        ))
    });
    r.run(11, "identically_one_near_k", None, || {
        let circle: Vec<Vec<f64>> = (0..400)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 400.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let point = verify_identically_one_near(&[vec![0.0, 0.0]], 0.25, 10_000, seed)?;
        let curve = verify_identically_one_near(&circle, 0.125, 10_000, seed)?;
        Ok((point == 0 && curve == 0, json!({ "point_failures": point, "circle_failures": curve }), Value::Null))
    });
    r.run(11, "derivative_bound_uniformity", None, || {
        let p = build_partition(whitney_fixture(2, 2, 6)?)?;
        let d1 = verify_derivative_bound(&p, &[1, 0], 4_000, seed)?;
        let d0 = verify_derivative_bound(&p, &[0, 0], 1_000, seed)?;
        Ok((
            d1.uniformity_ratio <= 3.0 && d0.max == 1.0,
            json!({ "per_level": d1.per_level, "ratio": d1.uniformity_ratio, "value_sup": d0.max }),
            Value::Null,
        ))
    });
    r.run(11, "cutoff_norm_scaling", None, || {
        let (l, pp) = (1.5, 1.2);
        let rep = verify_flest(&[vec![0.0, 0.0]], &[2, 3, 4, 5, 6, 7], l, pp, 0.0, 1, 20_000, seed)?;
        let oracle = 2.0 / pp - 1.0;
        Ok((
            (rep.direct.slope - oracle).abs() <= 0.2 && rep.direct.r_squared >= 0.9 && rep.consistent_with_bound(0.2),
            json!({
                "slope": rep.direct.slope,
                "r_squared": rep.direct.r_squared,
                "oracle": oracle,
                "bound_cover_slope": rep.bound.slope,
                "bound_slope": rep.bound_slope,
            }),
            json!({ "slope": rep.direct.slope_stderr, "bound_cover_slope": rep.bound.slope_stderr }),
        ))
    });

    r.checks
}
