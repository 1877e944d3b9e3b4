use logsing::cutoff::{build_partition, DyadicCube};
use logsing::quadrature::{integrate_grad_log, shell_decompose, Budget, Integrand, VerdictKind};
use logsing::{Region, SparsePolynomial};
use proptest::prelude::*;

fn polynomial(num_vars: usize) -> impl Strategy<Value = SparsePolynomial> {
    let term = (-8i32..=8, prop::collection::vec(0u32..=3, num_vars));
    prop::collection::vec(term, 1..6).prop_filter_map("zero polynomial", move |terms| {
        let f = SparsePolynomial::new(num_vars, terms.into_iter().map(|(c, e)| (c as f64 / 4.0, e))).ok()?;
        (!f.is_zero()).then_some(f)
    })
}

fn point(num_vars: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, num_vars)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_central_differences(f in polynomial(3), x in point(3)) {
        let grad = f.gradient();
        let h = 1e-6;
        for (i, g) in grad.iter().enumerate() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * h);
            let an = g.value(&x);
            prop_assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "∂{}: {} vs {}", i + 1, fd, an);
        }
    }

    #[test]
    fn ray_restriction_agrees_with_evaluation(f in polynomial(3), w in point(3), rho in -2.0f64..2.0) {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let omega: Vec<f64> = w.iter().map(|v| v / norm).collect();
        let phi = f.restrict_to_ray(&omega).unwrap();
        let x: Vec<f64> = omega.iter().map(|o| rho * o).collect();
        let direct = f.value(&x);
        prop_assert!((phi.eval(rho) - direct).abs() <= 1e-12 * (1.0 + f.max_abs_coeff() * 64.0));
    }

    #[test]
    fn display_round_trips(f in polynomial(3)) {
        let g = SparsePolynomial::parse_with_vars(&f.to_string(), 3).unwrap();
        prop_assert_eq!(g, f);
    }

    #[test]
    fn single_level_covers_sum_to_one(
        cells in prop::collection::btree_set((-6i64..6, -6i64..6), 1..20),
        level in 1u32..6,
        u in point(2),
        pick in any::<prop::sample::Index>(),
    ) {
        let cubes: Vec<DyadicCube> = cells.iter().map(|&(a, b)| DyadicCube::new(level, vec![a, b])).collect();
        let q = &cubes[pick.index(cubes.len())];
        let s = q.side();
        let x: Vec<f64> = q.center().iter().zip(&u).map(|(c, v)| c + v * s / 2.0).collect();
        let p = build_partition(cubes.clone()).unwrap();
        prop_assert!((p.phi_sum(&x).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(p.chi(&x).unwrap(), 1.0);
        let chi = p.chi(&[x[0] + 10.0 * s, x[1]]).unwrap();
        prop_assert!((0.0..=1.0).contains(&chi));
    }
}

fn decay_slope(f: &SparsePolynomial, budget: &Budget, seed: u64) -> f64 {
    let v = integrate_grad_log(f, 1.0, &Region::unit_cube(f.num_vars()), budget, seed).unwrap();
    v.fit.unwrap().slope
}

#[test]
fn decay_slopes_are_invariant_under_scaling() {
    let budget = Budget::quick();
    for text in ["x1^2 + x2^2", "x1^2 + x2^4", "x1*x2"] {
        let f = SparsePolynomial::parse(text).unwrap();
        let a = decay_slope(&f, &budget, 3);
        let b = decay_slope(&f.scaled(10.0), &budget, 3);
        assert!((a - b).abs() <= 0.02, "{text}: {a} vs {b}");
    }
}

#[test]
fn verdicts_are_deterministic() {
    let f = SparsePolynomial::parse("x1^3 - x1*x2 + x2^2").unwrap();
    let u = Region::unit_cube(2);
    let a = integrate_grad_log(&f, 1.2, &u, &Budget::quick(), 9).unwrap();
    let b = integrate_grad_log(&f, 1.2, &u, &Budget::quick(), 9).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| integrate_grad_log(&f, 1.2, &u, &Budget::quick(), 9).unwrap());
    assert_eq!(a, c);
}

#[test]
fn shells_add_up_to_the_region() {
    let budget = Budget::quick();
    for (text, n) in [("x1^2 + x2^2", 2), ("x1*x2 - x3^2", 3)] {
        let f = SparsePolynomial::parse_with_vars(text, n).unwrap();
        let u = Region::unit_cube(n);
        let profile = shell_decompose(&f, &u, budget.j_max, budget.samples_per_shell, 4).unwrap();
        let se = profile.shells.iter().map(|s| s.measure_se.powi(2)).sum::<f64>().sqrt();
        let gap = (profile.total_measure() - u.volume()).abs();
        assert!(gap <= 4.0 * se + 1e-3 * u.volume(), "{text}: {} vs {}", profile.total_measure(), u.volume());
        for w in profile.shells.windows(2) {
            assert!(w[0].level < w[1].level);
        }
    }
}

#[test]
fn closed_form_integrals() {
    let budget = Budget::default();
    let cases = [
        // ∫ |log|x1 x2|| and ∫ log² |x1 x2| over [-1, 1]²: 4·2 and 4·(2 + 2 + 2).
        ("x1*x2", Integrand::AbsLog { p: 1.0 }, 8.0),
        ("x1*x2", Integrand::AbsLog { p: 2.0 }, 24.0),
        // ∫ 2/|x| over [-1, 1]² = 16 ln(1 + √2).
        ("x1^2 + x2^2", Integrand::GradLog { p: 1.0 }, 16.0 * (1.0 + 2f64.sqrt()).ln()),
    ];
    for (text, integrand, exact) in cases {
        let f = SparsePolynomial::parse(text).unwrap();
        let v = logsing::quadrature::integrate(&f, &Region::unit_cube(2), integrand, &budget, 5).unwrap();
        let VerdictKind::Convergent { value, error_bar } = v.kind else { panic!("{text}: {:?}", v.kind) };
        assert!((value - exact).abs() <= 0.005 * exact, "{text}: {value} ± {error_bar} vs {exact}");
    }
}
