use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{SparsePolynomial, UnivariateRestriction, VanishingOrder};

const DYADIC_SHELLS: usize = 48;
const GL_NODES: usize = 24;
const SCAN_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RadialVerdict {
    Convergent,
    Divergent,
}

/// Behaviour of `∫_0^ε |φ'/φ| dρ` for `φ(ρ) = f(ρω)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialCheck {
    pub verdict: RadialVerdict,
    pub order: VanishingOrder,
    /// `∫` over the dyadic pieces `(ε 2^{-j-1}, ε 2^{-j}]`, `j = 0, 1, ...`.
    pub shells: Vec<f64>,
    /// A zero of `φ` inside `(0, ε]`, if one was found.
    pub interior_zero: Option<f64>,
    /// Value of the integral when it converges.
    pub value: Option<f64>,
}

/// Decides whether `|φ'/φ|` is integrable on `(0, ε]` along the ray `ω`.
///
/// When `φ` vanishes to order `N ≥ 1` at the origin, `φ'/φ ≈ N/ρ` and the
/// dyadic pieces tend to the constant `N ln 2`, so the integral diverges.
pub fn radial_blowup_check(f: &SparsePolynomial, omega: &[f64], eps: f64) -> Result<RadialCheck> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
    }
    let phi = f.restrict_to_ray(omega)?;
    let order = phi.vanishing_order();
    let n = match order {
        VanishingOrder::IdenticallyZero => return Err(Error::DegenerateRay),
        VanishingOrder::Finite(n) => n as usize,
    };
    let gl = GaussLegendre::new(NonZeroUsize::new(GL_NODES).expect("nonzero"));
    let integrand = |rho: f64| (phi.eval_derivative(rho) / phi.eval(rho)).abs();
    let shells: Vec<f64> = (0..DYADIC_SHELLS)
        .map(|j| {
            let b = eps * (-(j as f64)).exp2();
            gl.integrate(b / 2.0, b, integrand)
        })
        .collect();
    let interior_zero = interior_zero(&phi, n, eps);
    if interior_zero.is_some() {
        return Ok(RadialCheck { verdict: RadialVerdict::Divergent, order, shells, interior_zero, value: None });
    }
    let deep = &shells[DYADIC_SHELLS - 12..];
    let lo = deep.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = deep.iter().copied().fold(0.0, f64::max);
    let verdict = if n >= 1 && lo > 0.1 && hi <= 1.5 * lo {
        RadialVerdict::Divergent
    } else {
        RadialVerdict::Convergent
    };
    let value = (verdict == RadialVerdict::Convergent).then(|| shells.iter().sum());
    Ok(RadialCheck { verdict, order, shells, interior_zero, value })
}

/// Sign change of `φ(ρ)/ρ^n` on `(0, ε]`, refined by bisection.
fn interior_zero(phi: &UnivariateRestriction, n: usize, eps: f64) -> Option<f64> {
    let reduced = UnivariateRestriction::from_coeffs(phi.coeffs[n..].to_vec());
    let h = eps / SCAN_POINTS as f64;
    let mut prev = reduced.eval(0.0);
    for k in 1..=SCAN_POINTS {
        let rho = h * k as f64;
        let cur = reduced.eval(rho);
        if cur == 0.0 {
            return Some(rho);
        }
        if prev.signum() != cur.signum() {
            let (mut a, mut b) = (rho - h, rho);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if reduced.eval(m).signum() == reduced.eval(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev = cur;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn p(s: &str) -> SparsePolynomial {
        SparsePolynomial::parse(s).unwrap()
    }

    #[test]
    fn examples() {
        let c = radial_blowup_check(&p("x1^2 + x2^2"), &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(c.verdict, RadialVerdict::Divergent);
        // φ = ρ², so every dyadic piece equals 2 ln 2.
        assert!(c.shells.iter().all(|s| (s - 2.0 * LN_2).abs() < 1e-10));
        let c = radial_blowup_check(&p("x1*x2"), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], 0.5).unwrap();
        assert_eq!(c.verdict, RadialVerdict::Divergent);
        let c = radial_blowup_check(&p("x1 + 1").with_num_vars(2).unwrap(), &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(c.verdict, RadialVerdict::Convergent);
        // ∫_0^{1/2} 1/(1+ρ) dρ = ln(3/2).
        assert!((c.value.unwrap() - 1.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn degenerate_ray_is_an_error() {
        assert_eq!(radial_blowup_check(&p("x1*x2"), &[1.0, 0.0], 0.5).unwrap_err(), Error::DegenerateRay);
    }

    #[test]
    fn interior_zero_diverges() {
        // φ(ρ) = ρ - 1/4 has a simple zero inside (0, 1/2].
        let c = radial_blowup_check(&p("x1 - 0.25"), &[1.0], 0.5).unwrap();
        assert_eq!(c.verdict, RadialVerdict::Divergent);
        assert!((c.interior_zero.unwrap() - 0.25).abs() < 1e-12);
    }
}
