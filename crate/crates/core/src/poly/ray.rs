use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};

use super::SparsePolynomial;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Coefficients below this fraction of the largest coefficient of `f`
/// are treated as rounding residue when extracting a vanishing order.
pub const ZERO_COEFF_RTOL: f64 = 1e-14;

const UNIT_TOL: f64 = 1e-12;

/// `φ(ρ) = f(ρω)` for a fixed unit direction `ω`, as a polynomial in `ρ`.
#[derive(Debug, Clone)]
pub struct UnivariateRestriction {
    /// Ascending coefficients of `φ`.
    pub coeffs: Vec<f64>,
    pub direction: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    scale: f64,
}

/// Order of vanishing of `φ` at `ρ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum VanishingOrder {
    Finite(u32),
    IdenticallyZero,
}

impl UnivariateRestriction {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// `φ(ρ)` by Horner's rule.
    pub fn eval(&self, rho: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * rho + c)
    }

    /// `φ'(ρ)`.
    pub fn eval_derivative(&self, rho: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * rho + k as f64 * c)
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Smallest `N` with a nonzero coefficient of `ρ^N`.
    ///
    /// Exact coefficients are tested against zero exactly; float
    /// coefficients against [`ZERO_COEFF_RTOL`] times the largest
    /// coefficient magnitude of the source polynomial.
    pub fn vanishing_order(&self) -> VanishingOrder {
        let first = match &self.exact {
            Some(ex) => ex.iter().position(|c| !c.is_zero()),
            None => {
                let thresh = ZERO_COEFF_RTOL * self.scale;
                self.coeffs.iter().position(|c| c.abs() > thresh)
            }
        };
        match first {
            Some(n) => VanishingOrder::Finite(n as u32),
            None => VanishingOrder::IdenticallyZero,
        }
    }

    /// Restriction given directly by its coefficients (useful for tests
    /// and for one-variable inputs).
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        Self { coeffs, direction: vec![1.0], exact: None, scale }
    }

    pub fn from_exact_coeffs(coeffs: Vec<BigRational>) -> Self {
        let f: Vec<f64> = coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        let mut r = Self::from_coeffs(f);
        r.exact = Some(coeffs);
        r
    }
}

impl SparsePolynomial {
    /// Restricts `f` to the ray `ρ ↦ ρω`.
    ///
    /// The coefficient of `ρ^d` is `Σ_{|a| = d} c_a ω^a`.
    pub fn restrict_to_ray(&self, omega: &[f64]) -> Result<UnivariateRestriction> {
        if omega.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: omega.len() });
        }
        let norm = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL || norm.is_nan() {
            return Err(Error::BadDirection { norm });
        }
        let mut acc = vec![CompensatedSum::new(); self.total_degree() as usize + 1];
        for t in &self.terms {
            acc[t.degree() as usize].add(t.monomial(omega));
        }
        let coeffs = trim(acc.into_iter().map(|c| c.value()).collect());
        Ok(UnivariateRestriction {
            coeffs,
            direction: omega.to_vec(),
            exact: None,
            scale: self.max_abs_coeff(),
        })
    }

    /// Exact restriction along a rational unit direction. Requires a
    /// polynomial with exact coefficients and `Σ ω_i² = 1` exactly.
    pub fn restrict_to_ray_exact(&self, omega: &[BigRational]) -> Result<UnivariateRestriction> {
        if omega.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: omega.len() });
        }
        let norm2: BigRational = omega.iter().map(|w| w * w).fold(BigRational::zero(), |a, b| a + b);
        if norm2 != BigRational::one() {
            return Err(Error::BadDirection { norm: norm2.to_f64().unwrap_or(f64::NAN).sqrt() });
        }
        let exact = self
            .exact_coeffs()
            .ok_or_else(|| Error::InvalidArgument("polynomial has no exact coefficients".into()))?;
        let mut acc = vec![BigRational::zero(); self.total_degree() as usize + 1];
        for (t, c) in self.terms.iter().zip(exact) {
            let mut m = c.clone();
            for (w, &a) in omega.iter().zip(&t.exponents) {
                if a != 0 {
                    m *= Pow::pow(w, a);
                }
            }
            acc[t.degree() as usize] += m;
        }
        while acc.len() > 1 && acc.last().is_some_and(|c| c.is_zero()) {
            acc.pop();
        }
        let mut r = UnivariateRestriction::from_exact_coeffs(acc);
        r.direction = omega.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect();
        r.scale = self.max_abs_coeff();
        Ok(r)
    }
}

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn p(s: &str) -> SparsePolynomial {
        SparsePolynomial::parse(s).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn ray_examples() {
        let r = p("x1^2 + x2^2").restrict_to_ray(&[1.0, 0.0]).unwrap();
        assert_eq!(r.coeffs, vec![0.0, 0.0, 1.0]);
        let r = p("x1*x2").restrict_to_ray(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_eq!(r.coeffs.len(), 3);
        assert!((r.coeffs[2] - 0.5).abs() < 1e-15);
        let r = p("x1^2 + x2^4").restrict_to_ray(&[0.0, 1.0]).unwrap();
        assert_eq!(r.coeffs, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn ray_rejects_bad_directions() {
        let f = p("x1*x2");
        assert!(matches!(f.restrict_to_ray(&[0.0, 0.0]), Err(Error::BadDirection { .. })));
        assert!(matches!(f.restrict_to_ray(&[1.0, 1.0]), Err(Error::BadDirection { .. })));
        assert!(matches!(f.restrict_to_ray(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn vanishing_order_examples() {
        assert_eq!(UnivariateRestriction::from_coeffs(vec![0.0, 0.0, 1.0]).vanishing_order(), VanishingOrder::Finite(2));
        let phi = UnivariateRestriction::from_coeffs(vec![0.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 1.0]);
        assert_eq!(phi.vanishing_order(), VanishingOrder::Finite(5));
        assert_eq!(UnivariateRestriction::from_coeffs(vec![0.0]).vanishing_order(), VanishingOrder::IdenticallyZero);
    }

    #[test]
    fn float_cancellation_is_identically_zero() {
        // x1^2 - x2^2 vanishes on the diagonal; the float restriction may
        // leave a residue of order 1e-17.
        let r = p("x1^2 - x2^2").restrict_to_ray(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_eq!(r.vanishing_order(), VanishingOrder::IdenticallyZero);
    }

    #[test]
    fn exact_restriction_along_pythagorean_direction() {
        let f = p("16*x1^2 - 9*x2^2 + x1^3");
        let r = f.restrict_to_ray_exact(&[q(3, 5), q(4, 5)]).unwrap();
        assert!(r.is_exact());
        // 16*9/25 - 9*16/25 = 0, so the order is 3.
        assert_eq!(r.vanishing_order(), VanishingOrder::Finite(3));
        assert!(f.restrict_to_ray_exact(&[q(1, 2), q(1, 2)]).is_err());
    }

    #[test]
    fn restriction_at_zero_is_constant_term() {
        let f = p("2 + x1*x2 - x2^3");
        let r = f.restrict_to_ray(&[0.6, 0.8]).unwrap();
        assert_eq!(r.eval(0.0), 2.0);
        assert!(r.degree() as u32 <= f.total_degree());
        let h = 1e-6;
        let fd = (r.eval(0.3 + h) - r.eval(0.3 - h)) / (2.0 * h);
        assert!((fd - r.eval_derivative(0.3)).abs() < 1e-8);
    }
}
