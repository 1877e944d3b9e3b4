//! Sparse multivariate polynomials with real coefficients.
//!
//! A [`SparsePolynomial`] is a finite sum `Σ c_a x^a` over exponent vectors
//! `a`. Terms are kept in a fixed (lexicographic) order and evaluated with
//! compensated summation, so the value at a point does not depend on how
//! the polynomial was built.
//!
//! Coefficients are `f64`. Polynomials parsed from text, or built with
//! [`SparsePolynomial::from_rational_terms`], additionally carry their exact
//! rational coefficients; [`SparsePolynomial::restrict_to_ray_exact`] uses
//! them when an exact vanishing order is needed.

mod interval;
mod parse;
mod ray;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

pub use interval::Interval;
pub use ray::{UnivariateRestriction, VanishingOrder, ZERO_COEFF_RTOL};

/// Exponent vector of a monomial, one entry per variable.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub exponents: Exponents,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    #[inline]
    fn monomial(&self, x: &[f64]) -> f64 {
        let mut m = self.coeff;
        for (&xi, &a) in x.iter().zip(&self.exponents) {
            if a != 0 {
                m *= xi.powi(a as i32);
            }
        }
        m
    }
}

/// Multivariate polynomial stored as a sorted list of nonzero terms.
#[derive(Clone)]
pub struct SparsePolynomial {
    num_vars: usize,
    terms: Vec<Term>,
    exact: Option<Arc<Vec<BigRational>>>,
}

impl SparsePolynomial {
    /// Builds a polynomial from `(coefficient, exponents)` pairs. Duplicate
    /// exponent vectors are merged and zero coefficients dropped.
    pub fn new(num_vars: usize, terms: impl IntoIterator<Item = (f64, Exponents)>) -> Result<Self> {
        let mut map: BTreeMap<Exponents, CompensatedSum> = BTreeMap::new();
        for (c, e) in terms {
            if e.len() != num_vars {
                return Err(Error::DimensionMismatch { expected: num_vars, got: e.len() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient {c}")));
            }
            map.entry(e).or_default().add(c);
        }
        let terms = map
            .into_iter()
            .map(|(exponents, c)| Term { coeff: c.value(), exponents })
            .filter(|t| t.coeff != 0.0)
            .collect();
        Ok(Self { num_vars, terms, exact: None })
    }

    /// Builds a polynomial from exact rational coefficients. The `f64`
    /// coefficients are the nearest doubles; the rationals are retained.
    pub fn from_rational_terms(
        num_vars: usize,
        terms: impl IntoIterator<Item = (BigRational, Exponents)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Exponents, BigRational> = BTreeMap::new();
        for (c, e) in terms {
            if e.len() != num_vars {
                return Err(Error::DimensionMismatch { expected: num_vars, got: e.len() });
            }
            let slot = map.entry(e).or_insert_with(BigRational::zero);
            *slot += c;
        }
        map.retain(|_, c| !c.is_zero());
        let mut terms = Vec::with_capacity(map.len());
        let mut exact = Vec::with_capacity(map.len());
        for (exponents, c) in map {
            let coeff = c.to_f64().unwrap_or(f64::NAN);
            if !coeff.is_finite() {
                return Err(Error::InvalidArgument(format!("coefficient {c} overflows f64")));
            }
            terms.push(Term { coeff, exponents });
            exact.push(c);
        }
        Ok(Self { num_vars, terms, exact: Some(Arc::new(exact)) })
    }

    pub fn zero(num_vars: usize) -> Self {
        Self { num_vars, terms: Vec::new(), exact: Some(Arc::new(Vec::new())) }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        Self::new(num_vars, [(c, vec![0; num_vars])]).expect("constant term has the right arity")
    }

    /// Parses the text format `c * x1^a1 * ... * xn^an + ...`.
    ///
    /// The number of variables is the largest index that appears.
    pub fn parse(text: &str) -> Result<Self> {
        parse::parse(text, None)
    }

    /// Parses `text` as a polynomial in exactly `num_vars` variables.
    pub fn parse_with_vars(text: &str, num_vars: usize) -> Result<Self> {
        parse::parse(text, Some(num_vars))
    }

    /// `x1^(2 r1) + ... + xk^(2 rk)` in `num_vars >= k` variables.
    pub fn even_power_sum(powers: &[u32], num_vars: usize) -> Result<Self> {
        if powers.len() > num_vars {
            return Err(Error::InvalidArgument("more powers than variables".into()));
        }
        Self::new(
            num_vars,
            powers.iter().enumerate().map(|(i, &r)| {
                let mut e = vec![0; num_vars];
                e[i] = 2 * r;
                (1.0, e)
            }),
        )
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_exact_coefficients(&self) -> bool {
        self.exact.is_some()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// Degree in the single variable `var`.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.iter().map(|t| t.exponents[var]).max().unwrap_or(0)
    }

    /// Lowest total degree among the terms; `None` for the zero polynomial.
    pub fn order_at_origin(&self) -> Option<u32> {
        self.terms.iter().map(Term::degree).min()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max)
    }

    /// `f(0)`.
    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.exponents.iter().all(|&a| a == 0))
            .map_or(0.0, |t| t.coeff)
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.num_vars, self.terms.iter().map(|t| (t.coeff * c, t.exponents.clone())))
            .expect("scaling preserves arity")
    }

    /// Re-embeds the polynomial in `num_vars >= self.num_vars()` variables.
    pub fn with_num_vars(&self, num_vars: usize) -> Result<Self> {
        if num_vars < self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: num_vars });
        }
        let pad = |e: &Exponents| {
            let mut e = e.clone();
            e.resize(num_vars, 0);
            e
        };
        let mut out = Self::new(num_vars, self.terms.iter().map(|t| (t.coeff, pad(&t.exponents))))?;
        out.exact = self.exact.clone();
        Ok(out)
    }

    /// `f(x)`, or an error if `x` has the wrong length.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars, got: x.len() });
        }
        Ok(self.value(x))
    }

    /// `f(x)` without the length check. `x` must have `num_vars` entries.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.num_vars);
        let mut acc = CompensatedSum::new();
        for t in &self.terms {
            acc.add(t.monomial(x));
        }
        acc.value()
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Self {
        let terms = self.terms.iter().filter(|t| t.exponents[var] > 0).map(|t| {
            let mut e = t.exponents.clone();
            let a = e[var];
            e[var] -= 1;
            (t.coeff * a as f64, e)
        });
        let mut out = Self::new(self.num_vars, terms).expect("derivative preserves arity");
        if let Some(exact) = &self.exact {
            let ex: Vec<BigRational> = self
                .terms
                .iter()
                .zip(exact.iter())
                .filter(|(t, _)| t.exponents[var] > 0)
                .map(|(t, c)| c * BigRational::from_integer(t.exponents[var].into()))
                .collect();
            // Differentiation maps distinct monomials to distinct monomials, in order.
            out.exact = Some(Arc::new(ex));
        }
        out
    }

    /// The gradient `(∂f/∂x_1, ..., ∂f/∂x_n)` as polynomials.
    pub fn gradient(&self) -> Vec<SparsePolynomial> {
        (0..self.num_vars).map(|i| self.partial(i)).collect()
    }

    /// Natural interval extension of `f` over the box `[lo, hi]`.
    ///
    /// The returned interval contains every value of `f` on the box; it is
    /// widened by a few ulps to absorb rounding in its own evaluation.
    pub fn range_over(&self, lo: &[f64], hi: &[f64]) -> Interval {
        debug_assert_eq!(lo.len(), self.num_vars);
        let vars: Vec<Interval> = lo.iter().zip(hi).map(|(&a, &b)| Interval::new(a, b)).collect();
        let mut acc = Interval::point(0.0);
        for t in &self.terms {
            let mut m = Interval::point(t.coeff);
            for (v, &a) in vars.iter().zip(&t.exponents) {
                if a != 0 {
                    m = m * v.powi(a);
                }
            }
            acc = acc + m;
        }
        acc.widened(self.terms.len())
    }

    /// Substitutes `x_i = values[i]` for the variables `i >= 1` and returns
    /// the coefficients (ascending powers) of the resulting polynomial in `x_1`.
    pub fn slice_in_first(&self, rest: &[f64]) -> Result<Vec<f64>> {
        if rest.len() + 1 != self.num_vars {
            return Err(Error::DimensionMismatch { expected: self.num_vars - 1, got: rest.len() });
        }
        let deg = self.degree_in(0) as usize;
        let mut acc = vec![CompensatedSum::new(); deg + 1];
        for t in &self.terms {
            let mut m = t.coeff;
            for (&xi, &a) in rest.iter().zip(&t.exponents[1..]) {
                if a != 0 {
                    m *= xi.powi(a as i32);
                }
            }
            acc[t.exponents[0] as usize].add(m);
        }
        Ok(acc.into_iter().map(|c| c.value()).collect())
    }

    /// Scale of the terms contributing to the slice at `rest`, used for
    /// deciding whether a slice coefficient is a rounding residue.
    pub(crate) fn slice_scale(&self, rest: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut m = t.coeff.abs();
                for (&xi, &a) in rest.iter().zip(&t.exponents[1..]) {
                    m *= xi.abs().powi(a as i32);
                }
                m
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn exact_coeffs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref().map(Vec::as_slice)
    }
}

impl PartialEq for SparsePolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.num_vars == other.num_vars && self.terms == other.terms
    }
}

impl fmt::Debug for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsePolynomial({} vars: {})", self.num_vars, self)
    }
}

/// Renders in the same grammar the parser accepts.
impl fmt::Display for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let (sign, mag) = if t.coeff < 0.0 { ("-", -t.coeff) } else { ("+", t.coeff) };
            match (i, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            let vars: Vec<String> = t
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0)
                .map(|(k, &a)| if a == 1 { format!("x{}", k + 1) } else { format!("x{}^{}", k + 1, a) })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// A polynomial together with its gradient, for evaluating `f` and `∇f`
/// at the same points.
#[derive(Debug, Clone)]
pub struct GradientField {
    f: SparsePolynomial,
    grad: Vec<SparsePolynomial>,
}

impl GradientField {
    pub fn new(f: &SparsePolynomial) -> Self {
        Self { f: f.clone(), grad: f.gradient() }
    }

    pub fn poly(&self) -> &SparsePolynomial {
        &self.f
    }

    pub fn components(&self) -> &[SparsePolynomial] {
        &self.grad
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.f.value(x)
    }

    /// `|∇f(x)|`.
    #[inline]
    pub fn grad_norm(&self, x: &[f64]) -> f64 {
        self.grad.iter().map(|g| g.value(x).powi(2)).sum::<f64>().sqrt()
    }

    /// Writes `∇f(x)` into `out`.
    #[inline]
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(&self.grad) {
            *o = g.value(x);
        }
    }

    /// Upper bound of `|∂f/∂x_i|` over a box, per coordinate.
    pub fn partial_bounds(&self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.range_over(lo, hi).mag()).collect()
    }
}
