//! Numerical laboratory for the logarithmic singularities of real
//! polynomials.
//!
//! Given `f ∈ ℝ[x₁, ..., xₙ]` and a box `U`, the crate estimates whether
//! `|∇f / f|^p` and `|log |f||^p` are integrable on `U` ([`quadrature`]),
//! Łojasiewicz exponents of `f` near its zero set ([`exponents`]), the
//! dimension and slice-wise monotonicity of `Z_f` ([`zero_geometry`]), and
//! builds dyadic cutoff partitions adapted to `Z_f` ([`cutoff`]).
//!
//! ```
//! use logsing::quadrature::{critical_exponent, Budget};
//! use logsing::{Region, SparsePolynomial};
//!
//! let f = SparsePolynomial::parse("x1*x2")?;
//! let g = critical_exponent(&f, &Region::unit_cube(2), (0.5, 1.5), 0.1, &Budget::quick(), 1)?;
//! assert!((g.estimate - 1.0).abs() <= 0.15);
//! # Ok::<(), logsing::Error>(())
//! ```

pub mod cli;
pub mod cutoff;
pub mod error;
pub mod exponents;
pub mod fit;
pub mod numeric;
pub mod poly;
pub mod quadrature;
pub mod region;
pub mod report;
pub mod suite;
pub mod zero_geometry;

pub use error::{Error, Result};
pub use fit::ExponentFit;
pub use poly::{GradientField, SparsePolynomial, UnivariateRestriction, VanishingOrder};
pub use region::Region;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/shells.md")]
    mod shells {}
    #[doc = include_str!("../../../book/src/exponents.md")]
    mod exponents {}
    #[doc = include_str!("../../../book/src/zero_sets.md")]
    mod zero_sets {}
    #[doc = include_str!("../../../book/src/cutoffs.md")]
    mod cutoffs {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
