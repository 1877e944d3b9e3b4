//! Shell-wise integration of `|∇f/f|^p` and `|log|f||^p` over a box.
//!
//! The region is split into the dyadic level shells
//! `E_j = {x ∈ U : 2^{-j-1} < |f(x)| ≤ 2^{-j}}`. Each shell is estimated by
//! stratified Monte Carlo on an adaptive cover (see [`cover`]), and the
//! decay of the per-shell contributions `c_j` decides whether the integral
//! is finite: geometric decay (`log₂ c_j` with negative slope in `j`) means
//! the tail is summable, a non-negative slope means it is not.

pub mod cover;
mod critical;
mod radial;
mod shells;

use serde::{Deserialize, Serialize};

pub use critical::{critical_exponent, critical_exponent_default, CriticalExponent, Probe};
pub use radial::{radial_blowup_check, RadialCheck, RadialVerdict};
pub use shells::{
    integrate, integrate_abs_log, integrate_grad_log, shell_decompose, IntegralVerdict, Shell, ShellProfile,
    VerdictKind,
};

/// Sampling parameters shared by the shell estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub samples_per_shell: usize,
    /// Deepest level-shell index.
    pub j_max: i32,
    /// Cap on the number of boxes in one shell's adaptive cover.
    pub max_cover_boxes: usize,
    /// Slope (in log₂ units per level) below which shell contributions
    /// count as geometrically decaying.
    pub slope_margin: f64,
    /// Width of the statistical band around the margin, in standard
    /// errors of the fitted slope.
    pub z_score: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { samples_per_shell: 200_000, j_max: 24, max_cover_boxes: 4096, slope_margin: 0.02, z_score: 3.0 }
    }
}

impl Budget {
    /// Smaller budget for quick checks and doc examples.
    pub fn quick() -> Self {
        Self { samples_per_shell: 20_000, j_max: 16, max_cover_boxes: 1024, ..Self::default() }
    }

    pub fn doubled(&self) -> Self {
        Self { samples_per_shell: self.samples_per_shell * 2, ..self.clone() }
    }
}

/// The quantity integrated shell by shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// Shell measures only.
    Measure,
    /// `|∇f / f|^p`.
    GradLog { p: f64 },
    /// `|log |f||^p`.
    AbsLog { p: f64 },
}

impl Integrand {
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Integrand::Measure => None,
            Integrand::GradLog { p } | Integrand::AbsLog { p } => Some(p),
        }
    }
}
