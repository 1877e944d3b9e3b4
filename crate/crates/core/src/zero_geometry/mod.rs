//! Numerical access to the zero set `Z_f`: descent sampling, distance
//! estimates, box-counting and tube-volume dimension estimates, and
//! monotonicity statistics of the slices `x₁ ↦ f(x₁, x′)`.

mod dimension;
mod distance;
mod monotonicity;
mod sample;

pub use dimension::{
    box_dimension, neighborhood_volume_exponent, DimensionEstimate, DimensionMethod, DEFAULT_LEVELS,
};
pub use distance::{distance_to_zero, ZeroIndex};
pub use monotonicity::{max_monotonicity_changes, monotonicity_breakpoints, MonotonicityStats};
pub use sample::{sample_zero_set, ZeroSample, DEFAULT_RESIDUAL_TOL, MAX_DESCENT_STEPS, MAX_POLISH_STEPS};
