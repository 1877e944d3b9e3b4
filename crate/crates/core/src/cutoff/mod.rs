//! Dyadic cube covers, the bump-function partition of unity built on them,
//! and sampled checks of its identities and norm bounds.

pub mod cube;
pub mod partition;
pub mod profile;
pub mod verify;

pub use cube::{
    dyadic_cover, dyadic_cover_with_margin, dyadic_level, hausdorff_cover, whitney_fixture, write_cover_csv,
    DyadicCube,
};
pub use partition::{build_partition, bump_jet, CutoffPartition, Jet2};
pub use verify::{
    cutoff_norm, neighbourhood_cutoff, verify_derivative_bound, verify_flest, verify_identically_one_near,
    verify_partition, DerivativeBound, FlestReport, PartitionChecks,
};
