//! Brute-force references and Monte Carlo estimators for `tensketch`.
//!
//! Everything here enumerates index spaces or loops naively; it exists so the
//! fast paths have something independent to agree with.

pub mod dense;
pub mod kernels;
pub mod sketch;
pub mod stats;

pub use dense::{brute_sum, materialize, sample_members, DenseTensor};
pub use sketch::{
    dense_l0_sketch, dense_l1_sketch, empirical_l0_distribution, perfect_decode, L0Distribution, Tester,
};
pub use stats::{estimate_marginals, estimate_pairwise, Estimate, SIGMAS};
