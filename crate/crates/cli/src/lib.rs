//! Experiment harness for `tensketch`: the disjoint-box and box-plus-random
//! ℓ0 sampling studies, an ℓ1 distortion study, kernel timings and a selftest.

pub mod bench;
pub mod distortion;
pub mod error;
pub mod experiments;
pub mod output;
pub mod selftest;

pub use error::{CliError, CliResult};
pub use experiments::{
    run_disjoint_rectangles, run_rect_plus_random, Dims, ExperimentConfig, RandomRow, RectRow, TABLE1, TABLE2,
    TABLE2_SUBSET,
};
