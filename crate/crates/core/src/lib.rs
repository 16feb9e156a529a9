//! Linear sketches for rank-one tensors over `[n]^q`, `q ≤ 3`.
//!
//! The building block is a p-sample: a structured random subset of the index
//! space whose sum over a rank-one tensor costs near-linear time in `n`
//! (see [`fastsum`]). On top of it sit an ℓ0 sampler ([`l0`]) and an ℓ1
//! embedding ([`l1`]).

pub mod error;
pub mod fastsum;
pub mod fourwise;
pub mod l0;
pub mod l1;
pub mod psample;
pub mod rng;
pub mod sign;
pub mod tensor;

pub use error::{Result, SketchError};
pub use fourwise::{BinaryField, FourWiseSigns};
pub use l0::{L0Decode, L0Params, L0SketchDescriptor, L0SketchValues};
pub use l1::{
    apply_l1_dense, apply_l1_rank_one, apply_l1_sparse, build_l1, choose_l1_params, sketch_l1_norm,
    L1Constants, L1Params, L1SketchDescriptor, L1SketchValues,
};
pub use psample::{select_kind, PSample, SampleKind};
pub use sign::{Purpose, Recovery, SignMeasurementSet, SignedMeasurementValues, Singleton};
pub use tensor::{ModeShape, MultiIndex, RankOneTensor, SparseTensor};
