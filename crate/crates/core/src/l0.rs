//! The ℓ0-sampling sketch and its decoder.
//!
//! Levels sample with probabilities `1, b⁻¹, b⁻², …` down to the first level
//! at or below `1/n^q`; every level holds `k` independent p-sample buckets.
//! A bucket stores the sign measurements of `X` restricted to its sample:
//! one recovery set shared by the whole sketch, plus a fresh equality set
//! per bucket. Decoding scans the sparsest levels first and returns the
//! first bucket whose singleton test accepts.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SketchError};
use crate::psample::PSample;
use crate::rng::{derive, mix64};
use crate::sign::{Purpose, SignMeasurementSet, Singleton, DEFAULT_EQUALITY_CONSTANT};
use crate::tensor::{ModeShape, MultiIndex, RankOneTensor, SparseTensor};

const RECOVERY_STREAM: u64 = 0x7265_63;
const SAMPLE_STREAM: u64 = 0x7073;
const EQUALITY_STREAM: u64 = 0x6571;

/// Everything needed to rebuild an ℓ0 descriptor bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L0Params {
    pub n: usize,
    pub modes: usize,
    pub delta: f64,
    pub level_base: f64,
    pub buckets_per_level: usize,
    pub equality_constant: f64,
    pub seed: u64,
}

impl L0Params {
    /// Parameters with `k = ⌈log₂(1/δ)⌉` buckets unless `buckets` is given.
    pub fn new(shape: ModeShape, delta: f64, level_base: f64, buckets: Option<usize>, seed: u64) -> Self {
        let buckets_per_level = buckets.unwrap_or_else(|| theory_buckets(delta));
        Self {
            n: shape.n(),
            modes: shape.modes(),
            delta,
            level_base,
            buckets_per_level,
            equality_constant: DEFAULT_EQUALITY_CONSTANT,
            seed,
        }
    }

    pub fn shape(&self) -> Result<ModeShape> {
        ModeShape::new(self.modes, self.n)
    }

    fn fingerprint(&self) -> u64 {
        [
            self.n as u64,
            self.modes as u64,
            self.delta.to_bits(),
            self.level_base.to_bits(),
            self.buckets_per_level as u64,
            self.equality_constant.to_bits(),
            self.seed,
        ]
        .iter()
        .fold(0x6c30, |h, &v| mix64(h ^ v))
    }
}

/// `⌈log₂(1/δ)⌉`, at least 1.
pub fn theory_buckets(delta: f64) -> usize {
    ((1.0 / delta).log2().ceil() as usize).max(1)
}

/// Sampling probabilities `base^{-j}` for `j = 0..=L`, with `L` the least
/// integer such that `base^L ≥ n^q`.
pub fn level_probabilities(shape: ModeShape, base: f64) -> Vec<f64> {
    let size = shape.len() as f64;
    let mut levels = vec![1.0];
    let mut reach = 1.0;
    while reach < size * (1.0 - 1e-12) {
        reach *= base;
        levels.push(1.0 / reach);
    }
    levels
}

#[derive(Clone, Debug)]
pub struct L0Bucket {
    pub level: usize,
    pub sample: PSample,
    pub equality: SignMeasurementSet,
}

#[derive(Clone, Debug)]
pub struct L0SketchDescriptor {
    params: L0Params,
    shape: ModeShape,
    levels: Vec<f64>,
    recovery: Arc<SignMeasurementSet>,
    buckets: Vec<L0Bucket>,
    fingerprint: u64,
}

/// Sketch of one tensor, laid out level-major, bucket-minor, with each
/// bucket's recovery measurements followed by its equality measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct L0SketchValues {
    fingerprint: u64,
    values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum L0Decode {
    Sampled(MultiIndex, f64),
    Fail,
}

impl L0SketchDescriptor {
    pub fn build(params: L0Params) -> Result<Self> {
        let shape = params.shape()?;
        check_params(&params)?;
        let recovery = SignMeasurementSet::build_recovery_set(
            shape,
            params.delta,
            derive(params.seed, RECOVERY_STREAM),
        )?;
        Self::build_with_recovery(params, Arc::new(recovery))
    }

    /// Builds around an existing recovery set. A validated set never fails
    /// to decode a 1-sparse input, so it can be shared across independent
    /// sketches. An unvalidated set still sketches but cannot decode.
    pub fn build_with_recovery(params: L0Params, recovery: Arc<SignMeasurementSet>) -> Result<Self> {
        let shape = params.shape()?;
        check_params(&params)?;
        shape.expect_same(&recovery.shape())?;
        if recovery.purpose() != Purpose::Recovery {
            return contract("recovery slot needs a recovery set");
        }
        let levels = level_probabilities(shape, params.level_base);
        let k = params.buckets_per_level;
        let per_test = params.delta / (k * levels.len()) as f64;
        let sample_seed = derive(params.seed, SAMPLE_STREAM);
        let eq_seed = derive(params.seed, EQUALITY_STREAM);
        let mut buckets = Vec::with_capacity(levels.len() * k);
        for (level, &p) in levels.iter().enumerate() {
            for b in 0..k {
                let id = (level * k + b) as u64;
                buckets.push(L0Bucket {
                    level,
                    sample: PSample::new(shape, p, derive(sample_seed, id))?,
                    equality: SignMeasurementSet::build_equality_set(
                        shape,
                        per_test,
                        params.equality_constant,
                        derive(eq_seed, id),
                    )?,
                });
            }
        }
        let fingerprint = params.fingerprint();
        Ok(Self { params, shape, levels, recovery, buckets, fingerprint })
    }

    pub fn params(&self) -> &L0Params {
        &self.params
    }

    pub fn shape(&self) -> ModeShape {
        self.shape
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn buckets_per_level(&self) -> usize {
        self.params.buckets_per_level
    }

    pub fn buckets(&self) -> &[L0Bucket] {
        &self.buckets
    }

    pub fn recovery(&self) -> &Arc<SignMeasurementSet> {
        &self.recovery
    }

    /// Equality measurements per bucket.
    pub fn equality_count(&self) -> usize {
        self.buckets.first().map_or(0, |b| b.equality.count())
    }

    fn stride(&self) -> usize {
        self.recovery.count() + self.equality_count()
    }

    /// Total number of measurements `m = #levels · k · (N_rec + N_eq)`.
    pub fn dimension(&self) -> usize {
        self.buckets.len() * self.stride()
    }

    /// Bucket positions in decode order: sparsest level first, buckets in index order.
    pub fn decode_order(&self) -> impl Iterator<Item = usize> + '_ {
        let k = self.params.buckets_per_level;
        (0..self.levels.len()).rev().flat_map(move |l| (l * k)..(l * k + k))
    }

    pub fn zeros(&self) -> L0SketchValues {
        L0SketchValues { fingerprint: self.fingerprint, values: vec![0.0; self.dimension()] }
    }

    /// Sketches a rank-one tensor with one fast p-sample sum per measurement.
    pub fn sketch_rank_one(&self, t: &RankOneTensor) -> Result<L0SketchValues> {
        self.shape.expect_same(&t.shape())?;
        let stride = self.stride();
        let modes = self.shape.modes();
        let values: Vec<f64> = self
            .buckets
            .par_iter()
            .flat_map_iter(|bucket| {
                let mut out = Vec::with_capacity(stride);
                let mut buf = vec![Vec::with_capacity(self.shape.n()); modes];
                for set in [&*self.recovery, &bucket.equality] {
                    for i in 0..set.count() {
                        set.signed_factors_into(i, t, &mut buf);
                        let slices: Vec<&[f64]> = buf.iter().map(Vec::as_slice).collect();
                        out.push(bucket.sample.sum_factors(&slices));
                    }
                }
                out
            })
            .collect();
        Ok(L0SketchValues { fingerprint: self.fingerprint, values })
    }

    /// Sketches explicit entries: each entry lands in the buckets whose
    /// sample contains it, weighted by its sign pattern.
    pub fn sketch_sparse(&self, t: &SparseTensor) -> Result<L0SketchValues> {
        self.shape.expect_same(&t.shape())?;
        let stride = self.stride();
        let n_rec = self.recovery.count();
        let values: Vec<f64> = self
            .buckets
            .par_iter()
            .flat_map_iter(|bucket| {
                let members: Vec<(MultiIndex, f64)> = t
                    .entries()
                    .iter()
                    .filter(|(idx, _)| bucket.sample.contains_unchecked(idx))
                    .copied()
                    .collect();
                let mut out = vec![0.0; stride];
                let (rec, eq) = out.split_at_mut(n_rec);
                self.recovery.accumulate(&members, rec);
                bucket.equality.accumulate(&members, eq);
                out
            })
            .collect();
        Ok(L0SketchValues { fingerprint: self.fingerprint, values })
    }

    /// `alpha·a + beta·b`.
    pub fn combine(
        &self,
        a: &L0SketchValues,
        b: &L0SketchValues,
        alpha: f64,
        beta: f64,
    ) -> Result<L0SketchValues> {
        self.check_values(a)?;
        self.check_values(b)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| alpha * x + beta * y).collect();
        Ok(L0SketchValues { fingerprint: self.fingerprint, values })
    }

    fn check_values(&self, v: &L0SketchValues) -> Result<()> {
        if v.fingerprint != self.fingerprint || v.values.len() != self.dimension() {
            return contract("sketch values were not produced by this descriptor");
        }
        Ok(())
    }

    /// Runs the singleton test bucket by bucket in decode order.
    pub fn decode(&self, vals: &L0SketchValues) -> Result<L0Decode> {
        self.check_values(vals)?;
        let stride = self.stride();
        let n_rec = self.recovery.count();
        for b in self.decode_order() {
            let chunk = &vals.values[b * stride..(b + 1) * stride];
            let (rec, eq) = chunk.split_at(n_rec);
            if let Singleton::Accept(idx, v) =
                self.recovery.singleton_test(&self.buckets[b].equality, rec, eq)?
            {
                return Ok(L0Decode::Sampled(idx, v));
            }
        }
        Ok(L0Decode::Fail)
    }

    /// Wraps raw values laid out in this descriptor's order.
    pub fn values_from_vec(&self, values: Vec<f64>) -> Result<L0SketchValues> {
        let v = L0SketchValues { fingerprint: self.fingerprint, values };
        self.check_values(&v)?;
        Ok(v)
    }

    /// Parses values serialized by [`L0SketchValues::to_bytes`] under this descriptor.
    pub fn values_from_bytes(&self, bytes: &[u8]) -> Result<L0SketchValues> {
        self.values_from_vec(f64s_from_bytes(bytes)?)
    }
}

fn check_params(p: &L0Params) -> Result<()> {
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return contract(format!("delta {} outside (0, 1)", p.delta));
    }
    if !(p.level_base > 1.0) || !p.level_base.is_finite() {
        return contract(format!("level base {} must exceed 1", p.level_base));
    }
    if p.buckets_per_level == 0 {
        return contract("at least one bucket per level");
    }
    if !(p.equality_constant > 0.0) {
        return Err(SketchError::Construction("equality constant must be positive".into()));
    }
    Ok(())
}

impl L0SketchValues {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Flat little-endian `f64` sequence in descriptor order.
    pub fn to_bytes(&self) -> Vec<u8> {
        f64s_to_bytes(&self.values)
    }
}

pub(crate) fn f64s_to_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub(crate) fn f64s_from_bytes(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return contract(format!("{} bytes is not a whole number of f64 values", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}
