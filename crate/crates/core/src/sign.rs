//! Khatri-Rao sign measurements, 1-sparse recovery and singleton testing.
//!
//! A measurement set holds `N` sign vectors per mode; measurement `i` of a
//! tensor `X` is `⟨σ⁽ⁱ⁾₁ ⊗ … ⊗ σ⁽ⁱ⁾_q, X⟩`. Signs are stored as bits
//! (`1` = `−1`), transposed so that the `N`-bit sign pattern of an index is
//! the XOR of one word row per mode.

use std::collections::HashMap;
use std::ops::Deref;

use rand::Rng;

use crate::error::{contract, Result, SketchError};
use crate::rng::{derive, rng_from};
use crate::tensor::{ModeShape, MultiIndex, RankOneTensor, SparseTensor};

/// Redraws allowed when a recovery set has a colliding sign pattern.
pub const VALIDATION_ATTEMPTS: u64 = 16;

/// Largest recovery set that can be validated (patterns are keyed as `u128`).
pub const MAX_RECOVERY_MEASUREMENTS: usize = 128;

/// Default constant `c` in `N_eq = ⌈c·2^q·ln(1/δ)⌉`.
pub const DEFAULT_EQUALITY_CONSTANT: f64 = 2.0;

const EQUAL_MAGNITUDE_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Recovery,
    Equality,
}

/// Measurements `⟨σ⁽ⁱ⁾, X⟩` in measurement order.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasurementValues(pub Vec<f64>);

impl Deref for SignedMeasurementValues {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Recovery {
    /// Every measurement is exactly zero.
    Zero,
    Found(MultiIndex, f64),
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Singleton {
    Accept(MultiIndex, f64),
    Reject,
}

#[derive(Clone, Debug)]
pub struct SignMeasurementSet {
    shape: ModeShape,
    count: usize,
    words: usize,
    purpose: Purpose,
    /// `masks[m][c * words + w]`: bit `i % 64` of word `i / 64` set iff `σ⁽ⁱ⁾_m[c] = −1`.
    masks: Vec<Vec<u64>>,
    /// Canonical pattern to flat index, present once validated.
    lookup: Option<HashMap<u128, usize>>,
}

/// `N = ⌈log₂(2·n^q/δ)⌉`.
pub fn recovery_count(shape: ModeShape, delta: f64) -> usize {
    (2.0 * shape.len() as f64 / delta).log2().ceil() as usize
}

/// Size of a validated recovery set, `⌈log₂(n^{2q}/δ)⌉`: the union bound over
/// all index pairs, so that a draw is collision-free with probability `1−δ`.
pub fn validated_recovery_count(shape: ModeShape, delta: f64) -> usize {
    let size = shape.len() as f64;
    ((size * size / delta).log2().ceil() as usize).max(1)
}

/// `N_eq = ⌈c·2^q·ln(1/δ)⌉`, at least 1.
pub fn equality_count(modes: usize, delta: f64, c: f64) -> usize {
    ((c * (1u64 << modes) as f64 * (1.0 / delta).ln()).ceil() as usize).max(1)
}

impl SignMeasurementSet {
    /// `count` i.i.d. uniform sign vectors per mode, not validated.
    pub fn random(shape: ModeShape, count: usize, purpose: Purpose, seed: u64) -> Self {
        let words = count.div_ceil(64).max(1);
        let tail = match count % 64 {
            _ if count == 0 => 0,
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        };
        let masks = (0..shape.modes())
            .map(|m| {
                let mut rng = rng_from(derive(seed, m as u64));
                (0..shape.n() * words)
                    .map(|k| {
                        let w: u64 = rng.random();
                        if k % words == words - 1 {
                            w & tail
                        } else {
                            w
                        }
                    })
                    .collect()
            })
            .collect();
        Self { shape, count, words, purpose, masks, lookup: None }
    }

    /// A validated recovery set: every index of `[n]^q` has a distinct
    /// sign pattern up to a global flip.
    pub fn build_recovery_set(shape: ModeShape, delta: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return contract(format!("delta {delta} outside (0, 1)"));
        }
        let count = validated_recovery_count(shape, delta);
        if count > MAX_RECOVERY_MEASUREMENTS {
            return Err(SketchError::Construction(format!(
                "{count} recovery measurements exceed the supported {MAX_RECOVERY_MEASUREMENTS}"
            )));
        }
        for attempt in 0..VALIDATION_ATTEMPTS {
            let mut set = Self::random(shape, count, Purpose::Recovery, derive(seed, attempt));
            if set.validate() {
                return Ok(set);
            }
        }
        Err(SketchError::Construction(format!(
            "no collision-free recovery set after {VALIDATION_ATTEMPTS} draws"
        )))
    }

    /// A fresh equality-testing set for failure budget `delta`.
    pub fn build_equality_set(shape: ModeShape, delta: f64, c: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return contract(format!("delta {delta} outside (0, 1)"));
        }
        let count = equality_count(shape.modes(), delta, c);
        Ok(Self::random(shape, count, Purpose::Equality, seed))
    }

    /// Exhaustive uniqueness check; installs the decode table on success.
    fn validate(&mut self) -> bool {
        let mut table = HashMap::with_capacity(self.shape.len());
        for flat in 0..self.shape.len() {
            let key = self.canonical(self.pattern_u128(&self.shape.unflat(flat)));
            if table.insert(key, flat).is_some() {
                return false;
            }
        }
        self.lookup = Some(table);
        true
    }

    pub fn shape(&self) -> ModeShape {
        self.shape
    }

    /// Number of measurements `N`.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn purpose(&self) -> Purpose {
        self.purpose
    }

    pub fn is_validated(&self) -> bool {
        self.lookup.is_some()
    }

    fn bit(&self, mode: usize, coord: usize, i: usize) -> bool {
        (self.masks[mode][coord * self.words + i / 64] >> (i % 64)) & 1 == 1
    }

    /// `σ⁽ⁱ⁾_m[c]`.
    pub fn sign(&self, i: usize, mode: usize, coord: usize) -> i8 {
        if self.bit(mode, coord, i) {
            -1
        } else {
            1
        }
    }

    pub fn sign_vector(&self, i: usize, mode: usize) -> Vec<i8> {
        (0..self.shape.n()).map(|c| self.sign(i, mode, c)).collect()
    }

    /// Pattern words of `idx`: bit `i` set iff `∏_m σ⁽ⁱ⁾_m[idx_m] = −1`.
    pub fn pattern(&self, idx: &MultiIndex) -> Vec<u64> {
        let mut out = vec![0u64; self.words];
        for (m, &c) in idx.as_slice().iter().enumerate() {
            let row = &self.masks[m][c * self.words..(c + 1) * self.words];
            out.iter_mut().zip(row).for_each(|(o, r)| *o ^= r);
        }
        out
    }

    fn pattern_u128(&self, idx: &MultiIndex) -> u128 {
        let mut out = 0u128;
        for (m, &c) in idx.as_slice().iter().enumerate() {
            let base = c * self.words;
            let lo = self.masks[m][base] as u128;
            let hi = if self.words > 1 { (self.masks[m][base + 1] as u128) << 64 } else { 0 };
            out ^= lo | hi;
        }
        out
    }

    fn full_mask(&self) -> u128 {
        if self.count >= 128 {
            u128::MAX
        } else {
            (1u128 << self.count) - 1
        }
    }

    fn canonical(&self, pattern: u128) -> u128 {
        if pattern & 1 == 1 {
            !pattern & self.full_mask()
        } else {
            pattern
        }
    }

    /// Measurement `i` of `idx` as a sign, `∏_m σ⁽ⁱ⁾_m[idx_m]`.
    pub fn pattern_sign(&self, i: usize, idx: &MultiIndex) -> f64 {
        let flips = idx
            .as_slice()
            .iter()
            .enumerate()
            .filter(|&(m, &c)| self.bit(m, c, i))
            .count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Writes `x_m ⊙ σ⁽ⁱ⁾_m` for every mode into `out`.
    pub(crate) fn signed_factors_into(&self, i: usize, t: &RankOneTensor, out: &mut [Vec<f64>]) {
        for (m, (f, o)) in t.factors().iter().zip(out.iter_mut()).enumerate() {
            o.clear();
            o.extend(f.iter().enumerate().map(|(c, &v)| if self.bit(m, c, i) { -v } else { v }));
        }
    }

    /// `values_i = ∏_m ⟨σ⁽ⁱ⁾_m, x_m⟩`.
    pub fn measure(&self, t: &RankOneTensor) -> Result<SignedMeasurementValues> {
        self.shape.expect_same(&t.shape())?;
        let values = (0..self.count)
            .map(|i| {
                t.factors()
                    .iter()
                    .enumerate()
                    .map(|(m, f)| {
                        f.iter()
                            .enumerate()
                            .map(|(c, &v)| if self.bit(m, c, i) { -v } else { v })
                            .sum::<f64>()
                    })
                    .product()
            })
            .collect();
        Ok(SignedMeasurementValues(values))
    }

    /// `values_i = Σ_entries value·pattern_i(idx)`.
    pub fn measure_sparse(&self, t: &SparseTensor) -> Result<SignedMeasurementValues> {
        self.shape.expect_same(&t.shape())?;
        let mut values = vec![0.0; self.count];
        self.accumulate(t.entries(), &mut values);
        Ok(SignedMeasurementValues(values))
    }

    /// Adds `value·pattern(idx)` of every entry into `values`.
    pub(crate) fn accumulate(&self, entries: &[(MultiIndex, f64)], values: &mut [f64]) {
        for (idx, v) in entries {
            let pattern = self.pattern(idx);
            for (i, out) in values.iter_mut().enumerate() {
                if (pattern[i / 64] >> (i % 64)) & 1 == 1 {
                    *out -= v;
                } else {
                    *out += v;
                }
            }
        }
    }

    /// Decodes a 1-sparse tensor from its measurements under this set.
    pub fn recover_1sparse(&self, vals: &[f64]) -> Result<Recovery> {
        let Some(lookup) = &self.lookup else {
            return contract("1-sparse recovery needs a validated recovery set");
        };
        if vals.len() != self.count {
            return contract(format!("{} values for {} measurements", vals.len(), self.count));
        }
        if vals.iter().all(|&v| v == 0.0) {
            return Ok(Recovery::Zero);
        }
        let mag = vals[0].abs();
        if mag == 0.0 || vals.iter().any(|v| (v.abs() - mag).abs() > EQUAL_MAGNITUDE_TOL * mag) {
            return Ok(Recovery::Fail);
        }
        let observed = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0.0)
            .fold(0u128, |acc, (i, _)| acc | (1u128 << i));
        match lookup.get(&self.canonical(observed)) {
            Some(&flat) => {
                let idx = self.shape.unflat(flat);
                Ok(Recovery::Found(idx, vals[0] * self.pattern_sign(0, &idx)))
            }
            None => Ok(Recovery::Fail),
        }
    }

    /// Decides whether the measured tensor is exactly 1-sparse.
    pub fn singleton_test(
        &self,
        eq_set: &SignMeasurementSet,
        rec_vals: &[f64],
        eq_vals: &[f64],
    ) -> Result<Singleton> {
        if eq_set.purpose != Purpose::Equality {
            return contract("singleton test needs an equality set");
        }
        if eq_vals.len() != eq_set.count {
            return contract(format!(
                "{} equality values for {} measurements",
                eq_vals.len(),
                eq_set.count
            ));
        }
        let (idx, value) = match self.recover_1sparse(rec_vals)? {
            Recovery::Found(idx, value) => (idx, value),
            Recovery::Zero | Recovery::Fail => return Ok(Singleton::Reject),
        };
        let tol = RESIDUAL_TOL * value.abs().max(1.0);
        let pattern = eq_set.pattern(&idx);
        let consistent = eq_vals.iter().enumerate().all(|(i, &got)| {
            let sign = if (pattern[i / 64] >> (i % 64)) & 1 == 1 { -1.0 } else { 1.0 };
            (got - value * sign).abs() <= tol
        });
        Ok(if consistent { Singleton::Accept(idx, value) } else { Singleton::Reject })
    }
}
