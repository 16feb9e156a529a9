//! Index spaces, rank-one tensors and sparse tensors over `[n]^q`.
//!
//! All modes share one dimension `n`, coordinates are zero-indexed and live
//! in `Z/n`. Flat indices are row-major: the last mode varies fastest.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SketchError};

/// Largest supported number of modes.
pub const MAX_MODES: usize = 3;

/// Number of modes `q` and per-mode dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeShape {
    modes: usize,
    n: usize,
}

impl ModeShape {
    pub fn new(modes: usize, n: usize) -> Result<Self> {
        if !(1..=MAX_MODES).contains(&modes) {
            return contract(format!("mode count must be 1..=3, got {modes}"));
        }
        if n == 0 {
            return contract("dimension n must be at least 1");
        }
        if n.checked_pow(modes as u32).is_none() {
            return Err(SketchError::Overflow { n, modes });
        }
        Ok(Self { modes, n })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of entries, `n^q`.
    pub fn len(&self) -> usize {
        // Checked at construction.
        self.n.pow(self.modes as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major position of `idx`.
    pub fn flat(&self, idx: &MultiIndex) -> usize {
        idx.as_slice().iter().fold(0, |acc, &c| acc * self.n + c)
    }

    pub fn unflat(&self, mut flat: usize) -> MultiIndex {
        let mut coords = [0usize; MAX_MODES];
        for m in (0..self.modes).rev() {
            coords[m] = flat % self.n;
            flat /= self.n;
        }
        MultiIndex { coords, arity: self.modes as u8 }
    }

    /// Iterates every index of the space in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.len()).map(move |f| self.unflat(f))
    }

    /// Checks that `idx` has the right arity and in-range coordinates.
    pub fn check(&self, idx: &MultiIndex) -> Result<()> {
        if idx.len() != self.modes {
            return contract(format!(
                "index arity {} does not match {} modes",
                idx.len(),
                self.modes
            ));
        }
        if let Some(c) = idx.as_slice().iter().find(|&&c| c >= self.n) {
            return contract(format!("coordinate {c} out of range for n = {}", self.n));
        }
        Ok(())
    }

    pub(crate) fn expect_same(&self, other: &ModeShape) -> Result<()> {
        if self != other {
            return contract(format!("shape mismatch: {self} vs {other}"));
        }
        Ok(())
    }
}

impl fmt::Display for ModeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]^{}", self.n, self.modes)
    }
}

/// A point of `[n]^q`, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    coords: [usize; MAX_MODES],
    arity: u8,
}

impl MultiIndex {
    pub fn new(coords: &[usize]) -> Self {
        assert!(
            (1..=MAX_MODES).contains(&coords.len()),
            "multi-index arity must be 1..=3"
        );
        let mut c = [0usize; MAX_MODES];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c, arity: coords.len() as u8 }
    }

    /// Builds an index from arbitrary integers, reducing each coordinate mod `n`.
    pub fn wrapped(coords: &[i64], n: usize) -> Self {
        let reduced: Vec<usize> = coords
            .iter()
            .map(|&c| c.rem_euclid(n as i64) as usize)
            .collect();
        Self::new(&reduced)
    }

    pub fn len(&self) -> usize {
        self.arity as usize
    }

    pub fn is_empty(&self) -> bool {
        self.arity == 0
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.coords[..self.arity as usize]
    }

    pub fn get(&self, mode: usize) -> usize {
        self.as_slice()[mode]
    }
}

impl<const N: usize> From<[usize; N]> for MultiIndex {
    fn from(c: [usize; N]) -> Self {
        Self::new(&c)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_slice())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.as_slice().iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `x_1 ⊗ … ⊗ x_q`, kept in factored form.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneTensor {
    shape: ModeShape,
    factors: Vec<Vec<f64>>,
}

impl RankOneTensor {
    pub fn new(factors: Vec<Vec<f64>>) -> Result<Self> {
        let n = factors.first().map(Vec::len).unwrap_or(0);
        let shape = ModeShape::new(factors.len(), n)?;
        if factors.iter().any(|f| f.len() != n) {
            return contract("all factors must have the same length");
        }
        Ok(Self { shape, factors })
    }

    /// The all-zero tensor of `shape`.
    pub fn zeros(shape: ModeShape) -> Self {
        Self { shape, factors: vec![vec![0.0; shape.n()]; shape.modes()] }
    }

    /// Indicator of the box `[0,d_1) × … × [0,d_q)` shifted by `origin`.
    pub fn indicator_box(shape: ModeShape, origin: &[usize], dims: &[usize]) -> Result<Self> {
        if origin.len() != shape.modes() || dims.len() != shape.modes() {
            return contract("box arity does not match shape");
        }
        let mut factors = Vec::with_capacity(shape.modes());
        for (&o, &d) in origin.iter().zip(dims) {
            if o + d > shape.n() {
                return contract(format!("box [{o}, {}) exceeds n = {}", o + d, shape.n()));
            }
            let mut f = vec![0.0; shape.n()];
            f[o..o + d].fill(1.0);
            factors.push(f);
        }
        Ok(Self { shape, factors })
    }

    pub fn shape(&self) -> ModeShape {
        self.shape
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &[f64] {
        &self.factors[mode]
    }

    pub fn entry(&self, idx: &MultiIndex) -> Result<f64> {
        self.shape.check(idx)?;
        Ok(self.entry_unchecked(idx))
    }

    pub(crate) fn entry_unchecked(&self, idx: &MultiIndex) -> f64 {
        idx.as_slice()
            .iter()
            .zip(&self.factors)
            .map(|(&c, f)| f[c])
            .product()
    }

    /// Multiplies every factor entrywise by its sign vector.
    pub fn mode_signed(&self, signs: &[Vec<i8>]) -> Result<Self> {
        if signs.len() != self.shape.modes() {
            return contract("one sign vector per mode required");
        }
        let mut factors = Vec::with_capacity(signs.len());
        for (f, s) in self.factors.iter().zip(signs) {
            if s.len() != f.len() {
                return contract("sign vector length does not match n");
            }
            factors.push(f.iter().zip(s).map(|(&v, &s)| v * f64::from(s)).collect());
        }
        Ok(Self { shape: self.shape, factors })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.factors[0] {
            *v *= alpha;
        }
        out
    }

    /// Sum of absolute entries, `∏_m ‖x_m‖₁`.
    pub fn l1_norm(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.iter().map(|v| v.abs()).sum::<f64>())
            .product()
    }
}

/// Explicit nonzero entries over `[n]^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseTensor {
    shape: ModeShape,
    entries: Vec<(MultiIndex, f64)>,
}

impl SparseTensor {
    pub fn empty(shape: ModeShape) -> Self {
        Self { shape, entries: Vec::new() }
    }

    /// Builds a tensor from an update stream: repeated indices accumulate and
    /// entries that end at zero are dropped. Entries are kept in flat order.
    pub fn from_updates<I>(shape: ModeShape, updates: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for (idx, v) in updates {
            shape.check(&idx)?;
            *acc.entry(shape.flat(&idx)).or_insert(0.0) += v;
        }
        let mut flat: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, v)| v != 0.0).collect();
        flat.sort_unstable_by_key(|&(f, _)| f);
        let entries = flat.into_iter().map(|(f, v)| (shape.unflat(f), v)).collect();
        Ok(Self { shape, entries })
    }

    /// Expands a rank-one tensor, keeping only its nonzero entries.
    pub fn from_rank_one(t: &RankOneTensor) -> Self {
        let shape = t.shape();
        let entries = shape
            .indices()
            .map(|idx| (idx, t.entry_unchecked(&idx)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        Self { shape, entries }
    }

    /// Sparse view of a dense row-major array.
    pub fn from_dense(shape: ModeShape, values: &[f64]) -> Result<Self> {
        if values.len() != shape.len() {
            return contract(format!("dense length {} != {}", values.len(), shape.len()));
        }
        let entries = values
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(f, &v)| (shape.unflat(f), v))
            .collect();
        Ok(Self { shape, entries })
    }

    pub fn shape(&self) -> ModeShape {
        self.shape
    }

    pub fn entries(&self) -> &[(MultiIndex, f64)] {
        &self.entries
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v.abs()).sum()
    }

    /// `alpha·self + beta·other`.
    pub fn combine(&self, other: &SparseTensor, alpha: f64, beta: f64) -> Result<Self> {
        self.shape.expect_same(&other.shape)?;
        let updates = self
            .entries
            .iter()
            .map(|&(i, v)| (i, alpha * v))
            .chain(other.entries.iter().map(|&(i, v)| (i, beta * v)));
        Self::from_updates(self.shape, updates)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        if alpha == 0.0 {
            return Self::empty(self.shape);
        }
        Self {
            shape: self.shape,
            entries: self.entries.iter().map(|&(i, v)| (i, alpha * v)).collect(),
        }
    }
}
