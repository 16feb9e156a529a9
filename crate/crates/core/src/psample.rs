//! Seeded random index sets with fast summation over rank-one tensors.
//!
//! A p-sample `S ⊆ [n]^q` includes every index with probability in
//! `[p/2, p]` and, conditioned on one index being included, any other index
//! with probability at most `2p`. Four constructions cover all `p`:
//!
//! | kind     | modes | range            | set                                                  |
//! |----------|-------|------------------|------------------------------------------------------|
//! | `AT`     | 2     | `p ≥ 1/n`        | `P₁(i) + P₂(j) mod n ∈ [0, T)`, `T = ⌊pn⌋`           |
//! | `BT`     | 3     | `p ≥ 1/n`        | `P₁(i) + P₂(j) + P₃(k) mod n ∈ [0, T)`               |
//! | `CT`     | 3     | `1/n² ≤ p < 1/n` | plane `ΣPₘ ≡ 0` with `P₂(j) − P₁(i) mod n ∈ [0, T)`, `T = ⌊pn²⌋` |
//! | `Direct` | any   | otherwise        | every index independently with probability `p`       |
//!
//! `AT`/`BT` use uniformly random functions `[n] → [n]` (explicit tables),
//! `CT` uses uniformly random permutations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::fastsum::{bt_sum_3, ct_sum_3, window_sum_2};
use crate::rng::{derive, rng_from};
use crate::tensor::{ModeShape, MultiIndex, RankOneTensor, SparseTensor};

/// Relative slack for floating range decisions such as `p·n ≥ 1`.
const RANGE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleKind {
    AT,
    BT,
    CT,
    Direct,
}

/// How the construction is chosen for a given `(shape, p)`.
pub fn select_kind(shape: ModeShape, p: f64) -> SampleKind {
    let n = shape.n() as f64;
    match shape.modes() {
        2 if p * n >= 1.0 - RANGE_EPS => SampleKind::AT,
        3 if p * n >= 1.0 - RANGE_EPS => SampleKind::BT,
        3 if p * n * n >= 1.0 - RANGE_EPS => SampleKind::CT,
        _ => SampleKind::Direct,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Structure {
    /// Mode maps plus the window `T`.
    Window { t: usize, maps: Vec<Vec<usize>> },
    /// Sorted row-major indices.
    List(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PSample {
    shape: ModeShape,
    target_p: f64,
    kind: SampleKind,
    seed: u64,
    structure: Structure,
}

impl PSample {
    pub fn new(shape: ModeShape, p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return contract(format!("sampling probability {p} outside (0, 1]"));
        }
        let kind = select_kind(shape, p);
        let n = shape.n();
        let nf = n as f64;
        let structure = match kind {
            SampleKind::AT | SampleKind::BT => {
                let t = ((p * nf + RANGE_EPS).floor() as usize).clamp(1, n);
                let maps = (0..shape.modes())
                    .map(|m| {
                        let mut rng = rng_from(derive(seed, m as u64));
                        (0..n).map(|_| rng.random_range(0..n)).collect()
                    })
                    .collect();
                Structure::Window { t, maps }
            }
            SampleKind::CT => {
                let t = ((p * nf * nf + RANGE_EPS).floor() as usize).clamp(1, n);
                let maps = (0..3)
                    .map(|m| {
                        let mut rng = rng_from(derive(seed, m as u64));
                        let mut perm: Vec<usize> = (0..n).collect();
                        perm.shuffle(&mut rng);
                        perm
                    })
                    .collect();
                Structure::Window { t, maps }
            }
            SampleKind::Direct => Structure::List(bernoulli_indices(shape.len(), p, seed)),
        };
        Ok(Self { shape, target_p: p, kind, seed, structure })
    }

    pub fn shape(&self) -> ModeShape {
        self.shape
    }

    pub fn kind(&self) -> SampleKind {
        self.kind
    }

    pub fn target_p(&self) -> f64 {
        self.target_p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Window size `T` of the structured kinds.
    pub fn window(&self) -> Option<usize> {
        match &self.structure {
            Structure::Window { t, .. } => Some(*t),
            Structure::List(_) => None,
        }
    }

    /// Mode maps `P_m` of the structured kinds.
    pub fn mode_maps(&self) -> Option<&[Vec<usize>]> {
        match &self.structure {
            Structure::Window { maps, .. } => Some(maps),
            Structure::List(_) => None,
        }
    }

    /// Explicit member list of a `Direct` sample, in row-major order.
    pub fn direct_indices(&self) -> Option<&[usize]> {
        match &self.structure {
            Structure::List(l) => Some(l),
            Structure::Window { .. } => None,
        }
    }

    /// Exact per-index inclusion probability of the construction.
    pub fn realized_p(&self) -> f64 {
        let n = self.shape.n() as f64;
        match (&self.structure, self.kind) {
            (Structure::Window { t, .. }, SampleKind::CT) => *t as f64 / (n * n),
            (Structure::Window { t, .. }, _) => *t as f64 / n,
            (Structure::List(_), _) => self.target_p,
        }
    }

    pub fn contains(&self, idx: &MultiIndex) -> Result<bool> {
        self.shape.check(idx)?;
        Ok(self.contains_unchecked(idx))
    }

    pub(crate) fn contains_unchecked(&self, idx: &MultiIndex) -> bool {
        let n = self.shape.n();
        match &self.structure {
            Structure::Window { t, maps } => {
                let c = idx.as_slice();
                match self.kind {
                    SampleKind::CT => {
                        let (a, b, k) = (maps[0][c[0]], maps[1][c[1]], maps[2][c[2]]);
                        (a + b + k) % n == 0 && (b + n - a) % n < *t
                    }
                    _ => {
                        let s: usize = c.iter().zip(maps).map(|(&ci, m)| m[ci]).sum();
                        s % n < *t
                    }
                }
            }
            Structure::List(l) => l.binary_search(&self.shape.flat(idx)).is_ok(),
        }
    }

    /// `Σ_{idx ∈ S} t[idx]`.
    pub fn fast_sum(&self, t: &RankOneTensor) -> Result<f64> {
        self.shape.expect_same(&t.shape())?;
        let factors: Vec<&[f64]> = t.factors().iter().map(Vec::as_slice).collect();
        Ok(self.sum_factors(&factors))
    }

    /// `Σ_{idx ∈ S} ∏_m factors[m][idx_m]`; factors must match the shape.
    pub(crate) fn sum_factors(&self, factors: &[&[f64]]) -> f64 {
        let n = self.shape.n();
        match &self.structure {
            Structure::Window { t, maps } => {
                // Relabel each mode through its map; scatter-accumulation keeps
                // the sum identity when a random function collides.
                let relabeled: Vec<Vec<f64>> = factors
                    .iter()
                    .zip(maps)
                    .map(|(f, map)| {
                        let mut out = vec![0.0; n];
                        for (&v, &to) in f.iter().zip(map) {
                            out[to] += v;
                        }
                        out
                    })
                    .collect();
                let r = &relabeled;
                match self.kind {
                    SampleKind::AT => window_sum_2(&r[0], &r[1], *t),
                    SampleKind::BT => bt_sum_3(&r[0], &r[1], &r[2], *t),
                    SampleKind::CT => ct_sum_3(&r[0], &r[1], &r[2], *t),
                    SampleKind::Direct => unreachable!("direct samples store a list"),
                }
                .expect("relabeled factors have the sample's shape")
            }
            Structure::List(l) => l
                .iter()
                .map(|&f| {
                    let idx = self.shape.unflat(f);
                    idx.as_slice()
                        .iter()
                        .zip(factors)
                        .map(|(&c, x)| x[c])
                        .product::<f64>()
                })
                .sum(),
        }
    }

    /// `Σ` of the stored values whose index lies in `S`.
    pub fn sum_sparse(&self, t: &SparseTensor) -> Result<f64> {
        self.shape.expect_same(&t.shape())?;
        Ok(t.entries()
            .iter()
            .filter(|(idx, _)| self.contains_unchecked(idx))
            .map(|&(_, v)| v)
            .sum())
    }
}

/// Each of `0..len` independently with probability `p`, by geometric skips.
fn bernoulli_indices(len: usize, p: f64, seed: u64) -> Vec<usize> {
    let mut rng = rng_from(derive(seed, 0xd1ec7));
    if p >= 1.0 {
        return (0..len).collect();
    }
    let log_q = (-p).ln_1p();
    let mut out = Vec::new();
    let mut pos = 0usize;
    loop {
        // Number of misses before the next hit is Geometric(p).
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if !skip.is_finite() || skip >= (len - pos) as f64 {
            break;
        }
        pos += skip as usize;
        out.push(pos);
        pos += 1;
        if pos >= len {
            break;
        }
    }
    out
}
