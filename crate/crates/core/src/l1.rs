//! The ℓ1-embedding sketch.
//!
//! Level `h ∈ {−1, 0, …, ℓ−1}` uses scale `p_h = r^h` and holds `T`
//! independent `(p_h/T)`-sample buckets. A bucket stores
//! `(1/p_h)·Σ_{i∈S} σ(i)·x_i` where `σ` is the Kronecker product of one
//! four-wise sign vector per mode.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SketchError};
use crate::fourwise::FourWiseSigns;
use crate::l0::{f64s_from_bytes, f64s_to_bytes};
use crate::psample::PSample;
use crate::rng::{derive, mix64};
use crate::tensor::{ModeShape, RankOneTensor, SparseTensor};

const SAMPLE_STREAM: u64 = 0x6c31_7073;
const SIGN_STREAM: u64 = 0x6c31_7367;

/// Absolute constants of the parameter chooser: `1/r = c1·max(ln(1/δ)·ℓ, ℓ²)`
/// and `T = ⌈c2/r²⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Constants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for L1Constants {
    /// `c1 = 2` keeps `T·r³ < 1/ℓ²` strict; with `c1 = c2` it holds with equality.
    fn default() -> Self {
        Self { c1: 2.0, c2: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Params {
    pub n: usize,
    pub modes: usize,
    pub ratio: f64,
    pub buckets: usize,
    pub levels: usize,
    pub delta: f64,
    pub seed: u64,
}

impl L1Params {
    pub fn shape(&self) -> Result<ModeShape> {
        ModeShape::new(self.modes, self.n)
    }

    /// Sketch dimension `(ℓ+1)·T`.
    pub fn dimension(&self) -> usize {
        (self.levels + 1) * self.buckets
    }

    fn fingerprint(&self) -> u64 {
        [
            self.n as u64,
            self.modes as u64,
            self.ratio.to_bits(),
            self.buckets as u64,
            self.levels as u64,
            self.delta.to_bits(),
            self.seed,
        ]
        .iter()
        .fold(0x6c31, |h, &v| mix64(h ^ v))
    }
}

/// Levels needed to reach `n^q` with ratio `r`: least `L ≥ 1` with `(1/r)^L ≥ n^q`.
pub fn levels_for_ratio(shape: ModeShape, ratio: f64) -> usize {
    let size = shape.len() as f64;
    let mut levels = 0;
    let mut reach = 1.0;
    while levels == 0 || reach < size * (1.0 - 1e-12) {
        reach /= ratio;
        levels += 1;
    }
    levels
}

fn ratio_for_levels(levels: usize, delta: f64, c: L1Constants) -> f64 {
    let l = levels as f64;
    1.0 / (c.c1 * ((1.0 / delta).ln() * l).max(l * l))
}

/// Picks `(r, T, ℓ)` for the given failure target.
pub fn choose_l1_params(shape: ModeShape, delta: f64, c: L1Constants, seed: u64) -> Result<L1Params> {
    if !(delta > 0.0 && delta < 1.0) {
        return contract(format!("delta {delta} outside (0, 1)"));
    }
    if !(c.c1 > 0.0 && c.c2 > 0.0) {
        return contract("chooser constants must be positive");
    }
    let next = |l: usize| levels_for_ratio(shape, ratio_for_levels(l, delta, c));
    let mut l = ((shape.len() as f64).ln().ceil() as usize).max(1);
    let mut seen = vec![l];
    let levels = loop {
        let step = next(l);
        if step == l {
            break l;
        }
        if seen.contains(&step) {
            // A cycle: take the least self-consistent level count.
            let top = *seen.iter().max().expect("nonempty");
            break (1..=top).find(|&k| next(k) <= k).unwrap_or(top);
        }
        seen.push(step);
        l = step;
    };
    let ratio = ratio_for_levels(levels, delta, c);
    let buckets = (c.c2 / (ratio * ratio) * (1.0 - 1e-12)).ceil() as usize;
    Ok(L1Params {
        n: shape.n(),
        modes: shape.modes(),
        ratio,
        buckets: buckets.max(1),
        levels,
        delta,
        seed,
    })
}

/// Slack in each parameter inequality at constant `c`; nonnegative means it holds
/// (the strict inequality needs a strictly positive margin).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintAudit {
    /// `1/r − c·ln(1/δ)·ℓ`
    pub ratio_vs_delta: f64,
    /// `T − c/r²`
    pub buckets_vs_ratio: f64,
    /// `1/ℓ² − T·r³`, strict
    pub cubic_mass: f64,
    /// `c/ℓ − r`
    pub ratio_vs_levels: f64,
    /// All four hold.
    pub satisfied: bool,
}

pub fn audit_constraints(p: &L1Params, c: f64) -> ConstraintAudit {
    let (r, t, l) = (p.ratio, p.buckets as f64, p.levels as f64);
    let ratio_vs_delta = 1.0 / r - c * (1.0 / p.delta).ln() * l;
    let buckets_vs_ratio = t - c / (r * r);
    let cubic_mass = 1.0 / (l * l) - t * r * r * r;
    let ratio_vs_levels = c / l - r;
    let satisfied = ratio_vs_delta >= 0.0
        && buckets_vs_ratio >= -1e-9
        && cubic_mass > 0.0
        && ratio_vs_levels >= 0.0;
    ConstraintAudit { ratio_vs_delta, buckets_vs_ratio, cubic_mass, ratio_vs_levels, satisfied }
}

#[derive(Clone, Debug)]
pub struct L1Bucket {
    /// Level index `h ≥ −1`.
    pub level: i32,
    pub scale: f64,
    pub sample: PSample,
    pub signs: Vec<FourWiseSigns>,
    sign_vectors: Vec<Vec<i8>>,
}

impl L1Bucket {
    pub fn sign_vectors(&self) -> &[Vec<i8>] {
        &self.sign_vectors
    }

    fn sign_of(&self, idx: &crate::tensor::MultiIndex) -> f64 {
        let neg = idx.as_slice().iter().zip(&self.sign_vectors).filter(|(&c, s)| s[c] < 0).count();
        if neg % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct L1SketchDescriptor {
    params: L1Params,
    shape: ModeShape,
    buckets: Vec<L1Bucket>,
    fingerprint: u64,
}

/// Level-major bucket values.
#[derive(Clone, Debug, PartialEq)]
pub struct L1SketchValues {
    fingerprint: u64,
    values: Vec<f64>,
}

pub fn build_l1(params: L1Params) -> Result<L1SketchDescriptor> {
    let shape = params.shape()?;
    let (r, t) = (params.ratio, params.buckets);
    if !(r > 0.0 && r < 1.0) {
        return contract(format!("ratio {r} outside (0, 1)"));
    }
    if t == 0 || params.levels == 0 {
        return contract("need at least one level and one bucket");
    }
    if 1.0 / r / t as f64 > 1.0 + 1e-12 {
        return Err(SketchError::Construction(format!(
            "level -1 would sample with probability {} > 1",
            1.0 / r / t as f64
        )));
    }
    let sample_seed = derive(params.seed, SAMPLE_STREAM);
    let sign_seed = derive(params.seed, SIGN_STREAM);
    let mut buckets = Vec::with_capacity(params.dimension());
    for h in -1..params.levels as i32 {
        let scale = r.powi(h);
        let p = (scale / t as f64).min(1.0);
        for k in 0..t {
            let id = buckets.len() as u64;
            let signs: Vec<FourWiseSigns> = (0..shape.modes())
                .map(|m| FourWiseSigns::new(shape.n(), derive(derive(sign_seed, id), m as u64)))
                .collect();
            let sign_vectors = signs.iter().map(FourWiseSigns::to_vec).collect();
            buckets.push(L1Bucket {
                level: h,
                scale,
                sample: PSample::new(shape, p, derive(sample_seed, id))?,
                signs,
                sign_vectors,
            });
            debug_assert_eq!(buckets.len(), ((h + 1) as usize) * t + k + 1);
        }
    }
    let fingerprint = params.fingerprint();
    Ok(L1SketchDescriptor { params, shape, buckets, fingerprint })
}

impl L1SketchDescriptor {
    pub fn params(&self) -> &L1Params {
        &self.params
    }

    pub fn shape(&self) -> ModeShape {
        self.shape
    }

    pub fn buckets(&self) -> &[L1Bucket] {
        &self.buckets
    }

    pub fn dimension(&self) -> usize {
        self.buckets.len()
    }

    pub fn zeros(&self) -> L1SketchValues {
        L1SketchValues { fingerprint: self.fingerprint, values: vec![0.0; self.dimension()] }
    }

    /// Wraps raw values produced elsewhere for this descriptor's layout.
    pub fn values_from_vec(&self, values: Vec<f64>) -> Result<L1SketchValues> {
        if values.len() != self.dimension() {
            return contract(format!("{} values for {} buckets", values.len(), self.dimension()));
        }
        Ok(L1SketchValues { fingerprint: self.fingerprint, values })
    }

    pub fn values_from_bytes(&self, bytes: &[u8]) -> Result<L1SketchValues> {
        self.values_from_vec(f64s_from_bytes(bytes)?)
    }

    fn check_values(&self, v: &L1SketchValues) -> Result<()> {
        if v.fingerprint != self.fingerprint || v.values.len() != self.dimension() {
            return contract("sketch values were not produced by this descriptor");
        }
        Ok(())
    }

    /// `alpha·a + beta·b`.
    pub fn combine(&self, a: &L1SketchValues, b: &L1SketchValues, alpha: f64, beta: f64) -> Result<L1SketchValues> {
        self.check_values(a)?;
        self.check_values(b)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| alpha * x + beta * y).collect();
        Ok(L1SketchValues { fingerprint: self.fingerprint, values })
    }
}

/// Fast path: one p-sample sum of the sign-flipped factors per bucket.
pub fn apply_l1_rank_one(d: &L1SketchDescriptor, t: &RankOneTensor) -> Result<L1SketchValues> {
    d.shape.expect_same(&t.shape())?;
    let values = d
        .buckets
        .par_iter()
        .map(|b| {
            let signed: Vec<Vec<f64>> = t
                .factors()
                .iter()
                .zip(&b.sign_vectors)
                .map(|(f, s)| f.iter().zip(s).map(|(&v, &s)| v * s as f64).collect())
                .collect();
            let slices: Vec<&[f64]> = signed.iter().map(Vec::as_slice).collect();
            b.sample.sum_factors(&slices) / b.scale
        })
        .collect();
    Ok(L1SketchValues { fingerprint: d.fingerprint, values })
}

/// General path: membership test and signed accumulation per entry.
pub fn apply_l1_sparse(d: &L1SketchDescriptor, x: &SparseTensor) -> Result<L1SketchValues> {
    d.shape.expect_same(&x.shape())?;
    let values = d
        .buckets
        .par_iter()
        .map(|b| {
            let sum: f64 = x
                .entries()
                .iter()
                .filter(|(idx, _)| b.sample.contains_unchecked(idx))
                .map(|(idx, v)| b.sign_of(idx) * v)
                .sum();
            sum / b.scale
        })
        .collect();
    Ok(L1SketchValues { fingerprint: d.fingerprint, values })
}

/// Dense input in row-major order over `[n]^q`.
pub fn apply_l1_dense(d: &L1SketchDescriptor, x: &[f64]) -> Result<L1SketchValues> {
    apply_l1_sparse(d, &SparseTensor::from_dense(d.shape, x)?)
}

pub fn sketch_l1_norm(vals: &L1SketchValues) -> f64 {
    vals.values.iter().map(|v| v.abs()).sum()
}

impl L1SketchValues {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        f64s_to_bytes(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::MultiIndex;

    fn shape(q: usize, n: usize) -> ModeShape {
        ModeShape::new(q, n).unwrap()
    }

    fn params(sh: ModeShape, ratio: f64, buckets: usize, levels: usize, seed: u64) -> L1Params {
        L1Params { n: sh.n(), modes: sh.modes(), ratio, buckets, levels, delta: 0.05, seed }
    }

    #[test]
    fn level_minus_one_overflow_is_rejected() {
        let err = build_l1(params(shape(2, 8), 0.5, 1, 1, 0)).unwrap_err();
        assert!(matches!(err, SketchError::Construction(_)));
        assert_eq!(build_l1(params(shape(2, 8), 0.5, 2, 1, 0)).unwrap().dimension(), 4);
    }

    #[test]
    fn default_dimension_n40_q3() {
        let p = choose_l1_params(shape(3, 40), 0.05, L1Constants::default(), 1).unwrap();
        assert_eq!((p.levels, p.buckets), (4, 1024));
        assert_eq!(p.ratio, 1.0 / 32.0);
        assert_eq!(p.dimension(), 5 * 1024);
        assert!(audit_constraints(&p, 1.0).satisfied);
    }

    #[test]
    fn chooser_fixture_unit_constants() {
        let c = L1Constants { c1: 1.0, c2: 1.0 };
        let p = choose_l1_params(shape(2, 64), 0.1, c, 0).unwrap();
        assert_eq!((p.levels, p.buckets), (4, 256));
        assert_eq!(p.ratio, 1.0 / 16.0);
        let audit = audit_constraints(&p, 1.0);
        assert!(audit.ratio_vs_delta >= 0.0 && audit.buckets_vs_ratio >= 0.0 && audit.ratio_vs_levels >= 0.0);
        // T·r³ = 1/ℓ² exactly: the strict inequality fails at c1 = c2.
        assert_eq!(audit.cubic_mass, 0.0);
        assert!(!audit.satisfied);
    }

    #[test]
    fn chooser_is_self_consistent() {
        for (q, n) in [(1, 2), (2, 5), (2, 64), (3, 12), (3, 40), (3, 100)] {
            for delta in [0.5, 0.1, 0.01, 1e-4] {
                let p = choose_l1_params(shape(q, n), delta, L1Constants::default(), 0).unwrap();
                assert!(levels_for_ratio(shape(q, n), p.ratio) <= p.levels);
                assert!(audit_constraints(&p, 1.0).satisfied, "{q} {n} {delta}: {p:?}");
                assert!(build_l1(p).is_ok());
            }
        }
    }

    #[test]
    fn ratio_shrinks_with_delta() {
        let sh = shape(2, 64);
        let c = L1Constants::default();
        let ratio = |d| ratio_for_levels(choose_l1_params(sh, d, c, 0).unwrap().levels, d, c);
        let mut last = f64::INFINITY;
        for d in [0.5, 0.1, 1e-2, 1e-4, 1e-8] {
            let r = choose_l1_params(sh, d, c, 0).unwrap().ratio;
            assert_eq!(r, ratio(d));
            assert!(r <= last);
            last = r;
        }
        // At fixed ℓ the ln(1/δ) term dominates eventually and r strictly decreases.
        assert!(ratio_for_levels(3, 1e-6, c) < ratio_for_levels(3, 1e-5, c));
    }

    #[test]
    fn same_seed_same_descriptor() {
        let p = params(shape(3, 6), 0.25, 8, 2, 11);
        let a = build_l1(p.clone()).unwrap();
        let b = build_l1(p).unwrap();
        for (x, y) in a.buckets().iter().zip(b.buckets()) {
            assert_eq!(x.sign_vectors(), y.sign_vectors());
            assert_eq!(x.sample.seed(), y.sample.seed());
        }
    }

    #[test]
    fn zero_and_norm_examples() {
        let sh = shape(2, 6);
        let d = build_l1(params(sh, 0.25, 4, 2, 3)).unwrap();
        let z = apply_l1_rank_one(&d, &RankOneTensor::zeros(sh)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert_eq!(sketch_l1_norm(&z), 0.0);
        let mut raw = vec![0.0; d.dimension()];
        raw[3] = -2.5;
        assert_eq!(sketch_l1_norm(&d.values_from_vec(raw).unwrap()), 2.5);
    }

    #[test]
    fn full_sample_level_is_product_of_inner_products() {
        let sh = shape(3, 5);
        // T = 1/r makes level −1 a full sample.
        let d = build_l1(params(sh, 0.5, 2, 1, 4)).unwrap();
        let t = RankOneTensor::new(vec![vec![1.0, -2.0, 0.5, 3.0, 1.0]; 3]).unwrap();
        let v = apply_l1_rank_one(&d, &t).unwrap();
        for (b, got) in d.buckets().iter().zip(v.values()).take(2) {
            assert_eq!(b.sample.target_p(), 1.0);
            let prod: f64 = t
                .factors()
                .iter()
                .zip(b.sign_vectors())
                .map(|(f, s)| f.iter().zip(s).map(|(&x, &s)| x * s as f64).sum::<f64>())
                .product();
            assert!((got - prod / b.scale).abs() <= 1e-12 * prod.abs().max(1.0));
        }
    }

    #[test]
    fn basis_vector_lands_in_its_buckets() {
        let sh = shape(2, 7);
        let d = build_l1(params(sh, 0.2, 6, 2, 5)).unwrap();
        let j: MultiIndex = [4, 2].into();
        let x = SparseTensor::from_updates(sh, [(j, 1.0)]).unwrap();
        let v = apply_l1_sparse(&d, &x).unwrap();
        for (b, got) in d.buckets().iter().zip(v.values()) {
            let want = if b.sample.contains(&j).unwrap() { b.sign_of(&j) / b.scale } else { 0.0 };
            assert_eq!(*got, want);
        }
    }

    #[test]
    fn bytes_round_trip() {
        let sh = shape(2, 4);
        let d = build_l1(params(sh, 0.5, 2, 2, 6)).unwrap();
        let t = RankOneTensor::new(vec![vec![1.0, 2.0, 3.0, 4.0]; 2]).unwrap();
        let v = apply_l1_rank_one(&d, &t).unwrap();
        assert_eq!(d.values_from_bytes(&v.to_bytes()).unwrap(), v);
        let json = serde_json::to_string(d.params()).unwrap();
        let p: L1Params = serde_json::from_str(&json).unwrap();
        assert_eq!(&p, d.params());
    }
}
