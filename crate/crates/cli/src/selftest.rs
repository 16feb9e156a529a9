//! Quick oracle-equivalence suites over every module.

use rand::Rng;
use serde::Serialize;
use tensketch::fastsum::{self, Stride2ToeplitzSpec};
use tensketch::rng::{derive, rng_from};
use tensketch::sign::SignMeasurementSet;
use tensketch::{
    apply_l1_rank_one, build_l1, choose_l1_params, L0Params, L0SketchDescriptor, L1Constants, ModeShape, PSample,
    RankOneTensor, Recovery, SparseTensor,
};
use tensketch_oracle::{brute_sum, dense_l0_sketch, dense_l1_sketch, kernels, materialize};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: u64,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Suite {
    name: &'static str,
    checks: u64,
    failures: Vec<String>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self { name, checks: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    fn done(self) -> SuiteResult {
        SuiteResult { name: self.name, checks: self.checks, failures: self.failures }
    }
}

fn vec_close(a: &[f64], b: &[f64]) -> bool {
    let scale = b.iter().map(|x| x.abs()).fold(1.0, f64::max);
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| kernels::close_scaled(*x, *y, scale, TOL))
}

fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_rank_one(rng: &mut impl Rng, q: usize, n: usize) -> RankOneTensor {
    RankOneTensor::new((0..q).map(|_| random_vec(rng, n)).collect()).expect("valid factors")
}

fn fast_sum_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("fast-sum");
    let mut rng = rng_from(seed);
    for n in 1..=16usize {
        for _ in 0..10 {
            let (x, y, z) = (random_vec(&mut rng, n), random_vec(&mut rng, n), random_vec(&mut rng, n));
            let l1 = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>();
            let scale = l1(&x) * l1(&y) * l1(&z) + 1.0;
            let t = rng.random_range(1..=n);
            let w = fastsum::window_sum_2(&x, &y, t).unwrap();
            s.check(kernels::close_scaled(w, kernels::window_sum_2(&x, &y, t), scale, TOL), || {
                format!("window_sum_2 n={n} T={t}")
            });
            let b = fastsum::bt_sum_3(&x, &y, &z, t).unwrap();
            s.check(kernels::close_scaled(b, kernels::bt_sum_3(&x, &y, &z, t), scale, TOL), || {
                format!("bt_sum_3 n={n} T={t}")
            });
            let c = fastsum::ct_sum_3(&x, &y, &z, t).unwrap();
            s.check(kernels::close_scaled(c, kernels::ct_sum_3(&x, &y, &z, t), scale, TOL), || {
                format!("ct_sum_3 n={n} T={t}")
            });
            let gen = random_vec(&mut rng, 3 * n - 2);
            let spec = Stride2ToeplitzSpec::new(n, gen.clone()).unwrap();
            s.check(
                vec_close(&fastsum::stride2_toeplitz_mul(&spec, &x).unwrap(), &kernels::stride2_toeplitz_mul(n, &gen, &x)),
                || format!("stride2_toeplitz_mul n={n}"),
            );
            s.check(
                vec_close(&fastsum::toeplitz_corner_mul(&spec, &x).unwrap(), &kernels::toeplitz_corner_mul(n, &gen, &x)),
                || format!("toeplitz_corner_mul n={n}"),
            );
        }
    }
    s.done()
}

fn p_sample_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("p-sample");
    let mut rng = rng_from(seed);
    for (q, n, p) in [(2, 9, 0.5), (2, 9, 0.02), (3, 7, 0.4), (3, 7, 0.05), (3, 7, 0.005), (1, 12, 0.3)] {
        let shape = ModeShape::new(q, n).unwrap();
        for k in 0..5 {
            let sample = PSample::new(shape, p, derive(seed, k)).unwrap();
            let t = random_rank_one(&mut rng, q, n);
            let dense = materialize(&t).unwrap();
            let fast = sample.fast_sum(&t).unwrap();
            let slow = brute_sum(&sample, &dense).unwrap();
            let scale = dense.values.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
            s.check(kernels::close_scaled(fast, slow, scale, TOL), || {
                format!("{:?} q={q} n={n} p={p}: {fast} vs {slow}", sample.kind())
            });
        }
    }
    s.done()
}

fn sign_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("sign-sketch");
    let mut rng = rng_from(seed);
    for q in [2, 3] {
        let shape = ModeShape::new(q, 6).unwrap();
        let rec = SignMeasurementSet::build_recovery_set(shape, 0.01, seed).unwrap();
        for _ in 0..10 {
            let t = random_rank_one(&mut rng, q, 6);
            let fast = rec.measure(&t).unwrap();
            let slow = rec.measure_sparse(&SparseTensor::from_rank_one(&t)).unwrap();
            s.check(vec_close(&fast, &slow), || format!("measure q={q}"));
        }
        for idx in shape.indices() {
            let v = rng.random_range(0.5..2.0);
            let x = SparseTensor::from_updates(shape, [(idx, v)]).unwrap();
            let got = rec.recover_1sparse(&rec.measure_sparse(&x).unwrap()).unwrap();
            s.check(matches!(got, Recovery::Found(i, w) if i == idx && (w - v).abs() <= TOL * v), || {
                format!("1-sparse recovery q={q} at {idx:?}: {got:?}")
            });
        }
    }
    s.done()
}

fn l0_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("l0-sampler");
    let mut rng = rng_from(seed);
    for (q, n) in [(2, 8), (3, 6)] {
        let shape = ModeShape::new(q, n).unwrap();
        let d = L0SketchDescriptor::build(L0Params::new(shape, 0.1, 2.0, Some(3), seed)).unwrap();
        for _ in 0..3 {
            let t = random_rank_one(&mut rng, q, n);
            let fast = d.sketch_rank_one(&t).unwrap();
            let dense = dense_l0_sketch(&d, &materialize(&t).unwrap()).unwrap();
            s.check(vec_close(fast.values(), dense.values()), || format!("sketch_rank_one q={q} n={n}"));
            let sparse = d.sketch_sparse(&SparseTensor::from_rank_one(&t)).unwrap();
            s.check(vec_close(sparse.values(), dense.values()), || format!("sketch_sparse q={q} n={n}"));
        }
    }
    s.done()
}

fn l1_suite(seed: u64) -> SuiteResult {
    let mut s = Suite::new("l1-embedding");
    let mut rng = rng_from(seed);
    for (q, n) in [(1, 12), (2, 8), (3, 5)] {
        let shape = ModeShape::new(q, n).unwrap();
        let d = build_l1(choose_l1_params(shape, 0.1, L1Constants::default(), seed).unwrap()).unwrap();
        for _ in 0..3 {
            let t = random_rank_one(&mut rng, q, n);
            let fast = apply_l1_rank_one(&d, &t).unwrap();
            let dense = dense_l1_sketch(&d, &materialize(&t).unwrap()).unwrap();
            s.check(vec_close(fast.values(), dense.values()), || format!("apply_l1_rank_one q={q} n={n}"));
        }
    }
    s.done()
}

pub fn run_selftest(seed: u64) -> Vec<SuiteResult> {
    vec![fast_sum_suite(seed), p_sample_suite(seed), sign_suite(seed), l0_suite(seed), l1_suite(seed)]
}
