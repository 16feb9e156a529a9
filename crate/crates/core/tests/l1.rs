use proptest::prelude::*;
use rand::Rng;
use tensketch::rng::{derive, rng_from};
use tensketch::{
    apply_l1_dense, apply_l1_rank_one, apply_l1_sparse, build_l1, choose_l1_params, sketch_l1_norm, L1Constants,
    L1Params, ModeShape, PSample, RankOneTensor, SparseTensor,
};
use tensketch::fourwise::FourWiseSigns;
use tensketch_oracle::{dense_l1_sketch, materialize};

fn shape(q: usize, n: usize) -> ModeShape {
    ModeShape::new(q, n).unwrap()
}

fn random_rank_one(sh: ModeShape, seed: u64) -> RankOneTensor {
    let mut rng = rng_from(seed);
    RankOneTensor::new((0..sh.modes()).map(|_| (0..sh.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
        .unwrap()
}

fn small_params(sh: ModeShape, seed: u64) -> L1Params {
    L1Params { n: sh.n(), modes: sh.modes(), ratio: 0.25, buckets: 6, levels: 3, delta: 0.05, seed }
}

#[test]
fn fast_path_equals_dense_path() {
    for q in 1..=3 {
        for n in [2, 5, 12] {
            let sh = shape(q, n);
            for seed in 0..8 {
                let d = build_l1(small_params(sh, seed)).unwrap();
                let t = random_rank_one(sh, seed ^ 0xabc);
                let fast = apply_l1_rank_one(&d, &t).unwrap();
                let dense = dense_l1_sketch(&d, &materialize(&t).unwrap()).unwrap();
                let sparse = apply_l1_sparse(&d, &SparseTensor::from_rank_one(&t)).unwrap();
                for ((a, b), (c, bucket)) in fast.values().iter().zip(dense.values()).zip(sparse.values().iter().zip(d.buckets())) {
                    let scale = t.l1_norm() / bucket.scale;
                    assert!((a - b).abs() <= 1e-9 * scale.max(1.0), "q={q} n={n}: {a} vs {b}");
                    assert!((c - b).abs() <= 1e-9 * scale.max(1.0));
                }
            }
        }
    }
}

#[test]
fn dense_input_matches_sparse_input() {
    let sh = shape(2, 6);
    let d = build_l1(small_params(sh, 1)).unwrap();
    let values: Vec<f64> = (0..36).map(|i| if i % 5 == 0 { 0.0 } else { i as f64 - 17.0 }).collect();
    let a = apply_l1_dense(&d, &values).unwrap();
    let b = apply_l1_sparse(&d, &SparseTensor::from_dense(sh, &values).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(apply_l1_dense(&d, &values[..35]).is_err());
    assert!(apply_l1_rank_one(&d, &random_rank_one(shape(3, 6), 0)).is_err());
}

#[test]
fn scaling_is_exact() {
    let sh = shape(3, 5);
    let d = build_l1(small_params(sh, 2)).unwrap();
    let x = SparseTensor::from_updates(sh, (0..30).map(|i| (sh.unflat(i * 4), (i as f64) * 0.37 - 4.0))).unwrap();
    let v = apply_l1_sparse(&d, &x).unwrap();
    let v2 = apply_l1_sparse(&d, &x.scaled(2.0)).unwrap();
    for (a, b) in v.values().iter().zip(v2.values()) {
        assert_eq!(2.0 * a, *b);
    }
    let ratio = sketch_l1_norm(&v) / x.l1_norm();
    let v10 = apply_l1_sparse(&d, &x.scaled(10.0)).unwrap();
    let ratio10 = sketch_l1_norm(&v10) / x.scaled(10.0).l1_norm();
    assert!((ratio - ratio10).abs() <= 1e-12 * ratio);
}

#[test]
fn descriptor_is_a_function_of_params() {
    let sh = shape(3, 7);
    let p = choose_l1_params(sh, 0.2, L1Constants::default(), 9).unwrap();
    let json = serde_json::to_string(&p).unwrap();
    let back: L1Params = serde_json::from_str(&json).unwrap();
    let t = random_rank_one(sh, 3);
    let a = apply_l1_rank_one(&build_l1(p).unwrap(), &t).unwrap();
    let b = apply_l1_rank_one(&build_l1(back).unwrap(), &t).unwrap();
    assert_eq!(a.values(), b.values());
}

// Mean |Σ_{i∈S} σ_i x_i| over fresh samples and signs stays below
// min(√(α·p'), p') for ‖x‖₁ = 1, ‖x‖_∞ ≤ α.
#[test]
fn cancellation_bound() {
    let sh = shape(2, 20);
    let support = 200;
    let alpha = 1.0 / support as f64;
    let x = SparseTensor::from_updates(sh, (0..support).map(|i| (sh.unflat(2 * i), if i % 3 == 0 { -alpha } else { alpha })))
        .unwrap();
    for p in [0.5, 0.1, 0.02] {
        let trials = 20_000u64;
        let vals: Vec<f64> = (0..trials)
            .map(|t| {
                let s = PSample::new(sh, p, derive(1, t)).unwrap();
                let signs: Vec<Vec<i8>> =
                    (0..2).map(|m| FourWiseSigns::new(20, derive(derive(2, t), m)).to_vec()).collect();
                x.entries()
                    .iter()
                    .filter(|(idx, _)| s.contains(idx).unwrap())
                    .map(|(idx, v)| v * (signs[0][idx.get(0)] * signs[1][idx.get(1)]) as f64)
                    .sum::<f64>()
                    .abs()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let bound = (alpha * p).sqrt().min(p);
        assert!(mean <= bound + 4.0 * (var / trials as f64).sqrt(), "p={p}: {mean} vs {bound}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sketch_is_linear(
        seed in any::<u64>(),
        a in -4.0..4.0f64,
        xs in prop::collection::vec((0usize..64, -3.0..3.0f64), 0..20),
        ys in prop::collection::vec((0usize..64, -3.0..3.0f64), 0..20),
    ) {
        let sh = shape(3, 4);
        let d = build_l1(small_params(sh, seed)).unwrap();
        let to = |v: &[(usize, f64)]| SparseTensor::from_updates(sh, v.iter().map(|&(f, x)| (sh.unflat(f), x))).unwrap();
        let (x, y) = (to(&xs), to(&ys));
        let lhs = apply_l1_sparse(&d, &x.combine(&y, a, 1.0).unwrap()).unwrap();
        let rhs = d.combine(&apply_l1_sparse(&d, &x).unwrap(), &apply_l1_sparse(&d, &y).unwrap(), a, 1.0).unwrap();
        for (u, v) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()) * 64.0);
        }
    }
}
