use proptest::prelude::*;
use tensketch::rng::rng_from;
use tensketch::{L0Decode, L0Params, L0SketchDescriptor, ModeShape, RankOneTensor, SparseTensor};
use tensketch_oracle::{dense_l0_sketch, materialize};

use rand::Rng;

fn shape(q: usize, n: usize) -> ModeShape {
    ModeShape::new(q, n).unwrap()
}

fn random_rank_one(sh: ModeShape, seed: u64) -> RankOneTensor {
    let mut rng = rng_from(seed);
    RankOneTensor::new((0..sh.modes()).map(|_| (0..sh.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
        .unwrap()
}

fn assert_values_close(a: &[f64], b: &[f64], scale: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= 1e-9 * scale.max(1.0), "{x} vs {y}");
    }
}

#[test]
fn experiment_descriptor_audit() {
    let sh = shape(3, 40);
    let d = L0SketchDescriptor::build(L0Params::new(sh, 0.01, 5.0, Some(10), 1)).unwrap();
    assert_eq!(d.levels().len(), 8);
    assert_eq!(d.buckets().len(), 80);
    // 39 recovery + ⌈16·ln(8000)⌉ = 144 equality measurements per bucket.
    assert_eq!((d.recovery().count(), d.equality_count()), (39, 144));
    assert_eq!(d.dimension(), 8 * 10 * (39 + 144));
}

#[test]
fn fast_path_equals_dense_paths() {
    for q in 1..=3 {
        for n in [3, 7, 12] {
            let sh = shape(q, n);
            for seed in 0..6 {
                let d = L0SketchDescriptor::build(L0Params::new(sh, 0.1, 3.0, Some(2), seed)).unwrap();
                let t = random_rank_one(sh, seed + 100);
                let scale: f64 = t.factors().iter().map(|f| f.iter().map(|v| v.abs()).sum::<f64>()).product();
                let fast = d.sketch_rank_one(&t).unwrap();
                let sparse = d.sketch_sparse(&SparseTensor::from_rank_one(&t)).unwrap();
                let dense = dense_l0_sketch(&d, &materialize(&t).unwrap()).unwrap();
                assert_values_close(fast.values(), sparse.values(), scale);
                assert_values_close(sparse.values(), dense.values(), scale);
            }
        }
    }
}

#[test]
fn full_level_is_a_khatri_rao_measurement() {
    let sh = shape(3, 6);
    let d = L0SketchDescriptor::build(L0Params::new(sh, 0.1, 2.0, Some(1), 3)).unwrap();
    let t = random_rank_one(sh, 4);
    let v = d.sketch_rank_one(&t).unwrap();
    let direct = d.recovery().measure(&t).unwrap();
    assert_eq!(d.buckets()[0].sample.target_p(), 1.0);
    assert_values_close(&v.values()[..d.recovery().count()], &direct, 8.0);
}

#[test]
fn zero_tensor_sketches_to_zero_and_fails() {
    let sh = shape(2, 9);
    let d = L0SketchDescriptor::build(L0Params::new(sh, 0.05, 2.0, None, 5)).unwrap();
    let v = d.sketch_rank_one(&RankOneTensor::zeros(sh)).unwrap();
    assert!(v.values().iter().all(|&x| x == 0.0));
    assert_eq!(d.decode(&v).unwrap(), L0Decode::Fail);
    assert_eq!(d.sketch_sparse(&SparseTensor::empty(sh)).unwrap(), d.zeros());
}

#[test]
fn rank_one_decode_returns_a_support_entry() {
    let sh = shape(3, 10);
    let mut sampled = 0;
    for seed in 0..20 {
        let d = L0SketchDescriptor::build(L0Params::new(sh, 0.01, 5.0, Some(7), seed)).unwrap();
        let t = RankOneTensor::indicator_box(sh, &[2, 0, 5], &[3, 2, 4]).unwrap().scaled(1.5);
        if let L0Decode::Sampled(idx, v) = d.decode(&d.sketch_rank_one(&t).unwrap()).unwrap() {
            assert!((t.entry(&idx).unwrap() - 1.5).abs() < 1e-12);
            assert!((v - 1.5).abs() <= 1e-9);
            sampled += 1;
        }
    }
    assert!(sampled >= 18);
}

#[test]
fn params_round_trip_rebuilds_identically() {
    let sh = shape(3, 8);
    let p = L0Params::new(sh, 0.02, 5.0, Some(3), 42);
    let json = serde_json::to_string(&p).unwrap();
    let back: L0Params = serde_json::from_str(&json).unwrap();
    assert_eq!(back, p);
    let a = L0SketchDescriptor::build(p).unwrap();
    let b = L0SketchDescriptor::build(back).unwrap();
    let t = random_rank_one(sh, 1);
    let va = a.sketch_rank_one(&t).unwrap();
    let vb = b.sketch_rank_one(&t).unwrap();
    assert_eq!(va.values(), vb.values());
    assert_eq!(b.values_from_bytes(&va.to_bytes()).unwrap(), vb);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sketches_are_linear(
        seed in any::<u64>(),
        xs in prop::collection::vec((0usize..216, -3.0..3.0f64), 0..12),
        ys in prop::collection::vec((0usize..216, -3.0..3.0f64), 0..12),
    ) {
        let sh = shape(3, 6);
        let d = L0SketchDescriptor::build(L0Params::new(sh, 0.2, 3.0, Some(1), seed)).unwrap();
        let to = |v: &[(usize, f64)]| SparseTensor::from_updates(sh, v.iter().map(|&(f, x)| (sh.unflat(f), x))).unwrap();
        let (x, y) = (to(&xs), to(&ys));
        let lhs = d.sketch_sparse(&x.combine(&y, 1.0, 1.0).unwrap()).unwrap();
        let rhs = d.combine(&d.sketch_sparse(&x).unwrap(), &d.sketch_sparse(&y).unwrap(), 1.0, 1.0).unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}
