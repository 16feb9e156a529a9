use proptest::prelude::*;
use rand::Rng;
use tensketch::fastsum::{
    bt_sum_3, circular_convolution, ct_sum_3, stride2_toeplitz_mul, toeplitz_corner_mul, window_sum_2,
    Stride2ToeplitzSpec,
};
use tensketch::rng::rng_from;
use tensketch_oracle::kernels as naive;

const TOL: f64 = 1e-9;

fn vec_of(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn abs(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

fn assert_close(got: f64, want: f64, scale: f64, what: &str) {
    assert!(naive::close_scaled(got, want, scale, TOL), "{what}: {got} vs {want}");
}

#[test]
fn scalar_kernels_match_brute_force() {
    let mut rng = rng_from(1);
    for n in 1..=24 {
        for inst in 0..200 {
            let (x, y, z) = (vec_of(&mut rng, n), vec_of(&mut rng, n), vec_of(&mut rng, n));
            let (ax, ay, az) = (abs(&x), abs(&y), abs(&z));
            let t = rng.random_range(0..=n);
            assert_close(
                window_sum_2(&x, &y, t).unwrap(),
                naive::window_sum_2(&x, &y, t),
                naive::window_sum_2(&ax, &ay, t),
                &format!("window n={n} #{inst}"),
            );
            assert_close(
                bt_sum_3(&x, &y, &z, t).unwrap(),
                naive::bt_sum_3(&x, &y, &z, t),
                naive::bt_sum_3(&ax, &ay, &az, t),
                &format!("bt n={n} #{inst}"),
            );
            let t = rng.random_range(1..=n);
            assert_close(
                ct_sum_3(&x, &y, &z, t).unwrap(),
                naive::ct_sum_3(&x, &y, &z, t),
                naive::ct_sum_3(&ax, &ay, &az, t),
                &format!("ct n={n} T={t} #{inst}"),
            );
        }
    }
}

#[test]
fn convolution_matches_definition() {
    let mut rng = rng_from(2);
    for n in 1..=24 {
        for _ in 0..50 {
            let (x, y) = (vec_of(&mut rng, n), vec_of(&mut rng, n));
            let scale = naive::circular_convolution(&abs(&x), &abs(&y));
            let got = circular_convolution(&x, &y).unwrap();
            for ((g, w), s) in got.iter().zip(naive::circular_convolution(&x, &y)).zip(scale) {
                assert_close(*g, w, s, &format!("conv n={n}"));
            }
        }
    }
}

#[test]
fn toeplitz_products_match_brute_force() {
    let mut rng = rng_from(3);
    for n in (1..=24).chain([37, 64]) {
        for inst in 0..200 {
            let gen = vec_of(&mut rng, 3 * n - 2);
            let v = vec_of(&mut rng, n);
            let spec = Stride2ToeplitzSpec::new(n, gen.clone()).unwrap();
            let full = stride2_toeplitz_mul(&spec, &v).unwrap();
            let corner = toeplitz_corner_mul(&spec, &v).unwrap();
            let full_scale = naive::stride2_toeplitz_mul(n, &abs(&gen), &abs(&v));
            let corner_scale = naive::toeplitz_corner_mul(n, &abs(&gen), &abs(&v));
            let want_full = naive::stride2_toeplitz_mul(n, &gen, &v);
            let want_corner = naive::toeplitz_corner_mul(n, &gen, &v);
            for i in 0..n {
                assert_close(full[i], want_full[i], full_scale[i], &format!("A·v n={n} #{inst} row {i}"));
                assert_close(corner[i], want_corner[i], corner_scale[i], &format!("B·v n={n} #{inst} row {i}"));
            }
        }
    }
}

#[test]
fn toeplitz_spec_entries() {
    let spec = Stride2ToeplitzSpec::from_fn(6, |d| d as f64).unwrap();
    let m = naive::stride2_matrix(6, spec.gen());
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(spec.entry(i, j), (j as f64) - 2.0 * i as f64);
            assert_eq!(m[i][j], spec.entry(i, j));
            if i + 1 < 6 && j + 2 < 6 {
                assert_eq!(spec.entry(i, j), spec.entry(i + 1, j + 2));
            }
        }
    }
}

#[test]
fn delta_generator_selects_even_columns() {
    let n = 9;
    let spec = Stride2ToeplitzSpec::from_fn(n, |d| (d == 0) as u8 as f64).unwrap();
    let v: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
    let out = stride2_toeplitz_mul(&spec, &v).unwrap();
    for (i, o) in out.iter().enumerate() {
        let want = if 2 * i < n { v[2 * i] } else { 0.0 };
        assert!((o - want).abs() < 1e-12);
    }
}

#[test]
fn ct_full_window_is_zeroth_convolution_entry() {
    let mut rng = rng_from(4);
    for n in [1, 2, 5, 16, 31] {
        let (x, y, z) = (vec_of(&mut rng, n), vec_of(&mut rng, n), vec_of(&mut rng, n));
        let xy = naive::circular_convolution(&x, &y);
        let zeroth = naive::circular_convolution(&xy, &z)[0];
        assert_close(ct_sum_3(&x, &y, &z, n).unwrap(), zeroth, 3.0 * (n * n) as f64, "ct T=n");
    }
}

#[test]
fn out_of_range_arguments() {
    let x = vec![1.0; 4];
    assert!(window_sum_2(&x, &x, 5).is_err());
    assert!(bt_sum_3(&x, &x, &x, 5).is_err());
    assert!(ct_sum_3(&x, &x, &x, 0).is_err());
    assert!(ct_sum_3(&x, &x, &x, 5).is_err());
    assert!(window_sum_2(&x, &x[..3], 1).is_err());
    assert!(circular_convolution(&x, &x[..3]).is_err());
    let spec = Stride2ToeplitzSpec::from_fn(4, |_| 1.0).unwrap();
    assert!(stride2_toeplitz_mul(&spec, &x[..3]).is_err());
    assert!(Stride2ToeplitzSpec::new(4, vec![0.0; 9]).is_err());
}

proptest! {
    #[test]
    fn window_sum_is_shift_invariant(
        x in prop::collection::vec(-10.0..10.0f64, 1..40),
        seed in any::<u64>(),
    ) {
        let n = x.len();
        let mut rng = rng_from(seed);
        let y = vec_of(&mut rng, n);
        let t = rng.random_range(0..=n);
        let s = rng.random_range(0..n);
        // x'_i = x_{i−s}, y'_j = y_{j+s}
        let xs: Vec<f64> = (0..n).map(|i| x[(i + n - s) % n]).collect();
        let ys: Vec<f64> = (0..n).map(|j| y[(j + s) % n]).collect();
        let a = window_sum_2(&x, &y, t).unwrap();
        let b = window_sum_2(&xs, &ys, t).unwrap();
        prop_assert!(naive::close_scaled(a, b, naive::window_sum_2(&abs(&x), &abs(&y), t), TOL));
    }

    #[test]
    fn bt_sum_is_trilinear(
        seed in any::<u64>(),
        n in 1usize..30,
        alpha in -3.0..3.0f64,
    ) {
        let mut rng = rng_from(seed);
        let (x, x2, y, z) = (vec_of(&mut rng, n), vec_of(&mut rng, n), vec_of(&mut rng, n), vec_of(&mut rng, n));
        let t = rng.random_range(0..=n);
        let mix: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| alpha * a + b).collect();
        let lhs = bt_sum_3(&mix, &y, &z, t).unwrap();
        let rhs = alpha * bt_sum_3(&x, &y, &z, t).unwrap() + bt_sum_3(&x2, &y, &z, t).unwrap();
        prop_assert!(naive::close_scaled(lhs, rhs, (n * n) as f64 * 4.0, TOL));
    }
}
