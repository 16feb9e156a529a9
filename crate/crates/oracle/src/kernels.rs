//! Definitional loops for the fast-sum kernels.

pub fn window_sum_2(x: &[f64], y: &[f64], t: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            if (i + j) % n < t {
                s += xi * yj;
            }
        }
    }
    s
}

pub fn circular_convolution(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            out[(i + j) % n] += xi * yj;
        }
    }
    out
}

pub fn bt_sum_3(x: &[f64], y: &[f64], z: &[f64], t: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            for (k, zk) in z.iter().enumerate() {
                if (i + j + k) % n < t {
                    s += xi * yj * zk;
                }
            }
        }
    }
    s
}

/// Sum over `{(i, j, k): i + j + k ≡ 0, (j − i) mod n < t}`.
pub fn ct_sum_3(x: &[f64], y: &[f64], z: &[f64], t: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if (j + n - i) % n < t {
                let k = (2 * n - i - j) % n;
                s += x[i] * y[j] * z[k];
            }
        }
    }
    s
}

/// The stride-2 matrix `A[i][j] = gen[j − 2i + 2(n−1)]` as rows.
pub fn stride2_matrix(n: usize, gen: &[f64]) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| gen[j + 2 * (n - 1) - 2 * i]).collect())
        .collect()
}

pub fn stride2_toeplitz_mul(n: usize, gen: &[f64], v: &[f64]) -> Vec<f64> {
    stride2_matrix(n, gen)
        .iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `A` restricted to its upper triangle `j ≥ i`.
pub fn toeplitz_corner_mul(n: usize, gen: &[f64], v: &[f64]) -> Vec<f64> {
    stride2_matrix(n, gen)
        .iter()
        .enumerate()
        .map(|(i, row)| (i..n).map(|j| row[j] * v[j]).sum())
        .collect()
}

/// `|a − b| ≤ tol·max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Relative closeness scaled by the magnitude of the summands, for sums
/// that cancel: `|a − b| ≤ tol·max(1, scale)`.
pub fn close_scaled(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}
