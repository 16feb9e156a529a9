//! Deterministic fast-summation kernels over structured index sets.
//!
//! All indices are taken in `Z/n`. The sets summed over are
//!
//! * `A_T = {(i, j) : (i + j) mod n ∈ [0, T)}`, in `O(n)`,
//! * `B_T = {(i, j, k) : (i + j + k) mod n ∈ [0, T)}`, in `O(n log n)`,
//! * `C_T = {(i, j, k) : i + j + k ≡ 0, (j − i) mod n ∈ [0, T)}`, in `O(n log² T)`.
//!
//! `C_T` reduces to multiplications by upper corners of "stride-2" Toeplitz
//! matrices (`A_{i,j} = A_{i+1,j+2}`), which are evaluated by a square plus
//! two half-size triangles recursion on top of FFT-based Toeplitz products.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{contract, Result};

/// Blocks smaller than this are multiplied naively.
pub const NAIVE_CUTOFF: usize = 16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Linear convolution of all `parts`, via one zero-padded power-of-two FFT.
pub(crate) fn linear_convolve(parts: &[&[f64]]) -> Vec<f64> {
    debug_assert!(!parts.is_empty() && parts.iter().all(|p| !p.is_empty()));
    let out_len = parts.iter().map(|p| p.len()).sum::<usize>() + 1 - parts.len();
    let size = out_len.next_power_of_two();
    let (fwd, inv) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(size), p.plan_fft_inverse(size))
    });

    let mut acc: Vec<Complex<f64>> = Vec::new();
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    for (k, part) in parts.iter().enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (c, &v) in buf.iter_mut().zip(part.iter()) {
            c.re = v;
        }
        fwd.process(&mut buf);
        if k == 0 {
            acc = buf.clone();
        } else {
            acc.iter_mut().zip(&buf).for_each(|(a, b)| *a *= b);
        }
    }
    inv.process(&mut acc);
    let scale = 1.0 / size as f64;
    // The imaginary residue is rounding noise and is discarded.
    acc[..out_len].iter().map(|c| c.re * scale).collect()
}

fn fold_mod(lin: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, &v) in lin.iter().enumerate() {
        out[k % n] += v;
    }
    out
}

fn check_window(n: usize, t: usize, lo: usize) -> Result<()> {
    if t < lo || t > n {
        return contract(format!("window size {t} outside [{lo}, {n}]"));
    }
    Ok(())
}

fn check_lengths(n: usize, others: &[&[f64]]) -> Result<()> {
    if n == 0 {
        return contract("empty input vector");
    }
    if others.iter().any(|o| o.len() != n) {
        return contract("input vectors must have equal length");
    }
    Ok(())
}

/// `Σ_{(i+j) mod n ∈ [0,T)} x_i y_j` with a rolling window, `O(n)`.
pub fn window_sum_2(x: &[f64], y: &[f64], t: usize) -> Result<f64> {
    let n = x.len();
    check_lengths(n, &[y])?;
    check_window(n, t, 0)?;
    if t == 0 {
        return Ok(0.0);
    }
    // window(i) = Σ_{j ∈ [i, i+T)} y_j pairs with x_{-i}.
    let mut window: f64 = y[..t].iter().sum();
    let mut total = 0.0;
    for i in 0..n {
        total += x[(n - i) % n] * window;
        window += y[(t + i) % n] - y[i];
    }
    Ok(total)
}

/// Circular convolution `(x * y)_k = Σ_{i+j ≡ k} x_i y_j`.
pub fn circular_convolution(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    check_lengths(n, &[y])?;
    Ok(fold_mod(&linear_convolve(&[x, y]), n))
}

/// `Σ_{(i+j+k) mod n ∈ [0,T)} x_i y_j z_k`: a prefix of `x * y * z`.
pub fn bt_sum_3(x: &[f64], y: &[f64], z: &[f64], t: usize) -> Result<f64> {
    let n = x.len();
    check_lengths(n, &[y, z])?;
    check_window(n, t, 0)?;
    if t == 0 {
        return Ok(0.0);
    }
    let conv = fold_mod(&linear_convolve(&[x, y, z]), n);
    Ok(conv[..t].iter().sum())
}

/// An `n × n` matrix constant along slope-2 diagonals.
///
/// `A_{i,j} = gen[j − 2i + 2(n−1)]`, so `gen` has one value for each
/// `d = j − 2i ∈ [−2(n−1), n−1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Stride2ToeplitzSpec {
    n: usize,
    gen: Vec<f64>,
}

impl Stride2ToeplitzSpec {
    pub fn new(n: usize, gen: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return contract("dimension must be at least 1");
        }
        if gen.len() != 3 * n - 2 {
            return contract(format!("generator length {} != 3n - 2 = {}", gen.len(), 3 * n - 2));
        }
        Ok(Self { n, gen })
    }

    /// Generator from a function of the diagonal offset `d = j − 2i`.
    pub fn from_fn(n: usize, f: impl Fn(isize) -> f64) -> Result<Self> {
        if n == 0 {
            return contract("dimension must be at least 1");
        }
        let lo = -2 * (n as isize - 1);
        let gen = (0..3 * n - 2).map(|e| f(lo + e as isize)).collect();
        Self::new(n, gen)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gen(&self) -> &[f64] {
        &self.gen
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.gen[j + 2 * (self.n - 1) - 2 * i]
    }

    fn diagonals(&self) -> Diagonals<'_> {
        Diagonals { gen: &self.gen, zero: 2 * (self.n as isize - 1) }
    }
}

/// `G(d) = gen[d + zero]`, zero outside the stored range.
#[derive(Clone, Copy)]
struct Diagonals<'a> {
    gen: &'a [f64],
    zero: isize,
}

impl Diagonals<'_> {
    fn get(&self, d: isize) -> f64 {
        let e = d + self.zero;
        if e < 0 {
            return 0.0;
        }
        self.gen.get(e as usize).copied().unwrap_or(0.0)
    }

    fn shifted(self, s: isize) -> Self {
        Self { gen: self.gen, zero: self.zero + s }
    }
}

/// `out[a] += Σ_{b < cols} G(b − 2a) v[b]` for `a < out.len()`.
fn rect_mul(g: Diagonals<'_>, v: &[f64], out: &mut [f64]) {
    let (rows, cols) = (out.len(), v.len());
    if rows == 0 || cols == 0 {
        return;
    }
    if rows < NAIVE_CUTOFF || cols < NAIVE_CUTOFF {
        for (a, o) in out.iter_mut().enumerate() {
            let base = -2 * a as isize;
            *o += v
                .iter()
                .enumerate()
                .map(|(b, &vb)| g.get(base + b as isize) * vb)
                .sum::<f64>();
        }
        return;
    }
    // Rows of the stride-2 matrix are the even rows of a Toeplitz matrix:
    // out[a] = Σ_b h[b + 2(rows−1−a)] v[b], a correlation of h with v.
    let span = 2 * (rows - 1);
    let h: Vec<f64> = (0..cols + span).map(|e| g.get(e as isize - span as isize)).collect();
    let rev: Vec<f64> = v.iter().rev().copied().collect();
    let conv = linear_convolve(&[&h, &rev]);
    for (a, o) in out.iter_mut().enumerate() {
        *o += conv[span - 2 * a + cols - 1];
    }
}

/// `out[a] += Σ_{b ≥ a} G(b − 2a) v[b]`, the upper corner of an `n × n` block.
fn corner_mul(g: Diagonals<'_>, v: &[f64], out: &mut [f64]) {
    let n = v.len();
    debug_assert_eq!(out.len(), n);
    if n < NAIVE_CUTOFF {
        for (a, o) in out.iter_mut().enumerate() {
            let base = -2 * a as isize;
            *o += (a..n).map(|b| g.get(base + b as isize) * v[b]).sum::<f64>();
        }
        return;
    }
    let m = n.div_ceil(2);
    let (v_top, v_bot) = v.split_at(m);
    let (o_top, o_bot) = out.split_at_mut(m);
    // Inscribed square: rows [0, m), columns [m, n).
    rect_mul(g.shifted(m as isize), v_bot, o_top);
    // The two remaining triangles keep the corner structure at half size.
    corner_mul(g, v_top, o_top);
    corner_mul(g.shifted(-(m as isize)), v_bot, o_bot);
}

/// `A v` for the stride-2 matrix `A` of `spec`, in `O(n log n)`.
pub fn stride2_toeplitz_mul(spec: &Stride2ToeplitzSpec, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != spec.n {
        return contract(format!("vector length {} != matrix dimension {}", v.len(), spec.n));
    }
    let mut out = vec![0.0; spec.n];
    rect_mul(spec.diagonals(), v, &mut out);
    Ok(out)
}

/// `B v` where `B` keeps the entries of `A` with `j ≥ i`, in `O(n log² n)`.
pub fn toeplitz_corner_mul(spec: &Stride2ToeplitzSpec, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != spec.n {
        return contract(format!("vector length {} != matrix dimension {}", v.len(), spec.n));
    }
    let mut out = vec![0.0; spec.n];
    corner_mul(spec.diagonals(), v, &mut out);
    Ok(out)
}

/// Sum of `x_i y_j z_k` over `C_T = {i + j + k ≡ 0, (j − i) mod n ∈ [0, T)}`.
///
/// With `s = i + j` lifted to the integers and split by parity `s = 2k + r`,
/// the inner sums `W_k = Σ_{0 ≤ k−i < a_r} x_i y_{2k+r−i}` form a band of
/// width `a_r` in a stride-2 matrix. The band is cut into `a_r × a_r` blocks:
/// lower triangles on the diagonal (reversed into upper corners) and strict
/// upper triangles just below it, each one `toeplitz_corner_mul`.
pub fn ct_sum_3(x: &[f64], y: &[f64], z: &[f64], t: usize) -> Result<f64> {
    let n = x.len();
    check_lengths(n, &[y, z])?;
    check_window(n, t, 1)?;
    let ni = n as isize;
    let y_at = |e: isize| y[e.rem_euclid(ni) as usize];
    let z_neg = |s: isize| z[(-s).rem_euclid(ni) as usize];

    let mut total = 0.0;
    for r in 0..2usize {
        if t <= r {
            continue;
        }
        // j − i = 2(k − i) + r ∈ [0, T) ⟺ k − i ∈ [0, a).
        let a = (t - 1 - r) / 2 + 1;
        let blocks = n.div_ceil(a);
        let mut xs = x.to_vec();
        xs.resize(blocks * a, 0.0);
        let mut w = vec![0.0; (blocks + 1) * a];
        let ai = a as isize;
        let lo = -2 * (ai - 1);
        let mut gen = vec![0.0; 3 * a - 2];
        let mut rev = vec![0.0; a];
        let mut part = vec![0.0; a];

        for p in 0..=blocks {
            let k0 = p * a;
            if p < blocks {
                // Diagonal block, entries with column ≤ row. Reversing rows and
                // columns turns it into an upper corner with G(e) = y(c + a − 1 + e).
                let c = (2 * k0 + r) as isize - k0 as isize;
                for (e, g) in gen.iter_mut().enumerate() {
                    *g = y_at(c + ai - 1 + lo + e as isize);
                }
                for (dst, &src) in rev.iter_mut().zip(xs[k0..k0 + a].iter().rev()) {
                    *dst = src;
                }
                part.fill(0.0);
                corner_mul(Diagonals { gen: &gen, zero: -lo }, &rev, &mut part);
                for (alpha, &v) in part.iter().rev().enumerate() {
                    w[k0 + alpha] += v;
                }
            }
            if p > 0 {
                // Block against the previous column block, strictly above its diagonal.
                let i0 = k0 - a;
                let c = (2 * k0 + r) as isize - i0 as isize;
                for (e, g) in gen.iter_mut().enumerate() {
                    *g = y_at(c - (lo + e as isize));
                }
                let cols = &xs[i0..i0 + a];
                part.fill(0.0);
                corner_mul(Diagonals { gen: &gen, zero: -lo }, cols, &mut part);
                for (alpha, &v) in part.iter().enumerate() {
                    let diag = y_at(c + alpha as isize) * cols[alpha];
                    w[k0 + alpha] += v - diag;
                }
            }
        }
        total += w
            .iter()
            .enumerate()
            .map(|(k, &wk)| z_neg((2 * k + r) as isize) * wk)
            .sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn window_sum_examples() {
        let ones = vec![1.0; 6];
        assert_eq!(window_sum_2(&ones, &ones, 3).unwrap(), 18.0);
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = [0.25, 1.0, -1.0, 2.0];
        let full = x.iter().sum::<f64>() * y.iter().sum::<f64>();
        assert!(close(window_sum_2(&x, &y, 4).unwrap(), full));
        assert_eq!(window_sum_2(&x, &y, 0).unwrap(), 0.0);
        assert!(window_sum_2(&x, &y, 5).is_err());
        assert!(window_sum_2(&x, &y[..3], 1).is_err());
    }

    #[test]
    fn convolution_examples() {
        let e0 = [1.0, 0.0, 0.0, 0.0, 0.0];
        let y = [0.5, -1.0, 2.0, 3.0, 0.0];
        let c = circular_convolution(&e0, &y).unwrap();
        assert!(c.iter().zip(&y).all(|(a, b)| close(*a, *b)));
        let ones = [1.0; 5];
        let c = circular_convolution(&ones, &ones).unwrap();
        assert!(c.iter().all(|&v| close(v, 5.0)));
        assert!(circular_convolution(&ones, &y[..4]).is_err());
    }

    #[test]
    fn bt_sum_examples() {
        let e0 = [1.0, 0.0, 0.0];
        assert!(close(bt_sum_3(&e0, &e0, &e0, 1).unwrap(), 1.0));
        let ones = [1.0; 4];
        assert!(close(bt_sum_3(&ones, &ones, &ones, 2).unwrap(), 32.0));
        assert!(bt_sum_3(&ones, &ones, &ones, 5).is_err());
    }

    #[test]
    fn stride2_delta_selects_even_columns() {
        for n in [1, 5, 16, 33] {
            let spec = Stride2ToeplitzSpec::from_fn(n, |d| if d == 0 { 1.0 } else { 0.0 }).unwrap();
            let v: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
            let out = stride2_toeplitz_mul(&spec, &v).unwrap();
            for (i, &o) in out.iter().enumerate() {
                let want = if 2 * i < n { v[2 * i] } else { 0.0 };
                assert!(close(o, want), "n={n} i={i}: {o} vs {want}");
            }
        }
    }

    #[test]
    fn stride2_constant_matrix_sums() {
        let n = 20;
        let spec = Stride2ToeplitzSpec::from_fn(n, |_| 1.0).unwrap();
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let s: f64 = v.iter().sum();
        assert!(stride2_toeplitz_mul(&spec, &v).unwrap().iter().all(|&o| close(o, s)));
    }

    #[test]
    fn corner_examples() {
        let spec = Stride2ToeplitzSpec::new(1, vec![2.5]).unwrap();
        assert_eq!(toeplitz_corner_mul(&spec, &[4.0]).unwrap(), vec![10.0]);
        for n in 1..=64 {
            let spec = Stride2ToeplitzSpec::from_fn(n, |_| 1.0).unwrap();
            let v: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
            let out = toeplitz_corner_mul(&spec, &v).unwrap();
            for i in 0..n {
                let suffix: f64 = v[i..].iter().sum();
                assert!(close(out[i], suffix), "n={n} i={i}");
            }
        }
        let spec = Stride2ToeplitzSpec::from_fn(4, |_| 1.0).unwrap();
        assert!(toeplitz_corner_mul(&spec, &[1.0; 3]).is_err());
        assert!(Stride2ToeplitzSpec::new(3, vec![0.0; 6]).is_err());
    }

    #[test]
    fn ct_sum_examples() {
        for n in [1, 2, 7, 24] {
            let ones = vec![1.0; n];
            for t in 1..=n {
                let got = ct_sum_3(&ones, &ones, &ones, t).unwrap();
                assert!(close(got, (n * t) as f64), "n={n} t={t}: {got}");
            }
        }
        let ones = [1.0; 3];
        assert!(ct_sum_3(&ones, &ones, &ones, 0).is_err());
        assert!(ct_sum_3(&ones, &ones, &ones, 4).is_err());
    }

    #[test]
    fn ct_full_window_is_zeroth_convolution_entry() {
        let n = 19;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 1.1).sin()).collect();
        let z: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let got = ct_sum_3(&x, &y, &z, n).unwrap();
        let xy = circular_convolution(&x, &y).unwrap();
        let zeroth = circular_convolution(&xy, &z).unwrap()[0];
        assert!(close(got, zeroth));
        assert!(close(got, bt_sum_3(&x, &y, &z, 1).unwrap()));
    }
}
