//! Wall-clock timing of the fast kernels and sketch paths.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use tensketch::fastsum::{bt_sum_3, ct_sum_3, toeplitz_corner_mul, window_sum_2, Stride2ToeplitzSpec};
use tensketch::rng::rng_from;
use tensketch::sign::SignMeasurementSet;
use tensketch::{L0Params, L0SketchDescriptor, ModeShape, Purpose, RankOneTensor};
use tensketch_oracle::{dense_l0_sketch, materialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Kernel {
    WindowSum2,
    BtSum3,
    CtSum3,
    ToeplitzCornerMul,
    SketchRankOne,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::WindowSum2 => "window_sum_2",
            Kernel::BtSum3 => "bt_sum_3",
            Kernel::CtSum3 => "ct_sum_3",
            Kernel::ToeplitzCornerMul => "toeplitz_corner_mul",
            Kernel::SketchRankOne => "sketch_rank_one",
        }
    }

    /// Default size grid for the kernel.
    pub fn default_sizes(&self) -> Vec<usize> {
        match self {
            Kernel::SketchRankOne => vec![16, 32, 64, 128, 256],
            _ => (10..=16).map(|k| 1 << k).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub kernel: &'static str,
    pub n: usize,
    pub median_seconds: f64,
}

fn median_time(reps: usize, mut f: impl FnMut()) -> f64 {
    f();
    let mut times: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// A cheap descriptor for timing: one bucket per level and a recovery set
/// that is not checked for collisions.
pub fn timing_descriptor(n: usize, seed: u64) -> CliResult<L0SketchDescriptor> {
    let shape = ModeShape::new(3, n)?;
    let params = L0Params::new(shape, 0.5, 5.0, Some(1), seed);
    let count = (2.0 * shape.len() as f64).log2().ceil() as usize + 1;
    let rec = Arc::new(SignMeasurementSet::random(shape, count, Purpose::Recovery, seed));
    Ok(L0SketchDescriptor::build_with_recovery(params, rec)?)
}

fn random_rank_one(n: usize, seed: u64) -> CliResult<RankOneTensor> {
    let mut rng = rng_from(seed);
    Ok(RankOneTensor::new((0..3).map(|_| random_vec(&mut rng, n)).collect())?)
}

pub fn bench(kernel: Kernel, sizes: &[usize], reps: usize, seed: u64) -> CliResult<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if n == 0 {
            return Err(CliError::Config("bench sizes must be positive".into()));
        }
        let mut rng = rng_from(seed ^ n as u64);
        let (x, y, z) = (random_vec(&mut rng, n), random_vec(&mut rng, n), random_vec(&mut rng, n));
        let t = n / 2;
        let secs = match kernel {
            Kernel::WindowSum2 => median_time(reps, || {
                std::hint::black_box(window_sum_2(&x, &y, t).unwrap());
            }),
            Kernel::BtSum3 => median_time(reps, || {
                std::hint::black_box(bt_sum_3(&x, &y, &z, t).unwrap());
            }),
            Kernel::CtSum3 => median_time(reps, || {
                std::hint::black_box(ct_sum_3(&x, &y, &z, t).unwrap());
            }),
            Kernel::ToeplitzCornerMul => {
                let spec = Stride2ToeplitzSpec::new(n, random_vec(&mut rng, 3 * n - 2))?;
                median_time(reps, || {
                    std::hint::black_box(toeplitz_corner_mul(&spec, &x).unwrap());
                })
            }
            Kernel::SketchRankOne => {
                let d = timing_descriptor(n, seed)?;
                let t = random_rank_one(n, seed)?;
                median_time(reps, || {
                    std::hint::black_box(d.sketch_rank_one(&t).unwrap());
                })
            }
        };
        rows.push(BenchRow { kernel: kernel.name(), n, median_seconds: secs });
    }
    Ok(rows)
}

/// Least-squares slope of `log t` against `log n`.
pub fn log_log_slope(rows: &[BenchRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.median_seconds.max(1e-12).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathComparison {
    pub n: usize,
    pub fast_seconds: f64,
    pub dense_seconds: f64,
}

/// Rank-one sketch against enumeration of the materialized tensor.
pub fn compare_sketch_paths(n: usize, reps: usize, seed: u64) -> CliResult<PathComparison> {
    let d = timing_descriptor(n, seed)?;
    let t = random_rank_one(n, seed)?;
    let fast_seconds = median_time(reps, || {
        std::hint::black_box(d.sketch_rank_one(&t).unwrap());
    });
    let dense = materialize(&t)?;
    let start = Instant::now();
    std::hint::black_box(dense_l0_sketch(&d, &dense)?);
    Ok(PathComparison { n, fast_seconds, dense_seconds: start.elapsed().as_secs_f64() })
}
