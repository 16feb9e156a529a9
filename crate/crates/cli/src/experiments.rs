//! ℓ0 sampling on box-shaped supports over `[n]³`.

use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use tensketch::rng::{derive, rng_from};
use tensketch::sign::SignMeasurementSet;
use tensketch::{L0Decode, L0Params, L0SketchDescriptor, ModeShape, MultiIndex, RankOneTensor, SparseTensor};
use tensketch_oracle::{perfect_decode, Tester};

use crate::error::{CliError, CliResult};

pub type Dims = [usize; 3];

/// Rows of the disjoint-box study.
pub const TABLE1: [(Dims, Dims); 12] = [
    ([1, 1, 20], [1, 1, 1]),
    ([1, 10, 20], [1, 1, 1]),
    ([1, 20, 20], [1, 1, 1]),
    ([20, 20, 20], [1, 1, 1]),
    ([1, 1, 20], [10, 10, 10]),
    ([1, 10, 20], [10, 10, 10]),
    ([1, 20, 20], [10, 10, 10]),
    ([20, 20, 20], [10, 10, 10]),
    ([1, 1, 20], [20, 20, 20]),
    ([1, 10, 20], [20, 20, 20]),
    ([1, 20, 20], [20, 20, 20]),
    ([20, 20, 20], [20, 20, 20]),
];

/// Every box shape with sides in {1, 3, 9, 27} for the box-plus-random study.
pub const TABLE2: [Dims; 64] = {
    let sides = [1, 3, 9, 27];
    let mut out = [[0; 3]; 64];
    let mut i = 0;
    while i < 64 {
        out[i] = [sides[i / 16], sides[i / 4 % 4], sides[i % 4]];
        i += 1;
    }
    out
};

/// The ten-row subset used for quick reproduction runs.
pub const TABLE2_SUBSET: [Dims; 10] = [
    [1, 1, 1],
    [3, 3, 3],
    [9, 9, 9],
    [27, 27, 27],
    [1, 1, 27],
    [27, 1, 1],
    [1, 27, 1],
    [9, 27, 3],
    [3, 9, 27],
    [27, 27, 27],
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub trials: u64,
    pub level_base: f64,
    pub buckets: usize,
    pub delta: f64,
    pub seed: u64,
    #[serde(serialize_with = "tester_name")]
    pub tester: Tester,
}

fn tester_name<S: serde::Serializer>(t: &Tester, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match t {
        Tester::Real => "real",
        Tester::Perfect => "oracle",
    })
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { n: 40, trials: 1000, level_base: 5.0, buckets: 10, delta: 0.01, seed: 1, tester: Tester::Real }
    }
}

impl ExperimentConfig {
    fn shape(&self) -> CliResult<ModeShape> {
        Ok(ModeShape::new(3, self.n)?)
    }

    fn check(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be positive".into()));
        }
        if !(self.level_base > 1.0) {
            return Err(CliError::Config(format!("level base {} must exceed 1", self.level_base)));
        }
        if self.buckets == 0 {
            return Err(CliError::Config("buckets must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Config(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }

    fn check_dims(&self, d: &Dims) -> CliResult<()> {
        if d.iter().any(|&x| x == 0 || x > self.n) {
            return Err(CliError::Config(format!("box {} does not fit in [{}]^3", fmt_dims(d), self.n)));
        }
        Ok(())
    }

    fn recovery(&self, shape: ModeShape) -> CliResult<Option<Arc<SignMeasurementSet>>> {
        Ok(match self.tester {
            Tester::Perfect => None,
            Tester::Real => Some(Arc::new(SignMeasurementSet::build_recovery_set(
                shape,
                self.delta,
                derive(self.seed, 0x7265_63),
            )?)),
        })
    }

    fn descriptor(
        &self,
        shape: ModeShape,
        recovery: &Option<Arc<SignMeasurementSet>>,
        seed: u64,
    ) -> CliResult<L0SketchDescriptor> {
        let params = L0Params::new(shape, self.delta, self.level_base, Some(self.buckets), seed);
        Ok(match recovery {
            Some(rec) => L0SketchDescriptor::build_with_recovery(params, rec.clone())?,
            None => L0SketchDescriptor::build(params)?,
        })
    }
}

pub fn fmt_dims(d: &Dims) -> String {
    format!("({}, {}, {})", d[0], d[1], d[2])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RectRow {
    pub first: Dims,
    pub second: Dims,
    pub first_fraction: f64,
    pub expected_fraction: f64,
    pub failures: u64,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomRow {
    pub shape: Dims,
    pub box_fraction: f64,
    pub failures: u64,
    pub samples: u64,
}

fn volume(d: &Dims) -> usize {
    d.iter().product()
}

/// Outcome of one decode: `Some(true)` for the first class, `Some(false)`
/// for the second, `None` for a failure or a non-support index.
type Tally = (u64, u64, u64);

fn tally(outcomes: impl ParallelIterator<Item = CliResult<Option<bool>>>) -> CliResult<Tally> {
    outcomes
        .map(|o| {
            o.map(|o| match o {
                Some(true) => (1, 0, 0),
                Some(false) => (0, 1, 0),
                None => (0, 0, 1),
            })
        })
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))
}

fn fraction(hits: u64, total: u64) -> f64 {
    if total == 0 {
        f64::NAN
    } else {
        hits as f64 / total as f64
    }
}

fn box_entries(origin: Dims, dims: Dims) -> impl Iterator<Item = MultiIndex> {
    (0..dims[0]).flat_map(move |a| {
        (0..dims[1]).flat_map(move |b| (0..dims[2]).map(move |c| [origin[0] + a, origin[1] + b, origin[2] + c].into()))
    })
}

fn in_box(idx: &MultiIndex, origin: &Dims, dims: &Dims) -> bool {
    (0..3).all(|m| idx.get(m) >= origin[m] && idx.get(m) < origin[m] + dims[m])
}

/// Two boxes, the first at the origin and the second against the far corner.
pub fn run_disjoint_rectangles(cfg: &ExperimentConfig, rows: &[(Dims, Dims)]) -> CliResult<Vec<RectRow>> {
    cfg.check()?;
    let shape = cfg.shape()?;
    let n = cfg.n;
    for (a, b) in rows {
        cfg.check_dims(a)?;
        cfg.check_dims(b)?;
        if (0..3).all(|m| a[m] + b[m] > n) {
            return Err(CliError::Config(format!("boxes {} and {} overlap", fmt_dims(a), fmt_dims(b))));
        }
    }
    let recovery = cfg.recovery(shape)?;
    rows.iter()
        .enumerate()
        .map(|(r, (a, b))| {
            let o1 = [0, 0, 0];
            let o2 = [n - b[0], n - b[1], n - b[2]];
            let support = SparseTensor::from_updates(
                shape,
                box_entries(o1, *a).chain(box_entries(o2, *b)).map(|i| (i, 1.0)),
            )?;
            assert_eq!(support.nnz(), volume(a) + volume(b), "disjoint after placement");
            let boxes = [
                RankOneTensor::indicator_box(shape, &o1, a)?,
                RankOneTensor::indicator_box(shape, &o2, b)?,
            ];
            let row_seed = derive(cfg.seed, r as u64);
            let (first, second, failures) = tally((0..cfg.trials).into_par_iter().map(|t| {
                let d = cfg.descriptor(shape, &recovery, derive(row_seed, t))?;
                let out = match cfg.tester {
                    Tester::Perfect => perfect_decode(&d, &support),
                    Tester::Real => {
                        let v = d.combine(&d.sketch_rank_one(&boxes[0])?, &d.sketch_rank_one(&boxes[1])?, 1.0, 1.0)?;
                        d.decode(&v)?
                    }
                };
                Ok(match out {
                    L0Decode::Sampled(idx, v) if (v - 1.0).abs() <= 1e-9 => {
                        if in_box(&idx, &o1, a) {
                            Some(true)
                        } else if in_box(&idx, &o2, b) {
                            Some(false)
                        } else {
                            None
                        }
                    }
                    _ => None,
                })
            }))?;
            Ok(RectRow {
                first: *a,
                second: *b,
                first_fraction: fraction(first, first + second),
                expected_fraction: volume(a) as f64 / (volume(a) + volume(b)) as f64,
                failures,
                samples: first + second,
            })
        })
        .collect()
}

/// `count` distinct uniform indices of `[n]³` outside the box.
fn random_outside(n: usize, origin: &Dims, dims: &Dims, count: usize, seed: u64) -> Vec<MultiIndex> {
    let mut rng = rng_from(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let idx: MultiIndex = [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)].into();
        if !in_box(&idx, origin, dims) && seen.insert(idx) {
            out.push(idx);
        }
    }
    out
}

/// A box at the origin plus as many distinct random entries outside it.
pub fn run_rect_plus_random(cfg: &ExperimentConfig, rows: &[Dims]) -> CliResult<Vec<RandomRow>> {
    cfg.check()?;
    let shape = cfg.shape()?;
    for d in rows {
        cfg.check_dims(d)?;
        if 2 * volume(d) > shape.len() {
            return Err(CliError::Config(format!(
                "box {} leaves fewer than {} entries outside it",
                fmt_dims(d),
                volume(d)
            )));
        }
    }
    let recovery = cfg.recovery(shape)?;
    let origin = [0, 0, 0];
    rows.iter()
        .enumerate()
        .map(|(r, dims)| {
            let boxed = RankOneTensor::indicator_box(shape, &origin, dims)?;
            let row_seed = derive(cfg.seed, 0x7232_0000 + r as u64);
            let (inside, outside, failures) = tally((0..cfg.trials).into_par_iter().map(|t| {
                let trial_seed = derive(row_seed, t);
                let extra = random_outside(cfg.n, &origin, dims, volume(dims), derive(trial_seed, 1));
                let random = SparseTensor::from_updates(shape, extra.iter().map(|&i| (i, 1.0)))?;
                let d = cfg.descriptor(shape, &recovery, derive(trial_seed, 2))?;
                let out = match cfg.tester {
                    Tester::Perfect => {
                        let support = SparseTensor::from_rank_one(&boxed).combine(&random, 1.0, 1.0)?;
                        perfect_decode(&d, &support)
                    }
                    Tester::Real => {
                        let v = d.combine(&d.sketch_rank_one(&boxed)?, &d.sketch_sparse(&random)?, 1.0, 1.0)?;
                        d.decode(&v)?
                    }
                };
                Ok(match out {
                    L0Decode::Sampled(idx, v) if (v - 1.0).abs() <= 1e-9 => {
                        if in_box(&idx, &origin, dims) {
                            Some(true)
                        } else if extra.contains(&idx) {
                            Some(false)
                        } else {
                            None
                        }
                    }
                    _ => None,
                })
            }))?;
            Ok(RandomRow {
                shape: *dims,
                box_fraction: fraction(inside, inside + outside),
                failures,
                samples: inside + outside,
            })
        })
        .collect()
}
