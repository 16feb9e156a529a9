//! Empirical ℓ1 distortion of the embedding sketch.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use tensketch::rng::{derive, rng_from};
use tensketch::{
    apply_l1_rank_one, apply_l1_sparse, build_l1, choose_l1_params, sketch_l1_norm, L1Constants, L1Params,
    L1SketchDescriptor, L1SketchValues, ModeShape, RankOneTensor, SparseTensor,
};

use crate::error::{CliError, CliResult};

/// Contraction threshold: a sketch below this fraction of the planted mass counts as a failure.
pub const CONTRACTION_C: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputFamily {
    /// Rank-one tensors with uniform `[-1, 1]` factors.
    RankOne,
    /// A single level set: `s` random entries of magnitude `1/s`, random signs.
    PlantedLevel,
    /// One nonzero entry.
    Spike,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionConfig {
    pub n: usize,
    pub modes: usize,
    pub trials: u64,
    pub delta: f64,
    pub family: InputFamily,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub config: DistortionConfig,
    pub params: L1Params,
    /// Smallest and largest observed `‖Sx‖₁/‖x‖₁`.
    pub c1: f64,
    pub c2: f64,
    pub median: f64,
    /// `(upper edge, count)` of a log-spaced histogram of the ratio.
    pub histogram: Vec<(f64, u64)>,
    /// Trials where the planted level's sketch level fell below
    /// `CONTRACTION_C·‖x_L‖₁` (planted family), or where the whole sketch
    /// fell below `CONTRACTION_C·‖x‖₁` (other families).
    pub contraction_failures: u64,
    /// Trials exceeding the dilation bound.
    pub dilation_failures: u64,
    /// Failure fraction the dilation bound allows, `Σ_h p_h/β_h + 1/10`.
    pub dilation_allowance: f64,
}

/// Dilation bound for `x` with `‖x‖₁ = 1`:
/// `10·(Σ_h ‖x_{[α_h, β_h]}‖₁ + Σ_h min(√(T·α_h/p_h), 1))` with
/// `α_h = r^{h+3}`, `β_h = r^{h−1}` over all sketch levels `h`.
pub fn dilation_bound(p: &L1Params, normalized: &SparseTensor) -> f64 {
    let r = p.ratio;
    let t = p.buckets as f64;
    (-1..p.levels as i32)
        .map(|h| {
            let (alpha, beta, ph) = (r.powi(h + 3), r.powi(h - 1), r.powi(h));
            let band: f64 = normalized
                .entries()
                .iter()
                .map(|(_, v)| v.abs())
                .filter(|&a| a >= alpha && a <= beta)
                .sum();
            band + (t * alpha / ph).sqrt().min(1.0)
        })
        .sum::<f64>()
        * 10.0
}

pub fn dilation_allowance(p: &L1Params) -> f64 {
    (p.levels + 1) as f64 * p.ratio + 0.1
}

/// Level `h` whose sampling rate suits a level set of `s` entries of
/// magnitude `1/s`: the set lies in `(r^{i+1}, r^i]`, and level `i − 1` sees it.
pub fn planted_level(p: &L1Params, s: usize) -> i32 {
    let i = ((s as f64).ln() / (1.0 / p.ratio).ln() + 1e-12).floor() as i32;
    (i - 1).max(-1)
}

/// Largest planted size whose level keeps `(p_h/T)·s ≤ 1/4`, scanning down from `max`.
fn planted_sizes(p: &L1Params, max: usize) -> Vec<usize> {
    (1..=max)
        .filter(|&s| {
            let h = planted_level(p, s);
            h < p.levels as i32 && p.ratio.powi(h) / p.buckets as f64 * s as f64 <= 0.25
        })
        .collect()
}

fn level_mass(d: &L1SketchDescriptor, v: &L1SketchValues, level: i32) -> f64 {
    d.buckets().iter().zip(v.values()).filter(|(b, _)| b.level == level).map(|(_, x)| x.abs()).sum()
}

struct Trial {
    ratio: f64,
    contraction_fail: bool,
    dilation_fail: bool,
}

pub fn run_l1_distortion(cfg: &DistortionConfig) -> CliResult<DistortionReport> {
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    let shape = ModeShape::new(cfg.modes, cfg.n)?;
    let base = choose_l1_params(shape, cfg.delta, L1Constants::default(), cfg.seed)?;
    let sizes = planted_sizes(&base, shape.len());
    if cfg.family == InputFamily::PlantedLevel && sizes.is_empty() {
        return Err(CliError::Config(format!("no planted size fits the sketch for {shape}")));
    }
    let trial = |t: u64| -> CliResult<Trial> {
        let seed = derive(cfg.seed, t);
        let mut params = base.clone();
        params.seed = derive(seed, 1);
        let d = build_l1(params)?;
        let mut rng = rng_from(derive(seed, 2));
        let (x, v, planted) = match cfg.family {
            InputFamily::RankOne => {
                let t = RankOneTensor::new(
                    (0..cfg.modes).map(|_| (0..cfg.n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
                )?;
                let v = apply_l1_rank_one(&d, &t)?;
                (SparseTensor::from_rank_one(&t), v, None)
            }
            InputFamily::PlantedLevel => {
                let s = sizes[rng.random_range(0..sizes.len())];
                let x = SparseTensor::from_updates(
                    shape,
                    sample(&mut rng, shape.len(), s).into_iter().map(|f| {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        (shape.unflat(f), sign / s as f64)
                    }),
                )?;
                let v = apply_l1_sparse(&d, &x)?;
                (x, v, Some(planted_level(&base, s)))
            }
            InputFamily::Spike => {
                let f = rng.random_range(0..shape.len());
                let x = SparseTensor::from_updates(shape, [(shape.unflat(f), rng.random_range(0.5..2.0))])?;
                let v = apply_l1_sparse(&d, &x)?;
                (x, v, None)
            }
        };
        let norm = x.l1_norm();
        let sketch = sketch_l1_norm(&v);
        let contraction_fail = match planted {
            Some(h) => level_mass(&d, &v, h) < CONTRACTION_C * norm,
            None => sketch < CONTRACTION_C * norm,
        };
        Ok(Trial {
            ratio: sketch / norm,
            contraction_fail,
            dilation_fail: sketch / norm > dilation_bound(&base, &x.scaled(1.0 / norm)),
        })
    };
    let trials: Vec<Trial> = (0..cfg.trials).into_par_iter().map(trial).collect::<CliResult<_>>()?;
    let mut ratios: Vec<f64> = trials.iter().map(|t| t.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (-12..=12).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
    let histogram = edges
        .iter()
        .enumerate()
        .map(|(k, &hi)| {
            let lo = if k == 0 { 0.0 } else { edges[k - 1] };
            let last = k == edges.len() - 1;
            (hi, ratios.iter().filter(|&&r| r > lo && (r <= hi || last)).count() as u64)
        })
        .collect();
    Ok(DistortionReport {
        config: cfg.clone(),
        params: base.clone(),
        c1: ratios[0],
        c2: ratios[ratios.len() - 1],
        median: ratios[ratios.len() / 2],
        histogram,
        contraction_failures: trials.iter().filter(|t| t.contraction_fail).count() as u64,
        dilation_failures: trials.iter().filter(|t| t.dilation_fail).count() as u64,
        dilation_allowance: dilation_allowance(&base),
    })
}
