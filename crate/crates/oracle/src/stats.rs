//! Binomial frequency estimates with 4σ acceptance bands.

use rayon::prelude::*;
use tensketch::rng::derive;
use tensketch::{ModeShape, MultiIndex, PSample, Result};

/// Width of every acceptance band, in binomial standard deviations.
pub const SIGMAS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub hits: u64,
    pub trials: u64,
}

impl Estimate {
    pub fn new(hits: u64, trials: u64) -> Self {
        Self { hits, trials }
    }

    pub fn frequency(&self) -> f64 {
        if self.trials == 0 {
            f64::NAN
        } else {
            self.hits as f64 / self.trials as f64
        }
    }

    /// `SIGMAS·sqrt(p(1−p)/trials)` at the hypothesized rate `p`; infinite
    /// without trials, so an unconditioned estimate never passes silently.
    pub fn radius_at(&self, p: f64) -> f64 {
        if self.trials == 0 {
            return f64::INFINITY;
        }
        let p = p.clamp(0.0, 1.0);
        SIGMAS * (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn at_most(&self, bound: f64) -> bool {
        self.trials > 0 && self.frequency() <= bound + self.radius_at(bound)
    }

    pub fn at_least(&self, bound: f64) -> bool {
        self.trials > 0 && self.frequency() >= bound - self.radius_at(bound)
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.at_least(lo) && self.at_most(hi)
    }

    pub fn consistent_with(&self, p: f64) -> bool {
        self.within(p, p)
    }
}

impl std::ops::Add for Estimate {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.hits + o.hits, self.trials + o.trials)
    }
}

fn samples(shape: ModeShape, p: f64, trials: u64, seed: u64) -> impl ParallelIterator<Item = PSample> {
    (0..trials).into_par_iter().map(move |t| PSample::new(shape, p, derive(seed, t)).expect("valid p"))
}

/// Inclusion frequency of each index over `trials` independent samples.
pub fn estimate_marginals(
    shape: ModeShape,
    p: f64,
    indices: &[MultiIndex],
    trials: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    PSample::new(shape, p, seed)?;
    for idx in indices {
        shape.check(idx)?;
    }
    let hits = samples(shape, p, trials, seed)
        .fold(
            || vec![0u64; indices.len()],
            |mut acc, s| {
                for (a, idx) in acc.iter_mut().zip(indices) {
                    *a += s.contains(idx).expect("checked") as u64;
                }
                acc
            },
        )
        .reduce(|| vec![0u64; indices.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    Ok(hits.into_iter().map(|h| Estimate::new(h, trials)).collect())
}

/// `Pr(b ∈ S | a ∈ S)` for each pair `(a, b)`: trials are the samples containing `a`.
pub fn estimate_pairwise(
    shape: ModeShape,
    p: f64,
    pairs: &[(MultiIndex, MultiIndex)],
    trials: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    PSample::new(shape, p, seed)?;
    for (a, b) in pairs {
        shape.check(a)?;
        shape.check(b)?;
        if a == b {
            return Err(tensketch::SketchError::Contract(format!("pair ({a}, {b}) is not distinct")));
        }
    }
    let zero = vec![Estimate::new(0, 0); pairs.len()];
    Ok(samples(shape, p, trials, seed)
        .fold(
            || zero.clone(),
            |mut acc, s| {
                for (e, (a, b)) in acc.iter_mut().zip(pairs) {
                    if s.contains(a).expect("checked") {
                        e.trials += 1;
                        e.hits += s.contains(b).expect("checked") as u64;
                    }
                }
                acc
            },
        )
        .reduce(|| zero.clone(), |a, b| a.iter().zip(&b).map(|(x, y)| *x + *y).collect()))
}
