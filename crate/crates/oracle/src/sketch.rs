//! Dense-path sketches and the perfect singleton tester.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use tensketch::rng::derive;
use tensketch::sign::SignMeasurementSet;
use tensketch::{
    L0Decode, L0Params, L0SketchDescriptor, L0SketchValues, L1SketchDescriptor, L1SketchValues, MultiIndex,
    Result, SketchError, SparseTensor,
};

use crate::dense::DenseTensor;

fn pattern_sign(pattern: &[u64], i: usize) -> f64 {
    if (pattern[i / 64] >> (i % 64)) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// ℓ0 sketch by enumerating every index of every bucket's sample.
pub fn dense_l0_sketch(d: &L0SketchDescriptor, x: &DenseTensor) -> Result<L0SketchValues> {
    if d.shape() != x.shape {
        return Err(SketchError::Contract("shape mismatch".into()));
    }
    let rec = d.recovery();
    let values: Vec<f64> = d
        .buckets()
        .par_iter()
        .flat_map_iter(|b| {
            let mut out = vec![0.0; rec.count() + b.equality.count()];
            for (idx, &v) in x.shape.indices().zip(&x.values) {
                if v == 0.0 || !b.sample.contains(&idx).expect("in shape") {
                    continue;
                }
                let (r, e) = out.split_at_mut(rec.count());
                let pr = rec.pattern(&idx);
                r.iter_mut().enumerate().for_each(|(i, o)| *o += v * pattern_sign(&pr, i));
                let pe = b.equality.pattern(&idx);
                e.iter_mut().enumerate().for_each(|(i, o)| *o += v * pattern_sign(&pe, i));
            }
            out
        })
        .collect();
    d.values_from_vec(values)
}

/// ℓ1 sketch by enumeration, with signs taken from the per-mode hash functions.
pub fn dense_l1_sketch(d: &L1SketchDescriptor, x: &DenseTensor) -> Result<L1SketchValues> {
    if d.shape() != x.shape {
        return Err(SketchError::Contract("shape mismatch".into()));
    }
    let values = d
        .buckets()
        .par_iter()
        .map(|b| {
            let mut s = 0.0;
            for (idx, &v) in x.shape.indices().zip(&x.values) {
                if b.sample.contains(&idx).expect("in shape") {
                    let sign: f64 =
                        idx.as_slice().iter().zip(&b.signs).map(|(&c, h)| h.sign(c) as f64).product();
                    s += sign * v;
                }
            }
            s / b.scale
        })
        .collect();
    d.values_from_vec(values)
}

/// Decodes with an oracle that knows the support: the first bucket in decode
/// order whose sample meets the support in exactly one index returns it.
pub fn perfect_decode(d: &L0SketchDescriptor, x: &SparseTensor) -> L0Decode {
    for b in d.decode_order() {
        let sample = &d.buckets()[b].sample;
        let mut hit = None;
        let mut many = false;
        for (idx, v) in x.entries() {
            if sample.contains(idx).expect("in shape") {
                if hit.is_some() {
                    many = true;
                    break;
                }
                hit = Some((*idx, *v));
            }
        }
        if let (Some((idx, v)), false) = (hit, many) {
            return L0Decode::Sampled(idx, v);
        }
    }
    L0Decode::Fail
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tester {
    /// Sketch, then run the singleton test on the measurements.
    Real,
    /// [`perfect_decode`].
    Perfect,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct L0Distribution {
    /// Successful decodes per returned index.
    pub counts: HashMap<MultiIndex, u64>,
    /// Decodes that returned an index outside the support or a wrong value.
    pub wrong: u64,
    pub failures: u64,
    pub decodes: u64,
}

impl L0Distribution {
    pub fn successes(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, idx: &MultiIndex) -> u64 {
        self.counts.get(idx).copied().unwrap_or(0)
    }

    fn merge(mut self, o: Self) -> Self {
        for (k, v) in o.counts {
            *self.counts.entry(k).or_default() += v;
        }
        self.wrong += o.wrong;
        self.failures += o.failures;
        self.decodes += o.decodes;
        self
    }
}

/// Decodes `x` under `decodes` independent descriptors. Decode `t` uses seed
/// `derive(params.seed, t)` and the shared recovery set.
pub fn empirical_l0_distribution(
    params: &L0Params,
    recovery: &Arc<SignMeasurementSet>,
    x: &SparseTensor,
    decodes: u64,
    tester: Tester,
) -> Result<L0Distribution> {
    let per_trial = |t: u64| -> Result<L0Distribution> {
        let mut p = params.clone();
        p.seed = derive(params.seed, t);
        let d = L0SketchDescriptor::build_with_recovery(p, recovery.clone())?;
        let out = match tester {
            Tester::Perfect => perfect_decode(&d, x),
            Tester::Real => d.decode(&d.sketch_sparse(x)?)?,
        };
        let mut dist = L0Distribution { decodes: 1, ..Default::default() };
        match out {
            L0Decode::Sampled(idx, v) => {
                let truth = x.entries().iter().find(|(i, _)| *i == idx).map(|&(_, w)| w);
                match truth {
                    Some(w) if (w - v).abs() <= 1e-9 * w.abs().max(1.0) => {
                        dist.counts.insert(idx, 1);
                    }
                    _ => dist.wrong = 1,
                }
            }
            L0Decode::Fail => dist.failures = 1,
        }
        Ok(dist)
    };
    (0..decodes)
        .into_par_iter()
        .map(per_trial)
        .try_reduce(L0Distribution::default, |a, b| Ok(a.merge(b)))
}
