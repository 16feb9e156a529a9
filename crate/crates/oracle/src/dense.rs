use tensketch::{ModeShape, MultiIndex, PSample, RankOneTensor, Result, SketchError, SparseTensor};

/// Largest tensor this crate will materialize.
pub const MAX_DENSE_LEN: usize = 1 << 28;

/// Row-major values over `[n]^q`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    pub shape: ModeShape,
    pub values: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: ModeShape) -> Result<Self> {
        check_len(shape)?;
        Ok(Self { shape, values: vec![0.0; shape.len()] })
    }

    pub fn from_sparse(t: &SparseTensor) -> Result<Self> {
        let mut d = Self::zeros(t.shape())?;
        for (idx, v) in t.entries() {
            d.values[t.shape().flat(idx)] += v;
        }
        Ok(d)
    }

    pub fn get(&self, idx: &MultiIndex) -> f64 {
        self.values[self.shape.flat(idx)]
    }

    pub fn to_sparse(&self) -> Result<SparseTensor> {
        SparseTensor::from_dense(self.shape, &self.values)
    }
}

fn check_len(shape: ModeShape) -> Result<()> {
    if shape.len() > MAX_DENSE_LEN {
        return Err(SketchError::Construction(format!("{shape} is too large to materialize")));
    }
    Ok(())
}

/// Kronecker expansion of the factors.
pub fn materialize(t: &RankOneTensor) -> Result<DenseTensor> {
    let shape = t.shape();
    check_len(shape)?;
    let mut values = vec![1.0];
    for f in t.factors() {
        values = values.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
    }
    Ok(DenseTensor { shape, values })
}

/// Every index of the sample, by enumeration of `[n]^q`.
pub fn sample_members(s: &PSample) -> Vec<MultiIndex> {
    s.shape().indices().filter(|idx| s.contains(idx).expect("index in shape")).collect()
}

pub fn brute_sum(s: &PSample, d: &DenseTensor) -> Result<f64> {
    if s.shape() != d.shape {
        return Err(SketchError::Contract(format!("sample over {} vs tensor over {}", s.shape(), d.shape)));
    }
    Ok(d.shape
        .indices()
        .zip(&d.values)
        .filter(|(idx, _)| s.contains(idx).expect("index in shape"))
        .map(|(_, v)| v)
        .sum())
}
