use super::{validate_dims, DenseTensor};
use crate::error::{Error, Result};

/// Tensor with missing entries. Missing values are stored as NaN and
/// tracked by an explicit `observed` mask.
#[derive(Debug, Clone)]
pub struct MaskedTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
    observed: Vec<bool>,
}

impl MaskedTensor {
    /// Builds a masked tensor from raw values where NaN marks a missing entry.
    pub fn from_nan_values(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let observed = values.iter().map(|v| !v.is_nan()).collect();
        Self::with_mask(dims, values, observed)
    }

    /// Hides the entries of `tensor` where `observed` is false.
    pub fn from_tensor(tensor: &DenseTensor, observed: Vec<bool>) -> Result<Self> {
        Self::with_mask(tensor.dims().to_vec(), tensor.values().to_vec(), observed)
    }

    fn with_mask(dims: Vec<usize>, mut values: Vec<f64>, observed: Vec<bool>) -> Result<Self> {
        let len = validate_dims(&dims)?;
        if values.len() != len || observed.len() != len {
            return Err(Error::InvalidTensor(format!(
                "dims {dims:?} need {len} values and mask entries, got {} and {}",
                values.len(),
                observed.len()
            )));
        }
        for (i, (v, &o)) in values.iter_mut().zip(&observed).enumerate() {
            if o {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::InvalidTensor(format!(
                        "observed entry {i} is {v} (must be finite and non-negative)"
                    )));
                }
            } else {
                *v = f64::NAN;
            }
        }
        if !observed.iter().any(|&o| o) {
            return Err(Error::EmptyObservation);
        }
        Ok(Self {
            dims,
            values,
            observed,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Raw values, NaN at missing entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    /// Mask of missing entries (complement of [`observed`](Self::observed)).
    pub fn missing(&self) -> Vec<bool> {
        self.observed.iter().map(|o| !o).collect()
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn missing_count(&self) -> usize {
        self.values.len() - self.observed_count()
    }

    pub fn observed_mean(&self) -> f64 {
        let (sum, n) = self
            .values
            .iter()
            .zip(&self.observed)
            .filter(|(_, &o)| o)
            .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
        sum / n as f64
    }

    /// Dense tensor with every missing entry replaced by `fill(flat_index)`.
    pub fn fill_with(&self, mut fill: impl FnMut(usize) -> f64) -> Result<DenseTensor> {
        let values = self
            .values
            .iter()
            .zip(&self.observed)
            .enumerate()
            .map(|(i, (&v, &o))| if o { v } else { fill(i) })
            .collect();
        DenseTensor::new(self.dims.clone(), values)
    }
}
