//! Dense non-negative tensors in row-major layout.
//!
//! A [`DenseTensor`] doubles as an (unnormalized) discrete distribution over
//! its index set. Every other module shares its flat layout: last index
//! fastest, multi-indices are 0-based.

pub(crate) mod lanes;
mod masked;
mod metrics;
mod ring;

pub use masked::MaskedTensor;
pub use metrics::{kl_divergence, recovery_fit, relative_error};
pub use ring::{random_ring_tensor, ring_contract, RingCore};

use crate::error::{Error, Result};

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * dims[d + 1];
    }
    strides
}

/// Advances `index` to the next multi-index in row-major order.
/// Returns `false` once it wraps around to all zeros.
pub fn next_index(index: &mut [usize], dims: &[usize]) -> bool {
    for d in (0..dims.len()).rev() {
        index[d] += 1;
        if index[d] < dims[d] {
            return true;
        }
        index[d] = 0;
    }
    false
}

pub(crate) fn validate_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidTensor("order must be at least 1".into()));
    }
    if let Some(d) = dims.iter().position(|&n| n == 0) {
        return Err(Error::InvalidTensor(format!("mode {} has size 0", d + 1)));
    }
    dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).ok_or_else(|| {
        Error::InvalidTensor(format!("element count of {dims:?} overflows usize"))
    })
}

/// D-order non-negative dense array.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor, checking the shape and that every value is finite and `>= 0`.
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len = validate_dims(&dims)?;
        if values.len() != len {
            return Err(Error::InvalidTensor(format!(
                "dims {dims:?} need {len} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidTensor(format!(
                "entry {i} is {} (must be finite and non-negative)",
                values[i]
            )));
        }
        Ok(Self { dims, values })
    }

    /// Skips value validation. Callers must uphold the non-negativity invariant.
    pub(crate) fn from_raw(dims: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.iter().product::<usize>());
        Self { dims, values }
    }

    pub fn filled(dims: Vec<usize>, value: f64) -> Result<Self> {
        let len = validate_dims(&dims)?;
        Self::new(dims, vec![value; len])
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        Self::filled(dims, 0.0)
    }

    /// Normalized uniform tensor.
    pub fn uniform(dims: Vec<usize>) -> Result<Self> {
        let len = validate_dims(&dims)?;
        Self::new(dims, vec![1.0 / len as f64; len])
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = validate_dims(&dims)?;
        let mut values = Vec::with_capacity(len);
        let mut index = vec![0; dims.len()];
        loop {
            values.push(f(&index));
            if !next_index(&mut index, &dims) {
                break;
            }
        }
        Self::new(dims, values)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.dims)
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(self.strides())
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.flat_index(index)]
    }

    pub fn total_sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Multiplies every entry by `factor` (which must be finite and non-negative).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::InvalidOption(format!("scale factor {factor}")));
        }
        Ok(Self::from_raw(
            self.dims.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        ))
    }

    /// Returns the tensor divided by its total sum, and that sum.
    pub fn normalize(&self) -> Result<(Self, f64)> {
        normalize(self)
    }

    pub fn reshape(&self, new_dims: Vec<usize>) -> Result<Self> {
        reshape(self, new_dims)
    }

    /// True if every entry is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
}

pub fn total_sum(t: &DenseTensor) -> f64 {
    t.total_sum()
}

pub fn normalize(t: &DenseTensor) -> Result<(DenseTensor, f64)> {
    let scale = t.total_sum();
    if scale <= 0.0 {
        return Err(Error::ZeroTensor);
    }
    let values = t.values.iter().map(|v| v / scale).collect();
    Ok((DenseTensor::from_raw(t.dims.clone(), values), scale))
}

/// Relabels the tensor with `new_dims`, keeping the flat value sequence.
pub fn reshape(t: &DenseTensor, new_dims: Vec<usize>) -> Result<DenseTensor> {
    let to_len = validate_dims(&new_dims)?;
    if to_len != t.len() {
        return Err(Error::SizeMismatch {
            from: t.dims.clone(),
            from_len: t.len(),
            to: new_dims,
            to_len,
        });
    }
    Ok(DenseTensor::from_raw(new_dims, t.values.clone()))
}

pub(crate) fn check_same_dims(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            left: a.to_vec(),
            right: b.to_vec(),
        });
    }
    Ok(())
}
