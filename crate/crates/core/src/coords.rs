//! Natural (θ) and expectation (η) coordinates of a normalized tensor.
//!
//! For the index lattice `[I_1] x ... x [I_D]` ordered componentwise, the
//! zeta and Möbius sums factor over modes, so every transform here is a
//! sequence of per-mode cumulative sums or first differences:
//!
//! * `η = suffix-sum(P)` and `P = forward-diff(η)`;
//! * `θ = backward-diff(log P)` and `log P = prefix-sum(θ)`.
//!
//! Index `(0, ..., 0)` carries the normalizer: `η` is 1 there, and `θ` holds
//! `log P[0, ..., 0]`, which equals `-log Z`.

use crate::error::{Error, Result};
use crate::tensor::{lanes, validate_dims, DenseTensor};

/// Tolerance on the total sum of tensors passed in as distributions.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Reconstructed probabilities below `-INVALID_ETA_TOLERANCE` reject an η tensor.
pub const INVALID_ETA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordKind {
    Theta,
    Eta,
}

/// Full θ- or η-parameter array with the same shape as its tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordTensor {
    kind: CoordKind,
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl CoordTensor {
    pub fn new(kind: CoordKind, dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len = validate_dims(&dims)?;
        if values.len() != len {
            return Err(Error::InvalidTensor(format!(
                "dims {dims:?} need {len} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTensor("non-finite coordinate".into()));
        }
        Ok(Self { kind, dims, values })
    }

    pub fn kind(&self) -> CoordKind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let strides = crate::tensor::strides(&self.dims);
        self.values[index.iter().zip(strides).map(|(i, s)| i * s).sum::<usize>()]
    }
}

fn check_normalized(p: &DenseTensor) -> Result<()> {
    let total = p.total_sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(total));
    }
    Ok(())
}

/// `η[i] = sum_{i' >= i} P[i']` on a raw row-major buffer.
pub(crate) fn eta_values(p: &[f64], dims: &[usize]) -> Vec<f64> {
    let mut eta = p.to_vec();
    lanes::suffix_sum(&mut eta, dims);
    eta
}

pub fn eta_from_tensor(p: &DenseTensor) -> Result<CoordTensor> {
    check_normalized(p)?;
    Ok(CoordTensor {
        kind: CoordKind::Eta,
        dims: p.dims().to_vec(),
        values: eta_values(p.values(), p.dims()),
    })
}

pub fn tensor_from_eta(e: &CoordTensor) -> Result<DenseTensor> {
    if e.kind != CoordKind::Eta {
        return Err(Error::InvalidOption("expected eta coordinates".into()));
    }
    let mut p = e.values.clone();
    lanes::forward_diff(&mut p, &e.dims);
    for (index, v) in p.iter_mut().enumerate() {
        if *v < -INVALID_ETA_TOLERANCE {
            return Err(Error::InvalidEta { index, value: *v });
        }
        *v = v.max(0.0);
    }
    DenseTensor::new(e.dims.clone(), p)
}

pub fn theta_from_tensor(p: &DenseTensor) -> Result<CoordTensor> {
    check_normalized(p)?;
    if let Some(i) = p.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroEntry(i));
    }
    let mut theta: Vec<f64> = p.values().iter().map(|v| v.ln()).collect();
    lanes::backward_diff(&mut theta, p.dims());
    Ok(CoordTensor {
        kind: CoordKind::Theta,
        dims: p.dims().to_vec(),
        values: theta,
    })
}

/// Log-domain decoding of a θ array.
pub(crate) struct Decoded {
    /// Normalized `log P`.
    pub log_values: Vec<f64>,
    /// Implied `θ[0, ..., 0] = -log Z`.
    pub theta_origin: f64,
}

/// Decodes θ (ignoring whatever sits at the origin) into normalized log-probabilities.
pub(crate) fn decode_theta_values(theta: &[f64], dims: &[usize]) -> Result<Decoded> {
    let mut log = theta.to_vec();
    log[0] = 0.0;
    lanes::prefix_sum(&mut log, dims);
    let max = log.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Overflow);
    }
    let sum: f64 = log.iter().map(|v| (v - max).exp()).sum();
    let log_z = max + sum.ln();
    if !log_z.is_finite() {
        return Err(Error::Overflow);
    }
    for v in log.iter_mut() {
        *v -= log_z;
    }
    Ok(Decoded {
        log_values: log,
        theta_origin: -log_z,
    })
}

/// Decodes θ into a normalized tensor and returns the implied `θ[0, ..., 0]`.
pub fn decode_theta(t: &CoordTensor) -> Result<(DenseTensor, f64)> {
    if t.kind != CoordKind::Theta {
        return Err(Error::InvalidOption("expected theta coordinates".into()));
    }
    let decoded = decode_theta_values(&t.values, &t.dims)?;
    let values = decoded.log_values.iter().map(|v| v.exp()).collect();
    Ok((
        DenseTensor::new(t.dims.clone(), values)?,
        decoded.theta_origin,
    ))
}

pub fn tensor_from_theta(t: &CoordTensor) -> Result<DenseTensor> {
    decode_theta(t).map(|(p, _)| p)
}
