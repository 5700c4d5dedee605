use super::{check_same_dims, DenseTensor};
use crate::error::{Error, Result};

/// Generalized I-divergence `sum(p log(p/q) - p + q)` with `0 log 0 = 0`.
///
/// Reduces to the ordinary KL divergence when both tensors have the same
/// total sum.
pub fn kl_divergence(p: &DenseTensor, q: &DenseTensor) -> Result<f64> {
    check_same_dims(p.dims(), q.dims())?;
    let mut acc = 0.0;
    for (i, (&a, &b)) in p.values().iter().zip(q.values()).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportViolation(i));
            }
            acc += a * (a / b).ln() - a + b;
        } else {
            acc += b;
        }
    }
    Ok(acc.max(0.0))
}

/// `||truth - approx||_F / ||truth||_F`.
pub fn relative_error(truth: &DenseTensor, approx: &DenseTensor) -> Result<f64> {
    check_same_dims(truth.dims(), approx.dims())?;
    let norm = truth.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroTensor);
    }
    let diff: f64 = truth
        .values()
        .iter()
        .zip(approx.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(diff.sqrt() / norm)
}

/// `1 - ||truth_m - approx_m||_F / ||truth_m||_F` over entries where `mask` is true.
pub fn recovery_fit(truth: &DenseTensor, approx: &DenseTensor, mask: &[bool]) -> Result<f64> {
    check_same_dims(truth.dims(), approx.dims())?;
    if mask.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            left: truth.dims().to_vec(),
            right: vec![mask.len()],
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((&t, &a), &m) in truth.values().iter().zip(approx.values()).zip(mask) {
        if m {
            num += (t - a) * (t - a);
            den += t * t;
        }
    }
    if den == 0.0 {
        return Err(Error::EmptyMask);
    }
    Ok(1.0 - (num / den).sqrt())
}
