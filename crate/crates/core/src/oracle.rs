//! Iterative proportional fitting, an independent reference for [`crate::projection`].
//!
//! IPF matches the marginals of `p` on every maximal subset by repeated
//! rescaling. For a downward-closed interaction set, matching those
//! marginals is the same as matching η on the basis, so the fixed point is
//! the KL m-projection. Nothing here touches θ, η or the Fisher matrix.

use crate::error::{Error, Result};
use crate::interactions::InteractionSet;
use crate::tensor::{next_index, DenseTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Stop once every maximal-subset marginal is within this (max-abs) of the target's.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

fn check_modes(order: usize, modes: &[usize]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::BadModes("empty mode list".into()));
    }
    if !modes.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::BadModes(format!("modes {modes:?} must be strictly increasing")));
    }
    if let Some(&m) = modes.iter().find(|&&m| m >= order) {
        return Err(Error::BadModes(format!("mode {m} out of range for order {order}")));
    }
    Ok(())
}

fn flat_in_block(index: &[usize], modes: &[usize], block_dims: &[usize]) -> usize {
    modes
        .iter()
        .zip(block_dims)
        .fold(0, |acc, (&d, &n)| acc * n + index[d])
}

/// Sums `p` over every mode not in `modes` (0-based, strictly increasing).
pub fn marginal(p: &DenseTensor, modes: &[usize]) -> Result<DenseTensor> {
    check_modes(p.order(), modes)?;
    let block_dims: Vec<usize> = modes.iter().map(|&d| p.dims()[d]).collect();
    let mut out = vec![0.0; block_dims.iter().product()];
    let mut index = vec![0; p.order()];
    for &v in p.values() {
        out[flat_in_block(&index, modes, &block_dims)] += v;
        next_index(&mut index, p.dims());
    }
    DenseTensor::new(block_dims, out)
}

fn max_discrepancy(q: &DenseTensor, targets: &[(Vec<usize>, DenseTensor)]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (modes, target) in targets {
        let m = marginal(q, modes)?;
        for (a, b) in m.values().iter().zip(target.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// KL projection of a normalized `p` onto the model of `s`, by IPF from the uniform tensor.
pub fn ipf_project(p: &DenseTensor, s: &InteractionSet, opts: &OracleOptions) -> Result<DenseTensor> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidOption(format!(
            "tolerance must be > 0, got {}",
            opts.tolerance
        )));
    }
    if s.order() != p.order() {
        return Err(Error::BadOrder(format!(
            "interaction set has order {} but the tensor has order {}",
            s.order(),
            p.order()
        )));
    }
    let total = p.total_sum();
    if (total - 1.0).abs() > crate::coords::NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized(total));
    }
    let targets = s
        .maximal_subsets()
        .into_iter()
        .map(|m| marginal(p, &m).map(|t| (m, t)))
        .collect::<Result<Vec<_>>>()?;

    let dims = p.dims().to_vec();
    let mut q = DenseTensor::uniform(dims.clone())?.into_values();
    let mut discrepancy = f64::INFINITY;
    for _ in 0..opts.max_sweeps {
        for (modes, target) in &targets {
            let current = marginal(&DenseTensor::new(dims.clone(), q.clone())?, modes)?;
            let ratio: Vec<f64> = target
                .values()
                .iter()
                .zip(current.values())
                .map(|(&t, &c)| if c > 0.0 { t / c } else { 0.0 })
                .collect();
            let mut index = vec![0; dims.len()];
            for v in q.iter_mut() {
                *v *= ratio[flat_in_block(&index, modes, target.dims())];
                next_index(&mut index, &dims);
            }
        }
        let qt = DenseTensor::new(dims.clone(), q.clone())?;
        discrepancy = max_discrepancy(&qt, &targets)?;
        if discrepancy < opts.tolerance {
            return Ok(qt);
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_sweeps,
        residual: discrepancy,
    })
}
