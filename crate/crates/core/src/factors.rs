//! Factorization of projected tensors.
//!
//! A tensor in the model of an interaction set has energy
//! `-log P = H₀ + Σ_S H^(S)` where `H^(S)` only depends on the modes in `S`.
//! Grouping the energies under the maximal subsets `M_1..M_K` gives
//!
//! ```text
//! P = Π_j Z^(-1/K) exp(-Σ_{S ⊆ M_j} H^(S) / c_S)
//! ```
//!
//! with `c_S` the number of maximal subsets containing `S`. Dividing shared
//! terms evenly is a choice; any split reconstructs `P`. For the cyclic set
//! this yields the usual ring of matrices, which [`export_ring_cores`] turns
//! into tensor-ring cores with diagonal slabs.

use std::collections::BTreeMap;

use crate::coords::{CoordKind, CoordTensor};
use crate::error::{Error, Result};
use crate::interactions::InteractionSet;
use crate::projection::ProjectionResult;
use crate::tensor::{lanes, next_index, strides, DenseTensor, RingCore};

/// Largest |θ| tolerated outside the model by [`energy_terms`].
pub const OFF_MODEL_TOLERANCE: f64 = 1e-6;

/// Energy of one interaction subset, an array over the subset's modes.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTerm {
    pub modes: Vec<usize>,
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

impl EnergyTerm {
    pub fn get(&self, index: &[usize]) -> f64 {
        let s = strides(&self.dims);
        self.values[index.iter().zip(s).map(|(i, s)| i * s).sum::<usize>()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTerms {
    /// `-θ` at the origin, i.e. `log Z`.
    pub h0: f64,
    terms: BTreeMap<Vec<usize>, EnergyTerm>,
}

impl EnergyTerms {
    pub fn get(&self, modes: &[usize]) -> Option<&EnergyTerm> {
        self.terms.get(modes)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EnergyTerm> {
        self.terms.values()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `H₀ + Σ_S H^(S)` at a full multi-index, i.e. `-log P`.
    pub fn total_energy(&self, index: &[usize]) -> f64 {
        self.h0
            + self
                .terms
                .values()
                .map(|t| {
                    let sub: Vec<usize> = t.modes.iter().map(|&d| index[d]).collect();
                    t.get(&sub)
                })
                .sum::<f64>()
    }
}

/// Splits a model θ into per-subset energies: `H^(S)` is the negated
/// cumulative sum of the θ entries whose non-origin coordinates are exactly `S`.
pub fn energy_terms(theta: &CoordTensor, s: &InteractionSet) -> Result<EnergyTerms> {
    if theta.kind() != CoordKind::Theta {
        return Err(Error::InvalidOption("expected theta coordinates".into()));
    }
    let dims = theta.dims();
    let basis = s.basis(dims)?;
    let mut in_model = vec![false; theta.values().len()];
    in_model[0] = true;
    for &o in basis.offsets() {
        in_model[o] = true;
    }
    let off = theta
        .values()
        .iter()
        .zip(&in_model)
        .filter(|(_, &m)| !m)
        .fold(0.0f64, |acc, (v, _)| acc.max(v.abs()));
    if off > OFF_MODEL_TOLERANCE {
        return Err(Error::OffModel(off));
    }

    let full_strides = strides(dims);
    let mut terms = BTreeMap::new();
    for modes in s.subsets() {
        let block_dims: Vec<usize> = modes.iter().map(|&d| dims[d]).collect();
        let len: usize = block_dims.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut j = vec![0; modes.len()];
        loop {
            if j.contains(&0) {
                values.push(0.0);
            } else {
                let flat: usize = modes.iter().zip(&j).map(|(&d, &i)| i * full_strides[d]).sum();
                values.push(theta.values()[flat]);
            }
            if !next_index(&mut j, &block_dims) {
                break;
            }
        }
        lanes::prefix_sum(&mut values, &block_dims);
        for v in values.iter_mut() {
            *v = -*v;
        }
        terms.insert(
            modes.to_vec(),
            EnergyTerm {
                modes: modes.to_vec(),
                dims: block_dims,
                values,
            },
        );
    }
    Ok(EnergyTerms {
        h0: -theta.values()[0],
        terms,
    })
}

/// How energies are shared among the factors of an interaction set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    maximal: Vec<Vec<usize>>,
    /// `c_S` for every member `S`.
    counts: BTreeMap<Vec<usize>, usize>,
}

impl SplitPlan {
    pub fn new(s: &InteractionSet) -> Self {
        let maximal = s.maximal_subsets();
        let counts = s
            .subsets()
            .map(|sub| {
                let c = maximal
                    .iter()
                    .filter(|m| sub.iter().all(|d| m.contains(d)))
                    .count();
                (sub.to_vec(), c)
            })
            .collect();
        Self { maximal, counts }
    }

    pub fn maximal_subsets(&self) -> &[Vec<usize>] {
        &self.maximal
    }

    /// Number of factors; each carries `Z^(-1/K)`.
    pub fn root(&self) -> usize {
        self.maximal.len()
    }

    /// Number of maximal subsets containing `subset`.
    pub fn share_count(&self, subset: &[usize]) -> Option<usize> {
        self.counts.get(subset).copied()
    }

    /// Members of the set folded into factor `j`, with their share counts.
    pub fn terms(&self, j: usize) -> Vec<(Vec<usize>, usize)> {
        let m = &self.maximal[j];
        self.counts
            .iter()
            .filter(|(sub, _)| sub.iter().all(|d| m.contains(d)))
            .map(|(sub, &c)| (sub.clone(), c))
            .collect()
    }
}

/// One factor over a maximal subset of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub modes: Vec<usize>,
    pub values: DenseTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    dims: Vec<usize>,
    factors: Vec<Factor>,
    partition: f64,
    scale: f64,
}

impl FactorSet {
    pub fn new(dims: Vec<usize>, factors: Vec<Factor>, partition: f64, scale: f64) -> Result<Self> {
        crate::tensor::validate_dims(&dims)?;
        if !(partition > 0.0 && partition.is_finite()) {
            return Err(Error::InvalidOption(format!("partition function {partition}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidOption(format!("scale {scale}")));
        }
        for f in &factors {
            check_factor_shape(f, &dims)?;
        }
        Ok(Self {
            dims,
            factors,
            partition,
            scale,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Partition function `Z` of the normalized tensor.
    pub fn partition_function(&self) -> f64 {
        self.partition
    }

    /// Total sum of the original input.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

fn check_factor_shape(f: &Factor, dims: &[usize]) -> Result<()> {
    let expected: Option<Vec<usize>> = f.modes.iter().map(|&d| dims.get(d).copied()).collect();
    let sorted = f.modes.windows(2).all(|w| w[0] < w[1]);
    match expected {
        Some(e) if sorted && !f.modes.is_empty() && e == f.values.dims() => Ok(()),
        _ => Err(Error::ShapeMismatch {
            left: f.values.dims().to_vec(),
            right: f.modes.iter().map(|&d| dims.get(d).copied().unwrap_or(0)).collect(),
        }),
    }
}

/// Factors of a converged projection onto `s`, one per maximal subset.
pub fn extract_factors(r: &ProjectionResult, s: &InteractionSet) -> Result<FactorSet> {
    if !r.converged {
        return Err(Error::NotConverged {
            iterations: r.iterations,
            residual: r.residual,
        });
    }
    let dims = r.tensor.dims().to_vec();
    let terms = energy_terms(&r.theta(), s)?;
    let plan = SplitPlan::new(s);
    let k = plan.root() as f64;
    let log_z = terms.h0;
    let mut factors = Vec::with_capacity(plan.root());
    for (j, m) in plan.maximal_subsets().iter().enumerate() {
        let shared: Vec<(&EnergyTerm, Vec<usize>, f64)> = plan
            .terms(j)
            .into_iter()
            .map(|(sub, c)| {
                let pos = sub.iter().map(|d| m.iter().position(|x| x == d).unwrap()).collect();
                (terms.get(&sub).expect("energy for every member"), pos, c as f64)
            })
            .collect();
        let block: Vec<usize> = m.iter().map(|&d| dims[d]).collect();
        let values = DenseTensor::from_fn(block, |idx| {
            let energy: f64 = shared
                .iter()
                .map(|(t, pos, c)| {
                    let sub: Vec<usize> = pos.iter().map(|&p| idx[p]).collect();
                    t.get(&sub) / c
                })
                .sum();
            (-log_z / k - energy).exp()
        })?;
        factors.push(Factor {
            modes: m.clone(),
            values,
        });
    }
    FactorSet::new(dims, factors, log_z.exp(), r.scale)
}

/// Entrywise product of the factors, broadcast over non-member modes, times the scale.
pub fn reconstruct_from_factors(f: &FactorSet, dims: &[usize]) -> Result<DenseTensor> {
    if dims != f.dims() {
        return Err(Error::ShapeMismatch {
            left: f.dims().to_vec(),
            right: dims.to_vec(),
        });
    }
    for factor in f.factors() {
        check_factor_shape(factor, dims)?;
    }
    DenseTensor::from_fn(dims.to_vec(), |idx| {
        f.factors().iter().fold(f.scale(), |acc, factor| {
            let sub: Vec<usize> = factor.modes.iter().map(|&d| idx[d]).collect();
            acc * factor.values.get(&sub)
        })
    })
}

/// Tensor-ring form of a cyclic factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct RingCores {
    pub cores: Vec<RingCore>,
    /// Bond dimension to the right of each mode.
    pub ranks: Vec<usize>,
}

/// Turns the pairwise factors of a cyclic set (order at least 3) into ring
/// cores. Core `d` has shape `(I_{d-1}, I_d, I_d)` and holds the factor on
/// modes `(d-1, d)` along the diagonal of its last two axes; the scale is
/// folded into core 0.
///
/// Order 2 is rejected: its cyclic set is the single pair `{0, 1}`, which is
/// not a ring of distinct pairs.
pub fn export_ring_cores(f: &FactorSet) -> Result<RingCores> {
    let dims = f.dims();
    let d = dims.len();
    if d < 3 {
        return Err(Error::NotCyclic(format!("order {d} has no ring of pairs")));
    }
    let mut by_pair: BTreeMap<Vec<usize>, &Factor> = BTreeMap::new();
    for factor in f.factors() {
        if factor.modes.len() != 2 {
            return Err(Error::NotCyclic(format!(
                "factor on modes {:?} is not pairwise",
                factor.modes
            )));
        }
        by_pair.insert(factor.modes.clone(), factor);
    }
    let pairs: Vec<Vec<usize>> = (0..d)
        .map(|k| {
            let (a, b) = ((k + d - 1) % d, k);
            vec![a.min(b), a.max(b)]
        })
        .collect();
    if by_pair.len() != d || f.factors().len() != d || pairs.iter().any(|p| !by_pair.contains_key(p)) {
        return Err(Error::NotCyclic(
            "factors do not cover exactly the neighbouring mode pairs".into(),
        ));
    }
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let prev = (k + d - 1) % d;
        let factor = by_pair[&pairs[k]];
        let (left, size) = (dims[prev], dims[k]);
        let mut values = vec![0.0; left * size * size];
        for a in 0..left {
            for i in 0..size {
                // The factor is stored with its modes ascending.
                let x = if prev < k {
                    factor.values.get(&[a, i])
                } else {
                    factor.values.get(&[i, a])
                };
                values[(a * size + i) * size + i] = if k == 0 { x * f.scale() } else { x };
            }
        }
        cores.push(RingCore::new(left, size, size, values)?);
    }
    Ok(RingCores {
        cores,
        ranks: dims.to_vec(),
    })
}
