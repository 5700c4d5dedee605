//! Low-body tensor completion.
//!
//! An em-algorithm: the m-step projects the current guess onto the model of
//! an interaction set, the e-step writes the observed entries back. The
//! loop stops once the relative change between iterates has settled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::interactions::InteractionSet;
use crate::projection::{project, SolverOptions};
use crate::tensor::{DenseTensor, MaskedTensor};

/// Floor applied to initial values of missing entries.
pub const MIN_INIT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Mean of the observed entries.
    ObservedMean,
    /// Independent normal draws.
    Gaussian { mean: f64, std: f64, seed: u64 },
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub init: InitStrategy,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iterations: 500,
            init: InitStrategy::ObservedMean,
        }
    }
}

impl CompletionOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidOption(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidOption("max_iterations must be >= 1".into()));
        }
        match self.init {
            InitStrategy::Gaussian { mean, std, .. } if !mean.is_finite() || !(std >= 0.0) || !std.is_finite() => {
                Err(Error::InvalidOption(format!("gaussian init needs finite mean and std >= 0, got {mean}, {std}")))
            }
            InitStrategy::Constant(c) if !(c > 0.0) || !c.is_finite() => {
                Err(Error::InvalidOption(format!("constant init must be > 0, got {c}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    /// Completed tensor; observed entries are copied from the input.
    pub tensor: DenseTensor,
    /// Output of the last m-step, before observed entries were restored.
    pub model: DenseTensor,
    /// `||P^{t+1} - P^t||_F / ||P^t||_F` per iteration.
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
    /// The stopping rule fired and the last m-step converged.
    pub converged: bool,
    /// Number of m-steps whose projection hit its iteration cap.
    pub unconverged_projections: usize,
}

impl CompletionResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(0.0)
    }
}

/// Missing entries filled according to `init`, floored at [`MIN_INIT`].
pub fn initial_guess(m: &MaskedTensor, init: &InitStrategy) -> Result<DenseTensor> {
    match *init {
        InitStrategy::ObservedMean => {
            let mean = m.observed_mean().max(MIN_INIT);
            m.fill_with(|_| mean)
        }
        InitStrategy::Constant(c) => m.fill_with(|_| c.max(MIN_INIT)),
        InitStrategy::Gaussian { mean, std, seed } => {
            let normal = Normal::new(mean, std)
                .map_err(|e| Error::InvalidOption(format!("gaussian init: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            m.fill_with(|_| normal.sample(&mut rng).max(MIN_INIT))
        }
    }
}

pub fn lbtc(
    m: &MaskedTensor,
    s: &InteractionSet,
    popts: &SolverOptions,
    copts: &CompletionOptions,
) -> Result<CompletionResult> {
    copts.validate()?;
    popts.validate()?;
    if m.observed_count() == 0 {
        return Err(Error::EmptyObservation);
    }
    let observed = m.observed();
    let mut current = initial_guess(m, &copts.init)?;
    let mut trace = Vec::new();
    let mut unconverged = 0;
    let mut stopped = false;
    let (model, last_ok) = loop {
        let r = project(&current, s, popts)?;
        if !r.converged {
            unconverged += 1;
        }
        let next_values: Vec<f64> = r
            .tensor
            .values()
            .iter()
            .zip(m.values())
            .zip(observed)
            .map(|((&q, &t), &o)| if o { t } else { q })
            .collect();
        let next = DenseTensor::new(current.dims().to_vec(), next_values)?;
        let diff = next
            .values()
            .iter()
            .zip(current.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm = current.frobenius_norm();
        trace.push(if norm > 0.0 { diff / norm } else { diff });
        current = next;

        let t = trace.len();
        if t > 2 && (trace[t - 1] - trace[t - 2]).abs() < copts.epsilon {
            stopped = true;
            break (r.tensor, r.converged);
        }
        if t >= copts.max_iterations {
            break (r.tensor, r.converged);
        }
    };
    Ok(CompletionResult {
        tensor: current,
        model,
        iterations: trace.len(),
        residual_trace: trace,
        converged: stopped && last_ok,
        unconverged_projections: unconverged,
    })
}
