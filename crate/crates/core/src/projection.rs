//! KL m-projection onto the log-linear model of an interaction set.
//!
//! The model fixes every natural parameter outside the set's [`Basis`] to
//! zero. Minimizing `KL(P, Q)` over the free parameters is convex: the
//! gradient is `η(Q) - η(P)` restricted to the basis and the Hessian is the
//! Fisher matrix `G[u, v] = η[max(u, v)] - η[u] η[v]`, so the solver takes
//! Newton steps `θ <- θ - G⁻¹ (η - η̂)` until the gradient norm drops below
//! the tolerance.
//!
//! Unnormalized inputs are projected after dividing by their total sum and
//! rescaled afterwards, which is exact because `KL(λP, λQ) = λ KL(P, Q)`.

use nalgebra::{DMatrix, DVector};

use crate::coords::{decode_theta_values, eta_values, CoordKind, CoordTensor};
use crate::error::{Error, Result};
use crate::interactions::{Basis, InteractionSet};
use crate::tensor::{kl_divergence, normalize, DenseTensor};

/// Retries of the Tikhonov damping ladder before giving up on a singular system.
pub const DAMPING_RETRIES: usize = 5;

/// Step halvings tried when a full Newton step increases the objective.
pub const MAX_STEP_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop once `||η^B - η̂^B||_2` falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial ridge added to `G`. Zero means an undamped first attempt; the
    /// ladder starts at `1e-10 * ||G||_inf` and grows by 10x per retry.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 100,
            damping: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidOption(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidOption("max_iterations must be >= 1".into()));
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            return Err(Error::InvalidOption(format!(
                "damping must be finite and >= 0, got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// Projected tensor, with the same total sum as the input.
    pub tensor: DenseTensor,
    /// Free natural parameters, parallel to `basis`.
    pub theta_b: Vec<f64>,
    /// Expectation parameters of the (normalized) output on the basis.
    pub eta_b: Vec<f64>,
    /// Expectation parameters of the (normalized) input on the basis.
    pub target_eta_b: Vec<f64>,
    /// `θ` at the origin, i.e. `-log Z`.
    pub theta_origin: f64,
    pub basis: Basis,
    /// Total sum of the input.
    pub scale: f64,
    /// Generalized KL divergence from the input to `tensor`.
    pub kl: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `||η^B - η̂^B||_2`.
    pub residual: f64,
}

impl ProjectionResult {
    /// Full θ array of the normalized output (zero outside the basis).
    pub fn theta(&self) -> CoordTensor {
        let dims = self.basis.dims().to_vec();
        let mut values = vec![0.0; dims.iter().product()];
        values[0] = self.theta_origin;
        for (&o, &t) in self.basis.offsets().iter().zip(&self.theta_b) {
            values[o] = t;
        }
        CoordTensor::new(CoordKind::Theta, dims, values).expect("finite theta")
    }

    /// Partition function `Z = exp(-θ_origin)`.
    pub fn partition_function(&self) -> f64 {
        (-self.theta_origin).exp()
    }
}

/// Fisher matrix of the normalized distribution with expectation parameters `eta_full`.
pub fn fisher_matrix(eta_full: &CoordTensor, basis: &Basis) -> Result<DMatrix<f64>> {
    if eta_full.kind() != CoordKind::Eta {
        return Err(Error::InvalidOption("expected eta coordinates".into()));
    }
    if eta_full.dims() != basis.dims() {
        return Err(Error::ShapeMismatch {
            left: eta_full.dims().to_vec(),
            right: basis.dims().to_vec(),
        });
    }
    Ok(fisher_from_eta(eta_full.values(), basis))
}

fn fisher_from_eta(eta: &[f64], basis: &Basis) -> DMatrix<f64> {
    let strides = crate::tensor::strides(basis.dims());
    let idx = basis.indices();
    let n = idx.len();
    let eta_b: Vec<f64> = basis.offsets().iter().map(|&o| eta[o]).collect();
    let mut g = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in u..n {
            let joint: usize = idx[u]
                .iter()
                .zip(&idx[v])
                .zip(&strides)
                .map(|((a, b), s)| a.max(b) * s)
                .sum();
            let value = eta[joint] - eta_b[u] * eta_b[v];
            g[(u, v)] = value;
            g[(v, u)] = value;
        }
    }
    g
}

/// Solves `G x = rhs` by Cholesky, escalating a ridge on failure.
fn solve_damped(g: &DMatrix<f64>, rhs: &DVector<f64>, damping: f64) -> Result<DVector<f64>> {
    let base = 1e-10 * g.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    let mut lambda = damping;
    for attempt in 0..=DAMPING_RETRIES {
        let mut m = g.clone();
        if lambda > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += lambda;
            }
        }
        if let Some(ch) = m.cholesky() {
            let x = ch.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return Ok(x);
            }
        }
        if attempt < DAMPING_RETRIES {
            lambda = if lambda < base { base } else { lambda * 10.0 };
        }
    }
    Err(Error::SingularSystem {
        retries: DAMPING_RETRIES,
    })
}

/// Solver state at one θ.
#[derive(Clone)]
struct State {
    theta_b: Vec<f64>,
    log_values: Vec<f64>,
    theta_origin: f64,
    eta: Vec<f64>,
    grad: Vec<f64>,
    grad_norm: f64,
    /// Cross entropy `ψ(θ) - <θ, η̂>`; differs from KL(P̂, Q) by a constant.
    objective: f64,
}

struct Problem<'a> {
    dims: &'a [usize],
    basis: &'a Basis,
    target: &'a [f64],
}

impl Problem<'_> {
    fn evaluate(&self, theta_b: Vec<f64>) -> Result<State> {
        let mut theta = vec![0.0; self.dims.iter().product()];
        for (&o, &t) in self.basis.offsets().iter().zip(&theta_b) {
            theta[o] = t;
        }
        let decoded = decode_theta_values(&theta, self.dims)?;
        let probs: Vec<f64> = decoded.log_values.iter().map(|v| v.exp()).collect();
        let eta = eta_values(&probs, self.dims);
        let grad: Vec<f64> = self
            .basis
            .offsets()
            .iter()
            .zip(self.target)
            .map(|(&o, t)| eta[o] - t)
            .collect();
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let objective =
            -decoded.theta_origin - theta_b.iter().zip(self.target).map(|(a, b)| a * b).sum::<f64>();
        if !grad_norm.is_finite() || !objective.is_finite() {
            return Err(Error::Overflow);
        }
        Ok(State {
            theta_b,
            log_values: decoded.log_values,
            theta_origin: decoded.theta_origin,
            eta,
            grad,
            grad_norm,
            objective,
        })
    }
}

/// Projects `p` onto the model of `s`, starting from `θ^B = 0` (the uniform tensor).
pub fn project(p: &DenseTensor, s: &InteractionSet, opts: &SolverOptions) -> Result<ProjectionResult> {
    let basis = s.basis(p.dims())?;
    let zeros = vec![0.0; basis.len()];
    project_basis(p, basis, opts, zeros)
}

/// Like [`project`] but starting from the given free parameters (parallel to
/// `s.basis(p.dims())`). The optimum does not depend on the start.
pub fn project_from(
    p: &DenseTensor,
    s: &InteractionSet,
    opts: &SolverOptions,
    theta_start: &[f64],
) -> Result<ProjectionResult> {
    let basis = s.basis(p.dims())?;
    if theta_start.len() != basis.len() {
        return Err(Error::InvalidOption(format!(
            "start has {} parameters, basis has {}",
            theta_start.len(),
            basis.len()
        )));
    }
    project_basis(p, basis, opts, theta_start.to_vec())
}

/// m-body approximation: projection onto all interactions of at most `m` modes.
pub fn m_body_approximation(p: &DenseTensor, m: usize, opts: &SolverOptions) -> Result<ProjectionResult> {
    project(p, &InteractionSet::m_body(p.order(), m)?, opts)
}

fn project_basis(
    p: &DenseTensor,
    basis: Basis,
    opts: &SolverOptions,
    theta_start: Vec<f64>,
) -> Result<ProjectionResult> {
    opts.validate()?;
    let (p_hat, scale) = normalize(p)?;
    let dims = p.dims();
    let eta_hat = eta_values(p_hat.values(), dims);
    let target: Vec<f64> = basis.offsets().iter().map(|&o| eta_hat[o]).collect();
    let problem = Problem {
        dims,
        basis: &basis,
        target: &target,
    };

    let mut state = problem.evaluate(theta_start)?;
    let mut best = state.clone();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        iterations += 1;
        if state.grad_norm < opts.tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        let g = fisher_from_eta(&state.eta, &basis);
        let delta = solve_damped(&g, &DVector::from_column_slice(&state.grad), opts.damping)?;

        let slack = 1e-13 * (1.0 + state.objective.abs());
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let candidate: Vec<f64> = state
                .theta_b
                .iter()
                .zip(delta.iter())
                .map(|(t, d)| t - step * d)
                .collect();
            if let Ok(st) = problem.evaluate(candidate) {
                if st.objective <= state.objective + slack {
                    next = Some(st);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(next) = next else {
            // No descent even along a tiny step: numerical floor.
            break;
        };
        state = next;
        if state.grad_norm < best.grad_norm {
            best = state.clone();
        }
    }
    let fin = if converged { state } else { best };

    let values: Vec<f64> = fin.log_values.iter().map(|v| v.exp() * scale).collect();
    let tensor = DenseTensor::new(dims.to_vec(), values)?;
    let kl = kl_divergence(p, &tensor).unwrap_or(f64::INFINITY);
    let eta_b = basis.offsets().iter().map(|&o| fin.eta[o]).collect();
    Ok(ProjectionResult {
        tensor,
        theta_b: fin.theta_b,
        eta_b,
        target_eta_b: target,
        theta_origin: fin.theta_origin,
        basis,
        scale,
        kl,
        iterations,
        converged,
        residual: fin.grad_norm,
    })
}
