//! Many-body approximation of non-negative tensors.
//!
//! A non-negative tensor is read as an (unnormalized) distribution over its
//! indices and expanded in the natural parameters θ of a log-linear model
//! on the index lattice. Choosing which groups of modes may interact (an
//! [`InteractionSet`]) fixes all other θ to zero; the KL-closest tensor in
//! that model is found by a convex Newton solve ([`project`]).
//!
//! Around that core the crate provides:
//!
//! * coordinate transforms between a tensor and its θ / η parameters ([`coords`]);
//! * factor extraction and tensor-ring export of projected tensors ([`factors`]);
//! * em-style completion of tensors with missing entries ([`lbtc`]);
//! * an IPF reference solver ([`ipf_project`]);
//! * a plain-text tensor format and the `manybody` command-line tool ([`io`], [`cli`]).
//!
//! ```
//! use manybody::{project, DenseTensor, InteractionSet, SolverOptions};
//!
//! let p = DenseTensor::new(vec![2, 2], vec![0.4, 0.1, 0.2, 0.3]).unwrap();
//! let s = InteractionSet::m_body(2, 1).unwrap();
//! let r = project(&p, &s, &SolverOptions::default()).unwrap();
//! assert!((r.tensor.get(&[0, 0]) - 0.3).abs() < 1e-6);
//! ```

pub mod cli;
pub mod completion;
pub mod coords;
pub mod error;
pub mod factors;
pub mod interactions;
pub mod io;
pub mod oracle;
pub mod projection;
pub mod tensor;

pub use completion::{lbtc, CompletionOptions, CompletionResult, InitStrategy};
pub use coords::{
    decode_theta, eta_from_tensor, tensor_from_eta, tensor_from_theta, theta_from_tensor, CoordKind,
    CoordTensor,
};
pub use error::{Error, Result};
pub use factors::{
    energy_terms, export_ring_cores, extract_factors, reconstruct_from_factors, EnergyTerms, Factor,
    FactorSet, RingCores, SplitPlan,
};
pub use interactions::{
    count_parameters, cyclic_set, enumerate_basis, m_body_set, parse_spec, Basis, InteractionSet,
    InteractionSpec,
};
pub use oracle::{ipf_project, marginal, OracleOptions};
pub use projection::{fisher_matrix, m_body_approximation, project, project_from, ProjectionResult, SolverOptions};
pub use tensor::{
    kl_divergence, normalize, random_ring_tensor, recovery_fit, relative_error, reshape, ring_contract,
    total_sum, DenseTensor, MaskedTensor, RingCore,
};
