//! Statevector toolkit for training quantum convolutional phase classifiers
//! on symmetric-noise data, plus exact-diagonalization and order-parameter
//! diagnostics used to validate the trained models.
//!
//! The crate is organized bottom-up:
//!
//! - [`pauli`] / [`state`]: Pauli-string algebra and dense statevector
//!   simulation with stride-based gate kernels.
//! - [`expm`]: matrix exponentials and their directional derivatives for
//!   small generator matrices.
//! - [`symmetry`]: symmetry groups, symmetric gate generators, twirls and
//!   centralizers.
//! - [`fixed_point`]: renormalization fixed-point wavefunctions of the three
//!   phases under study.
//! - [`dataset`]: symmetric-noise training data generated deterministically
//!   from seeds.
//! - [`qcnn`]: the convolutional circuit ansatz and its forward pass.
//! - [`train`]: softmax cross-entropy loss, exact adjoint gradients, Adam,
//!   and the curriculum training loop.
//! - [`exact_diag`]: Lanczos ground states and energy gaps of the validation
//!   Hamiltonians, and phase sweeps of trained classifiers across them.
//! - [`order_param`]: string order, a multi-copy-style membrane order
//!   parameter, and symmetry-breaking correlators.
//! - [`twirl_mc`]: Monte Carlo twirling experiments over random symmetric
//!   circuits.
//!
//! All randomness flows through explicit u64 seeds (see [`rng`]); every
//! public operation is deterministic given its inputs, independent of thread
//! count.

pub mod config;
pub mod dataset;
pub mod exact_diag;
pub mod exec;
pub mod expm;
pub mod fixed_point;
pub mod order_param;
pub mod pauli;
pub mod qcnn;
pub mod rng;
pub mod state;
pub mod symmetry;
pub mod train;
pub mod twirl_mc;

#[cfg(test)]
pub(crate) mod test_util;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operands with incompatible sizes (qubit counts, vector lengths, ...).
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A configuration value outside its documented domain.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An iterative solver failed to reach its tolerance within its budget.
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
