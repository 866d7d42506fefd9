// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense density-matrix engine for small qubit networks.
//!
//! The network state is a `2^n × 2^n` density matrix evolving under a
//! Hamiltonian-free Lindblad equation whose jump operators are all unitary:
//! one rotation-Z "pin" per node and one swap per communication edge.
//! Because every jump is unitary the dissipator simplifies to
//! `Σ γ_k (C_k ρ C_k† − ρ)`, and both jump families are applied
//! structurally (a diagonal phase or a basis permutation), never as dense
//! products.
//!
//! Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
//! basis index.

mod jumps;
mod lindblad;
pub mod matrix;
mod state;

use thiserror::Error;

pub use jumps::{rz_jump, swap_jump, Jump, JumpKind, JumpSet};
pub use lindblad::{evolve, integrate, lindblad_rhs, lindblad_rhs_matrix, DIVERGENCE_TOL};
pub use matrix::ComplexMatrix;
pub use state::{
    bloch_of, conjugate_single, depolarize_local, depolarizing_shrink, local_blochs,
    partial_trace_single, product_state, BlochVector, DensityMatrix, PureQubitSpec, STATE_TOL,
};

/// Largest network the dense backend accepts.
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("{qubits} qubits exceed the dense backend limit of {MAX_QUBITS}; use the bloch or phase backend")]
    Capacity { qubits: usize },
    #[error("qubit {qubit} out of range for a {qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, qubits: usize },
    #[error("swap needs two distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("theta {0} outside (0, π)")]
    ThetaOutOfRange(f64),
    #[error("phi {0} outside [0, π/2]")]
    PhiOutOfRange(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("substeps must be at least 1")]
    BadSubsteps,
    #[error("integration diverged: {0}")]
    IntegrationDiverged(String),
}

/// Bit mask of qubit `i` in an `n`-qubit basis index.
#[inline]
pub(crate) fn bit_of(i: usize, n: usize) -> usize {
    1 << (n - 1 - i)
}
