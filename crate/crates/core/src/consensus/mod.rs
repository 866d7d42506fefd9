// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! The phase-consensus protocol and its convergence analysis.
//!
//! Each step prepares every node at `(θ_i, φ_i)` with a fresh random `θ_i`,
//! sets the node's rotation-Z angle to `φ_t,i − φ_i`, evolves the network
//! for `dt`, then re-estimates `φ_i` from the node's `⟨σx⟩` and `⟨σy⟩`.
//!
//! Three backends produce the same node-local statistics:
//!
//! * `full` evolves the `2^n × 2^n` density matrix (n ≤ 10);
//! * `bloch` integrates the closed linear ODE for the local Bloch vectors;
//! * `phase` integrates the same flow in polar form `(φ_i, s_i)`.

mod analysis;
mod dynamics;
mod protocol;
mod trajectory;

use thiserror::Error;

use crate::engine::EngineError;
use crate::measurement::MeasurementError;
use crate::netgraph::GraphError;
use crate::sampling::DistributionError;

pub use analysis::{
    convergence_rate, fit_decay_rate, lyapunov, lyapunov_mean_pinner, settling_time, sinc,
    summarize, ConsensusSummary, SETTLING_TOL,
};
pub use dynamics::{bloch_rhs, bloch_rhs_frozen, phase_rhs, polar_rhs};
pub use protocol::{
    active_mixing, qsdc_step, run_consensus, Backend, MixingEvent, Mode, NodeState, Protocol,
    ProtocolConfig, StepInput, StepReport, MIN_COHERENCE, PINNER_SLACK,
};
pub use trajectory::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsensusError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Theta(#[from] DistributionError),
    #[error("invalid protocol configuration: {0}")]
    Config(String),
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("node {node} has zero coherence; its phase is undefined")]
    ZeroCoherence { node: usize },
    #[error("epsilon {0} outside [0, π/2); the invariant-set argument needs ε < π/2")]
    OutOfRegion(f64),
    #[error("series too short: {0}")]
    TooShort(String),
    #[error("mixing event: {0}")]
    Mixing(String),
}
