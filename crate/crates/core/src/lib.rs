// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulator for quantum-secured distributed secondary control of AC and DC
//! microgrids.
//!
//! * [`engine`]: dense Lindblad evolution with swap and rotation-Z jumps.
//! * [`measurement`]: basis readout, shot sampling, phase estimators and the
//!   eavesdropper experiment.
//! * [`consensus`]: the phase-consensus protocol on three backends and its
//!   guaranteed convergence rate.
//! * [`microgrid`]: AC and DC plants closed around the protocol.
//! * [`scenario`]: JSON scenario files and the runner behind the CLI.

pub mod consensus;
pub mod engine;
pub mod measurement;
pub mod microgrid;
pub mod netgraph;
pub mod sampling;
pub mod scenario;
pub mod series;

// Guide chapters double as doctests so their snippets keep compiling.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    struct Quickstart;
    #[doc = include_str!("../../../book/src/engine.md")]
    struct Engine;
    #[doc = include_str!("../../../book/src/measurement.md")]
    struct Measurement;
    #[doc = include_str!("../../../book/src/consensus.md")]
    struct Consensus;
    #[doc = include_str!("../../../book/src/microgrids.md")]
    struct Microgrids;
    #[doc = include_str!("../../../book/src/scenarios.md")]
    struct Scenarios;
}
