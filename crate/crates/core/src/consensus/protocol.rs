// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::dynamics::{bloch_rhs_frozen, polar_rhs, rk4};
use super::{lyapunov_mean_pinner, ConsensusError, Trajectory};
use crate::engine::{
    depolarize_local, depolarizing_shrink, evolve, local_blochs, product_state, BlochVector,
    JumpSet, PureQubitSpec,
};
use crate::measurement::{qdc_from_expectation, qsdc_from_expectations, read, Basis, PhaseEstimate, Readout};
use crate::netgraph::CommGraph;
use crate::sampling::{stream, StreamTag, ThetaDistribution};

/// In-plane coherence below which a node's measurement is discarded and its
/// previous phase kept.
pub const MIN_COHERENCE: f64 = 1e-3;

/// Pinners within this distance outside `[0, π/2]` are clamped silently.
pub const PINNER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dense density matrix of the whole network.
    #[default]
    Full,
    /// Closed ODE for the node-local Bloch vectors.
    Bloch,
    /// Polar `(φ, s)` form of the Bloch ODE.
    Phase,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Full => "full",
            Backend::Bloch => "bloch",
            Backend::Phase => "phase",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Random θ per step and the twin-qubit atan2 estimator.
    #[default]
    Qsdc,
    /// Equatorial preparation and `arccos⟨σx⟩`.
    QdcLegacy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Qsdc => "qsdc",
            Mode::QdcLegacy => "qdc_legacy",
        }
    }
}

fn default_dt() -> f64 {
    0.01
}

fn default_substeps() -> usize {
    4
}

fn default_readout() -> Readout {
    Readout::Exact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_readout")]
    pub readout: Readout,
    #[serde(default)]
    pub theta: ThetaDistribution,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            substeps: default_substeps(),
            readout: default_readout(),
            theta: ThetaDistribution::default(),
            backend: Backend::default(),
            mode: Mode::default(),
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(ConsensusError::Config(format!(
                "dt must lie in (0, 0.1], got {}",
                self.dt
            )));
        }
        if self.substeps == 0 {
            return Err(ConsensusError::Config("substeps must be at least 1".into()));
        }
        if self.readout == Readout::Shots(0) {
            return Err(ConsensusError::Config("shots must be at least 1".into()));
        }
        self.effective_theta().validate()?;
        Ok(())
    }

    /// The θ distribution actually used: the legacy mode always prepares on
    /// the equator.
    pub fn effective_theta(&self) -> ThetaDistribution {
        match self.mode {
            Mode::Qsdc => self.theta,
            Mode::QdcLegacy => ThetaDistribution::EQUATOR,
        }
    }
}

/// Per-node protocol state after a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeState {
    /// Current phase estimate.
    pub phi: f64,
    /// θ prepared for the step that produced `phi`.
    pub theta: f64,
    /// Prepared coherence `sin θ`.
    pub s: f64,
    /// Target phase used in that step, after clamping.
    pub pinner: f64,
}

impl NodeState {
    pub fn initial(phi: f64) -> Self {
        Self {
            phi,
            theta: FRAC_PI_2,
            s: 1.0,
            pinner: phi,
        }
    }
}

/// Depolarizing noise injected after evolution on a set of nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MixingEvent {
    pub nodes: Vec<usize>,
    /// Active from `start` (inclusive) ...
    pub start: f64,
    /// ... to `end` (exclusive); open-ended when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    /// Depolarizing strength `p` of each application.
    pub strength: f64,
    /// Chance that the event fires on a given node at a given step.
    #[serde(default = "one")]
    pub probability: f64,
}

fn one() -> f64 {
    1.0
}

impl MixingEvent {
    pub fn validate(&self, nodes: usize, horizon: f64) -> Result<(), ConsensusError> {
        let bad = |m: String| Err(ConsensusError::Mixing(m));
        if !(0.0..=1.0).contains(&self.strength) {
            return bad(format!("strength {} outside [0, 1]", self.strength));
        }
        if !(0.0..=1.0).contains(&self.probability) {
            return bad(format!("probability {} outside [0, 1]", self.probability));
        }
        if !(self.start >= 0.0 && self.start <= horizon) {
            return bad(format!("start {} outside [0, {horizon}]", self.start));
        }
        if let Some(end) = self.end {
            if !(end >= self.start && end <= horizon) {
                return bad(format!("end {end} outside [{}, {horizon}]", self.start));
            }
        }
        if let Some(&i) = self.nodes.iter().find(|&&i| i >= nodes) {
            return bad(format!("node {i} out of range for {nodes} nodes"));
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && self.end.is_none_or(|e| t < e)
    }
}

/// Effective depolarizing strength per node for the step starting at `t`.
/// Overlapping events compose multiplicatively in their shrink factors.
pub fn active_mixing(events: &[MixingEvent], t: f64, step: u64, seed: u64, nodes: usize) -> Vec<f64> {
    let mut shrink = vec![1.0; nodes];
    let mut rngs: Vec<Option<rand_chacha::ChaCha8Rng>> = vec![None; nodes];
    for ev in events.iter().filter(|e| e.is_active(t)) {
        for &i in &ev.nodes {
            let fires = ev.probability >= 1.0 || {
                let rng = rngs[i].get_or_insert_with(|| stream(seed, i as u64, step, StreamTag::Mixing));
                rng.random::<f64>() < ev.probability
            };
            if fires {
                shrink[i] *= depolarizing_shrink(ev.strength);
            }
        }
    }
    shrink.into_iter().map(|f| 0.75 * (1.0 - f)).collect()
}

/// Everything a single protocol iteration needs besides the node states.
#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub pinners: &'a [f64],
    /// Step counter; keys the random streams.
    pub step: u64,
    /// Depolarizing strength per node (0 for none).
    pub mixing: &'a [f64],
    /// Explicit θ per node instead of fresh draws.
    pub thetas: Option<&'a [f64]>,
    /// Offline nodes neither evolve nor update.
    pub online: Option<&'a [bool]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Node-local Bloch vectors just before measurement.
    pub blochs: Vec<BlochVector>,
    /// `None` for offline nodes and for nodes whose measurement was discarded.
    pub estimates: Vec<Option<PhaseEstimate>>,
    pub diagnostics: Vec<String>,
    /// Nodes whose pinner was clamped into `[0, π/2]`.
    pub clamped: Vec<usize>,
}

fn check_len(expected: usize, found: usize) -> Result<(), ConsensusError> {
    if expected == found {
        Ok(())
    } else {
        Err(ConsensusError::DimensionMismatch { expected, found })
    }
}

/// One protocol iteration: prepare, rotate, evolve, mix, measure.
pub fn qsdc_step(
    states: &[NodeState],
    graph: &CommGraph,
    config: &ProtocolConfig,
    input: &StepInput<'_>,
) -> Result<(Vec<NodeState>, StepReport), ConsensusError> {
    let n = graph.node_count();
    check_len(n, states.len())?;
    check_len(n, input.pinners.len())?;
    check_len(n, input.mixing.len())?;
    if let Some(t) = input.thetas {
        check_len(n, t.len())?;
    }
    let all_online = vec![true; n];
    let online = input.online.unwrap_or(&all_online);
    check_len(n, online.len())?;

    let dist = config.effective_theta();
    let thetas: Vec<f64> = match (input.thetas, config.mode) {
        (Some(t), Mode::Qsdc) => t.to_vec(),
        _ => (0..n)
            .map(|i| dist.sample(&mut stream(config.seed, i as u64, input.step, StreamTag::Theta)))
            .collect(),
    };
    let mut clamped = Vec::new();
    let pinners: Vec<f64> = input
        .pinners
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let c = p.clamp(0.0, FRAC_PI_2);
            // round-off around an empty load does not count as a clamp
            if online[i] && (c - p).abs() > PINNER_SLACK {
                log::debug!("pinner {p} of node {i} clamped to {c}");
                clamped.push(i);
            }
            c
        })
        .collect();
    let phis: Vec<f64> = states.iter().map(|s| s.phi).collect();
    let alphas: Vec<f64> = (0..n)
        .map(|i| if online[i] { pinners[i] - phis[i] } else { 0.0 })
        .collect();
    let live = graph.restricted_to(online);

    let blochs = match config.backend {
        Backend::Full => {
            let specs = thetas
                .iter()
                .zip(&phis)
                .map(|(&t, &p)| PureQubitSpec::from_estimate(t, p))
                .collect::<Result<Vec<_>, _>>()?;
            let rho = product_state(&specs)?;
            let jumps = JumpSet::for_graph(&live, &alphas)?;
            let mut rho = evolve(&rho, &jumps, config.dt, config.substeps)?;
            for (i, &p) in input.mixing.iter().enumerate() {
                if p > 0.0 {
                    rho = depolarize_local(&rho, i, p)?;
                }
            }
            local_blochs(&rho)?
        }
        Backend::Bloch => {
            let init: Vec<BlochVector> = thetas
                .iter()
                .zip(&phis)
                .map(|(&t, &p)| BlochVector::from_polar(1.0, t, p))
                .collect();
            let state = [
                init.iter().map(|b| b.x).collect(),
                init.iter().map(|b| b.y).collect(),
                init.iter().map(|b| b.z).collect(),
            ];
            let [x, y, z] = rk4(state, config.dt, config.substeps, |v| {
                bloch_rhs_frozen(&v[0], &v[1], &v[2], &alphas, &live)
            })?;
            (0..n)
                .map(|i| BlochVector::new(x[i], y[i], z[i]).scaled(depolarizing_shrink(input.mixing[i])))
                .collect()
        }
        Backend::Phase => {
            let s0: Vec<f64> = thetas.iter().map(|t| t.sin()).collect();
            let [phi, s] = rk4([phis.clone(), s0], config.dt, config.substeps, |v| {
                polar_rhs(&v[0], &v[1], &alphas, &live)
            })?;
            // z is not tracked here; report the prepared value
            (0..n)
                .map(|i| {
                    let f = depolarizing_shrink(input.mixing[i]);
                    BlochVector::new(s[i] * phi[i].cos(), s[i] * phi[i].sin(), thetas[i].cos())
                        .scaled(f)
                })
                .collect()
        }
    };

    let mut out = Vec::with_capacity(n);
    let mut estimates = Vec::with_capacity(n);
    let mut diagnostics = Vec::new();
    for i in 0..n {
        let mut next = NodeState {
            phi: phis[i],
            theta: thetas[i],
            s: thetas[i].sin(),
            pinner: pinners[i],
        };
        if !online[i] {
            next.pinner = states[i].pinner;
            out.push(next);
            estimates.push(None);
            continue;
        }
        let b = &blochs[i];
        let est = if b.s() < MIN_COHERENCE {
            Err(format!(
                "step {}: node {i} coherence {:.3e} below {MIN_COHERENCE:e}; phase kept",
                input.step,
                b.s()
            ))
        } else {
            estimate(b, config, i as u64, input.step).map_err(|e| format!("step {}: node {i}: {e}; phase kept", input.step))
        };
        match est {
            Ok(e) => {
                next.phi = e.phi_hat;
                estimates.push(Some(e));
            }
            Err(msg) => {
                log::warn!("{msg}");
                diagnostics.push(msg);
                estimates.push(None);
            }
        }
        out.push(next);
    }
    Ok((
        out,
        StepReport {
            blochs,
            estimates,
            diagnostics,
            clamped,
        },
    ))
}

fn estimate(
    b: &BlochVector,
    config: &ProtocolConfig,
    node: u64,
    step: u64,
) -> Result<PhaseEstimate, ConsensusError> {
    let shots = config.readout.shots();
    let rx = read(b, Basis::X, config.readout, config.seed, node, step)?;
    Ok(match config.mode {
        Mode::Qsdc => {
            let ry = read(b, Basis::Y, config.readout, config.seed, node, step)?;
            qsdc_from_expectations(rx.expectation, ry.expectation, 2 * shots)?
        }
        Mode::QdcLegacy => qdc_from_expectation(rx.expectation, shots),
    })
}

/// A running protocol instance: graph, configuration, node states and the
/// step counter.
#[derive(Debug, Clone)]
pub struct Protocol {
    graph: CommGraph,
    config: ProtocolConfig,
    nodes: Vec<NodeState>,
    step: u64,
    first_thetas: Option<Vec<f64>>,
}

impl Protocol {
    /// `init_thetas`, when given, replaces the random draw of the first step.
    pub fn new(
        graph: CommGraph,
        config: ProtocolConfig,
        init_phis: &[f64],
        init_thetas: Option<&[f64]>,
    ) -> Result<Self, ConsensusError> {
        config.validate()?;
        let n = graph.node_count();
        check_len(n, init_phis.len())?;
        if let Some(&p) = init_phis.iter().find(|p| !p.is_finite()) {
            return Err(ConsensusError::Config(format!("initial phase {p} is not finite")));
        }
        if let Some(t) = init_thetas {
            check_len(n, t.len())?;
            for &th in t {
                ThetaDistribution::Fixed { theta: th }.validate()?;
            }
        }
        Ok(Self {
            nodes: init_phis.iter().map(|&p| NodeState::initial(p)).collect(),
            graph,
            config,
            step: 0,
            first_thetas: init_thetas.map(<[f64]>::to_vec),
        })
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn phis(&self) -> Vec<f64> {
        self.nodes.iter().map(|s| s.phi).collect()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(
        &mut self,
        pinners: &[f64],
        mixing: &[f64],
        online: Option<&[bool]>,
    ) -> Result<StepReport, ConsensusError> {
        let thetas = if self.step == 0 {
            self.first_thetas.clone()
        } else {
            None
        };
        let input = StepInput {
            pinners,
            step: self.step,
            mixing,
            thetas: thetas.as_deref(),
            online,
        };
        let (nodes, report) = qsdc_step(&self.nodes, &self.graph, &self.config, &input)?;
        self.nodes = nodes;
        self.step += 1;
        Ok(report)
    }
}

/// Runs the protocol against constant per-node pinners for `horizon` units
/// of protocol time, recording phases, pinners and `V` after every step.
pub fn run_consensus(
    init_phis: &[f64],
    init_thetas: Option<&[f64]>,
    pinners: &[f64],
    graph: &CommGraph,
    config: &ProtocolConfig,
    horizon: f64,
    events: &[MixingEvent],
) -> Result<Trajectory, ConsensusError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ConsensusError::Config(format!("horizon must be positive, got {horizon}")));
    }
    let n = graph.node_count();
    check_len(n, pinners.len())?;
    for ev in events {
        ev.validate(n, horizon)?;
    }
    let mut proto = Protocol::new(graph.clone(), config.clone(), init_phis, init_thetas)?;
    let steps = ((horizon / config.dt).round() as u64).max(1);
    let mut traj = Trajectory::new(n, config);
    let clamped: Vec<f64> = pinners.iter().map(|p| p.clamp(0.0, FRAC_PI_2)).collect();
    traj.push(0.0, &proto.phis(), &clamped, lyapunov_mean_pinner(&proto.phis(), &clamped));
    for k in 0..steps {
        let t = k as f64 * config.dt;
        let mixing = active_mixing(events, t, k, config.seed, n);
        let report = proto.step(pinners, &mixing, None)?;
        traj.diagnostics.extend(report.diagnostics);
        let pins: Vec<f64> = proto.nodes().iter().map(|s| s.pinner).collect();
        let phis = proto.phis();
        traj.push((k + 1) as f64 * config.dt, &phis, &pins, lyapunov_mean_pinner(&phis, &pins));
    }
    Ok(traj)
}
