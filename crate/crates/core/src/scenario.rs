// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! JSON scenario files: parsing, validation and dispatch.
//!
//! A scenario names its `kind`, the communication graph, protocol settings,
//! one section matching the kind, events and a horizon. Unknown keys are
//! rejected with the JSON path of the offending key.
//!
//! ```
//! let text = r#"{
//!   "schema_version": 1,
//!   "kind": "rate",
//!   "graph": { "nodes": 3, "edges": [[0, 1], [1, 2], [0, 2]] },
//!   "rate": { "epsilon": 1.0471975511965976 }
//! }"#;
//! let sc = qsdc::scenario::parse_str(text).unwrap();
//! let out = qsdc::scenario::run_scenario(&sc, sc.kind).unwrap();
//! let json = out.summary_json();
//! assert!(json.contains("\"mu\": 0.8269"));
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};
use thiserror::Error;

use crate::consensus::{
    convergence_rate, run_consensus, summarize, Backend, ConsensusError, ConsensusSummary,
    MixingEvent, ProtocolConfig, Trajectory,
};
use crate::measurement::{
    eve_intercept, prepared_stream, Basis, EveExpectation, EveReport, MeasurementError, Readout,
};
use crate::microgrid::{
    self, run_ac, run_dc, AcDer, AcNetwork, DcDer, DcNetwork, Event, MicrogridError, PlantSummary,
    TimeSeries,
};
use crate::netgraph::{build_graph, CommGraph, GraphError, SpectralReport};
use crate::sampling::ThetaDistribution;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Consensus(#[from] ConsensusError),
    #[error("{0}")]
    Microgrid(#[from] MicrogridError),
    #[error("{0}")]
    Measurement(#[from] MeasurementError),
    /// The run started but could not be completed.
    #[error("run aborted: {0}")]
    Divergence(String),
}

impl ScenarioError {
    /// 1 for anything found before the run starts, 2 for a run that fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Divergence(_) => 2,
            _ => 1,
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Consensus,
    Ac,
    Dc,
    Eve,
    Rate,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Consensus => "consensus",
            ScenarioKind::Ac => "ac",
            ScenarioKind::Dc => "dc",
            ScenarioKind::Eve => "eve",
            ScenarioKind::Rate => "rate",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Undirected graph as a node count, an edge list and optional weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub nodes: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl GraphSpec {
    pub fn build(&self) -> Result<CommGraph, GraphError> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        build_graph(self.nodes, &edges, self.weights.as_deref())
    }
}

/// One target for every node, or one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum Pinner {
    Common(f64),
    PerNode(Vec<f64>),
}

impl Pinner {
    pub fn expand(&self, n: usize) -> Vec<f64> {
        match self {
            Pinner::Common(p) => vec![*p; n],
            Pinner::PerNode(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ConsensusSection {
    pub initial_phi: Vec<f64>,
    /// Preparation angles of the first step; drawn when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_theta: Option<Vec<f64>>,
    pub pinner: Pinner,
    #[serde(default)]
    pub mixing: Vec<MixingEvent>,
}

impl ConsensusSection {
    /// `max_i |φ_i(0) − φ*_i|`.
    pub fn initial_deviation(&self) -> f64 {
        let p = self.pinner.expand(self.initial_phi.len());
        self.initial_phi
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn default_freq() -> f64 {
    60.0
}

fn default_ac_voltage() -> f64 {
    380.0
}

fn default_dc_voltage() -> f64 {
    48.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AcSection {
    pub ders: Vec<AcDer>,
    /// Electrical lines; weights are the coupling strengths in kW.
    pub electrical: GraphSpec,
    pub loads_kw: Vec<f64>,
    #[serde(default = "default_freq")]
    pub freq_nominal_hz: f64,
    #[serde(default = "default_ac_voltage")]
    pub voltage_nominal_v: f64,
    /// Phase scaling; `0.8·(π/2)/max(n_i·rated_i)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DcSection {
    pub ders: Vec<DcDer>,
    #[serde(default = "default_dc_voltage")]
    pub v_nominal: f64,
    /// Initial load; absent means open circuit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_resistance_ohm: Option<f64>,
    /// Phase scaling; `0.8·(π/2)/max(m_i·I_rated,i)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

fn all_bases() -> Vec<Basis> {
    Basis::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EveSection {
    /// Phase the sender encodes.
    pub phi: f64,
    /// Preparation angle distribution; may reach the poles.
    pub theta: ThetaDistribution,
    /// Intercepted qubits, each measured once per basis.
    pub shots: u64,
    #[serde(default = "all_bases")]
    pub bases: Vec<Basis>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RateSection {
    /// Bound on the initial deviation; taken from the consensus section
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem; the scenario file name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Communication graph; edge weights are the swap rates.
    pub graph: GraphSpec,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    /// Simulated time, s (plants) or protocol time units (consensus).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus: Option<ConsensusSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac: Option<AcSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc: Option<DcSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve: Option<EveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSection>,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

/// JSON Schema of [`ScenarioFile`], as shipped in `scenarios/schema.json`.
pub fn json_schema() -> String {
    let schema = schemars::schema_for!(ScenarioFile);
    serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_str(&text)
}

/// Parses and validates scenario JSON.
pub fn parse_str(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::Parse {
            path: if path.is_empty() { "$".into() } else { format!("$.{path}") },
            msg: e.into_inner().to_string(),
        }
    })?;
    sc.validate()?;
    Ok(sc)
}

impl ScenarioFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn horizon_required(&self) -> Result<f64, ScenarioError> {
        match self.horizon {
            Some(h) if h > 0.0 && h.is_finite() => Ok(h),
            Some(h) => invalid(format!("horizon must be positive, got {h}")),
            None => invalid(format!("a {} scenario needs a horizon", self.kind)),
        }
    }

    /// Structural and physical checks. Runs with every section the kind
    /// needs; sections for other kinds are checked when present.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let graph = self.graph.build()?;
        self.protocol.validate()?;
        let n = graph.node_count();
        let need = |present: bool, what: &str| -> Result<(), ScenarioError> {
            if present {
                Ok(())
            } else {
                invalid(format!("a {} scenario needs a `{what}` section", self.kind))
            }
        };
        match self.kind {
            ScenarioKind::Consensus => need(self.consensus.is_some(), "consensus")?,
            ScenarioKind::Ac => need(self.ac.is_some(), "ac")?,
            ScenarioKind::Dc => need(self.dc.is_some(), "dc")?,
            ScenarioKind::Eve => need(self.eve.is_some(), "eve")?,
            ScenarioKind::Rate => {}
        }
        if matches!(self.kind, ScenarioKind::Consensus | ScenarioKind::Ac | ScenarioKind::Dc) {
            self.horizon_required()?;
        }
        if !self.events.is_empty() && !matches!(self.kind, ScenarioKind::Ac | ScenarioKind::Dc) {
            return invalid("events apply to ac and dc scenarios only; use consensus.mixing");
        }
        if let Some(c) = &self.consensus {
            if c.initial_phi.len() != n {
                return invalid(format!("consensus.initial_phi has {} entries for {n} nodes", c.initial_phi.len()));
            }
            if let Pinner::PerNode(p) = &c.pinner {
                if p.len() != n {
                    return invalid(format!("consensus.pinner has {} entries for {n} nodes", p.len()));
                }
            }
            if c.pinner.expand(n).iter().any(|p| !(0.0..=FRAC_PI_2).contains(p)) {
                return invalid("consensus.pinner must lie in [0, π/2]");
            }
            if let Some(t) = &c.initial_theta {
                if t.len() != n {
                    return invalid(format!("consensus.initial_theta has {} entries for {n} nodes", t.len()));
                }
            }
            let h = self.horizon.unwrap_or(f64::INFINITY);
            for m in &c.mixing {
                m.validate(n, h)?;
            }
        }
        if let Some(ac) = &self.ac {
            let net = self.ac_network_with(&graph, ac)?;
            net.validate()?;
            self.check_events(n)?;
        }
        if let Some(dc) = &self.dc {
            let net = self.dc_network_with(&graph, dc);
            net.validate()?;
            self.check_events(n)?;
        }
        if let Some(eve) = &self.eve {
            if !(eve.phi.is_finite()) {
                return invalid("eve.phi must be finite");
            }
            let ok = match eve.theta {
                ThetaDistribution::Uniform { lo, hi } => 0.0 <= lo && lo < hi && hi <= PI,
                ThetaDistribution::Fixed { theta } => (0.0..=PI).contains(&theta),
            };
            if !ok {
                return invalid("eve.theta must lie within [0, π]");
            }
            if eve.shots == 0 {
                return invalid("eve.shots must be at least 1");
            }
            if eve.bases.is_empty() {
                return invalid("eve.bases is empty");
            }
        }
        if let Some(RateSection { epsilon: Some(e) }) = &self.rate {
            if !(0.0..FRAC_PI_2).contains(e) {
                return invalid(format!("rate.epsilon {e} outside [0, π/2)"));
            }
        }
        Ok(())
    }

    fn check_events(&self, n: usize) -> Result<(), ScenarioError> {
        let h = self.horizon_required()?;
        for ev in &self.events {
            ev.validate_common(n, h)?;
        }
        Ok(())
    }

    fn ac_network_with(&self, comm: &CommGraph, ac: &AcSection) -> Result<AcNetwork, ScenarioError> {
        let electrical = ac.electrical.build()?;
        if ac.electrical.weights.is_none() {
            return invalid("ac.electrical.weights (line coupling in kW) are required");
        }
        Ok(AcNetwork {
            k: ac.k.unwrap_or_else(|| microgrid::default_k(&ac.ders)),
            ders: ac.ders.clone(),
            electrical,
            comm: comm.clone(),
            loads_kw: ac.loads_kw.clone(),
            freq_nominal_hz: ac.freq_nominal_hz,
            voltage_nominal_v: ac.voltage_nominal_v,
        })
    }

    fn dc_network_with(&self, comm: &CommGraph, dc: &DcSection) -> DcNetwork {
        DcNetwork {
            c: dc.c.unwrap_or_else(|| microgrid::default_c(&dc.ders)),
            ders: dc.ders.clone(),
            comm: comm.clone(),
            v_nominal: dc.v_nominal,
            load_resistance_ohm: dc.load_resistance_ohm,
        }
    }

    pub fn ac_network(&self) -> Result<AcNetwork, ScenarioError> {
        let Some(ac) = &self.ac else {
            return invalid("scenario has no `ac` section");
        };
        self.ac_network_with(&self.graph.build()?, ac)
    }

    pub fn dc_network(&self) -> Result<DcNetwork, ScenarioError> {
        let Some(dc) = &self.dc else {
            return invalid("scenario has no `dc` section");
        };
        Ok(self.dc_network_with(&self.graph.build()?, dc))
    }

    /// Command-line style overrides, applied before validation.
    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<(), ScenarioError> {
        if let Some(b) = o.backend {
            self.protocol.backend = b;
        }
        if let Some(r) = o.readout {
            self.protocol.readout = r;
            if let (Some(eve), Readout::Shots(s)) = (self.eve.as_mut(), r) {
                eve.shots = s;
            }
        }
        if let Some(s) = o.seed {
            self.protocol.seed = s;
        }
        if let Some(dt) = o.dt {
            self.protocol.dt = dt;
        }
        if let Some(e) = o.epsilon {
            self.rate.get_or_insert_with(RateSection::default).epsilon = Some(e);
        }
        self.validate()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub backend: Option<Backend>,
    pub readout: Option<Readout>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusOutcome {
    #[serde(flatten)]
    pub summary: ConsensusSummary,
    pub initial_deviation: f64,
    /// Guaranteed rate at the initial deviation, when it lies in the region.
    pub mu: Option<f64>,
    /// `fitted_decay_rate / (2μ)`.
    pub rate_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EveOutcome {
    pub phi: f64,
    pub shots: u64,
    pub report: EveReport,
    pub expected: EveExpectation,
    /// `|naive_phi − φ|`.
    pub naive_error: f64,
    /// Two-sided binomial p-value of the Z counts against p = 1/2.
    pub z_p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateOutcome {
    pub nodes: usize,
    pub epsilon: f64,
    pub mu: f64,
    pub algebraic_connectivity: f64,
}

#[derive(Debug, Clone)]
pub enum RunOutput {
    Consensus(Trajectory, ConsensusOutcome),
    Plant(TimeSeries, PlantSummary),
    Eve(EveOutcome),
    Rate(RateOutcome),
}

impl RunOutput {
    pub fn csv(&self) -> Option<String> {
        match self {
            RunOutput::Consensus(t, _) => Some(t.to_csv()),
            RunOutput::Plant(ts, _) => Some(ts.to_csv()),
            RunOutput::Eve(_) | RunOutput::Rate(_) => None,
        }
    }

    pub fn summary_json(&self) -> String {
        let v = match self {
            RunOutput::Consensus(_, s) => serde_json::to_string_pretty(s),
            RunOutput::Plant(_, s) => serde_json::to_string_pretty(s),
            RunOutput::Eve(s) => serde_json::to_string_pretty(s),
            RunOutput::Rate(s) => serde_json::to_string_pretty(s),
        };
        v.expect("summary serializes") + "\n"
    }
}

fn runtime(e: impl fmt::Display) -> ScenarioError {
    ScenarioError::Divergence(e.to_string())
}

/// Runs `sc` as `what`. A consensus scenario can also be run as `rate`;
/// otherwise `what` must match the scenario kind.
pub fn run_scenario(sc: &ScenarioFile, what: ScenarioKind) -> Result<RunOutput, ScenarioError> {
    sc.validate()?;
    if what != sc.kind && !(what == ScenarioKind::Rate && sc.kind == ScenarioKind::Consensus) {
        return invalid(format!("cannot run a {} scenario as {what}", sc.kind));
    }
    match what {
        ScenarioKind::Consensus => run_consensus_scenario(sc),
        ScenarioKind::Ac => {
            let net = sc.ac_network()?;
            let ts = run_ac(&net, &sc.protocol, &sc.events, sc.horizon_required()?).map_err(runtime)?;
            let s = microgrid::summarize(&ts)?;
            Ok(RunOutput::Plant(ts, s))
        }
        ScenarioKind::Dc => {
            let net = sc.dc_network()?;
            let ts = run_dc(&net, &sc.protocol, &sc.events, sc.horizon_required()?).map_err(runtime)?;
            let s = microgrid::summarize(&ts)?;
            Ok(RunOutput::Plant(ts, s))
        }
        ScenarioKind::Eve => run_eve(sc),
        ScenarioKind::Rate => run_rate(sc),
    }
}

fn run_consensus_scenario(sc: &ScenarioFile) -> Result<RunOutput, ScenarioError> {
    let c = sc.consensus.as_ref().expect("validated");
    let graph = sc.graph.build()?;
    let n = graph.node_count();
    let traj = run_consensus(
        &c.initial_phi,
        c.initial_theta.as_deref(),
        &c.pinner.expand(n),
        &graph,
        &sc.protocol,
        sc.horizon_required()?,
        &c.mixing,
    )
    .map_err(runtime)?;
    let summary = summarize(&traj)?;
    let eps = c.initial_deviation();
    let mu = convergence_rate(&graph, eps).ok();
    let rate_ratio = match (summary.fitted_decay_rate, mu) {
        (Some(f), Some(m)) if m > 0.0 => Some(f / (2.0 * m)),
        _ => None,
    };
    Ok(RunOutput::Consensus(
        traj,
        ConsensusOutcome {
            summary,
            initial_deviation: eps,
            mu,
            rate_ratio,
        },
    ))
}

fn run_eve(sc: &ScenarioFile) -> Result<RunOutput, ScenarioError> {
    let eve = sc.eve.as_ref().expect("validated");
    let steps = usize::try_from(eve.shots).map_err(|_| ScenarioError::Invalid("eve.shots too large".into()))?;
    let seed = sc.protocol.seed;
    let stream_in = prepared_stream(eve.phi, &eve.theta, steps, seed);
    let report = eve_intercept(&stream_in, &eve.bases, 1, steps, seed)?;
    let z_p_value = report
        .bases
        .get(&Basis::Z)
        .map(|h| binomial_two_sided(h.zeros, h.shots()));
    Ok(RunOutput::Eve(EveOutcome {
        phi: eve.phi,
        shots: eve.shots,
        naive_error: (report.naive_phi - eve.phi).abs(),
        expected: EveExpectation::analytic(eve.phi, &eve.theta),
        report,
        z_p_value,
    }))
}

/// Exact two-sided binomial test of `k` successes in `n` fair trials.
pub fn binomial_two_sided(k: u64, n: u64) -> f64 {
    let Ok(b) = Binomial::new(0.5, n) else {
        return 1.0;
    };
    let lower = b.cdf(k);
    let upper = if k == 0 { 1.0 } else { b.sf(k - 1) };
    (2.0 * lower.min(upper)).min(1.0)
}

fn run_rate(sc: &ScenarioFile) -> Result<RunOutput, ScenarioError> {
    let graph = sc.graph.build()?;
    let epsilon = match (sc.rate.as_ref().and_then(|r| r.epsilon), &sc.consensus) {
        (Some(e), _) => e,
        (None, Some(c)) => c.initial_deviation(),
        (None, None) => return invalid("rate needs an epsilon or a consensus section"),
    };
    let mu = convergence_rate(&graph, epsilon)?;
    let spectrum = SpectralReport::of(&graph)?;
    let mut eig = spectrum.eigenvalues.clone();
    eig.sort_by(f64::total_cmp);
    Ok(RunOutput::Rate(RateOutcome {
        nodes: graph.node_count(),
        epsilon,
        mu,
        algebraic_connectivity: eig.get(1).copied().unwrap_or(0.0),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#""graph": { "nodes": 3, "edges": [[0, 1], [1, 2], [0, 2]] }"#;

    fn consensus_text(extra: &str) -> String {
        format!(
            r#"{{ "schema_version": 1, "kind": "consensus", {TRIANGLE}, "horizon": 1.0,
                 "protocol": {{ "backend": "phase" }},
                 "consensus": {{ "initial_phi": [0.0, 0.3926990816987241, 1.5707963267948966],
                                 "pinner": 1.0471975511965976 {extra} }} }}"#
        )
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = parse_str(&consensus_text(r#", "pinnr": 1.0"#)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("$.consensus"), "{msg}");
        assert!(msg.contains("pinnr"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn round_trip() {
        let sc = parse_str(&consensus_text("")).unwrap();
        let again = parse_str(&sc.to_json()).unwrap();
        assert_eq!(sc, again);
        assert!(sc.events.is_empty());
    }

    #[test]
    fn kind_needs_its_section() {
        let text = format!(r#"{{ "schema_version": 1, "kind": "dc", {TRIANGLE}, "horizon": 1.0 }}"#);
        assert!(parse_str(&text).unwrap_err().to_string().contains("`dc` section"));
        let text = format!(r#"{{ "schema_version": 2, "kind": "rate", {TRIANGLE} }}"#);
        assert!(parse_str(&text).is_err());
    }

    #[test]
    fn consensus_runs_as_rate() {
        let sc = parse_str(&consensus_text("")).unwrap();
        let RunOutput::Rate(r) = run_scenario(&sc, ScenarioKind::Rate).unwrap() else {
            panic!()
        };
        assert!((r.epsilon - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
        assert!((r.mu - 0.8270).abs() < 1e-4);
        assert!((r.algebraic_connectivity - 3.0).abs() < 1e-9);
        assert!(run_scenario(&sc, ScenarioKind::Ac).is_err());
    }

    #[test]
    fn binomial_p_values() {
        assert!((binomial_two_sided(5000, 10_000) - 1.0).abs() < 1e-6);
        // 2.576σ above the mean is the two-sided 1% point
        let k = 5000 + (2.576 * 50.0 + 0.5) as u64;
        let p = binomial_two_sided(k, 10_000);
        assert!(p > 0.008 && p < 0.012, "{p}");
        assert_eq!(binomial_two_sided(0, 0), 1.0);
        // 10 heads in 10 fair tosses: 2·2⁻¹⁰
        assert!((binomial_two_sided(10, 10) - 2.0 / 1024.0).abs() < 1e-12);
    }
}
