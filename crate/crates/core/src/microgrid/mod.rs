// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! AC and DC microgrid plants closed around the consensus protocol.
//!
//! The secondary variable of each DER is its consensus phase `φ_i`:
//!
//! * AC: `ω_i = ω* − n_i P_i + φ_i / k`, pinner `k n_i P_i`;
//! * DC: `V_i^ref = V* − m_i I_i + φ_i / c`, pinner `c m_i I_i`.
//!
//! At steady state every online DER's pinner equals its phase and all phases
//! agree, so `n_i P_i` (or `m_i I_i`) is shared equally and the nominal
//! frequency (or bus voltage) is restored.
//!
//! Plant and protocol advance with the same step. Within a step the plant
//! sees the phases from the start of the step.

mod ac;
mod dc;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{lyapunov_mean_pinner, ConsensusError, Protocol};
use crate::netgraph::{is_connected_among, CommGraph, GraphError};
use crate::sampling::{stream, StreamTag};
use crate::series;
use rand::Rng;

pub use ac::{
    ac_equilibrium, ac_power_flow, ac_step, default_k, run_ac, solve_passive, AcDer, AcNetwork,
    AcOperatingPoint, AcPlant, AcStepOutput,
};
pub use dc::{
    dc_operating_point, dc_solve, dc_step, default_c, run_dc, DcDer, DcNetwork, DcSolution,
    DcStepOutput,
};

/// Tolerance on Newton and Kirchhoff residuals.
pub const SOLVE_TOL: f64 = 1e-9;
/// Settling band for the AC frequency, Hz.
pub const FREQ_TOL_HZ: f64 = 1e-3;
/// Settling band for the DC bus voltage, V.
pub const VBUS_TOL_V: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicrogridError {
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("scaling rule violated: {what} = {value:.4} ≥ π/2; lower the gain below {limit:.4}")]
    Scaling {
        what: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("no DER is online")]
    NoOnlineDer,
    #[error("online DERs split into {0} groups at t = {1} s; islanded fragments are not simulated")]
    Partition(usize, f64),
    #[error("power flow did not converge: {0}")]
    PowerFlow(String),
    #[error("invalid event at t = {time} s: {msg}")]
    Event { time: f64, msg: String },
}

/// Scheduled change to a running plant. Times snap to the nearest step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// AC: add `delta_kw` at every listed bus. DC: set the load resistance
    /// (absent means open circuit).
    StepLoad {
        time: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        buses: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_kw: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resistance_ohm: Option<f64>,
    },
    DroopChange {
        time: f64,
        der: usize,
        value: f64,
    },
    Plug {
        time: f64,
        der: usize,
    },
    Unplug {
        time: f64,
        der: usize,
    },
    MixingOn {
        time: f64,
        ders: Vec<usize>,
        strength: f64,
        #[serde(default = "one")]
        probability: f64,
    },
    MixingOff {
        time: f64,
        ders: Vec<usize>,
    },
}

fn one() -> f64 {
    1.0
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::StepLoad { time, .. }
            | Event::DroopChange { time, .. }
            | Event::Plug { time, .. }
            | Event::Unplug { time, .. }
            | Event::MixingOn { time, .. }
            | Event::MixingOff { time, .. } => *time,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Event::StepLoad { .. } => "step_load",
            Event::DroopChange { .. } => "droop_change",
            Event::Plug { .. } => "plug",
            Event::Unplug { .. } => "unplug",
            Event::MixingOn { .. } => "mixing_on",
            Event::MixingOff { .. } => "mixing_off",
        }
    }

    /// Shared checks: time inside the horizon, DER indices in range, mixing
    /// parameters in `[0, 1]`.
    pub fn validate_common(&self, ders: usize, horizon: f64) -> Result<(), MicrogridError> {
        let time = self.time();
        let fail = |msg: String| Err(MicrogridError::Event { time, msg });
        if !(time >= 0.0 && time <= horizon) {
            return fail(format!("time outside [0, {horizon}]"));
        }
        let idx: Vec<usize> = match self {
            Event::DroopChange { der, .. } | Event::Plug { der, .. } | Event::Unplug { der, .. } => {
                vec![*der]
            }
            Event::MixingOn { ders, .. } | Event::MixingOff { ders, .. } => ders.clone(),
            Event::StepLoad { buses, .. } => buses.clone(),
        };
        if let Some(i) = idx.iter().find(|&&i| i >= ders) {
            return fail(format!("index {i} out of range for {ders} DERs"));
        }
        match self {
            Event::MixingOn {
                strength,
                probability,
                ..
            } => {
                if !(0.0..=1.0).contains(strength) || !(0.0..=1.0).contains(probability) {
                    return fail("mixing strength and probability must lie in [0, 1]".into());
                }
            }
            Event::DroopChange { value, .. } => {
                if !(*value > 0.0 && value.is_finite()) {
                    return fail(format!("droop {value} must be positive"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Time-ordered events with their grid steps.
pub(crate) fn schedule(events: &[Event], dt: f64) -> Vec<(u64, Event)> {
    let mut out: Vec<(u64, Event)> = events
        .iter()
        .map(|e| ((e.time() / dt).round() as u64, e.clone()))
        .collect();
    out.sort_by_key(|(k, _)| *k);
    out
}

/// Per-DER mixing settings switched by `mixing_on` / `mixing_off`.
#[derive(Debug, Clone, Default)]
pub(crate) struct MixingState {
    active: Vec<Option<(f64, f64)>>,
}

impl MixingState {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            active: vec![None; n],
        }
    }

    pub(crate) fn apply(&mut self, ev: &Event) {
        match ev {
            Event::MixingOn {
                ders,
                strength,
                probability,
                ..
            } => {
                for &i in ders {
                    self.active[i] = Some((*strength, *probability));
                }
            }
            Event::MixingOff { ders, .. } => {
                for &i in ders {
                    self.active[i] = None;
                }
            }
            _ => {}
        }
    }

    pub(crate) fn draw(&self, seed: u64, step: u64) -> Vec<f64> {
        self.active
            .iter()
            .enumerate()
            .map(|(i, a)| match *a {
                Some((p, prob)) if prob >= 1.0 => p,
                Some((p, prob)) => {
                    let u: f64 = stream(seed, i as u64, step, StreamTag::Mixing).random();
                    if u < prob {
                        p
                    } else {
                        0.0
                    }
                }
                None => 0.0,
            })
            .collect()
    }
}

pub(crate) fn check_partition(comm: &CommGraph, online: &[bool], t: f64) -> Result<(), MicrogridError> {
    if !online.iter().any(|&o| o) {
        return Err(MicrogridError::NoOnlineDer);
    }
    if !is_connected_among(comm, online) {
        let parts = comm.components_among(online).len();
        return Err(MicrogridError::Partition(parts, t));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    Ac,
    Dc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppliedEvent {
    pub time: f64,
    pub step: u64,
    pub kind: String,
}

/// Recorded co-simulation. Per-DER series are indexed `[der][sample]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub plant: PlantKind,
    /// Nominal frequency (Hz) or bus voltage (V).
    pub nominal: f64,
    pub times: Vec<f64>,
    /// Mean online frequency (AC) or bus voltage (DC).
    pub bus: Vec<f64>,
    /// Per-DER frequency; empty for DC.
    pub freq: Vec<Vec<f64>>,
    /// Power (kW) or current (A).
    pub output: Vec<Vec<f64>>,
    /// `n_i P_i` (Hz) or `m_i I_i` (V).
    pub normalized: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub pinner: Vec<Vec<f64>>,
    pub online: Vec<Vec<bool>>,
    pub lyapunov: Vec<f64>,
    pub events: Vec<AppliedEvent>,
    pub diagnostics: Vec<String>,
    /// Number of pinner values that had to be clamped into `[0, π/2]`.
    pub clamped_pinners: usize,
    /// Largest power-balance (AC) or nodal-current (DC) residual seen.
    pub max_balance_residual: f64,
    pub backend: String,
    pub mode: String,
    pub seed: u64,
}

impl TimeSeries {
    pub(crate) fn new(plant: PlantKind, nominal: f64, ders: usize, proto: &Protocol) -> Self {
        let cfg = proto.config();
        Self {
            plant,
            nominal,
            times: Vec::new(),
            bus: Vec::new(),
            freq: if plant == PlantKind::Ac {
                vec![Vec::new(); ders]
            } else {
                Vec::new()
            },
            output: vec![Vec::new(); ders],
            normalized: vec![Vec::new(); ders],
            phi: vec![Vec::new(); ders],
            pinner: vec![Vec::new(); ders],
            online: vec![Vec::new(); ders],
            lyapunov: Vec::new(),
            events: Vec::new(),
            diagnostics: Vec::new(),
            clamped_pinners: 0,
            max_balance_residual: 0.0,
            backend: cfg.backend.name().into(),
            mode: cfg.mode.name().into(),
            seed: cfg.seed,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn record(
        &mut self,
        t: f64,
        bus: f64,
        freq: Option<&[f64]>,
        output: &[f64],
        normalized: &[f64],
        proto: &Protocol,
        pinners: &[f64],
        online: &[bool],
    ) {
        self.times.push(t);
        self.bus.push(bus);
        if let Some(f) = freq {
            for (s, v) in self.freq.iter_mut().zip(f) {
                s.push(*v);
            }
        }
        let phis = proto.phis();
        for i in 0..output.len() {
            self.output[i].push(output[i]);
            self.normalized[i].push(normalized[i]);
            self.phi[i].push(phis[i]);
            self.pinner[i].push(pinners[i]);
            self.online[i].push(online[i]);
        }
        let (ph, pn): (Vec<f64>, Vec<f64>) = (0..output.len())
            .filter(|&i| online[i])
            .map(|i| (phis[i], pinners[i]))
            .unzip();
        self.lyapunov.push(lyapunov_mean_pinner(&ph, &pn));
    }

    pub fn ders(&self) -> usize {
        self.output.len()
    }

    /// Worst regulation error at sample `k`: `max_i |ω_i − ω*|` over online
    /// DERs (AC) or `|V_b − V*|` (DC).
    pub fn bus_error_at(&self, k: usize) -> f64 {
        match self.plant {
            PlantKind::Ac => (0..self.ders())
                .filter(|&i| self.online[i][k])
                .map(|i| (self.freq[i][k] - self.nominal).abs())
                .fold(0.0, f64::max),
            PlantKind::Dc => (self.bus[k] - self.nominal).abs(),
        }
    }

    /// `(max − min)/mean` of the normalized outputs of online DERs, percent.
    pub fn spread_pct_at(&self, k: usize) -> f64 {
        let v: Vec<f64> = (0..self.ders())
            .filter(|&i| self.online[i][k])
            .map(|i| self.normalized[i][k])
            .collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        if mean.abs() < 1e-12 {
            if hi - lo < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            100.0 * (hi - lo) / mean.abs()
        }
    }

    fn indices_between(&self, t0: f64, t1: f64) -> impl Iterator<Item = usize> + '_ {
        let eps = 1e-9;
        (0..self.times.len()).filter(move |&k| self.times[k] >= t0 - eps && self.times[k] <= t1 + eps)
    }

    /// Largest [`bus_error_at`](Self::bus_error_at) over `[t0, t1]`.
    pub fn max_bus_error_between(&self, t0: f64, t1: f64) -> f64 {
        self.indices_between(t0, t1)
            .map(|k| self.bus_error_at(k))
            .fold(0.0, f64::max)
    }

    /// Largest [`spread_pct_at`](Self::spread_pct_at) over `[t0, t1]`.
    pub fn max_spread_pct_between(&self, t0: f64, t1: f64) -> f64 {
        self.indices_between(t0, t1)
            .map(|k| self.spread_pct_at(k))
            .fold(0.0, f64::max)
    }

    /// Sample index closest to time `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = k;
            }
        }
        best
    }

    /// Columns `t, bus`, then per DER `freq_i` (AC only), `out_i`, `norm_i`,
    /// `phi_i`, `pinner_i`, `online_i`, and finally `V`.
    pub fn to_csv(&self) -> String {
        let n = self.ders();
        let bus_name = match self.plant {
            PlantKind::Ac => "freq_hz",
            PlantKind::Dc => "vbus_v",
        };
        let online: Vec<Vec<f64>> = self
            .online
            .iter()
            .map(|s| s.iter().map(|&o| f64::from(u8::from(o))).collect())
            .collect();
        let mut header = vec!["t".to_string(), bus_name.to_string()];
        let mut cols: Vec<&[f64]> = vec![&self.times, &self.bus];
        for i in 0..n {
            if self.plant == PlantKind::Ac {
                header.push(format!("freq_{i}"));
                cols.push(&self.freq[i]);
            }
            header.extend([
                format!("out_{i}"),
                format!("norm_{i}"),
                format!("phi_{i}"),
                format!("pinner_{i}"),
                format!("online_{i}"),
            ]);
            cols.extend([
                self.output[i].as_slice(),
                &self.normalized[i],
                &self.phi[i],
                &self.pinner[i],
                &online[i],
            ]);
        }
        header.push("V".into());
        cols.push(&self.lyapunov);
        series::to_csv(&header, &cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantSummary {
    pub plant: PlantKind,
    /// Time after the last event at which regulation enters its band for
    /// good; absent if it never does.
    pub settling_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_freq_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_vbus_v: Option<f64>,
    /// Largest regulation error over the final 10% window.
    pub steady_max_error: f64,
    /// Largest sharing spread over the final 10% window, percent.
    pub sharing_spread_pct: f64,
    pub events_applied: usize,
    pub clamped_pinners: usize,
    pub max_balance_residual: f64,
    pub backend: String,
    pub mode: String,
    pub seed: u64,
}

pub fn summarize(ts: &TimeSeries) -> Result<PlantSummary, MicrogridError> {
    let len = ts.times.len();
    if len < 10 {
        return Err(MicrogridError::Invalid(format!(
            "{len} samples; the final-window statistics need at least 10"
        )));
    }
    let start = len - len / 10;
    let tol = match ts.plant {
        PlantKind::Ac => FREQ_TOL_HZ,
        PlantKind::Dc => VBUS_TOL_V,
    };
    let last_event = ts.events.iter().map(|e| e.time).fold(0.0, f64::max);
    let mut settled = None;
    for k in (0..len).rev() {
        if ts.times[k] + 1e-9 < last_event || ts.bus_error_at(k) >= tol {
            break;
        }
        settled = Some(ts.times[k] - last_event);
    }
    let steady_bus = ts.bus[start..].iter().sum::<f64>() / (len - start) as f64;
    let (f, v) = match ts.plant {
        PlantKind::Ac => (Some(steady_bus), None),
        PlantKind::Dc => (None, Some(steady_bus)),
    };
    Ok(PlantSummary {
        plant: ts.plant,
        settling_time_s: settled,
        steady_freq_hz: f,
        steady_vbus_v: v,
        steady_max_error: (start..len).map(|k| ts.bus_error_at(k)).fold(0.0, f64::max),
        sharing_spread_pct: (start..len).map(|k| ts.spread_pct_at(k)).fold(0.0, f64::max),
        events_applied: ts.events.len(),
        clamped_pinners: ts.clamped_pinners,
        max_balance_residual: ts.max_balance_residual,
        backend: ts.backend.clone(),
        mode: ts.mode.clone(),
        seed: ts.seed,
    })
}
