// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{
    check_partition, schedule, AppliedEvent, Event, MicrogridError, MixingState, PlantKind,
    TimeSeries, SOLVE_TOL,
};
use crate::consensus::{Protocol, ProtocolConfig, StepReport};
use crate::netgraph::{is_connected, CommGraph};

const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AcDer {
    /// Droop gain `n_i`, Hz per kW.
    pub droop: f64,
    pub rated_kw: f64,
    #[serde(default = "yes")]
    pub online: bool,
}

fn yes() -> bool {
    true
}

/// Buses (one per DER, each with a local load), sine-coupled lines, and the
/// secondary-control scaling `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcNetwork {
    pub ders: Vec<AcDer>,
    /// Electrical lines; edge weights are the coupling strengths `b_ij` in kW.
    pub electrical: CommGraph,
    /// Quantum communication graph between DERs.
    pub comm: CommGraph,
    pub loads_kw: Vec<f64>,
    pub freq_nominal_hz: f64,
    /// Metadata only; the quasi-static flow does not use it.
    pub voltage_nominal_v: f64,
    pub k: f64,
}

/// `k = 0.8·(π/2)/max_i(n_i·rated_i)`.
pub fn default_k(ders: &[AcDer]) -> f64 {
    0.8 * FRAC_PI_2 / max_droop_product(ders)
}

fn max_droop_product(ders: &[AcDer]) -> f64 {
    ders.iter().map(|d| d.droop * d.rated_kw).fold(0.0, f64::max)
}

impl AcNetwork {
    pub fn validate(&self) -> Result<(), MicrogridError> {
        let n = self.ders.len();
        let bad = |m: String| Err(MicrogridError::Invalid(m));
        if n == 0 {
            return bad("no DERs".into());
        }
        if self.electrical.node_count() != n || self.comm.node_count() != n || self.loads_kw.len() != n {
            return bad(format!(
                "{n} DERs but electrical graph has {} buses, comm graph {} nodes, {} loads",
                self.electrical.node_count(),
                self.comm.node_count(),
                self.loads_kw.len()
            ));
        }
        for (i, d) in self.ders.iter().enumerate() {
            if !(d.droop > 0.0 && d.droop.is_finite()) || !(d.rated_kw > 0.0 && d.rated_kw.is_finite()) {
                return bad(format!("DER {i}: droop and rating must be positive"));
            }
        }
        if self.loads_kw.iter().any(|l| !l.is_finite()) {
            return bad("loads must be finite".into());
        }
        if !(self.freq_nominal_hz > 0.0) {
            return bad("nominal frequency must be positive".into());
        }
        if !is_connected(&self.electrical) {
            return bad("electrical network is not connected".into());
        }
        self.check_scaling()
    }

    /// `k·max(n_i·rated_i) < π/2`, so every pinner of a DER within its
    /// rating stays in `(0, π/2)`.
    pub fn check_scaling(&self) -> Result<(), MicrogridError> {
        let m = max_droop_product(&self.ders);
        let value = self.k * m;
        if !(self.k > 0.0) || value >= FRAC_PI_2 {
            return Err(MicrogridError::Scaling {
                what: "k·max(n_i·rated_i)",
                value,
                limit: FRAC_PI_2 / m,
            });
        }
        Ok(())
    }

    pub fn online(&self) -> Vec<bool> {
        self.ders.iter().map(|d| d.online).collect()
    }

    /// `Σ_online 1/n_i`.
    pub fn inverse_droop_sum(&self) -> f64 {
        self.ders.iter().filter(|d| d.online).map(|d| 1.0 / d.droop).sum()
    }

    /// Common steady value `x*` of `n_i P_i`: solves `Σ_online x*/n_i = Σ P_L`.
    pub fn shared_droop_product(&self) -> f64 {
        self.loads_kw.iter().sum::<f64>() / self.inverse_droop_sum()
    }
}

/// `P_i = P_L,i + Σ_j b_ij sin(δ_i − δ_j)`, kW.
pub fn ac_power_flow(deltas: &[f64], net: &AcNetwork) -> Result<Vec<f64>, MicrogridError> {
    let n = net.ders.len();
    if deltas.len() != n {
        return Err(MicrogridError::Invalid(format!("{} angles for {n} buses", deltas.len())));
    }
    if !is_connected(&net.electrical) {
        return Err(MicrogridError::Invalid("electrical network is not connected".into()));
    }
    Ok(flow(deltas, net))
}

fn flow(deltas: &[f64], net: &AcNetwork) -> Vec<f64> {
    let mut p = net.loads_kw.clone();
    for e in net.electrical.edges() {
        let f = e.weight * (deltas[e.lo] - deltas[e.hi]).sin();
        p[e.lo] += f;
        p[e.hi] -= f;
    }
    p
}

/// Newton solve of `P_i(δ) = target_i` for the buses in `idx`, adjusting
/// only their own angles.
fn newton(deltas: &mut [f64], idx: &[usize], targets: &[f64], net: &AcNetwork) -> Result<(), MicrogridError> {
    if idx.is_empty() {
        return Ok(());
    }
    let n = deltas.len();
    let mut pos = vec![usize::MAX; n];
    for (a, &i) in idx.iter().enumerate() {
        pos[i] = a;
    }
    for _ in 0..NEWTON_MAX_ITER {
        let p = flow(deltas, net);
        let r = DVector::from_iterator(idx.len(), idx.iter().zip(targets).map(|(&i, t)| p[i] - t));
        if r.amax() <= SOLVE_TOL {
            return Ok(());
        }
        let mut jac = DMatrix::<f64>::zeros(idx.len(), idx.len());
        for e in net.electrical.edges() {
            let c = e.weight * (deltas[e.lo] - deltas[e.hi]).cos();
            let (a, b) = (pos[e.lo], pos[e.hi]);
            if a != usize::MAX {
                jac[(a, a)] += c;
                if b != usize::MAX {
                    jac[(a, b)] -= c;
                }
            }
            if b != usize::MAX {
                jac[(b, b)] += c;
                if a != usize::MAX {
                    jac[(b, a)] -= c;
                }
            }
        }
        let step = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| MicrogridError::PowerFlow("singular Jacobian".into()))?;
        for (a, &i) in idx.iter().enumerate() {
            deltas[i] -= step[a];
        }
        if deltas.iter().any(|d| !d.is_finite()) {
            return Err(MicrogridError::PowerFlow("angles diverged".into()));
        }
    }
    Err(MicrogridError::PowerFlow(format!(
        "no convergence in {NEWTON_MAX_ITER} iterations"
    )))
}

/// Adjusts the angles of offline buses so that they inject nothing: an
/// unplugged DER leaves its bus and load in place as a passive node.
pub fn solve_passive(deltas: &mut [f64], net: &AcNetwork) -> Result<(), MicrogridError> {
    let idx: Vec<usize> = (0..net.ders.len()).filter(|&i| !net.ders[i].online).collect();
    let zeros = vec![0.0; idx.len()];
    newton(deltas, &idx, &zeros, net)
}

/// Steady operating point: every online DER at `n_i P_i = x*`, phases at
/// `k x*`, frequency nominal.
#[derive(Debug, Clone, PartialEq)]
pub struct AcOperatingPoint {
    pub deltas: Vec<f64>,
    pub shared: f64,
    pub phis: Vec<f64>,
}

pub fn ac_equilibrium(net: &AcNetwork) -> Result<AcOperatingPoint, MicrogridError> {
    net.validate()?;
    let n = net.ders.len();
    if !net.ders.iter().any(|d| d.online) {
        return Err(MicrogridError::NoOnlineDer);
    }
    let x = net.shared_droop_product();
    let targets: Vec<f64> = net
        .ders
        .iter()
        .map(|d| if d.online { x / d.droop } else { 0.0 })
        .collect();
    // bus 0 is the angle reference; its equation follows from power balance
    let idx: Vec<usize> = (1..n).collect();
    let mut deltas = vec![0.0; n];
    newton(&mut deltas, &idx, &targets[1..], net)?;
    Ok(AcOperatingPoint {
        deltas,
        shared: x,
        phis: vec![net.k * x; n],
    })
}

/// Plant state: bus angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct AcPlant {
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcStepOutput {
    /// Frequencies after the step, Hz. Offline buses report their angle rate.
    pub freq_hz: Vec<f64>,
    /// DER outputs after the step, kW.
    pub power_kw: Vec<f64>,
    /// Pinners `k n_i P_i` used by the consensus step.
    pub pinners: Vec<f64>,
    /// `|Σ P_i − Σ P_L,i|` after the step.
    pub balance_residual: f64,
    pub report: StepReport,
}

fn freq_of(net: &AcNetwork, p: &[f64], phis: &[f64], i: usize) -> f64 {
    net.freq_nominal_hz - net.ders[i].droop * p[i] + phis[i] / net.k
}

/// One co-simulation step: pinners from the present powers, one protocol
/// step, and an RK4 step of `δ̇_i = 2π(ω_i − ω*)` with the phases from the
/// start of the step.
pub fn ac_step(
    plant: &mut AcPlant,
    protocol: &mut Protocol,
    net: &AcNetwork,
    dt: f64,
    mixing: &[f64],
) -> Result<AcStepOutput, MicrogridError> {
    if !(dt > 0.0) {
        return Err(MicrogridError::Invalid(format!("dt must be positive, got {dt}")));
    }
    let n = net.ders.len();
    let online = net.online();
    let p0 = ac_power_flow(&plant.deltas, net)?;
    let pinners: Vec<f64> = (0..n).map(|i| net.k * net.ders[i].droop * p0[i]).collect();
    let phis = protocol.phis();
    let report = protocol.step(&pinners, mixing, Some(&online))?;

    let rate = |d: &[f64]| -> Result<Vec<f64>, MicrogridError> {
        let mut full = d.to_vec();
        solve_passive(&mut full, net)?;
        let p = flow(&full, net);
        Ok((0..n)
            .map(|i| {
                if online[i] {
                    TAU * (freq_of(net, &p, &phis, i) - net.freq_nominal_hz)
                } else {
                    0.0
                }
            })
            .collect())
    };
    let before = plant.deltas.clone();
    let axpy = |k: &[f64], c: f64| -> Vec<f64> { before.iter().zip(k).map(|(d, k)| d + c * k).collect() };
    let k1 = rate(&before)?;
    let k2 = rate(&axpy(&k1, dt / 2.0))?;
    let k3 = rate(&axpy(&k2, dt / 2.0))?;
    let k4 = rate(&axpy(&k3, dt))?;
    let mut next: Vec<f64> = (0..n)
        .map(|i| before[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    solve_passive(&mut next, net)?;
    let p = flow(&next, net);
    let new_phis = protocol.phis();
    let freq_hz = (0..n)
        .map(|i| {
            if online[i] {
                freq_of(net, &p, &new_phis, i)
            } else {
                net.freq_nominal_hz + (next[i] - before[i]) / (TAU * dt)
            }
        })
        .collect();
    let balance_residual = (p.iter().sum::<f64>() - net.loads_kw.iter().sum::<f64>()).abs();
    plant.deltas = next;
    Ok(AcStepOutput {
        freq_hz,
        power_kw: p,
        pinners,
        balance_residual,
        report,
    })
}

fn apply_event(net: &mut AcNetwork, ev: &Event) -> Result<(), MicrogridError> {
    let time = ev.time();
    match ev {
        Event::StepLoad {
            buses,
            delta_kw,
            resistance_ohm,
            ..
        } => {
            let (Some(dp), None) = (delta_kw, resistance_ohm) else {
                return Err(MicrogridError::Event {
                    time,
                    msg: "AC step_load needs delta_kw and no resistance_ohm".into(),
                });
            };
            for &b in buses {
                net.loads_kw[b] += dp;
            }
        }
        Event::DroopChange { der, value, .. } => {
            net.ders[*der].droop = *value;
            net.check_scaling()?;
        }
        Event::Plug { der, .. } => net.ders[*der].online = true,
        Event::Unplug { der, .. } => net.ders[*der].online = false,
        Event::MixingOn { .. } | Event::MixingOff { .. } => {}
    }
    Ok(())
}

/// Runs the AC plant from its steady operating point for `horizon` seconds.
/// The protocol step `config.dt` is also the plant step.
pub fn run_ac(
    net: &AcNetwork,
    config: &ProtocolConfig,
    events: &[Event],
    horizon: f64,
) -> Result<TimeSeries, MicrogridError> {
    let mut net = net.clone();
    net.validate()?;
    for ev in events {
        ev.validate_common(net.ders.len(), horizon)?;
    }
    let n = net.ders.len();
    check_partition(&net.comm, &net.online(), 0.0)?;
    let op = ac_equilibrium(&net)?;
    let mut plant = AcPlant { deltas: op.deltas };
    let mut proto = Protocol::new(net.comm.clone(), config.clone(), &op.phis, None)?;
    let dt = config.dt;
    let steps = ((horizon / dt).round() as u64).max(1);
    let plan = schedule(events, dt);
    let mut next_event = 0;
    let mut mixing = MixingState::new(n);
    let mut ts = TimeSeries::new(PlantKind::Ac, net.freq_nominal_hz, n, &proto);

    let p = ac_power_flow(&plant.deltas, &net)?;
    let freq: Vec<f64> = (0..n).map(|i| freq_of(&net, &p, &op.phis, i)).collect();
    let pins: Vec<f64> = (0..n).map(|i| net.k * net.ders[i].droop * p[i]).collect();
    record(&mut ts, 0.0, &net, &freq, &p, &proto, &pins);

    for k in 0..steps {
        let t = k as f64 * dt;
        while next_event < plan.len() && plan[next_event].0 <= k {
            let ev = &plan[next_event].1;
            apply_event(&mut net, ev)?;
            mixing.apply(ev);
            if matches!(ev, Event::Plug { .. } | Event::Unplug { .. }) {
                check_partition(&net.comm, &net.online(), t)?;
                solve_passive(&mut plant.deltas, &net)?;
            }
            ts.events.push(AppliedEvent {
                time: t,
                step: k,
                kind: ev.kind().into(),
            });
            next_event += 1;
        }
        let out = ac_step(&mut plant, &mut proto, &net, dt, &mixing.draw(config.seed, k))?;
        ts.clamped_pinners += out.report.clamped.len();
        ts.diagnostics.extend(out.report.diagnostics.iter().cloned());
        ts.max_balance_residual = ts.max_balance_residual.max(out.balance_residual);
        record(&mut ts, (k + 1) as f64 * dt, &net, &out.freq_hz, &out.power_kw, &proto, &out.pinners);
    }
    Ok(ts)
}

fn record(
    ts: &mut TimeSeries,
    t: f64,
    net: &AcNetwork,
    freq: &[f64],
    p: &[f64],
    proto: &Protocol,
    pinners: &[f64],
) {
    let online = net.online();
    let live: Vec<f64> = (0..freq.len()).filter(|&i| online[i]).map(|i| freq[i]).collect();
    let bus = live.iter().sum::<f64>() / live.len().max(1) as f64;
    let normalized: Vec<f64> = (0..p.len()).map(|i| net.ders[i].droop * p[i]).collect();
    ts.record(t, bus, Some(freq), p, &normalized, proto, pinners, &online);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::build_graph;

    fn three_bus(droops: [f64; 3], load: f64) -> AcNetwork {
        let ders: Vec<AcDer> = droops
            .iter()
            .map(|&droop| AcDer {
                droop,
                rated_kw: 60.0,
                online: true,
            })
            .collect();
        let edges = [(0, 1), (1, 2), (0, 2)];
        AcNetwork {
            k: default_k(&ders),
            ders,
            electrical: build_graph(3, &edges, Some(&[200.0; 3])).unwrap(),
            comm: build_graph(3, &edges, None).unwrap(),
            loads_kw: vec![load / 3.0; 3],
            freq_nominal_hz: 60.0,
            voltage_nominal_v: 380.0,
        }
    }

    #[test]
    fn two_bus_flow() {
        let ders = vec![
            AcDer {
                droop: 1e-3,
                rated_kw: 60.0,
                online: true
            };
            2
        ];
        let net = AcNetwork {
            k: default_k(&ders),
            ders,
            electrical: build_graph(2, &[(0, 1)], Some(&[100.0])).unwrap(),
            comm: build_graph(2, &[(0, 1)], None).unwrap(),
            loads_kw: vec![30.0, 30.0],
            freq_nominal_hz: 60.0,
            voltage_nominal_v: 380.0,
        };
        let p = ac_power_flow(&[0.1, 0.0], &net).unwrap();
        assert!((p[0] - (30.0 + 100.0 * 0.1f64.sin())).abs() < 1e-12);
        assert!((p[0] - 39.98).abs() < 5e-3 && (p[1] - 20.02).abs() < 5e-3);
        assert_eq!(ac_power_flow(&[0.0, 0.0], &net).unwrap(), vec![30.0, 30.0]);
    }

    #[test]
    fn equilibrium_shares_inverse_to_droop() {
        let net = three_bus([5e-3, 2.5e-3, 2.5e-3], 60.0);
        let op = ac_equilibrium(&net).unwrap();
        assert!((op.shared - 0.06).abs() < 1e-12);
        let p = ac_power_flow(&op.deltas, &net).unwrap();
        for (pi, want) in p.iter().zip([12.0, 24.0, 24.0]) {
            assert!((pi - want).abs() < 1e-9, "{pi}");
        }
        let cfg = ProtocolConfig {
            backend: crate::consensus::Backend::Phase,
            ..Default::default()
        };
        let mut proto = Protocol::new(net.comm.clone(), cfg, &op.phis, None).unwrap();
        let mut plant = AcPlant { deltas: op.deltas.clone() };
        for _ in 0..100 {
            let out = ac_step(&mut plant, &mut proto, &net, 0.01, &[0.0; 3]).unwrap();
            for f in &out.freq_hz {
                assert!((f - 60.0).abs() < 1e-12);
            }
        }
        assert!(plant.deltas.iter().zip(&op.deltas).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn passive_bus_injects_nothing() {
        let mut net = three_bus([5e-3, 2.5e-3, 2.5e-3], 60.0);
        net.ders[1].online = false;
        let op = ac_equilibrium(&net).unwrap();
        let p = ac_power_flow(&op.deltas, &net).unwrap();
        assert!(p[1].abs() < 1e-9);
        assert!((p[0] + p[2] - 60.0).abs() < 1e-9);
        assert!((p[0] * 5e-3 - p[2] * 2.5e-3).abs() < 1e-9);
    }

    #[test]
    fn scaling_rule() {
        let mut net = three_bus([5e-3, 2.5e-3, 2.5e-3], 60.0);
        net.check_scaling().unwrap();
        net.k = 1.7 / (5e-3 * 60.0);
        let err = net.validate().unwrap_err();
        assert!(matches!(err, MicrogridError::Scaling { .. }));
        assert!(err.to_string().contains("π/2"));
    }
}
