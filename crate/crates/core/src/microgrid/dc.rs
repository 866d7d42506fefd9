// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::FRAC_PI_2;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{
    check_partition, schedule, AppliedEvent, Event, MicrogridError, MixingState, PlantKind,
    TimeSeries, SOLVE_TOL,
};
use crate::consensus::{Protocol, ProtocolConfig, StepReport};
use crate::netgraph::CommGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DcDer {
    /// Droop gain `m_i`, V per A.
    pub droop: f64,
    /// Line resistance to the common bus, Ω.
    pub resistance_ohm: f64,
    pub rated_current_a: f64,
    #[serde(default = "yes")]
    pub online: bool,
}

fn yes() -> bool {
    true
}

/// DERs feeding one common bus through their line resistances.
#[derive(Debug, Clone, PartialEq)]
pub struct DcNetwork {
    pub ders: Vec<DcDer>,
    pub comm: CommGraph,
    pub v_nominal: f64,
    /// `None` is an open circuit.
    pub load_resistance_ohm: Option<f64>,
    pub c: f64,
}

/// `c = 0.8·(π/2)/max_i(m_i·I_rated,i)`.
pub fn default_c(ders: &[DcDer]) -> f64 {
    0.8 * FRAC_PI_2 / max_droop_product(ders)
}

fn max_droop_product(ders: &[DcDer]) -> f64 {
    ders.iter().map(|d| d.droop * d.rated_current_a).fold(0.0, f64::max)
}

fn check_load(r: Option<f64>) -> Result<(), MicrogridError> {
    match r {
        Some(r) if !(r > 0.0) => Err(MicrogridError::Invalid(format!(
            "load resistance must be positive, got {r}"
        ))),
        _ => Ok(()),
    }
}

fn conductance(r: Option<f64>) -> f64 {
    r.map_or(0.0, |r| 1.0 / r)
}

impl DcNetwork {
    pub fn validate(&self) -> Result<(), MicrogridError> {
        let n = self.ders.len();
        let bad = |m: String| Err(MicrogridError::Invalid(m));
        if n == 0 {
            return bad("no DERs".into());
        }
        if self.comm.node_count() != n {
            return bad(format!("{n} DERs but comm graph has {} nodes", self.comm.node_count()));
        }
        for (i, d) in self.ders.iter().enumerate() {
            let pos = |v: f64| v > 0.0 && v.is_finite();
            if !pos(d.droop) || !pos(d.resistance_ohm) || !pos(d.rated_current_a) {
                return bad(format!("DER {i}: droop, resistance and rating must be positive"));
            }
        }
        if !(self.v_nominal > 0.0) {
            return bad("nominal voltage must be positive".into());
        }
        check_load(self.load_resistance_ohm)?;
        self.check_scaling()
    }

    /// `c·max(m_i·I_rated,i) < π/2`.
    pub fn check_scaling(&self) -> Result<(), MicrogridError> {
        let m = max_droop_product(&self.ders);
        let value = self.c * m;
        if !(self.c > 0.0) || value >= FRAC_PI_2 {
            return Err(MicrogridError::Scaling {
                what: "c·max(m_i·I_rated,i)",
                value,
                limit: FRAC_PI_2 / m,
            });
        }
        Ok(())
    }

    pub fn online(&self) -> Vec<bool> {
        self.ders.iter().map(|d| d.online).collect()
    }

    /// Smallest `m_i / R_i`. The droop dominates the line when this is large,
    /// and the steady bus offset `R_i I_i` is then small against `m_i I_i`.
    pub fn accuracy_ratio(&self) -> f64 {
        self.ders
            .iter()
            .map(|d| d.droop / d.resistance_ohm)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcSolution {
    pub v_bus: f64,
    pub currents: Vec<f64>,
}

/// Star-topology Kirchhoff solve for given reference voltages:
/// `V_b = Σ V_ref,i/R_i / (1/R_L + Σ 1/R_i)` and `I_i = (V_ref,i − V_b)/R_i`,
/// over online DERs.
pub fn dc_solve(
    v_refs: &[f64],
    ders: &[DcDer],
    load_resistance_ohm: Option<f64>,
    online: &[bool],
) -> Result<DcSolution, MicrogridError> {
    let r: Vec<f64> = ders.iter().map(|d| d.resistance_ohm).collect();
    star(v_refs, &r, load_resistance_ohm, online)
}

fn star(
    sources: &[f64],
    r: &[f64],
    load: Option<f64>,
    online: &[bool],
) -> Result<DcSolution, MicrogridError> {
    let n = r.len();
    if sources.len() != n || online.len() != n {
        return Err(MicrogridError::Invalid(format!(
            "{} sources and {} flags for {n} DERs",
            sources.len(),
            online.len()
        )));
    }
    if !online.iter().any(|&o| o) {
        return Err(MicrogridError::NoOnlineDer);
    }
    check_load(load)?;
    let (mut num, mut den) = (0.0, conductance(load));
    for i in (0..n).filter(|&i| online[i]) {
        num += sources[i] / r[i];
        den += 1.0 / r[i];
    }
    let v_bus = num / den;
    let currents = (0..n)
        .map(|i| if online[i] { (sources[i] - v_bus) / r[i] } else { 0.0 })
        .collect();
    Ok(DcSolution { v_bus, currents })
}

/// Bus voltage and currents with the droop law in the loop:
/// `V_ref,i = V* − m_i I_i + φ_i/c` solved together with the star network,
/// i.e. a star solve with sources `V* + φ_i/c` behind `m_i + R_i`.
pub fn dc_operating_point(net: &DcNetwork, phis: &[f64]) -> Result<DcSolution, MicrogridError> {
    if phis.len() != net.ders.len() {
        return Err(MicrogridError::Invalid(format!(
            "{} phases for {} DERs",
            phis.len(),
            net.ders.len()
        )));
    }
    let sources: Vec<f64> = phis.iter().map(|p| net.v_nominal + p / net.c).collect();
    let r: Vec<f64> = net.ders.iter().map(|d| d.droop + d.resistance_ohm).collect();
    star(&sources, &r, net.load_resistance_ohm, &net.online())
}

fn v_refs(net: &DcNetwork, phis: &[f64], currents: &[f64]) -> Vec<f64> {
    (0..phis.len())
        .map(|i| net.v_nominal - net.ders[i].droop * currents[i] + phis[i] / net.c)
        .collect()
}

/// Largest residual of the nodal balance `Σ I_i = V_b/R_L` and of the
/// branch laws `V_ref,i − R_i I_i = V_b`.
fn residual(net: &DcNetwork, phis: &[f64], sol: &DcSolution) -> f64 {
    let online = net.online();
    let refs = v_refs(net, phis, &sol.currents);
    let nodal = (sol.currents.iter().sum::<f64>() - sol.v_bus * conductance(net.load_resistance_ohm)).abs();
    (0..phis.len())
        .filter(|&i| online[i])
        .map(|i| (refs[i] - net.ders[i].resistance_ohm * sol.currents[i] - sol.v_bus).abs())
        .fold(nodal, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcStepOutput {
    pub solution: DcSolution,
    /// Pinners `c m_i I_i` used by the consensus step.
    pub pinners: Vec<f64>,
    pub balance_residual: f64,
    pub report: StepReport,
}

/// One step: pinners from the present currents, one protocol step, then the
/// network solve with the updated phases. The network is algebraic, so `dt`
/// only has to agree with the protocol step.
pub fn dc_step(
    protocol: &mut Protocol,
    net: &DcNetwork,
    dt: f64,
    mixing: &[f64],
) -> Result<DcStepOutput, MicrogridError> {
    if !(dt > 0.0) || (dt - protocol.config().dt).abs() > 1e-12 {
        return Err(MicrogridError::Invalid(format!(
            "plant step {dt} must be positive and equal the protocol step {}",
            protocol.config().dt
        )));
    }
    let online = net.online();
    let before = dc_operating_point(net, &protocol.phis())?;
    let pinners: Vec<f64> = (0..net.ders.len())
        .map(|i| net.c * net.ders[i].droop * before.currents[i])
        .collect();
    let report = protocol.step(&pinners, mixing, Some(&online))?;
    let phis = protocol.phis();
    let solution = dc_operating_point(net, &phis)?;
    let balance_residual = residual(net, &phis, &solution);
    if balance_residual > SOLVE_TOL * net.v_nominal.max(1.0) {
        return Err(MicrogridError::PowerFlow(format!(
            "Kirchhoff residual {balance_residual:e}"
        )));
    }
    Ok(DcStepOutput {
        solution,
        pinners,
        balance_residual,
        report,
    })
}

fn apply_event(net: &mut DcNetwork, ev: &Event) -> Result<(), MicrogridError> {
    let time = ev.time();
    match ev {
        Event::StepLoad {
            buses,
            delta_kw,
            resistance_ohm,
            ..
        } => {
            if delta_kw.is_some() || !buses.is_empty() {
                return Err(MicrogridError::Event {
                    time,
                    msg: "DC step_load takes only resistance_ohm".into(),
                });
            }
            check_load(*resistance_ohm)?;
            net.load_resistance_ohm = *resistance_ohm;
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

/// Runs the DC plant from `φ = 0` for `horizon` seconds.
pub fn run_dc(
    net: &DcNetwork,
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
    let mut proto = Protocol::new(net.comm.clone(), config.clone(), &vec![0.0; n], None)?;
    let dt = config.dt;
    let steps = ((horizon / dt).round() as u64).max(1);
    let plan = schedule(events, dt);
    let mut next_event = 0;
    let mut mixing = MixingState::new(n);
    let mut ts = TimeSeries::new(PlantKind::Dc, net.v_nominal, n, &proto);

    let sol = dc_operating_point(&net, &proto.phis())?;
    let pins: Vec<f64> = (0..n).map(|i| net.c * net.ders[i].droop * sol.currents[i]).collect();
    record(&mut ts, 0.0, &net, &sol, &proto, &pins);

    for k in 0..steps {
        let t = k as f64 * dt;
        while next_event < plan.len() && plan[next_event].0 <= k {
            let ev = &plan[next_event].1;
            apply_event(&mut net, ev)?;
            mixing.apply(ev);
            if matches!(ev, Event::Plug { .. } | Event::Unplug { .. }) {
                check_partition(&net.comm, &net.online(), t)?;
            }
            ts.events.push(AppliedEvent {
                time: t,
                step: k,
                kind: ev.kind().into(),
            });
            next_event += 1;
        }
        let out = dc_step(&mut proto, &net, dt, &mixing.draw(config.seed, k))?;
        ts.clamped_pinners += out.report.clamped.len();
        ts.diagnostics.extend(out.report.diagnostics.iter().cloned());
        ts.max_balance_residual = ts.max_balance_residual.max(out.balance_residual);
        record(&mut ts, (k + 1) as f64 * dt, &net, &out.solution, &proto, &out.pinners);
    }
    Ok(ts)
}

fn record(ts: &mut TimeSeries, t: f64, net: &DcNetwork, sol: &DcSolution, proto: &Protocol, pinners: &[f64]) {
    let normalized: Vec<f64> = (0..sol.currents.len())
        .map(|i| net.ders[i].droop * sol.currents[i])
        .collect();
    ts.record(t, sol.v_bus, None, &sol.currents, &normalized, proto, pinners, &net.online());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::build_graph;

    fn der(droop: f64, r: f64) -> DcDer {
        DcDer {
            droop,
            resistance_ohm: r,
            rated_current_a: 4.0,
            online: true,
        }
    }

    #[test]
    fn star_examples() {
        let ders = [der(1.0, 0.1), der(1.0, 0.1)];
        let s = dc_solve(&[48.0, 48.0], &ders, None, &[true, true]).unwrap();
        assert!((s.v_bus - 48.0).abs() < 1e-12 && s.currents.iter().all(|i| i.abs() < 1e-12));
        let s = dc_solve(&[48.0, 48.0], &ders, Some(3.0), &[true, true]).unwrap();
        let vb = 48.0 * 20.0 / (1.0 / 3.0 + 20.0);
        assert!((s.v_bus - vb).abs() < 1e-12 && (s.v_bus - 47.213).abs() < 1e-3);
        assert!((s.currents[0] - 7.87).abs() < 5e-3);
        assert!((s.currents.iter().sum::<f64>() - s.v_bus / 3.0).abs() < 1e-9);
        let s = dc_solve(&[48.0, 48.0], &ders, Some(3.0), &[true, false]).unwrap();
        assert_eq!(s.currents[1], 0.0);
        assert!((s.currents[0] - s.v_bus / 3.0).abs() < 1e-9);
        assert!(dc_solve(&[48.0; 2], &ders, Some(0.0), &[true; 2]).is_err());
        assert!(matches!(
            dc_solve(&[48.0; 2], &ders, None, &[false; 2]),
            Err(MicrogridError::NoOnlineDer)
        ));
    }

    fn net(r: f64) -> DcNetwork {
        let ders = vec![der(1.0, r), der(0.5, r), der(2.0, r)];
        DcNetwork {
            c: default_c(&ders),
            ders,
            comm: build_graph(3, &[(0, 1), (1, 2), (0, 2)], None).unwrap(),
            v_nominal: 48.0,
            load_resistance_ohm: Some(6.0),
        }
    }

    #[test]
    fn operating_point_matches_star_solve() {
        let net = net(0.1);
        let phis = [0.3, 0.5, 0.2];
        let op = dc_operating_point(&net, &phis).unwrap();
        let refs = v_refs(&net, &phis, &op.currents);
        let s = dc_solve(&refs, &net.ders, net.load_resistance_ohm, &[true; 3]).unwrap();
        assert!((s.v_bus - op.v_bus).abs() < 1e-9);
        for (a, b) in s.currents.iter().zip(&op.currents) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(residual(&net, &phis, &op) < 1e-9);
    }

    #[test]
    fn steady_offset_is_weighted_line_drop() {
        // with θ fixed the couplings cancel in Σ s_i² φ̇_i, so an equilibrium
        // has Σ s_i² sin(c(V* − V_b − R_i I_i)) = 0
        let net = net(0.1);
        let cfg = ProtocolConfig {
            backend: crate::consensus::Backend::Phase,
            theta: crate::sampling::ThetaDistribution::EQUATOR,
            ..Default::default()
        };
        let mut proto = Protocol::new(net.comm.clone(), cfg, &[0.0; 3], None).unwrap();
        let mut out = None;
        for _ in 0..6000 {
            out = Some(dc_step(&mut proto, &net, 0.01, &[0.0; 3]).unwrap());
        }
        let sol = out.unwrap().solution;
        let offset = 48.0 - sol.v_bus;
        let pin: f64 = proto
            .nodes()
            .iter()
            .zip(&sol.currents)
            .map(|(st, i)| st.s * st.s * (net.c * (offset - 0.1 * i)).sin())
            .sum();
        assert!(offset > 0.1);
        // coherences drift within a step, which leaves an O(dt·α²) remainder
        assert!(pin.abs() < 1e-6, "{pin}");
        let mean_drop = sol.currents.iter().map(|i| 0.1 * i).sum::<f64>() / 3.0;
        assert!((offset - mean_drop).abs() < 1e-2 * offset);
    }

    #[test]
    fn scaling_rule() {
        let mut net = net(0.1);
        net.validate().unwrap();
        net.c = 1.0;
        assert!(matches!(net.validate(), Err(MicrogridError::Scaling { .. })));
        assert!((net.accuracy_ratio() - 5.0).abs() < 1e-12);
    }
}
