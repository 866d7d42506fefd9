// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use serde::Serialize;

use super::{ConsensusError, Trajectory};
use crate::netgraph::{lambda_min_sym, laplacian, CommGraph};

/// `|ζ|_∞` threshold for the settling time.
pub const SETTLING_TOL: f64 = 1e-2;

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Guaranteed exponential rate `μ = λ_min(sinc(ε)·I + sinc(2ε)·B W Bᵀ)` for
/// initial deviations `max|ζ(0)| ≤ ε`. Edge weights of `graph` play the role
/// of `W`.
pub fn convergence_rate(graph: &CommGraph, epsilon: f64) -> Result<f64, ConsensusError> {
    if !(0.0..FRAC_PI_2).contains(&epsilon) {
        return Err(ConsensusError::OutOfRegion(epsilon));
    }
    let n = graph.node_count();
    let m = Array2::<f64>::eye(n) * sinc(epsilon) + laplacian(graph) * sinc(2.0 * epsilon);
    Ok(lambda_min_sym(&m)?)
}

/// `V = ½ Σ (φ_i − φ*)²`.
pub fn lyapunov(phis: &[f64], pinner: f64) -> f64 {
    0.5 * phis.iter().map(|p| (p - pinner).powi(2)).sum::<f64>()
}

/// [`lyapunov`] against the mean of per-node pinners.
pub fn lyapunov_mean_pinner(phis: &[f64], pinners: &[f64]) -> f64 {
    lyapunov(phis, mean(pinners))
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// First time after which `max_i |φ_i − φ̄*| < tol` holds for the rest of
/// the series. `phi` and `pinner` are per node.
pub fn settling_time(times: &[f64], phi: &[Vec<f64>], pinner: &[Vec<f64>], tol: f64) -> Option<f64> {
    let err = |k: usize| -> f64 {
        let target = mean(&pinner.iter().map(|p| p[k]).collect::<Vec<_>>());
        phi.iter().map(|p| (p[k] - target).abs()).fold(0.0, f64::max)
    };
    let mut settled = None;
    for k in (0..times.len()).rev() {
        if err(k) < tol {
            settled = Some(times[k]);
        } else {
            break;
        }
    }
    settled
}

/// Least-squares slope of `−ln V` against time over the leading stretch where
/// `V` stays above `1e-12·max V` (and above 1e-28). This is the decay rate of
/// `V`, i.e. twice the rate of `|ζ|`.
pub fn fit_decay_rate(times: &[f64], v: &[f64]) -> Option<f64> {
    let peak = v.iter().copied().fold(0.0, f64::max);
    let floor = (peak * 1e-12).max(1e-28);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(v)
        .take_while(|(_, &y)| y > floor)
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusSummary {
    pub backend: String,
    pub mode: String,
    pub seed: u64,
    pub steps: usize,
    /// Absent when the run never settles.
    pub settling_time: Option<f64>,
    pub fitted_decay_rate: Option<f64>,
    /// Mean of each node's phase over the final 10% of samples.
    pub steady_phi: Vec<f64>,
    /// Largest `|φ_i − φ̄*|` seen in the final window.
    pub steady_max_error: f64,
    /// `max_i − min_i` of the steady phases.
    pub steady_spread: f64,
    pub diagnostics: usize,
}

/// Settling time, steady values over the final 10% window, and the fitted
/// decay rate of `V`.
pub fn summarize(traj: &Trajectory) -> Result<ConsensusSummary, ConsensusError> {
    let len = traj.times.len();
    if len < 10 {
        return Err(ConsensusError::TooShort(format!(
            "{len} samples; the final-window statistics need at least 10"
        )));
    }
    let start = len - len / 10;
    let mut worst: f64 = 0.0;
    for k in start..len {
        let target = mean(&traj.pinner.iter().map(|p| p[k]).collect::<Vec<_>>());
        for p in &traj.phi {
            worst = worst.max((p[k] - target).abs());
        }
    }
    let steady_phi: Vec<f64> = traj.phi.iter().map(|p| mean(&p[start..])).collect();
    let hi = steady_phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = steady_phi.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConsensusSummary {
        backend: traj.backend.clone(),
        mode: traj.mode.clone(),
        seed: traj.seed,
        steps: len - 1,
        settling_time: settling_time(&traj.times, &traj.phi, &traj.pinner, SETTLING_TOL),
        fitted_decay_rate: fit_decay_rate(&traj.times, &traj.lyapunov),
        steady_phi,
        steady_max_error: worst,
        steady_spread: hi - lo,
        diagnostics: traj.diagnostics.len(),
    })
}
