// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::ProtocolConfig;
use crate::series;

/// Recorded protocol run. `phi` and `pinner` hold one series per node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub pinner: Vec<Vec<f64>>,
    /// `V(t)` against the mean pinner.
    pub lyapunov: Vec<f64>,
    pub backend: String,
    pub mode: String,
    pub seed: u64,
    pub diagnostics: Vec<String>,
}

impl Trajectory {
    pub fn new(nodes: usize, config: &ProtocolConfig) -> Self {
        Self {
            times: Vec::new(),
            phi: vec![Vec::new(); nodes],
            pinner: vec![Vec::new(); nodes],
            lyapunov: Vec::new(),
            backend: config.backend.name().to_string(),
            mode: config.mode.name().to_string(),
            seed: config.seed,
            diagnostics: Vec::new(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.phi.len()
    }

    pub fn push(&mut self, t: f64, phis: &[f64], pinners: &[f64], v: f64) {
        self.times.push(t);
        for (s, &p) in self.phi.iter_mut().zip(phis) {
            s.push(p);
        }
        for (s, &p) in self.pinner.iter_mut().zip(pinners) {
            s.push(p);
        }
        self.lyapunov.push(v);
    }

    /// Columns `t, phi_0.., pinner_0.., V`.
    pub fn to_csv(&self) -> String {
        let n = self.nodes();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("phi_{i}")));
        header.extend((0..n).map(|i| format!("pinner_{i}")));
        header.push("V".into());
        let mut cols: Vec<&[f64]> = vec![&self.times];
        cols.extend(self.phi.iter().map(Vec::as_slice));
        cols.extend(self.pinner.iter().map(Vec::as_slice));
        cols.push(&self.lyapunov);
        series::to_csv(&header, &cols)
    }

    /// Largest `|φ_i − φ̄*|` at sample `k`.
    pub fn max_error_at(&self, k: usize) -> f64 {
        let target = self.pinner.iter().map(|p| p[k]).sum::<f64>() / self.nodes() as f64;
        self.phi.iter().map(|p| (p[k] - target).abs()).fold(0.0, f64::max)
    }
}
