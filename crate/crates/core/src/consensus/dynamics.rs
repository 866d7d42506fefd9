// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use super::ConsensusError;
use crate::netgraph::CommGraph;

fn check_len(graph: &CommGraph, lens: &[usize]) -> Result<(), ConsensusError> {
    let n = graph.node_count();
    for &l in lens {
        if l != n {
            return Err(ConsensusError::DimensionMismatch {
                expected: n,
                found: l,
            });
        }
    }
    Ok(())
}

/// Local Bloch dynamics with the pin written against the target phase:
/// `ẋ_i = s_i cos φ_t,i − x_i + Σ_j a_ij (x_j − x_i)`,
/// `ẏ_i = s_i sin φ_t,i − y_i + Σ_j a_ij (y_j − y_i)`,
/// `ż_i = Σ_j a_ij (z_j − z_i)`, with `s_i = √(x_i² + y_i²)`.
///
/// At the instant the pin angle is set (`α_i = φ_t,i − φ_i`) this coincides
/// with [`bloch_rhs_frozen`].
pub fn bloch_rhs(
    x: &[f64],
    y: &[f64],
    z: &[f64],
    pinners: &[f64],
    graph: &CommGraph,
) -> Result<[Vec<f64>; 3], ConsensusError> {
    check_len(graph, &[x.len(), y.len(), z.len(), pinners.len()])?;
    let n = graph.node_count();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let s = x[i].hypot(y[i]);
        out[0][i] = s * pinners[i].cos() - x[i];
        out[1][i] = s * pinners[i].sin() - y[i];
    }
    add_swap_coupling(x, y, z, graph, &mut out);
    Ok(out)
}

fn add_swap_coupling(x: &[f64], y: &[f64], z: &[f64], graph: &CommGraph, out: &mut [Vec<f64>; 3]) {
    for e in graph.edges() {
        let (i, j, a) = (e.lo, e.hi, e.weight);
        for (d, v) in out.iter_mut().zip([x, y, z]) {
            let flow = a * (v[j] - v[i]);
            d[i] += flow;
            d[j] -= flow;
        }
    }
}

/// Exact local Bloch dynamics of the master equation with rotation angles
/// `α` held fixed over the step:
/// `ẋ_i = x_i cos α_i − y_i sin α_i − x_i + Σ_j a_ij (x_j − x_i)` and
/// `ẏ_i = x_i sin α_i + y_i cos α_i − y_i + Σ_j a_ij (y_j − y_i)`.
pub fn bloch_rhs_frozen(
    x: &[f64],
    y: &[f64],
    z: &[f64],
    alphas: &[f64],
    graph: &CommGraph,
) -> Result<[Vec<f64>; 3], ConsensusError> {
    check_len(graph, &[x.len(), y.len(), z.len(), alphas.len()])?;
    let n = graph.node_count();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let (sa, ca) = alphas[i].sin_cos();
        out[0][i] = x[i] * ca - y[i] * sa - x[i];
        out[1][i] = x[i] * sa + y[i] * ca - y[i];
    }
    add_swap_coupling(x, y, z, graph, &mut out);
    Ok(out)
}

/// Pinned Kuramoto form of the phase dynamics:
/// `φ̇_i = sin(φ_t,i − φ_i) + Σ_j a′_ij sin(φ_j − φ_i)` with
/// `a′_ij = a_ij · s_j / s_i`.
pub fn phase_rhs(
    phi: &[f64],
    s: &[f64],
    pinners: &[f64],
    graph: &CommGraph,
) -> Result<Vec<f64>, ConsensusError> {
    check_len(graph, &[phi.len(), s.len(), pinners.len()])?;
    check_coherence(s)?;
    let mut out: Vec<f64> = phi
        .iter()
        .zip(pinners)
        .map(|(p, t)| (t - p).sin())
        .collect();
    for e in graph.edges() {
        let (i, j, a) = (e.lo, e.hi, e.weight);
        let d = (phi[j] - phi[i]).sin();
        out[i] += a * s[j] / s[i] * d;
        out[j] -= a * s[i] / s[j] * d;
    }
    Ok(out)
}

fn check_coherence(s: &[f64]) -> Result<(), ConsensusError> {
    match s.iter().position(|&v| !(v > 0.0)) {
        Some(node) => Err(ConsensusError::ZeroCoherence { node }),
        None => Ok(()),
    }
}

/// Exact polar dynamics `(φ̇, ṡ)` of each node's in-plane Bloch component
/// with rotation angles held fixed over the step:
/// `φ̇_i = sin α_i + Σ_j a_ij (s_j/s_i) sin(φ_j − φ_i)`,
/// `ṡ_i = s_i (cos α_i − 1) + Σ_j a_ij (s_j cos(φ_j − φ_i) − s_i)`.
pub fn polar_rhs(
    phi: &[f64],
    s: &[f64],
    alphas: &[f64],
    graph: &CommGraph,
) -> Result<[Vec<f64>; 2], ConsensusError> {
    check_len(graph, &[phi.len(), s.len(), alphas.len()])?;
    check_coherence(s)?;
    let mut dphi: Vec<f64> = alphas.iter().map(|a| a.sin()).collect();
    let mut ds: Vec<f64> = s
        .iter()
        .zip(alphas)
        .map(|(s, a)| s * (a.cos() - 1.0))
        .collect();
    for e in graph.edges() {
        let (i, j, a) = (e.lo, e.hi, e.weight);
        let (sd, cd) = (phi[j] - phi[i]).sin_cos();
        dphi[i] += a * s[j] / s[i] * sd;
        dphi[j] -= a * s[i] / s[j] * sd;
        ds[i] += a * (s[j] * cd - s[i]);
        ds[j] += a * (s[i] * cd - s[j]);
    }
    Ok([dphi, ds])
}

/// Classical RK4 over `substeps` equal steps of a system stored as a list of
/// equally long component vectors.
pub(crate) fn rk4<const K: usize, F>(
    state: [Vec<f64>; K],
    dt: f64,
    substeps: usize,
    mut f: F,
) -> Result<[Vec<f64>; K], ConsensusError>
where
    F: FnMut(&[Vec<f64>; K]) -> Result<[Vec<f64>; K], ConsensusError>,
{
    let h = dt / substeps as f64;
    let axpy = |base: &[Vec<f64>; K], k: &[Vec<f64>; K], c: f64| -> [Vec<f64>; K] {
        std::array::from_fn(|m| {
            base[m]
                .iter()
                .zip(&k[m])
                .map(|(b, d)| b + c * d)
                .collect()
        })
    };
    let mut cur = state;
    for _ in 0..substeps {
        let k1 = f(&cur)?;
        let k2 = f(&axpy(&cur, &k1, h / 2.0))?;
        let k3 = f(&axpy(&cur, &k2, h / 2.0))?;
        let k4 = f(&axpy(&cur, &k3, h))?;
        for m in 0..K {
            for (idx, v) in cur[m].iter_mut().enumerate() {
                *v += h / 6.0 * (k1[m][idx] + 2.0 * k2[m][idx] + 2.0 * k3[m][idx] + k4[m][idx]);
            }
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::build_graph;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn bloch_swap_only() {
        let g = build_graph(2, &[(0, 1)], None).unwrap();
        // no pinning: pin term s cos φ_t − x vanishes when φ_t equals φ
        let x = [1.0, 0.0];
        let y = [0.0, 1.0];
        let d = bloch_rhs_frozen(&x, &y, &[0.0, 0.0], &[0.0, 0.0], &g).unwrap();
        assert_eq!(d[0], vec![-1.0, 1.0]);
        assert_eq!(d[1], vec![1.0, -1.0]);
        let d = bloch_rhs(&x, &y, &[0.0, 0.0], &[0.0, FRAC_PI_2], &g).unwrap();
        assert!((d[0][0] + 1.0).abs() < 1e-15 && (d[0][1] - 1.0).abs() < 1e-15);
        assert!((d[1][0] - 1.0).abs() < 1e-15 && (d[1][1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bloch_single_node_pin() {
        let g = build_graph(1, &[], None).unwrap();
        let d = bloch_rhs(&[1.0], &[0.0], &[0.0], &[FRAC_PI_2], &g).unwrap();
        assert!((d[0][0] + 1.0).abs() < 1e-15 && (d[1][0] - 1.0).abs() < 1e-15);
        let f = bloch_rhs_frozen(&[1.0], &[0.0], &[0.0], &[FRAC_PI_2], &g).unwrap();
        assert!((f[0][0] - d[0][0]).abs() < 1e-15 && (f[1][0] - d[1][0]).abs() < 1e-15);
    }

    #[test]
    fn bloch_fixed_point() {
        let g = build_graph(3, &[(0, 1), (1, 2)], None).unwrap();
        let (x, y) = (0.6f64.cos() * 0.9, 0.6f64.sin() * 0.9);
        let d = bloch_rhs(&[x; 3], &[y; 3], &[0.1; 3], &[0.6; 3], &g).unwrap();
        assert!(d.iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn phase_examples() {
        let g = build_graph(2, &[(0, 1)], None).unwrap();
        let d = phase_rhs(&[0.0, FRAC_PI_2], &[1.0, 1.0], &[FRAC_PI_4; 2], &g).unwrap();
        assert!((d[0] - 1.7071).abs() < 1e-4 && (d[1] + 1.7071).abs() < 1e-4);
        let d = phase_rhs(&[0.0, FRAC_PI_2], &[0.5, 1.0], &[FRAC_PI_4; 2], &g).unwrap();
        assert!((d[0] - 2.7071).abs() < 1e-4);
        let z = phase_rhs(&[0.7; 2], &[0.3, 0.9], &[0.7; 2], &g).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        assert!(matches!(
            phase_rhs(&[0.0; 2], &[1.0, 0.0], &[0.0; 2], &g),
            Err(ConsensusError::ZeroCoherence { node: 1 })
        ));
    }

    #[test]
    fn polar_matches_cartesian_chain_rule() {
        let g = build_graph(3, &[(0, 1), (1, 2), (0, 2)], Some(&[1.0, 0.5, 2.0])).unwrap();
        let phi = [0.1f64, 0.9, 1.4];
        let s = [0.9, 0.4, 0.7];
        let alphas = [0.3, -0.2, 0.5];
        let x: Vec<f64> = phi.iter().zip(&s).map(|(p, s)| s * p.cos()).collect();
        let y: Vec<f64> = phi.iter().zip(&s).map(|(p, s)| s * p.sin()).collect();
        let c = bloch_rhs_frozen(&x, &y, &[0.0; 3], &alphas, &g).unwrap();
        let [dphi, ds] = polar_rhs(&phi, &s, &alphas, &g).unwrap();
        for i in 0..3 {
            let want_phi = (x[i] * c[1][i] - y[i] * c[0][i]) / (s[i] * s[i]);
            let want_s = (x[i] * c[0][i] + y[i] * c[1][i]) / s[i];
            assert!((dphi[i] - want_phi).abs() < 1e-14);
            assert!((ds[i] - want_s).abs() < 1e-14);
        }
    }

    #[test]
    fn rk4_exponential() {
        let out = rk4([vec![1.0]], 1.0, 100, |v| Ok([vec![-v[0][0]]])).unwrap();
        assert!((out[0][0] - (-1.0f64).exp()).abs() < 1e-9);
    }
}
