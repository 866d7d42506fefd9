// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! Communication graphs and the spectral utilities used by the consensus
//! dynamics.
//!
//! A [`CommGraph`] is an undirected, weighted simple graph. Its Laplacian can
//! be formed two ways, `D − A` directly or `B·W·Bᵀ` from the incidence
//! matrix, and the two routes agree to rounding error. Eigenvalues come from a
//! cyclic Jacobi sweep, which is plenty for the ≤ 32 × 32 matrices that show
//! up here.

use std::collections::{HashSet, VecDeque};

use ndarray::Array2;
use thiserror::Error;

/// Symmetry tolerance accepted by [`lambda_min_sym`] and [`symmetric_eigenvalues`].
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Off-diagonal Frobenius norm at which a Jacobi sweep is considered converged.
pub const JACOBI_TOL: f64 = 1e-12;
/// Upper bound on the number of Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge ({i}, {j}) references a node outside 0..{n}")]
    OutOfRange { i: usize, j: usize, n: usize },
    #[error("edge ({i}, {j}) has non-positive or non-finite weight {weight}")]
    BadWeight { i: usize, j: usize, weight: f64 },
    #[error("{edges} edges but {weights} weights")]
    WeightCount { edges: usize, weights: usize },
    #[error("matrix is not symmetric: |M[{row}][{col}] - M[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("Jacobi iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
}

/// One undirected edge, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub lo: usize,
    pub hi: usize,
    pub weight: f64,
}

/// Undirected weighted communication graph without self-loops or multi-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    node_count: usize,
    edges: Vec<Edge>,
}

/// Builds and validates a [`CommGraph`]. Missing weights default to 1.0.
pub fn build_graph(
    n: usize,
    edges: &[(usize, usize)],
    weights: Option<&[f64]>,
) -> Result<CommGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if let Some(w) = weights {
        if w.len() != edges.len() {
            return Err(GraphError::WeightCount {
                edges: edges.len(),
                weights: w.len(),
            });
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(edges.len());
    for (k, &(i, j)) in edges.iter().enumerate() {
        if i >= n || j >= n {
            return Err(GraphError::OutOfRange { i, j, n });
        }
        if i == j {
            return Err(GraphError::SelfLoop(i, j));
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        if !seen.insert((lo, hi)) {
            return Err(GraphError::DuplicateEdge(i, j));
        }
        let weight = weights.map_or(1.0, |w| w[k]);
        if !(weight.is_finite() && weight > 0.0) {
            return Err(GraphError::BadWeight { i, j, weight });
        }
        out.push(Edge { lo, hi, weight });
    }
    Ok(CommGraph {
        node_count: n,
        edges: out,
    })
}

impl CommGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `i` together with the connecting edge weight.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.lo == i {
                Some((e.hi, e.weight))
            } else if e.hi == i {
                Some((e.lo, e.weight))
            } else {
                None
            }
        })
    }

    /// Weighted adjacency matrix (symmetric, zero diagonal).
    pub fn adjacency(&self) -> Array2<f64> {
        let n = self.node_count;
        let mut a = Array2::zeros((n, n));
        for e in &self.edges {
            a[[e.lo, e.hi]] = e.weight;
            a[[e.hi, e.lo]] = e.weight;
        }
        a
    }

    /// Diagonal edge-weight matrix `W` in edge order.
    pub fn weight_matrix(&self) -> Array2<f64> {
        let m = self.edges.len();
        let mut w = Array2::zeros((m, m));
        for (k, e) in self.edges.iter().enumerate() {
            w[[k, k]] = e.weight;
        }
        w
    }

    /// Same node set with every edge touching an offline node removed.
    /// Offline nodes become isolated.
    pub fn restricted_to(&self, online: &[bool]) -> CommGraph {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|e| online[e.lo] && online[e.hi])
            .collect();
        CommGraph {
            node_count: self.node_count,
            edges,
        }
    }

    /// Same topology with new per-edge weights (edge order preserved).
    pub fn with_weights(&self, weights: &[f64]) -> Result<CommGraph, GraphError> {
        let pairs: Vec<_> = self.edges.iter().map(|e| (e.lo, e.hi)).collect();
        build_graph(self.node_count, &pairs, Some(weights))
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        self.components_among(&vec![true; self.node_count])
    }

    /// Components of the subgraph induced by the `online` mask.
    pub fn components_among(&self, online: &[bool]) -> Vec<Vec<usize>> {
        let n = self.node_count;
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            if online[e.lo] && online[e.hi] {
                adj[e.lo].push(e.hi);
                adj[e.hi].push(e.lo);
            }
        }
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if seen[start] || !online[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }
}

/// Node–edge incidence matrix `B` (n × m). Column `k` carries +1 at the
/// smaller endpoint of edge `k` and −1 at the larger one.
pub fn incidence_matrix(g: &CommGraph) -> Array2<f64> {
    let mut b = Array2::zeros((g.node_count, g.edges.len()));
    for (k, e) in g.edges.iter().enumerate() {
        b[[e.lo, k]] = 1.0;
        b[[e.hi, k]] = -1.0;
    }
    b
}

/// Weighted Laplacian `L = D − A`.
pub fn laplacian(g: &CommGraph) -> Array2<f64> {
    let n = g.node_count;
    let mut l = Array2::zeros((n, n));
    for e in &g.edges {
        l[[e.lo, e.hi]] -= e.weight;
        l[[e.hi, e.lo]] -= e.weight;
        l[[e.lo, e.lo]] += e.weight;
        l[[e.hi, e.hi]] += e.weight;
    }
    l
}

/// Laplacian through the incidence route, `B·W·Bᵀ`.
pub fn laplacian_from_incidence(g: &CommGraph) -> Array2<f64> {
    let b = incidence_matrix(g);
    b.dot(&g.weight_matrix()).dot(&b.t())
}

/// True iff a breadth-first traversal from node 0 reaches every node.
pub fn is_connected(g: &CommGraph) -> bool {
    g.components().len() == 1
}

/// True iff the online nodes form a single component (an empty online set is
/// not connected).
pub fn is_connected_among(g: &CommGraph, online: &[bool]) -> bool {
    g.components_among(online).len() == 1
}

fn check_symmetric(m: &Array2<f64>) -> Result<usize, GraphError> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(GraphError::NotSquare { rows, cols });
    }
    for r in 0..rows {
        for c in (r + 1)..cols {
            let gap = (m[[r, c]] - m[[c, r]]).abs();
            if gap > SYMMETRY_TOL {
                return Err(GraphError::NotSymmetric { row: r, col: c, gap });
            }
        }
    }
    Ok(rows)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns.
pub fn symmetric_eigen(m: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), GraphError> {
    let n = check_symmetric(m)?;
    let mut a = m.clone();
    // symmetrize exactly so rounding in the input can't bias the rotations
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = 0.5 * (a[[r, c]] + a[[c, r]]);
            a[[r, c]] = avg;
            a[[c, r]] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);

    let off_norm = |a: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a[[r, c]] * a[[r, c]];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) >= JACOBI_TOL {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(GraphError::NoConvergence(JACOBI_MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(src));
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &Array2<f64>) -> Result<Vec<f64>, GraphError> {
    symmetric_eigen(m).map(|(vals, _)| vals)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min_sym(m: &Array2<f64>) -> Result<f64, GraphError> {
    let vals = symmetric_eigenvalues(m)?;
    Ok(vals.first().copied().unwrap_or(f64::NAN))
}

/// Laplacian together with its spectrum.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub laplacian: Array2<f64>,
    pub eigenvalues: Vec<f64>,
}

impl SpectralReport {
    pub fn of(g: &CommGraph) -> Result<Self, GraphError> {
        let laplacian = laplacian(g);
        let eigenvalues = symmetric_eigenvalues(&laplacian)?;
        Ok(Self {
            laplacian,
            eigenvalues,
        })
    }

    /// Second-smallest Laplacian eigenvalue (0 for a single node).
    pub fn algebraic_connectivity(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    pub fn lambda_min_of(&self, m: &Array2<f64>) -> Result<f64, GraphError> {
        lambda_min_sym(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn triangle() -> CommGraph {
        build_graph(3, &[(0, 1), (1, 2), (0, 2)], None).unwrap()
    }

    fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn validation_errors_name_the_edge() {
        assert_eq!(
            build_graph(3, &[(1, 1)], None),
            Err(GraphError::SelfLoop(1, 1))
        );
        assert_eq!(
            build_graph(3, &[(0, 1), (1, 0)], None),
            Err(GraphError::DuplicateEdge(1, 0))
        );
        assert_eq!(
            build_graph(3, &[(0, 3)], None),
            Err(GraphError::OutOfRange { i: 0, j: 3, n: 3 })
        );
        assert!(matches!(
            build_graph(3, &[(0, 1)], Some(&[0.0])),
            Err(GraphError::BadWeight { i: 0, j: 1, .. })
        ));
        assert!(matches!(
            build_graph(3, &[(0, 1)], Some(&[1.0, 2.0])),
            Err(GraphError::WeightCount { .. })
        ));
        assert_eq!(build_graph(0, &[], None), Err(GraphError::Empty));
    }

    #[test]
    fn path_graph_basics() {
        let g = build_graph(2, &[(0, 1)], None).unwrap();
        assert_eq!(g.adjacency(), array![[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(incidence_matrix(&g), array![[1.0], [-1.0]]);
        let vals = symmetric_eigenvalues(&laplacian(&g)).unwrap();
        assert!(vals[0].abs() < 1e-12 && (vals[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_incidence_gives_hand_laplacian() {
        let g = triangle();
        let b = incidence_matrix(&g);
        for col in b.columns() {
            assert_eq!(col.sum(), 0.0);
            assert_eq!(col.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(col.iter().filter(|&&x| x == -1.0).count(), 1);
        }
        let expected = array![[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]];
        assert!(max_abs_diff(&b.dot(&b.t()), &expected) < 1e-12);
        let vals = symmetric_eigenvalues(&laplacian(&g)).unwrap();
        assert!(vals[0].abs() < 1e-9);
        assert!((vals[1] - 3.0).abs() < 1e-9 && (vals[2] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn star_degree_diagonal() {
        let g = build_graph(3, &[(0, 1), (0, 2)], None).unwrap();
        let b = incidence_matrix(&g);
        let l = b.dot(&b.t());
        assert_eq!([l[[0, 0]], l[[1, 1]], l[[2, 2]]], [2.0, 1.0, 1.0]);
    }

    #[test]
    fn disconnected_graph_has_two_zero_modes() {
        let g = build_graph(4, &[(0, 1), (2, 3)], None).unwrap();
        assert!(!is_connected(&g));
        let vals = symmetric_eigenvalues(&laplacian(&g)).unwrap();
        assert!(vals[0].abs() < 1e-9 && vals[1].abs() < 1e-9);
        assert!(vals[2] > 1.0);
        assert!(is_connected(&triangle()));
    }

    #[test]
    fn restricted_graph_drops_offline_edges() {
        let g = build_graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], None).unwrap();
        let online = [true, false, true, true];
        assert!(is_connected_among(&g, &online));
        let r = g.restricted_to(&online);
        assert_eq!(r.edge_count(), 2);
        assert!(!is_connected_among(&g, &[true, false, true, false]));
    }

    #[test]
    fn lambda_min_examples() {
        let l = laplacian(&triangle());
        let m = Array2::<f64>::eye(3) + &l;
        assert!((lambda_min_sym(&m).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(lambda_min_sym(&array![[2.0, 0.0], [0.0, 5.0]]).unwrap(), 2.0);
        let sigma1 = 0.827;
        let m = Array2::<f64>::eye(3) * sigma1 + &(l * 0.4135);
        assert!((lambda_min_sym(&m).unwrap() - 0.827).abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(
            lambda_min_sym(&m),
            Err(GraphError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn zero_mode_is_constant_vector() {
        let g = build_graph(4, &[(0, 1), (1, 2), (2, 3), (1, 3)], Some(&[1.0, 2.0, 0.5, 3.0]))
            .unwrap();
        let (vals, vecs) = symmetric_eigen(&laplacian(&g)).unwrap();
        assert!(vals[0].abs() < 1e-9);
        let v0 = vecs.column(0);
        let scale = v0[0];
        for &x in v0.iter() {
            assert!((x / scale - 1.0).abs() < 1e-6);
        }
    }
}
