// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use qsdc::consensus::{convergence_rate, sinc};
use qsdc::netgraph::{
    is_connected, laplacian, laplacian_from_incidence, symmetric_eigenvalues, SpectralReport,
};
use rand::Rng;

/// Number of eigenvalues below `sigma`, by Sylvester's law of inertia: the
/// count of negative pivots in the LDLᵀ factorization of `M − σI`.
fn count_below(m: &Array2<f64>, sigma: f64) -> usize {
    let n = m.nrows();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] -= sigma;
    }
    let mut neg = 0;
    for k in 0..n {
        let mut p = a[(k, k)];
        if p == 0.0 {
            // nudge an exact zero pivot; only matters on a measure-zero set
            p = -1e-300;
        }
        if p < 0.0 {
            neg += 1;
        }
        for i in k + 1..n {
            let f = a[(i, k)] / p;
            for j in k + 1..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    neg
}

/// k-th smallest eigenvalue by bisection on the inertia count.
fn bisect_eigenvalue(m: &Array2<f64>, k: usize) -> f64 {
    let bound = m.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(m, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * bound {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = r.random_range(-2.0..2.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn jacobi_matches_inertia_bisection(seed in any::<u64>(), n in 1usize..=12) {
        let m = random_symmetric(n, seed);
        let vals = symmetric_eigenvalues(&m).unwrap();
        prop_assert_eq!(vals.len(), n);
        for (k, v) in vals.iter().enumerate() {
            let oracle = bisect_eigenvalue(&m, k);
            prop_assert!((v - oracle).abs() < 1e-9, "eigenvalue {k}: {v} vs {oracle}");
        }
    }

    #[test]
    fn laplacian_spectrum_matches_oracle(seed in any::<u64>(), n in 2usize..=16) {
        let g = random_graph(n, &mut rng(seed));
        let l = laplacian(&g);
        let report = SpectralReport::of(&g).unwrap();
        for (k, v) in report.eigenvalues.iter().enumerate() {
            prop_assert!((v - bisect_eigenvalue(&l, k)).abs() < 1e-9);
        }
        prop_assert!(report.eigenvalues[0].abs() < 1e-9);
        prop_assert!(report.algebraic_connectivity() > 1e-9);
        prop_assert!(is_connected(&g));
    }

    #[test]
    fn laplacian_routes_agree(seed in any::<u64>(), n in 2usize..=16) {
        let g = random_graph(n, &mut rng(seed));
        let (a, b) = (laplacian(&g), laplacian_from_incidence(&g));
        let gap = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(gap < 1e-12);
        for row in a.rows() {
            prop_assert!(row.sum().abs() < 1e-12);
        }
    }

    /// The Laplacian has a zero eigenvalue on the consensus direction, so the
    /// rate reduces to the first-order coefficient on any connected graph.
    #[test]
    fn rate_is_first_order_coefficient(seed in any::<u64>(), n in 2usize..=10, eps in 0.0f64..1.5) {
        let g = random_graph(n, &mut rng(seed));
        let mu = convergence_rate(&g, eps).unwrap();
        prop_assert!((mu - sinc(eps)).abs() < 1e-9, "{mu} vs {}", sinc(eps));
    }
}

#[test]
fn disconnected_graph_has_two_zero_eigenvalues() {
    let g = qsdc::netgraph::build_graph(4, &[(0, 1), (2, 3)], None).unwrap();
    assert!(!is_connected(&g));
    let r = SpectralReport::of(&g).unwrap();
    assert!(r.algebraic_connectivity().abs() < 1e-12);
    assert_eq!(count_below(&laplacian(&g), 1e-6), 2);
}
