// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use proptest::prelude::*;
use qsdc::consensus::bloch_rhs_frozen;
use qsdc::engine::matrix::gates;
use qsdc::engine::{
    evolve, integrate, lindblad_rhs, product_state, rz_jump, swap_jump, JumpSet, PureQubitSpec,
    STATE_TOL,
};
use qsdc::netgraph::build_graph;
use rand::Rng;

const EXACT: f64 = 1e-12;

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn rhs_is_traceless_and_hermitian(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let rho = random_density(n, &mut r);
        let jumps = random_jumps(n, &mut r);
        let d = lindblad_rhs(&rho, &jumps).unwrap();
        prop_assert!(d.trace().norm() < EXACT);
        prop_assert!(d.hermiticity_error() < EXACT);
    }

    #[test]
    fn structural_rhs_matches_dense_dissipator(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let rho = random_density(n, &mut r);
        let jumps = random_jumps(n, &mut r);
        let fast = lindblad_rhs(&rho, &jumps).unwrap();
        let slow = dense_rhs(rho.matrix(), &jumps);
        prop_assert!(fast.max_abs_diff(&slow) < EXACT, "diff {}", fast.max_abs_diff(&slow));
    }

    /// On a product state the local Pauli derivatives of the full master
    /// equation equal the closed local Bloch flow.
    #[test]
    fn local_derivatives_match_bloch_flow(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let graph = random_graph(n, &mut r);
        let specs: Vec<PureQubitSpec> = (0..n)
            .map(|_| PureQubitSpec::from_estimate(r.random_range(0.1..3.0), r.random_range(-3.0..3.0)).unwrap())
            .collect();
        let alphas: Vec<f64> = (0..n).map(|_| r.random_range(-1.5..1.5)).collect();
        let rho = product_state(&specs).unwrap();
        let jumps = JumpSet::for_graph(&graph, &alphas).unwrap();
        let d = lindblad_rhs(&rho, &jumps).unwrap();
        let b: Vec<[f64; 3]> = specs.iter().map(|s| s.bloch().as_array()).collect();
        let col = |k: usize| b.iter().map(|v| v[k]).collect::<Vec<_>>();
        let want = bloch_rhs_frozen(&col(0), &col(1), &col(2), &alphas, &graph).unwrap();
        for i in 0..n {
            for (k, op) in [gates::pauli_x(), gates::pauli_y(), gates::pauli_z()].iter().enumerate() {
                let got = pauli_expectation(&d, &embed(op, i, n));
                prop_assert!((got - want[k][i]).abs() < 1e-12, "node {i} component {k}: {got} vs {}", want[k][i]);
            }
        }
    }

    /// Central differences of `⟨σ⟩` along the integrated flow agree with the
    /// right-hand side.
    #[test]
    fn observable_finite_differences(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let rho = random_density(n, &mut r);
        let jumps = random_jumps(n, &mut r);
        let h = 1e-4;
        let fwd = integrate(rho.matrix(), &jumps, h, 4).unwrap();
        let back = integrate(rho.matrix(), &jumps, -h, 4).unwrap();
        let d = lindblad_rhs(&rho, &jumps).unwrap();
        for i in 0..n {
            for op in [gates::pauli_x(), gates::pauli_y(), gates::pauli_z()] {
                let p = embed(&op, i, n);
                let fd = (pauli_expectation(&fwd, &p) - pauli_expectation(&back, &p)) / (2.0 * h);
                prop_assert!((fd - pauli_expectation(&d, &p)).abs() < 1e-6);
            }
        }
    }

    /// `S (A ⊗ B ⊗ C) S† = C ⊗ B ⊗ A` for the outer swap of three qubits.
    #[test]
    fn swap_exchanges_tensor_factors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_2x2(&mut r), random_2x2(&mut r), random_2x2(&mut r));
        let s = swap_jump(0, 2, 3).unwrap();
        let lhs = s.matmul(&a.kron(&b).kron(&c)).matmul(&s.adjoint());
        let rhs = c.kron(&b).kron(&a);
        prop_assert!(lhs.max_abs_diff(&rhs) <= EXACT);
        let s01 = swap_jump(0, 1, 3).unwrap();
        let lhs = s01.matmul(&a.kron(&b).kron(&c)).matmul(&s01.adjoint());
        prop_assert!(lhs.max_abs_diff(&b.kron(&a).kron(&c)) <= EXACT);
        prop_assert!(s.unitarity_error() <= EXACT);
    }

    /// Rotation-Z conjugation turns the local Bloch vector by the angle.
    #[test]
    fn rz_rotates_the_local_phase(seed in any::<u64>(), n in 1usize..=3, alpha in -3.0f64..3.0) {
        let mut r = rng(seed);
        let i = r.random_range(0..n);
        let u = rz_jump(i, alpha, n).unwrap();
        prop_assert!(u.unitarity_error() <= EXACT);
        prop_assert!(u.max_abs_diff(&embed(&gates::rz(alpha), i, n)) <= EXACT);
        let rho = random_density(n, &mut r);
        let out = u.matmul(rho.matrix()).matmul(&u.adjoint());
        let (px, py) = (embed(&gates::pauli_x(), i, n), embed(&gates::pauli_y(), i, n));
        let (x, y) = (pauli_expectation(rho.matrix(), &px), pauli_expectation(rho.matrix(), &py));
        let (c, s) = (alpha.cos(), alpha.sin());
        prop_assert!((pauli_expectation(&out, &px) - (c * x - s * y)).abs() <= EXACT);
        prop_assert!((pauli_expectation(&out, &py) - (s * x + c * y)).abs() <= EXACT);
    }

    #[test]
    fn evolve_keeps_a_valid_state(seed in any::<u64>(), n in 1usize..=4, dt in 1e-3f64..0.1, substeps in 1usize..8) {
        let mut r = rng(seed);
        let rho = random_density(n, &mut r);
        let jumps = random_jumps(n, &mut r);
        let out = evolve(&rho, &jumps, dt, substeps).unwrap();
        prop_assert!(out.validate(STATE_TOL).is_ok(), "{:?}", out.validate(STATE_TOL));
        prop_assert!(out.purity() <= rho.purity() + STATE_TOL);
    }
}

#[test]
fn maximally_mixed_state_is_a_fixed_point() {
    let g = build_graph(3, &[(0, 1), (1, 2)], None).unwrap();
    let jumps = JumpSet::for_graph(&g, &[0.3, -0.7, 1.1]).unwrap();
    let mixed = qsdc::engine::DensityMatrix::maximally_mixed(3);
    assert!(lindblad_rhs(&mixed, &jumps).unwrap().max_abs() < EXACT);
}
