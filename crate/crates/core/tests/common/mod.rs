// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the integration tests. Not every test binary uses all of them.
#![allow(dead_code)]

use num_complex::Complex64;
use qsdc::engine::{ComplexMatrix, DensityMatrix, JumpSet};
use qsdc::netgraph::{build_graph, CommGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random full-rank state `AA†/tr(AA†)`.
pub fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d = 1 << n;
    let rows: Vec<Vec<Complex64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let a = ComplexMatrix::from_rows(&rows);
    let mut m = a.matmul(&a.adjoint());
    let tr = m.trace().re;
    m.scale_real_in_place(1.0 / tr);
    m.hermitize();
    DensityMatrix::new(m).expect("AA† is a state")
}

/// Random connected graph on `n` nodes: a random spanning tree plus extra
/// edges, with weights in `[0.2, 2]`.
pub fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> CommGraph {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && rng.random_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    let w: Vec<f64> = edges.iter().map(|_| rng.random_range(0.2..2.0)).collect();
    build_graph(n, &edges, Some(&w)).expect("valid random graph")
}

/// Pins on every qubit with random angles plus the swaps of a random graph.
pub fn random_jumps(n: usize, rng: &mut ChaCha8Rng) -> JumpSet {
    let angles: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    if n == 1 {
        let mut set = JumpSet::empty(1);
        set.push_pin(0, angles[0]).unwrap();
        return set;
    }
    JumpSet::for_graph(&random_graph(n, rng), &angles).unwrap()
}

/// Dense reference `Σ γ (CρC† − ½{C†C, ρ})` built from explicit matrices.
pub fn dense_rhs(rho: &ComplexMatrix, jumps: &JumpSet) -> ComplexMatrix {
    let n = jumps.qubits();
    let mut out = ComplexMatrix::zeros(rho.dim());
    for j in jumps.iter() {
        let c = j.matrix(n);
        let cd = c.adjoint();
        let cdc = cd.matmul(&c);
        out.add_scaled(&c.matmul(rho).matmul(&cd), j.rate);
        out.add_scaled(&cdc.matmul(rho), -0.5 * j.rate);
        out.add_scaled(&rho.matmul(&cdc), -0.5 * j.rate);
    }
    out
}

pub fn pauli_expectation(rho: &ComplexMatrix, op: &ComplexMatrix) -> f64 {
    op.matmul(rho).trace().re
}

/// `I^{⊗i} ⊗ op ⊗ I^{⊗(n−i−1)}` with qubit 0 as the leftmost factor.
pub fn embed(op: &ComplexMatrix, i: usize, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1);
    for q in 0..n {
        out = if q == i {
            out.kron(op)
        } else {
            out.kron(&ComplexMatrix::identity(2))
        };
    }
    out
}

/// Random 2 × 2 complex matrix with entries in the unit square.
pub fn random_2x2(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut e = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    ComplexMatrix::from_rows(&[vec![e(), e()], vec![e(), e()]])
}

/// Proptest settings without on-disk failure persistence (integration tests
/// have no `lib.rs` next to them to anchor the regressions directory).
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}

/// Repository-level `scenarios/` directory.
pub fn scenarios_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// A shipped scenario, parsed and validated.
pub fn shipped(name: &str) -> qsdc::scenario::ScenarioFile {
    qsdc::scenario::parse_scenario(scenarios_dir().join(name)).expect("shipped scenario parses")
}
