// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use super::jumps::JumpSet;
use super::matrix::ComplexMatrix;
use super::state::DensityMatrix;
use super::EngineError;

/// Most negative eigenvalue tolerated on an integrated state before the step
/// is reported as diverged.
pub const DIVERGENCE_TOL: f64 = 1e-6;

fn rhs_raw(rho: &ComplexMatrix, jumps: &JumpSet) -> ComplexMatrix {
    let n = jumps.qubits();
    let mut out = ComplexMatrix::zeros(rho.dim());
    for j in jumps.iter() {
        out.add_scaled(&j.sandwich(rho, n), j.rate);
    }
    // every jump is unitary, so ½{C†C, ρ} = ρ
    out.add_scaled(rho, -jumps.total_rate());
    out
}

/// Right-hand side of the master equation,
/// `Σ_k γ_k (C_k ρ C_k† − ½{C_k†C_k, ρ})`, for unitary jumps.
pub fn lindblad_rhs(rho: &DensityMatrix, jumps: &JumpSet) -> Result<ComplexMatrix, EngineError> {
    lindblad_rhs_matrix(rho.matrix(), jumps)
}

/// Same as [`lindblad_rhs`] for an arbitrary (not necessarily physical)
/// matrix, e.g. an RK stage.
pub fn lindblad_rhs_matrix(
    rho: &ComplexMatrix,
    jumps: &JumpSet,
) -> Result<ComplexMatrix, EngineError> {
    let expected = 1usize << jumps.qubits();
    if rho.dim() != expected {
        return Err(EngineError::DimensionMismatch {
            expected,
            found: rho.dim(),
        });
    }
    Ok(rhs_raw(rho, jumps))
}

fn rk4_step(rho: &ComplexMatrix, jumps: &JumpSet, h: f64) -> ComplexMatrix {
    let k1 = rhs_raw(rho, jumps);
    let mut stage = rho.clone();
    stage.add_scaled(&k1, h / 2.0);
    let k2 = rhs_raw(&stage, jumps);
    stage = rho.clone();
    stage.add_scaled(&k2, h / 2.0);
    let k3 = rhs_raw(&stage, jumps);
    stage = rho.clone();
    stage.add_scaled(&k3, h);
    let k4 = rhs_raw(&stage, jumps);
    let mut out = rho.clone();
    out.add_scaled(&k1, h / 6.0);
    out.add_scaled(&k2, h / 3.0);
    out.add_scaled(&k3, h / 3.0);
    out.add_scaled(&k4, h / 6.0);
    out
}

/// Plain RK4 over a signed time span with no normalization. Used by
/// finite-difference checks that need to step backwards.
pub fn integrate(
    rho: &ComplexMatrix,
    jumps: &JumpSet,
    span: f64,
    substeps: usize,
) -> Result<ComplexMatrix, EngineError> {
    let mut cur = rho.clone();
    lindblad_rhs_matrix(&cur, jumps)?;
    let h = span / substeps.max(1) as f64;
    for _ in 0..substeps.max(1) {
        cur = rk4_step(&cur, jumps, h);
    }
    Ok(cur)
}

/// Evolves `rho` for `dt` with fixed-step RK4 (`substeps` equal steps),
/// re-Hermitizing and renormalizing the trace after every substep.
pub fn evolve(
    rho: &DensityMatrix,
    jumps: &JumpSet,
    dt: f64,
    substeps: usize,
) -> Result<DensityMatrix, EngineError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EngineError::BadTimeStep(dt));
    }
    if substeps == 0 {
        return Err(EngineError::BadSubsteps);
    }
    if jumps.qubits() != rho.qubits() {
        return Err(EngineError::DimensionMismatch {
            expected: rho.dim(),
            found: 1 << jumps.qubits(),
        });
    }
    let h = dt / substeps as f64;
    let mut cur = rho.matrix().clone();
    for _ in 0..substeps {
        cur = rk4_step(&cur, jumps, h);
        cur.hermitize();
        let tr = cur.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(EngineError::IntegrationDiverged(format!(
                "trace collapsed to {tr}"
            )));
        }
        cur.scale_real_in_place(1.0 / tr);
    }
    let out = DensityMatrix::from_trusted(cur, rho.qubits());
    if !out.matrix().is_finite() {
        return Err(EngineError::IntegrationDiverged("non-finite entries".into()));
    }
    let neg = out.psd_violation()?;
    if neg > DIVERGENCE_TOL {
        return Err(EngineError::IntegrationDiverged(format!(
            "eigenvalue −{neg:e} after dt = {dt}; use more substeps"
        )));
    }
    Ok(out)
}
