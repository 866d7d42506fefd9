// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{gates, ComplexMatrix, ZERO};
use super::{bit_of, EngineError, MAX_QUBITS};
use crate::netgraph::symmetric_eigenvalues;

/// Hermiticity and trace tolerance for a valid density matrix.
pub const STATE_TOL: f64 = 1e-9;
/// Largest dimension for which the PSD check runs a full eigen-decomposition.
/// Larger states fall back to checking the diagonal and every 2 × 2 principal
/// minor.
pub const FULL_PSD_CHECK_MAX_DIM: usize = 16;

/// Pure single-qubit preparation `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureQubitSpec {
    theta: f64,
    phi: f64,
}

impl PureQubitSpec {
    /// Checked constructor: `θ ∈ (0, π)`, `φ ∈ [0, π/2]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self, EngineError> {
        if !(theta > 0.0 && theta < PI) {
            return Err(EngineError::ThetaOutOfRange(theta));
        }
        if !(0.0..=FRAC_PI_2).contains(&phi) {
            return Err(EngineError::PhiOutOfRange(phi));
        }
        Ok(Self { theta, phi })
    }

    /// Preparation used when the protocol re-initializes from a measured
    /// phase. Only finiteness is required: shot noise or a biased estimator
    /// can push the estimate outside the first quadrant.
    pub fn from_estimate(theta: f64, phi: f64) -> Result<Self, EngineError> {
        if !(theta > 0.0 && theta < PI) {
            return Err(EngineError::ThetaOutOfRange(theta));
        }
        if !phi.is_finite() {
            return Err(EngineError::PhiOutOfRange(phi));
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [
            Complex64::new((self.theta / 2.0).cos(), 0.0),
            Complex64::from_polar((self.theta / 2.0).sin(), self.phi),
        ]
    }

    pub fn bloch(&self) -> BlochVector {
        let s = self.theta.sin();
        BlochVector::new(s * self.phi.cos(), s * self.phi.sin(), self.theta.cos())
    }
}

/// Pauli expectations `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a single-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// From polar coordinates: length `r`, polar angle `θ`, azimuth `φ`.
    pub fn from_polar(r: f64, theta: f64, phi: f64) -> Self {
        let s = r * theta.sin();
        Self::new(s * phi.cos(), s * phi.sin(), r * theta.cos())
    }

    pub fn r(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn theta(&self) -> f64 {
        let r = self.r();
        if r == 0.0 {
            0.0
        } else {
            (self.z / r).clamp(-1.0, 1.0).acos()
        }
    }

    pub fn phi(&self) -> f64 {
        self.y.atan2(self.x)
    }

    /// In-plane coherence `r·sinθ = √(x² + y²)`.
    pub fn s(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Trace-one, Hermitian, positive-semidefinite state of `n` qubits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix {
    #[serde(flatten)]
    matrix: ComplexMatrix,
    #[serde(skip)]
    qubits: usize,
}

impl DensityMatrix {
    /// Validates every density-matrix invariant.
    pub fn new(matrix: ComplexMatrix) -> Result<Self, EngineError> {
        let qubits = qubits_for_dim(matrix.dim())?;
        let rho = Self { matrix, qubits };
        rho.validate(STATE_TOL)?;
        Ok(rho)
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix, qubits: usize) -> Self {
        debug_assert_eq!(matrix.dim(), 1 << qubits);
        Self { matrix, qubits }
    }

    /// `½(I + xσx + yσy + zσz)`
    pub fn from_bloch(b: BlochVector) -> Result<Self, EngineError> {
        if b.r() > 1.0 + STATE_TOL {
            return Err(EngineError::InvalidState(format!(
                "Bloch vector length {} exceeds 1",
                b.r()
            )));
        }
        let m = ComplexMatrix::from_rows(&[
            vec![
                Complex64::new(0.5 * (1.0 + b.z), 0.0),
                Complex64::new(0.5 * b.x, -0.5 * b.y),
            ],
            vec![
                Complex64::new(0.5 * b.x, 0.5 * b.y),
                Complex64::new(0.5 * (1.0 - b.z), 0.0),
            ],
        ]);
        Ok(Self::from_trusted(m, 1))
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let d = 1 << qubits;
        let mut m = ComplexMatrix::identity(d);
        m.scale_real_in_place(1.0 / d as f64);
        Self::from_trusted(m, qubits)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `tr(ρ²)`
    pub fn purity(&self) -> f64 {
        // ρ Hermitian: tr(ρ²) = Σ |ρ_ab|²
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Smallest eigenvalue, computed through the real symmetric embedding.
    pub fn min_eigenvalue(&self) -> Result<f64, EngineError> {
        let vals = symmetric_eigenvalues(&self.matrix.real_embedding())
            .map_err(|e| EngineError::InvalidState(e.to_string()))?;
        Ok(vals[0])
    }

    /// Checks Hermiticity, unit trace and positivity at tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), EngineError> {
        if !self.matrix.is_finite() {
            return Err(EngineError::InvalidState("non-finite entries".into()));
        }
        let herm = self.matrix.hermiticity_error();
        if herm > tol {
            return Err(EngineError::InvalidState(format!(
                "not Hermitian (‖ρ − ρ†‖ = {herm:e})"
            )));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(EngineError::InvalidState(format!("trace {tr} ≠ 1")));
        }
        let neg = self.psd_violation()?;
        if neg > tol {
            return Err(EngineError::InvalidState(format!(
                "negative eigenvalue −{neg:e}"
            )));
        }
        Ok(())
    }

    /// Amount by which the state fails to be PSD (0 when it is PSD).
    pub(crate) fn psd_violation(&self) -> Result<f64, EngineError> {
        if self.dim() <= FULL_PSD_CHECK_MAX_DIM {
            return Ok((-self.min_eigenvalue()?).max(0.0));
        }
        let d = self.dim();
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            let raa = m[(a, a)].re;
            worst = worst.max(-raa);
            for b in (a + 1)..d {
                let rbb = m[(b, b)].re;
                let excess = m[(a, b)].norm_sqr() - raa.max(0.0) * rbb.max(0.0);
                if excess > 0.0 {
                    worst = worst.max(excess.sqrt());
                }
            }
        }
        Ok(worst)
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize, EngineError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(EngineError::InvalidState(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(EngineError::Capacity { qubits: n });
    }
    Ok(n)
}

/// `ρ = ⊗ᵢ |qᵢ⟩⟨qᵢ|` for one preparation per qubit, qubit 0 leftmost.
pub fn product_state(specs: &[PureQubitSpec]) -> Result<DensityMatrix, EngineError> {
    let n = specs.len();
    if n == 0 {
        return Err(EngineError::InvalidState("no qubits".into()));
    }
    if n > MAX_QUBITS {
        return Err(EngineError::Capacity { qubits: n });
    }
    let mut psi = vec![Complex64::new(1.0, 0.0)];
    for spec in specs {
        let amp = spec.amplitudes();
        psi = psi
            .iter()
            .flat_map(|&a| [a * amp[0], a * amp[1]])
            .collect();
    }
    Ok(DensityMatrix::from_trusted(
        ComplexMatrix::outer(&psi, &psi),
        n,
    ))
}

/// Reduced state of qubit `i`.
pub fn partial_trace_single(rho: &DensityMatrix, i: usize) -> Result<DensityMatrix, EngineError> {
    let n = rho.qubits();
    if i >= n {
        return Err(EngineError::QubitOutOfRange { qubit: i, qubits: n });
    }
    let bit = bit_of(i, n);
    let d = rho.dim();
    let m = rho.matrix();
    let mut out = [[ZERO; 2]; 2];
    for rest in (0..d).filter(|k| k & bit == 0) {
        for (a, row) in out.iter_mut().enumerate() {
            let ra = rest | if a == 1 { bit } else { 0 };
            for (b, cell) in row.iter_mut().enumerate() {
                let rb = rest | if b == 1 { bit } else { 0 };
                *cell += m[(ra, rb)];
            }
        }
    }
    let reduced = ComplexMatrix::from_rows(&[out[0].to_vec(), out[1].to_vec()]);
    Ok(DensityMatrix::from_trusted(reduced, 1))
}

/// Pauli expectations of a single-qubit state.
pub fn bloch_of(rho2: &DensityMatrix) -> Result<BlochVector, EngineError> {
    if rho2.qubits() != 1 {
        return Err(EngineError::DimensionMismatch {
            expected: 2,
            found: rho2.dim(),
        });
    }
    let m = rho2.matrix();
    let off = m[(1, 0)];
    Ok(BlochVector::new(
        2.0 * off.re,
        2.0 * off.im,
        m[(0, 0)].re - m[(1, 1)].re,
    ))
}

/// Bloch vectors of every qubit of `rho`.
pub fn local_blochs(rho: &DensityMatrix) -> Result<Vec<BlochVector>, EngineError> {
    (0..rho.qubits())
        .map(|i| bloch_of(&partial_trace_single(rho, i)?))
        .collect()
}

/// `U ρ U†` for a 2 × 2 unitary `u` acting on qubit `i` of an `n`-qubit matrix.
pub fn conjugate_single(
    rho: &ComplexMatrix,
    i: usize,
    n: usize,
    u: &ComplexMatrix,
) -> ComplexMatrix {
    let bit = bit_of(i, n);
    let d = rho.dim();
    let ud = u.adjoint();
    // (UρU†)_{ab} = Σ_{a',b'} U_{a_i a'_i} ρ_{a' b'} U†_{b'_i b_i}
    let mut tmp = ComplexMatrix::zeros(d);
    for a in 0..d {
        let ai = usize::from(a & bit != 0);
        let a0 = a & !bit;
        for b in 0..d {
            tmp[(a, b)] = u[(ai, 0)] * rho[(a0, b)] + u[(ai, 1)] * rho[(a0 | bit, b)];
        }
    }
    let mut out = ComplexMatrix::zeros(d);
    for a in 0..d {
        for b in 0..d {
            let bi = usize::from(b & bit != 0);
            let b0 = b & !bit;
            out[(a, b)] = tmp[(a, b0)] * ud[(0, bi)] + tmp[(a, b0 | bit)] * ud[(1, bi)];
        }
    }
    out
}

/// Local depolarizing channel on qubit `i`:
/// `ρ → (1−p)ρ + (p/3)(XρX + YρY + ZρZ)`. Shrinks the qubit's Bloch vector
/// by `1 − 4p/3` and leaves every other reduced state untouched.
pub fn depolarize_local(
    rho: &DensityMatrix,
    i: usize,
    p: f64,
) -> Result<DensityMatrix, EngineError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EngineError::ProbabilityOutOfRange(p));
    }
    let n = rho.qubits();
    if i >= n {
        return Err(EngineError::QubitOutOfRange { qubit: i, qubits: n });
    }
    if p == 0.0 {
        return Ok(rho.clone());
    }
    let m = rho.matrix();
    let mut out = m.clone();
    out.scale_real_in_place(1.0 - p);
    for pauli in [gates::pauli_x(), gates::pauli_y(), gates::pauli_z()] {
        out.add_scaled(&conjugate_single(m, i, n, &pauli), p / 3.0);
    }
    Ok(DensityMatrix::from_trusted(out, n))
}

/// Shrink factor `1 − 4p/3` applied by [`depolarize_local`].
pub fn depolarizing_shrink(p: f64) -> f64 {
    1.0 - 4.0 * p / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, FRAC_PI_8};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn plus_state() {
        let rho = product_state(&[PureQubitSpec::new(FRAC_PI_2, 0.0).unwrap()]).unwrap();
        for z in rho.matrix().as_slice() {
            assert!(close(z.re, 0.5, 1e-15) && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn spec_ranges() {
        assert!(PureQubitSpec::new(0.0, 0.1).is_err());
        assert!(PureQubitSpec::new(PI, 0.1).is_err());
        assert!(PureQubitSpec::new(1.0, -0.1).is_err());
        assert!(PureQubitSpec::new(1.0, 1.6).is_err());
        assert!(PureQubitSpec::new(1.0, FRAC_PI_2).is_ok());
        assert!(PureQubitSpec::from_estimate(1.0, 2.5).is_ok());
        assert!(PureQubitSpec::from_estimate(1.0, f64::NAN).is_err());
    }

    #[test]
    fn three_node_initial_state() {
        let specs = [
            PureQubitSpec::new(1.96, 0.0).unwrap(),
            PureQubitSpec::new(1.49, FRAC_PI_8).unwrap(),
            PureQubitSpec::new(2.07, FRAC_PI_2).unwrap(),
        ];
        let rho = product_state(&specs).unwrap();
        assert_eq!(rho.dim(), 8);
        rho.validate(1e-9).unwrap();
        assert!(close(rho.purity(), 1.0, 1e-9));
        let b1 = bloch_of(&partial_trace_single(&rho, 1).unwrap()).unwrap();
        assert!(close(b1.x, 1.49f64.sin() * FRAC_PI_8.cos(), 1e-12));
        assert!(close(b1.y, 1.49f64.sin() * FRAC_PI_8.sin(), 1e-12));
        assert!(close(b1.z, 1.49f64.cos(), 1e-12));
        let b0 = bloch_of(&partial_trace_single(&rho, 0).unwrap()).unwrap();
        assert!(close(b0.x, 1.96f64.sin(), 1e-12) && close(b0.z, 1.96f64.cos(), 1e-12));
        assert!(close(b0.x, 0.92521, 1e-5) && close(b0.z, -0.37945, 1e-5));
    }

    #[test]
    fn partial_trace_of_two_equal_qubits() {
        let q = PureQubitSpec::new(FRAC_PI_2, FRAC_PI_6).unwrap();
        let rho = product_state(&[q, q]).unwrap();
        for i in 0..2 {
            let b = bloch_of(&partial_trace_single(&rho, i).unwrap()).unwrap();
            assert!(close(b.x, FRAC_PI_6.cos(), 1e-12));
            assert!(close(b.y, 0.5, 1e-12));
            assert!(b.z.abs() < 1e-12);
        }
        assert!(partial_trace_single(&rho, 2).is_err());
    }

    #[test]
    fn bell_state_reduces_to_identity_half() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [
            Complex64::new(h, 0.0),
            ZERO,
            ZERO,
            Complex64::new(h, 0.0),
        ];
        let rho = DensityMatrix::new(ComplexMatrix::outer(&psi, &psi)).unwrap();
        for i in 0..2 {
            let red = partial_trace_single(&rho, i).unwrap();
            let expected = DensityMatrix::maximally_mixed(1);
            assert!(red.matrix().max_abs_diff(expected.matrix()) < 1e-12);
            let b = bloch_of(&red).unwrap();
            assert!(b.r() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_shrinks_bloch() {
        let q = PureQubitSpec::new(FRAC_PI_2, FRAC_PI_3).unwrap();
        let rho = product_state(&[q]).unwrap();
        assert_eq!(depolarize_local(&rho, 0, 0.0).unwrap(), rho);
        let full = depolarize_local(&rho, 0, 0.75).unwrap();
        assert!(full.matrix().max_abs_diff(DensityMatrix::maximally_mixed(1).matrix()) < 1e-12);
        let mixed = depolarize_local(&rho, 0, 0.15).unwrap();
        let b = bloch_of(&mixed).unwrap();
        assert!(close(b.r(), 0.8, 1e-12));
        assert!(close(b.phi(), FRAC_PI_3, 1e-12));
        // cross-check against ½(I + 0.8·r̂·σ)
        let direct = DensityMatrix::from_bloch(q.bloch().scaled(0.8)).unwrap();
        assert!(mixed.matrix().max_abs_diff(direct.matrix()) < 1e-12);
        assert!(depolarize_local(&rho, 0, 1.2).is_err());
    }

    #[test]
    fn depolarizing_leaves_other_qubits_alone() {
        let specs = [
            PureQubitSpec::new(1.1, 0.3).unwrap(),
            PureQubitSpec::new(2.0, 1.2).unwrap(),
            PureQubitSpec::new(0.7, 0.9).unwrap(),
        ];
        let rho = product_state(&specs).unwrap();
        let out = depolarize_local(&rho, 1, 0.2).unwrap();
        for i in [0, 2] {
            let before = partial_trace_single(&rho, i).unwrap();
            let after = partial_trace_single(&out, i).unwrap();
            assert!(before.matrix().max_abs_diff(after.matrix()) < 1e-12);
        }
        let b = bloch_of(&partial_trace_single(&out, 1).unwrap()).unwrap();
        assert!(close(b.r(), depolarizing_shrink(0.2), 1e-12));
    }

    #[test]
    fn validation_catches_bad_states() {
        let not_psd = ComplexMatrix::from_real_rows(&[vec![1.5, 0.0], vec![0.0, -0.5]]);
        assert!(DensityMatrix::new(not_psd).is_err());
        let bad_trace = ComplexMatrix::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 0.4]]);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let not_pow2 = ComplexMatrix::identity(3);
        assert!(DensityMatrix::new(not_pow2).is_err());
    }

    #[test]
    fn capacity_limit() {
        let q = PureQubitSpec::new(1.0, 0.0).unwrap();
        assert!(matches!(
            product_state(&[q; 11]),
            Err(EngineError::Capacity { qubits: 11 })
        ));
    }
}
