// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! Shot-based Pauli measurement, the two phase estimators, and the
//! eavesdropper experiment.
//!
//! A shot in basis `B ∈ {X, Y, Z}` returns 0 with probability `(1 + e)/2`
//! where `e` is the matching Bloch component. That closed form is what the
//! basis-change circuits produce (Hadamard for X, S† then Hadamard for Y,
//! nothing for Z); [`gate_level_p0`] runs the circuits on a 2 × 2 state for
//! cross-checking.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::matrix::gates;
use crate::engine::{BlochVector, DensityMatrix};
use crate::sampling::{stream, StreamTag, ThetaDistribution};

/// Slack allowed on `|e| ≤ 1` before a Bloch component is rejected.
pub const EXPECTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("expectation {value} outside [-1, 1] in basis {basis}")]
    InvalidState { basis: Basis, value: f64 },
    #[error("histogram has no shots")]
    EmptyHistogram,
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("both in-plane expectations vanish; the node's phase signal is lost")]
    DegenerateCoherence,
    #[error("expected a 2 × 2 state, got {0} qubits")]
    NotSingleQubit(usize),
    #[error("intercepted stream is empty")]
    EmptyStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Bloch component read by this basis.
    pub fn component(self, b: &BlochVector) -> f64 {
        match self {
            Basis::X => b.x,
            Basis::Y => b.y,
            Basis::Z => b.z,
        }
    }

    fn tag(self) -> StreamTag {
        match self {
            Basis::X => StreamTag::ShotsX,
            Basis::Y => StreamTag::ShotsY,
            Basis::Z => StreamTag::ShotsZ,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Basis::X => "X",
            Basis::Y => "Y",
            Basis::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Outcome counts of repeated single-qubit measurements.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub zeros: u64,
    pub ones: u64,
}

impl CountHistogram {
    pub fn new(zeros: u64, ones: u64) -> Self {
        Self { zeros, ones }
    }

    pub fn shots(&self) -> u64 {
        self.zeros + self.ones
    }

    pub fn p0(&self) -> f64 {
        self.zeros as f64 / self.shots() as f64
    }

    pub fn p1(&self) -> f64 {
        self.ones as f64 / self.shots() as f64
    }

    /// `p0 − p1`, the sampled estimate of the measured Pauli expectation.
    pub fn expectation(&self) -> Result<f64, MeasurementError> {
        if self.shots() == 0 {
            return Err(MeasurementError::EmptyHistogram);
        }
        Ok((self.zeros as f64 - self.ones as f64) / self.shots() as f64)
    }

    pub fn merge(&mut self, other: &CountHistogram) {
        self.zeros += other.zeros;
        self.ones += other.ones;
    }

    /// Empirical outcome entropy in bits per shot.
    pub fn entropy_bits(&self) -> f64 {
        if self.shots() == 0 {
            return 0.0;
        }
        binary_entropy(self.p0())
    }
}

/// `H(p) = −p log₂ p − (1−p) log₂(1−p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    h(p) + h(1.0 - p)
}

/// How an expectation is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// The infinite-shot limit: the true expectation, no noise.
    Exact,
    /// Finite sampling with this many shots per basis.
    Shots(u64),
}

impl Readout {
    pub fn shots(&self) -> u64 {
        match self {
            Readout::Exact => 0,
            Readout::Shots(n) => *n,
        }
    }
}

fn checked_component(bloch: &BlochVector, basis: Basis) -> Result<f64, MeasurementError> {
    let e = basis.component(bloch);
    if !e.is_finite() || e.abs() > 1.0 + EXPECTATION_TOL {
        return Err(MeasurementError::InvalidState { basis, value: e });
    }
    Ok(e.clamp(-1.0, 1.0))
}

/// Probability of outcome 0 in `basis`: `(1 + e)/2`.
pub fn exact_p0(bloch: &BlochVector, basis: Basis) -> Result<f64, MeasurementError> {
    Ok((1.0 + checked_component(bloch, basis)?) / 2.0)
}

/// Draws `shots` outcomes from `rng`.
pub fn sample_with<R: Rng + ?Sized>(
    bloch: &BlochVector,
    basis: Basis,
    shots: u64,
    rng: &mut R,
) -> Result<CountHistogram, MeasurementError> {
    if shots == 0 {
        return Err(MeasurementError::NoShots);
    }
    let p0 = exact_p0(bloch, basis)?;
    // a sum of independent Bernoulli(p0) shots is Binomial(shots, p0)
    let zeros = Binomial::new(shots, p0)
        .expect("p0 is a probability")
        .sample(rng);
    Ok(CountHistogram::new(zeros, shots - zeros))
}

/// Seeded sampling of one basis. Deterministic given `seed`.
pub fn sample_basis(
    bloch: &BlochVector,
    basis: Basis,
    shots: u64,
    seed: u64,
) -> Result<CountHistogram, MeasurementError> {
    sample_with(bloch, basis, shots, &mut stream(seed, 0, 0, basis.tag()))
}

/// One readout of `basis`, exact or sampled from the `(node, step)` stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading {
    pub expectation: f64,
    pub counts: Option<CountHistogram>,
}

pub fn read(
    bloch: &BlochVector,
    basis: Basis,
    readout: Readout,
    seed: u64,
    node: u64,
    step: u64,
) -> Result<Reading, MeasurementError> {
    match readout {
        Readout::Exact => Ok(Reading {
            expectation: checked_component(bloch, basis)?,
            counts: None,
        }),
        Readout::Shots(n) => {
            let counts = sample_with(bloch, basis, n, &mut stream(seed, node, step, basis.tag()))?;
            Ok(Reading {
                expectation: counts.expectation()?,
                counts: Some(counts),
            })
        }
    }
}

/// Runs the basis-change circuit on a single-qubit state and returns the
/// probability of reading 0 in the computational basis.
pub fn gate_level_p0(rho2: &DensityMatrix, basis: Basis) -> Result<f64, MeasurementError> {
    if rho2.qubits() != 1 {
        return Err(MeasurementError::NotSingleQubit(rho2.qubits()));
    }
    let h = gates::hadamard();
    let u = match basis {
        Basis::X => h,
        Basis::Y => h.matmul(&gates::s_dagger()),
        Basis::Z => crate::engine::ComplexMatrix::identity(2),
    };
    let out = u.matmul(rho2.matrix()).matmul(&u.adjoint());
    Ok(out[(0, 0)].re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `atan2(⟨σy⟩, ⟨σx⟩)` from a twin pair.
    QsdcAtan2,
    /// `arccos(⟨σx⟩)`, valid only for pure equatorial states.
    QdcArccos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub phi_hat: f64,
    pub method: EstimatorKind,
    pub sx_hat: f64,
    /// Absent for the single-basis legacy estimator.
    pub sy_hat: Option<f64>,
    /// Total shots consumed; 0 in exact mode.
    pub shots_used: u64,
    /// Set when the legacy estimator had to clamp `|p0 − p1|` to 1.
    pub clamped: bool,
}

/// Twin-qubit estimate from raw expectations.
pub fn qsdc_from_expectations(
    sx: f64,
    sy: f64,
    shots_used: u64,
) -> Result<PhaseEstimate, MeasurementError> {
    if sx == 0.0 && sy == 0.0 {
        return Err(MeasurementError::DegenerateCoherence);
    }
    Ok(PhaseEstimate {
        phi_hat: sy.atan2(sx),
        method: EstimatorKind::QsdcAtan2,
        sx_hat: sx,
        sy_hat: Some(sy),
        shots_used,
        clamped: false,
    })
}

/// `φ̂ = atan2(p0y − p1y, p0x − p1x)`. The common factor `r·sinθ` cancels, so
/// the estimate is unbiased for mixed and off-equator states alike.
pub fn estimate_phase_qsdc(
    counts_x: &CountHistogram,
    counts_y: &CountHistogram,
) -> Result<PhaseEstimate, MeasurementError> {
    qsdc_from_expectations(
        counts_x.expectation()?,
        counts_y.expectation()?,
        counts_x.shots() + counts_y.shots(),
    )
}

/// Legacy estimate from a raw expectation.
pub fn qdc_from_expectation(sx: f64, shots_used: u64) -> PhaseEstimate {
    let clamped = sx.abs() > 1.0;
    if clamped {
        log::warn!("legacy estimator clamped |p0 − p1| = {} to 1", sx.abs());
    }
    PhaseEstimate {
        phi_hat: sx.clamp(-1.0, 1.0).acos(),
        method: EstimatorKind::QdcArccos,
        sx_hat: sx,
        sy_hat: None,
        shots_used,
        clamped,
    }
}

/// `φ̂ = arccos(p0 − p1)` on the X circuit. Biased whenever `r·sinθ < 1`.
pub fn estimate_phase_qdc(counts_x: &CountHistogram) -> Result<PhaseEstimate, MeasurementError> {
    Ok(qdc_from_expectation(counts_x.expectation()?, counts_x.shots()))
}

/// Bloch vector of a pure preparation at `(θ, φ)` for each protocol step,
/// with θ drawn from `dist` on the `(step, Theta)` streams of `seed`.
pub fn prepared_stream(
    phi: f64,
    dist: &ThetaDistribution,
    steps: usize,
    seed: u64,
) -> Vec<BlochVector> {
    (0..steps as u64)
        .map(|k| {
            let theta = dist.sample(&mut stream(seed, 0, k, StreamTag::Theta));
            BlochVector::from_polar(1.0, theta, phi)
        })
        .collect()
}

/// What Eve learns from intercepted qubits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EveReport {
    pub bases: BTreeMap<Basis, CountHistogram>,
    /// `arccos(p0 − p1)` of the aggregated X counts.
    pub naive_phi: f64,
    /// `atan2` of the aggregated Y and X expectations.
    pub informed_phi: f64,
    /// Aggregated `[x, y, z]`; a component stays 0 when its basis is unused.
    pub avg_bloch: [f64; 3],
    pub entropy_bits: BTreeMap<Basis, f64>,
}

/// Eve measures every basis in `bases` with `shots_per_step` shots on each of
/// `steps` intercepted steps. Steps past the end of `stream_in` wrap around.
pub fn eve_intercept(
    stream_in: &[BlochVector],
    bases: &[Basis],
    shots_per_step: u64,
    steps: usize,
    seed: u64,
) -> Result<EveReport, MeasurementError> {
    if stream_in.is_empty() {
        return Err(MeasurementError::EmptyStream);
    }
    if shots_per_step == 0 {
        return Err(MeasurementError::NoShots);
    }
    let mut hist: BTreeMap<Basis, CountHistogram> = BTreeMap::new();
    for k in 0..steps {
        let b = &stream_in[k % stream_in.len()];
        for &basis in bases {
            let mut rng = stream(seed, basis as u64, k as u64, StreamTag::Eve);
            let c = sample_with(b, basis, shots_per_step, &mut rng)?;
            hist.entry(basis).or_default().merge(&c);
        }
    }
    let mean = |basis: Basis| -> f64 {
        hist.get(&basis)
            .and_then(|c| c.expectation().ok())
            .unwrap_or(0.0)
    };
    let entropy_bits = hist.iter().map(|(b, c)| (*b, c.entropy_bits())).collect();
    Ok(EveReport {
        naive_phi: mean(Basis::X).clamp(-1.0, 1.0).acos(),
        informed_phi: mean(Basis::Y).atan2(mean(Basis::X)),
        avg_bloch: [mean(Basis::X), mean(Basis::Y), mean(Basis::Z)],
        entropy_bits,
        bases: hist,
    })
}

/// Infinite-shot limit of Eve's statistics over an intercepted stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveExpectation {
    pub avg_bloch: [f64; 3],
    pub naive_phi: f64,
    pub informed_phi: f64,
    /// Outcome entropy per basis, in `X, Y, Z` order.
    pub entropy_bits: [f64; 3],
}

impl EveExpectation {
    fn from_mean(m: [f64; 3]) -> Self {
        Self {
            avg_bloch: m,
            naive_phi: m[0].clamp(-1.0, 1.0).acos(),
            informed_phi: m[1].atan2(m[0]),
            entropy_bits: m.map(|e| binary_entropy((1.0 + e) / 2.0)),
        }
    }

    /// Exact averages of a finite stream.
    pub fn of_stream(stream_in: &[BlochVector]) -> Result<Self, MeasurementError> {
        if stream_in.is_empty() {
            return Err(MeasurementError::EmptyStream);
        }
        let k = stream_in.len() as f64;
        let mut m = [0.0; 3];
        for b in stream_in {
            for (acc, v) in m.iter_mut().zip(b.as_array()) {
                *acc += v / k;
            }
        }
        Ok(Self::from_mean(m))
    }

    /// Analytic averages for a pure preparation at fixed `φ` with θ drawn
    /// from `dist`: `E[x] = E[sinθ]·cosφ`, `E[y] = E[sinθ]·sinφ`,
    /// `E[z] = E[cosθ]`.
    pub fn analytic(phi: f64, dist: &ThetaDistribution) -> Self {
        let s = dist.mean_sin();
        Self::from_mean([s * phi.cos(), s * phi.sin(), dist.mean_cos()])
    }
}
