// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ONE};
use super::{bit_of, EngineError};
use crate::netgraph::CommGraph;

/// A unitary jump operator, stored structurally so the sandwich `CρC†` costs
/// O(d²) instead of a dense product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpKind {
    /// `I ⊗ … ⊗ Rz(angle) ⊗ … ⊗ I` on one qubit.
    RotationZ { qubit: usize, angle: f64 },
    /// Exchange of the tensor factors of two qubits.
    Swap { a: usize, b: usize },
}

/// Jump operator together with its dissipation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub kind: JumpKind,
    pub rate: f64,
}

impl Jump {
    pub fn matrix(&self, n: usize) -> ComplexMatrix {
        match self.kind {
            JumpKind::RotationZ { qubit, angle } => rz_matrix(qubit, angle, n),
            JumpKind::Swap { a, b } => swap_matrix(a, b, n),
        }
    }

    /// `C ρ C†` without forming `C`.
    pub fn sandwich(&self, rho: &ComplexMatrix, n: usize) -> ComplexMatrix {
        let d = rho.dim();
        let mut out = ComplexMatrix::zeros(d);
        match self.kind {
            JumpKind::RotationZ { qubit, angle } => {
                let bit = bit_of(qubit, n);
                let up = Complex64::from_polar(1.0, angle);
                let down = up.conj();
                let src = rho.as_slice();
                let dst = out.as_mut_slice();
                for r in 0..d {
                    let rb = r & bit != 0;
                    for c in 0..d {
                        let cb = c & bit != 0;
                        let v = src[r * d + c];
                        dst[r * d + c] = match (rb, cb) {
                            (false, false) | (true, true) => v,
                            (true, false) => v * up,
                            (false, true) => v * down,
                        };
                    }
                }
            }
            JumpKind::Swap { a, b } => {
                let (ba, bb) = (bit_of(a, n), bit_of(b, n));
                let perm = |k: usize| -> usize {
                    let x = usize::from(k & ba != 0);
                    let y = usize::from(k & bb != 0);
                    if x == y {
                        k
                    } else {
                        k ^ ba ^ bb
                    }
                };
                let src = rho.as_slice();
                let dst = out.as_mut_slice();
                for r in 0..d {
                    let pr = perm(r);
                    for c in 0..d {
                        dst[r * d + c] = src[pr * d + perm(c)];
                    }
                }
            }
        }
        out
    }
}

/// The rotation-Z pins (one per node) and edge swaps driving the master
/// equation.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSet {
    qubits: usize,
    pins: Vec<Jump>,
    swaps: Vec<Jump>,
}

impl JumpSet {
    pub fn empty(qubits: usize) -> Self {
        Self {
            qubits,
            pins: Vec::new(),
            swaps: Vec::new(),
        }
    }

    /// One unit-rate rotation-Z pin per node with the given angles and one
    /// swap per graph edge at the edge weight.
    pub fn for_graph(graph: &CommGraph, pin_angles: &[f64]) -> Result<Self, EngineError> {
        let n = graph.node_count();
        if pin_angles.len() != n {
            return Err(EngineError::DimensionMismatch {
                expected: n,
                found: pin_angles.len(),
            });
        }
        let mut set = Self::empty(n);
        for (i, &angle) in pin_angles.iter().enumerate() {
            set.push_pin(i, angle)?;
        }
        for e in graph.edges() {
            set.push_swap(e.lo, e.hi, e.weight)?;
        }
        Ok(set)
    }

    pub fn push_pin(&mut self, qubit: usize, angle: f64) -> Result<(), EngineError> {
        self.check(qubit)?;
        self.pins.push(Jump {
            kind: JumpKind::RotationZ { qubit, angle },
            rate: 1.0,
        });
        Ok(())
    }

    pub fn push_swap(&mut self, a: usize, b: usize, rate: f64) -> Result<(), EngineError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(EngineError::SameQubit(a));
        }
        self.swaps.push(Jump {
            kind: JumpKind::Swap { a, b },
            rate,
        });
        Ok(())
    }

    fn check(&self, q: usize) -> Result<(), EngineError> {
        if q >= self.qubits {
            Err(EngineError::QubitOutOfRange {
                qubit: q,
                qubits: self.qubits,
            })
        } else {
            Ok(())
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn pins(&self) -> &[Jump] {
        &self.pins
    }

    pub fn swaps(&self) -> &[Jump] {
        &self.swaps
    }

    pub fn iter(&self) -> impl Iterator<Item = &Jump> {
        self.pins.iter().chain(self.swaps.iter())
    }

    pub fn len(&self) -> usize {
        self.pins.len() + self.swaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of all rates; equals the jump count when every rate is 1.
    pub fn total_rate(&self) -> f64 {
        self.iter().map(|j| j.rate).sum()
    }
}

fn rz_matrix(i: usize, alpha: f64, n: usize) -> ComplexMatrix {
    let bit = bit_of(i, n);
    let d = 1usize << n;
    let lo = Complex64::from_polar(1.0, -alpha / 2.0);
    let hi = Complex64::from_polar(1.0, alpha / 2.0);
    let diag: Vec<_> = (0..d).map(|k| if k & bit != 0 { hi } else { lo }).collect();
    ComplexMatrix::from_diagonal(&diag)
}

fn swap_matrix(i: usize, j: usize, n: usize) -> ComplexMatrix {
    let (bi, bj) = (bit_of(i, n), bit_of(j, n));
    let d = 1usize << n;
    let mut m = ComplexMatrix::zeros(d);
    for k in 0..d {
        let x = k & bi != 0;
        let y = k & bj != 0;
        let target = if x == y { k } else { k ^ bi ^ bj };
        m[(target, k)] = ONE;
    }
    m
}

/// Dense swap operator exchanging tensor factors `i` and `j` of `n` qubits.
pub fn swap_jump(i: usize, j: usize, n: usize) -> Result<ComplexMatrix, EngineError> {
    for q in [i, j] {
        if q >= n {
            return Err(EngineError::QubitOutOfRange { qubit: q, qubits: n });
        }
    }
    if i == j {
        return Err(EngineError::SameQubit(i));
    }
    Ok(swap_matrix(i, j, n))
}

/// Dense `I^{⊗i} ⊗ diag(e^{−iα/2}, e^{iα/2}) ⊗ I^{⊗(n−i−1)}`.
pub fn rz_jump(i: usize, alpha: f64, n: usize) -> Result<ComplexMatrix, EngineError> {
    if i >= n {
        return Err(EngineError::QubitOutOfRange { qubit: i, qubits: n });
    }
    Ok(rz_matrix(i, alpha, n))
}
