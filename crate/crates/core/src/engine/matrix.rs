// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use ndarray::Array2;
use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = ONE;
        }
        m
    }

    /// Builds a matrix from rows. Panics if the rows do not form a square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "rows must form a square matrix");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = d;
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        assert_eq!(u.len(), v.len());
        let dim = u.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in u {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.data[k * self.dim + k]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                out.data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        out
    }

    /// Matrix product. Panics on dimension mismatch.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            let row = &self.data[r * d..(r + 1) * d];
            let dst = &mut out.data[r * d..(r + 1) * d];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * d..(k + 1) * d];
                for (o, &b) in dst.iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (self.dim, other.dim);
        let d = p * q;
        let mut out = Self::zeros(d);
        for r1 in 0..p {
            for c1 in 0..p {
                let a = self.data[r1 * p + c1];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..q {
                    for c2 in 0..q {
                        out.data[(r1 * q + r2) * d + c1 * q + c2] = a * other.data[r2 * q + c2];
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real_in_place(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add_scaled");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `‖M − M†‖_max`
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                let gap = (self.data[r * d + c] - self.data[c * d + r].conj()).norm();
                worst = worst.max(gap);
            }
        }
        worst
    }

    /// `(M + M†)/2`, in place.
    pub fn hermitize(&mut self) {
        let d = self.dim;
        for r in 0..d {
            let diag = &mut self.data[r * d + r];
            *diag = Complex64::new(diag.re, 0.0);
            for c in (r + 1)..d {
                let avg = 0.5 * (self.data[r * d + c] + self.data[c * d + r].conj());
                self.data[r * d + c] = avg;
                self.data[c * d + r] = avg.conj();
            }
        }
    }

    /// `‖M†M − I‖_max`
    pub fn unitarity_error(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Real symmetric embedding `[[Re, −Im], [Im, Re]]` of a Hermitian
    /// matrix. Each eigenvalue of the original appears twice in the embedding.
    pub fn real_embedding(&self) -> Array2<f64> {
        let d = self.dim;
        let mut out = Array2::zeros((2 * d, 2 * d));
        for r in 0..d {
            for c in 0..d {
                let z = self.data[r * d + c];
                out[[r, c]] = z.re;
                out[[r + d, c + d]] = z.re;
                out[[r, c + d]] = -z.im;
                out[[r + d, c]] = z.im;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.add_scaled(rhs, 1.0);
    }
}

/// Debug dump: `{"dim": d, "data": [[re, im], ...]}` in row-major order.
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.data.iter().map(|z| [z.re, z.im]).collect();
        let mut s = serializer.serialize_struct("ComplexMatrix", 2)?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("data", &pairs)?;
        s.end()
    }
}

/// Pauli matrices and the single-qubit gates used by the measurement circuits.
pub mod gates {
    use super::*;

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]])
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]])
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        ComplexMatrix::from_rows(&[vec![h, h], vec![h, -h]])
    }

    pub fn s_dagger() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -I]])
    }

    /// `diag(e^{−iα/2}, e^{iα/2})`
    pub fn rz(alpha: f64) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&[
            Complex64::from_polar(1.0, -alpha / 2.0),
            Complex64::from_polar(1.0, alpha / 2.0),
        ])
    }
}
