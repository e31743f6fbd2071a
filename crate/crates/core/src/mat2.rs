//! Complex 2×2 matrices.
//!
//! Single-qubit operators are the hot inner type of the whole crate (shadow
//! snapshots, local rotations, phase factors), so they get a dedicated
//! fixed-size type instead of a general dense matrix.

use crate::C64;

/// Row-major complex 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub e: [C64; 4],
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

impl Mat2 {
    pub const fn new(e00: C64, e01: C64, e10: C64, e11: C64) -> Self {
        Mat2 {
            e: [e00, e01, e10, e11],
        }
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn pauli_x() -> Self {
        Mat2::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn pauli_y() -> Self {
        Mat2::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn pauli_z() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.e[2 * row + col]
    }

    #[inline]
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.e;
        let b = &rhs.e;
        Mat2::new(
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        )
    }

    #[inline]
    pub fn add(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.e[0] + rhs.e[0],
            self.e[1] + rhs.e[1],
            self.e[2] + rhs.e[2],
            self.e[3] + rhs.e[3],
        )
    }

    #[inline]
    pub fn scale(&self, s: C64) -> Mat2 {
        Mat2::new(s * self.e[0], s * self.e[1], s * self.e[2], s * self.e[3])
    }

    #[inline]
    pub fn adjoint(&self) -> Mat2 {
        Mat2::new(
            self.e[0].conj(),
            self.e[2].conj(),
            self.e[1].conj(),
            self.e[3].conj(),
        )
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.e[0] + self.e[3]
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.e[0] * self.e[3] - self.e[1] * self.e[2]
    }

    /// Apply to a column vector.
    #[inline]
    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.e[0] * v[0] + self.e[1] * v[1],
            self.e[2] * v[0] + self.e[3] * v[1],
        ]
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, rhs: &Mat2) -> f64 {
        self.e
            .iter()
            .zip(rhs.e.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation of `u† u` from the identity, as a max-abs entry.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&Mat2::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Deviation from Hermiticity, as a max-abs entry of `m − m†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let x = Mat2::pauli_x();
        let y = Mat2::pauli_y();
        let z = Mat2::pauli_z();
        // σ^x σ^y = i σ^z
        assert!(x.mul(&y).max_abs_diff(&z.scale(I)) < 1e-15);
        // squares are the identity
        for p in [x, y, z] {
            assert!(p.mul(&p).max_abs_diff(&Mat2::identity()) < 1e-15);
            assert!(p.trace().norm() < 1e-15);
            assert!(p.is_unitary(1e-15));
            assert!(p.hermiticity_defect() < 1e-15);
        }
    }

    #[test]
    fn det_and_vec() {
        let m = Mat2::new(ONE, I, ZERO, C64::new(2.0, 0.0));
        assert_eq!(m.det(), C64::new(2.0, 0.0));
        let v = m.mul_vec([ONE, ONE]);
        assert_eq!(v[0], ONE + I);
        assert_eq!(v[1], C64::new(2.0, 0.0));
    }
}
