//! Dense linear-algebra helpers for multi-qubit operators.
//!
//! Matrices use the kron ordering fixed by the crate convention: tensor
//! position 0 (site 1) is the most significant bit of the row/column index.

use crate::mat2::Mat2;
use crate::{C64, CMat};

/// Bit shift of tensor position `pos` (0-based) in an `n`-site register.
#[inline]
pub fn pos_shift(n: usize, pos: usize) -> usize {
    n - 1 - pos
}

/// Apply a single-site operator to a state vector in place:
/// `v ← (u at position pos) v`.
pub fn apply_mat2_to_vec(amps: &mut [C64], n_sites: usize, pos: usize, u: &Mat2) {
    let shift = pos_shift(n_sites, pos);
    let step = 1usize << shift;
    let dim = amps.len();
    debug_assert_eq!(dim, 1 << n_sites);
    let mut base = 0;
    while base < dim {
        for k0 in base..base + step {
            let k1 = k0 + step;
            let a = amps[k0];
            let b = amps[k1];
            amps[k0] = u.e[0] * a + u.e[1] * b;
            amps[k1] = u.e[2] * a + u.e[3] * b;
        }
        base += 2 * step;
    }
}

/// `m ← (u at position pos) m`
pub fn apply_mat2_left(m: &mut CMat, n_sites: usize, pos: usize, u: &Mat2) {
    let shift = pos_shift(n_sites, pos);
    let step = 1usize << shift;
    let dim = m.nrows();
    for j in 0..m.ncols() {
        let mut base = 0;
        while base < dim {
            for k0 in base..base + step {
                let k1 = k0 + step;
                let a = m[(k0, j)];
                let b = m[(k1, j)];
                m[(k0, j)] = u.e[0] * a + u.e[1] * b;
                m[(k1, j)] = u.e[2] * a + u.e[3] * b;
            }
            base += 2 * step;
        }
    }
}

/// `m ← m (u at position pos)`
pub fn apply_mat2_right(m: &mut CMat, n_sites: usize, pos: usize, u: &Mat2) {
    let shift = pos_shift(n_sites, pos);
    let step = 1usize << shift;
    let dim = m.ncols();
    let mut base = 0;
    while base < dim {
        for k0 in base..base + step {
            let k1 = k0 + step;
            for i in 0..m.nrows() {
                let a = m[(i, k0)];
                let b = m[(i, k1)];
                m[(i, k0)] = u.e[0] * a + u.e[2] * b;
                m[(i, k1)] = u.e[1] * a + u.e[3] * b;
            }
        }
        base += 2 * step;
    }
}

pub fn identity(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn mat2_to_cmat(u: &Mat2) -> CMat {
    CMat::from_fn(2, 2, |i, j| u.get(i, j))
}

/// Kronecker product. Row/column index of the result has `a`'s index in the
/// most significant bits.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut d = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

/// Max-abs entry of `m − m†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut d = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}
