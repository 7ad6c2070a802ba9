//! Dense kernels shared by density matrices and Heisenberg-picture observables.
//!
//! Basis index convention: qubit `q` of a `Q`-qubit register is bit `Q - 1 - q`
//! of the basis index, so `|q0 q1 ... >` reads left to right.

use num_complex::Complex64;

pub(crate) type C = Complex64;

pub(crate) const ZERO: C = C::new(0.0, 0.0);
pub(crate) const ONE: C = C::new(1.0, 0.0);

/// 2x2 operator, row-major.
pub type Mat2 = [[C; 2]; 2];

/// Linear map on 2x2 blocks acting on `vec(rho)` with index `2 * row + col`.
pub type Superop = [[C; 4]; 4];

#[inline]
pub(crate) fn qubit_mask(qubits: usize, q: usize) -> usize {
    1 << (qubits - 1 - q)
}

/// `K (.) K^dagger` as a superoperator.
pub(crate) fn conjugation_superop(k: &Mat2) -> Superop {
    let mut s = [[ZERO; 4]; 4];
    for r in 0..2 {
        for c in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    s[2 * r + c][2 * a + b] = k[r][a] * k[c][b].conj();
                }
            }
        }
    }
    s
}

pub(crate) fn superop_add(acc: &mut Superop, s: &Superop) {
    for (row, srow) in acc.iter_mut().zip(s) {
        for (x, y) in row.iter_mut().zip(srow) {
            *x += *y;
        }
    }
}

/// Composition `outer . inner` (inner applied first).
pub(crate) fn superop_compose(outer: &Superop, inner: &Superop) -> Superop {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += outer[i][k] * inner[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Hilbert-Schmidt adjoint, the Heisenberg-picture map.
pub(crate) fn superop_adjoint(s: &Superop) -> Superop {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = s[j][i].conj();
        }
    }
    out
}

#[inline]
fn block_indices(dim: usize, mask: usize, a: usize, b: usize) -> [usize; 4] {
    [
        a * dim + b,
        a * dim + (b | mask),
        (a | mask) * dim + b,
        (a | mask) * dim + (b | mask),
    ]
}

/// Applies a single-qubit superoperator in place on a `dim x dim` row-major matrix.
pub(crate) fn apply_local(data: &mut [C], dim: usize, mask: usize, s: &Superop) {
    for a in (0..dim).filter(|a| a & mask == 0) {
        for b in (0..dim).filter(|b| b & mask == 0) {
            let idx = block_indices(dim, mask, a, b);
            let v = [data[idx[0]], data[idx[1]], data[idx[2]], data[idx[3]]];
            for (row, &i) in s.iter().zip(&idx) {
                data[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }
}

/// `tr(obs^dagger . S(rho))` for a single-qubit superoperator without materialising `S(rho)`.
pub(crate) fn local_overlap(obs: &[C], rho: &[C], dim: usize, mask: usize, s: &Superop) -> C {
    let mut acc = ZERO;
    for a in (0..dim).filter(|a| a & mask == 0) {
        for b in (0..dim).filter(|b| b & mask == 0) {
            let idx = block_indices(dim, mask, a, b);
            let v = [rho[idx[0]], rho[idx[1]], rho[idx[2]], rho[idx[3]]];
            for (row, &i) in s.iter().zip(&idx) {
                let out = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
                acc += obs[i].conj() * out;
            }
        }
    }
    acc
}

/// Conjugation by CNOT, a basis permutation (self-inverse).
pub(crate) fn apply_cnot(data: &mut [C], dim: usize, control_mask: usize, target_mask: usize) {
    let perm = |i: usize| {
        if i & control_mask != 0 {
            i ^ target_mask
        } else {
            i
        }
    };
    let src = data.to_vec();
    for i in 0..dim {
        let pi = perm(i);
        for j in 0..dim {
            data[i * dim + j] = src[pi * dim + perm(j)];
        }
    }
}

pub(crate) fn mat2_dagger(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

pub(crate) fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn pauli_x() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub(crate) fn pauli_y() -> Mat2 {
    [[ZERO, C::new(0.0, -1.0)], [C::new(0.0, 1.0), ZERO]]
}

pub(crate) fn pauli_z() -> Mat2 {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub(crate) fn identity2() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub(crate) fn scale2(m: &Mat2, f: f64) -> Mat2 {
    [[m[0][0] * f, m[0][1] * f], [m[1][0] * f, m[1][1] * f]]
}
