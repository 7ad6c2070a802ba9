use num_complex::Complex64;

use super::kernel::{self, qubit_mask, Superop, C, ONE, ZERO};
use crate::error::{arg_err, Error, Result};

/// Register sizes above this are rejected; dense `4^Q` storage stops being sensible.
pub const MAX_QUBITS: usize = 8;

/// Dense row-major density matrix of a `Q`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn zero_state(qubits: usize) -> Result<Self> {
        let mut rho = Self::zeros(qubits)?;
        rho.data[0] = ONE;
        Ok(rho)
    }

    /// Computational basis projector `|index><index|`.
    pub fn basis_state(qubits: usize, index: usize) -> Result<Self> {
        let mut rho = Self::zeros(qubits)?;
        if index >= rho.dim {
            return arg_err(format!("basis index {index} out of range for dim {}", rho.dim));
        }
        let d = rho.dim;
        rho.data[index * d + index] = ONE;
        Ok(rho)
    }

    /// `I / 2^Q`.
    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        let mut rho = Self::zeros(qubits)?;
        let d = rho.dim;
        for i in 0..d {
            rho.data[i * d + i] = C::new(1.0 / d as f64, 0.0);
        }
        Ok(rho)
    }

    /// `|psi><psi|` from an amplitude vector, normalised on the way in.
    pub fn from_pure(qubits: usize, amplitudes: &[Complex64]) -> Result<Self> {
        let mut rho = Self::zeros(qubits)?;
        let d = rho.dim;
        if amplitudes.len() != d {
            return arg_err(format!("expected {d} amplitudes, got {}", amplitudes.len()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm <= 0.0 || !norm.is_finite() {
            return arg_err("state vector has zero or non-finite norm");
        }
        for i in 0..d {
            for j in 0..d {
                rho.data[i * d + j] = amplitudes[i] * amplitudes[j].conj() / norm;
            }
        }
        Ok(rho)
    }

    /// Wraps raw row-major entries. Only the shape is checked.
    pub fn from_entries(qubits: usize, entries: Vec<Complex64>) -> Result<Self> {
        let probe = Self::zeros(qubits)?;
        if entries.len() != probe.data.len() {
            return arg_err(format!(
                "expected {} entries, got {}",
                probe.data.len(),
                entries.len()
            ));
        }
        Ok(Self {
            data: entries,
            ..probe
        })
    }

    fn zeros(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return arg_err(format!("qubit count must be in 1..={MAX_QUBITS}, got {qubits}"));
        }
        let dim = 1usize << qubits;
        Ok(Self {
            qubits,
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise distance to another state of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.qubits {
            return Err(Error::QubitIndex {
                index: q,
                qubits: self.qubits,
            });
        }
        Ok(())
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub(crate) fn apply_superop(&mut self, q: usize, s: &Superop) {
        let mask = qubit_mask(self.qubits, q);
        kernel::apply_local(&mut self.data, self.dim, mask, s);
    }

    pub(crate) fn apply_cnot_in_place(&mut self, control: usize, target: usize) {
        let cm = qubit_mask(self.qubits, control);
        let tm = qubit_mask(self.qubits, target);
        kernel::apply_cnot(&mut self.data, self.dim, cm, tm);
    }
}

/// `tr(Z_q rho)`; the imaginary residue is discarded.
pub fn expect_z(state: &DensityMatrix, qubit: usize) -> Result<f64> {
    state.check_qubit(qubit)?;
    Ok(z_expectation_unchecked(state, qubit))
}

/// `<Z_q>` for every qubit, in qubit order.
pub fn expect_z_all(state: &DensityMatrix) -> Vec<f64> {
    (0..state.qubits)
        .map(|q| z_expectation_unchecked(state, q))
        .collect()
}

fn z_expectation_unchecked(state: &DensityMatrix, qubit: usize) -> f64 {
    let mask = qubit_mask(state.qubits, qubit);
    let d = state.dim;
    (0..d)
        .map(|i| {
            let p = state.data[i * d + i].re;
            if i & mask == 0 {
                p
            } else {
                -p
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn expectation_of_poles_and_mixed_state() {
        let zero = DensityMatrix::zero_state(1).unwrap();
        let one = DensityMatrix::basis_state(1, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(close(expect_z(&zero, 0).unwrap(), 1.0, 1e-15));
        assert!(close(expect_z(&one, 0).unwrap(), -1.0, 1e-15));
        assert!(close(expect_z(&mixed, 0).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // |10>: qubit 0 excited, qubit 1 ground
        let rho = DensityMatrix::basis_state(2, 0b10).unwrap();
        assert_eq!(expect_z_all(&rho), vec![-1.0, 1.0]);
    }

    #[test]
    fn out_of_range_qubit_is_an_index_error() {
        let rho = DensityMatrix::zero_state(2).unwrap();
        assert_eq!(
            expect_z(&rho, 2),
            Err(Error::QubitIndex {
                index: 2,
                qubits: 2
            })
        );
    }

    #[test]
    fn rejects_bad_register_sizes() {
        assert!(DensityMatrix::zero_state(0).is_err());
        assert!(DensityMatrix::zero_state(MAX_QUBITS + 1).is_err());
        assert!(DensityMatrix::from_entries(1, vec![ZERO; 3]).is_err());
    }

    #[test]
    fn pure_state_has_unit_purity() {
        let amps = [C::new(0.6, 0.0), C::new(0.0, 0.8)];
        let rho = DensityMatrix::from_pure(1, &amps).unwrap();
        assert!(close(rho.purity(), 1.0, 1e-12));
        assert!(close(rho.trace().re, 1.0, 1e-12));
        assert!(rho.hermiticity_error() < 1e-15);
    }
}
