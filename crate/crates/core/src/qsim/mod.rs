//! Density-matrix simulation with Kraus noise channels.

mod circuit;
mod gate;
pub(crate) mod kernel;
mod noise;
mod state;

pub use circuit::{param_shift_grad, param_shift_grad_cached, run_circuit, EncodingGate, ExpectationLoss, Tape};
pub use gate::{apply_gate, rotation_matrix, GateKind, GateOp};
pub use kernel::{Mat2, Superop};
pub use noise::{apply_channel, thermal_relaxation_choi, KrausSet, NoiseSpec, CHOI_EIGEN_CUTOFF};
pub use state::{expect_z, expect_z_all, DensityMatrix, MAX_QUBITS};
