use serde::{Deserialize, Serialize};

use super::kernel::{conjugation_superop, Mat2, Superop, C};
use super::state::DensityMatrix;
use crate::error::{arg_err, Error, Result};

/// Gate set of the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::Cnot)
    }
}

/// One gate of a circuit. Rotations read their angle from `theta[param_slot]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub param_slot: Option<usize>,
}

impl GateOp {
    pub fn rotation(kind: GateKind, target: usize, slot: usize) -> Self {
        debug_assert!(kind.is_rotation());
        Self {
            kind,
            target,
            control: None,
            param_slot: Some(slot),
        }
    }

    pub fn rx(target: usize, slot: usize) -> Self {
        Self::rotation(GateKind::Rx, target, slot)
    }

    pub fn ry(target: usize, slot: usize) -> Self {
        Self::rotation(GateKind::Ry, target, slot)
    }

    pub fn rz(target: usize, slot: usize) -> Self {
        Self::rotation(GateKind::Rz, target, slot)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            param_slot: None,
        }
    }

    /// Structural checks against a register size.
    pub fn validate(&self, qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q >= qubits {
                Err(Error::QubitIndex { index: q, qubits })
            } else {
                Ok(())
            }
        };
        check(self.target)?;
        match (self.kind, self.control, self.param_slot) {
            (GateKind::Cnot, Some(c), None) => {
                check(c)?;
                if c == self.target {
                    return arg_err(format!("CNOT control and target are both qubit {c}"));
                }
                Ok(())
            }
            (GateKind::Cnot, _, _) => arg_err("CNOT needs a control and no parameter slot"),
            (_, None, Some(_)) => Ok(()),
            (kind, _, _) => arg_err(format!("{kind:?} needs a parameter slot and no control")),
        }
    }

    /// Qubits this gate acts on.
    pub fn touched(&self) -> impl Iterator<Item = usize> {
        self.control.into_iter().chain(std::iter::once(self.target))
    }
}

/// Single-qubit rotation unitary `exp(-i theta P / 2)`.
pub fn rotation_matrix(kind: GateKind, theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let re = |x: f64| C::new(x, 0.0);
    match kind {
        GateKind::Rx => [[re(c), C::new(0.0, -s)], [C::new(0.0, -s), re(c)]],
        GateKind::Ry => [[re(c), re(-s)], [re(s), re(c)]],
        GateKind::Rz => [[C::new(c, -s), re(0.0)], [re(0.0), C::new(c, s)]],
        GateKind::Cnot => panic!("CNOT is not a rotation"),
    }
}

pub(crate) fn rotation_superop(kind: GateKind, theta: f64) -> Superop {
    conjugation_superop(&rotation_matrix(kind, theta))
}

/// `U rho U^dagger` for one gate.
pub fn apply_gate(state: &DensityMatrix, gate: &GateOp, theta: Option<f64>) -> Result<DensityMatrix> {
    gate.validate(state.qubits())?;
    let mut out = state.clone();
    match (gate.kind, theta) {
        (GateKind::Cnot, _) => {
            out.apply_cnot_in_place(gate.control.expect("validated"), gate.target);
        }
        (kind, Some(angle)) => out.apply_superop(gate.target, &rotation_superop(kind, angle)),
        (kind, None) => return arg_err(format!("{kind:?} gate applied without an angle")),
    }
    Ok(out)
}
