use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::kernel::{
    conjugation_superop, identity2, mat2_dagger, mat2_mul, pauli_x, pauli_y, pauli_z, scale2,
    superop_add, Mat2, Superop, C, ZERO,
};
use super::state::DensityMatrix;
use crate::error::{arg_err, Result};

/// Eigenvalues of the thermal-relaxation Choi matrix at or below this are dropped.
pub const CHOI_EIGEN_CUTOFF: f64 = 1e-12;

/// Per-gate noise channel. Times are in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    None,
    BitFlip {
        #[serde(default = "default_p")]
        p: f64,
    },
    Depolarizing {
        #[serde(default = "default_p")]
        p: f64,
    },
    ThermalRelaxation {
        #[serde(default = "default_t1")]
        t1: f64,
        #[serde(default = "default_t2")]
        t2: f64,
        #[serde(default = "default_tg")]
        tg: f64,
    },
}

fn default_p() -> f64 {
    0.01
}
fn default_t1() -> f64 {
    100.0
}
fn default_t2() -> f64 {
    50.0
}
fn default_tg() -> f64 {
    0.03
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Depolarizing { p: default_p() }
    }
}

impl NoiseSpec {
    pub fn bit_flip(p: f64) -> Self {
        NoiseSpec::BitFlip { p }
    }

    pub fn depolarizing(p: f64) -> Self {
        NoiseSpec::Depolarizing { p }
    }

    pub fn thermal_relaxation(t1: f64, t2: f64, tg: f64) -> Self {
        NoiseSpec::ThermalRelaxation { t1, t2, tg }
    }

    /// Default T1/T2/gate-time magnitudes of superconducting hardware.
    pub fn default_thermal() -> Self {
        Self::thermal_relaxation(default_t1(), default_t2(), default_tg())
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::BitFlip { p } | NoiseSpec::Depolarizing { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return arg_err(format!("noise probability p = {p} outside [0, 1]"));
                }
                Ok(())
            }
            NoiseSpec::ThermalRelaxation { t1, t2, tg } => {
                if !(t1 > 0.0 && t1.is_finite()) {
                    return arg_err(format!("t1 = {t1} must be positive"));
                }
                if !(t2 > 0.0 && t2 <= 2.0 * t1) {
                    return arg_err(format!("t2 = {t2} must satisfy 0 < t2 <= 2*t1 = {}", 2.0 * t1));
                }
                if !(tg >= 0.0 && tg.is_finite()) {
                    return arg_err(format!("gate time tg = {tg} must be non-negative"));
                }
                Ok(())
            }
        }
    }

    /// Operator-sum form of the channel on one qubit. `None` is the identity channel.
    pub fn kraus(&self) -> Result<KrausSet> {
        self.validate()?;
        let ops = match *self {
            NoiseSpec::None => vec![identity2()],
            NoiseSpec::BitFlip { p } => vec![
                scale2(&identity2(), (1.0 - p).sqrt()),
                scale2(&pauli_x(), p.sqrt()),
            ],
            NoiseSpec::Depolarizing { p } => {
                let w = (p / 3.0).sqrt();
                vec![
                    scale2(&identity2(), (1.0 - p).sqrt()),
                    scale2(&pauli_x(), w),
                    scale2(&pauli_y(), w),
                    scale2(&pauli_z(), w),
                ]
            }
            NoiseSpec::ThermalRelaxation { t1, t2, tg } => thermal_relaxation_kraus(t1, t2, tg),
        };
        Ok(KrausSet { operators: ops })
    }
}

/// Single-qubit channel in operator-sum form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<Mat2>,
}

impl KrausSet {
    /// `max |sum_i K_i^dagger K_i - I|`.
    pub fn completeness_error(&self) -> f64 {
        let mut acc = [[ZERO; 2]; 2];
        for k in &self.operators {
            let kk = mat2_mul(&mat2_dagger(k), k);
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += kk[i][j];
                }
            }
        }
        let id = identity2();
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((acc[i][j] - id[i][j]).norm());
            }
        }
        worst
    }

    pub fn superop(&self) -> Superop {
        let mut s = [[ZERO; 4]; 4];
        for k in &self.operators {
            superop_add(&mut s, &conjugation_superop(k));
        }
        s
    }
}

/// Choi matrix of amplitude damping towards `|0>` combined with dephasing, in the
/// input-first convention `sum_ij |i><j| (x) E(|i><j|)`, index `2 * input + output`.
pub fn thermal_relaxation_choi(t1: f64, t2: f64, tg: f64) -> [[f64; 4]; 4] {
    let e1 = (-tg / t1).exp();
    let e2 = (-tg / t2).exp();
    [
        [1.0, 0.0, 0.0, e2],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0 - e1, 0.0],
        [e2, 0.0, 0.0, e1],
    ]
}

fn thermal_relaxation_kraus(t1: f64, t2: f64, tg: f64) -> Vec<Mat2> {
    let choi = thermal_relaxation_choi(t1, t2, tg);
    let m = Matrix4::from_fn(|i, j| choi[i][j]);
    let eig = m.symmetric_eigen();
    let mut ops = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= CHOI_EIGEN_CUTOFF {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let w = lambda.sqrt();
        let mut op = [[ZERO; 2]; 2];
        for input in 0..2 {
            for output in 0..2 {
                op[output][input] = C::new(w * v[2 * input + output], 0.0);
            }
        }
        ops.push(op);
    }
    ops
}

/// Applies a noise channel to one qubit.
pub fn apply_channel(state: &DensityMatrix, spec: &NoiseSpec, qubit: usize) -> Result<DensityMatrix> {
    state.check_qubit(qubit)?;
    let s = spec.kraus()?.superop();
    let mut out = state.clone();
    if !spec.is_none() {
        out.apply_superop(qubit, &s);
    }
    Ok(out)
}
