use std::f64::consts::FRAC_PI_2;

use super::gate::{rotation_superop, GateKind, GateOp};
use super::kernel::{self, qubit_mask, superop_adjoint, superop_compose, Superop, C, ZERO};
use super::noise::NoiseSpec;
use super::state::{expect_z_all, DensityMatrix};
use crate::error::{arg_err, Error, Result};

/// One data-encoding rotation of the `U_f` layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingGate {
    pub kind: GateKind,
    pub qubit: usize,
    pub angle: f64,
}

#[derive(Debug, Clone)]
enum Step {
    Local { qubit: usize, superop: Superop },
    Cnot { control: usize, target: usize },
}

/// A trainable rotation inside a compiled program.
#[derive(Debug, Clone, Copy)]
struct ParamSite {
    step: usize,
    slot: usize,
    kind: GateKind,
    theta: f64,
}

/// Circuit lowered to fused superoperator steps: each gate carries the noise channel
/// of the qubit it acts on; CNOTs are followed by a channel on both qubits.
#[derive(Debug, Clone)]
struct Program {
    qubits: usize,
    steps: Vec<Step>,
    sites: Vec<ParamSite>,
    noise: Option<Superop>,
}

impl Program {
    fn compile(
        qubits: usize,
        gates: &[GateOp],
        theta: &[f64],
        encoding: &[EncodingGate],
        noise: &NoiseSpec,
    ) -> Result<Self> {
        DensityMatrix::zero_state(qubits)?;
        let noise = if noise.is_none() {
            noise.validate()?;
            None
        } else {
            Some(noise.kraus()?.superop())
        };
        let mut program = Program {
            qubits,
            steps: Vec::with_capacity(encoding.len() + 3 * gates.len()),
            sites: Vec::new(),
            noise,
        };
        for enc in encoding {
            if !enc.kind.is_rotation() {
                return arg_err("encoding gates must be rotations");
            }
            if enc.qubit >= qubits {
                return Err(Error::QubitIndex {
                    index: enc.qubit,
                    qubits,
                });
            }
            program.push_rotation(enc.qubit, enc.kind, enc.angle);
        }
        for gate in gates {
            gate.validate(qubits)?;
            match (gate.kind, gate.control, gate.param_slot) {
                (GateKind::Cnot, Some(control), _) => {
                    program.steps.push(Step::Cnot {
                        control,
                        target: gate.target,
                    });
                    if let Some(n) = program.noise {
                        for q in [control, gate.target] {
                            program.steps.push(Step::Local { qubit: q, superop: n });
                        }
                    }
                }
                (kind, _, Some(slot)) => {
                    let Some(&angle) = theta.get(slot) else {
                        return arg_err(format!(
                            "parameter slot {slot} out of range for {} angles",
                            theta.len()
                        ));
                    };
                    program.sites.push(ParamSite {
                        step: program.steps.len(),
                        slot,
                        kind,
                        theta: angle,
                    });
                    program.push_rotation(gate.target, kind, angle);
                }
                _ => unreachable!("validated gate"),
            }
        }
        Ok(program)
    }

    fn noisy_rotation(&self, kind: GateKind, angle: f64) -> Superop {
        let r = rotation_superop(kind, angle);
        match &self.noise {
            Some(n) => superop_compose(n, &r),
            None => r,
        }
    }

    fn push_rotation(&mut self, qubit: usize, kind: GateKind, angle: f64) {
        let superop = self.noisy_rotation(kind, angle);
        self.steps.push(Step::Local { qubit, superop });
    }

    fn apply_step(&self, step: &Step, data: &mut [C], dim: usize) {
        match step {
            Step::Local { qubit, superop } => {
                kernel::apply_local(data, dim, qubit_mask(self.qubits, *qubit), superop)
            }
            Step::Cnot { control, target } => kernel::apply_cnot(
                data,
                dim,
                qubit_mask(self.qubits, *control),
                qubit_mask(self.qubits, *target),
            ),
        }
    }

    fn apply_step_adjoint(&self, step: &Step, data: &mut [C], dim: usize) {
        match step {
            Step::Local { qubit, superop } => kernel::apply_local(
                data,
                dim,
                qubit_mask(self.qubits, *qubit),
                &superop_adjoint(superop),
            ),
            Step::Cnot { .. } => self.apply_step(step, data, dim),
        }
    }
}

/// Simulates `U_f` followed by the ansatz from `|0...0>`, with the noise channel
/// applied after every gate on each qubit it touches.
pub fn run_circuit(
    qubits: usize,
    gates: &[GateOp],
    theta: &[f64],
    encoding: &[EncodingGate],
    noise: &NoiseSpec,
) -> Result<DensityMatrix> {
    let program = Program::compile(qubits, gates, theta, encoding, noise)?;
    let mut rho = DensityMatrix::zero_state(qubits)?;
    let dim = rho.dim();
    for step in &program.steps {
        program.apply_step(step, rho.data_mut(), dim);
    }
    Ok(rho)
}

/// Forward simulation that keeps every intermediate state so that shift-rule
/// derivatives of any `sum_q w_q <Z_q>` can be read off with one backward sweep.
#[derive(Debug, Clone)]
pub struct Tape {
    program: Program,
    before: Vec<Vec<C>>,
    output: DensityMatrix,
}

impl Tape {
    pub fn record(
        qubits: usize,
        gates: &[GateOp],
        theta: &[f64],
        encoding: &[EncodingGate],
        noise: &NoiseSpec,
    ) -> Result<Self> {
        let program = Program::compile(qubits, gates, theta, encoding, noise)?;
        let mut rho = DensityMatrix::zero_state(qubits)?;
        let dim = rho.dim();
        let mut before = Vec::with_capacity(program.steps.len());
        for step in &program.steps {
            before.push(rho.entries().to_vec());
            program.apply_step(step, rho.data_mut(), dim);
        }
        Ok(Self {
            program,
            before,
            output: rho,
        })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.output
    }

    pub fn expectations(&self) -> Vec<f64> {
        expect_z_all(&self.output)
    }

    /// Gradient of `sum_q weights[q] <Z_q>` with respect to `theta[0..n_slots]` by the
    /// two-term shift rule, `[f(theta + pi/2) - f(theta - pi/2)] / 2` per rotation.
    pub fn observable_gradient(&self, weights: &[f64], n_slots: usize) -> Vec<f64> {
        let qubits = self.program.qubits;
        let dim = self.output.dim();
        assert_eq!(weights.len(), qubits, "one weight per qubit");
        let mut obs = vec![ZERO; dim * dim];
        for i in 0..dim {
            let w: f64 = (0..qubits)
                .map(|q| {
                    if i & qubit_mask(qubits, q) == 0 {
                        weights[q]
                    } else {
                        -weights[q]
                    }
                })
                .sum();
            obs[i * dim + i] = C::new(w, 0.0);
        }
        let mut grad = vec![0.0; n_slots];
        let mut sites = self.program.sites.iter().rev().peekable();
        for (s, step) in self.program.steps.iter().enumerate().rev() {
            while let Some(site) = sites.next_if(|site| site.step == s) {
                let Step::Local { qubit, .. } = step else {
                    unreachable!("parameter sites are local steps")
                };
                let mask = qubit_mask(qubits, *qubit);
                let shifted = |delta: f64| {
                    let sup = self.program.noisy_rotation(site.kind, site.theta + delta);
                    kernel::local_overlap(&obs, &self.before[s], dim, mask, &sup).re
                };
                if site.slot < n_slots {
                    grad[site.slot] += 0.5 * (shifted(FRAC_PI_2) - shifted(-FRAC_PI_2));
                }
            }
            self.program.apply_step_adjoint(step, &mut obs, dim);
        }
        grad
    }
}

/// Loss over the per-qubit `<Z>` vector returning `(loss, dloss/dz)`.
pub trait ExpectationLoss: Fn(&[f64]) -> (f64, Vec<f64>) {}
impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> ExpectationLoss for F {}

/// Parameter-shift gradient of `loss(<Z>)` with respect to `theta`, by re-simulating
/// the circuit with each rotation occurrence shifted by `+-pi/2` and chaining with the
/// loss derivative at the unshifted point. Returns `(loss, gradient)`.
pub fn param_shift_grad(
    qubits: usize,
    gates: &[GateOp],
    theta: &[f64],
    encoding: &[EncodingGate],
    noise: &NoiseSpec,
    loss: impl ExpectationLoss,
) -> Result<(f64, Vec<f64>)> {
    let z = expect_z_all(&run_circuit(qubits, gates, theta, encoding, noise)?);
    let (value, dloss) = loss(&z);
    let mut grad = vec![0.0; theta.len()];
    let extra = theta.len();
    for (g, gate) in gates.iter().enumerate() {
        let Some(slot) = gate.param_slot else { continue };
        let mut shifted_gates = gates.to_vec();
        shifted_gates[g].param_slot = Some(extra);
        let mut shifted_theta = theta.to_vec();
        shifted_theta.push(0.0);
        let mut eval = |delta: f64| -> Result<Vec<f64>> {
            shifted_theta[extra] = theta[slot] + delta;
            let rho = run_circuit(qubits, &shifted_gates, &shifted_theta, encoding, noise)?;
            Ok(expect_z_all(&rho))
        };
        let plus = eval(FRAC_PI_2)?;
        let minus = eval(-FRAC_PI_2)?;
        grad[slot] += dloss
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(d, (p, m))| d * 0.5 * (p - m))
            .sum::<f64>();
    }
    Ok((value, grad))
}

/// Same contract as [`param_shift_grad`], evaluated through a [`Tape`].
pub fn param_shift_grad_cached(
    qubits: usize,
    gates: &[GateOp],
    theta: &[f64],
    encoding: &[EncodingGate],
    noise: &NoiseSpec,
    loss: impl ExpectationLoss,
) -> Result<(f64, Vec<f64>)> {
    let tape = Tape::record(qubits, gates, theta, encoding, noise)?;
    let (value, dloss) = loss(&tape.expectations());
    Ok((value, tape.observable_gradient(&dloss, theta.len())))
}
