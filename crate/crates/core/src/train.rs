//! Hybrid quantum-classical training.
//!
//! The quantum backbone maps a sample to the vector `z` of per-qubit `<Z>` values;
//! `K` independent linear heads (supernets) map `z` to class logits `W_k z + b_k`.
//! Each epoch picks one head epsilon-greedily (uniform with probability `epsilon`,
//! otherwise the lowest-loss head), then takes one plain gradient step on the shared
//! angles and on that head only. Angle gradients use the parameter-shift rule.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arch::{genome_to_circuit, Genome, SearchSpace};
use crate::error::{arg_err, Result};
use crate::par;
use crate::qsim::{EncodingGate, GateOp, NoiseSpec, Tape};
use crate::tasks::{encode_sample, Sample, TaskSpec};

/// Standard deviation of the initial head biases.
pub const BIAS_INIT_STD: f64 = 0.1;

/// Hyperparameters of pretraining and fine-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Exploration probability of the head selection.
    pub epsilon: f64,
    /// Learning rate.
    pub eta: f64,
    /// Pretraining epochs; one random genome per epoch.
    pub epochs: usize,
    /// Training samples per epoch, 0 for the full training split.
    pub batch_size: usize,
    /// Fine-tuning steps per evaluated architecture.
    pub fine_tune_steps: usize,
    /// Initial angles are drawn uniformly from `[-theta_init, theta_init]`.
    pub theta_init: f64,
    /// Standard deviation of the initial head weights.
    pub weight_init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            eta: 0.05,
            epochs: 300,
            batch_size: 0,
            fine_tune_steps: 20,
            theta_init: 0.3,
            weight_init_std: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return arg_err(format!("epsilon = {} outside [0, 1]", self.epsilon));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return arg_err(format!("eta = {} must be a non-negative number", self.eta));
        }
        if !(self.theta_init >= 0.0 && self.weight_init_std >= 0.0) {
            return arg_err("initialisation scales must be non-negative");
        }
        Ok(())
    }
}

/// One linear head `z -> W z + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Supernet {
    /// 1-based head index.
    pub id: usize,
    /// `classes x qubits`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Supernet {
    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn logits(&self, z: &[f64]) -> Vec<f64> {
        let q = z.len();
        self.bias
            .iter()
            .enumerate()
            .map(|(c, b)| b + self.weights[c * q..(c + 1) * q].iter().zip(z).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// The shared angle pool and the `K` heads.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedParameters {
    pub qubits: usize,
    pub l_max: usize,
    /// Length `qubits * l_max`; a genome of `l` layers uses the first `qubits * l`.
    pub theta: Vec<f64>,
    pub supernets: Vec<Supernet>,
    pub epsilon: f64,
    pub eta: f64,
}

impl SharedParameters {
    /// Angles first, then per-head weights and biases, all from one stream.
    pub fn init<R: Rng + ?Sized>(
        qubits: usize,
        l_max: usize,
        classes: usize,
        supernets: usize,
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        if supernets == 0 || classes < 2 || qubits == 0 || l_max == 0 {
            return arg_err("need at least one head, two classes, one qubit and one layer");
        }
        let theta = (0..qubits * l_max)
            .map(|_| {
                if cfg.theta_init > 0.0 {
                    rng.random_range(-cfg.theta_init..=cfg.theta_init)
                } else {
                    0.0
                }
            })
            .collect();
        let w_dist = Normal::new(0.0, cfg.weight_init_std).map_err(|e| crate::Error::Argument(e.to_string()))?;
        let b_dist = Normal::new(0.0, BIAS_INIT_STD).expect("valid std");
        let supernets = (1..=supernets)
            .map(|id| Supernet {
                id,
                weights: (0..classes * qubits).map(|_| w_dist.sample(rng)).collect(),
                bias: (0..classes).map(|_| b_dist.sample(rng)).collect(),
            })
            .collect();
        Ok(Self {
            qubits,
            l_max,
            theta,
            supernets,
            epsilon: cfg.epsilon,
            eta: cfg.eta,
        })
    }

    pub fn classes(&self) -> usize {
        self.supernets[0].classes()
    }

    pub fn head_count(&self) -> usize {
        self.supernets.len()
    }

    fn head(&self, k: usize) -> Result<&Supernet> {
        if k == 0 || k > self.supernets.len() {
            return arg_err(format!("head {k} outside 1..={}", self.supernets.len()));
        }
        Ok(&self.supernets[k - 1])
    }
}

/// A sample with its encoding layer already built.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub encoding: Vec<EncodingGate>,
    pub label: usize,
}

pub fn encode_split(samples: &[Sample], task: &TaskSpec) -> Result<Vec<EncodedSample>> {
    samples
        .iter()
        .map(|s| {
            Ok(EncodedSample {
                encoding: encode_sample(&s.features, task)?,
                label: s.label,
            })
        })
        .collect()
}

/// Mean-free softmax cross-entropy; returns the loss and `dloss/dlogits`.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + max - logits[label];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// A genome lowered once for repeated simulation.
#[derive(Debug, Clone)]
pub struct Ansatz {
    pub qubits: usize,
    pub gates: Vec<GateOp>,
    pub n_params: usize,
}

impl Ansatz {
    pub fn new(genome: &Genome, space: &SearchSpace) -> Result<Self> {
        genome.validate(space)?;
        Ok(Self {
            qubits: space.qubits(),
            gates: genome_to_circuit(genome, space)?,
            n_params: space.param_count(genome.len()),
        })
    }

    fn check(&self, params: &SharedParameters) -> Result<()> {
        if params.qubits != self.qubits || params.theta.len() < self.n_params {
            return arg_err(format!(
                "parameters for {} qubits / {} angles do not fit a {}-qubit ansatz with {} angles",
                params.qubits,
                params.theta.len(),
                self.qubits,
                self.n_params
            ));
        }
        Ok(())
    }

    fn tapes(&self, theta: &[f64], batch: &[EncodedSample], noise: &NoiseSpec) -> Result<Vec<Tape>> {
        par::map(batch, |s| Tape::record(self.qubits, &self.gates, theta, &s.encoding, noise))
            .into_iter()
            .collect()
    }

    /// Per-sample `<Z>` vectors.
    pub fn expectations(
        &self,
        theta: &[f64],
        batch: &[EncodedSample],
        noise: &NoiseSpec,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(self.tapes(theta, batch, noise)?.iter().map(Tape::expectations).collect())
    }
}

/// Logits and mean loss of one head.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<Vec<f64>>,
    pub loss: f64,
}

fn head_forward(head: &Supernet, zs: &[Vec<f64>], batch: &[EncodedSample]) -> ForwardOutput {
    let logits: Vec<Vec<f64>> = zs.iter().map(|z| head.logits(z)).collect();
    let loss = logits
        .iter()
        .zip(batch)
        .map(|(l, s)| cross_entropy(l, s.label).0)
        .sum::<f64>()
        / batch.len() as f64;
    ForwardOutput { logits, loss }
}

fn check_batch(batch: &[EncodedSample], classes: usize) -> Result<()> {
    if batch.is_empty() {
        return arg_err("empty batch");
    }
    if let Some(s) = batch.iter().find(|s| s.label >= classes) {
        return arg_err(format!("label {} outside {classes} classes", s.label));
    }
    Ok(())
}

/// Circuit, head `k` (1-based) and mean softmax cross-entropy over the batch.
pub fn forward(
    ansatz: &Ansatz,
    params: &SharedParameters,
    head: usize,
    batch: &[EncodedSample],
    noise: &NoiseSpec,
) -> Result<ForwardOutput> {
    ansatz.check(params)?;
    let supernet = params.head(head)?;
    check_batch(batch, params.classes())?;
    let zs = ansatz.expectations(&params.theta, batch, noise)?;
    Ok(head_forward(supernet, &zs, batch))
}

fn head_losses(params: &SharedParameters, zs: &[Vec<f64>], batch: &[EncodedSample]) -> Vec<f64> {
    params
        .supernets
        .iter()
        .map(|h| head_forward(h, zs, batch).loss)
        .collect()
}

/// Lowest-loss head, ties to the smallest index. 1-based.
fn best_head(losses: &[f64]) -> usize {
    let mut best = 0;
    for (k, l) in losses.iter().enumerate() {
        if *l < losses[best] {
            best = k;
        }
    }
    best + 1
}

fn epsilon_greedy<R: Rng + ?Sized>(
    epsilon: f64,
    heads: usize,
    rng: &mut R,
    exploit: impl FnOnce() -> usize,
) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(1..=heads)
    } else {
        exploit()
    }
}

/// Epsilon-greedy head choice with `epsilon` taken from `params`.
pub fn select_head<R: Rng + ?Sized>(
    ansatz: &Ansatz,
    params: &SharedParameters,
    batch: &[EncodedSample],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<usize> {
    ansatz.check(params)?;
    check_batch(batch, params.classes())?;
    let mut failure = None;
    let k = epsilon_greedy(params.epsilon, params.head_count(), rng, || {
        match ansatz.expectations(&params.theta, batch, noise) {
            Ok(zs) => best_head(&head_losses(params, &zs, batch)),
            Err(e) => {
                failure = Some(e);
                1
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(k),
    }
}

/// Gradient of the mean loss of one head with respect to the angles and that head.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridGradient {
    pub loss: f64,
    /// Full pool length; slots the ansatz does not use are zero.
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

fn gradient_from_tapes(
    tapes: &[Tape],
    head: &Supernet,
    batch: &[EncodedSample],
    pool_len: usize,
    n_params: usize,
) -> HybridGradient {
    let classes = head.classes();
    let qubits = head.weights.len() / classes;
    let per_sample = par::map(&tapes.iter().zip(batch).collect::<Vec<_>>(), |(tape, s)| {
        let z = tape.expectations();
        let (loss, dlogits) = cross_entropy(&head.logits(&z), s.label);
        let dz: Vec<f64> = (0..qubits)
            .map(|q| (0..classes).map(|c| head.weights[c * qubits + q] * dlogits[c]).sum())
            .collect();
        let dtheta = tape.observable_gradient(&dz, n_params);
        (loss, z, dlogits, dtheta)
    });
    let n = batch.len() as f64;
    let mut g = HybridGradient {
        loss: 0.0,
        theta: vec![0.0; pool_len],
        weights: vec![0.0; classes * qubits],
        bias: vec![0.0; classes],
    };
    for (loss, z, dlogits, dtheta) in per_sample {
        g.loss += loss / n;
        for c in 0..classes {
            g.bias[c] += dlogits[c] / n;
            for q in 0..qubits {
                g.weights[c * qubits + q] += dlogits[c] * z[q] / n;
            }
        }
        for (acc, d) in g.theta.iter_mut().zip(dtheta) {
            *acc += d / n;
        }
    }
    g
}

/// Joint gradient of head `k`'s mean loss.
pub fn hybrid_gradient(
    ansatz: &Ansatz,
    params: &SharedParameters,
    head: usize,
    batch: &[EncodedSample],
    noise: &NoiseSpec,
) -> Result<HybridGradient> {
    ansatz.check(params)?;
    let supernet = params.head(head)?;
    check_batch(batch, params.classes())?;
    let tapes = ansatz.tapes(&params.theta, batch, noise)?;
    Ok(gradient_from_tapes(&tapes, supernet, batch, params.theta.len(), ansatz.n_params))
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// Loss of the selected head before the update.
    pub loss: f64,
    /// 1-based selected head.
    pub head: usize,
    /// Mean `|delta theta|` over the slots the epoch's ansatz used.
    pub mean_dtheta: f64,
    /// `|delta theta|` for every slot of the pool.
    pub dtheta: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    /// `epoch,loss,head,mean_dtheta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,head,mean_dtheta\n");
        for (i, r) in self.records.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", i + 1, r.loss, r.head, r.mean_dtheta);
        }
        out
    }

    /// `epoch,theta_1,...,theta_P` with per-slot `|delta theta|`.
    pub fn dtheta_csv(&self) -> String {
        let width = self.records.first().map_or(0, |r| r.dtheta.len());
        let mut out = String::from("epoch");
        for j in 1..=width {
            let _ = write!(out, ",theta_{j}");
        }
        out.push('\n');
        for (i, r) in self.records.iter().enumerate() {
            let _ = write!(out, "{}", i + 1);
            for d in &r.dtheta {
                let _ = write!(out, ",{d}");
            }
            out.push('\n');
        }
        out
    }

    /// Per-slot mean `|delta theta|` over the last `window` epochs.
    pub fn tail_mean_dtheta(&self, window: usize) -> Vec<f64> {
        let start = self.records.len().saturating_sub(window);
        let tail = &self.records[start..];
        let width = tail.first().map_or(0, |r| r.dtheta.len());
        (0..width)
            .map(|j| tail.iter().map(|r| r.dtheta[j]).sum::<f64>() / tail.len() as f64)
            .collect()
    }
}

/// Selects a head, then steps the used angles and that head's weights by `-eta * grad`.
pub fn train_epoch<R: Rng + ?Sized>(
    ansatz: &Ansatz,
    params: &SharedParameters,
    batch: &[EncodedSample],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<(SharedParameters, EpochRecord)> {
    ansatz.check(params)?;
    check_batch(batch, params.classes())?;
    let tapes = ansatz.tapes(&params.theta, batch, noise)?;
    let head = epsilon_greedy(params.epsilon, params.head_count(), rng, || {
        let zs: Vec<Vec<f64>> = tapes.iter().map(Tape::expectations).collect();
        best_head(&head_losses(params, &zs, batch))
    });
    let supernet = &params.supernets[head - 1];
    let grad = gradient_from_tapes(&tapes, supernet, batch, params.theta.len(), ansatz.n_params);

    let mut next = params.clone();
    let eta = params.eta;
    let mut dtheta = vec![0.0; params.theta.len()];
    for j in 0..ansatz.n_params {
        let old = next.theta[j];
        next.theta[j] = old - eta * grad.theta[j];
        dtheta[j] = (next.theta[j] - old).abs();
    }
    let updated = &mut next.supernets[head - 1];
    for (w, g) in updated.weights.iter_mut().zip(&grad.weights) {
        *w -= eta * g;
    }
    for (b, g) in updated.bias.iter_mut().zip(&grad.bias) {
        *b -= eta * g;
    }
    let mean_dtheta = if ansatz.n_params == 0 {
        0.0
    } else {
        dtheta[..ansatz.n_params].iter().sum::<f64>() / ansatz.n_params as f64
    };
    Ok((
        next,
        EpochRecord {
            loss: grad.loss,
            head,
            mean_dtheta,
            dtheta,
        },
    ))
}

fn derive_rng<R: Rng + ?Sized>(rng: &mut R) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(rng.random())
}

/// Pretrains the shared pool: each epoch samples a genome (uniform length, then uniform
/// genes) and runs [`train_epoch`] on the training split. Initialisation, genome
/// sampling, batching and head selection draw from separate streams split off `rng`, so
/// runs that differ only in the head configuration see the same genome sequence.
pub fn pretrain<R: Rng + ?Sized>(
    task: &TaskSpec,
    train: &[Sample],
    noise: &NoiseSpec,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(SharedParameters, TrainLog)> {
    let space = task.search_space()?;
    let mut init_rng = derive_rng(rng);
    let mut genome_rng = derive_rng(rng);
    let mut batch_rng = derive_rng(rng);
    let mut head_rng = derive_rng(rng);
    let mut params = SharedParameters::init(
        task.qubits,
        task.l_max,
        task.classes,
        task.supernets,
        cfg,
        &mut init_rng,
    )?;
    let encoded = encode_split(train, task)?;
    check_batch(&encoded, task.classes)?;
    let mut log = TrainLog::default();
    for _ in 0..cfg.epochs {
        let genome = space.random_genome(&mut genome_rng);
        let ansatz = Ansatz::new(&genome, &space)?;
        let batch: Vec<EncodedSample> = if cfg.batch_size == 0 || cfg.batch_size >= encoded.len() {
            encoded.clone()
        } else {
            rand::seq::index::sample(&mut batch_rng, encoded.len(), cfg.batch_size)
                .into_iter()
                .map(|i| encoded[i].clone())
                .collect()
        };
        let (next, record) = train_epoch(&ansatz, &params, &batch, noise, &mut head_rng)?;
        params = next;
        log.records.push(record);
    }
    Ok((params, log))
}

/// Loss and accuracy of one head on a split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: f64,
}

fn metrics_for(head: &Supernet, zs: &[Vec<f64>], samples: &[EncodedSample]) -> Metrics {
    let out = head_forward(head, zs, samples);
    let correct = out
        .logits
        .iter()
        .zip(samples)
        .filter(|(l, s)| argmax(l) == s.label)
        .count();
    Metrics {
        loss: out.loss,
        accuracy: correct as f64 / samples.len() as f64,
    }
}

pub fn evaluate(
    ansatz: &Ansatz,
    params: &SharedParameters,
    head: usize,
    samples: &[EncodedSample],
    noise: &NoiseSpec,
) -> Result<Metrics> {
    ansatz.check(params)?;
    let supernet = params.head(head)?;
    check_batch(samples, params.classes())?;
    let zs = ansatz.expectations(&params.theta, samples, noise)?;
    Ok(metrics_for(supernet, &zs, samples))
}

/// Outcome of fine-tuning one architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct FineTuned {
    /// Tuned angles for the genome's slots.
    pub theta: Vec<f64>,
    /// Private copy of the whole parameter set after tuning.
    pub params: SharedParameters,
    /// Lowest validation-loss head, 1-based.
    pub head: usize,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// `steps` gradient steps on a private copy of `params` with pure exploitation
/// (`epsilon = 0`), then picks the lowest validation-loss head.
pub fn fine_tune<R: Rng + ?Sized>(
    ansatz: &Ansatz,
    params: &SharedParameters,
    train: &[EncodedSample],
    validation: &[EncodedSample],
    noise: &NoiseSpec,
    steps: usize,
    rng: &mut R,
) -> Result<FineTuned> {
    ansatz.check(params)?;
    check_batch(validation, params.classes())?;
    let mut local = params.clone();
    local.epsilon = 0.0;
    for _ in 0..steps {
        local = train_epoch(ansatz, &local, train, noise, rng)?.0;
    }
    let zs = ansatz.expectations(&local.theta, validation, noise)?;
    let per_head: Vec<Metrics> = local
        .supernets
        .iter()
        .map(|h| metrics_for(h, &zs, validation))
        .collect();
    let losses: Vec<f64> = per_head.iter().map(|m| m.loss).collect();
    let head = best_head(&losses);
    let best = per_head[head - 1];
    local.epsilon = params.epsilon;
    Ok(FineTuned {
        theta: local.theta[..ansatz.n_params].to_vec(),
        params: local,
        head,
        val_loss: best.loss,
        val_accuracy: best.accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::GateKind;
    use std::f64::consts::{LN_2, PI};

    fn one_qubit_params(theta: f64, w: [f64; 2], b: [f64; 2], eta: f64) -> SharedParameters {
        SharedParameters {
            qubits: 1,
            l_max: 1,
            theta: vec![theta],
            supernets: vec![Supernet {
                id: 1,
                weights: w.to_vec(),
                bias: b.to_vec(),
            }],
            epsilon: 0.0,
            eta,
        }
    }

    fn one_qubit_ansatz() -> Ansatz {
        Ansatz {
            qubits: 1,
            gates: vec![GateOp::ry(0, 0)],
            n_params: 1,
        }
    }

    fn sample(label: usize) -> EncodedSample {
        EncodedSample {
            encoding: vec![],
            label,
        }
    }

    #[test]
    fn cross_entropy_basics() {
        let (l, g) = cross_entropy(&[0.0, 0.0], 1);
        assert!((l - LN_2).abs() < 1e-15);
        assert_eq!(g, vec![0.5, -0.5]);
        let (l, _) = cross_entropy(&[1000.0, -1000.0], 0);
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn uniform_logits_give_ln2() {
        let p = one_qubit_params(0.3, [0.0, 0.0], [0.0, 0.0], 0.1);
        let batch = vec![sample(0), sample(1), sample(1)];
        let out = forward(&one_qubit_ansatz(), &p, 1, &batch, &NoiseSpec::depolarizing(0.1)).unwrap();
        assert!((out.loss - LN_2).abs() < 1e-12);
    }

    #[test]
    fn saturated_logits_give_zero_loss() {
        let p = one_qubit_params(0.3, [0.0, 0.0], [10.0, -10.0], 0.1);
        let out = forward(&one_qubit_ansatz(), &p, 1, &vec![sample(0); 4], &NoiseSpec::None).unwrap();
        assert!(out.loss < 1e-8);
    }

    #[test]
    fn scalar_hand_calculation() {
        // z = cos(theta); logits = (w0 z + b0, w1 z + b1); label 1.
        let theta: f64 = 0.7;
        let (w, b) = ([1.3, -0.4], [0.2, -0.1]);
        let z = theta.cos();
        let l0 = w[0] * z + b[0];
        let l1 = w[1] * z + b[1];
        let expected = -(l1.exp() / (l0.exp() + l1.exp())).ln();
        let p = one_qubit_params(theta, w, b, 0.1);
        let out = forward(&one_qubit_ansatz(), &p, 1, &[sample(1)], &NoiseSpec::None).unwrap();
        assert!((out.loss - expected).abs() < 1e-8);
        assert!((out.logits[0][0] - l0).abs() < 1e-12);
    }

    #[test]
    fn forward_errors() {
        let p = one_qubit_params(0.0, [0.0; 2], [0.0; 2], 0.1);
        assert!(forward(&one_qubit_ansatz(), &p, 2, &[sample(0)], &NoiseSpec::None).is_err());
        assert!(forward(&one_qubit_ansatz(), &p, 1, &[], &NoiseSpec::None).is_err());
        assert!(forward(&one_qubit_ansatz(), &p, 1, &[sample(5)], &NoiseSpec::None).is_err());
    }

    #[test]
    fn zero_rate_leaves_parameters_unchanged() {
        let p = one_qubit_params(0.4, [1.0, -1.0], [0.0, 0.0], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (next, rec) = train_epoch(&one_qubit_ansatz(), &p, &[sample(0)], &NoiseSpec::None, &mut rng).unwrap();
        assert_eq!(next, p);
        assert_eq!(rec.mean_dtheta, 0.0);
    }

    #[test]
    fn descent_direction_and_monotone_loss() {
        // label 0 with w = (1, -1): loss decreases as z = cos(theta) grows, so theta
        // must shrink towards 0 from theta = 1.
        let mut p = one_qubit_params(1.0, [1.0, -1.0], [0.0, 0.0], 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ansatz = one_qubit_ansatz();
        let mut last = f64::INFINITY;
        for _ in 0..3 {
            let (next, rec) = train_epoch(&ansatz, &p, &[sample(0)], &NoiseSpec::None, &mut rng).unwrap();
            assert!(next.theta[0] < p.theta[0]);
            assert!(rec.loss <= last);
            last = rec.loss;
            p = next;
        }
        let final_loss = forward(&ansatz, &p, 1, &[sample(0)], &NoiseSpec::None).unwrap().loss;
        assert!(final_loss <= last);
    }

    fn three_head_params() -> SharedParameters {
        let mut p = one_qubit_params(0.2, [0.0, 0.0], [0.0, 0.0], 0.1);
        p.supernets = vec![
            Supernet { id: 1, weights: vec![0.3, -0.3], bias: vec![0.0, 0.0] },
            Supernet { id: 2, weights: vec![0.3, -0.3], bias: vec![3.0, -3.0] },
            Supernet { id: 3, weights: vec![0.3, -0.3], bias: vec![-1.0, 1.0] },
        ];
        p
    }

    #[test]
    fn greedy_selection_picks_the_best_head() {
        let p = three_head_params();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert_eq!(select_head(&one_qubit_ansatz(), &p, &[sample(0)], &NoiseSpec::None, &mut rng).unwrap(), 2);
        }
    }

    #[test]
    fn ties_go_to_the_smallest_index() {
        assert_eq!(best_head(&[1.0, 0.5, 0.5]), 2);
        assert_eq!(best_head(&[0.5, 0.5]), 1);
    }

    #[test]
    fn epoch_updates_only_the_selected_head() {
        let mut p = three_head_params();
        p.epsilon = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (next, rec) = train_epoch(&one_qubit_ansatz(), &p, &[sample(0), sample(1)], &NoiseSpec::None, &mut rng).unwrap();
            for (a, b) in p.supernets.iter().zip(&next.supernets) {
                if a.id != rec.head {
                    assert_eq!(a, b);
                }
            }
            assert_ne!(p.supernets[rec.head - 1], next.supernets[rec.head - 1]);
            p = next;
        }
    }

    #[test]
    fn fine_tune_isolation_and_zero_steps() {
        let p = three_head_params();
        let ansatz = one_qubit_ansatz();
        let train = [sample(0), sample(1)];
        let val = [sample(0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let snapshot = p.clone();
        let ft0 = fine_tune(&ansatz, &p, &train, &val, &NoiseSpec::None, 0, &mut rng).unwrap();
        assert_eq!(ft0.theta, p.theta);
        assert_eq!(ft0.head, 2);
        let direct = evaluate(&ansatz, &p, 2, &val, &NoiseSpec::None).unwrap();
        assert_eq!(ft0.val_loss, direct.loss);
        let ft = fine_tune(&ansatz, &p, &train, &val, &NoiseSpec::None, 5, &mut rng).unwrap();
        assert_eq!(p, snapshot);
        assert_ne!(ft.theta, p.theta);
    }

    #[test]
    fn accuracy_hand_count() {
        // Four samples, z = cos(encoding angle) on one qubit, head w = (1, -1):
        // predicted class 0 iff z > 0.
        let ansatz = Ansatz { qubits: 1, gates: vec![GateOp::rz(0, 0)], n_params: 1 };
        let p = one_qubit_params(0.0, [1.0, -1.0], [0.0, 0.0], 0.1);
        let mk = |angle: f64, label| EncodedSample {
            encoding: vec![EncodingGate { kind: GateKind::Ry, qubit: 0, angle }],
            label,
        };
        // z: +0.95, -0.99, +0.54, -0.42 ; predictions 0,1,0,1 ; labels 0,1,1,1 -> 3/4
        let samples = [mk(0.3, 0), mk(3.0, 1), mk(1.0, 1), mk(2.0, 1)];
        let m = evaluate(&ansatz, &p, 1, &samples, &NoiseSpec::None).unwrap();
        assert_eq!(m.accuracy, 0.75);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ft = fine_tune(&ansatz, &p, &samples, &samples, &NoiseSpec::None, 0, &mut rng).unwrap();
        assert_eq!(ft.val_accuracy, 0.75);
    }

    #[test]
    fn pretrain_zero_epochs_and_determinism() {
        let task = TaskSpec::binary();
        let data = task.dataset(5).unwrap();
        let mut cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (p0, log0) = pretrain(&task, &data.train, &NoiseSpec::None, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(log0.records.is_empty());
        let mut init_rng = derive_rng(&mut ChaCha8Rng::seed_from_u64(2));
        let fresh = SharedParameters::init(3, 10, 2, 5, &cfg, &mut init_rng).unwrap();
        assert_eq!(p0, fresh);
        assert_eq!(p0.theta.len(), 30);
        assert!(p0.theta.iter().all(|t| t.abs() <= PI));

        cfg.epochs = 3;
        cfg.batch_size = 10;
        let run = || pretrain(&task, &data.train, &NoiseSpec::depolarizing(0.01), &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let (a, la) = run();
        let (b, lb) = run();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(la.to_csv().lines().count(), 4);
        assert!(la.records.iter().all(|r| r.mean_dtheta >= 0.0));
    }
}
