//! Layered search space: each layer is one rotation per qubit (RX, RY or RZ) followed by
//! any subset of the `Q(Q-1)/2` CNOT pairs. A layer is a mixed-radix integer
//!
//! ```text
//! gene = rot_index * 2^cnot_pairs + cnot_mask
//! ```
//!
//! where `rot_index` holds one base-3 digit per qubit (qubit 0 least significant,
//! 0 = RX, 1 = RY, 2 = RZ) and bit `k` of `cnot_mask` selects the `k`-th pair in
//! lexicographic order `(0,1), (0,2), ..., (Q-2,Q-1)`, lower index as control.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::qsim::{GateKind, GateOp, MAX_QUBITS};

const ROTATIONS: [GateKind; 3] = [GateKind::Rx, GateKind::Ry, GateKind::Rz];

/// Search-space definition for a `Q`-qubit ansatz of `l_min..=l_max` layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    qubits: usize,
    l_min: usize,
    l_max: usize,
}

impl SearchSpace {
    pub fn new(qubits: usize, l_min: usize, l_max: usize) -> Result<Self> {
        if !(2..=MAX_QUBITS).contains(&qubits) {
            return arg_err(format!("search space needs 2..={MAX_QUBITS} qubits, got {qubits}"));
        }
        if l_min < 1 || l_min > l_max {
            return arg_err(format!("depth bounds must satisfy 1 <= l_min <= l_max, got [{l_min}, {l_max}]"));
        }
        Ok(Self { qubits, l_min, l_max })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn l_min(&self) -> usize {
        self.l_min
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// `3^Q`.
    pub fn rot_combos(&self) -> u64 {
        3u64.pow(self.qubits as u32)
    }

    /// `Q(Q-1)/2`.
    pub fn cnot_pairs(&self) -> usize {
        self.qubits * (self.qubits - 1) / 2
    }

    /// Number of distinct layers `M = 3^Q * 2^(Q(Q-1)/2)`.
    pub fn layer_count(&self) -> u64 {
        self.rot_combos() << self.cnot_pairs()
    }

    /// CNOT pairs in mask-bit order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let q = self.qubits;
        (0..q)
            .flat_map(|i| (i + 1..q).map(move |j| (i, j)))
            .collect()
    }

    /// Trainable angles used by a genome of `layers` layers.
    pub fn param_count(&self, layers: usize) -> usize {
        self.qubits * layers
    }

    pub fn random_gene<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.random_range(0..self.layer_count())
    }

    /// Uniform length in the depth bounds, then uniform genes.
    pub fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        let len = rng.random_range(self.l_min..=self.l_max);
        Genome {
            genes: (0..len).map(|_| self.random_gene(rng)).collect(),
        }
    }

    fn check_gene(&self, gene: u64) -> Result<()> {
        if gene >= self.layer_count() {
            return Err(Error::GeneRange {
                gene,
                size: self.layer_count(),
            });
        }
        Ok(())
    }
}

/// Decoded content of one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub rotations: Vec<GateKind>,
    pub cnots: Vec<(usize, usize)>,
}

pub fn decode_layer(gene: u64, space: &SearchSpace) -> Result<Layer> {
    space.check_gene(gene)?;
    let pairs = space.cnot_pairs();
    let mask = gene & ((1u64 << pairs) - 1);
    let mut rot = gene >> pairs;
    let rotations = (0..space.qubits)
        .map(|_| {
            let digit = (rot % 3) as usize;
            rot /= 3;
            ROTATIONS[digit]
        })
        .collect();
    let cnots = space
        .pairs()
        .into_iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, p)| p)
        .collect();
    Ok(Layer { rotations, cnots })
}

pub fn encode_layer(layer: &Layer, space: &SearchSpace) -> Result<u64> {
    if layer.rotations.len() != space.qubits {
        return arg_err(format!(
            "layer has {} rotations for {} qubits",
            layer.rotations.len(),
            space.qubits
        ));
    }
    let mut rot = 0u64;
    for kind in layer.rotations.iter().rev() {
        let digit = ROTATIONS
            .iter()
            .position(|k| k == kind)
            .ok_or_else(|| Error::Argument("CNOT in rotation slot".into()))?;
        rot = rot * 3 + digit as u64;
    }
    let pairs = space.pairs();
    let mut mask = 0u64;
    for pair in &layer.cnots {
        let k = pairs
            .iter()
            .position(|p| p == pair)
            .ok_or_else(|| Error::Argument(format!("CNOT pair {pair:?} not in the search space")))?;
        mask |= 1 << k;
    }
    Ok((rot << space.cnot_pairs()) | mask)
}

/// Variable-length architecture: one gene per layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Genome {
    pub genes: Vec<u64>,
}

impl Genome {
    /// Checks depth bounds and gene ranges.
    pub fn new(genes: Vec<u64>, space: &SearchSpace) -> Result<Self> {
        let genome = Genome { genes };
        genome.validate(space)?;
        Ok(genome)
    }

    pub fn validate(&self, space: &SearchSpace) -> Result<()> {
        let len = self.genes.len();
        if len < space.l_min || len > space.l_max {
            return arg_err(format!(
                "genome has {len} layers, outside [{}, {}]",
                space.l_min, space.l_max
            ));
        }
        self.genes.iter().try_for_each(|&g| space.check_gene(g))
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Parses the archive text form, comma-separated integers. Errors name the
    /// 1-based token position.
    pub fn parse(text: &str, space: &SearchSpace) -> Result<Self> {
        let trimmed = text.trim();
        let mut genes = Vec::new();
        for (i, token) in trimmed.split(',').enumerate() {
            let token = token.trim();
            let gene: u64 = token.parse().map_err(|_| {
                Error::Argument(format!("genome token {} ({token:?}) is not a non-negative integer", i + 1))
            })?;
            if gene >= space.layer_count() {
                return arg_err(format!(
                    "genome token {} ({gene}) out of range, the layer space has {} entries",
                    i + 1,
                    space.layer_count()
                ));
            }
            genes.push(gene);
        }
        Genome::new(genes, space)
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.genes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Lowers a genome to gates. Layer `l` uses parameter slots `Q*l .. Q*(l+1)` in qubit
/// order; rotations come before the layer's CNOTs.
pub fn genome_to_circuit(genome: &Genome, space: &SearchSpace) -> Result<Vec<GateOp>> {
    let q = space.qubits;
    let mut gates = Vec::with_capacity(genome.len() * (q + space.cnot_pairs()));
    for (l, &gene) in genome.genes.iter().enumerate() {
        let layer = decode_layer(gene, space)?;
        for (qubit, kind) in layer.rotations.iter().enumerate() {
            gates.push(GateOp::rotation(*kind, qubit, l * q + qubit));
        }
        gates.extend(layer.cnots.iter().map(|&(c, t)| GateOp::cnot(c, t)));
    }
    Ok(gates)
}

/// Hardware cost of an architecture.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostMetrics {
    pub n_cnot: usize,
    /// Ansatz layer count; the encoding layer is not included.
    pub n_depth: usize,
    pub cost: f64,
}

/// `alpha * N_CNOT + beta * N_depth`.
pub fn cost_of(genome: &Genome, space: &SearchSpace, alpha: f64, beta: f64) -> CostMetrics {
    let mask = (1u64 << space.cnot_pairs()) - 1;
    let n_cnot = genome
        .genes
        .iter()
        .map(|g| (g & mask).count_ones() as usize)
        .sum();
    let n_depth = genome.len();
    CostMetrics {
        n_cnot,
        n_depth,
        cost: alpha * n_cnot as f64 + beta * n_depth as f64,
    }
}
