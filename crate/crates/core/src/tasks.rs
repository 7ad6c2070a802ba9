//! Benchmark tasks: seeded Gaussian-cluster binary classification on 3 qubits and
//! feature-augmented iris on 4 qubits.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arch::SearchSpace;
use crate::error::{arg_err, Error, Result};
use crate::qsim::{EncodingGate, GateKind};

/// Canonical 150-row iris table shipped with the crate.
pub const IRIS_CSV: &str = include_str!("../data/iris.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    Binary,
    Iris,
}

/// Static description of a task: register size, heads, depth bounds, encoding map.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: TaskName,
    pub qubits: usize,
    pub supernets: usize,
    pub l_min: usize,
    pub l_max: usize,
    pub classes: usize,
    /// Feature `i` is encoded as `encoding[i] = (qubit, rotation axis)`.
    pub encoding: Vec<(usize, GateKind)>,
    /// `(train, validation, test)` sizes.
    pub splits: (usize, usize, usize),
}

impl TaskSpec {
    pub fn binary() -> Self {
        Self {
            name: TaskName::Binary,
            qubits: 3,
            supernets: 5,
            l_min: 5,
            l_max: 10,
            classes: 2,
            encoding: (0..3).map(|q| (q, GateKind::Ry)).collect(),
            splits: (100, 100, 100),
        }
    }

    pub fn iris() -> Self {
        let mut encoding: Vec<_> = (0..4).map(|q| (q, GateKind::Ry)).collect();
        encoding.extend((0..3).map(|q| (q, GateKind::Rz)));
        Self {
            name: TaskName::Iris,
            qubits: 4,
            supernets: 5,
            l_min: 5,
            l_max: 10,
            classes: 3,
            encoding,
            splits: (40, 30, 30),
        }
    }

    pub fn for_name(name: TaskName) -> Self {
        match name {
            TaskName::Binary => Self::binary(),
            TaskName::Iris => Self::iris(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.encoding.len()
    }

    pub fn search_space(&self) -> Result<SearchSpace> {
        SearchSpace::new(self.qubits, self.l_min, self.l_max)
    }

    /// Builds this task's dataset from a seed.
    pub fn dataset(&self, seed: u64) -> Result<Dataset> {
        match self.name {
            TaskName::Binary => Ok(make_binary_dataset(seed)),
            TaskName::Iris => make_iris_dataset(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// A labelled dataset already divided into disjoint train/validation/test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_dim: usize,
    pub class_count: usize,
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }

    /// Comma-separated dump with a header, one row per sample plus its split name.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.feature_dim {
            let _ = write!(out, "x{},", i + 1);
        }
        out.push_str("label,split\n");
        for (name, split) in [
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
        ] {
            for s in split {
                for x in &s.features {
                    let _ = write!(out, "{x},");
                }
                let _ = writeln!(out, "{},{name}", s.label);
            }
        }
        out
    }
}

const BINARY_CENTER: f64 = 0.8;
const BINARY_SIGMA: f64 = 0.5;
const BINARY_PER_CLASS: usize = 150;

/// Two seeded Gaussian clusters in 3-D centred at `+-0.8 (1,1,1)` with `sigma = 0.5`,
/// 150 samples each, min-max scaled to `[0, pi]`, split 100/100/100 stratified.
pub fn make_binary_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, BINARY_SIGMA).expect("valid sigma");
    let mut samples = Vec::with_capacity(2 * BINARY_PER_CLASS);
    for (label, center) in [(0usize, BINARY_CENTER), (1, -BINARY_CENTER)] {
        for _ in 0..BINARY_PER_CLASS {
            let features = (0..3).map(|_| center + noise.sample(&mut rng)).collect();
            samples.push(Sample { features, label });
        }
    }
    samples.shuffle(&mut rng);
    min_max_scale(&mut samples, 0.0, PI);
    let spec = TaskSpec::binary();
    stratified_split(samples, 3, 2, spec.splits, &mut rng)
}

/// Parses the bundled iris format: a header row, then four numeric features and an
/// integer class label per line.
pub fn parse_iris_table(text: &str) -> Result<Vec<Sample>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Load(format!(
                "iris line {}: expected 5 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut features = Vec::with_capacity(4);
        for f in &fields[..4] {
            let v: f64 = f.parse().map_err(|_| {
                Error::Load(format!("iris line {}: bad number {f:?}", lineno + 1))
            })?;
            features.push(v);
        }
        let label: usize = fields[4]
            .parse()
            .ok()
            .filter(|l| *l < 3)
            .ok_or_else(|| Error::Load(format!("iris line {}: bad label {:?}", lineno + 1, fields[4])))?;
        rows.push(Sample { features, label });
    }
    if rows.is_empty() {
        return Err(Error::Load("iris table has no rows".into()));
    }
    Ok(rows)
}

pub const IRIS_SUBSAMPLE: usize = 100;

/// Stratified seeded subsample of 100 iris rows, augmented with the products of the
/// three adjacent raw-feature pairs, each column min-max scaled to `[0, pi]`, split
/// 40/30/30 stratified.
pub fn make_iris_dataset(seed: u64) -> Result<Dataset> {
    make_iris_dataset_from(IRIS_CSV, seed)
}

pub fn make_iris_dataset_from(table: &str, seed: u64) -> Result<Dataset> {
    let rows = parse_iris_table(table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<Sample>> = vec![Vec::new(); 3];
    for r in rows {
        by_class[r.label].push(r);
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::Load("iris table is missing a class".into()));
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let take = proportional_allocation(&sizes, IRIS_SUBSAMPLE);
    let mut samples = Vec::with_capacity(IRIS_SUBSAMPLE);
    for (mut class_rows, n) in by_class.into_iter().zip(take) {
        class_rows.shuffle(&mut rng);
        samples.extend(class_rows.into_iter().take(n));
    }
    samples.shuffle(&mut rng);
    for s in &mut samples {
        s.features = augment_adjacent_products(&s.features);
    }
    min_max_scale(&mut samples, 0.0, PI);
    let spec = TaskSpec::iris();
    Ok(stratified_split(samples, 7, 3, spec.splits, &mut rng))
}

/// Appends `x_i * x_{i+1}` for each adjacent pair.
pub fn augment_adjacent_products(raw: &[f64]) -> Vec<f64> {
    let mut out = raw.to_vec();
    out.extend(raw.windows(2).map(|w| w[0] * w[1]));
    out
}

/// Per-column min-max scaling to `[lo, hi]`. Constant columns map to `lo`.
pub fn min_max_scale(samples: &mut [Sample], lo: f64, hi: f64) {
    let Some(dim) = samples.first().map(|s| s.features.len()) else {
        return;
    };
    for j in 0..dim {
        let (mn, mx) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
            (a.min(s.features[j]), b.max(s.features[j]))
        });
        let range = mx - mn;
        for s in samples.iter_mut() {
            let v = if range > 0.0 {
                lo + (s.features[j] - mn) / range * (hi - lo)
            } else {
                lo
            };
            s.features[j] = v.clamp(lo, hi);
        }
    }
}

/// Largest-remainder split of `total` proportional to `sizes` (ties to lower index).
fn proportional_allocation(sizes: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = sizes.iter().sum();
    let mut alloc: Vec<usize> = sizes.iter().map(|s| s * total / sum).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // remainder numerators: s*total mod sum
    order.sort_by_key(|&i| std::cmp::Reverse(sizes[i] * total % sum));
    let mut missing = total - alloc.iter().sum::<usize>();
    for i in order {
        if missing == 0 {
            break;
        }
        alloc[i] += 1;
        missing -= 1;
    }
    alloc
}

fn stratified_split(
    samples: Vec<Sample>,
    feature_dim: usize,
    class_count: usize,
    (n_tr, n_va, n_te): (usize, usize, usize),
    rng: &mut ChaCha8Rng,
) -> Dataset {
    debug_assert_eq!(samples.len(), n_tr + n_va + n_te);
    let mut by_class: Vec<Vec<Sample>> = vec![Vec::new(); class_count];
    for s in samples {
        by_class[s.label].push(s);
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let tr = proportional_allocation(&sizes, n_tr);
    let rest: Vec<usize> = sizes.iter().zip(&tr).map(|(s, t)| s - t).collect();
    let va = proportional_allocation(&rest, n_va);
    let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (c, rows) in by_class.into_iter().enumerate() {
        let mut it = rows.into_iter();
        train.extend(it.by_ref().take(tr[c]));
        validation.extend(it.by_ref().take(va[c]));
        test.extend(it);
    }
    train.shuffle(rng);
    validation.shuffle(rng);
    test.shuffle(rng);
    Dataset {
        feature_dim,
        class_count,
        train,
        validation,
        test,
    }
}

/// `U_f` for one sample: feature `i` becomes a rotation about `spec.encoding[i]`.
pub fn encode_sample(features: &[f64], spec: &TaskSpec) -> Result<Vec<EncodingGate>> {
    if features.len() != spec.feature_dim() {
        return arg_err(format!(
            "sample has {} features, task {:?} expects {}",
            features.len(),
            spec.name,
            spec.feature_dim()
        ));
    }
    Ok(features
        .iter()
        .zip(&spec.encoding)
        .map(|(&angle, &(qubit, kind))| EncodingGate { kind, qubit, angle })
        .collect())
}
