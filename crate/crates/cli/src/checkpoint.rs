//! Plain-text checkpoint of the shared parameters.
//!
//! ```text
//! naqas-checkpoint 1
//! qubits 3
//! supernets 5
//! l_max 10
//! classes 2
//! epsilon 0.1
//! eta 0.05
//! theta <qubits * l_max values>
//! weights 1 <classes * qubits values, row-major>
//! bias 1 <classes values>
//! ...
//! ```
//!
//! Floats use the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use naqas::train::{SharedParameters, Supernet};

const MAGIC: &str = "naqas-checkpoint";
const VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn to_text(params: &SharedParameters) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "qubits {}", params.qubits);
    let _ = writeln!(out, "supernets {}", params.head_count());
    let _ = writeln!(out, "l_max {}", params.l_max);
    let _ = writeln!(out, "classes {}", params.classes());
    let _ = writeln!(out, "epsilon {}", params.epsilon);
    let _ = writeln!(out, "eta {}", params.eta);
    let _ = writeln!(out, "theta {}", join(&params.theta));
    for head in &params.supernets {
        let _ = writeln!(out, "weights {} {}", head.id, join(&head.weights));
        let _ = writeln!(out, "bias {} {}", head.id, join(&head.bias));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line, which must start with `key`; returns the remaining fields.
    fn field(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.inner.next().ok_or_else(|| anyhow!("missing `{key}` line"))?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok((n + 1, parts.collect())),
            other => bail!("line {}: expected `{key}`, found `{}`", n + 1, other.unwrap_or("")),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let (n, fields) = self.field(key)?;
        match fields.as_slice() {
            [v] => v.parse().with_context(|| format!("line {n}: bad `{key}`")),
            _ => bail!("line {n}: `{key}` takes one value"),
        }
    }

    fn reals(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let (n, fields) = self.field(key)?;
        parse_reals(n, key, &fields, len)
    }

    fn head_reals(&mut self, key: &str, id: usize, len: usize) -> Result<Vec<f64>> {
        let (n, fields) = self.field(key)?;
        let (head, rest) = fields.split_first().ok_or_else(|| anyhow!("line {n}: `{key}` lacks a head index"))?;
        if head.parse::<usize>().ok() != Some(id) {
            bail!("line {n}: expected head {id}, found `{head}`");
        }
        parse_reals(n, key, rest, len)
    }
}

fn parse_reals(line: usize, key: &str, fields: &[&str], len: usize) -> Result<Vec<f64>> {
    if fields.len() != len {
        bail!("line {line}: `{key}` has {} values, expected {len}", fields.len());
    }
    fields
        .iter()
        .map(|f| f.parse::<f64>().with_context(|| format!("line {line}: bad number `{f}`")))
        .collect()
}

pub fn from_text(text: &str) -> Result<SharedParameters> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (_, header) = lines.field(MAGIC).context("not a checkpoint file")?;
    if header != [VERSION.to_string().as_str()] {
        bail!("unsupported checkpoint version {:?}", header);
    }
    let qubits = lines.count("qubits")?;
    let heads = lines.count("supernets")?;
    let l_max = lines.count("l_max")?;
    let classes = lines.count("classes")?;
    let epsilon = lines.reals("epsilon", 1)?[0];
    let eta = lines.reals("eta", 1)?[0];
    let theta = lines.reals("theta", qubits * l_max)?;
    let mut supernets = Vec::with_capacity(heads);
    for id in 1..=heads {
        supernets.push(Supernet {
            id,
            weights: lines.head_reals("weights", id, classes * qubits)?,
            bias: lines.head_reals("bias", id, classes)?,
        });
    }
    if let Some((n, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        bail!("line {}: unexpected trailing content `{extra}`", n + 1);
    }
    Ok(SharedParameters {
        qubits,
        l_max,
        theta,
        supernets,
        epsilon,
        eta,
    })
}

pub fn save(params: &SharedParameters, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(params)).with_context(|| format!("writing {}", path.display()))
}

pub fn load(path: &Path) -> Result<SharedParameters> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_text(&text).with_context(|| format!("in {}", path.display()))
}
