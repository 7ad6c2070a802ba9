//! Summary tables built from a finished run directory.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use naqas::tasks::TaskName;
use serde::{Deserialize, Serialize};

use crate::commands::{evaluate, EvalRecord, ARCHIVE, CHECKPOINT, RUN_CONFIG};
use crate::config::RunConfig;

pub const TOP_N: &str = "top_n.csv";
pub const BY_DEPTH: &str = "by_depth.csv";
pub const SUMMARY: &str = "summary.txt";

/// One archive CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRow {
    pub genome: String,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub n_cnot: usize,
    pub n_depth: usize,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthRow {
    pub depth: usize,
    pub count: usize,
    pub mean_val_accuracy: f64,
    pub max_val_accuracy: f64,
    pub min_e: f64,
}

pub struct Report {
    pub rows: Vec<ArchiveRow>,
    pub top: Vec<ArchiveRow>,
    pub by_depth: Vec<DepthRow>,
    /// Record of the lowest-E archive member, if any.
    pub best: Option<EvalRecord>,
    pub summary: String,
}

pub fn read_archive(path: &Path) -> Result<Vec<ArchiveRow>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<ArchiveRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// External reference points: (task, method, qubits, accuracy, two-qubit gates).
const REFERENCES: [(TaskName, &str, usize, f64, &str); 2] = [
    (TaskName::Binary, "QuantumNAS (reference)", 4, 0.96, "9 CU"),
    (TaskName::Iris, "Enhanced-QAS (reference)", 4, 0.97, "4 CZ"),
];

fn summary_table(task: TaskName, best: Option<&EvalRecord>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<28} {:>5} {:>9} {:>10} {:>13}", "Method", "Qubit", "Accuracy", "CNOT Count", "Circuit Depth");
    if let Some(b) = best {
        let _ = writeln!(
            out,
            "{:<28} {:>5} {:>9.3} {:>10} {:>13}",
            "this run (best E)", b.qubits, b.noisy.test_accuracy, b.n_cnot, b.n_depth
        );
    }
    for (t, method, qubits, acc, gates) in REFERENCES {
        if t == task {
            let _ = writeln!(out, "{method:<28} {qubits:>5} {acc:>9.3} {gates:>10} {:>13}", "-");
        }
    }
    out
}

fn by_depth(rows: &[ArchiveRow], l_min: usize, l_max: usize) -> Vec<DepthRow> {
    (l_min..=l_max)
        .filter_map(|depth| {
            let at: Vec<&ArchiveRow> = rows.iter().filter(|r| r.n_depth == depth).collect();
            (!at.is_empty()).then(|| DepthRow {
                depth,
                count: at.len(),
                mean_val_accuracy: at.iter().map(|r| r.val_accuracy).sum::<f64>() / at.len() as f64,
                max_val_accuracy: at.iter().map(|r| r.val_accuracy).fold(f64::NEG_INFINITY, f64::max),
                min_e: at.iter().map(|r| r.e).fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.serialize(row)?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

/// Builds the tables for `run_dir`, writes them there, and re-evaluates the
/// lowest-E archive member for the summary row.
pub fn report(run_dir: &Path, top_n: usize) -> Result<Report> {
    let expected = [RUN_CONFIG, CHECKPOINT, ARCHIVE];
    let missing: Vec<&str> = expected.iter().copied().filter(|f| !run_dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        let found: Vec<&str> = expected.iter().copied().filter(|f| !missing.contains(f)).collect();
        bail!(
            "run directory {} is incomplete: expected {:?}, found {:?}, missing {:?}",
            run_dir.display(),
            expected,
            found,
            missing
        );
    }
    let cfg = RunConfig::load(&run_dir.join(RUN_CONFIG))?;
    let rows = read_archive(&run_dir.join(ARCHIVE))?;
    let task = cfg.task_spec();

    let mut top = rows.clone();
    top.sort_by(|a, b| {
        b.val_accuracy
            .total_cmp(&a.val_accuracy)
            .then(a.e.total_cmp(&b.e))
            .then(a.c.total_cmp(&b.c))
    });
    top.truncate(top_n);
    let depth_rows = by_depth(&rows, task.l_min, task.l_max);

    let best_row = rows.iter().min_by(|a, b| a.e.total_cmp(&b.e).then(a.c.total_cmp(&b.c)));
    let best = match best_row {
        Some(row) => Some(evaluate(&cfg, &run_dir.join(CHECKPOINT), &row.genome)?),
        None => None,
    };
    let summary = summary_table(cfg.task, best.as_ref());

    let top_csv = {
        let ranked: Vec<(usize, &ArchiveRow)> = top.iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        let mut s = String::from("rank,genome,E,C,n_cnot,n_depth,val_accuracy\n");
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for (rank, r) in ranked {
            writer.serialize((rank, r))?;
        }
        s.push_str(&String::from_utf8(writer.into_inner()?)?);
        s
    };
    let write = |name: &str, body: &str| {
        let path = run_dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write(TOP_N, &top_csv)?;
    write(
        BY_DEPTH,
        &to_csv(&depth_rows, &["depth", "count", "mean_val_accuracy", "max_val_accuracy", "min_E"])?,
    )?;
    write(SUMMARY, &summary)?;
    Ok(Report {
        rows,
        top,
        by_depth: depth_rows,
        best,
        summary,
    })
}
