//! The four pipeline stages and their artifacts.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use naqas::arch::{cost_of, Genome};
use naqas::evo::{evaluation_rng, evolve, stats_csv, SearchOutcome, TaskEvaluator};
use naqas::qsim::NoiseSpec;
use naqas::tasks::Dataset;
use naqas::train::{encode_split, evaluate as score, fine_tune, pretrain as run_pretrain, Ansatz, SharedParameters, TrainLog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::config::RunConfig;

pub const CHECKPOINT: &str = "checkpoint.txt";
pub const TRAIN_LOG: &str = "trainlog.csv";
pub const DTHETA_LOG: &str = "dtheta.csv";
pub const ARCHIVE: &str = "archive.csv";
pub const STATS: &str = "stats.csv";
pub const POPULATION: &str = "population.csv";
pub const EVALUATED: &str = "evaluated.csv";
pub const RUN_CONFIG: &str = "run-config.toml";

/// Independent per-stage seeds derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub run: u64,
    pub dataset: u64,
    pub pretrain: u64,
    pub search: u64,
}

impl Seeds {
    pub fn from_run(run: u64) -> Self {
        let stage = |stream: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(run);
            rng.set_stream(stream);
            rng.random()
        };
        Self {
            run,
            dataset: run,
            pretrain: stage(1),
            search: stage(2),
        }
    }
}

/// Provenance record written next to every stage's artifacts. Timestamps are the only
/// fields that differ between otherwise identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub parallel: bool,
    pub workers: usize,
    pub seeds: Seeds,
    pub config: RunConfig,
    pub inputs: Vec<PathBuf>,
    pub artifacts: Vec<PathBuf>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

struct Stage<'a> {
    command: &'static str,
    cfg: &'a RunConfig,
    out: &'a Path,
    started: u128,
    inputs: Vec<PathBuf>,
    artifacts: Vec<PathBuf>,
}

impl<'a> Stage<'a> {
    fn begin(command: &'static str, cfg: &'a RunConfig, out: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Self {
            command,
            cfg,
            out,
            started: now_ms(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(path.clone());
        Ok(path)
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.write(RUN_CONFIG, &self.cfg.to_toml_string())?;
        let manifest = RunManifest {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parallel: naqas::par::PARALLEL,
            workers: self.cfg.workers,
            seeds: Seeds::from_run(self.cfg.seed),
            config: self.cfg.clone(),
            inputs: self.inputs.clone(),
            artifacts: self.artifacts.clone(),
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
        };
        let path = self.out.join(format!("manifest-{}.json", self.command));
        let json = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Runs `f` on a pool of `workers` threads (sequentially without the `parallel` feature).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(f())
    }
}

pub fn dataset(cfg: &RunConfig) -> Result<Dataset> {
    Ok(cfg.task_spec().dataset(Seeds::from_run(cfg.seed).dataset)?)
}

pub struct PretrainOutput {
    pub params: SharedParameters,
    pub log: TrainLog,
    pub checkpoint: PathBuf,
}

/// Pretrains the shared parameters and writes the checkpoint and training logs.
pub fn pretrain(cfg: &RunConfig, out: &Path) -> Result<PretrainOutput> {
    let mut stage = Stage::begin("pretrain", cfg, out)?;
    let task = cfg.task_spec();
    let data = dataset(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(Seeds::from_run(cfg.seed).pretrain);
    let (params, log) = with_workers(cfg.workers, || run_pretrain(&task, &data.train, &cfg.noise, &cfg.train, &mut rng))??;
    let checkpoint = stage.write(CHECKPOINT, &checkpoint::to_text(&params))?;
    stage.write(TRAIN_LOG, &log.to_csv())?;
    stage.write(DTHETA_LOG, &log.dtheta_csv())?;
    stage.finish()?;
    Ok(PretrainOutput { params, log, checkpoint })
}

/// Loads a checkpoint and checks that it fits the configured task.
pub fn load_checkpoint(cfg: &RunConfig, path: &Path) -> Result<SharedParameters> {
    let params = checkpoint::load(path)?;
    let task = cfg.task_spec();
    let want = (task.qubits, task.supernets, task.l_max, task.classes);
    let have = (params.qubits, params.head_count(), params.l_max, params.classes());
    if want != have {
        bail!(
            "checkpoint {} has (qubits, supernets, l_max, classes) = {:?} but the config needs {:?}",
            path.display(),
            have,
            want
        );
    }
    Ok(params)
}

fn population_csv(outcome: &SearchOutcome) -> String {
    let mut out = String::from("genome,E,C,rank,crowding\n");
    for ind in &outcome.population {
        out.push_str(&format!(
            "\"{}\",{},{},{},{}\n",
            ind.genome, ind.eval.fitness.e, ind.eval.fitness.c, ind.rank, ind.crowding
        ));
    }
    out
}

fn evaluated_csv(outcome: &SearchOutcome) -> String {
    let mut out = String::from("genome,E,C,n_cnot,n_depth,val_accuracy\n");
    for e in &outcome.evaluated {
        out.push_str(&format!(
            "\"{}\",{},{},{},{},{}\n",
            e.genome, e.eval.fitness.e, e.eval.fitness.c, e.eval.cost.n_cnot, e.eval.cost.n_depth, e.eval.val_accuracy
        ));
    }
    out
}

/// Runs the evolutionary search from a checkpoint and writes the archive and statistics.
pub fn search(cfg: &RunConfig, checkpoint_path: &Path, out: &Path) -> Result<SearchOutcome> {
    let mut stage = Stage::begin("search", cfg, out)?;
    stage.inputs.push(checkpoint_path.to_path_buf());
    let params = load_checkpoint(cfg, checkpoint_path)?;
    let task = cfg.task_spec();
    let data = dataset(cfg)?;
    let evaluator = TaskEvaluator::new(
        &task,
        params,
        &data.train,
        &data.validation,
        cfg.noise,
        cfg.train.fine_tune_steps,
        cfg.cost,
    )?;
    let space = task.search_space()?;
    let seed = Seeds::from_run(cfg.seed).search;
    let outcome = with_workers(cfg.workers, || evolve(&evaluator, space, &cfg.evo, seed))??;
    stage.write(ARCHIVE, &outcome.archive.to_csv())?;
    stage.write(STATS, &stats_csv(&outcome.stats))?;
    stage.write(POPULATION, &population_csv(&outcome))?;
    stage.write(EVALUATED, &evaluated_csv(&outcome))?;
    stage.finish()?;
    Ok(outcome)
}

/// Scores of one architecture under one noise setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub noise: NoiseSpec,
    /// Validation loss after fine-tuning: the search objective.
    pub e: f64,
    pub val_accuracy: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub genome: String,
    pub qubits: usize,
    pub n_cnot: usize,
    pub n_depth: usize,
    pub cost: f64,
    pub noisy: Scores,
    pub noiseless: Scores,
}

fn scores(
    cfg: &RunConfig,
    params: &SharedParameters,
    genome: &Genome,
    data: &Dataset,
    noise: &NoiseSpec,
) -> Result<Scores> {
    let task = cfg.task_spec();
    let space = task.search_space()?;
    let ansatz = Ansatz::new(genome, &space)?;
    let train = encode_split(&data.train, &task)?;
    let validation = encode_split(&data.validation, &task)?;
    let test = encode_split(&data.test, &task)?;
    // the stream the search would have used, so E matches the archive exactly
    let mut rng = evaluation_rng(Seeds::from_run(cfg.seed).search, genome);
    let tuned = fine_tune(&ansatz, params, &train, &validation, noise, cfg.train.fine_tune_steps, &mut rng)?;
    let metrics = score(&ansatz, &tuned.params, tuned.head, &test, noise)?;
    Ok(Scores {
        noise: *noise,
        e: tuned.val_loss,
        val_accuracy: tuned.val_accuracy,
        test_loss: metrics.loss,
        test_accuracy: metrics.accuracy,
        head: tuned.head,
    })
}

/// Fine-tunes one genome and scores it on the test split with and without noise.
pub fn evaluate(cfg: &RunConfig, checkpoint_path: &Path, genome_text: &str) -> Result<EvalRecord> {
    let params = load_checkpoint(cfg, checkpoint_path)?;
    let task = cfg.task_spec();
    let space = task.search_space()?;
    let genome = Genome::parse(genome_text, &space)?;
    let data = dataset(cfg)?;
    let metrics = cost_of(&genome, &space, cfg.cost.alpha, cfg.cost.beta);
    let (noisy, noiseless) = with_workers(cfg.workers, || -> Result<_> {
        Ok((
            scores(cfg, &params, &genome, &data, &cfg.noise)?,
            scores(cfg, &params, &genome, &data, &NoiseSpec::None)?,
        ))
    })??;
    Ok(EvalRecord {
        genome: genome.to_string(),
        qubits: task.qubits,
        n_cnot: metrics.n_cnot,
        n_depth: metrics.n_depth,
        cost: metrics.cost,
        noisy,
        noiseless,
    })
}

/// Everything a full pretrain-then-search run produced.
pub struct PipelineOutput {
    pub pretrain: PretrainOutput,
    pub search: SearchOutcome,
}

pub fn pipeline(cfg: &RunConfig, out: &Path) -> Result<PipelineOutput> {
    let pre = pretrain(cfg, out)?;
    let outcome = search(cfg, &pre.checkpoint, out)?;
    Ok(PipelineOutput { pretrain: pre, search: outcome })
}
