//! Variable-depth NSGA-II over layer genomes.
//!
//! Both objectives are minimised: the task objective `E` (post-fine-tune validation
//! loss for the classification tasks) and the hardware cost `C = alpha * N_CNOT +
//! beta * N_depth`. Offspring come from binary tournaments, real-coded SBX on the
//! aligned gene prefix, per-gene polynomial mutation and one structural event
//! (insert, delete or replace a layer). Survivors are the best `N_pop` of parents
//! plus offspring by (rank, crowding); a global archive keeps every non-dominated
//! architecture seen so far.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arch::{cost_of, CostMetrics, Genome, SearchSpace};
use crate::error::{arg_err, Error, Result};
use crate::par;
use crate::qsim::NoiseSpec;
use crate::tasks::{Sample, TaskSpec};
use crate::train::{encode_split, fine_tune, Ansatz, EncodedSample, SharedParameters};

/// Objective pair `(E, C)`, both minimised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub e: f64,
    pub c: f64,
}

impl Fitness {
    pub fn new(e: f64, c: f64) -> Self {
        Self { e, c }
    }
}

/// Pareto dominance: no worse in both objectives and strictly better in one.
pub fn dominates(a: &Fitness, b: &Fitness) -> bool {
    a.e <= b.e && a.c <= b.c && (a.e < b.e || a.c < b.c)
}

/// What an evaluator reports for one genome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: Fitness,
    pub val_accuracy: f64,
    pub cost: CostMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub eval: Evaluation,
    /// 1-based front index, 0 before sorting.
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn new(genome: Genome, eval: Evaluation) -> Self {
        Self {
            genome,
            eval,
            rank: 0,
            crowding: 0.0,
        }
    }

    pub fn fitness(&self) -> &Fitness {
        &self.eval.fitness
    }
}

/// Deb's fast non-dominated sort. Tags every individual with its 1-based rank and
/// returns the fronts as index lists, best first.
pub fn fast_non_dominated_sort(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let fits: Vec<Fitness> = pop.iter().map(|i| i.eval.fitness).collect();
    let fronts = non_dominated_fronts(&fits);
    for (r, front) in fronts.iter().enumerate() {
        for &i in front {
            pop[i].rank = r + 1;
        }
    }
    fronts
}

/// Fronts of a bare fitness list.
pub fn non_dominated_fronts(fits: &[Fitness]) -> Vec<Vec<usize>> {
    let n = fits.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut current = Vec::new();
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if dominates(&fits[p], &fits[q]) {
                dominated_by_me[p].push(q);
            } else if dominates(&fits[q], &fits[p]) {
                domination_count[p] += 1;
            }
        }
        if domination_count[p] == 0 {
            current.push(p);
        }
    }
    let mut fronts = Vec::new();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance within one front. Boundary members get `+inf`; an objective
/// with zero range contributes nothing.
pub fn crowding_distance(pop: &mut [Individual], front: &[usize]) {
    for &i in front {
        pop[i].crowding = 0.0;
    }
    if front.len() <= 2 {
        for &i in front {
            pop[i].crowding = f64::INFINITY;
        }
        return;
    }
    let objectives: [fn(&Fitness) -> f64; 2] = [|f| f.e, |f| f.c];
    for obj in objectives {
        let mut order = front.to_vec();
        order.sort_by(|&a, &b| {
            obj(pop[a].fitness())
                .partial_cmp(&obj(pop[b].fitness()))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let first = order[0];
        let last = order[order.len() - 1];
        let lo = obj(pop[first].fitness());
        let hi = obj(pop[last].fitness());
        pop[first].crowding = f64::INFINITY;
        pop[last].crowding = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let gap = obj(pop[w[2]].fitness()) - obj(pop[w[0]].fitness());
            pop[w[1]].crowding += gap / range;
        }
    }
}

/// Crowded comparison: lower rank, then larger crowding, then lower index.
fn crowded_better(pop: &[Individual], a: usize, b: usize) -> bool {
    let (x, y) = (&pop[a], &pop[b]);
    match x.rank.cmp(&y.rank) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => match x.crowding.partial_cmp(&y.crowding) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Less) => false,
            _ => a < b,
        },
    }
}

/// Draws `k` distinct individuals and returns the index of the crowded-comparison winner.
pub fn tournament_select<R: Rng + ?Sized>(pop: &[Individual], k: usize, rng: &mut R) -> usize {
    assert!(k >= 1 && pop.len() >= k, "tournament of {k} from {}", pop.len());
    let mut best: Option<usize> = None;
    for i in index::sample(rng, pop.len(), k) {
        best = match best {
            Some(b) if !crowded_better(pop, i, b) => Some(b),
            _ => Some(i),
        };
    }
    best.expect("k >= 1")
}

/// Search hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvoConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub p_c: f64,
    /// Per-gene mutation probability; `None` means `1 / |genes|`.
    pub p_m: Option<f64>,
    pub p_add: f64,
    pub p_del: f64,
    pub p_rep: f64,
    pub tournament: usize,
    pub eta_c: f64,
    pub eta_m: f64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            pop_size: 40,
            generations: 30,
            p_c: 0.9,
            p_m: None,
            p_add: 0.1,
            p_del: 0.1,
            p_rep: 0.1,
            tournament: 2,
            eta_c: 15.0,
            eta_m: 20.0,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_c", Some(self.p_c)),
            ("p_m", self.p_m),
            ("p_add", Some(self.p_add)),
            ("p_del", Some(self.p_del)),
            ("p_rep", Some(self.p_rep)),
        ];
        for (name, p) in probs {
            if let Some(p) = p {
                if !(0.0..=1.0).contains(&p) {
                    return arg_err(format!("{name} = {p} outside [0, 1]"));
                }
            }
        }
        if self.pop_size == 0 || !self.pop_size.is_multiple_of(2) {
            return arg_err(format!("pop_size must be even and positive, got {}", self.pop_size));
        }
        if self.tournament < 2 || self.tournament > self.pop_size {
            return arg_err(format!(
                "tournament size must be in 2..=pop_size, got {}",
                self.tournament
            ));
        }
        if !(self.eta_c >= 0.0 && self.eta_m >= 0.0) {
            return arg_err("distribution indices must be non-negative");
        }
        Ok(())
    }
}

fn sbx_pair<R: Rng + ?Sized>(x1: f64, x2: f64, hi: f64, eta: f64, rng: &mut R) -> (f64, f64) {
    let lo = 0.0;
    if (x1 - x2).abs() <= 1e-14 {
        return (x1, x2);
    }
    let (y1, y2) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
    let u: f64 = rng.random();
    let spread = |beta: f64| {
        let alpha = 2.0 - beta.powf(-(eta + 1.0));
        if u <= 1.0 / alpha {
            (u * alpha).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
        }
    };
    let bq1 = spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
    let bq2 = spread(1.0 + 2.0 * (hi - y2) / (y2 - y1));
    let c1 = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(lo, hi);
    let c2 = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(lo, hi);
    if rng.random_bool(0.5) {
        (c2, c1)
    } else {
        (c1, c2)
    }
}

fn to_gene(x: f64, max_gene: u64) -> u64 {
    (x.round().max(0.0) as u64).min(max_gene)
}

/// Simulated binary crossover on the aligned prefix; the longer parent's tail passes
/// through unchanged, so children keep their parents' lengths.
pub fn sbx_crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    p_c: f64,
    eta_c: f64,
    space: &SearchSpace,
    rng: &mut R,
) -> (Genome, Genome) {
    let (mut c1, mut c2) = (a.clone(), b.clone());
    if rng.random::<f64>() >= p_c {
        return (c1, c2);
    }
    let max_gene = space.layer_count() - 1;
    let hi = max_gene as f64;
    for i in 0..a.len().min(b.len()) {
        let (x, y) = sbx_pair(a.genes[i] as f64, b.genes[i] as f64, hi, eta_c, rng);
        c1.genes[i] = to_gene(x, max_gene);
        c2.genes[i] = to_gene(y, max_gene);
    }
    (c1, c2)
}

fn polynomial_perturb<R: Rng + ?Sized>(y: f64, hi: f64, eta: f64, rng: &mut R) -> f64 {
    if hi <= 0.0 {
        return y;
    }
    let d1 = y / hi;
    let d2 = (hi - y) / hi;
    let r: f64 = rng.random();
    let pow = 1.0 / (eta + 1.0);
    let dq = if r < 0.5 {
        let v = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta + 1.0);
        v.powf(pow) - 1.0
    } else {
        let v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta + 1.0);
        1.0 - v.powf(pow)
    };
    (y + dq * hi).clamp(0.0, hi)
}

/// Polynomial mutation per gene, then at most one structural event: insert (refused at
/// `l_max`), else delete (only above `l_min`), else replace.
pub fn mutate<R: Rng + ?Sized>(
    genome: &Genome,
    cfg: &EvoConfig,
    space: &SearchSpace,
    rng: &mut R,
) -> Genome {
    let mut g = genome.clone();
    let max_gene = space.layer_count() - 1;
    let p_m = cfg.p_m.unwrap_or(1.0 / g.len().max(1) as f64);
    for gene in g.genes.iter_mut() {
        if rng.random::<f64>() < p_m {
            *gene = to_gene(polynomial_perturb(*gene as f64, max_gene as f64, cfg.eta_m, rng), max_gene);
        }
    }
    if rng.random::<f64>() < cfg.p_add {
        if g.len() < space.l_max() {
            let at = rng.random_range(0..=g.len());
            let layer = space.random_gene(rng);
            g.genes.insert(at, layer);
        }
    } else if rng.random::<f64>() < cfg.p_del && g.len() > space.l_min() {
        let at = rng.random_range(0..g.len());
        g.genes.remove(at);
    } else if rng.random::<f64>() < cfg.p_rep && !g.is_empty() {
        let at = rng.random_range(0..g.len());
        g.genes[at] = space.random_gene(rng);
    }
    g
}

/// Scores genomes. Implementations must be deterministic given the genome and the
/// stream they are handed.
pub trait Evaluator: Sync {
    fn evaluate(&self, genome: &Genome, rng: &mut ChaCha8Rng) -> Result<Evaluation>;
}

impl<F> Evaluator for F
where
    F: Fn(&Genome) -> Result<Evaluation> + Sync,
{
    fn evaluate(&self, genome: &Genome, _rng: &mut ChaCha8Rng) -> Result<Evaluation> {
        self(genome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub genome: Genome,
    pub eval: Evaluation,
}

/// Global set of mutually non-dominated architectures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the entry unless a member dominates it or has the same genome; evicts
    /// members it dominates. Returns whether it was added.
    pub fn insert(&mut self, entry: ArchiveEntry) -> bool {
        let f = entry.eval.fitness;
        if self
            .entries
            .iter()
            .any(|e| e.genome == entry.genome || dominates(&e.eval.fitness, &f))
        {
            return false;
        }
        self.entries.retain(|e| !dominates(&f, &e.eval.fitness));
        self.entries.push(entry);
        self.entries.sort_by(|a, b| {
            a.eval
                .fitness
                .c
                .total_cmp(&b.eval.fitness.c)
                .then(a.eval.fitness.e.total_cmp(&b.eval.fitness.e))
                .then(a.genome.cmp(&b.genome))
        });
        true
    }

    /// Entries ordered by cost, then objective, then genome.
    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_mutually_non_dominated(&self) -> bool {
        self.entries.iter().all(|a| {
            self.entries
                .iter()
                .all(|b| !dominates(&a.eval.fitness, &b.eval.fitness))
        })
    }

    /// Lowest-`E` member, ties to lower cost.
    pub fn best_e(&self) -> Option<&ArchiveEntry> {
        self.entries.iter().min_by(|a, b| {
            a.eval
                .fitness
                .e
                .total_cmp(&b.eval.fitness.e)
                .then(a.eval.fitness.c.total_cmp(&b.eval.fitness.c))
        })
    }

    pub fn hypervolume(&self, reference: Fitness) -> f64 {
        hypervolume(
            &self.entries.iter().map(|e| e.eval.fitness).collect::<Vec<_>>(),
            reference,
        )
    }

    /// `genome,E,C,n_cnot,n_depth,val_accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("genome,E,C,n_cnot,n_depth,val_accuracy\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "\"{}\",{},{},{},{},{}",
                e.genome, e.eval.fitness.e, e.eval.fitness.c, e.eval.cost.n_cnot, e.eval.cost.n_depth, e.eval.val_accuracy
            );
        }
        out
    }
}

/// Area dominated by `points` and bounded by `reference` (minimisation).
pub fn hypervolume(points: &[Fitness], reference: Fitness) -> f64 {
    let mut pts: Vec<Fitness> = points
        .iter()
        .copied()
        .filter(|p| p.e < reference.e && p.c < reference.c)
        .collect();
    pts.sort_by(|a, b| a.e.total_cmp(&b.e).then(a.c.total_cmp(&b.c)));
    let mut area = 0.0;
    let mut ceiling = reference.c;
    for p in pts {
        if p.c < ceiling {
            area += (reference.e - p.e) * (ceiling - p.c);
            ceiling = p.c;
        }
    }
    area
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_e: f64,
    pub mean_e: f64,
    pub archive_size: usize,
}

pub fn stats_csv(stats: &[GenerationStats]) -> String {
    let mut out = String::from("generation,best_e,mean_e,archive_size\n");
    for s in stats {
        let _ = writeln!(out, "{},{},{},{}", s.generation, s.best_e, s.mean_e, s.archive_size);
    }
    out
}

/// Everything a finished search produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub archive: ParetoArchive,
    pub stats: Vec<GenerationStats>,
    /// Every distinct genome evaluated, in genome order.
    pub evaluated: Vec<ArchiveEntry>,
    pub population: Vec<Individual>,
}

impl SearchOutcome {
    /// Lowest `E` seen per depth over the whole run.
    pub fn best_e_by_depth(&self) -> BTreeMap<usize, f64> {
        let mut best = BTreeMap::new();
        for e in &self.evaluated {
            let slot = best.entry(e.genome.len()).or_insert(f64::INFINITY);
            *slot = f64::min(*slot, e.eval.fitness.e);
        }
        best
    }
}

/// The stream a search seeded with `seed` hands to the evaluator for `genome`.
pub fn evaluation_rng(seed: u64, genome: &Genome) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(genome_stream_seed(seed, genome))
}

fn genome_stream_seed(base: u64, genome: &Genome) -> u64 {
    // splitmix64 folded over the genes; stable across platforms and toolchains
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for &g in std::iter::once(&(genome.len() as u64)).chain(&genome.genes) {
        h = h.wrapping_add(g).wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Stepwise NSGA-II driver.
pub struct Search<'a, E: Evaluator> {
    evaluator: &'a E,
    space: SearchSpace,
    cfg: EvoConfig,
    rng: ChaCha8Rng,
    eval_seed: u64,
    cache: HashMap<Genome, Evaluation>,
    population: Vec<Individual>,
    archive: ParetoArchive,
    stats: Vec<GenerationStats>,
    generation: usize,
}

impl<'a, E: Evaluator> Search<'a, E> {
    /// Samples and evaluates the initial population and records generation 0.
    pub fn new(evaluator: &'a E, space: SearchSpace, cfg: EvoConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut search = Self {
            evaluator,
            space,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            eval_seed: seed,
            cache: HashMap::new(),
            population: Vec::new(),
            archive: ParetoArchive::new(),
            stats: Vec::new(),
            generation: 0,
        };
        let genomes: Vec<Genome> = (0..search.cfg.pop_size)
            .map(|_| search.space.random_genome(&mut search.rng))
            .collect();
        let evals = search.evaluate_all(&genomes)?;
        search.population = genomes
            .into_iter()
            .zip(evals)
            .map(|(g, e)| Individual::new(g, e))
            .collect();
        let fronts = fast_non_dominated_sort(&mut search.population);
        for front in &fronts {
            crowding_distance(&mut search.population, front);
        }
        search.update_archive(&fronts[0].clone());
        search.record_stats();
        Ok(search)
    }

    fn evaluate_all(&mut self, genomes: &[Genome]) -> Result<Vec<Evaluation>> {
        let mut fresh: Vec<Genome> = genomes
            .iter()
            .filter(|g| !self.cache.contains_key(*g))
            .cloned()
            .collect();
        fresh.sort();
        fresh.dedup();
        let base = self.eval_seed;
        let evaluator = self.evaluator;
        let results = par::map(&fresh, |g| {
            let mut rng = evaluation_rng(base, g);
            evaluator.evaluate(g, &mut rng).map_err(|e| Error::Evaluation {
                genome: g.to_string(),
                source: Box::new(e),
            })
        });
        for (g, r) in fresh.into_iter().zip(results) {
            self.cache.insert(g, r?);
        }
        Ok(genomes.iter().map(|g| self.cache[g]).collect())
    }

    fn update_archive(&mut self, front: &[usize]) {
        for &i in front {
            let ind = &self.population[i];
            self.archive.insert(ArchiveEntry {
                genome: ind.genome.clone(),
                eval: ind.eval,
            });
        }
    }

    fn record_stats(&mut self) {
        let es: Vec<f64> = self.population.iter().map(|i| i.eval.fitness.e).collect();
        self.stats.push(GenerationStats {
            generation: self.generation,
            best_e: es.iter().cloned().fold(f64::INFINITY, f64::min),
            mean_e: es.iter().sum::<f64>() / es.len() as f64,
            archive_size: self.archive.len(),
        });
    }

    /// Breeds `N_pop` offspring from the current (sorted) population.
    fn offspring(&mut self) -> Vec<Genome> {
        let n = self.cfg.pop_size;
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let a = tournament_select(&self.population, self.cfg.tournament, &mut self.rng);
            let b = tournament_select(&self.population, self.cfg.tournament, &mut self.rng);
            let (c1, c2) = sbx_crossover(
                &self.population[a].genome,
                &self.population[b].genome,
                self.cfg.p_c,
                self.cfg.eta_c,
                &self.space,
                &mut self.rng,
            );
            children.push(mutate(&c1, &self.cfg, &self.space, &mut self.rng));
            children.push(mutate(&c2, &self.cfg, &self.space, &mut self.rng));
        }
        children
    }

    /// One generation: breed, evaluate, elitist truncation of parents plus offspring,
    /// archive update with the combined first front.
    pub fn step(&mut self) -> Result<()> {
        let children = self.offspring();
        let evals = self.evaluate_all(&children)?;
        let mut combined = std::mem::take(&mut self.population);
        combined.extend(children.into_iter().zip(evals).map(|(g, e)| Individual::new(g, e)));
        let fronts = fast_non_dominated_sort(&mut combined);
        for front in &fronts {
            crowding_distance(&mut combined, front);
        }
        let first: Vec<Individual> = fronts[0].iter().map(|&i| combined[i].clone()).collect();
        let mut keep = Vec::with_capacity(self.cfg.pop_size);
        for front in &fronts {
            if keep.len() + front.len() <= self.cfg.pop_size {
                keep.extend(front.iter().copied());
            } else {
                let mut rest = front.clone();
                rest.sort_by(|&a, &b| {
                    combined[b]
                        .crowding
                        .total_cmp(&combined[a].crowding)
                        .then(a.cmp(&b))
                });
                keep.extend(rest.into_iter().take(self.cfg.pop_size - keep.len()));
            }
            if keep.len() == self.cfg.pop_size {
                break;
            }
        }
        self.population = keep.into_iter().map(|i| combined[i].clone()).collect();
        for ind in first {
            self.archive.insert(ArchiveEntry {
                genome: ind.genome,
                eval: ind.eval,
            });
        }
        self.generation += 1;
        self.record_stats();
        Ok(())
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn archive(&self) -> &ParetoArchive {
        &self.archive
    }

    pub fn stats(&self) -> &[GenerationStats] {
        &self.stats
    }

    /// Every distinct genome evaluated so far, in genome order.
    pub fn evaluated(&self) -> Vec<ArchiveEntry> {
        let mut all: Vec<ArchiveEntry> = self
            .cache
            .iter()
            .map(|(g, e)| ArchiveEntry {
                genome: g.clone(),
                eval: *e,
            })
            .collect();
        all.sort_by(|a, b| a.genome.cmp(&b.genome));
        all
    }

    pub fn finish(self) -> SearchOutcome {
        let evaluated = self.evaluated();
        SearchOutcome {
            archive: self.archive,
            stats: self.stats,
            evaluated,
            population: self.population,
        }
    }
}

/// Runs `cfg.generations` generations from a seed.
pub fn evolve<E: Evaluator>(
    evaluator: &E,
    space: SearchSpace,
    cfg: &EvoConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    let mut search = Search::new(evaluator, space, cfg.clone(), seed)?;
    for _ in 0..cfg.generations {
        search.step()?;
    }
    Ok(search.finish())
}

/// Cost weights of `C = alpha * N_CNOT + beta * N_depth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// Fine-tunes each architecture from the shared parameters and scores it by
/// validation cross-entropy and hardware cost.
pub struct TaskEvaluator {
    pub space: SearchSpace,
    pub params: SharedParameters,
    pub train: Vec<EncodedSample>,
    pub validation: Vec<EncodedSample>,
    pub noise: NoiseSpec,
    pub steps: usize,
    pub weights: CostWeights,
}

impl TaskEvaluator {
    pub fn new(
        task: &TaskSpec,
        params: SharedParameters,
        train: &[Sample],
        validation: &[Sample],
        noise: NoiseSpec,
        steps: usize,
        weights: CostWeights,
    ) -> Result<Self> {
        Ok(Self {
            space: task.search_space()?,
            params,
            train: encode_split(train, task)?,
            validation: encode_split(validation, task)?,
            noise,
            steps,
            weights,
        })
    }
}

impl Evaluator for TaskEvaluator {
    fn evaluate(&self, genome: &Genome, rng: &mut ChaCha8Rng) -> Result<Evaluation> {
        let ansatz = Ansatz::new(genome, &self.space)?;
        let tuned = fine_tune(
            &ansatz,
            &self.params,
            &self.train,
            &self.validation,
            &self.noise,
            self.steps,
            rng,
        )?;
        let cost = cost_of(genome, &self.space, self.weights.alpha, self.weights.beta);
        Ok(Evaluation {
            fitness: Fitness::new(tuned.val_loss, cost.cost),
            val_accuracy: tuned.val_accuracy,
            cost,
        })
    }
}
