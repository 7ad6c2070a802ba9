use naqas::arch::{Genome, SearchSpace};
use naqas::qsim::NoiseSpec;
use naqas::tasks::TaskSpec;
use naqas::train::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Five heads on a one-layer ansatz where head 3 alone predicts the labels.
fn setup(epsilon: f64) -> (Ansatz, SharedParameters, Vec<EncodedSample>) {
    let task = TaskSpec::binary();
    let space = SearchSpace::new(3, 1, 1).unwrap();
    let ansatz = Ansatz::new(&Genome { genes: vec![0] }, &space).unwrap();
    let cfg = TrainConfig { epsilon, ..TrainConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = SharedParameters::init(3, 1, 2, 5, &cfg, &mut rng).unwrap();
    params.theta = vec![0.0; 3];
    for head in params.supernets.iter_mut() {
        head.weights = vec![0.0; 6];
        head.bias = vec![0.0, 0.0];
    }
    params.supernets[2].bias = vec![2.0, -2.0];
    let batch = task.dataset(0).unwrap().train[..20]
        .iter()
        .map(|s| naqas::tasks::Sample { features: s.features.clone(), label: 0 })
        .collect::<Vec<_>>();
    (ansatz, params, encode_split(&batch, &task).unwrap())
}

fn counts(epsilon: f64, draws: usize) -> Vec<usize> {
    let (ansatz, params, batch) = setup(epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut hist = vec![0usize; 5];
    for _ in 0..draws {
        hist[select_head(&ansatz, &params, &batch, &NoiseSpec::None, &mut rng).unwrap() - 1] += 1;
    }
    hist
}

#[test]
fn greedy_mixture_frequency() {
    let hist = counts(0.2, 10_000);
    let freq = hist[2] as f64 / 10_000.0;
    assert!((freq - 0.84).abs() <= 0.02, "best head frequency {freq}");
}

#[test]
fn pure_exploration_is_uniform() {
    let n = 10_000.0;
    let sigma = (n * 0.2 * 0.8f64).sqrt();
    for c in counts(1.0, 10_000) {
        assert!((c as f64 - n / 5.0).abs() <= 3.0 * sigma, "count {c}");
    }
}

#[test]
fn pure_exploitation_is_deterministic() {
    assert_eq!(counts(0.0, 500)[2], 500);
}

#[test]
fn binary_clusters_are_linearly_separable() {
    // plain logistic regression on the centred features: a sanity floor for the dataset
    let data = TaskSpec::binary().dataset(3).unwrap();
    let centred = |s: &naqas::tasks::Sample| -> Vec<f64> {
        s.features.iter().map(|x| x - std::f64::consts::FRAC_PI_2).chain([1.0]).collect()
    };
    let mut w = [0.0f64; 4];
    for _ in 0..2000 {
        let mut g = [0.0; 4];
        for s in &data.train {
            let x = centred(s);
            let z: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
            let err = 1.0 / (1.0 + (-z).exp()) - (s.label == 1) as u8 as f64;
            for i in 0..4 {
                g[i] += err * x[i];
            }
        }
        for i in 0..4 {
            w[i] -= 0.05 * g[i] / data.train.len() as f64;
        }
    }
    let correct = data
        .test
        .iter()
        .filter(|s| {
            let z: f64 = w.iter().zip(centred(s)).map(|(w, x)| w * x).sum();
            (z > 0.0) == (s.label == 1)
        })
        .count();
    assert!(correct as f64 / data.test.len() as f64 >= 0.95);
}

#[test]
fn pretraining_reduces_binary_loss() {
    let task = TaskSpec::binary();
    let data = task.dataset(0).unwrap();
    let cfg = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (_, log) = pretrain(&task, &data.train, &NoiseSpec::depolarizing(0.01), &cfg, &mut rng).unwrap();
    let losses: Vec<f64> = log.records.iter().map(|r| r.loss).collect();
    let head: f64 = losses[..20].iter().sum::<f64>() / 20.0;
    let tail: f64 = losses[losses.len() - 20..].iter().sum::<f64>() / 20.0;
    assert!(tail < head, "first 20 {head}, last 20 {tail}");
}
