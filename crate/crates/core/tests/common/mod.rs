#![allow(dead_code)]

use std::collections::BTreeMap;

use stocfl::harness::{parse_config_str, ExperimentConfig};
use stocfl::reprcluster::ClusterPartition;

/// Config text of the 4-shift synthetic benchmark: C=10, d=20, shifts
/// {0,3,6,9}, 20 clients per shift, 50 train + 10 test samples per client,
/// class separation 8, tau 0.5, 10% sampling.
pub fn shifted_config_text(seed: u64, algorithm: &str, rounds: usize) -> String {
    format!(
        "experiment.seed = {seed}
scenario.kind = shifted
scenario.num_classes = 10
scenario.dim = 20
scenario.class_separation = 8
scenario.shifts = 0,3,6,9
scenario.clients_per_cluster = 20
scenario.samples_per_client = 50
scenario.test_samples_per_client = 10
algorithm.kind = {algorithm}
train.tau = 0.5
train.sample_rate = 0.1
train.rounds = {rounds}
"
    )
}

pub fn shifted_config(seed: u64, algorithm: &str, rounds: usize) -> ExperimentConfig {
    parse_config_str(&shifted_config_text(seed, algorithm, rounds)).unwrap()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Brute-force agglomeration over singleton clusters `0..reps.len()`:
/// every iteration rebuilds each cluster's summed representation from its
/// members and scans all pairs; merges the most similar pair (first in
/// (low id, high id) order on ties) while it is strictly above `tau`; the
/// lower id survives.
pub fn merge_oracle(reps: &[Vec<f64>], tau: f64) -> BTreeMap<usize, Vec<usize>> {
    let units: Vec<Vec<f64>> = reps.iter().map(|r| unit(r)).collect();
    let mut clusters: BTreeMap<usize, Vec<usize>> = (0..reps.len()).map(|i| (i, vec![i])).collect();
    loop {
        let sums: BTreeMap<usize, Vec<f64>> = clusters
            .iter()
            .map(|(&id, members)| {
                let mut s = vec![0.0; units[0].len()];
                for &m in members {
                    for (a, b) in s.iter_mut().zip(&units[m]) {
                        *a += b;
                    }
                }
                (id, s)
            })
            .collect();
        let ids: Vec<usize> = clusters.keys().copied().collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                let s = cos(&sums[&a], &sums[&b]);
                if best.is_none_or(|(_, _, bs)| s > bs) {
                    best = Some((a, b, s));
                }
            }
        }
        match best {
            Some((a, b, s)) if s > tau => {
                let absorbed = clusters.remove(&b).unwrap();
                clusters.get_mut(&a).unwrap().extend(absorbed);
                clusters.get_mut(&a).unwrap().sort_unstable();
            }
            _ => return clusters,
        }
    }
}

pub fn as_map(p: &ClusterPartition<f64>) -> BTreeMap<usize, Vec<usize>> {
    p.clusters()
        .iter()
        .map(|(&id, m)| (id, m.iter().copied().collect()))
        .collect()
}

/// Representation sets made of a few noisy directions, seeded.
pub fn clustered_reps(seed: u64, n: usize, dim: usize, centers: usize, noise: f64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            c[i % centers]
                .iter()
                .map(|v| v + noise * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect()
}
