use std::collections::BTreeMap;

use super::HarnessError;
use crate::reprcluster::ClusterPartition;
use crate::scalar::Scalar;

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

fn contingency(predicted: &[usize], truth: &[usize]) -> BTreeMap<(usize, usize), u64> {
    let mut table = BTreeMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        *table.entry((p, t)).or_insert(0) += 1;
    }
    table
}

/// Adjusted Rand Index of two labelings of the same items.
///
/// Identical partitions score 1 regardless of labels. When the chance-level
/// expectation equals the maximum index (one item, or both labelings are
/// all-one-cluster / all-singletons) the score is defined as 1.
pub fn adjusted_rand_index(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "labelings differ in length");
    let n = predicted.len() as u64;
    let table = contingency(predicted, truth);
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&(p, t), &c) in &table {
        *rows.entry(p).or_insert(0) += c;
        *cols.entry(t).or_insert(0) += c;
    }
    let index: f64 = table.values().map(|&c| pairs(c)).sum();
    let a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Fraction of items whose predicted cluster's majority truth label matches their own.
pub fn purity(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "labelings differ in length");
    if predicted.is_empty() {
        return 1.0;
    }
    let mut best: BTreeMap<usize, u64> = BTreeMap::new();
    for (&(p, _), &c) in &contingency(predicted, truth) {
        let e = best.entry(p).or_insert(0);
        *e = (*e).max(c);
    }
    best.values().sum::<u64>() as f64 / predicted.len() as f64
}

/// ARI and purity of the partition over the clients it has seen so far.
pub fn compute_ari<T: Scalar>(partition: &ClusterPartition<T>, truth: &[usize]) -> Result<(f64, f64), HarnessError> {
    let mut predicted = Vec::new();
    let mut labels = Vec::new();
    for (&cluster, members) in partition.clusters() {
        for &client in members {
            labels.push(*truth.get(client).ok_or(HarnessError::MissingLabel(client))?);
            predicted.push(cluster);
        }
    }
    Ok((adjusted_rand_index(&predicted, &labels), purity(&predicted, &labels)))
}
