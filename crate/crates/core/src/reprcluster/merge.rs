use super::{cosine, ClusterId, ClusterPartition};
use crate::scalar::Scalar;

/// Pairwise cosine similarities between cluster representation sums,
/// indexed by position in `ids` (ascending cluster id).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T> {
    ids: Vec<ClusterId>,
    values: Vec<T>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn ids(&self) -> &[ClusterId] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.ids.len() + j]
    }

    /// Largest off-diagonal entry, if there are at least two clusters.
    pub fn max_off_diagonal(&self) -> Option<T> {
        let k = self.dim();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .reduce(T::max)
    }
}

/// One merge performed by [`merge_step`], with the member counts of both
/// clusters just before the merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeEvent {
    pub kept: ClusterId,
    pub absorbed: ClusterId,
    pub kept_size: usize,
    pub absorbed_size: usize,
}

/// Similarity inside the merge loop. A zero sum cannot arise from merging
/// unit vectors whose cosine exceeds -1, but if it does it is treated as
/// orthogonal to everything.
fn similarity<T: Scalar>(a: &[T], b: &[T]) -> T {
    cosine(a, b).unwrap_or_else(|_| T::zero())
}

pub fn similarity_matrix<T: Scalar>(partition: &ClusterPartition<T>) -> SimilarityMatrix<T> {
    let ids: Vec<ClusterId> = partition.cluster_ids().collect();
    let k = ids.len();
    let mut values = vec![T::zero(); k * k];
    for i in 0..k {
        values[i * k + i] = T::one();
        let a = partition.rep_sum(ids[i]).expect("listed id");
        for j in i + 1..k {
            let s = similarity(a, partition.rep_sum(ids[j]).expect("listed id"));
            values[i * k + j] = s;
            values[j * k + i] = s;
        }
    }
    SimilarityMatrix { ids, values }
}

/// Sum of pairwise cosine similarities between distinct clusters.
pub fn clustering_objective<T: Scalar>(partition: &ClusterPartition<T>) -> T {
    let m = similarity_matrix(partition);
    let k = m.dim();
    let mut total = T::zero();
    for i in 0..k {
        for j in i + 1..k {
            total += m.get(i, j);
        }
    }
    total
}

/// Greedy agglomeration: repeatedly merges the most similar pair of
/// clusters while its similarity is strictly greater than `tau`.
///
/// Ties go to the pair that comes first in (lower id, higher id) order.
/// The lower id survives. Similarities involving the survivor are
/// recomputed after every merge.
pub fn merge_step<T: Scalar>(partition: &mut ClusterPartition<T>, tau: T) -> Vec<MergeEvent> {
    let m = similarity_matrix(partition);
    let ids = m.ids.clone();
    let k = ids.len();
    let mut sims = m.values;
    let mut alive = vec![true; k];
    let mut log = Vec::new();

    loop {
        let mut best: Option<(usize, usize, T)> = None;
        for i in (0..k).filter(|&i| alive[i]) {
            for j in (i + 1..k).filter(|&j| alive[j]) {
                let s = sims[i * k + j];
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((i, j, s));
                }
            }
        }
        let Some((i, j, s)) = best else { break };
        if !(s > tau) {
            break;
        }

        let (kept, absorbed) = (ids[i], ids[j]);
        let kept_size = partition.members(kept).map_or(0, |m| m.len());
        let absorbed_size = partition.members(absorbed).map_or(0, |m| m.len());
        partition.merge(kept, absorbed).expect("both clusters are alive");
        log.push(MergeEvent {
            kept,
            absorbed,
            kept_size,
            absorbed_size,
        });
        alive[j] = false;

        let merged = partition.rep_sum(kept).expect("survivor exists").to_vec();
        for o in (0..k).filter(|&o| alive[o] && o != i) {
            let s = similarity(&merged, partition.rep_sum(ids[o]).expect("alive"));
            sims[i * k + o] = s;
            sims[o * k + i] = s;
        }
    }
    log
}
