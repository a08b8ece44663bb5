use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::{split_even, BaseDataset, DataError, FederatedScenario, ScenarioKind};
use crate::numkernel::DatasetShard;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

fn shuffled_indices(n: usize, seed: u64, coords: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, Stream::Partition, coords));
    idx
}

/// Splits the shuffled base into `num_clients` near-even client index sets.
fn client_chunks(n: usize, num_clients: usize, seed: u64, coords: &[u64]) -> Result<Vec<Vec<usize>>, DataError> {
    if num_clients == 0 {
        return Err(DataError::InvalidParams("need at least one client".into()));
    }
    if n < num_clients {
        return Err(DataError::EmptyClient { client: n });
    }
    Ok(split_even(&shuffled_indices(n, seed, coords), num_clients))
}

fn scenario<T: Scalar>(
    kind: ScenarioKind,
    train: Vec<DatasetShard<T>>,
    true_cluster: Vec<usize>,
    num_clusters: usize,
    num_classes: usize,
) -> Result<FederatedScenario<T>, DataError> {
    let s = FederatedScenario {
        kind,
        train,
        test: Vec::new(),
        true_cluster,
        num_clusters,
        num_classes,
    };
    s.validate()?;
    Ok(s)
}

/// Shuffles the base and splits it evenly over `num_clients` clients, all in cluster 0.
pub fn partition_iid<T: Scalar>(
    base: &BaseDataset<T>,
    num_clients: usize,
    seed: u64,
) -> Result<FederatedScenario<T>, DataError> {
    let chunks = client_chunks(base.len(), num_clients, seed, &[])?;
    let train = chunks
        .iter()
        .map(|c| base.data().select(c))
        .collect::<Result<Vec<_>, _>>()?;
    scenario(ScenarioKind::Iid, train, vec![0; num_clients], 1, base.num_classes())
}

/// Label-distribution skew: clients of group `g` hold only labels from `label_groups[g]`.
pub fn partition_pathological<T: Scalar>(
    base: &BaseDataset<T>,
    label_groups: &[Vec<usize>],
    clients_per_group: usize,
    seed: u64,
) -> Result<FederatedScenario<T>, DataError> {
    if label_groups.is_empty() || clients_per_group == 0 {
        return Err(DataError::InvalidParams(
            "need at least one label group and one client per group".into(),
        ));
    }
    let mut used = BTreeSet::new();
    for group in label_groups {
        for &y in group {
            if y >= base.num_classes() {
                return Err(DataError::InvalidParams(format!(
                    "label {y} outside [0, {})",
                    base.num_classes()
                )));
            }
            if !used.insert(y) {
                return Err(DataError::InvalidParams(format!(
                    "label {y} appears in more than one group"
                )));
            }
        }
    }

    let labels = base.data().labels();
    let mut train = Vec::with_capacity(label_groups.len() * clients_per_group);
    let mut truth = Vec::with_capacity(train.capacity());
    for (g, group) in label_groups.iter().enumerate() {
        let mut members: Vec<usize> = (0..base.len()).filter(|&i| group.contains(&labels[i])).collect();
        if members.is_empty() {
            return Err(DataError::EmptyGroup(g));
        }
        if members.len() < clients_per_group {
            return Err(DataError::EmptyClient {
                client: train.len() + members.len(),
            });
        }
        members.shuffle(&mut stream_rng(seed, Stream::Partition, &[g as u64]));
        for chunk in split_even(&members, clients_per_group) {
            train.push(base.data().select(&chunk)?);
            truth.push(g);
        }
    }
    scenario(ScenarioKind::Pathological, train, truth, label_groups.len(), base.num_classes())
}

/// Haar-ish random orthogonal `d x d` matrix (row-major) from a Gaussian
/// matrix by Gram-Schmidt with one re-orthogonalisation pass.
pub fn random_orthogonal<T: Scalar>(d: usize, seed: u64) -> Vec<T> {
    let mut rng = stream_rng(seed, Stream::Rotation, &[d as u64]);
    // cols[j] is column j
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    for j in 0..d {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(j);
                for (v, q) in tail[0].iter_mut().zip(&head[k]) {
                    *v -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    let mut q = vec![T::zero(); d * d];
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            q[i * d + j] = T::of(v);
        }
    }
    q
}

/// `Q_0 = I`; `Q_r` for `r > 0` is a seeded random orthogonal matrix.
pub fn rotation_matrices<T: Scalar>(d: usize, num_rotations: usize, seed: u64) -> Vec<Vec<T>> {
    (0..num_rotations)
        .map(|r| {
            if r == 0 {
                let mut eye = vec![T::zero(); d * d];
                for i in 0..d {
                    eye[i * d + i] = T::one();
                }
                eye
            } else {
                random_orthogonal(d, crate::rng::derive_seed(seed, Stream::Rotation, &[r as u64]))
            }
        })
        .collect()
}

fn transform_rows<T: Scalar>(shard: &DatasetShard<T>, q: &[T]) -> Result<DatasetShard<T>, DataError> {
    let d = shard.dim();
    let mut features = Vec::with_capacity(shard.features().len());
    for (x, _) in shard.rows() {
        for row in q.chunks_exact(d) {
            features.push(row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b));
        }
    }
    Ok(DatasetShard::new(features, d, shard.labels().to_vec())?)
}

/// Feature-distribution skew: cluster `r` sees features mapped through `Q_r`.
///
/// The base is shuffled and split into `num_rotations * clients_per_rotation`
/// disjoint clients exactly as [`partition_iid`] would; client `c` belongs
/// to cluster `c / clients_per_rotation`.
pub fn partition_rotated<T: Scalar>(
    base: &BaseDataset<T>,
    num_rotations: usize,
    clients_per_rotation: usize,
    seed: u64,
) -> Result<FederatedScenario<T>, DataError> {
    if num_rotations < 2 {
        return Err(DataError::InvalidParams("need at least two rotations".into()));
    }
    if clients_per_rotation == 0 {
        return Err(DataError::InvalidParams("need at least one client per rotation".into()));
    }
    let chunks = client_chunks(base.len(), num_rotations * clients_per_rotation, seed, &[])?;
    let rotations = rotation_matrices::<T>(base.dim(), num_rotations, seed);
    let mut train = Vec::with_capacity(chunks.len());
    let mut truth = Vec::with_capacity(chunks.len());
    for (c, chunk) in chunks.iter().enumerate() {
        let r = c / clients_per_rotation;
        let shard = base.data().select(chunk)?;
        train.push(if r == 0 { shard } else { transform_rows(&shard, &rotations[r])? });
        truth.push(r);
    }
    scenario(ScenarioKind::Rotated, train, truth, num_rotations, base.num_classes())
}

/// Label-concept skew: cluster `s` relabels `y -> (y + shifts[s]) mod C`.
/// Client layout matches [`partition_rotated`].
pub fn partition_shifted<T: Scalar>(
    base: &BaseDataset<T>,
    shifts: &[i64],
    clients_per_shift: usize,
    seed: u64,
) -> Result<FederatedScenario<T>, DataError> {
    if shifts.is_empty() || clients_per_shift == 0 {
        return Err(DataError::InvalidParams(
            "need at least one shift and one client per shift".into(),
        ));
    }
    let c = base.num_classes() as i64;
    let chunks = client_chunks(base.len(), shifts.len() * clients_per_shift, seed, &[])?;
    let mut train = Vec::with_capacity(chunks.len());
    let mut truth = Vec::with_capacity(chunks.len());
    for (client, chunk) in chunks.iter().enumerate() {
        let s = client / clients_per_shift;
        let shard = base.data().select(chunk)?;
        let labels = shard
            .labels()
            .iter()
            .map(|&y| (y as i64 + shifts[s]).rem_euclid(c) as usize)
            .collect();
        train.push(DatasetShard::new(shard.features().to_vec(), shard.dim(), labels)?);
        truth.push(s);
    }
    scenario(ScenarioKind::Shifted, train, truth, shifts.len(), base.num_classes())
}

/// Feature-concept skew: clients `0..m` draw from `a`, clients `m..2m` from `b`.
pub fn partition_hybrid<T: Scalar>(
    a: &BaseDataset<T>,
    b: &BaseDataset<T>,
    clients_per_domain: usize,
    seed: u64,
) -> Result<FederatedScenario<T>, DataError> {
    if a.num_classes() != b.num_classes() {
        return Err(DataError::ClassMismatch(a.num_classes(), b.num_classes()));
    }
    if a.dim() != b.dim() {
        return Err(DataError::DimMismatch(a.dim(), b.dim()));
    }
    let mut train = Vec::with_capacity(2 * clients_per_domain);
    let mut truth = Vec::with_capacity(2 * clients_per_domain);
    for (domain, base) in [a, b].into_iter().enumerate() {
        for chunk in client_chunks(base.len(), clients_per_domain, seed, &[domain as u64])? {
            train.push(base.data().select(&chunk)?);
            truth.push(domain);
        }
    }
    scenario(ScenarioKind::Hybrid, train, truth, 2, a.num_classes())
}
