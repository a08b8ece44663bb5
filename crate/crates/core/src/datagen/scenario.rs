use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use super::DataError;
use crate::numkernel::DatasetShard;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Pathological,
    Rotated,
    Shifted,
    Hybrid,
    Iid,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Pathological => "pathological",
            ScenarioKind::Rotated => "rotated",
            ScenarioKind::Shifted => "shifted",
            ScenarioKind::Hybrid => "hybrid",
            ScenarioKind::Iid => "iid",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pathological" => Ok(ScenarioKind::Pathological),
            "rotated" => Ok(ScenarioKind::Rotated),
            "shifted" => Ok(ScenarioKind::Shifted),
            "hybrid" => Ok(ScenarioKind::Hybrid),
            "iid" => Ok(ScenarioKind::Iid),
            other => Err(format!("unknown scenario kind `{other}`")),
        }
    }
}

/// Per-client data plus the ground-truth cluster of every client.
///
/// `test` is empty until [`train_test_split`] runs; afterwards it has one
/// shard per client. `true_cluster` is for evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct FederatedScenario<T> {
    pub kind: ScenarioKind,
    pub train: Vec<DatasetShard<T>>,
    pub test: Vec<DatasetShard<T>>,
    pub true_cluster: Vec<usize>,
    pub num_clusters: usize,
    pub num_classes: usize,
}

impl<T: Scalar> FederatedScenario<T> {
    pub fn num_clients(&self) -> usize {
        self.train.len()
    }

    pub fn dim(&self) -> usize {
        self.train.first().map_or(0, DatasetShard::dim)
    }

    pub fn has_test(&self) -> bool {
        !self.test.is_empty()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let n = self.train.len();
        if n == 0 {
            return Err(DataError::InvalidParams("scenario has no clients".into()));
        }
        if self.true_cluster.len() != n {
            return Err(DataError::InvalidParams(format!(
                "{} clients but {} cluster labels",
                n,
                self.true_cluster.len()
            )));
        }
        if !self.test.is_empty() && self.test.len() != n {
            return Err(DataError::InvalidParams(format!(
                "{} train shards but {} test shards",
                n,
                self.test.len()
            )));
        }
        let mut present = vec![false; self.num_clusters];
        for &k in &self.true_cluster {
            if k >= self.num_clusters {
                return Err(DataError::InvalidParams(format!(
                    "cluster label {k} outside [0, {})",
                    self.num_clusters
                )));
            }
            present[k] = true;
        }
        if let Some(k) = present.iter().position(|p| !p) {
            return Err(DataError::InvalidParams(format!("cluster {k} has no clients")));
        }
        let dim = self.dim();
        for shard in self.train.iter().chain(&self.test) {
            if shard.dim() != dim {
                return Err(DataError::DimMismatch(dim, shard.dim()));
            }
            if let Some(&y) = shard.labels().iter().find(|&&y| y >= self.num_classes) {
                return Err(DataError::InvalidParams(format!(
                    "label {y} outside [0, {})",
                    self.num_classes
                )));
            }
        }
        Ok(())
    }

    /// Moves the last `per_cluster` clients of every ground-truth cluster
    /// into a second scenario. Both keep the original cluster numbering;
    /// clients are renumbered densely in their original order.
    pub fn hold_out(&self, per_cluster: usize) -> Result<(Self, Self), DataError> {
        let mut keep = Vec::new();
        let mut held = Vec::new();
        for k in 0..self.num_clusters {
            let members: Vec<usize> = (0..self.num_clients())
                .filter(|&i| self.true_cluster[i] == k)
                .collect();
            if members.len() <= per_cluster {
                return Err(DataError::InvalidParams(format!(
                    "cluster {k} has {} clients, cannot hold out {per_cluster}",
                    members.len()
                )));
            }
            let cut = members.len() - per_cluster;
            keep.extend_from_slice(&members[..cut]);
            held.extend_from_slice(&members[cut..]);
        }
        keep.sort_unstable();
        held.sort_unstable();
        Ok((self.subset(&keep), self.subset(&held)))
    }

    fn subset(&self, clients: &[usize]) -> Self {
        FederatedScenario {
            kind: self.kind,
            train: clients.iter().map(|&i| self.train[i].clone()).collect(),
            test: if self.test.is_empty() {
                Vec::new()
            } else {
                clients.iter().map(|&i| self.test[i].clone()).collect()
            },
            true_cluster: clients.iter().map(|&i| self.true_cluster[i]).collect(),
            num_clusters: self.num_clusters,
            num_classes: self.num_classes,
        }
    }
}

/// Seeded split of one shard into (train, test). Both parts keep the
/// original row order. The test part gets `round(n * test_fraction)` rows,
/// clamped so that both parts are non-empty.
pub fn split_shard<T: Scalar, R: Rng>(
    shard: &DatasetShard<T>,
    test_fraction: f64,
    rng: &mut R,
) -> Result<(DatasetShard<T>, DatasetShard<T>), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidParams(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = shard.len();
    if n < 2 {
        return Err(DataError::ClientTooSmall {
            client: 0,
            samples: n,
        });
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut test_idx = order[..n_test].to_vec();
    let mut train_idx = order[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((shard.select(&train_idx)?, shard.select(&test_idx)?))
}

/// Splits every client's data into train and test shards.
/// Each client uses its own seeded stream, so splits do not depend on client count.
pub fn train_test_split<T: Scalar>(
    scenario: &FederatedScenario<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<FederatedScenario<T>, DataError> {
    if scenario.has_test() {
        return Err(DataError::InvalidParams("scenario is already split".into()));
    }
    let mut train = Vec::with_capacity(scenario.num_clients());
    let mut test = Vec::with_capacity(scenario.num_clients());
    for (client, shard) in scenario.train.iter().enumerate() {
        let mut rng = stream_rng(seed, Stream::Split, &[client as u64]);
        let (tr, te) = split_shard(shard, test_fraction, &mut rng).map_err(|e| match e {
            DataError::ClientTooSmall { samples, .. } => DataError::ClientTooSmall { client, samples },
            other => other,
        })?;
        train.push(tr);
        test.push(te);
    }
    Ok(FederatedScenario {
        train,
        test,
        ..scenario.clone()
    })
}
