use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::representation::extract_for_client;
use super::{ClientId, ClusterError, ClusterId, Representation};
use crate::numkernel::{DatasetShard, ModelParams};
use crate::scalar::{axpy, Scalar};

/// Server-side clustering state: disjoint client clusters, the summed
/// representation of every cluster, and the cached representation of
/// every client seen so far.
///
/// Cluster ids are allocated monotonically and never reused; when two
/// clusters merge the lower id survives.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition<T> {
    clusters: BTreeMap<ClusterId, BTreeSet<ClientId>>,
    rep_sum: BTreeMap<ClusterId, Vec<T>>,
    client_rep: BTreeMap<ClientId, Representation<T>>,
    assignment: BTreeMap<ClientId, ClusterId>,
    next_id: ClusterId,
}

impl<T: Scalar> Default for ClusterPartition<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ClusterPartition<T> {
    pub fn new() -> Self {
        ClusterPartition {
            clusters: BTreeMap::new(),
            rep_sum: BTreeMap::new(),
            client_rep: BTreeMap::new(),
            assignment: BTreeMap::new(),
            next_id: 0,
        }
    }

    /// Number of clusters, K̃.
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_ids(&self) -> impl Iterator<Item = ClusterId> + '_ {
        self.clusters.keys().copied()
    }

    pub fn clusters(&self) -> &BTreeMap<ClusterId, BTreeSet<ClientId>> {
        &self.clusters
    }

    pub fn members(&self, cluster: ClusterId) -> Option<&BTreeSet<ClientId>> {
        self.clusters.get(&cluster)
    }

    pub fn rep_sum(&self, cluster: ClusterId) -> Option<&[T]> {
        self.rep_sum.get(&cluster).map(Vec::as_slice)
    }

    /// Member-averaged representation of a cluster.
    pub fn rep_mean(&self, cluster: ClusterId) -> Option<Vec<T>> {
        let n = T::of_usize(self.clusters.get(&cluster)?.len());
        Some(self.rep_sum.get(&cluster)?.iter().map(|&v| v / n).collect())
    }

    pub fn cluster_of(&self, client: ClientId) -> Option<ClusterId> {
        self.assignment.get(&client).copied()
    }

    pub fn is_seen(&self, client: ClientId) -> bool {
        self.client_rep.contains_key(&client)
    }

    /// The set of clients whose representation has been collected.
    pub fn seen_clients(&self) -> impl Iterator<Item = ClientId> + '_ {
        self.client_rep.keys().copied()
    }

    pub fn num_seen(&self) -> usize {
        self.client_rep.len()
    }

    pub fn client_rep(&self, client: ClientId) -> Option<&Representation<T>> {
        self.client_rep.get(&client)
    }

    /// Id the next new cluster will receive.
    pub fn next_cluster_id(&self) -> ClusterId {
        self.next_id
    }

    /// Registers a new client as its own cluster and returns the cluster id.
    pub fn add_singleton(&mut self, client: ClientId, rep: Representation<T>) -> Result<ClusterId, ClusterError> {
        if self.is_seen(client) {
            return Err(ClusterError::AlreadySeen(client));
        }
        self.check_len(&rep)?;
        let id = self.next_id;
        self.next_id += 1;
        self.clusters.insert(id, BTreeSet::from([client]));
        self.rep_sum.insert(id, rep.as_slice().to_vec());
        self.client_rep.insert(client, rep);
        self.assignment.insert(client, id);
        Ok(id)
    }

    /// Adds a new client to an existing cluster.
    pub fn add_member(
        &mut self,
        cluster: ClusterId,
        client: ClientId,
        rep: Representation<T>,
    ) -> Result<(), ClusterError> {
        if self.is_seen(client) {
            return Err(ClusterError::AlreadySeen(client));
        }
        self.check_len(&rep)?;
        let sum = self
            .rep_sum
            .get_mut(&cluster)
            .ok_or(ClusterError::UnknownCluster(cluster))?;
        axpy(sum, T::one(), rep.as_slice());
        self.clusters
            .get_mut(&cluster)
            .expect("rep_sum and clusters share keys")
            .insert(client);
        self.client_rep.insert(client, rep);
        self.assignment.insert(client, cluster);
        Ok(())
    }

    /// Moves every member of `absorbed` into `kept` and retires `absorbed`.
    pub fn merge(&mut self, kept: ClusterId, absorbed: ClusterId) -> Result<(), ClusterError> {
        if kept == absorbed || !self.clusters.contains_key(&kept) {
            return Err(ClusterError::UnknownCluster(kept));
        }
        let members = self
            .clusters
            .remove(&absorbed)
            .ok_or(ClusterError::UnknownCluster(absorbed))?;
        let sum = self.rep_sum.remove(&absorbed).expect("rep_sum and clusters share keys");
        axpy(self.rep_sum.get_mut(&kept).expect("checked above"), T::one(), &sum);
        for &c in &members {
            self.assignment.insert(c, kept);
        }
        self.clusters.get_mut(&kept).expect("checked above").extend(members);
        Ok(())
    }

    fn check_len(&self, rep: &Representation<T>) -> Result<(), ClusterError> {
        match self.client_rep.values().next() {
            Some(first) if first.len() != rep.len() => Err(ClusterError::LengthMismatch(first.len(), rep.len())),
            _ => Ok(()),
        }
    }

    /// Sum of the cached member representations, recomputed from scratch.
    pub fn recomputed_sum(&self, cluster: ClusterId) -> Option<Vec<T>> {
        let members = self.clusters.get(&cluster)?;
        let dim = self.client_rep.values().next()?.len();
        let mut sum = vec![T::zero(); dim];
        for c in members {
            axpy(&mut sum, T::one(), self.client_rep[c].as_slice());
        }
        Some(sum)
    }

    /// Verifies disjointness, coverage of the seen set, and that the
    /// incrementally maintained sums agree with recomputed ones to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<(), ClusterError> {
        let mut covered = BTreeSet::new();
        for (&id, members) in &self.clusters {
            if members.is_empty() {
                return Err(ClusterError::Invariant(format!("cluster {id} is empty")));
            }
            if id >= self.next_id {
                return Err(ClusterError::Invariant(format!("cluster id {id} was never allocated")));
            }
            for &c in members {
                if !covered.insert(c) {
                    return Err(ClusterError::Invariant(format!("client {c} is in two clusters")));
                }
                if self.assignment.get(&c) != Some(&id) {
                    return Err(ClusterError::Invariant(format!("client {c} index is stale")));
                }
            }
            let sum = self
                .rep_sum
                .get(&id)
                .ok_or_else(|| ClusterError::Invariant(format!("cluster {id} has no rep_sum")))?;
            let fresh = self.recomputed_sum(id).expect("cluster exists");
            let err = sum
                .iter()
                .zip(&fresh)
                .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs().as_f64()));
            if err > tol {
                return Err(ClusterError::Invariant(format!(
                    "cluster {id} rep_sum drifted by {err:e}"
                )));
            }
        }
        if self.rep_sum.len() != self.clusters.len() {
            return Err(ClusterError::Invariant("rep_sum keys differ from cluster keys".into()));
        }
        if !covered.iter().copied().eq(self.client_rep.keys().copied()) {
            return Err(ClusterError::Invariant("cluster union differs from seen clients".into()));
        }
        Ok(())
    }
}

/// Collects representations for the sampled clients not seen before and
/// adds each as a singleton cluster, in ascending client order. Already
/// seen clients are not recomputed. Returns the new cluster ids.
///
/// Extraction runs in parallel; the partition is only mutated afterwards.
pub fn ingest_round<T: Scalar>(
    partition: &mut ClusterPartition<T>,
    sampled: &BTreeSet<ClientId>,
    anchor: &ModelParams<T>,
    shards: &[DatasetShard<T>],
) -> Result<Vec<ClusterId>, ClusterError> {
    let fresh: Vec<ClientId> = sampled.iter().copied().filter(|&c| !partition.is_seen(c)).collect();
    if let Some(&c) = fresh.iter().find(|&&c| c >= shards.len()) {
        return Err(ClusterError::UnknownClient(c));
    }
    let reps = fresh
        .par_iter()
        .map(|&c| extract_for_client(c, anchor, &shards[c]))
        .collect::<Result<Vec<_>, _>>()?;
    fresh
        .into_iter()
        .zip(reps)
        .map(|(c, rep)| partition.add_singleton(c, rep))
        .collect()
}
