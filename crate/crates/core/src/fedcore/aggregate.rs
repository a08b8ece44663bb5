use std::collections::BTreeMap;

use super::{ClientUpdate, FedError, Weighting};
use crate::numkernel::ModelParams;
use crate::reprcluster::{ClusterId, ClusterPartition, MergeEvent};
use crate::scalar::{axpy, Scalar};

/// `Σ w_i x_i / Σ w_i`, accumulated in the order given.
pub fn weighted_mean<T: Scalar>(items: &[(&ModelParams<T>, T)]) -> Result<ModelParams<T>, FedError> {
    let (first, _) = items.first().ok_or(FedError::EmptyAggregate)?;
    if items.iter().any(|(m, _)| m.spec() != first.spec()) {
        return Err(FedError::ShapeMismatch);
    }
    let mut acc = vec![T::zero(); first.len()];
    let mut total = T::zero();
    for (model, w) in items {
        axpy(&mut acc, *w, model.values());
        total += *w;
    }
    for v in &mut acc {
        *v /= total;
    }
    Ok(first.with_values(acc)?)
}

fn weight<T: Scalar>(u: &ClientUpdate<T>, weighting: Weighting) -> T {
    match weighting {
        Weighting::SampleCount => T::of_usize(u.sample_count),
        Weighting::Equal => T::one(),
    }
}

fn sorted<T>(updates: &[ClientUpdate<T>]) -> Vec<&ClientUpdate<T>> {
    let mut refs: Vec<&ClientUpdate<T>> = updates.iter().collect();
    refs.sort_by_key(|u| u.client);
    refs
}

/// Weighted mean of the clients' global-model updates, in ascending client order.
pub fn aggregate_global<T: Scalar>(updates: &[ClientUpdate<T>], weighting: Weighting) -> Result<ModelParams<T>, FedError> {
    let items: Vec<_> = sorted(updates)
        .into_iter()
        .map(|u| (&u.updated_global, weight(u, weighting)))
        .collect();
    weighted_mean(&items)
}

/// Replaces every cluster model that had sampled members with the weighted
/// mean of those members' cluster-model updates. Other clusters keep their model.
pub fn aggregate_cluster<T: Scalar>(
    models: &mut BTreeMap<ClusterId, ModelParams<T>>,
    partition: &ClusterPartition<T>,
    updates: &[ClientUpdate<T>],
    weighting: Weighting,
) -> Result<(), FedError> {
    let mut groups: BTreeMap<ClusterId, Vec<(&ModelParams<T>, T)>> = BTreeMap::new();
    for u in sorted(updates) {
        let k = partition.cluster_of(u.client).ok_or(FedError::UnknownClient(u.client))?;
        groups.entry(k).or_default().push((&u.updated_cluster, weight(u, weighting)));
    }
    for (k, items) in groups {
        let mean = weighted_mean(&items)?;
        models.insert(k, mean);
    }
    Ok(())
}

/// Applies a merge log to the cluster models: the survivor becomes the
/// member-count weighted mean of both models and the absorbed model is dropped.
pub fn merge_cluster_models<T: Scalar>(
    models: &mut BTreeMap<ClusterId, ModelParams<T>>,
    log: &[MergeEvent],
) -> Result<(), FedError> {
    for ev in log {
        let absorbed = models
            .remove(&ev.absorbed)
            .ok_or(FedError::Cluster(crate::reprcluster::ClusterError::UnknownCluster(ev.absorbed)))?;
        let kept = models
            .get(&ev.kept)
            .ok_or(FedError::Cluster(crate::reprcluster::ClusterError::UnknownCluster(ev.kept)))?;
        let merged = weighted_mean(&[
            (kept, T::of_usize(ev.kept_size)),
            (&absorbed, T::of_usize(ev.absorbed_size)),
        ])?;
        models.insert(ev.kept, merged);
    }
    Ok(())
}
