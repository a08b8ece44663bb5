use rayon::prelude::*;

use super::FedError;
use crate::numkernel::{forward_loss, DatasetShard, ModelParams};
use crate::reprcluster::ClientId;
use crate::scalar::Scalar;

/// Observables of one communication round.
///
/// Fields that do not apply to an algorithm are `None`: the clustering
/// objective only exists for StoCFL, FedAvg and FedProx have no per-cluster
/// models, IFCA has no global model.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord<T> {
    pub round: usize,
    pub k_tilde: usize,
    pub clustering_objective: Option<T>,
    pub global_acc: Option<T>,
    pub cluster_acc: Option<T>,
}

/// Accuracy of one model on the union of all shards.
pub fn evaluate_global<T: Scalar>(model: &ModelParams<T>, shards: &[DatasetShard<T>]) -> Result<T, FedError> {
    let counts = shards
        .par_iter()
        .map(|s| crate::numkernel::ops_correct(model, s).map(|c| (c, s.len())))
        .collect::<Result<Vec<_>, _>>()?;
    let (correct, total) = counts.iter().fold((0, 0), |(c, t), &(a, b)| (c + a, t + b));
    Ok(T::of_usize(correct) / T::of_usize(total.max(1)))
}

/// Sample-weighted accuracy of per-client models on their own shards.
/// Returns `None` when `clients` is empty.
pub fn evaluate_per_client<'m, T, F>(
    clients: &[ClientId],
    model_for: F,
    shards: &[DatasetShard<T>],
) -> Result<Option<T>, FedError>
where
    T: Scalar,
    F: Fn(ClientId) -> Option<&'m ModelParams<T>> + Sync,
{
    if clients.is_empty() {
        return Ok(None);
    }
    let counts = clients
        .par_iter()
        .map(|&c| {
            let model = model_for(c).ok_or(FedError::UnknownClient(c))?;
            Ok((crate::numkernel::ops_correct(model, &shards[c])?, shards[c].len()))
        })
        .collect::<Result<Vec<_>, FedError>>()?;
    let (correct, total) = counts.iter().fold((0, 0), |(c, t), &(a, b)| (c + a, t + b));
    Ok(Some(T::of_usize(correct) / T::of_usize(total.max(1))))
}

/// Cluster-level bi-level objective: sample-weighted mean member loss of
/// `theta` plus `lambda / 2 * |theta - omega|^2`.
pub fn bilevel_objective<T: Scalar>(
    theta: &ModelParams<T>,
    omega: &ModelParams<T>,
    member_shards: &[&DatasetShard<T>],
    lambda: T,
) -> Result<T, FedError> {
    if member_shards.is_empty() {
        return Err(FedError::EmptyAggregate);
    }
    let mut loss = T::zero();
    let mut n = T::zero();
    for s in member_shards {
        let w = T::of_usize(s.len());
        loss += w * forward_loss(theta, s)?;
        n += w;
    }
    let dist2 = theta
        .values()
        .iter()
        .zip(omega.values())
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    Ok(loss / n + lambda * T::of(0.5) * dist2)
}
