use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::{BatchSize, FedError, TrainConfig};
use crate::numkernel::{gradient, sgd_step, DatasetShard, ModelParams};
use crate::reprcluster::ClientId;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Uniform sample without replacement, a pure function of `(seed, round)`.
pub fn sample_clients<T: Scalar>(
    num_clients: usize,
    config: &TrainConfig<T>,
    round: usize,
) -> Result<BTreeSet<ClientId>, FedError> {
    let m = config.sampling.size(num_clients);
    if m > num_clients {
        return Err(FedError::TooManySampled {
            requested: m,
            available: num_clients,
        });
    }
    let mut rng = stream_rng(config.seed, Stream::Sampling, &[round as u64]);
    Ok(rand::seq::index::sample(&mut rng, num_clients, m).into_iter().collect())
}

/// Proximal pull `weight * (x - center)` added to every local gradient.
#[derive(Debug, Clone, Copy)]
pub struct Proximal<'a, T> {
    pub center: &'a ModelParams<T>,
    pub weight: T,
}

/// Row order for every local step of one client in one round.
fn batches(n: usize, batch: BatchSize, seed: u64, round: usize, client: ClientId, epoch: usize) -> Vec<Vec<usize>> {
    match batch {
        BatchSize::Full => vec![(0..n).collect()],
        BatchSize::Size(b) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut stream_rng(seed, Stream::Batches, &[round as u64, client as u64, epoch as u64]));
            order.chunks(b).map(<[usize]>::to_vec).collect()
        }
    }
}

/// `local_epochs` passes of SGD over seeded batches, optionally with a
/// proximal term toward a fixed center:
/// `x <- x - eta * (grad(x) + weight * (x - center))`.
pub fn local_sgd<T: Scalar>(
    start: &ModelParams<T>,
    shard: &DatasetShard<T>,
    config: &TrainConfig<T>,
    round: usize,
    client: ClientId,
    prox: Option<Proximal<'_, T>>,
) -> Result<ModelParams<T>, FedError> {
    if let Some(p) = prox {
        if p.center.spec() != start.spec() {
            return Err(FedError::ShapeMismatch);
        }
    }
    let mut x = start.clone();
    for epoch in 0..config.local_epochs {
        for rows in batches(shard.len(), config.batch, config.seed, round, client, epoch) {
            let mut dir = if rows.len() == shard.len() {
                gradient(&x, shard)?
            } else {
                gradient(&x, &shard.select(&rows)?)?
            };
            if let Some(p) = prox.filter(|p| p.weight != T::zero()) {
                for ((d, &xv), &cv) in dir.iter_mut().zip(x.values()).zip(p.center.values()) {
                    *d += p.weight * (xv - cv);
                }
            }
            x = sgd_step(&x, &dir, config.eta)?;
        }
    }
    Ok(x)
}

/// Models a client sends back after one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate<T> {
    pub client: ClientId,
    pub updated_global: ModelParams<T>,
    pub updated_cluster: ModelParams<T>,
    pub sample_count: usize,
}

/// Trains the received cluster model with a proximal pull toward the
/// received global model (held fixed for all local epochs), and the global
/// model with plain SGD.
pub fn client_update<T: Scalar>(
    client: ClientId,
    round: usize,
    omega: &ModelParams<T>,
    theta: &ModelParams<T>,
    shard: &DatasetShard<T>,
    config: &TrainConfig<T>,
) -> Result<ClientUpdate<T>, FedError> {
    if omega.spec() != theta.spec() {
        return Err(FedError::ShapeMismatch);
    }
    let updated_cluster = local_sgd(
        theta,
        shard,
        config,
        round,
        client,
        Some(Proximal {
            center: omega,
            weight: config.lambda,
        }),
    )?;
    let updated_global = local_sgd(omega, shard, config, round, client, None)?;
    Ok(ClientUpdate {
        client,
        updated_global,
        updated_cluster,
        sample_count: shard.len(),
    })
}
