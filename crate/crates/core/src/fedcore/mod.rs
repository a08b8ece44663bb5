//! Bi-level clustered training, cluster-model lifecycle and the FedAvg,
//! FedProx, Ditto and IFCA baselines.
//!
//! Client work inside a round runs on the ambient rayon pool. Every
//! reduction happens afterwards in ascending client-id order, so results
//! are identical for any number of worker threads.

mod aggregate;
mod baselines;
mod client;
mod config;
mod eval;
mod stocfl;

pub use aggregate::{aggregate_cluster, aggregate_global, merge_cluster_models, weighted_mean};
pub use baselines::{run_baseline, run_baseline_observed, BaselineKind, BaselineState};
pub use client::{client_update, local_sgd, sample_clients, ClientUpdate, Proximal};
pub use config::{AnchorChoice, BatchSize, Sampling, TrainConfig, Weighting};
pub use eval::{bilevel_objective, evaluate_global, evaluate_per_client, RoundRecord};
pub use stocfl::{run_stocfl, run_stocfl_observed, stocfl_round, ServerState};

use thiserror::Error;

use crate::datagen::DataError;
use crate::numkernel::NumError;
use crate::reprcluster::{ClientId, ClusterError};

#[derive(Debug, Error)]
pub enum FedError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot sample {requested} clients out of {available}")]
    TooManySampled { requested: usize, available: usize },
    #[error("aggregation over an empty set of updates")]
    EmptyAggregate,
    #[error("client {0} is not assigned to any cluster")]
    UnknownClient(ClientId),
    #[error("model shapes differ")]
    ShapeMismatch,
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Data(#[from] DataError),
}
