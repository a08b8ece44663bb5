//! Gradient-based distribution representations and the stochastic,
//! threshold-driven agglomerative clustering of clients built on them.

mod infer;
mod merge;
mod partition;
mod representation;

pub use infer::{infer_cluster, Inference};
pub use merge::{clustering_objective, merge_step, similarity_matrix, MergeEvent, SimilarityMatrix};
pub use partition::{ingest_round, ClusterPartition};
pub use representation::{cosine, extract_representation, Representation, DEGENERATE_NORM};

use thiserror::Error;

use crate::numkernel::NumError;

pub type ClientId = usize;
pub type ClusterId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("degenerate shard{}: gradient norm {norm:e} at the anchor", client.map(|c| format!(" for client {c}")).unwrap_or_default())]
    DegenerateShard { client: Option<ClientId>, norm: f64 },
    #[error("cosine of a zero vector is undefined")]
    ZeroVector,
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("client {0} is unknown")]
    UnknownClient(ClientId),
    #[error("cluster {0} does not exist")]
    UnknownCluster(ClusterId),
    #[error("client {0} is already assigned")]
    AlreadySeen(ClientId),
    #[error("partition invariant violated: {0}")]
    Invariant(String),
    #[error("client {client}: {source}")]
    Client {
        client: ClientId,
        #[source]
        source: NumError,
    },
    #[error(transparent)]
    Num(#[from] NumError),
}
