use super::{ClientId, ClusterError, ClusterId, ClusterPartition, Representation};
use crate::scalar::Scalar;

/// Placement decision for a client that did not take part in clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inference<T> {
    /// Cluster the client belongs to; a fresh id when `created_new`.
    pub cluster: ClusterId,
    pub created_new: bool,
    /// Nearest existing cluster, whose model seeds a newly created one.
    pub source: ClusterId,
    pub similarity: T,
}

/// Picks the existing cluster whose representation sum is most similar to
/// `rep` (ties to the lowest id). Joins it when the similarity is at least
/// `tau`, otherwise proposes a new cluster seeded from the nearest one.
pub fn infer_cluster<T: Scalar>(
    partition: &ClusterPartition<T>,
    rep: &Representation<T>,
    tau: T,
) -> Result<Inference<T>, ClusterError> {
    let mut best: Option<(ClusterId, T)> = None;
    for id in partition.cluster_ids() {
        let s = super::cosine(rep.as_slice(), partition.rep_sum(id).expect("listed id"))?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    let (nearest, similarity) =
        best.ok_or_else(|| ClusterError::Invariant("cannot infer against an empty partition".into()))?;
    Ok(if similarity >= tau {
        Inference {
            cluster: nearest,
            created_new: false,
            source: nearest,
            similarity,
        }
    } else {
        Inference {
            cluster: partition.next_cluster_id(),
            created_new: true,
            source: nearest,
            similarity,
        }
    })
}

impl<T: Scalar> ClusterPartition<T> {
    /// Records an inferred client in the partition.
    pub fn apply_inference(
        &mut self,
        inference: &Inference<T>,
        client: ClientId,
        rep: Representation<T>,
    ) -> Result<ClusterId, ClusterError> {
        if inference.created_new {
            self.add_singleton(client, rep)
        } else {
            self.add_member(inference.cluster, client, rep)?;
            Ok(inference.cluster)
        }
    }
}
