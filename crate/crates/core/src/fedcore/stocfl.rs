use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    aggregate_cluster, aggregate_global, client_update, evaluate_global, evaluate_per_client, merge_cluster_models,
    sample_clients, AnchorChoice, FedError, RoundRecord, TrainConfig,
};
use crate::datagen::FederatedScenario;
use crate::numkernel::{DatasetShard, ModelParams, ModelSpec};
use crate::reprcluster::{
    clustering_objective, extract_representation, infer_cluster, ingest_round, merge_step, ClientId, ClusterId,
    ClusterPartition, Inference,
};
use crate::rng::{derive_seed, Stream};
use crate::scalar::Scalar;

/// Everything the server holds between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState<T> {
    pub global: ModelParams<T>,
    /// One model per cluster; keys always equal the partition's cluster ids.
    pub cluster_models: BTreeMap<ClusterId, ModelParams<T>>,
    pub partition: ClusterPartition<T>,
    /// Fixed model at which representations are computed. Never trained.
    pub anchor: ModelParams<T>,
    /// Number of completed rounds.
    pub round: usize,
}

impl<T: Scalar> ServerState<T> {
    pub fn new(spec: &ModelSpec, config: &TrainConfig<T>) -> Result<Self, FedError> {
        let global = ModelParams::init(spec.clone(), derive_seed(config.seed, Stream::ModelInit, &[]))?;
        let anchor = match config.anchor {
            AnchorChoice::InitialGlobal => global.clone(),
            AnchorChoice::Seed(s) => ModelParams::init(spec.clone(), derive_seed(s, Stream::Anchor, &[]))?,
        };
        Ok(ServerState {
            global,
            cluster_models: BTreeMap::new(),
            partition: ClusterPartition::new(),
            anchor,
            round: 0,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.partition.num_clusters()
    }

    pub fn cluster_model_of(&self, client: ClientId) -> Option<&ModelParams<T>> {
        self.cluster_models.get(&self.partition.cluster_of(client)?)
    }

    /// Checks that cluster models and clusters correspond one to one.
    pub fn check_invariants(&self) -> Result<(), FedError> {
        if !self.cluster_models.keys().copied().eq(self.partition.cluster_ids()) {
            return Err(FedError::InvalidConfig(format!(
                "cluster models {:?} do not match clusters {:?}",
                self.cluster_models.keys().collect::<Vec<_>>(),
                self.partition.cluster_ids().collect::<Vec<_>>()
            )));
        }
        if self.cluster_models.values().any(|m| m.spec() != self.global.spec()) {
            return Err(FedError::ShapeMismatch);
        }
        self.partition.check_invariants(1e-9)?;
        Ok(())
    }

    /// Places a client that never took part in training: joins the most
    /// similar cluster when the similarity reaches `tau`, otherwise opens a
    /// new cluster initialised with the nearest cluster's model.
    pub fn admit_client(
        &mut self,
        client: ClientId,
        shard: &DatasetShard<T>,
        tau: T,
    ) -> Result<Inference<T>, FedError> {
        let rep = extract_representation(&self.anchor, shard)?;
        let inference = infer_cluster(&self.partition, &rep, tau)?;
        let id = self.partition.apply_inference(&inference, client, rep)?;
        if inference.created_new {
            let model = self.cluster_models[&inference.source].clone();
            self.cluster_models.insert(id, model);
        }
        Ok(inference)
    }
}

fn eval_shards<T: Scalar>(scenario: &FederatedScenario<T>) -> &[DatasetShard<T>] {
    if scenario.has_test() {
        &scenario.test
    } else {
        &scenario.train
    }
}

/// One full communication round: sample, collect representations of new
/// clients, merge clusters, broadcast, train locally, aggregate, evaluate.
pub fn stocfl_round<T: Scalar>(
    state: &mut ServerState<T>,
    scenario: &FederatedScenario<T>,
    config: &TrainConfig<T>,
) -> Result<RoundRecord<T>, FedError> {
    let round = state.round;
    let sampled = sample_clients(scenario.num_clients(), config, round)?;

    // new singletons start from the current global model
    for id in ingest_round(&mut state.partition, &sampled, &state.anchor, &scenario.train)? {
        state.cluster_models.insert(id, state.global.clone());
    }
    let log = merge_step(&mut state.partition, config.tau);
    merge_cluster_models(&mut state.cluster_models, &log)?;
    let objective = clustering_objective(&state.partition);

    let sampled: Vec<ClientId> = sampled.into_iter().collect();
    let updates = {
        let st = &*state;
        sampled
            .par_iter()
            .map(|&c| {
                let theta = st.cluster_model_of(c).ok_or(FedError::UnknownClient(c))?;
                client_update(c, round, &st.global, theta, &scenario.train[c], config)
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    state.global = aggregate_global(&updates, config.weighting)?;
    aggregate_cluster(&mut state.cluster_models, &state.partition, &updates, config.weighting)?;
    state.round += 1;

    let shards = eval_shards(scenario);
    let seen: Vec<ClientId> = state.partition.seen_clients().collect();
    let st = &*state;
    Ok(RoundRecord {
        round,
        k_tilde: st.num_clusters(),
        clustering_objective: Some(objective),
        global_acc: Some(evaluate_global(&st.global, shards)?),
        cluster_acc: evaluate_per_client(&seen, |c| st.cluster_model_of(c), shards)?,
    })
}

/// Runs all configured rounds, calling `observer` after each one.
pub fn run_stocfl_observed<T, F>(
    scenario: &FederatedScenario<T>,
    spec: &ModelSpec,
    config: &TrainConfig<T>,
    mut observer: F,
) -> Result<(ServerState<T>, Vec<RoundRecord<T>>), FedError>
where
    T: Scalar,
    F: FnMut(&ServerState<T>, &RoundRecord<T>),
{
    config.validate()?;
    scenario.validate()?;
    let mut state = ServerState::new(spec, config)?;
    let mut records = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        let record = stocfl_round(&mut state, scenario, config)?;
        observer(&state, &record);
        records.push(record);
    }
    Ok((state, records))
}

pub fn run_stocfl<T: Scalar>(
    scenario: &FederatedScenario<T>,
    spec: &ModelSpec,
    config: &TrainConfig<T>,
) -> Result<(ServerState<T>, Vec<RoundRecord<T>>), FedError> {
    run_stocfl_observed(scenario, spec, config, |_, _| {})
}
