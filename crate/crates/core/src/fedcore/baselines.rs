use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::{
    evaluate_global, evaluate_per_client, local_sgd, sample_clients, weighted_mean, FedError, Proximal, RoundRecord,
    TrainConfig, Weighting,
};
use crate::datagen::FederatedScenario;
use crate::numkernel::{forward_loss, DatasetShard, ModelParams, ModelSpec};
use crate::reprcluster::ClientId;
use crate::rng::{derive_seed, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    FedAvg,
    FedProx,
    Ditto,
    Ifca,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::FedAvg => "fedavg",
            BaselineKind::FedProx => "fedprox",
            BaselineKind::Ditto => "ditto",
            BaselineKind::Ifca => "ifca",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = FedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fedavg" => Ok(BaselineKind::FedAvg),
            "fedprox" => Ok(BaselineKind::FedProx),
            "ditto" => Ok(BaselineKind::Ditto),
            "ifca" => Ok(BaselineKind::Ifca),
            other => Err(FedError::InvalidConfig(format!("unknown baseline `{other}`"))),
        }
    }
}

/// Server state of a baseline run.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState<T> {
    pub kind: BaselineKind,
    /// The shared model; absent for IFCA.
    pub global: Option<ModelParams<T>>,
    /// Ditto: personal model per client that has participated.
    /// IFCA: the broadcast hypotheses, keyed by index.
    pub models: BTreeMap<usize, ModelParams<T>>,
    /// IFCA: hypothesis each participating client last selected.
    pub assignment: BTreeMap<ClientId, usize>,
    pub round: usize,
}

impl<T: Scalar> BaselineState<T> {
    pub fn new(kind: BaselineKind, spec: &ModelSpec, config: &TrainConfig<T>) -> Result<Self, FedError> {
        let init = ModelParams::init(spec.clone(), derive_seed(config.seed, Stream::ModelInit, &[]))?;
        let mut state = BaselineState {
            kind,
            global: None,
            models: BTreeMap::new(),
            assignment: BTreeMap::new(),
            round: 0,
        };
        if kind == BaselineKind::Ifca {
            // hypothesis 0 matches the FedAvg initialisation
            state.models.insert(0, init);
            for m in 1..config.ifca_models {
                let seed = derive_seed(config.seed, Stream::Ifca, &[m as u64]);
                state.models.insert(m, ModelParams::init(spec.clone(), seed)?);
            }
        } else {
            state.global = Some(init);
        }
        Ok(state)
    }

    /// Model used to serve `client`: the personal model for Ditto, the
    /// selected hypothesis for IFCA, the global model otherwise.
    pub fn model_for(&self, client: ClientId) -> Option<&ModelParams<T>> {
        match self.kind {
            BaselineKind::Ditto => self.models.get(&client),
            BaselineKind::Ifca => self.models.get(self.assignment.get(&client)?),
            _ => self.global.as_ref(),
        }
    }
}

fn weight_of<T: Scalar>(shard: &DatasetShard<T>, weighting: Weighting) -> T {
    match weighting {
        Weighting::SampleCount => T::of_usize(shard.len()),
        Weighting::Equal => T::one(),
    }
}

fn mean_of<T: Scalar>(
    updates: &[(ClientId, ModelParams<T>)],
    shards: &[DatasetShard<T>],
    weighting: Weighting,
) -> Result<ModelParams<T>, FedError> {
    let items: Vec<_> = updates
        .iter()
        .map(|(c, m)| (m, weight_of(&shards[*c], weighting)))
        .collect();
    weighted_mean(&items)
}

/// Lowest-loss hypothesis on the client's training data; ties go to the lowest index.
fn ifca_select<T: Scalar>(models: &BTreeMap<usize, ModelParams<T>>, shard: &DatasetShard<T>) -> Result<usize, FedError> {
    let mut best: Option<(usize, T)> = None;
    for (&m, model) in models {
        let loss = forward_loss(model, shard)?;
        if best.is_none_or(|(_, b)| loss < b) {
            best = Some((m, loss));
        }
    }
    best.map(|(m, _)| m).ok_or(FedError::EmptyAggregate)
}

fn baseline_round<T: Scalar>(
    state: &mut BaselineState<T>,
    scenario: &FederatedScenario<T>,
    config: &TrainConfig<T>,
) -> Result<RoundRecord<T>, FedError> {
    let round = state.round;
    let shards = &scenario.train;
    let sampled: Vec<ClientId> = sample_clients(scenario.num_clients(), config, round)?.into_iter().collect();

    match state.kind {
        BaselineKind::FedAvg | BaselineKind::FedProx => {
            let global = state.global.as_ref().expect("global baseline");
            let prox = (state.kind == BaselineKind::FedProx).then_some(Proximal {
                center: global,
                weight: config.lambda,
            });
            let updates = sampled
                .par_iter()
                .map(|&c| Ok((c, local_sgd(global, &shards[c], config, round, c, prox)?)))
                .collect::<Result<Vec<_>, FedError>>()?;
            state.global = Some(mean_of(&updates, shards, config.weighting)?);
        }
        BaselineKind::Ditto => {
            let global = state.global.as_ref().expect("global baseline");
            let models = &state.models;
            let results = sampled
                .par_iter()
                .map(|&c| {
                    let w = local_sgd(global, &shards[c], config, round, c, None)?;
                    // personal models start from the global model of the round a client first joins
                    let start = models.get(&c).unwrap_or(global);
                    let prox = Proximal {
                        center: global,
                        weight: config.lambda,
                    };
                    let v = local_sgd(start, &shards[c], config, round, c, Some(prox))?;
                    Ok(((c, w), (c, v)))
                })
                .collect::<Result<Vec<_>, FedError>>()?;
            let (globals, personals): (Vec<_>, Vec<_>) = results.into_iter().unzip();
            state.global = Some(mean_of(&globals, shards, config.weighting)?);
            state.models.extend(personals);
        }
        BaselineKind::Ifca => {
            let models = &state.models;
            let results = sampled
                .par_iter()
                .map(|&c| {
                    let m = ifca_select(models, &shards[c])?;
                    Ok((c, m, local_sgd(&models[&m], &shards[c], config, round, c, None)?))
                })
                .collect::<Result<Vec<_>, FedError>>()?;
            let mut groups: BTreeMap<usize, Vec<(ClientId, ModelParams<T>)>> = BTreeMap::new();
            for (c, m, model) in results {
                state.assignment.insert(c, m);
                groups.entry(m).or_default().push((c, model));
            }
            for (m, updates) in groups {
                let mean = mean_of(&updates, shards, config.weighting)?;
                state.models.insert(m, mean);
            }
        }
    }
    state.round += 1;

    let eval = if scenario.has_test() { &scenario.test } else { &scenario.train };
    let st = &*state;
    let participants: Vec<ClientId> = match st.kind {
        BaselineKind::Ditto => st.models.keys().copied().collect(),
        BaselineKind::Ifca => st.assignment.keys().copied().collect(),
        _ => Vec::new(),
    };
    let global_acc = match &st.global {
        Some(g) => Some(evaluate_global(g, eval)?),
        None => None,
    };
    let cluster_acc = match st.kind {
        BaselineKind::Ditto | BaselineKind::Ifca => evaluate_per_client(&participants, |c| st.model_for(c), eval)?,
        _ => None,
    };
    Ok(RoundRecord {
        round,
        k_tilde: match st.kind {
            BaselineKind::Ditto => participants.len(),
            BaselineKind::Ifca => st.models.len(),
            _ => 1,
        },
        clustering_objective: None,
        global_acc,
        cluster_acc,
    })
}

pub fn run_baseline_observed<T, F>(
    kind: BaselineKind,
    scenario: &FederatedScenario<T>,
    spec: &ModelSpec,
    config: &TrainConfig<T>,
    mut observer: F,
) -> Result<(BaselineState<T>, Vec<RoundRecord<T>>), FedError>
where
    T: Scalar,
    F: FnMut(&BaselineState<T>, &RoundRecord<T>),
{
    config.validate()?;
    scenario.validate()?;
    let mut state = BaselineState::new(kind, spec, config)?;
    let mut records = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        let record = baseline_round(&mut state, scenario, config)?;
        observer(&state, &record);
        records.push(record);
    }
    Ok((state, records))
}

pub fn run_baseline<T: Scalar>(
    kind: BaselineKind,
    scenario: &FederatedScenario<T>,
    spec: &ModelSpec,
    config: &TrainConfig<T>,
) -> Result<(BaselineState<T>, Vec<RoundRecord<T>>), FedError> {
    run_baseline_observed(kind, scenario, spec, config, |_, _| {})
}
