//! Stochastic clustered federated learning: distribution-representation
//! client clustering, bi-level cluster training and the FedAvg, FedProx,
//! Ditto and IFCA baselines, on deterministic Non-IID simulations.

pub mod datagen;
pub mod fedcore;
pub mod harness;
pub mod numkernel;
pub mod reprcluster;
pub mod rng;
pub mod scalar;

pub use scalar::Scalar;

pub type ModelParamsF64 = numkernel::ModelParams<f64>;
pub type DatasetShardF64 = numkernel::DatasetShard<f64>;
pub type BaseDatasetF64 = datagen::BaseDataset<f64>;
pub type FederatedScenarioF64 = datagen::FederatedScenario<f64>;
pub type RepresentationF64 = reprcluster::Representation<f64>;
pub type ClusterPartitionF64 = reprcluster::ClusterPartition<f64>;
pub type TrainConfigF64 = fedcore::TrainConfig<f64>;
pub type ServerStateF64 = fedcore::ServerState<f64>;
