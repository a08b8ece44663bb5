//! Experiment plumbing: config files, data assembly, driving the training
//! loops, clustering-quality metrics, CSV output and the gradient check.

mod config;
mod gradcheck;
mod metrics;
mod output;
mod run;

pub use config::{
    parse_config, parse_config_str, AlgorithmKind, DataSource, ExperimentConfig, OutputConfig, ScenarioConfig,
};
pub use gradcheck::{gradcheck_case, gradcheck_bound, gradcheck_suite, GradcheckReport, DEFAULT_STEP};
pub use metrics::{adjusted_rand_index, compute_ari, purity};
pub use output::{fmt_float, RunSummary, CLUSTERS_HEADER, METRICS_HEADER};
pub use run::{build_scenario, cluster_only, run_experiment, run_experiment_in, RunOutcome};

use thiserror::Error;

use crate::datagen::DataError;
use crate::fedcore::FedError;
use crate::numkernel::NumError;
use crate::reprcluster::ClusterError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` is set twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, msg: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("client {0} has no ground-truth cluster label")]
    MissingLabel(usize),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Fed(#[from] FedError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Num(#[from] NumError),
}

impl HarnessError {
    /// Process exit status: 2 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}
