use std::path::Path;
use std::time::Instant;

use super::config::{AlgorithmKind, DataSource, ExperimentConfig};
use super::metrics::{adjusted_rand_index, compute_ari, purity};
use super::output::{
    fmt_float, opt_float, opt_usize, representations_header, write_file, Csv, RunSummary, CLUSTERS_HEADER,
    METRICS_HEADER,
};
use super::{ConfigError, HarnessError};
use crate::datagen::{
    load_idx, make_base_dataset, partition_hybrid, partition_iid, partition_pathological, partition_rotated,
    partition_shifted, train_test_split, BaseDataset, FederatedScenario, ScenarioKind,
};
use crate::fedcore::{
    run_baseline_observed, run_stocfl_observed, sample_clients, BaselineKind, BaselineState, RoundRecord,
    ServerState,
};
use crate::reprcluster::{clustering_objective, ingest_round, merge_step, ClusterPartition};
use crate::rng::{derive_seed, Stream};

/// Everything a run produced, in addition to the files it wrote.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub records: Vec<RoundRecord<f64>>,
    /// Per-round ARI over the clients seen so far, when the algorithm clusters.
    pub ari: Vec<Option<f64>>,
    /// Final cluster of every client (`None` if never assigned).
    pub assignment: Vec<Option<usize>>,
}

/// Number of base samples the scenario needs so that each client gets
/// `samples_per_client + test_samples_per_client` rows.
fn base_size(cfg: &ExperimentConfig, num_classes: usize) -> usize {
    let sc = &cfg.scenario;
    let per_client = sc.samples_per_client + sc.test_samples_per_client;
    match sc.kind {
        ScenarioKind::Pathological => {
            // a group holding g of the C classes receives about g/C of the base
            let covered: usize = sc.label_groups.iter().map(Vec::len).sum();
            let groups = sc.label_groups.len();
            (per_client * sc.clients_per_cluster * groups * num_classes).div_ceil(covered.max(1))
        }
        ScenarioKind::Hybrid => per_client * sc.clients_per_cluster,
        _ => per_client * sc.num_clients(),
    }
}

fn truncate(base: BaseDataset<f64>, n: usize, key: &str) -> Result<BaseDataset<f64>, HarnessError> {
    if base.len() < n {
        return Err(ConfigError::invalid(
            key,
            format!("file holds {} samples, the scenario needs {n}", base.len()),
        )
        .into());
    }
    let idx: Vec<usize> = (0..n).collect();
    let classes = base.num_classes();
    Ok(BaseDataset::new(base.data().select(&idx)?, classes)?)
}

/// Base dataset for domain 0, or domain 1 of a hybrid scenario.
fn base_dataset(cfg: &ExperimentConfig, domain: u64) -> Result<BaseDataset<f64>, HarnessError> {
    match &cfg.scenario.source {
        DataSource::Synthetic {
            num_classes,
            dim,
            class_separation,
        } => {
            let seed = if domain == 0 {
                cfg.seed
            } else {
                derive_seed(cfg.seed, Stream::Prototypes, &[domain])
            };
            let n = base_size(cfg, *num_classes);
            Ok(make_base_dataset(seed, n, *dim, *num_classes, *class_separation)?)
        }
        DataSource::Idx { images, labels, second } => {
            let (images, labels, key) = match (domain, second) {
                (0, _) => (images, labels, "scenario.idx_images"),
                (_, Some((i, l))) => (i, l, "scenario.idx_images_b"),
                (_, None) => return Err(ConfigError::invalid("scenario.idx_images_b", "missing").into()),
            };
            let base = load_idx(images, labels)?;
            let n = base_size(cfg, base.num_classes());
            truncate(base, n, key)
        }
    }
}

/// Generates the base data, partitions it and splits every client into train/test.
pub fn build_scenario(cfg: &ExperimentConfig) -> Result<FederatedScenario<f64>, HarnessError> {
    let sc = &cfg.scenario;
    let base = base_dataset(cfg, 0)?;
    let seed = cfg.seed;
    let m = sc.clients_per_cluster;
    let scenario = match sc.kind {
        ScenarioKind::Iid => partition_iid(&base, m, seed)?,
        ScenarioKind::Pathological => partition_pathological(&base, &sc.label_groups, m, seed)?,
        ScenarioKind::Rotated => partition_rotated(&base, sc.num_rotations, m, seed)?,
        ScenarioKind::Shifted => partition_shifted(&base, &sc.shifts, m, seed)?,
        ScenarioKind::Hybrid => partition_hybrid(&base, &base_dataset(cfg, 1)?, m, seed)?,
    };
    Ok(train_test_split(&scenario, sc.test_fraction(), seed)?)
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

fn prepare_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
        path: dir.display().to_string(),
        source,
    })
}

/// Per-round wall time in ms, or zero when timing is off.
struct Clock {
    enabled: bool,
    last: Instant,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Clock {
            enabled,
            last: Instant::now(),
        }
    }

    fn lap(&mut self) -> u128 {
        let now = Instant::now();
        let ms = now.duration_since(self.last).as_millis();
        self.last = now;
        if self.enabled {
            ms
        } else {
            0
        }
    }
}

fn write_metrics(dir: &Path, records: &[RoundRecord<f64>], ari: &[Option<f64>], wall: &[u128]) -> Result<(), HarnessError> {
    let mut csv = Csv::new(METRICS_HEADER);
    for ((r, a), ms) in records.iter().zip(ari).zip(wall) {
        csv.row([
            r.round.to_string(),
            r.k_tilde.to_string(),
            opt_float(r.clustering_objective),
            opt_float(r.global_acc),
            opt_float(r.cluster_acc),
            opt_float(*a),
            ms.to_string(),
        ]);
    }
    csv.write(&dir.join("metrics.csv"))
}

fn write_clusters(dir: &Path, truth: &[usize], assignment: &[Option<usize>]) -> Result<(), HarnessError> {
    let mut csv = Csv::new(CLUSTERS_HEADER);
    for (c, (t, a)) in truth.iter().zip(assignment).enumerate() {
        csv.row([c.to_string(), t.to_string(), opt_usize(*a)]);
    }
    csv.write(&dir.join("clusters.csv"))
}

fn write_representations(dir: &Path, partition: &ClusterPartition<f64>, truth: &[usize]) -> Result<(), HarnessError> {
    let dim = partition
        .seen_clients()
        .next()
        .and_then(|c| partition.client_rep(c))
        .map_or(0, |r| r.len());
    let mut csv = Csv::new(&representations_header(dim));
    for c in partition.seen_clients() {
        let rep = partition.client_rep(c).ok_or(HarnessError::MissingLabel(c))?;
        let mut row = vec![c.to_string(), truth[c].to_string(), opt_usize(partition.cluster_of(c))];
        row.extend(rep.as_slice().iter().map(|&v| fmt_float(v)));
        csv.row(row);
    }
    csv.write(&dir.join("representations.csv"))
}

fn finish(dir: &Path, summary: &RunSummary) -> Result<(), HarnessError> {
    write_file(&dir.join("summary.txt"), &format!("{summary}\n"))
}

/// Runs the configured experiment and writes `metrics.csv`, `clusters.csv`,
/// `representations.csv` (StoCFL only) and `summary.txt` to the output
/// directory. All client work runs on a pool of `cfg.threads` workers.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let scenario = build_scenario(cfg)?;
    run_experiment_in(cfg, &scenario)
}

/// As [`run_experiment`] on an already built scenario.
pub fn run_experiment_in(cfg: &ExperimentConfig, scenario: &FederatedScenario<f64>) -> Result<RunOutcome, HarnessError> {
    let dir = cfg.output.dir.as_path();
    prepare_dir(dir)?;
    in_pool(cfg.threads, || match cfg.algorithm {
        AlgorithmKind::Stocfl => run_stocfl_experiment(cfg, scenario, dir),
        AlgorithmKind::Baseline(kind) => run_baseline_experiment(cfg, kind, scenario, dir),
    })?
}

fn run_stocfl_experiment(
    cfg: &ExperimentConfig,
    scenario: &FederatedScenario<f64>,
    dir: &Path,
) -> Result<RunOutcome, HarnessError> {
    let spec = cfg.model_spec(scenario.dim(), scenario.num_classes);
    let truth = &scenario.true_cluster;
    let mut clock = Clock::new(cfg.output.timing);
    let mut wall = Vec::new();
    let mut scores = Vec::new();
    let (state, records) = run_stocfl_observed(scenario, &spec, &cfg.train, |st, _| {
        wall.push(clock.lap());
        scores.push(compute_ari(&st.partition, truth));
    })?;
    let scores = scores.into_iter().collect::<Result<Vec<_>, _>>()?;
    let ari: Vec<Option<f64>> = scores.iter().map(|&(a, _)| Some(a)).collect();

    let assignment: Vec<Option<usize>> = (0..scenario.num_clients()).map(|c| state.partition.cluster_of(c)).collect();
    write_metrics(dir, &records, &ari, &wall)?;
    write_clusters(dir, truth, &assignment)?;
    if cfg.output.dump_representations {
        write_representations(dir, &state.partition, truth)?;
    }
    let last = records.last();
    let summary = RunSummary {
        algorithm: cfg.algorithm.to_string(),
        rounds: records.len(),
        k_tilde: state.num_clusters(),
        ari: scores.last().map(|s| s.0),
        purity: scores.last().map(|s| s.1),
        global_acc: last.and_then(|r| r.global_acc),
        cluster_acc: last.and_then(|r| r.cluster_acc),
    };
    finish(dir, &summary)?;
    Ok(RunOutcome {
        summary,
        records,
        ari,
        assignment,
    })
}

fn baseline_assignment(state: &BaselineState<f64>, num_clients: usize) -> Vec<Option<usize>> {
    (0..num_clients)
        .map(|c| match state.kind {
            BaselineKind::FedAvg | BaselineKind::FedProx => Some(0),
            BaselineKind::Ditto => state.models.contains_key(&c).then_some(c),
            BaselineKind::Ifca => state.assignment.get(&c).copied(),
        })
        .collect()
}

fn assignment_scores(assignment: &[Option<usize>], truth: &[usize]) -> (f64, f64) {
    let (pred, labels): (Vec<usize>, Vec<usize>) = assignment
        .iter()
        .zip(truth)
        .filter_map(|(a, &t)| a.map(|a| (a, t)))
        .unzip();
    (adjusted_rand_index(&pred, &labels), purity(&pred, &labels))
}

fn run_baseline_experiment(
    cfg: &ExperimentConfig,
    kind: BaselineKind,
    scenario: &FederatedScenario<f64>,
    dir: &Path,
) -> Result<RunOutcome, HarnessError> {
    let spec = cfg.model_spec(scenario.dim(), scenario.num_classes);
    let truth = &scenario.true_cluster;
    let n = scenario.num_clients();
    let clusters = cfg.algorithm.clusters_clients();
    let mut clock = Clock::new(cfg.output.timing);
    let mut wall = Vec::new();
    let mut scores = Vec::new();
    let (state, records) = run_baseline_observed(kind, scenario, &spec, &cfg.train, |st, _| {
        wall.push(clock.lap());
        scores.push(clusters.then(|| assignment_scores(&baseline_assignment(st, n), truth)));
    })?;
    let ari: Vec<Option<f64>> = scores.iter().map(|s| s.map(|s| s.0)).collect();

    let assignment = baseline_assignment(&state, n);
    write_metrics(dir, &records, &ari, &wall)?;
    write_clusters(dir, truth, &assignment)?;
    let last = records.last();
    let final_scores = scores.last().copied().flatten();
    let summary = RunSummary {
        algorithm: cfg.algorithm.to_string(),
        rounds: records.len(),
        k_tilde: last.map_or(0, |r| r.k_tilde),
        ari: final_scores.map(|s| s.0),
        purity: final_scores.map(|s| s.1),
        global_acc: last.and_then(|r| r.global_acc),
        cluster_acc: last.and_then(|r| r.cluster_acc),
    };
    finish(dir, &summary)?;
    Ok(RunOutcome {
        summary,
        records,
        ari,
        assignment,
    })
}

/// Replays only the clustering side of StoCFL: the same client sampling,
/// ingestion and merging, with no training. Because representations are
/// taken at the fixed anchor, the resulting partition equals the one a full
/// run with the same seed arrives at. Writes `clusters.csv`,
/// `representations.csv` and `summary.txt`.
pub fn cluster_only(cfg: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let scenario = build_scenario(cfg)?;
    let dir = cfg.output.dir.as_path();
    prepare_dir(dir)?;
    in_pool(cfg.threads, || -> Result<RunOutcome, HarnessError> {
        cfg.train.validate()?;
        let spec = cfg.model_spec(scenario.dim(), scenario.num_classes);
        let mut state = ServerState::new(&spec, &cfg.train)?;
        let truth = &scenario.true_cluster;
        let mut records = Vec::with_capacity(cfg.train.rounds);
        let mut ari = Vec::with_capacity(cfg.train.rounds);
        for round in 0..cfg.train.rounds {
            let sampled = sample_clients(scenario.num_clients(), &cfg.train, round)?;
            ingest_round(&mut state.partition, &sampled, &state.anchor, &scenario.train)?;
            merge_step(&mut state.partition, cfg.train.tau);
            records.push(RoundRecord {
                round,
                k_tilde: state.partition.num_clusters(),
                clustering_objective: Some(clustering_objective(&state.partition)),
                global_acc: None,
                cluster_acc: None,
            });
            ari.push(Some(compute_ari(&state.partition, truth)?.0));
        }
        let (final_ari, final_purity) = compute_ari(&state.partition, truth)?;
        let assignment: Vec<Option<usize>> =
            (0..scenario.num_clients()).map(|c| state.partition.cluster_of(c)).collect();
        write_clusters(dir, truth, &assignment)?;
        write_representations(dir, &state.partition, truth)?;
        let summary = RunSummary {
            algorithm: "cluster-only".into(),
            rounds: cfg.train.rounds,
            k_tilde: state.partition.num_clusters(),
            ari: Some(final_ari),
            purity: Some(final_purity),
            global_acc: None,
            cluster_acc: None,
        };
        finish(dir, &summary)?;
        Ok(RunOutcome {
            summary,
            records,
            ari,
            assignment,
        })
    })?
}
