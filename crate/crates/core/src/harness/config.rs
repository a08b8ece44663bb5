//! Flat `section.key = value` experiment files.
//!
//! ```text
//! # shifted scenario, StoCFL
//! experiment.seed = 3
//! scenario.kind = shifted
//! scenario.shifts = 0,3,6,9
//! algorithm.kind = stocfl
//! train.rounds = 50
//! output.dir = runs/shifted
//! ```
//!
//! `#` starts a comment. Every key may appear at most once; unknown keys are
//! rejected. Anything not given takes the default listed in [`KEYS`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::ConfigError;
use crate::datagen::ScenarioKind;
use crate::fedcore::{AnchorChoice, BaselineKind, BatchSize, Sampling, TrainConfig, Weighting};
use crate::numkernel::ModelSpec;

/// Every accepted key with its default (empty = no default / derived).
pub const KEYS: &[(&str, &str)] = &[
    ("experiment.seed", "0"),
    ("scenario.kind", ""),
    ("scenario.num_classes", "10"),
    ("scenario.dim", "20"),
    ("scenario.class_separation", "8"),
    ("scenario.samples_per_client", "50"),
    ("scenario.test_samples_per_client", "10"),
    ("scenario.clients_per_cluster", "20"),
    ("scenario.shifts", "0,3,6,9"),
    ("scenario.num_rotations", "4"),
    ("scenario.label_groups", ""),
    ("scenario.idx_images", ""),
    ("scenario.idx_labels", ""),
    ("scenario.idx_images_b", ""),
    ("scenario.idx_labels_b", ""),
    ("model.hidden", ""),
    ("algorithm.kind", ""),
    ("train.eta", "0.1"),
    ("train.lambda", "0.05"),
    ("train.tau", "0.5"),
    ("train.rounds", "50"),
    ("train.sample_rate", "0.1"),
    ("train.sample_size", ""),
    ("train.local_epochs", "5"),
    ("train.batch_size", "full"),
    ("train.weighting", "samples"),
    ("train.anchor", "initial"),
    ("train.ifca_models", "4"),
    ("train.threads", "0"),
    ("output.dir", "out"),
    ("output.dump_representations", "true"),
    ("output.timing", "false"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Stocfl,
    Baseline(BaselineKind),
}

impl AlgorithmKind {
    /// Whether the algorithm produces a client clustering worth scoring.
    pub fn clusters_clients(self) -> bool {
        matches!(self, AlgorithmKind::Stocfl | AlgorithmKind::Baseline(BaselineKind::Ifca))
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmKind::Stocfl => f.write_str("stocfl"),
            AlgorithmKind::Baseline(b) => b.fmt(f),
        }
    }
}

impl FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stocfl" {
            return Ok(AlgorithmKind::Stocfl);
        }
        s.parse::<BaselineKind>()
            .map(AlgorithmKind::Baseline)
            .map_err(|_| format!("expected one of stocfl, fedavg, fedprox, ditto, ifca; got `{s}`"))
    }
}

/// Where the base samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        num_classes: usize,
        dim: usize,
        class_separation: f64,
    },
    /// IDX image/label files; the `_b` pair is the second domain of a hybrid scenario.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        second: Option<(PathBuf, PathBuf)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub source: DataSource,
    pub samples_per_client: usize,
    pub test_samples_per_client: usize,
    /// Clients per ground-truth cluster; the client count for `iid`.
    pub clients_per_cluster: usize,
    pub shifts: Vec<i64>,
    pub num_rotations: usize,
    /// Empty means "split the classes into two contiguous halves".
    pub label_groups: Vec<Vec<usize>>,
}

impl ScenarioConfig {
    pub fn num_clusters(&self) -> usize {
        match self.kind {
            ScenarioKind::Iid => 1,
            ScenarioKind::Hybrid => 2,
            ScenarioKind::Rotated => self.num_rotations,
            ScenarioKind::Shifted => self.shifts.len(),
            ScenarioKind::Pathological => self.label_groups.len().max(2),
        }
    }

    pub fn num_clients(&self) -> usize {
        self.num_clusters() * self.clients_per_cluster
    }

    pub fn test_fraction(&self) -> f64 {
        self.test_samples_per_client as f64 / (self.samples_per_client + self.test_samples_per_client) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub dump_representations: bool,
    /// Record real wall-clock times. Off by default so that repeated runs
    /// produce byte-identical metrics.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub hidden: Vec<usize>,
    pub algorithm: AlgorithmKind,
    pub train: TrainConfig<f64>,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn model_spec(&self, input_dim: usize, num_classes: usize) -> ModelSpec {
        if self.hidden.is_empty() {
            ModelSpec::logistic(input_dim, num_classes)
        } else {
            ModelSpec::mlp(input_dim, self.hidden.clone(), num_classes)
        }
    }

    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw = tokenize(text)?;
    let v = Values { raw: &raw };

    let kind: ScenarioKind = v.parse("scenario.kind")?;
    let num_classes: usize = v.parse("scenario.num_classes")?;
    if num_classes < 2 {
        return Err(ConfigError::invalid("scenario.num_classes", "must be at least 2"));
    }

    let source = match (v.get("scenario.idx_images"), v.get("scenario.idx_labels")) {
        (Some(images), Some(labels)) => {
            let second = match (v.get("scenario.idx_images_b"), v.get("scenario.idx_labels_b")) {
                (Some(i), Some(l)) => Some((PathBuf::from(i), PathBuf::from(l))),
                (None, None) => None,
                (Some(_), None) => return Err(ConfigError::invalid("scenario.idx_labels_b", "required with idx_images_b")),
                (None, Some(_)) => return Err(ConfigError::invalid("scenario.idx_images_b", "required with idx_labels_b")),
            };
            if kind == ScenarioKind::Hybrid && second.is_none() {
                return Err(ConfigError::invalid("scenario.idx_images_b", "hybrid IDX scenarios need a second domain"));
            }
            DataSource::Idx {
                images: images.into(),
                labels: labels.into(),
                second,
            }
        }
        (None, None) => {
            let dim: usize = v.parse("scenario.dim")?;
            if dim < 2 {
                return Err(ConfigError::invalid("scenario.dim", "must be at least 2"));
            }
            let class_separation: f64 = v.parse("scenario.class_separation")?;
            if !(class_separation > 0.0 && class_separation.is_finite()) {
                return Err(ConfigError::invalid("scenario.class_separation", "must be positive"));
            }
            DataSource::Synthetic {
                num_classes,
                dim,
                class_separation,
            }
        }
        (Some(_), None) => return Err(ConfigError::invalid("scenario.idx_labels", "required with idx_images")),
        (None, Some(_)) => return Err(ConfigError::invalid("scenario.idx_images", "required with idx_labels")),
    };

    let samples_per_client = v.positive("scenario.samples_per_client")?;
    let test_samples_per_client = v.positive("scenario.test_samples_per_client")?;
    let clients_per_cluster = v.positive("scenario.clients_per_cluster")?;
    let shifts = v.list::<i64>("scenario.shifts")?;
    if shifts.is_empty() {
        return Err(ConfigError::invalid("scenario.shifts", "need at least one shift"));
    }
    let num_rotations: usize = v.parse("scenario.num_rotations")?;
    if kind == ScenarioKind::Rotated && num_rotations < 2 {
        return Err(ConfigError::invalid("scenario.num_rotations", "must be at least 2"));
    }
    let label_groups = match v.get("scenario.label_groups") {
        Some(s) => parse_groups(s).map_err(|m| ConfigError::invalid("scenario.label_groups", m))?,
        None => {
            let half = num_classes / 2;
            vec![(0..half).collect(), (half..num_classes).collect()]
        }
    };
    if label_groups.iter().flatten().any(|&y| y >= num_classes) {
        return Err(ConfigError::invalid("scenario.label_groups", "label outside [0, num_classes)"));
    }

    let hidden = match v.get("model.hidden") {
        None | Some("none") => Vec::new(),
        Some(_) => v.list::<usize>("model.hidden")?,
    };
    if hidden.contains(&0) {
        return Err(ConfigError::invalid("model.hidden", "layer widths must be positive"));
    }

    let algorithm: AlgorithmKind = v.parse("algorithm.kind")?;
    let train = parse_train(&v)?;
    let threads: usize = v.parse("train.threads")?;

    let output = OutputConfig {
        dir: PathBuf::from(v.get("output.dir").unwrap_or("out")),
        dump_representations: v.parse("output.dump_representations")?,
        timing: v.parse("output.timing")?,
    };

    Ok(ExperimentConfig {
        seed: train.seed,
        scenario: ScenarioConfig {
            kind,
            source,
            samples_per_client,
            test_samples_per_client,
            clients_per_cluster,
            shifts,
            num_rotations,
            label_groups,
        },
        hidden,
        algorithm,
        train,
        threads,
        output,
    })
}

fn parse_train(v: &Values<'_>) -> Result<TrainConfig<f64>, ConfigError> {
    let eta: f64 = v.parse("train.eta")?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(ConfigError::invalid("train.eta", "must be positive"));
    }
    let lambda: f64 = v.parse("train.lambda")?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ConfigError::invalid("train.lambda", "must be non-negative"));
    }
    let tau: f64 = v.parse("train.tau")?;
    if !tau.is_finite() {
        return Err(ConfigError::invalid("train.tau", "must be finite"));
    }
    let sampling = match (v.raw.contains_key("train.sample_rate"), v.get("train.sample_size")) {
        (true, Some(_)) => {
            return Err(ConfigError::invalid("train.sample_size", "conflicts with train.sample_rate"));
        }
        (_, Some(_)) => Sampling::Count(v.positive("train.sample_size")?),
        (_, None) => {
            let r: f64 = v.parse("train.sample_rate")?;
            if !(r > 0.0 && r <= 1.0) {
                return Err(ConfigError::invalid("train.sample_rate", "must lie in (0, 1]"));
            }
            Sampling::Rate(r)
        }
    };
    let batch = match v.get("train.batch_size") {
        None | Some("full") => BatchSize::Full,
        Some(_) => BatchSize::Size(v.positive("train.batch_size")?),
    };
    let weighting = match v.get("train.weighting").unwrap_or("samples") {
        "samples" => Weighting::SampleCount,
        "equal" => Weighting::Equal,
        other => {
            return Err(ConfigError::invalid(
                "train.weighting",
                format!("expected `samples` or `equal`, got `{other}`"),
            ))
        }
    };
    let anchor = match v.get("train.anchor") {
        None | Some("initial") => AnchorChoice::InitialGlobal,
        Some(_) => AnchorChoice::Seed(v.parse("train.anchor")?),
    };
    Ok(TrainConfig {
        eta,
        lambda,
        tau,
        rounds: v.positive("train.rounds")?,
        sampling,
        local_epochs: v.positive("train.local_epochs")?,
        batch,
        seed: v.parse("experiment.seed")?,
        weighting,
        anchor,
        ifca_models: v.positive("train.ifca_models")?,
    })
}

fn tokenize(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut raw = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: line_no,
                msg: format!("expected `section.key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey {
                line: line_no,
                key: key.to_string(),
            });
        }
        if raw.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
            return Err(ConfigError::Duplicate {
                line: line_no,
                key: key.to_string(),
            });
        }
    }
    Ok(raw)
}

/// Typed access to the raw values with key-naming errors.
struct Values<'a> {
    raw: &'a BTreeMap<String, (usize, String)>,
}

impl<'a> Values<'a> {
    /// Explicit value, if any. Empty values count as unset.
    fn get(&self, key: &str) -> Option<&'a str> {
        self.raw.get(key).map(|(_, v)| v.as_str()).filter(|v| !v.is_empty())
    }

    fn text(&self, key: &'static str) -> Result<&'a str, ConfigError> {
        if let Some(v) = self.get(key) {
            return Ok(v);
        }
        match KEYS.iter().find(|(k, _)| *k == key) {
            Some((_, d)) if !d.is_empty() => Ok(d),
            _ => Err(ConfigError::Missing(key)),
        }
    }

    fn parse<V: FromStr>(&self, key: &'static str) -> Result<V, ConfigError>
    where
        V::Err: fmt::Display,
    {
        let s = self.text(key)?;
        s.parse().map_err(|e| ConfigError::invalid(key, format!("`{s}`: {e}")))
    }

    fn positive(&self, key: &'static str) -> Result<usize, ConfigError> {
        match self.parse::<usize>(key)? {
            0 => Err(ConfigError::invalid(key, "must be at least 1")),
            n => Ok(n),
        }
    }

    fn list<V: FromStr>(&self, key: &'static str) -> Result<Vec<V>, ConfigError>
    where
        V::Err: fmt::Display,
    {
        self.text(key)?
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse().map_err(|e| ConfigError::invalid(key, format!("`{s}`: {e}")))
            })
            .collect()
    }
}

/// `"0,1,2;3,4"` -> `[[0,1,2],[3,4]]`.
fn parse_groups(s: &str) -> Result<Vec<Vec<usize>>, String> {
    let groups = s
        .split(';')
        .map(|g| {
            g.split(',')
                .map(|y| y.trim().parse::<usize>().map_err(|e| format!("`{}`: {e}", y.trim())))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    if groups.len() < 2 {
        return Err("need at least two groups".into());
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_whitespace() {
        let cfg = parse_config_str("  # header\nscenario.kind=rotated # trailing\n\nalgorithm.kind =  ifca\n").unwrap();
        assert_eq!(cfg.scenario.kind, ScenarioKind::Rotated);
        assert_eq!(cfg.algorithm, AlgorithmKind::Baseline(BaselineKind::Ifca));
    }

    #[test]
    fn groups() {
        assert_eq!(parse_groups("0,1;2").unwrap(), vec![vec![0, 1], vec![2]]);
        assert!(parse_groups("0,1").is_err());
        assert!(parse_groups("0,x;1").is_err());
    }

    #[test]
    fn every_default_parses() {
        let mut text = String::new();
        for (k, d) in KEYS {
            if !d.is_empty() && *k != "train.sample_size" {
                text.push_str(&format!("{k} = {d}\n"));
            }
        }
        text.push_str("scenario.kind = iid\nalgorithm.kind = fedavg\n");
        let explicit = parse_config_str(&text).unwrap();
        let implicit = parse_config_str("scenario.kind = iid\nalgorithm.kind = fedavg\n").unwrap();
        assert_eq!(explicit, implicit);
    }
}
