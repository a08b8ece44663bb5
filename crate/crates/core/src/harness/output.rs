use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use super::HarnessError;

pub const METRICS_HEADER: &str = "round,k_tilde,clustering_objective,global_acc,cluster_acc,ari,wall_ms";
pub const CLUSTERS_HEADER: &str = "client_id,true_cluster,assigned_cluster";

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub(crate) fn opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Accumulates CSV text; rows are LF-terminated.
pub(crate) struct Csv {
    text: String,
}

impl Csv {
    pub(crate) fn new(header: &str) -> Self {
        let mut text = String::with_capacity(4096);
        text.push_str(header);
        text.push('\n');
        Csv { text }
    }

    pub(crate) fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for (i, cell) in cells.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(cell.as_ref());
        }
        self.text.push('\n');
    }

    pub(crate) fn write(&self, path: &Path) -> Result<(), HarnessError> {
        write_file(path, &self.text)
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn representations_header(dim: usize) -> String {
    let mut h = String::from("client_id,true_cluster,assigned_cluster");
    for i in 0..dim {
        let _ = write!(h, ",v{i}");
    }
    h
}

/// The one-line result of a run, e.g.
/// `summary algorithm=stocfl rounds=50 k_tilde=4 ari=1.0000000000000000e0 purity=… global_acc=… cluster_acc=…`.
/// Values that do not apply are written as `NA`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: String,
    pub rounds: usize,
    pub k_tilde: usize,
    pub ari: Option<f64>,
    pub purity: Option<f64>,
    pub global_acc: Option<f64>,
    pub cluster_acc: Option<f64>,
}

fn na(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_else(|| "NA".into())
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "summary algorithm={} rounds={} k_tilde={} ari={} purity={} global_acc={} cluster_acc={}",
            self.algorithm,
            self.rounds,
            self.k_tilde,
            na(self.ari),
            na(self.purity),
            na(self.global_acc),
            na(self.cluster_acc)
        )
    }
}

impl FromStr for RunSummary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut it = s.split_whitespace();
        if it.next() != Some("summary") {
            return Err("summary line must start with `summary`".into());
        }
        let mut fields = std::collections::BTreeMap::new();
        for tok in it {
            let (k, v) = tok.split_once('=').ok_or_else(|| format!("bad field `{tok}`"))?;
            fields.insert(k, v);
        }
        let field = |k: &str| fields.get(k).copied().ok_or_else(|| format!("missing `{k}`"));
        let float = |k: &str| -> Result<Option<f64>, String> {
            match field(k)? {
                "NA" => Ok(None),
                v => v.parse().map(Some).map_err(|e| format!("{k}: {e}")),
            }
        };
        Ok(RunSummary {
            algorithm: field("algorithm")?.to_string(),
            rounds: field("rounds")?.parse().map_err(|e| format!("rounds: {e}"))?,
            k_tilde: field("k_tilde")?.parse().map_err(|e| format!("k_tilde: {e}"))?,
            ari: float("ari")?,
            purity: float("purity")?,
            global_acc: float("global_acc")?,
            cluster_acc: float("cluster_acc")?,
        })
    }
}
