//! Dataset plumbing around the metrics: manifests, ratings, embedding
//! tensors, evaluation runs, pooled correlation and report files.

mod correlate;
mod evaluate;
mod extract;
mod manifest;
mod npy;
mod ratings;
mod report;

pub use correlate::{correlate, parse_pool_list, CorrelationCell, CorrelationOutcome, PoolData, PoolFailure, PoolSpec, ScatterPoint};
pub use evaluate::{evaluate, read_metrics_csv, write_failures_csv, write_metrics_csv, EntryFailure, EvalOptions, EvalOutcome, MetricRecord};
pub use extract::{run_extract, ExtractOptions, ExtractOutcome};
pub use manifest::{load_manifest, write_manifest, ManifestEntry, ModelType};
pub use npy::{load_embedding, read_npy, sidecar_path, write_embedding, write_npy, NpyDtype, NpyTensor};
pub use ratings::{aggregate_ratings, load_ratings, AggregatedScore, Aggregation, RatingRecord, RatingScale, DEFAULT_MAX_VIOLATIONS};
pub use report::{read_cells_csv, render_table, write_report, ReportSummary};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbedError;
use crate::stats::Polarity;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("{path}: missing required column '{column}'")]
    MissingColumn { path: PathBuf, column: String },
    #[error("line {line}: duplicate entry {key}")]
    DuplicateKey { line: usize, key: EntryKey },
    #[error("ratings mix scales {0} and {1}")]
    MixedScales(RatingScale, RatingScale),
    #[error("no metrics selected")]
    NoMetricsSelected,
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
    #[error("invalid pool spec '{0}'")]
    BadPoolSpec(String),
    #[error("{path}: not an NPY file")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported dtype {dtype}")]
    UnsupportedDtype { path: PathBuf, dtype: String },
    #[error("{path}: tensor contains non-finite values")]
    NonFinite { path: PathBuf },
    #[error("{path}: {message}")]
    BadTensor { path: PathBuf, message: String },
    #[error("bridge: {0}")]
    Bridge(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl fmt::Display) -> Self {
        HarnessError::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }
}

/// `(song, model, stem)`, the join key shared by metrics and ratings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryKey {
    pub song_id: String,
    pub model_id: String,
    pub stem: String,
}

impl EntryKey {
    pub fn new(song_id: impl Into<String>, model_id: impl Into<String>, stem: impl Into<String>) -> Self {
        Self {
            song_id: song_id.into(),
            model_id: model_id.into(),
            stem: stem.into(),
        }
    }
}

impl fmt::Display for EntryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.song_id, self.model_id, self.stem)
    }
}

/// The registered metric set, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "mse-mert")]
    MseMert,
    #[serde(rename = "fad-s2s")]
    FadSong2Song,
    #[serde(rename = "sdr")]
    Sdr,
    #[serde(rename = "si-sdr")]
    SiSdr,
    #[serde(rename = "si-sar")]
    SiSar,
    #[serde(rename = "si-sir")]
    SiSir,
    #[serde(rename = "mse-spec")]
    MseSpec,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::MseMert,
        MetricKind::FadSong2Song,
        MetricKind::Sdr,
        MetricKind::SiSdr,
        MetricKind::SiSar,
        MetricKind::SiSir,
        MetricKind::MseSpec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::MseMert => "mse-mert",
            MetricKind::FadSong2Song => "fad-s2s",
            MetricKind::Sdr => "sdr",
            MetricKind::SiSdr => "si-sdr",
            MetricKind::SiSar => "si-sar",
            MetricKind::SiSir => "si-sir",
            MetricKind::MseSpec => "mse-spec",
        }
    }

    /// Column heading in the aligned text table.
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::MseMert => "MSE_MERT",
            MetricKind::FadSong2Song => "FAD_song2song",
            MetricKind::Sdr => "SDR",
            MetricKind::SiSdr => "SI-SDR",
            MetricKind::SiSar => "SI-SAR",
            MetricKind::SiSir => "SI-SIR",
            MetricKind::MseSpec => "MSE_spec",
        }
    }

    pub fn polarity(self) -> Polarity {
        match self {
            MetricKind::MseMert | MetricKind::FadSong2Song | MetricKind::MseSpec => Polarity::LowerIsBetter,
            _ => Polarity::HigherIsBetter,
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, MetricKind::MseMert | MetricKind::FadSong2Song)
    }

    /// Parse a comma-separated list; `all` selects every metric.
    pub fn parse_list(s: &str) -> Result<Vec<MetricKind>, HarnessError> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                for m in MetricKind::ALL {
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
                continue;
            }
            let m: MetricKind = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(HarnessError::NoMetricsSelected);
        }
        Ok(out)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::UnknownMetric(s.to_string()))
    }
}
