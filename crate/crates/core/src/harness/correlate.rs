//! Pooling of (metric, score) pairs and per-pool correlation.
//!
//! A pool spec is a `&`-joined conjunction of terms. A bare field name
//! (`stem`, `model_type`, `model`, `song`) groups by that field, producing one
//! pool per distinct value; `field=value` filters. `overall` is the empty
//! conjunction. Examples: `stem`, `overall`, `stem=vocals&model_type=generative`,
//! `stem&model_type`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::evaluate::MetricRecord;
use super::ratings::AggregatedScore;
use super::{EntryKey, HarnessError, MetricKind};
use crate::stats::{pcc, srcc, PairedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PoolField {
    Stem,
    ModelType,
    Model,
    Song,
}

impl PoolField {
    fn name(self) -> &'static str {
        match self {
            PoolField::Stem => "stem",
            PoolField::ModelType => "model_type",
            PoolField::Model => "model",
            PoolField::Song => "song",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "stem" => Some(PoolField::Stem),
            "model_type" => Some(PoolField::ModelType),
            "model" | "model_id" => Some(PoolField::Model),
            "song" | "song_id" => Some(PoolField::Song),
            _ => None,
        }
    }

    fn value_of(self, point: &ScatterPoint) -> String {
        match self {
            PoolField::Stem => point.stem.clone(),
            PoolField::ModelType => point.model_type.clone(),
            PoolField::Model => point.model_id.clone(),
            PoolField::Song => point.song_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PoolTerm {
    GroupBy(PoolField),
    Equals(PoolField, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSpec {
    terms: Vec<PoolTerm>,
}

impl PoolSpec {
    pub fn overall() -> Self {
        Self { terms: Vec::new() }
    }
}

impl FromStr for PoolSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "overall" {
            return Ok(PoolSpec::overall());
        }
        let bad = || HarnessError::BadPoolSpec(s.to_string());
        let mut terms = Vec::new();
        for part in s.split('&').map(str::trim) {
            let term = match part.split_once('=') {
                Some((field, value)) if !value.trim().is_empty() => {
                    PoolTerm::Equals(PoolField::parse(field.trim()).ok_or_else(bad)?, value.trim().to_string())
                }
                Some(_) => return Err(bad()),
                None => PoolTerm::GroupBy(PoolField::parse(part).ok_or_else(bad)?),
            };
            terms.push(term);
        }
        Ok(PoolSpec { terms })
    }
}

impl fmt::Display for PoolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("overall");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| match t {
                PoolTerm::GroupBy(field) => field.name().to_string(),
                PoolTerm::Equals(field, v) => format!("{}={v}", field.name()),
            })
            .collect();
        f.write_str(&parts.join("&"))
    }
}

/// Parse a comma-separated list of pool specs.
pub fn parse_pool_list(s: &str) -> Result<Vec<PoolSpec>, HarnessError> {
    let specs: Vec<PoolSpec> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    if specs.is_empty() {
        return Err(HarnessError::BadPoolSpec(s.to_string()));
    }
    Ok(specs)
}

/// A joined (metric value, score) pair with the fields pools select on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub song_id: String,
    pub model_id: String,
    pub stem: String,
    pub model_type: String,
    pub metric_value: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub pool: String,
    pub metric: MetricKind,
    pub srcc: f64,
    pub pcc: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolFailure {
    pub pool: String,
    pub metric: Option<MetricKind>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct PoolData {
    pub label: String,
    pub points: BTreeMap<MetricKind, Vec<ScatterPoint>>,
}

#[derive(Debug, Clone, Default)]
pub struct CorrelationOutcome {
    /// Metrics present in the input, in column order.
    pub metrics: Vec<MetricKind>,
    pub pools: Vec<PoolData>,
    pub cells: Vec<CorrelationCell>,
    pub failures: Vec<PoolFailure>,
    /// Metric records whose key has no aggregated score.
    pub unmatched_metric_records: usize,
    /// Scored keys with no metric record at all.
    pub unmatched_scores: usize,
}

impl CorrelationOutcome {
    pub fn cell(&self, pool: &str, metric: MetricKind) -> Option<&CorrelationCell> {
        self.cells.iter().find(|c| c.pool == pool && c.metric == metric)
    }

    pub fn pool_labels(&self) -> Vec<&str> {
        self.pools.iter().map(|p| p.label.as_str()).collect()
    }
}

/// Join metric records with scores on `(song, model, stem)` and compute
/// polarity-adjusted SRCC/PCC for every (pool, metric).
pub fn correlate(
    records: &[MetricRecord],
    scores: &BTreeMap<EntryKey, AggregatedScore>,
    pools: &[PoolSpec],
) -> CorrelationOutcome {
    let mut outcome = CorrelationOutcome::default();
    let metric_set: BTreeSet<MetricKind> = records.iter().map(|r| r.metric).collect();
    outcome.metrics = metric_set.into_iter().collect();

    let mut joined: Vec<(MetricKind, ScatterPoint)> = Vec::new();
    let mut seen_keys: BTreeSet<EntryKey> = BTreeSet::new();
    for r in records {
        let key = r.key();
        match scores.get(&key) {
            Some(score) => {
                seen_keys.insert(key);
                joined.push((
                    r.metric,
                    ScatterPoint {
                        song_id: r.song_id.clone(),
                        model_id: r.model_id.clone(),
                        stem: r.stem.clone(),
                        model_type: r.model_type.to_string(),
                        metric_value: r.value,
                        score: score.mean,
                    },
                ))
            }
            None => outcome.unmatched_metric_records += 1,
        }
    }
    let record_keys: BTreeSet<EntryKey> = records.iter().map(MetricRecord::key).collect();
    outcome.unmatched_scores = scores.keys().filter(|k| !record_keys.contains(*k)).count();

    for spec in pools {
        for pool in expand(spec, &joined) {
            for &metric in &outcome.metrics {
                let points = pool.points.get(&metric).map(Vec::as_slice).unwrap_or(&[]);
                match cell_for(&pool.label, metric, points) {
                    Ok(cell) => outcome.cells.push(cell),
                    Err(reason) => outcome.failures.push(PoolFailure {
                        pool: pool.label.clone(),
                        metric: Some(metric),
                        reason,
                    }),
                }
            }
            outcome.pools.push(pool);
        }
    }
    outcome
}

fn expand(spec: &PoolSpec, joined: &[(MetricKind, ScatterPoint)]) -> Vec<PoolData> {
    let group_fields: Vec<PoolField> = spec
        .terms
        .iter()
        .filter_map(|t| match t {
            PoolTerm::GroupBy(f) => Some(*f),
            PoolTerm::Equals(..) => None,
        })
        .collect();
    let passes = |p: &ScatterPoint| {
        spec.terms.iter().all(|t| match t {
            PoolTerm::Equals(f, v) => f.value_of(p) == *v,
            PoolTerm::GroupBy(_) => true,
        })
    };

    let mut groups: BTreeMap<Vec<String>, BTreeMap<MetricKind, Vec<ScatterPoint>>> = BTreeMap::new();
    if group_fields.is_empty() {
        // filter-only specs always yield their pool, even when empty
        groups.insert(Vec::new(), BTreeMap::new());
    }
    for (metric, point) in joined.iter().filter(|(_, p)| passes(p)) {
        let values: Vec<String> = group_fields.iter().map(|f| f.value_of(point)).collect();
        groups
            .entry(values)
            .or_default()
            .entry(*metric)
            .or_default()
            .push(point.clone());
    }

    groups
        .into_iter()
        .map(|(values, points)| {
            let mut group_values = values.into_iter();
            let parts: Vec<String> = spec
                .terms
                .iter()
                .map(|t| match t {
                    PoolTerm::GroupBy(f) => format!("{}={}", f.name(), group_values.next().unwrap_or_default()),
                    PoolTerm::Equals(f, v) => format!("{}={v}", f.name()),
                })
                .collect();
            let label = if parts.is_empty() { "overall".to_string() } else { parts.join("&") };
            PoolData { label, points }
        })
        .collect()
}

fn cell_for(pool: &str, metric: MetricKind, points: &[ScatterPoint]) -> Result<CorrelationCell, String> {
    if points.len() < 3 {
        return Err(format!("EmptyPool: {} pairs (need at least 3)", points.len()));
    }
    let series = PairedSeries::new(
        points.iter().map(|p| p.metric_value).collect(),
        points.iter().map(|p| p.score).collect(),
        metric.polarity(),
    )
    .map_err(|e| e.to_string())?;
    Ok(CorrelationCell {
        pool: pool.to_string(),
        metric,
        srcc: srcc(&series).map_err(|e| e.to_string())?,
        pcc: pcc(&series).map_err(|e| e.to_string())?,
        n: points.len(),
    })
}
