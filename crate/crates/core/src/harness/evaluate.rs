use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{ManifestEntry, ModelType};
use super::npy::load_embedding;
use super::{EntryKey, HarnessError, MetricKind};
use crate::bss::{self, DEFAULT_SDR_TAPS};
use crate::dsp::{self, AudioClip, StftConfig};
use crate::embed::{self, EmbeddingMatrix};
use crate::stats::Polarity;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub metrics: Vec<MetricKind>,
    pub workers: usize,
    pub sdr_taps: usize,
    pub stft: StftConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            metrics: MetricKind::ALL.to_vec(),
            workers: 1,
            sdr_taps: DEFAULT_SDR_TAPS,
            stft: StftConfig::default(),
        }
    }
}

/// One metric value for one manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub song_id: String,
    pub model_id: String,
    pub stem: String,
    pub model_type: ModelType,
    pub metric: MetricKind,
    pub value: f64,
    pub polarity: Polarity,
    pub capped: bool,
}

impl MetricRecord {
    pub fn key(&self) -> EntryKey {
        EntryKey::new(&self.song_id, &self.model_id, &self.stem)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub song_id: String,
    pub model_id: String,
    pub stem: String,
    /// Empty when the failure is not tied to one metric.
    pub metric: Option<MetricKind>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct EvalOutcome {
    /// Sorted by key, then metric column order.
    pub records: Vec<MetricRecord>,
    pub failures: Vec<EntryFailure>,
}

/// Compute every requested metric for every entry.
///
/// Failures are isolated per (entry, metric); the run always completes.
/// Output order does not depend on `workers` or on manifest row order.
pub fn evaluate(entries: &[ManifestEntry], options: &EvalOptions) -> Result<EvalOutcome, HarnessError> {
    if options.metrics.is_empty() {
        return Err(HarnessError::NoMetricsSelected);
    }
    let mut song_stems: BTreeMap<&str, BTreeMap<&str, &Path>> = BTreeMap::new();
    for e in entries {
        song_stems
            .entry(e.song_id.as_str())
            .or_default()
            .entry(e.stem.as_str())
            .or_insert(e.target_audio.as_path());
    }

    let job = |entry: &ManifestEntry| {
        let references = reference_paths(entry, &song_stems[entry.song_id.as_str()]);
        evaluate_entry(entry, &references, options)
    };
    let results: Vec<(Vec<MetricRecord>, Vec<EntryFailure>)> = run_jobs(entries, options.workers, job);

    let mut outcome = EvalOutcome::default();
    for (records, failures) in results {
        outcome.records.extend(records);
        outcome.failures.extend(failures);
    }
    outcome
        .records
        .sort_by(|a, b| (a.key(), a.metric).cmp(&(b.key(), b.metric)));
    outcome.failures.sort_by(|a, b| {
        (&a.song_id, &a.model_id, &a.stem, a.metric).cmp(&(&b.song_id, &b.model_id, &b.stem, b.metric))
    });
    Ok(outcome)
}

#[cfg(feature = "parallel")]
fn run_jobs<T, F>(entries: &[ManifestEntry], workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(&ManifestEntry) -> T + Sync,
{
    use rayon::prelude::*;
    if workers <= 1 {
        return entries.iter().map(job).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| entries.par_iter().map(&job).collect()),
        Err(err) => {
            log::warn!("could not start {workers} workers ({err}); running sequentially");
            entries.iter().map(job).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<T, F>(entries: &[ManifestEntry], _workers: usize, job: F) -> Vec<T>
where
    F: Fn(&ManifestEntry) -> T,
{
    entries.iter().map(job).collect()
}

/// Target first, then the song's other stems (by stem name), then any
/// explicit interferers.
fn reference_paths(entry: &ManifestEntry, stems: &BTreeMap<&str, &Path>) -> Vec<PathBuf> {
    let mut refs = vec![entry.target_audio.clone()];
    let others = stems
        .iter()
        .filter(|(stem, _)| **stem != entry.stem)
        .map(|(_, p)| p.to_path_buf());
    for p in others.chain(entry.interferers.iter().cloned()) {
        if !refs.contains(&p) {
            refs.push(p);
        }
    }
    refs
}

fn load_audio(path: &Path) -> Result<AudioClip, String> {
    if !path.exists() {
        return Err(format!("FileMissing: {}", path.display()));
    }
    dsp::decode_wav(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_emb(path: Option<&Path>, role: &str) -> Result<EmbeddingMatrix, String> {
    let path = path.ok_or_else(|| format!("no {role} embedding path in manifest"))?;
    if !path.exists() {
        return Err(format!("FileMissing: {}", path.display()));
    }
    load_embedding(path).map_err(|e| e.to_string())
}

struct Value {
    value: f64,
    capped: bool,
}

impl From<bss::DbValue> for Value {
    fn from(v: bss::DbValue) -> Self {
        Value {
            value: v.value,
            capped: v.capped,
        }
    }
}

impl From<f64> for Value {
    fn from(value: f64) -> Self {
        Value { value, capped: false }
    }
}

fn evaluate_entry(
    entry: &ManifestEntry,
    references: &[PathBuf],
    options: &EvalOptions,
) -> (Vec<MetricRecord>, Vec<EntryFailure>) {
    let wants = |m: MetricKind| options.metrics.contains(&m);
    let needs_audio = options.metrics.iter().any(|m| !m.needs_embeddings());
    let needs_embeddings = options.metrics.iter().any(|m| m.needs_embeddings());

    let audio = needs_audio.then(|| -> Result<(AudioClip, AudioClip), String> {
        Ok((load_audio(&entry.target_audio)?, load_audio(&entry.estimate_audio)?))
    });
    let embeddings = needs_embeddings.then(|| -> Result<(EmbeddingMatrix, EmbeddingMatrix), String> {
        Ok((
            load_emb(entry.target_embedding.as_deref(), "target")?,
            load_emb(entry.estimate_embedding.as_deref(), "estimate")?,
        ))
    });
    let decomposition = (wants(MetricKind::SiSar) || wants(MetricKind::SiSir)).then(|| {
        let (_, estimate) = audio.as_ref().expect("audio requested").as_ref().map_err(Clone::clone)?;
        let mut clips = Vec::with_capacity(references.len());
        for p in references {
            clips.push(load_audio(p)?);
        }
        let refs: Vec<&AudioClip> = clips.iter().collect();
        bss::si_decompose(estimate, &refs, 0).map_err(|e| e.to_string())
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &metric in &options.metrics {
        let result: Result<Value, String> = match metric {
            MetricKind::MseMert | MetricKind::FadSong2Song => {
                let pair = embeddings.as_ref().expect("embeddings requested");
                pair.as_ref().map_err(Clone::clone).and_then(|(t, e)| {
                    let v = if metric == MetricKind::MseMert {
                        embed::mse_mert(t, e)
                    } else {
                        embed::fad_song2song(t, e)
                    };
                    v.map(Value::from).map_err(|err| err.to_string())
                })
            }
            MetricKind::SiSar | MetricKind::SiSir => decomposition
                .as_ref()
                .expect("decomposition requested")
                .as_ref()
                .map_err(Clone::clone)
                .map(|d| {
                    if metric == MetricKind::SiSar {
                        bss::si_sar(d).into()
                    } else {
                        bss::si_sir(d).into()
                    }
                }),
            MetricKind::Sdr | MetricKind::SiSdr | MetricKind::MseSpec => {
                let pair = audio.as_ref().expect("audio requested");
                pair.as_ref().map_err(Clone::clone).and_then(|(t, e)| match metric {
                    MetricKind::Sdr => bss::sdr(t, e, options.sdr_taps).map(Value::from).map_err(|err| err.to_string()),
                    MetricKind::SiSdr => bss::si_sdr(t, e).map(Value::from).map_err(|err| err.to_string()),
                    _ => dsp::mse_spec(t, e, options.stft)
                        .map(Value::from)
                        .map_err(|err| err.to_string()),
                })
            }
        };
        match result {
            Ok(v) => records.push(MetricRecord {
                song_id: entry.song_id.clone(),
                model_id: entry.model_id.clone(),
                stem: entry.stem.clone(),
                model_type: entry.model_type,
                metric,
                value: v.value,
                polarity: metric.polarity(),
                capped: v.capped,
            }),
            Err(message) => {
                log::debug!("{} {metric}: {message}", entry.key());
                failures.push(EntryFailure {
                    song_id: entry.song_id.clone(),
                    model_id: entry.model_id.clone(),
                    stem: entry.stem.clone(),
                    metric: Some(metric),
                    message,
                })
            }
        }
    }
    (records, failures)
}

pub fn write_metrics_csv(path: impl AsRef<Path>, records: &[MetricRecord]) -> Result<(), HarnessError> {
    write_rows(path.as_ref(), records)
}

pub fn write_failures_csv(path: impl AsRef<Path>, failures: &[EntryFailure]) -> Result<(), HarnessError> {
    write_rows(path.as_ref(), failures)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let wrap = |e: csv::Error| HarnessError::parse(path.display().to_string(), e);
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricRecord>, HarnessError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::parse(path.display().to_string(), e))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| HarnessError::parse(format!("{}:{}", path.display(), i + 2), e)))
        .collect()
}
