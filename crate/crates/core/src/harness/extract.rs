//! Driving the external embedding extractor.
//!
//! The bridge is run once per batch as
//!
//! ```text
//! <bridge-cmd> --input-list <out-dir>/inputs.tsv --out-dir <out-dir> \
//!     --layer 12 --sample-rate 24000 --chunk-seconds 5
//! ```
//!
//! Each line of `inputs.tsv` is `<wav path>\t<output name>`, and the bridge
//! must write `<out-dir>/<output name>.npy` with its JSON sidecar. On failure
//! it may leave `<out-dir>/errors.json`, an array of `{"name", "error"}`
//! objects; those messages are attached to the affected entries.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;

use super::evaluate::EntryFailure;
use super::manifest::ManifestEntry;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOptions {
    pub layer: u32,
    pub sample_rate: u32,
    pub chunk_seconds: u32,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            layer: 12,
            sample_rate: 24_000,
            chunk_seconds: 5,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExtractOutcome {
    /// Input entries with embedding paths filled in where extraction succeeded.
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<EntryFailure>,
}

#[derive(Deserialize)]
struct BridgeError {
    name: String,
    error: String,
}

/// Names are stable across runs so repeated extraction overwrites in place.
fn output_names(entries: &[ManifestEntry]) -> BTreeMap<PathBuf, String> {
    let mut names = BTreeMap::new();
    for e in entries {
        names
            .entry(e.target_audio.clone())
            .or_insert_with(|| format!("{}__{}__target", e.song_id, e.stem));
        names
            .entry(e.estimate_audio.clone())
            .or_insert_with(|| format!("{}__{}__{}__estimate", e.song_id, e.model_id, e.stem));
    }
    names
}

/// `bridge_cmd` is split on whitespace, so `"python3 bridge.py"` works.
pub fn run_extract(
    entries: &[ManifestEntry],
    bridge_cmd: &str,
    out_dir: impl AsRef<Path>,
    options: &ExtractOptions,
) -> Result<ExtractOutcome, HarnessError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let names = output_names(entries);

    let list_path = out_dir.join("inputs.tsv");
    let mut list = String::new();
    for (wav, name) in &names {
        let _ = writeln!(list, "{}\t{name}", wav.display());
    }
    std::fs::write(&list_path, list).map_err(|e| HarnessError::io(&list_path, e))?;

    let mut words = bridge_cmd.split_whitespace();
    let program = words.next().ok_or_else(|| HarnessError::Bridge("empty bridge command".into()))?;
    let output = Command::new(program)
        .args(words)
        .arg("--input-list")
        .arg(&list_path)
        .arg("--out-dir")
        .arg(out_dir)
        .args(["--layer", &options.layer.to_string()])
        .args(["--sample-rate", &options.sample_rate.to_string()])
        .args(["--chunk-seconds", &options.chunk_seconds.to_string()])
        .output()
        .map_err(|e| HarnessError::Bridge(format!("could not run '{program}': {e}")))?;
    let stderr = String::from_utf8_lossy(&output.stderr);
    if !output.status.success() {
        log::warn!("bridge exited with {}: {}", output.status, stderr.trim());
    }

    let errors_path = out_dir.join("errors.json");
    let bridge_errors: HashMap<String, String> = std::fs::read(&errors_path)
        .ok()
        .and_then(|bytes| serde_json::from_slice::<Vec<BridgeError>>(&bytes).ok())
        .map(|v| v.into_iter().map(|e| (e.name, e.error)).collect())
        .unwrap_or_default();

    let produced = |wav: &Path| -> Result<PathBuf, String> {
        let name = &names[wav];
        let npy = out_dir.join(format!("{name}.npy"));
        if npy.exists() {
            return Ok(npy);
        }
        Err(match bridge_errors.get(name) {
            Some(msg) => format!("{name}: {msg}"),
            None if !output.status.success() => format!("{name}: bridge failed ({})", output.status),
            None => format!("{name}: bridge produced no output"),
        })
    };

    let mut outcome = ExtractOutcome::default();
    for entry in entries {
        let mut updated = entry.clone();
        let mut problems = Vec::new();
        match produced(&entry.target_audio) {
            Ok(p) => updated.target_embedding = Some(p),
            Err(msg) => problems.push(msg),
        }
        match produced(&entry.estimate_audio) {
            Ok(p) => updated.estimate_embedding = Some(p),
            Err(msg) => problems.push(msg),
        }
        if !problems.is_empty() {
            outcome.failures.push(EntryFailure {
                song_id: entry.song_id.clone(),
                model_id: entry.model_id.clone(),
                stem: entry.stem.clone(),
                metric: None,
                message: problems.join("; "),
            });
        }
        outcome.entries.push(updated);
    }
    Ok(outcome)
}
