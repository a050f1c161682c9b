//! Manifest files: one row per separated clip.
//!
//! CSV header (optional columns may be omitted entirely):
//!
//! ```text
//! song_id,model_id,stem,model_type,target_audio,estimate_audio[,target_embedding,estimate_embedding,interferers]
//! ```
//!
//! `interferers` is a `;`-separated list of extra reference stems. Relative
//! paths resolve against the manifest's directory. A `.json` manifest holds
//! an array of objects with the same field names (`interferers` as an array).

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EntryKey, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelType {
    Discriminative,
    Generative,
    Oracle,
}

impl ModelType {
    pub fn name(self) -> &'static str {
        match self {
            ModelType::Discriminative => "discriminative",
            ModelType::Generative => "generative",
            ModelType::Oracle => "oracle",
        }
    }
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "discriminative" => Ok(ModelType::Discriminative),
            "generative" => Ok(ModelType::Generative),
            "oracle" => Ok(ModelType::Oracle),
            other => Err(format!("unknown model type '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub song_id: String,
    pub model_id: String,
    pub stem: String,
    pub model_type: ModelType,
    pub target_audio: PathBuf,
    pub estimate_audio: PathBuf,
    #[serde(default)]
    pub target_embedding: Option<PathBuf>,
    #[serde(default)]
    pub estimate_embedding: Option<PathBuf>,
    #[serde(default)]
    pub interferers: Vec<PathBuf>,
}

impl ManifestEntry {
    pub fn key(&self) -> EntryKey {
        EntryKey::new(&self.song_id, &self.model_id, &self.stem)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.target_audio);
        fix(&mut self.estimate_audio);
        if let Some(p) = self.target_embedding.as_mut() {
            fix(p);
        }
        if let Some(p) = self.estimate_embedding.as_mut() {
            fix(p);
        }
        self.interferers.iter_mut().for_each(fix);
    }
}

const REQUIRED: [&str; 6] = ["song_id", "model_id", "stem", "model_type", "target_audio", "estimate_audio"];

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>, HarnessError> {
    let path = path.as_ref();
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let raw = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut entries = if is_json {
        serde_json::from_str::<Vec<ManifestEntry>>(&raw).map_err(|e| HarnessError::parse(path.display().to_string(), e))?
    } else {
        parse_csv(path, &raw)?
    };

    let mut seen: HashMap<EntryKey, usize> = HashMap::new();
    for (i, entry) in entries.iter().enumerate() {
        // CSV data starts on line 2; JSON reports 1-based element index
        let line = if is_json { i + 1 } else { i + 2 };
        if seen.insert(entry.key(), line).is_some() {
            return Err(HarnessError::DuplicateKey { line, key: entry.key() });
        }
    }

    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for entry in &mut entries {
        entry.resolve(base);
    }
    Ok(entries)
}

fn parse_csv(path: &Path, raw: &str) -> Result<Vec<ManifestEntry>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(raw.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| HarnessError::parse(path.display().to_string(), e))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    for name in REQUIRED {
        if column(name).is_none() {
            return Err(HarnessError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            });
        }
    }
    let idx = |name: &str| column(name).expect("checked above");
    let opt_idx = |name: &str| column(name);
    let (target_emb, estimate_emb, interferers) =
        (opt_idx("target_embedding"), opt_idx("estimate_embedding"), opt_idx("interferers"));

    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let location = format!("{}:{line}", path.display());
        let record = record.map_err(|e| HarnessError::parse(&location, e))?;
        let field = |j: usize| record.get(j).unwrap_or("").to_string();
        let optional_path = |j: Option<usize>| {
            j.map(&field)
                .filter(|s| !s.is_empty())
                .map(PathBuf::from)
        };
        let required = |name: &str| -> Result<String, HarnessError> {
            let v = field(idx(name));
            if v.is_empty() {
                Err(HarnessError::parse(&location, format!("empty '{name}'")))
            } else {
                Ok(v)
            }
        };
        entries.push(ManifestEntry {
            song_id: required("song_id")?,
            model_id: required("model_id")?,
            stem: required("stem")?,
            model_type: required("model_type")?
                .parse()
                .map_err(|e: String| HarnessError::parse(&location, e))?,
            target_audio: required("target_audio")?.into(),
            estimate_audio: required("estimate_audio")?.into(),
            target_embedding: optional_path(target_emb),
            estimate_embedding: optional_path(estimate_emb),
            interferers: interferers
                .map(&field)
                .unwrap_or_default()
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(PathBuf::from)
                .collect(),
        });
    }
    Ok(entries)
}

/// Write entries as a CSV manifest with every optional column present.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::parse(path.display().to_string(), e))?;
    let header = [
        "song_id",
        "model_id",
        "stem",
        "model_type",
        "target_audio",
        "estimate_audio",
        "target_embedding",
        "estimate_embedding",
        "interferers",
    ];
    let wrap = |e: csv::Error| HarnessError::parse(path.display().to_string(), e);
    w.write_record(header).map_err(wrap)?;
    let show = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    for e in entries {
        let interferers: Vec<String> = e.interferers.iter().map(|p| p.display().to_string()).collect();
        w.write_record([
            e.song_id.clone(),
            e.model_id.clone(),
            e.stem.clone(),
            e.model_type.to_string(),
            e.target_audio.display().to_string(),
            e.estimate_audio.display().to_string(),
            show(&e.target_embedding),
            show(&e.estimate_embedding),
            interferers.join(";"),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
