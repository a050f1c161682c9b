//! Listening-test ratings and their per-clip aggregation.
//!
//! CSV header: `song_id,model_id,stem,rater_id,score,scale,violation_count`
//! with `scale` one of `mushra_0_100` or `dmos_1_5`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EntryKey, HarnessError};

/// Raters with more quality-check violations than this are screened out.
pub const DEFAULT_MAX_VIOLATIONS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatingScale {
    #[serde(rename = "mushra_0_100")]
    Mushra,
    #[serde(rename = "dmos_1_5")]
    Dmos,
}

impl RatingScale {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            RatingScale::Mushra => (0.0, 100.0),
            RatingScale::Dmos => (1.0, 5.0),
        }
    }
}

impl fmt::Display for RatingScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingScale::Mushra => "mushra_0_100",
            RatingScale::Dmos => "dmos_1_5",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub song_id: String,
    pub model_id: String,
    pub stem: String,
    pub rater_id: String,
    pub score: f64,
    pub scale: RatingScale,
    #[serde(default)]
    pub violation_count: u32,
}

impl RatingRecord {
    pub fn key(&self) -> EntryKey {
        EntryKey::new(&self.song_id, &self.model_id, &self.stem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedScore {
    pub mean: f64,
    pub raters: usize,
    pub scale: RatingScale,
}

#[derive(Debug, Clone, Default)]
pub struct Aggregation {
    pub scores: BTreeMap<EntryKey, AggregatedScore>,
    /// Raters removed by the violation screen.
    pub screened_raters: BTreeSet<String>,
    /// Keys left without any rater after screening.
    pub dropped_keys: usize,
}

pub fn load_ratings(path: impl AsRef<Path>) -> Result<Vec<RatingRecord>, HarnessError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::parse(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RatingRecord>().enumerate() {
        let location = format!("{}:{}", path.display(), i + 2);
        let record = row.map_err(|e| HarnessError::parse(&location, e))?;
        let (lo, hi) = record.scale.bounds();
        if !(lo..=hi).contains(&record.score) {
            return Err(HarnessError::parse(
                location,
                format!("score {} outside {} range [{lo}, {hi}]", record.score, record.scale),
            ));
        }
        out.push(record);
    }
    Ok(out)
}

/// Average scores per `(song, model, stem)` after dropping raters whose
/// violation count exceeds `max_violations`.
///
/// A rater's violation count is the largest value on any of their records.
pub fn aggregate_ratings(records: &[RatingRecord], max_violations: u32) -> Result<Aggregation, HarnessError> {
    let Some(first) = records.first() else {
        return Ok(Aggregation::default());
    };
    if let Some(other) = records.iter().find(|r| r.scale != first.scale) {
        return Err(HarnessError::MixedScales(first.scale, other.scale));
    }

    let mut violations: HashMap<&str, u32> = HashMap::new();
    for r in records {
        let v = violations.entry(r.rater_id.as_str()).or_default();
        *v = (*v).max(r.violation_count);
    }
    let screened: BTreeSet<String> = violations
        .iter()
        .filter(|(_, &v)| v > max_violations)
        .map(|(id, _)| id.to_string())
        .collect();

    let mut sums: BTreeMap<EntryKey, (f64, usize)> = BTreeMap::new();
    let mut all_keys: BTreeSet<EntryKey> = BTreeSet::new();
    for r in records {
        all_keys.insert(r.key());
        if screened.contains(&r.rater_id) {
            continue;
        }
        let slot = sums.entry(r.key()).or_insert((0.0, 0));
        slot.0 += r.score;
        slot.1 += 1;
    }
    let dropped_keys = all_keys.len() - sums.len();
    if dropped_keys > 0 {
        log::warn!("{dropped_keys} rating keys have no rater left after screening");
    }
    let scores = sums
        .into_iter()
        .map(|(k, (sum, n))| {
            (
                k,
                AggregatedScore {
                    mean: sum / n as f64,
                    raters: n,
                    scale: first.scale,
                },
            )
        })
        .collect();
    Ok(Aggregation {
        scores,
        screened_raters: screened,
        dropped_keys,
    })
}
