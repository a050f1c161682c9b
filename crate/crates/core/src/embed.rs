//! Embedding-based metrics: mean squared error between two embedding
//! matrices and the per-song Fréchet distance between their frame
//! distributions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{mean_and_cov, psd_sqrt, psd_sqrt_trace, GaussianStats, LinalgError, DEFAULT_CLIP_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("shape mismatch: {0}x{1} vs {2}x{3} (dims x frames)")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("encoder mismatch: {0} vs {1}")]
    EncoderMismatch(String, String),
    #[error("need at least 2 frames, got {0}")]
    InsufficientFrames(usize),
    #[error("embedding values must be finite")]
    NonFinite,
    #[error("invalid embedding: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Where an embedding came from. Fields are optional because hand-made or
/// stand-in embeddings may not carry them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl EmbeddingMeta {
    fn label(&self) -> String {
        format!(
            "{}@{}",
            self.encoder.as_deref().unwrap_or("?"),
            self.layer.map_or_else(|| "?".to_string(), |l| l.to_string())
        )
    }

    /// Two metadata records conflict when both name an encoder (or layer)
    /// and the names differ.
    fn conflicts_with(&self, other: &Self) -> bool {
        let differs = |a: &Option<String>, b: &Option<String>| matches!((a, b), (Some(x), Some(y)) if x != y);
        differs(&self.encoder, &other.encoder) || matches!((self.layer, other.layer), (Some(a), Some(b)) if a != b)
    }
}

/// `dims × frames` encoder activations for one clip, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dims: usize,
    frames: usize,
    values: Vec<f64>,
    pub meta: EmbeddingMeta,
}

impl EmbeddingMatrix {
    /// `values[t * dims + i]` is dimension `i` of frame `t`.
    pub fn from_frames(dims: usize, frames: usize, values: Vec<f64>, meta: EmbeddingMeta) -> Result<Self, EmbedError> {
        if dims == 0 || frames == 0 {
            return Err(EmbedError::Invalid(format!("empty shape {dims}x{frames}")));
        }
        if values.len() != dims * frames {
            return Err(EmbedError::Invalid(format!(
                "{} values for shape {dims}x{frames}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self {
            dims,
            frames,
            values,
            meta,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.dims..(t + 1) * self.dims]
    }

    /// Entry at `(dim, frame)`, matching the `N × M` orientation.
    pub fn get(&self, dim: usize, frame: usize) -> f64 {
        self.values[frame * self.dims + dim]
    }

    pub fn gaussian_stats(&self) -> Result<GaussianStats, EmbedError> {
        if self.frames < 2 {
            return Err(EmbedError::InsufficientFrames(self.frames));
        }
        Ok(mean_and_cov(&self.values, self.dims)?)
    }
}

/// `‖E − Ê‖_F² / (N·M)`.
pub fn mse_mert(target: &EmbeddingMatrix, estimate: &EmbeddingMatrix) -> Result<f64, EmbedError> {
    if target.dims != estimate.dims || target.frames != estimate.frames {
        return Err(EmbedError::ShapeMismatch(
            target.dims,
            target.frames,
            estimate.dims,
            estimate.frames,
        ));
    }
    if target.meta.conflicts_with(&estimate.meta) {
        return Err(EmbedError::EncoderMismatch(target.meta.label(), estimate.meta.label()));
    }
    let sum: f64 = target
        .values
        .iter()
        .zip(&estimate.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / target.values.len() as f64)
}

/// Fréchet distance between the Gaussian fits of the two frame sets.
pub fn fad_song2song(target: &EmbeddingMatrix, estimate: &EmbeddingMatrix) -> Result<f64, EmbedError> {
    if target.dims != estimate.dims {
        return Err(EmbedError::ShapeMismatch(
            target.dims,
            target.frames,
            estimate.dims,
            estimate.frames,
        ));
    }
    if target.meta.conflicts_with(&estimate.meta) {
        return Err(EmbedError::EncoderMismatch(target.meta.label(), estimate.meta.label()));
    }
    frechet_distance(&target.gaussian_stats()?, &estimate.gaussian_stats()?)
}

/// `‖μ−μ̂‖² + tr Σ + tr Σ̂ − 2·tr((Σ^½ Σ̂ Σ^½)^½)`, clamped at zero.
///
/// The trace of `(ΣΣ̂)^½` is evaluated through the symmetric similarity form,
/// with near-zero eigenvalues clipped so rank-deficient covariances are
/// handled without inflating the diagonal.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64, EmbedError> {
    if a.dims() != b.dims() {
        return Err(EmbedError::ShapeMismatch(a.dims(), a.frame_count, b.dims(), b.frame_count));
    }
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y) * (x - y)).sum();
    let root_a = psd_sqrt(&a.cov, DEFAULT_CLIP_EPS)?;
    let inner = root_a.sandwich(&b.cov)?;
    let cross = psd_sqrt_trace(&inner, DEFAULT_CLIP_EPS)?;
    let fad = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    Ok(fad.max(0.0))
}
