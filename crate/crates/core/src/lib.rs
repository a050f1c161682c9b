//! Intrusive evaluation metrics for music source separation.
//!
//! The crate computes embedding-based metrics (MSE over encoder embeddings
//! and the per-song Fréchet Audio Distance), the BSS-Eval family (SDR,
//! SI-SDR, SI-SAR, SI-SIR) and a spectral MSE, then correlates any of them
//! with perceptual ratings (Spearman and Pearson, pooled by stem, model
//! type or overall).
//!
//! ```text
//! manifest.csv ──► evaluate ──► metrics.csv ─┐
//!                                             ├─► correlate ──► report/
//! ratings.csv ──► aggregate_ratings ─────────┘
//! ```
//!
//! Modules, bottom-up:
//!
//! - [`linalg`]: symmetric eigensolver, PSD square root, covariance, Toeplitz solve
//! - [`dsp`]: WAV decoding, STFT magnitudes, spectral MSE
//! - [`bss`]: SDR and the scale-invariant decomposition
//! - [`embed`]: embedding MSE and per-song FAD
//! - [`stats`]: ranks, Spearman, Pearson, polarity
//! - [`harness`]: manifests, ratings, evaluation runs, pooling, reports

pub mod bss;
pub mod dsp;
pub mod embed;
mod fft;
pub mod harness;
pub mod linalg;
pub mod stats;

pub use bss::{sdr, si_decompose, si_sar, si_sdr, si_sir, BssError, DbValue, Decomposition};
pub use dsp::{decode_wav, mse_spec, stft_mag, AudioClip, DspError, MagnitudeSpectrogram, StftConfig};
pub use embed::{fad_song2song, frechet_distance, mse_mert, EmbedError, EmbeddingMatrix, EmbeddingMeta};
pub use linalg::{
    mean_and_cov, psd_sqrt, sym_eigen, toeplitz_lstsq, EigenDecomposition, GaussianStats, LinalgError,
    SymMatrix,
};
pub use stats::{pcc, ranks_with_ties, srcc, PairedSeries, Polarity, StatsError};
