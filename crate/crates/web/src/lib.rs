//! WebAssembly bindings for the in-browser metric explorer (`www/index.html`).
//!
//! Each export takes slider values and returns a JSON string; the plain
//! Rust functions behind them are what the tests exercise.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

use sepeval::{
    fad_song2song, mse_mert, mse_spec, sdr, si_decompose, si_sar, si_sdr, si_sir, stft_mag, AudioClip, DbValue,
    EmbeddingMatrix, EmbeddingMeta, StftConfig,
};

const RATE: u32 = 8000;
const DEMO_TAPS: usize = 128;

fn gaussian(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Rescale `x` so that `energy(x) == reference / 10^(db/10)`.
fn at_level(x: &[f64], reference: f64, db: f64) -> Vec<f64> {
    let e = energy(x);
    if e == 0.0 {
        return x.to_vec();
    }
    let k = (reference / 10f64.powf(db / 10.0) / e).sqrt();
    x.iter().map(|v| v * k).collect()
}

/// Strip the components of `x` along each of `basis` (assumed roughly independent).
fn remove_components(x: &mut [f64], basis: &[&[f64]]) {
    for _ in 0..2 {
        for b in basis {
            let c = x.iter().zip(*b).map(|(a, b)| a * b).sum::<f64>() / energy(b);
            x.iter_mut().zip(*b).for_each(|(a, b)| *a -= c * b);
        }
    }
}

/// A harmonic "voice" with a slow vibrato and amplitude envelope.
fn voice(n: usize) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    (0..n)
        .map(|i| {
            let t = i as f64 / RATE as f64;
            let f0 = 220.0 * (1.0 + 0.01 * (tau * 5.0 * t).sin());
            let env = 0.6 + 0.4 * (tau * 1.5 * t).sin().abs();
            env * (1..=5).map(|h| (tau * f0 * h as f64 * t).sin() / h as f64).sum::<f64>()
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct SeparationReport {
    pub sdr: DbValue,
    pub si_sdr: DbValue,
    pub si_sir: DbValue,
    pub si_sar: DbValue,
}

/// Target voice plus interference from an accompaniment stem at
/// `interference_db` below the target, plus artifact noise at `artifact_db`
/// below the target. Both perturbations are made orthogonal to the target.
pub fn separation(interference_db: f64, artifact_db: f64, seed: u64) -> Result<SeparationReport, String> {
    let n = RATE as usize;
    let mut rng = StdRng::seed_from_u64(seed);
    let target = voice(n);
    let accomp = gaussian(&mut rng, n);
    let e_t = energy(&target);

    let mut leak = accomp.clone();
    remove_components(&mut leak, &[&target]);
    let leak = at_level(&leak, e_t, interference_db);
    let mut noise = gaussian(&mut rng, n);
    remove_components(&mut noise, &[&target, &accomp]);
    let noise = at_level(&noise, e_t, artifact_db);
    let estimate: Vec<f64> = (0..n).map(|i| target[i] + leak[i] + noise[i]).collect();

    let clip = |v: Vec<f64>| AudioClip::new(v, RATE).map_err(|e| e.to_string());
    let (t, a, e) = (clip(target)?, clip(accomp)?, clip(estimate)?);
    let d = si_decompose(&e, &[&t, &a], 0).map_err(|e| e.to_string())?;
    Ok(SeparationReport {
        sdr: sdr(&t, &e, DEMO_TAPS).map_err(|e| e.to_string())?,
        si_sdr: si_sdr(&t, &e).map_err(|e| e.to_string())?,
        si_sir: si_sir(&d),
        si_sar: si_sar(&d),
    })
}

#[derive(Debug, Serialize)]
pub struct EmbeddingReport {
    pub mse: f64,
    pub fad: f64,
    /// `dims · (shift² + (scale − 1)²)`, the population value both estimates approach.
    pub expected: f64,
}

/// Unit-Gaussian "target" frames against `scale · x + shift` (fresh noise mixed in by `noise`).
pub fn embeddings(shift: f64, scale: f64, noise: f64, dims: usize, frames: usize, seed: u64) -> Result<EmbeddingReport, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let x = gaussian(&mut rng, dims * frames);
    let z = gaussian(&mut rng, dims * frames);
    let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| scale * a + shift + noise * b).collect();
    let emb = |v: Vec<f64>| EmbeddingMatrix::from_frames(dims, frames, v, EmbeddingMeta::default()).map_err(|e| e.to_string());
    let (a, b) = (emb(x)?, emb(y)?);
    let spread = (scale * scale + noise * noise).sqrt();
    Ok(EmbeddingReport {
        mse: mse_mert(&a, &b).map_err(|e| e.to_string())?,
        fad: fad_song2song(&a, &b).map_err(|e| e.to_string())?,
        expected: dims as f64 * (shift * shift + (spread - 1.0).powi(2)),
    })
}

#[derive(Debug, Serialize)]
pub struct SpectrogramReport {
    pub bins: usize,
    pub frames: usize,
    /// dB magnitudes, frame-major, target then estimate.
    pub target_db: Vec<f32>,
    pub estimate_db: Vec<f32>,
    pub mse_spec: f64,
}

/// A sine at `freq_hz` against the same sine with white noise at `snr_db`.
pub fn spectrogram(freq_hz: f64, snr_db: f64, seed: u64) -> Result<SpectrogramReport, String> {
    let n = RATE as usize / 2;
    let mut rng = StdRng::seed_from_u64(seed);
    let tau = std::f64::consts::TAU;
    let target: Vec<f64> = (0..n).map(|i| 0.5 * (tau * freq_hz * i as f64 / RATE as f64).sin()).collect();
    let noise = at_level(&gaussian(&mut rng, n), energy(&target), snr_db);
    let estimate: Vec<f64> = target.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let t = AudioClip::new(target, RATE).map_err(|e| e.to_string())?;
    let e = AudioClip::new(estimate, RATE).map_err(|e| e.to_string())?;
    let config = StftConfig::default();
    let st = stft_mag(&t, config).map_err(|e| e.to_string())?;
    let se = stft_mag(&e, config).map_err(|e| e.to_string())?;
    let to_db = |v: &[f64]| v.iter().map(|m| (20.0 * (m + 1e-6).log10()) as f32).collect();
    Ok(SpectrogramReport {
        bins: st.bins(),
        frames: st.frames(),
        target_db: to_db(st.values()),
        estimate_db: to_db(se.values()),
        mse_spec: mse_spec(&t, &e, config).map_err(|e| e.to_string())?,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    let value = r.map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn separation_metrics(interference_db: f64, artifact_db: f64, seed: u32) -> Result<String, JsValue> {
    to_json(separation(interference_db, artifact_db, seed as u64))
}

#[wasm_bindgen]
pub fn embedding_metrics(shift: f64, scale: f64, noise: f64, dims: u32, frames: u32, seed: u32) -> Result<String, JsValue> {
    to_json(embeddings(shift, scale, noise, dims as usize, frames as usize, seed as u64))
}

#[wasm_bindgen]
pub fn spectrogram_view(freq_hz: f64, snr_db: f64, seed: u32) -> Result<String, JsValue> {
    to_json(spectrogram(freq_hz, snr_db, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separation_tracks_planted_levels() {
        let r = separation(15.0, 25.0, 1).unwrap();
        assert!((r.si_sir.value - 15.0).abs() < 0.1, "{r:?}");
        assert!((r.si_sar.value - 25.0).abs() < 0.1, "{r:?}");
        assert!(r.si_sdr.value < 15.0);
        assert!(r.sdr.value.is_finite());
    }

    #[test]
    fn embedding_mse_follows_shift() {
        let r = embeddings(0.5, 1.0, 0.0, 16, 200, 2).unwrap();
        assert!((r.mse - 0.25).abs() < 1e-12);
        assert!((r.fad - 16.0 * 0.25).abs() < 1e-9);
        assert_eq!(r.expected, 4.0);
    }

    #[test]
    fn spectrogram_shape_and_error_grow_with_noise() {
        let quiet = spectrogram(1000.0, 30.0, 3).unwrap();
        let loud = spectrogram(1000.0, 0.0, 3).unwrap();
        assert_eq!(quiet.bins, 257);
        assert_eq!(quiet.target_db.len(), quiet.bins * quiet.frames);
        assert!(quiet.mse_spec < loud.mse_spec);
    }

    #[test]
    fn exports_return_json() {
        let json = separation_metrics(10.0, 20.0, 4).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["si_sir"]["value"].is_number());
    }
}
