//! Independent reference implementations and fixtures shared by the
//! integration tests. Everything here is deliberately naive.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use sepeval::harness::{write_embedding, write_manifest, ManifestEntry, ModelType, NpyDtype};
use sepeval::{stft_mag, AudioClip, EmbeddingMatrix, EmbeddingMeta, StftConfig, SymMatrix};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn energy(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `B·Bᵀ / 2n` with `B` an `n × 2n` Gaussian matrix; well conditioned and full rank.
pub fn random_psd(rng: &mut StdRng, n: usize) -> SymMatrix {
    let b = gaussian(rng, n * 2 * n);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..2 * n {
                s += b[i * 2 * n + k] * b[j * 2 * n + k];
            }
            a[i * n + j] = s / (2 * n) as f64;
        }
    }
    SymMatrix::new(n, a).unwrap()
}

pub fn dense_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += a[i * n + k] * b[k * n + j];
            }
            c[i * n + j] = s;
        }
    }
    c
}

pub fn frobenius_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[f64], n: usize) -> Vec<f64> {
    let w = 2 * n;
    let mut m = vec![0.0; n * w];
    for i in 0..n {
        m[i * w..i * w + n].copy_from_slice(&a[i * n..(i + 1) * n]);
        m[i * w + n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r * w + col].abs().total_cmp(&m[s * w + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..w {
                m.swap(col * w + k, pivot * w + k);
            }
        }
        let p = m[col * w + col];
        assert!(p != 0.0, "singular matrix in oracle");
        for k in 0..w {
            m[col * w + k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * w + col];
                if f != 0.0 {
                    for k in 0..w {
                        m[r * w + k] -= f * m[col * w + k];
                    }
                }
            }
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n..(i + 1) * n].copy_from_slice(&m[i * w + n..(i + 1) * w]);
    }
    inv
}

/// Denman–Beavers iteration for the principal square root of a nonsingular matrix.
pub fn denman_beavers_sqrt(a: &[f64], n: usize) -> Vec<f64> {
    let mut y = a.to_vec();
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    for _ in 0..100 {
        let yi = gauss_jordan_inverse(&y, n);
        let zi = gauss_jordan_inverse(&z, n);
        let y_next: Vec<f64> = y.iter().zip(&zi).map(|(a, b)| 0.5 * (a + b)).collect();
        let z_next: Vec<f64> = z.iter().zip(&yi).map(|(a, b)| 0.5 * (a + b)).collect();
        let step = frobenius_diff(&y_next, &y);
        let scale = y_next.iter().map(|v| v * v).sum::<f64>().sqrt();
        y = y_next;
        z = z_next;
        if step <= 1e-15 * scale {
            break;
        }
    }
    y
}

/// Cyclic Jacobi rotations; eigenvalues sorted descending.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let total: f64 = m.iter().map(|v| v * v).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[i * n + j] * m[i * n + j];
                }
            }
        }
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Mean and unbiased covariance; `frames` is frame-major.
pub fn naive_mean_cov(frames: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let m = frames.len() / dim;
    let mut mean = vec![0.0; dim];
    for t in 0..m {
        for d in 0..dim {
            mean[d] += frames[t * dim + d];
        }
    }
    for v in &mut mean {
        *v /= m as f64;
    }
    let mut cov = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for t in 0..m {
                s += (frames[t * dim + i] - mean[i]) * (frames[t * dim + j] - mean[j]);
            }
            cov[i * dim + j] = s / (m - 1) as f64;
        }
    }
    (mean, cov)
}

/// O(N²) DFT magnitudes of a Hann-windowed frame, bins `0..=N/2`.
pub fn naive_dft_mag(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let tau = 2.0 * std::f64::consts::PI;
    let windowed: Vec<f64> = frame
        .iter()
        .enumerate()
        .map(|(i, &x)| x * 0.5 * (1.0 - (tau * i as f64 / n as f64).cos()))
        .collect();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in windowed.iter().enumerate() {
                let phase = tau * ((k * i) % n) as f64 / n as f64;
                re += x * phase.cos();
                im -= x * phase.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Rank = (number strictly below) + (size of tie group + 1) / 2.
pub fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn definitional_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

/// Mean over all (dim, frame) cells of the squared difference; `values` frame-major.
pub fn naive_mse(a: &[f64], b: &[f64], dims: usize) -> f64 {
    let frames = a.len() / dims;
    let mut total = 0.0;
    for t in 0..frames {
        let mut s = 0.0;
        for d in 0..dims {
            let diff = a[t * dims + d] - b[t * dims + d];
            s += diff * diff;
        }
        total += s;
    }
    total / (frames * dims) as f64
}

pub fn scalar_frechet(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    (m1 - m2).powi(2) + v1 + v2 - 2.0 * (v1 * v2).sqrt()
}

/// Frames whose sample covariance is diagonal with the given variances:
/// each dimension is a distinct cosine, zero-mean and mutually orthogonal.
pub fn decoupled_frames(means: &[f64], variances: &[f64], frames: usize) -> Vec<f64> {
    let dims = means.len();
    assert!(frames > 2 * dims + 1);
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = vec![0.0; frames * dims];
    for d in 0..dims {
        let amp = (variances[d] * 2.0 * (frames - 1) as f64 / frames as f64).sqrt();
        for t in 0..frames {
            let phase = tau * (((d + 1) * t) % frames) as f64 / frames as f64;
            out[t * dims + d] = means[d] + amp * phase.cos();
        }
    }
    out
}

/// Remove the components of `v` along each vector in `basis` (modified
/// Gram–Schmidt, two passes).
pub fn orthogonalize(v: &[f64], basis: &[&[f64]]) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut u = b.to_vec();
        for _ in 0..2 {
            for prev in &q {
                let c = dot(&u, prev);
                u.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
            }
        }
        let norm = energy(&u).sqrt();
        u.iter_mut().for_each(|x| *x /= norm);
        q.push(u);
    }
    let mut out = v.to_vec();
    for _ in 0..2 {
        for u in &q {
            let c = dot(&out, u);
            out.iter_mut().zip(u).for_each(|(x, p)| *x -= c * p);
        }
    }
    out
}

pub fn with_energy(v: &[f64], target: f64) -> Vec<f64> {
    let k = (target / energy(v)).sqrt();
    v.iter().map(|x| x * k).collect()
}

pub fn clip(samples: Vec<f64>, rate: u32) -> AudioClip {
    AudioClip::new(samples, rate).unwrap()
}

pub fn write_wav_f32(path: &Path, samples: &[f64], rate: u32) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &s in samples {
        w.write_sample(s as f32).unwrap();
    }
    w.finalize().unwrap();
}

/// Log-magnitude STFT frames standing in for encoder embeddings.
pub fn standin_embedding(samples: &[f64], rate: u32, source: &str) -> EmbeddingMatrix {
    let spec = stft_mag(&clip(samples.to_vec(), rate), StftConfig::default()).unwrap();
    let values: Vec<f64> = spec.values().iter().map(|m| m.ln_1p()).collect();
    let meta = EmbeddingMeta {
        encoder: Some("stft-logmag".into()),
        layer: None,
        source: Some(source.into()),
    };
    EmbeddingMatrix::from_frames(spec.bins(), spec.frames(), values, meta).unwrap()
}

pub const LADDER_SONGS: usize = 5;
pub const LADDER_RATE: u32 = 16_000;

/// The degradation ladder: per song one clean copy plus additive noise,
/// orthogonalized against the target, at 20, 10 and 0 dB SNR shifted by
/// `song` dB. Planted scores rise strictly with SNR.
pub struct Ladder {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub ratings: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

pub fn ladder_levels(song: usize) -> [(&'static str, Option<f64>); 4] {
    let s = song as f64;
    [
        ("clean", None),
        ("snr20", Some(20.0 + s)),
        ("snr10", Some(10.0 + s)),
        ("snr00", Some(s)),
    ]
}

pub fn planted_score(snr: Option<f64>) -> f64 {
    match snr {
        None => 95.0,
        Some(db) => 10.0 + 2.0 * db,
    }
}

pub fn build_ladder(dir: &Path) -> Ladder {
    let mut rng = rng(0x1add3);
    let n = LADDER_RATE as usize;
    let mut entries = Vec::new();
    let mut ratings = String::from("song_id,model_id,stem,rater_id,score,scale,violation_count\n");
    for song in 0..LADDER_SONGS {
        let song_id = format!("song{song}");
        let target = with_energy(&gaussian(&mut rng, n), 0.01 * n as f64);
        let accomp = with_energy(&gaussian(&mut rng, n), 0.01 * n as f64);
        let target_wav = dir.join(format!("{song_id}_vocals.wav"));
        let accomp_wav = dir.join(format!("{song_id}_accomp.wav"));
        write_wav_f32(&target_wav, &target, LADDER_RATE);
        write_wav_f32(&accomp_wav, &accomp, LADDER_RATE);
        let target_emb = dir.join(format!("{song_id}_vocals.npy"));
        write_embedding(&target_emb, &standin_embedding(&target, LADDER_RATE, &song_id), NpyDtype::F64).unwrap();

        for (model_id, snr) in ladder_levels(song) {
            let estimate = match snr {
                None => target.clone(),
                Some(db) => {
                    let noise = orthogonalize(&gaussian(&mut rng, n), &[&target]);
                    let noise = with_energy(&noise, energy(&target) / 10f64.powf(db / 10.0));
                    target.iter().zip(&noise).map(|(t, e)| t + e).collect()
                }
            };
            let est_wav = dir.join(format!("{song_id}_{model_id}.wav"));
            write_wav_f32(&est_wav, &estimate, LADDER_RATE);
            let est_emb = dir.join(format!("{song_id}_{model_id}.npy"));
            write_embedding(&est_emb, &standin_embedding(&estimate, LADDER_RATE, model_id), NpyDtype::F64).unwrap();
            entries.push(ManifestEntry {
                song_id: song_id.clone(),
                model_id: model_id.to_string(),
                stem: "vocals".into(),
                model_type: if snr.is_none() {
                    ModelType::Oracle
                } else {
                    ModelType::Discriminative
                },
                target_audio: target_wav.clone(),
                estimate_audio: est_wav,
                target_embedding: Some(target_emb.clone()),
                estimate_embedding: Some(est_emb),
                interferers: vec![accomp_wav.clone()],
            });

            let base = planted_score(snr);
            for (rater, offset) in [("r1", -1.0), ("r2", 0.0), ("r3", 1.0)] {
                ratings.push_str(&format!("{song_id},{model_id},vocals,{rater},{},mushra_0_100,0\n", base + offset));
            }
            ratings.push_str(&format!("{song_id},{model_id},vocals,r_noisy,{},mushra_0_100,3\n", 100.0 - base));
        }
    }
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &entries).unwrap();
    let ratings_path = dir.join("ratings.csv");
    std::fs::write(&ratings_path, ratings).unwrap();
    Ladder {
        dir: dir.to_path_buf(),
        manifest,
        ratings: ratings_path,
        entries,
    }
}
