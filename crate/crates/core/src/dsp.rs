//! Audio input and spectral analysis.

use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt WAV file: {0}")]
    CorruptFile(String),
    #[error("audio clip is empty")]
    Empty,
    #[error("audio contains non-finite samples")]
    NonFinite,
    #[error("clip has {len} samples but the analysis window needs {needed}")]
    ClipTooShort { len: usize, needed: usize },
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("invalid STFT configuration: {0}")]
    BadConfig(String),
}

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, DspError> {
        if samples.is_empty() {
            return Err(DspError::Empty);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(DspError::NonFinite);
        }
        if sample_rate == 0 {
            return Err(DspError::UnsupportedFormat("sample rate 0".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    /// Downmix interleaved frames of `channels` samples by channel mean.
    pub fn from_interleaved(interleaved: &[f64], channels: usize, sample_rate: u32) -> Result<Self, DspError> {
        if channels == 0 {
            return Err(DspError::UnsupportedFormat("zero channels".into()));
        }
        if interleaved.len() % channels != 0 {
            return Err(DspError::CorruptFile("partial sample frame".into()));
        }
        let samples = if channels == 1 {
            interleaved.to_vec()
        } else {
            interleaved
                .chunks_exact(channels)
                .map(|frame| frame.iter().sum::<f64>() / channels as f64)
                .collect()
        };
        Self::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }
}

/// Decode a PCM16, PCM24 or float32 WAV file with one or two channels.
///
/// Integer samples are scaled by `1 / 2^(bits-1)`; stereo is downmixed by
/// channel mean.
pub fn decode_wav(path: impl AsRef<Path>) -> Result<AudioClip, DspError> {
    let reader = hound::WavReader::open(path.as_ref()).map_err(map_hound)?;
    let spec = reader.spec();
    if !(1..=2).contains(&spec.channels) {
        return Err(DspError::UnsupportedFormat(format!("{} channels", spec.channels)));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<Result<_, _>>()
                .map_err(map_hound)?
        }
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (format, bits) => {
            return Err(DspError::UnsupportedFormat(format!("{format:?} with {bits} bits per sample")))
        }
    };
    AudioClip::from_interleaved(&interleaved, usize::from(spec.channels), spec.sample_rate)
}

fn map_hound(err: hound::Error) -> DspError {
    match err {
        hound::Error::Unsupported | hound::Error::InvalidSampleFormat => DspError::UnsupportedFormat(err.to_string()),
        hound::Error::IoError(e) => DspError::CorruptFile(e.to_string()),
        other => DspError::CorruptFile(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { n_fft: 512, hop: 256 }
    }
}

impl StftConfig {
    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Number of full frames for a signal of `len` samples (no padding).
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.n_fft {
            0
        } else {
            (len - self.n_fft) / self.hop + 1
        }
    }

    fn validate(&self) -> Result<(), DspError> {
        if self.n_fft < 2 || self.hop == 0 {
            return Err(DspError::BadConfig(format!("n_fft={} hop={}", self.n_fft, self.hop)));
        }
        Ok(())
    }
}

/// STFT magnitudes, frame-major: frame `t` is `values[t * bins..(t + 1) * bins]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrogram {
    bins: usize,
    frames: usize,
    values: Vec<f64>,
}

impl MagnitudeSpectrogram {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.bins..(t + 1) * self.bins]
    }

    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.values[frame * self.bins + bin]
    }
}

/// Periodic Hann window `0.5 * (1 - cos(2πn/N))`.
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

pub fn stft_mag(clip: &AudioClip, config: StftConfig) -> Result<MagnitudeSpectrogram, DspError> {
    config.validate()?;
    let x = clip.samples();
    if x.len() < config.n_fft {
        return Err(DspError::ClipTooShort {
            len: x.len(),
            needed: config.n_fft,
        });
    }
    let bins = config.bins();
    let frames = config.frame_count(x.len());
    let window = hann_periodic(config.n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(config.n_fft);

    let mut buf = vec![Complex::new(0.0, 0.0); config.n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut values = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        let start = t * config.hop;
        for ((slot, &s), &w) in buf.iter_mut().zip(&x[start..start + config.n_fft]).zip(&window) {
            *slot = Complex::new(s * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        values.extend(buf[..bins].iter().map(|c| c.norm()));
    }
    Ok(MagnitudeSpectrogram { bins, frames, values })
}

/// Mean over all (bin, frame) cells of the squared magnitude difference.
pub fn mse_spec(target: &AudioClip, estimate: &AudioClip, config: StftConfig) -> Result<f64, DspError> {
    if target.sample_rate() != estimate.sample_rate() {
        return Err(DspError::RateMismatch(target.sample_rate(), estimate.sample_rate()));
    }
    if target.len() != estimate.len() {
        return Err(DspError::LengthMismatch(target.len(), estimate.len()));
    }
    let a = stft_mag(target, config)?;
    let b = stft_mag(estimate, config)?;
    let sum: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.values().len() as f64)
}
