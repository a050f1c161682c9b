//! BSS-Eval style energy ratios: filter-based SDR and the scale-invariant
//! SI-SDR / SI-SIR / SI-SAR family.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::AudioClip;
use crate::linalg::toeplitz::{cholesky, loaded_solve};
use crate::linalg::{fir_filter, toeplitz_lstsq, LinalgError};

/// Magnitude at which dB values are clamped.
pub const DB_CAP: f64 = 300.0;
pub const DEFAULT_SDR_TAPS: usize = 512;

const GRAM_LOADING: f64 = 1e-12;
/// Energy fraction (-200 dB) below which the projected target counts as zero.
const ZERO_TARGET_RATIO: f64 = 1e-20;
/// Pivots of the normalized reference Gram below this mean collinear stems.
const COLLINEARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BssError {
    #[error("target signal is silent")]
    SilentTarget,
    #[error("estimate signal is silent")]
    SilentEstimate,
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("reference stems are degenerate: {0}")]
    DegenerateReferences(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A decibel value, clamped to ±[`DB_CAP`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbValue {
    pub value: f64,
    pub capped: bool,
}

impl DbValue {
    /// `10·log10(num/den)`; a zero numerator maps to the lower cap, a zero
    /// denominator to the upper cap.
    pub fn from_energy_ratio(num: f64, den: f64) -> Self {
        if num <= 0.0 {
            return Self::capped(-DB_CAP);
        }
        if den <= 0.0 {
            return Self::capped(DB_CAP);
        }
        let db = 10.0 * (num / den).log10();
        if db >= DB_CAP {
            Self::capped(DB_CAP)
        } else if db <= -DB_CAP {
            Self::capped(-DB_CAP)
        } else {
            Self { value: db, capped: false }
        }
    }

    fn capped(value: f64) -> Self {
        Self { value, capped: true }
    }
}

/// Components of an estimate relative to a set of reference stems.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub s_target: Vec<f64>,
    pub e_interf: Vec<f64>,
    pub e_artif: Vec<f64>,
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_pair(target: &AudioClip, estimate: &AudioClip) -> Result<(), BssError> {
    if target.len() != estimate.len() {
        return Err(BssError::LengthMismatch(target.len(), estimate.len()));
    }
    if target.sample_rate() != estimate.sample_rate() {
        return Err(BssError::RateMismatch(target.sample_rate(), estimate.sample_rate()));
    }
    Ok(())
}

/// Filter-based SDR: the target may be distorted by an FIR filter of
/// `filter_taps` taps before the error is measured.
pub fn sdr(target: &AudioClip, estimate: &AudioClip, filter_taps: usize) -> Result<DbValue, BssError> {
    check_pair(target, estimate)?;
    if target.energy() == 0.0 {
        return Err(BssError::SilentTarget);
    }
    let coeffs = toeplitz_lstsq(target.samples(), estimate.samples(), filter_taps)?;
    let projected = fir_filter(target.samples(), &coeffs);
    let distortion: f64 = projected
        .iter()
        .zip(estimate.samples())
        .map(|(p, e)| (p - e) * (p - e))
        .sum();
    Ok(DbValue::from_energy_ratio(energy(&projected), distortion))
}

pub fn si_sdr(target: &AudioClip, estimate: &AudioClip) -> Result<DbValue, BssError> {
    check_pair(target, estimate)?;
    let t = target.samples();
    let e = estimate.samples();
    let target_energy = energy(t);
    if target_energy == 0.0 {
        return Err(BssError::SilentTarget);
    }
    if energy(e) == 0.0 {
        return Err(BssError::SilentEstimate);
    }
    let alpha = dot(e, t) / target_energy;
    let (signal, noise) = t.iter().zip(e).fold((0.0, 0.0), |(s, n), (&ti, &ei)| {
        let st = alpha * ti;
        (s + st * st, n + (ei - st) * (ei - st))
    });
    Ok(DbValue::from_energy_ratio(signal, noise))
}

/// Split `estimate` into target, interference and artifact components.
///
/// The interference subspace is the span of all `references`; the target
/// component is the orthogonal projection onto `references[target_index]`.
pub fn si_decompose(
    estimate: &AudioClip,
    references: &[&AudioClip],
    target_index: usize,
) -> Result<Decomposition, BssError> {
    if references.len() < 2 {
        return Err(BssError::DegenerateReferences(format!(
            "need at least 2 reference stems, got {}",
            references.len()
        )));
    }
    if target_index >= references.len() {
        return Err(BssError::DegenerateReferences(format!(
            "target index {target_index} out of range for {} references",
            references.len()
        )));
    }
    for r in references {
        check_pair(r, estimate)?;
    }

    let k = references.len();
    let refs: Vec<&[f64]> = references.iter().map(|r| r.samples()).collect();
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let g = dot(refs[i], refs[j]);
            gram[i * k + j] = g;
            gram[j * k + i] = g;
        }
    }
    check_collinearity(&gram, k)?;

    let max_diag = (0..k).map(|i| gram[i * k + i]).fold(0.0, f64::max);
    let e = estimate.samples();
    let rhs: Vec<f64> = refs.iter().map(|r| dot(r, e)).collect();
    let coeffs = loaded_solve(&gram, &rhs, k, GRAM_LOADING * max_diag)
        .map_err(|_| BssError::DegenerateReferences("reference Gram matrix is singular".into()))?;

    let mut span = vec![0.0; e.len()];
    for (c, r) in coeffs.iter().zip(&refs) {
        for (s, &v) in span.iter_mut().zip(r.iter()) {
            *s += c * v;
        }
    }

    let t = refs[target_index];
    let alpha = rhs[target_index] / gram[target_index * k + target_index];
    let s_target: Vec<f64> = t.iter().map(|v| alpha * v).collect();
    let e_interf = span.iter().zip(&s_target).map(|(p, s)| p - s).collect();
    let e_artif = e.iter().zip(&span).map(|(x, p)| x - p).collect();
    Ok(Decomposition {
        s_target,
        e_interf,
        e_artif,
    })
}

fn check_collinearity(gram: &[f64], k: usize) -> Result<(), BssError> {
    let diag: Vec<f64> = (0..k).map(|i| gram[i * k + i]).collect();
    if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
        return Err(BssError::DegenerateReferences(format!("reference {i} is silent")));
    }
    let mut corr = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            corr[i * k + j] = gram[i * k + j] / (diag[i] * diag[j]).sqrt();
        }
    }
    match cholesky(&corr, k) {
        Ok(l) if (0..k).all(|i| l[i * k + i] * l[i * k + i] > COLLINEARITY_TOLERANCE) => Ok(()),
        _ => Err(BssError::DegenerateReferences("reference stems are (nearly) collinear".into())),
    }
}

impl Decomposition {
    /// Target energy, or zero when it is at rounding level relative to the estimate.
    fn target_energy(&self) -> f64 {
        let target = energy(&self.s_target);
        let total = target + energy(&self.e_interf) + energy(&self.e_artif);
        if target <= ZERO_TARGET_RATIO * total {
            0.0
        } else {
            target
        }
    }
}

/// `10·log10(‖s_target‖² / ‖e_interf‖²)`; a numerically zero target gives the lower cap.
pub fn si_sir(decomp: &Decomposition) -> DbValue {
    DbValue::from_energy_ratio(decomp.target_energy(), energy(&decomp.e_interf))
}

/// `10·log10(‖s_target‖² / ‖e_artif‖²)`; a numerically zero target gives the lower cap.
pub fn si_sar(decomp: &Decomposition) -> DbValue {
    DbValue::from_energy_ratio(decomp.target_energy(), energy(&decomp.e_artif))
}
