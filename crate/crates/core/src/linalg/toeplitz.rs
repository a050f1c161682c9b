//! Least-squares FIR fit between two equal-length signals.
//!
//! The model is the causal, same-length convolution `(x ⊛ b)[n] = Σ_k b[k]·x[n−k]`
//! with `x[n<0] = 0`. Its normal matrix is the Toeplitz autocorrelation of the
//! reference minus a rank-structured edge term (shifted copies lose their
//! tail samples), which is filled in O(taps²) from the autocorrelation.

use super::LinalgError;
use crate::fft::cross_correlate;

const DIAGONAL_LOADING: f64 = 1e-12;
const REFINEMENT_STEPS: usize = 2;

/// Filter `b` of length `taps` minimising `‖reference ⊛ b − estimate‖₂`.
pub fn toeplitz_lstsq(reference: &[f64], estimate: &[f64], taps: usize) -> Result<Vec<f64>, LinalgError> {
    let len = reference.len();
    if estimate.len() != len {
        return Err(LinalgError::Shape(format!(
            "reference has {len} samples, estimate has {}",
            estimate.len()
        )));
    }
    if taps == 0 || len <= taps {
        return Err(LinalgError::Shape(format!(
            "need more samples ({len}) than filter taps ({taps})"
        )));
    }
    if reference.iter().chain(estimate).any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }

    let auto = cross_correlate(reference, reference, taps);
    let cross = cross_correlate(reference, estimate, taps);
    if auto[0] <= 0.0 {
        return Err(LinalgError::SingularSystem);
    }

    let gram = edge_corrected_gram(reference, &auto, taps);
    let b = loaded_solve(&gram, &cross, taps, DIAGONAL_LOADING * auto[0])?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::SingularSystem);
    }
    Ok(b)
}

/// Causal same-length FIR filtering of `signal` by `coeffs`.
pub fn fir_filter(signal: &[f64], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; signal.len()];
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 || k >= signal.len() {
            continue;
        }
        for (o, &x) in out[k..].iter_mut().zip(signal) {
            *o += c * x;
        }
    }
    out
}

/// `G[j][k] = Σ_n x[n−j]·x[n−k]` over the truncated support, row-major.
fn edge_corrected_gram(x: &[f64], auto: &[f64], taps: usize) -> Vec<f64> {
    let len = x.len();
    let mut gram = vec![0.0; taps * taps];
    for lag in 0..taps {
        let mut g = auto[lag];
        for j in 0..(taps - lag) {
            let k = j + lag;
            gram[j * taps + k] = g;
            gram[k * taps + j] = g;
            g -= x[len - 1 - k] * x[len - 1 - j];
        }
    }
    gram
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor, row-major.
/// Solve `gram · x = rhs` through the Cholesky factor of `gram + load·I`,
/// then refine towards the unloaded solution with that factor as preconditioner.
pub(crate) fn loaded_solve(gram: &[f64], rhs: &[f64], n: usize, load: f64) -> Result<Vec<f64>, LinalgError> {
    let mut loaded = gram.to_vec();
    for i in 0..n {
        loaded[i * n + i] += load;
    }
    let chol = cholesky(&loaded, n)?;
    let mut x = cholesky_solve(&chol, rhs, n);
    for _ in 0..REFINEMENT_STEPS {
        let residual: Vec<f64> = (0..n).map(|i| rhs[i] - dot(&gram[i * n..(i + 1) * n], &x)).collect();
        let delta = cholesky_solve(&chol, &residual, n);
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi += di;
        }
    }
    Ok(x)
}

pub(crate) fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(LinalgError::SingularSystem);
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

pub(crate) fn cholesky_solve(l: &[f64], rhs: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (rhs[i] - dot(&l[i * n..i * n + i], &y[..i])) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}
