//! Symmetric eigendecomposition by Householder tridiagonalization followed by
//! implicit QL iterations, plus the PSD square root built on it.
//!
//! Internally the working matrix is kept transposed relative to the classic
//! column-oriented formulation so that every inner loop runs over contiguous
//! memory; on exit row `j` of the work buffer is eigenvector `j`.

use super::{LinalgError, SymMatrix};

/// Per-eigenvalue iteration budget for the QL stage.
const MAX_QL_ITERATIONS: usize = 100;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector `j` occupies `vectors[j * n..(j + 1) * n]`.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Unit eigenvector paired with `eigenvalues[j]`.
    pub fn eigenvector(&self, j: usize) -> &[f64] {
        let n = self.order();
        &self.vectors[j * n..(j + 1) * n]
    }

    /// Eigenvector matrix `V` (eigenvectors as columns), row-major.
    pub fn eigenvector_matrix(&self) -> Vec<f64> {
        let n = self.order();
        let mut v = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                v[i * n + j] = self.vectors[j * n + i];
            }
        }
        v
    }

    /// `V * diag(f(λ)) * Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.order();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = vec![0.0; n * n];
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = self.eigenvector(j);
            for r in 0..n {
                let scaled = w * v[r];
                if scaled == 0.0 {
                    continue;
                }
                let row = &mut out[r * n..(r + 1) * n];
                for (o, &vc) in row.iter_mut().zip(v) {
                    *o += scaled * vc;
                }
            }
        }
        SymMatrix::new(n, out).expect("order preserved")
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map_spectrum(|l| l)
    }
}

pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = a.order();
    let (mut d, mut e, mut w) = prepare(a)?;
    tridiagonalize(&mut w, &mut d, &mut e, n, true);
    ql_implicit(&mut d, &mut e, Some(&mut w), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let eigenvalues = order.iter().map(|&j| d[j]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        vectors.extend_from_slice(&w[j * n..(j + 1) * n]);
    }
    Ok(EigenDecomposition { eigenvalues, vectors })
}

/// Eigenvalues only, sorted descending. Skips the eigenvector accumulation.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = a.order();
    let (mut d, mut e, mut w) = prepare(a)?;
    tridiagonalize(&mut w, &mut d, &mut e, n, false);
    ql_implicit(&mut d, &mut e, None, n)?;
    d.sort_by(|x, y| y.total_cmp(x));
    Ok(d)
}

/// Principal square root of the PSD part of `a`.
///
/// Eigenvalues below `clip_eps * max(λ_max, 0)` (and all non-positive ones)
/// are set to zero before taking square roots.
pub fn psd_sqrt(a: &SymMatrix, clip_eps: f64) -> Result<SymMatrix, LinalgError> {
    let eig = sym_eigen(a)?;
    let threshold = clip_threshold(&eig.eigenvalues, clip_eps);
    Ok(eig.map_spectrum(|l| clip(l, threshold).sqrt()))
}

/// `tr(psd_sqrt(a, clip_eps))` computed from the eigenvalues alone.
pub fn psd_sqrt_trace(a: &SymMatrix, clip_eps: f64) -> Result<f64, LinalgError> {
    let values = sym_eigenvalues(a)?;
    let threshold = clip_threshold(&values, clip_eps);
    Ok(values.iter().map(|&l| clip(l, threshold).sqrt()).sum())
}

fn clip_threshold(eigenvalues: &[f64], clip_eps: f64) -> f64 {
    let top = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    clip_eps * top
}

fn clip(l: f64, threshold: f64) -> f64 {
    if l > 0.0 && l >= threshold {
        l
    } else {
        0.0
    }
}

type Workspace = (Vec<f64>, Vec<f64>, Vec<f64>);

fn prepare(a: &SymMatrix) -> Result<Workspace, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.order();
    Ok((vec![0.0; n], vec![0.0; n], a.as_slice().to_vec()))
}

/// Householder reduction to tridiagonal form.
///
/// On exit `d` holds the diagonal, `e[1..]` the subdiagonal. With
/// `accumulate`, `w` holds the transposed orthogonal transform.
fn tridiagonalize(w: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize, accumulate: bool) {
    for j in 0..n {
        d[j] = w[j * n + n - 1];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[j * n + i - 1];
                w[j * n + i] = 0.0;
                w[i * n + j] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);

            for j in 0..i {
                f = d[j];
                w[i * n + j] = f;
                g = e[j] + w[j * n + j] * f;
                let row = &w[j * n..j * n + i];
                for k in (j + 1)..i {
                    g += row[k] * d[k];
                    e[k] += row[k] * f;
                }
                e[j] = g;
            }

            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let row = &mut w[j * n..j * n + i];
                for k in j..i {
                    row[k] -= f * e[k] + g * d[k];
                }
                d[j] = w[j * n + i - 1];
                w[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = w[j * n + j];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n.saturating_sub(1) {
        w[i * n + n - 1] = w[i * n + i];
        w[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = w[(i + 1) * n + k] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += w[(i + 1) * n + k] * w[j * n + k];
                }
                let row = &mut w[j * n..j * n + i + 1];
                for (k, r) in row.iter_mut().enumerate() {
                    *r -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            w[(i + 1) * n + k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = w[j * n + n - 1];
        w[j * n + n - 1] = 0.0;
    }
    w[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iterations on the tridiagonal `(d, e)`; rotations are applied
/// to the rows of `w` when given.
fn ql_implicit(
    d: &mut [f64],
    e: &mut [f64],
    mut w: Option<&mut [f64]>,
    n: usize,
) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(LinalgError::NonConvergence(MAX_QL_ITERATIONS));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if let Some(w) = w.as_deref_mut() {
                        let (lo, hi) = w.split_at_mut((i + 1) * n);
                        let row_i = &mut lo[i * n..];
                        let row_next = &mut hi[..n];
                        for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
