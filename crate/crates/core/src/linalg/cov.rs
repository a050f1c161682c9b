use super::{LinalgError, SymMatrix};

/// Empirical mean and unbiased covariance of a frame set.
#[derive(Debug, Clone)]
pub struct GaussianStats {
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
    pub frame_count: usize,
}

impl GaussianStats {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }
}

/// Mean and covariance (1/(M−1) normalizer) of `frames`, laid out
/// frame-major: frame `t` is `frames[t * dim..(t + 1) * dim]`.
pub fn mean_and_cov(frames: &[f64], dim: usize) -> Result<GaussianStats, LinalgError> {
    if dim == 0 {
        return Err(LinalgError::Shape("dimension must be at least 1".into()));
    }
    if frames.len() % dim != 0 {
        return Err(LinalgError::Shape(format!(
            "{} values do not split into frames of dimension {dim}",
            frames.len()
        )));
    }
    let count = frames.len() / dim;
    if count < 2 {
        return Err(LinalgError::InsufficientFrames(count));
    }
    if frames.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }

    let mut mean = vec![0.0; dim];
    for frame in frames.chunks_exact(dim) {
        for (m, &v) in mean.iter_mut().zip(frame) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }

    // centered data, dimension-major so that covariance entries are dot products
    let mut centered = vec![0.0; dim * count];
    for (t, frame) in frames.chunks_exact(dim).enumerate() {
        for (i, (&v, &m)) in frame.iter().zip(&mean).enumerate() {
            centered[i * count + t] = v - m;
        }
    }

    let norm = 1.0 / (count - 1) as f64;
    let mut cov = vec![0.0; dim * dim];
    let kernel = |(i, row): (usize, &mut [f64])| {
        let xi = &centered[i * count..(i + 1) * count];
        for (j, slot) in row.iter_mut().enumerate().skip(i) {
            let xj = &centered[j * count..(j + 1) * count];
            *slot = xi.iter().zip(xj).map(|(a, b)| a * b).sum::<f64>() * norm;
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        cov.par_chunks_mut(dim).enumerate().for_each(kernel);
    }
    #[cfg(not(feature = "parallel"))]
    cov.chunks_mut(dim).enumerate().for_each(kernel);

    for i in 0..dim {
        for j in 0..i {
            cov[i * dim + j] = cov[j * dim + i];
        }
    }

    Ok(GaussianStats {
        mean,
        cov: SymMatrix::new(dim, cov)?,
        frame_count: count,
    })
}
