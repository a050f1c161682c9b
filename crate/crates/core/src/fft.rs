use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Linear cross-correlation `out[k] = sum_m a[m] * b[m + k]` for lags `0..max_lag`.
///
/// Both inputs are treated as zero outside their support. Computed with a
/// zero-padded FFT large enough that no circular wrap reaches the requested
/// lags.
pub(crate) fn cross_correlate(a: &[f64], b: &[f64], max_lag: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() || max_lag == 0 {
        return vec![0.0; max_lag];
    }
    let size = (a.len().max(b.len()) + max_lag).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut fa = padded(a, size);
    let mut fb = padded(b, size);
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    inverse.process(&mut fa);

    let scale = 1.0 / size as f64;
    fa.iter().take(max_lag).map(|c| c.re * scale).collect()
}

fn padded(x: &[f64], size: usize) -> Vec<Complex<f64>> {
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    for (slot, &v) in buf.iter_mut().zip(x) {
        slot.re = v;
    }
    buf
}
