//! Shared FFT, window, and interpolation primitives.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Plans a forward FFT of the given length. The returned handle is cheap to
/// clone and safe to share across threads; scratch buffers are per caller.
pub fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(len)
}

/// Plans an inverse FFT of the given length. rustfft leaves the 1/len
/// normalization to the caller.
pub fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(len)
}

/// In-place forward FFT for one-off transforms.
pub fn fft_in_place(data: &mut [Complex64]) {
    plan_forward(data.len()).process(data);
}

/// Symmetric Hann window w[n] = 0.5 (1 - cos(2 pi n / (len - 1))).
pub fn hann_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos()))
        .collect()
}

/// Normalized sinc, sin(pi x) / (pi x).
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}
