//! Thin wrappers around rustfft used by the transform and filtering stages.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::Arc;

/// Forward FFT plan plus scratch, reusable across equal-length calls.
pub(crate) struct FftPair {
    pub forward: Arc<dyn rustfft::Fft<f64>>,
    pub inverse: Arc<dyn rustfft::Fft<f64>>,
    pub len: usize,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }
}

/// In-place forward FFT (unnormalized).
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// In-place inverse FFT, normalized by 1/N.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_inverse(buf.len()).process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Full complex spectrum of a real signal (unnormalized, length N).
pub(crate) fn real_spectrum(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut buf);
    buf
}

/// Frequency in Hz of FFT bin `k` for an N-point transform at rate `fs`,
/// using the signed convention (bins above N/2 are negative).
pub(crate) fn bin_freq(k: usize, n: usize, fs: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k <= n_f / 2.0 {
        k * fs / n_f
    } else {
        (k - n_f) * fs / n_f
    }
}

/// Apply a real gain mask defined on |frequency| to a real signal and return
/// the filtered real signal. The mask is evaluated once per bin magnitude, so
/// the applied response is symmetric and therefore exactly zero-phase.
pub(crate) fn apply_spectral_mask(x: &[f64], fs: f64, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = x.len();
    let mut buf = real_spectrum(x);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = bin_freq(k, n, fs).abs();
        *v *= gain(f);
    }
    fft_inverse(&mut buf);
    buf.iter().map(|v| v.re).collect()
}

/// Analytic signal via the frequency-domain Hilbert construction.
pub(crate) fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf = real_spectrum(x);
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == half) {
            // unchanged
        } else if k < half || (n % 2 == 1 && k == half) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fft_inverse(&mut buf);
    buf
}

/// Envelope of a real signal: magnitude of its analytic signal.
pub(crate) fn envelope(x: &[f64]) -> Vec<f64> {
    analytic_signal(x).iter().map(|z| z.norm()).collect()
}

pub(crate) fn next_pow2(n: usize) -> usize {
    let mut p = 1usize;
    while p < n {
        p <<= 1;
    }
    p
}
