use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hamming-windowed sinc low-pass with unit DC gain.
pub fn design_lowpass(cutoff: f64, sample_rate: f64, taps: usize) -> Result<Vec<f64>> {
    if taps < 3 || taps.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "filter length must be odd and at least 3, got {taps}"
        )));
    }
    if !(cutoff > 0.0 && cutoff < sample_rate / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} Hz outside (0, {}) Hz",
            sample_rate / 2.0
        )));
    }
    let fc = cutoff / sample_rate;
    let mid = (taps / 2) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let m = i as f64 - mid;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (TAU * fc * m).sin() / (PI * m)
            };
            let w = 0.54 - 0.46 * (TAU * i as f64 / (taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    Ok(h)
}

/// Centred convolution with an odd-length symmetric kernel, zero beyond the edges.
fn convolve_same(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let half = h.len() / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            (lo..=hi).map(|j| x[j] * h[j + half - i]).sum()
        })
        .collect()
}

/// Forward-backward application of a symmetric FIR: zero phase, squared magnitude.
pub fn filtfilt(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    if x.is_empty() {
        return Vec::new();
    }
    convolve_same(&convolve_same(x, h), h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, TAU * f * i as f64 / 2e6))
            .collect()
    }

    fn mid_gain(f: f64, h: &[f64]) -> f64 {
        let y = filtfilt(&tone(f, 4000), h);
        y[2000].norm()
    }

    #[test]
    fn passes_dc_rejects_stopband() {
        let h = design_lowpass(35e3, 2e6, 255).unwrap();
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((mid_gain(0.0, &h) - 1.0).abs() < 1e-9);
        assert!(mid_gain(10e3, &h) > 0.99);
        assert!(mid_gain(70e3, &h) < 1e-4);
    }

    #[test]
    fn zero_phase() {
        let h = design_lowpass(50e3, 2e6, 101).unwrap();
        let x = tone(8e3, 3000);
        let y = filtfilt(&x, &h);
        let ratio = y[1500] / x[1500];
        assert!(ratio.arg().abs() < 1e-9);
    }

    #[test]
    fn rejects_even_length() {
        assert!(design_lowpass(35e3, 2e6, 254).is_err());
        assert!(design_lowpass(1.5e6, 2e6, 255).is_err());
    }
}
