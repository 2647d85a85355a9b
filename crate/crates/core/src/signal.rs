//! FFT plumbing shared by the waveform, channel and receiver code.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn fft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// Inverse transform including the `1/n` factor.
pub fn ifft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_inverse(buf.len()).process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Zero-padded complex copy of `x` with length `n >= x.len()`.
pub fn complex_padded(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (o, &v) in out.iter_mut().zip(x) {
        o.re = v;
    }
    out
}

/// Frequency of FFT bin `i` for an `n`-point transform; bins above `n/2` are negative.
pub fn bin_frequency(i: usize, n: usize, sample_rate: f64) -> f64 {
    let i = i as f64;
    let n_f = n as f64;
    if i <= n_f / 2.0 {
        i * sample_rate / n_f
    } else {
        (i - n_f) * sample_rate / n_f
    }
}

/// Analytic signal `x + j H{x}` computed over the length of `x`.
pub fn analytic(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut buf = complex_padded(x, n);
    fft(&mut buf);
    for (i, v) in buf.iter_mut().enumerate() {
        if i == 0 || (n.is_multiple_of(2) && i == n / 2) {
            continue;
        }
        if i < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    ifft(&mut buf);
    buf
}

/// `c[n] = sum_m x[n + m] conj(r[m])` for every full-overlap lag `n`.
pub fn xcorr(x: &[f64], r: &[Complex64]) -> Vec<Complex64> {
    if r.is_empty() || x.len() < r.len() {
        return Vec::new();
    }
    let n = (x.len() + r.len()).next_power_of_two();
    let mut xs = complex_padded(x, n);
    let mut rs = vec![Complex64::new(0.0, 0.0); n];
    rs[..r.len()].copy_from_slice(r);
    fft(&mut xs);
    fft(&mut rs);
    for (a, b) in xs.iter_mut().zip(&rs) {
        *a *= b.conj();
    }
    ifft(&mut xs);
    xs.truncate(x.len() - r.len() + 1);
    xs
}

/// Energy of every length-`len` window of `x`, indexed by window start.
pub fn window_energy(x: &[f64], len: usize) -> Vec<f64> {
    if len == 0 || x.len() < len {
        return Vec::new();
    }
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v * v;
        prefix.push(acc);
    }
    (0..=x.len() - len)
        .map(|i| (prefix[i + len] - prefix[i]).max(0.0))
        .collect()
}

/// Cross-correlation of `x` against `reference` together with its
/// phase-insensitive normalized score in `[0, 1]` at every lag.
pub struct Correlation {
    /// Magnitude of the analytic cross-correlation.
    pub magnitude: Vec<f64>,
    pub score: Vec<f64>,
}

/// Windows below this fraction of the loudest window count as silent.
const SILENT_FRACTION: f64 = 1e-12;

pub fn correlate(x: &[f64], reference: &[f64]) -> Correlation {
    let a = analytic(reference);
    let ref_norm = (a.iter().map(|v| v.norm_sqr()).sum::<f64>() / 2.0).sqrt();
    let c = xcorr(x, &a);
    let energy = window_energy(x, reference.len());
    let max_e = energy.iter().cloned().fold(0.0, f64::max);
    let magnitude: Vec<f64> = c.iter().map(|v| v.norm()).collect();
    let score = magnitude
        .iter()
        .zip(&energy)
        .map(|(&m, &e)| {
            if ref_norm == 0.0 || e <= SILENT_FRACTION * max_e || e == 0.0 {
                0.0
            } else {
                (m / (ref_norm * e.sqrt())).min(1.0)
            }
        })
        .collect();
    Correlation { magnitude, score }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
