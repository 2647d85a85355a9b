use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ams::DirectionalGainTable;
use crate::error::{Error, Result};
use crate::signal::{bin_frequency, complex_padded, fft, ifft};

/// Linear up-chirp `A cos(2pi (f0 + k t / 2) t)` with slope `k = bandwidth / duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChirpSpec {
    pub amplitude: f64,
    /// Start frequency, Hz.
    pub f0: f64,
    /// Hz.
    pub bandwidth: f64,
    /// s.
    pub duration: f64,
    /// Hz.
    pub sample_rate: f64,
}

impl Default for ChirpSpec {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            f0: 125e3,
            bandwidth: 125e3,
            duration: 0.2e-3,
            sample_rate: 2e6,
        }
    }
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "chirp duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "chirp start frequency must be positive, got {}",
                self.f0
            )));
        }
        if !(self.bandwidth >= 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidSpec("chirp bandwidth must be non-negative".into()));
        }
        if !(self.amplitude.is_finite()) {
            return Err(Error::InvalidSpec("chirp amplitude must be finite".into()));
        }
        if !(self.sample_rate > 0.0 && self.f0 + self.bandwidth < self.sample_rate / 2.0) {
            return Err(Error::InvalidSpec(format!(
                "f0 + bandwidth = {} Hz violates Nyquist at {} Hz sampling",
                self.f0 + self.bandwidth,
                self.sample_rate
            )));
        }
        Ok(())
    }

    /// Hz/s.
    pub fn slope(&self) -> f64 {
        self.bandwidth / self.duration
    }

    /// Samples with `0 <= t_n <= duration`.
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate + 1e-9).floor() as usize + 1
    }

    pub fn end_frequency(&self) -> f64 {
        self.f0 + self.bandwidth
    }

    pub(crate) fn samples(&self, count: usize) -> Vec<f64> {
        let k = self.slope();
        (0..count)
            .map(|n| {
                let t = n as f64 / self.sample_rate;
                self.amplitude * (TAU * (self.f0 + 0.5 * k * t) * t).cos()
            })
            .collect()
    }
}

pub fn synth_chirp(spec: &ChirpSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(spec.samples(spec.sample_count()))
}

/// Multiplies the spectrum of `samples` by `gain(f)` for `f >= 0` (and its
/// conjugate mirror below zero). The transform spans exactly `samples.len()`,
/// so the filter is circular.
pub fn shape_samples<F>(samples: &[f64], sample_rate: f64, gain: F) -> Vec<f64>
where
    F: Fn(f64) -> Complex64,
{
    let n = samples.len();
    let mut buf = complex_padded(samples, n);
    fft(&mut buf);
    apply_real_gain(&mut buf, sample_rate, gain);
    ifft(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

/// Applies a Hermitian-symmetric gain in place to a spectrum of a real signal.
fn apply_real_gain<F>(spectrum: &mut [Complex64], sample_rate: f64, gain: F)
where
    F: Fn(f64) -> Complex64,
{
    let n = spectrum.len();
    for i in 0..=n / 2 {
        let f = bin_frequency(i, n, sample_rate);
        let g = gain(f);
        if i == 0 || (n.is_multiple_of(2) && i == n / 2) {
            // self-conjugate bins stay real
            spectrum[i] *= g.re;
        } else {
            spectrum[i] *= g;
            spectrum[n - i] *= g.conj();
        }
    }
}

/// The chirp as radiated toward `theta` through the gain table (nearest row,
/// linear in frequency, unit gain off the grid).
pub fn shape_by_direction(
    spec: &ChirpSpec,
    table: &DirectionalGainTable,
    theta: f64,
) -> Result<Vec<f64>> {
    let chirp = synth_chirp(spec)?;
    let row = table.nearest_row(theta);
    Ok(shape_samples(&chirp, spec.sample_rate, |f| {
        table.interpolate(row, f)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::correlate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn starts_at_amplitude() {
        let s = ChirpSpec {
            amplitude: 2.5,
            ..Default::default()
        };
        assert_eq!(synth_chirp(&s).unwrap()[0], 2.5);
    }

    #[test]
    fn slope_of_default() {
        let s = ChirpSpec::default();
        assert!((s.slope() - 6.25e8).abs() < 1e-3);
        assert_eq!(s.sample_count(), 401);
    }

    #[test]
    fn nyquist_violation() {
        let s = ChirpSpec {
            sample_rate: 400e3,
            ..Default::default()
        };
        assert!(matches!(synth_chirp(&s), Err(Error::InvalidSpec(_))));
        let s = ChirpSpec {
            duration: 0.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn instantaneous_frequency_at_end() {
        let s = ChirpSpec::default();
        let x = synth_chirp(&s).unwrap();
        // short-time spectrum over the last 64 samples, finely zero-padded
        let win = 64;
        let tail = &x[x.len() - win..];
        let hann: Vec<f64> = (0..win)
            .map(|i| 0.5 - 0.5 * (TAU * i as f64 / (win - 1) as f64).cos())
            .collect();
        let w: Vec<f64> = tail.iter().zip(&hann).map(|(a, b)| a * b).collect();
        let n = 4096;
        let mut buf = complex_padded(&w, n);
        fft(&mut buf);
        let peak = (0..n / 2)
            .max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm()))
            .unwrap();
        let f_peak = peak as f64 * s.sample_rate / n as f64;
        // the window centre sits 32 samples before the end
        let t_c = (x.len() - 1 - win / 2) as f64 / s.sample_rate;
        let expect_centre = s.f0 + s.slope() * t_c;
        let bin = s.sample_rate / win as f64;
        assert!((f_peak - expect_centre).abs() < bin, "{f_peak} vs {expect_centre}");
        assert!((f_peak - s.end_frequency()).abs() < bin, "{f_peak}");
    }

    #[test]
    fn autocorrelation_sidelobes() {
        // TB = 25
        let s = ChirpSpec::default();
        let x = synth_chirp(&s).unwrap();
        let mut padded = vec![0.0; x.len()];
        padded.extend(&x);
        padded.extend(vec![0.0; x.len()]);
        let c = correlate(&padded, &x).magnitude;
        let peak_i = x.len();
        let peak = c[peak_i];
        assert!(c.iter().all(|&v| v <= peak));
        // first null of the compressed pulse lies about fs / B samples out
        let mainlobe = (s.sample_rate / s.bandwidth).ceil() as usize;
        let side = c
            .iter()
            .enumerate()
            .filter(|(i, _)| i.abs_diff(peak_i) > mainlobe)
            .map(|(_, &v)| v)
            .fold(0.0, f64::max);
        assert!(20.0 * (peak / side).log10() >= 6.0, "{peak} {side}");
    }

    #[test]
    fn unit_table_is_identity() {
        let s = ChirpSpec::default();
        let table = DirectionalGainTable::constant(
            vec![0.0, 1.0],
            vec![100e3, 300e3],
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let x = synth_chirp(&s).unwrap();
        let y = shape_by_direction(&s, &table, 0.2).unwrap();
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
        let half = DirectionalGainTable::constant(
            vec![0.0],
            vec![0.0, 1e6],
            Complex64::new(0.5, 0.0),
        )
        .unwrap();
        let y = shape_by_direction(&s, &half, 0.0).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((0.5 * a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn shaped_spectrum_matches_table() {
        let s = ChirpSpec::default();
        let n = s.sample_count();
        // grid on exact FFT bins so the check needs no interpolation
        let df = s.sample_rate / n as f64;
        let freqs: Vec<f64> = (25..=125).map(|i| i as f64 * df).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gains: Vec<Complex64> = (0..freqs.len() * 3)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let table = DirectionalGainTable::new(vec![0.0, 2.0, 4.0], freqs.clone(), gains).unwrap();
        let y = shape_by_direction(&s, &table, 2.1).unwrap();
        let mut xs = complex_padded(&synth_chirp(&s).unwrap(), n);
        let mut ys = complex_padded(&y, n);
        fft(&mut xs);
        fft(&mut ys);
        for (l, _) in freqs.iter().enumerate() {
            let bin = 25 + l;
            let want = table.get(1, l).norm() * xs[bin].norm();
            let got = ys[bin].norm();
            assert!((got - want).abs() <= 1e-6 * want.max(1e-12), "bin {bin}");
        }
    }

    #[test]
    fn shaping_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..128).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..128).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = |f: f64| Complex64::from_polar(1.0 + f / 1e6, f / 1e5);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ya = shape_samples(&a, 1e6, g);
        let yb = shape_samples(&b, 1e6, g);
        let ys = shape_samples(&sum, 1e6, g);
        for i in 0..128 {
            assert!((ys[i] - ya[i] - yb[i]).abs() < 1e-12);
        }
    }
}
