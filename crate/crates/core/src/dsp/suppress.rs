//! Multipath suppression by mixing with the reference chirp.
//!
//! After mixing, an arrival delayed by `t` relative to the aligned one becomes
//! a tone at `-k t`, while the aligned arrival collapses to its slowly varying
//! envelope near DC. A low-pass below `k * t_min` keeps only the latter. Mixing
//! uses the complex reference so the envelope does not depend on the carrier
//! phase the metasurface imposes.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::filter::{design_lowpass, filtfilt};
use crate::ams::linspace;
use crate::error::{Error, Result};
use crate::waveform::ChirpSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuppressionParams {
    /// Hz.
    pub f_cut: f64,
    /// FIR taps, odd.
    pub filter_order: usize,
    /// Smallest delay to suppress, s.
    pub t_min: f64,
    /// Fraction discarded at each end of the envelope before resampling.
    pub trim: f64,
    /// Points in the resampled spectrum.
    pub bins: usize,
}

impl Default for SuppressionParams {
    fn default() -> Self {
        Self {
            f_cut: 35e3,
            filter_order: 255,
            t_min: 0.065e-3,
            trim: 0.05,
            bins: 64,
        }
    }
}

impl SuppressionParams {
    pub fn validate(&self, spec: &ChirpSpec) -> Result<()> {
        spec.validate()?;
        if !(self.f_cut > 0.0) {
            return Err(Error::InvalidArgument("f_cut must be positive".into()));
        }
        if !(self.t_min > 0.0) {
            return Err(Error::InvalidArgument("t_min must be positive".into()));
        }
        let limit = spec.slope() * self.t_min;
        if self.f_cut >= limit {
            return Err(Error::CutoffTooHigh {
                f_cut: self.f_cut,
                limit,
            });
        }
        if !(0.0..0.5).contains(&self.trim) {
            return Err(Error::InvalidArgument("trim must lie in [0, 0.5)".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidArgument("need at least 2 feature bins".into()));
        }
        if self.filter_order < 3 || self.filter_order.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "filter_order must be odd and >= 3, got {}",
                self.filter_order
            )));
        }
        Ok(())
    }
}

/// Largest delay still passed by a cutoff `f_cut`: arrivals later than this are suppressed.
pub fn suppressible_delay(spec: &ChirpSpec, f_cut: f64) -> f64 {
    f_cut / spec.slope()
}

/// Envelope over the chirp and its samples on the feature frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFeature {
    pub envelope: Vec<f64>,
    pub resampled_spectrum: Vec<f64>,
    /// Frequencies of `resampled_spectrum`, Hz.
    pub freqs: Vec<f64>,
}

impl EnvelopeFeature {
    pub fn validate(&self) -> Result<()> {
        if self.resampled_spectrum.is_empty() || self.envelope.is_empty() {
            return Err(Error::InvalidArgument("empty feature".into()));
        }
        if self
            .envelope
            .iter()
            .chain(&self.resampled_spectrum)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite feature".into()));
        }
        Ok(())
    }
}

/// Grid shared by features and templates: `bins` points across the chirp band
/// with `trim` of the band dropped at each end.
pub fn feature_grid(spec: &ChirpSpec, bins: usize, trim: f64) -> Vec<f64> {
    linspace(
        spec.f0 + trim * spec.bandwidth,
        spec.f0 + (1.0 - trim) * spec.bandwidth,
        bins,
    )
}

/// `segment(t) * exp(-j 2pi (f0 + k t / 2) t)` over the chirp length, zero-padded.
pub fn mix_down(segment: &[f64], spec: &ChirpSpec) -> Vec<Complex64> {
    let k = spec.slope();
    (0..spec.sample_count())
        .map(|n| {
            let t = n as f64 / spec.sample_rate;
            let x = segment.get(n).copied().unwrap_or(0.0);
            Complex64::from_polar(x, -TAU * (spec.f0 + 0.5 * k * t) * t)
        })
        .collect()
}

fn resample(envelope: &[f64], spec: &ChirpSpec, freqs: &[f64]) -> Vec<f64> {
    let k = spec.slope();
    let last = envelope.len() - 1;
    freqs
        .iter()
        .map(|&f| {
            let pos = ((f - spec.f0) / k * spec.sample_rate).clamp(0.0, last as f64);
            let i = (pos.floor() as usize).min(last.saturating_sub(1));
            let w = pos - i as f64;
            if last == 0 {
                envelope[0]
            } else {
                envelope[i] * (1.0 - w) + envelope[i + 1] * w
            }
        })
        .collect()
}

/// Envelope of the arrival aligned at the start of `segment`, with later
/// arrivals filtered out.
pub fn suppress_multipath(
    segment: &[f64],
    spec: &ChirpSpec,
    params: &SuppressionParams,
) -> Result<EnvelopeFeature> {
    params.validate(spec)?;
    if segment.is_empty() {
        return Err(Error::InvalidArgument("empty segment".into()));
    }
    let mixed = mix_down(segment, spec);
    let h = design_lowpass(params.f_cut, spec.sample_rate, params.filter_order)?;
    let envelope: Vec<f64> = filtfilt(&mixed, &h).iter().map(|v| v.norm()).collect();
    let freqs = feature_grid(spec, params.bins, params.trim);
    let resampled_spectrum = resample(&envelope, spec, &freqs);
    Ok(EnvelopeFeature {
        envelope,
        resampled_spectrum,
        freqs,
    })
}

/// Unsuppressed baseline: magnitude of the segment's Fourier transform on the
/// same grid.
pub fn raw_spectrum_feature(
    segment: &[f64],
    spec: &ChirpSpec,
    bins: usize,
    trim: f64,
) -> Result<EnvelopeFeature> {
    spec.validate()?;
    if segment.is_empty() {
        return Err(Error::InvalidArgument("empty segment".into()));
    }
    let freqs = feature_grid(spec, bins, trim);
    let len = spec.sample_count().min(segment.len());
    let seg = &segment[..len];
    let mags: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let w = -TAU * f / spec.sample_rate;
            seg.iter()
                .enumerate()
                .map(|(n, &x)| Complex64::from_polar(x, w * n as f64))
                .sum::<Complex64>()
                .norm()
        })
        .collect();
    Ok(EnvelopeFeature {
        envelope: mags.clone(),
        resampled_spectrum: mags,
        freqs,
    })
}
