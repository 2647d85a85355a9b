use serde::{Deserialize, Serialize};

use crate::channel::Recording;
use crate::dsp::{
    detect_acoustic_onset, detect_em_marker, raw_spectrum_feature, suppress_multipath, DetectOptions,
    Detection, EnvelopeFeature, SuppressionParams,
};
use crate::error::{Error, Result};
use crate::waveform::ChirpSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Low-passed envelope after mixing with the reference chirp.
    #[default]
    Suppressed,
    /// Magnitude spectrum of the segment, multipath included.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct FeatureParams {
    pub kind: FeatureKind,
    pub suppression: SuppressionParams,
    pub detect: DetectOptions,
}

impl FeatureParams {
    pub fn validate(&self, spec: &ChirpSpec) -> Result<()> {
        match self.kind {
            FeatureKind::Suppressed => self.suppression.validate(spec),
            FeatureKind::Raw => spec.validate(),
        }
    }
}

/// Feature of the first acoustic arrival together with the detections that
/// located it.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub feature: EnvelopeFeature,
    pub em: Detection,
    pub onset: Detection,
}

/// Computes the feature of the segment starting at `start`; samples past the
/// end of the capture read as zero.
pub fn feature_at(
    samples: &[f64],
    start: usize,
    spec: &ChirpSpec,
    params: &FeatureParams,
) -> Result<EnvelopeFeature> {
    let n = spec.sample_count();
    let end = (start + n).min(samples.len());
    if start >= end {
        return Err(Error::InvalidArgument(format!(
            "segment start {start} outside a capture of {} samples",
            samples.len()
        )));
    }
    let seg = &samples[start..end];
    match params.kind {
        FeatureKind::Suppressed => suppress_multipath(seg, spec, &params.suppression),
        FeatureKind::Raw => raw_spectrum_feature(seg, spec, params.suppression.bins, params.suppression.trim),
    }
}

/// Locates the leakage marker and the first acoustic arrival, then computes
/// the feature of the arrival.
pub fn extract_feature(rec: &Recording, spec: &ChirpSpec, params: &FeatureParams) -> Result<Extracted> {
    params.validate(spec)?;
    let em = detect_em_marker(rec, spec, &params.detect)?;
    let onset = detect_acoustic_onset(rec, spec, em.index, &params.detect)?;
    let feature = feature_at(&rec.samples, onset.index, spec, params)?;
    Ok(Extracted { feature, em, onset })
}
