use serde::{Deserialize, Serialize};

use crate::channel::Recording;
use crate::dsp::{detect_acoustic_onset, detect_em_marker, DetectOptions};
use crate::error::{Error, Result};
use crate::waveform::ChirpSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    /// Slant range, m.
    pub range: f64,
    /// Correlation score of the acoustic onset.
    pub score: f64,
    pub em_index: usize,
    pub onset_index: usize,
}

/// Slant range from the delay between the leakage marker and the first
/// acoustic arrival. The leakage travels effectively instantly, so no clock
/// is shared with the transmitter.
pub fn estimate_range(
    rec: &Recording,
    spec: &ChirpSpec,
    sound_speed: f64,
    opts: &DetectOptions,
) -> Result<RangeEstimate> {
    if !(sound_speed > 0.0 && sound_speed.is_finite()) {
        return Err(Error::InvalidArgument(format!("sound speed must be positive, got {sound_speed}")));
    }
    let em = detect_em_marker(rec, spec, opts)
        .map_err(|e| Error::RangingUnavailable(format!("leakage marker: {e}")))?;
    let onset = detect_acoustic_onset(rec, spec, em.index, opts)
        .map_err(|e| Error::RangingUnavailable(format!("acoustic onset: {e}")))?;
    let lag = onset.index.saturating_sub(em.index) as f64;
    Ok(RangeEstimate {
        range: sound_speed * lag / rec.sample_rate,
        score: onset.score,
        em_index: em.index,
        onset_index: onset.index,
    })
}
