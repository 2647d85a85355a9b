//! Receiver signal processing: correlation detection, zero-phase filtering,
//! and the multipath-suppressing envelope feature.

mod detect;
mod filter;
mod suppress;

pub use detect::{detect_acoustic_onset, detect_chirp, detect_em_marker, DetectOptions, Detection};
pub use filter::{design_lowpass, filtfilt};
pub use suppress::{
    feature_grid, mix_down, raw_spectrum_feature, suppress_multipath, suppressible_delay,
    EnvelopeFeature, SuppressionParams,
};
