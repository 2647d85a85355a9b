//! Simulation toolkit for localizing underwater nodes from a single
//! acoustic anchor fitted with a passive metasurface.

pub mod ams;
pub mod angle;
pub mod channel;
pub mod dsp;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod localizer;
pub mod optimizer;
pub mod signal;
pub mod waveform;

pub use error::{Error, Result};

/// The guide in `book/` runs as doc-tests so its examples stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/metasurface.md")]
    mod metasurface {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    mod optimizer {}
    #[doc = include_str!("../../../book/src/waveform.md")]
    mod waveform {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/receiver.md")]
    mod receiver {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/localization.md")]
    mod localization {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
