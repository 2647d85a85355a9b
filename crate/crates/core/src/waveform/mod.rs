//! Probe waveforms: the linear chirp, its direction-dependent shaping, the
//! FM0 anchor frame, and the binary sample format.

mod chirp;
mod file;
mod frame;

pub use chirp::{shape_by_direction, shape_samples, synth_chirp, ChirpSpec};
pub use file::SampleFile;
pub use frame::{
    decode_frame, encode_frame, fm0_levels, frame_bits, AnchorFrame, DecodeOptions, FRAME_BITS,
    ID_BITS, MAX_ANCHORS,
};
