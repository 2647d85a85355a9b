//! TDMA anchor frame: chirp preamble, seven id bits plus even parity in FM0,
//! then a silent guard interval.
//!
//! Each FM0 half-bit is an antipodal copy of a short chirp spanning the
//! preamble band, so bits survive the same multipath and shaping as the
//! preamble. Decoding compares the two halves of each bit differentially and
//! is therefore blind to a constant phase rotation of the channel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::chirp::ChirpSpec;
use crate::error::{Error, Result};
use crate::signal::{analytic, correlate, median};

pub const ID_BITS: usize = 7;
pub const FRAME_BITS: usize = ID_BITS + 1;
pub const MAX_ANCHORS: usize = 1 << ID_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnchorFrame {
    pub anchor_id: u8,
    pub preamble: ChirpSpec,
    /// s.
    pub bit_duration: f64,
    /// s.
    pub guard: f64,
}

impl Default for AnchorFrame {
    fn default() -> Self {
        Self {
            anchor_id: 0,
            preamble: ChirpSpec {
                duration: 0.4e-3,
                ..ChirpSpec::default()
            },
            bit_duration: 0.2e-3,
            guard: 0.2e-3,
        }
    }
}

impl AnchorFrame {
    pub fn with_id(anchor_id: u8) -> Self {
        Self {
            anchor_id,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.anchor_id as usize >= MAX_ANCHORS {
            return Err(Error::InvalidSpec(format!(
                "anchor id {} does not fit in {ID_BITS} bits",
                self.anchor_id
            )));
        }
        self.preamble.validate()?;
        if !(self.bit_duration > 0.0 && self.guard >= 0.0) {
            return Err(Error::InvalidSpec(
                "bit duration must be positive and guard non-negative".into(),
            ));
        }
        if self.half_len() < 2 {
            return Err(Error::InvalidSpec("bit duration is shorter than two samples".into()));
        }
        Ok(())
    }

    /// Preamble + bits + guard, s.
    pub fn duration(&self) -> f64 {
        self.preamble.duration + FRAME_BITS as f64 * self.bit_duration + self.guard
    }

    fn preamble_len(&self) -> usize {
        (self.preamble.duration * self.preamble.sample_rate).round() as usize
    }

    fn half_len(&self) -> usize {
        (0.5 * self.bit_duration * self.preamble.sample_rate).round() as usize
    }

    fn total_len(&self) -> usize {
        (self.duration() * self.preamble.sample_rate).round() as usize
    }

    fn symbol(&self) -> Vec<f64> {
        let spec = ChirpSpec {
            duration: 0.5 * self.bit_duration,
            ..self.preamble
        };
        spec.samples(self.half_len())
    }

    fn preamble_samples(&self) -> Vec<f64> {
        self.preamble.samples(self.preamble_len())
    }
}

/// The seven id bits, most significant first, followed by the parity bit.
pub fn frame_bits(id: u8) -> [bool; FRAME_BITS] {
    let mut bits = [false; FRAME_BITS];
    for (i, b) in bits.iter_mut().take(ID_BITS).enumerate() {
        *b = (id >> (ID_BITS - 1 - i)) & 1 == 1;
    }
    bits[ID_BITS] = bits[..ID_BITS].iter().filter(|&&b| b).count() % 2 == 1;
    bits
}

/// Half-bit levels: the level flips at every bit boundary and a `0` flips it
/// again mid-bit. The line idles at `+1` before the first bit.
pub fn fm0_levels(bits: &[bool]) -> Vec<i8> {
    let mut level = 1i8;
    let mut out = Vec::with_capacity(2 * bits.len());
    for &bit in bits {
        level = -level;
        out.push(level);
        if !bit {
            level = -level;
        }
        out.push(level);
    }
    out
}

pub fn encode_frame(frame: &AnchorFrame) -> Result<Vec<f64>> {
    frame.validate()?;
    let mut out = vec![0.0; frame.total_len()];
    let pre = frame.preamble_samples();
    out[..pre.len()].copy_from_slice(&pre);
    let sym = frame.symbol();
    let half = frame.half_len();
    let levels = fm0_levels(&frame_bits(frame.anchor_id));
    for (j, &lv) in levels.iter().enumerate() {
        let start = pre.len() + j * half;
        for (o, &s) in out[start..start + half].iter_mut().zip(&sym) {
            *o = lv as f64 * s;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeOptions {
    /// Preamble threshold as a multiple of the median correlation magnitude.
    pub threshold_factor: f64,
    /// Minimum normalized correlation score at the preamble peak.
    pub min_score: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            threshold_factor: 5.0,
            min_score: 0.3,
        }
    }
}

/// Finds the first preamble in `samples` and returns the decoded anchor id.
/// `frame` supplies timing and the preamble; its id is ignored.
pub fn decode_frame(samples: &[f64], frame: &AnchorFrame, opts: &DecodeOptions) -> Result<u8> {
    frame.validate()?;
    let pre = frame.preamble_samples();
    let half = frame.half_len();
    let body = FRAME_BITS * 2 * half;
    if samples.len() < pre.len() + body {
        return Err(Error::NotFound("capture shorter than one frame".into()));
    }
    let corr = correlate(&samples[..samples.len() - body], &pre);
    let threshold = opts.threshold_factor * median(&corr.magnitude);
    let first = corr
        .magnitude
        .iter()
        .zip(&corr.score)
        .position(|(&m, &s)| m >= threshold && m > 0.0 && s >= opts.min_score)
        .ok_or_else(|| Error::NotFound("no preamble above threshold".into()))?;
    let end = (first + pre.len()).min(corr.magnitude.len());
    let onset = (first..end)
        .max_by(|&a, &b| corr.magnitude[a].total_cmp(&corr.magnitude[b]))
        .unwrap_or(first);

    let sym = analytic(&frame.symbol());
    let halves: Vec<Complex64> = (0..2 * FRAME_BITS)
        .map(|j| {
            let start = onset + pre.len() + j * half;
            samples[start..start + half]
                .iter()
                .zip(&sym)
                .map(|(&x, s)| x * s.conj())
                .sum()
        })
        .collect();
    let bits: Vec<bool> = halves
        .chunks(2)
        .map(|p| (p[0] * p[1].conj()).re > 0.0)
        .collect();
    let ones = bits.iter().filter(|&&b| b).count();
    if ones % 2 == 1 {
        let packed = bits.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
        return Err(Error::CorruptFrame { bits: packed });
    }
    Ok(bits[..ID_BITS]
        .iter()
        .fold(0u8, |acc, &b| (acc << 1) | b as u8))
}
