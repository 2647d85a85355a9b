use serde::{Deserialize, Serialize};

use crate::channel::Recording;
use crate::error::{Error, Result};
use crate::signal::{correlate, Correlation};
use crate::waveform::{synth_chirp, ChirpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectOptions {
    /// Smallest normalized correlation accepted as a detection.
    pub floor: f64,
    /// Acoustic onset: first lag whose correlation magnitude reaches this
    /// fraction of the strongest arrival.
    pub first_arrival_fraction: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            floor: 0.35,
            first_arrival_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub index: usize,
    /// Normalized correlation in `[0, 1]`.
    pub score: f64,
}

fn correlation_of(rec: &Recording, spec: &ChirpSpec) -> Result<Correlation> {
    let r = synth_chirp(spec)?;
    if rec.samples.len() < r.len() {
        return Err(Error::InvalidArgument(format!(
            "capture of {} samples is shorter than the {}-sample chirp",
            rec.samples.len(),
            r.len()
        )));
    }
    Ok(correlate(&rec.samples, &r))
}

/// Half-width of the compressed pulse's main lobe, samples.
fn mainlobe(spec: &ChirpSpec) -> usize {
    if spec.bandwidth > 0.0 {
        (spec.sample_rate / spec.bandwidth).ceil() as usize
    } else {
        spec.sample_count()
    }
}

/// Lag with the highest normalized correlation against the reference chirp.
pub fn detect_chirp(rec: &Recording, spec: &ChirpSpec, opts: &DetectOptions) -> Result<Detection> {
    let c = correlation_of(rec, spec)?;
    let (index, &score) = c
        .score
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty correlation");
    if score < opts.floor {
        return Err(Error::NotFound(format!(
            "best chirp correlation {score:.3} below floor {:.3}",
            opts.floor
        )));
    }
    Ok(Detection { index, score })
}

/// Earliest copy of the drive waveform: the leakage precedes every acoustic
/// arrival.
pub fn detect_em_marker(rec: &Recording, drive: &ChirpSpec, opts: &DetectOptions) -> Result<Detection> {
    let c = correlation_of(rec, drive)?;
    let first = c
        .score
        .iter()
        .position(|&s| s >= opts.floor)
        .ok_or_else(|| Error::NotFound("no leakage marker above floor".into()))?;
    let end = (first + mainlobe(drive) + 1).min(c.score.len());
    let index = (first..end)
        .max_by(|&a, &b| c.score[a].total_cmp(&c.score[b]).then(b.cmp(&a)))
        .unwrap_or(first);
    Ok(Detection {
        index,
        score: c.score[index],
    })
}

/// First acoustic arrival after the leakage at `em_index`. Falls back to the
/// marker itself when nothing separable follows it (zero distance).
pub fn detect_acoustic_onset(
    rec: &Recording,
    spec: &ChirpSpec,
    em_index: usize,
    opts: &DetectOptions,
) -> Result<Detection> {
    let c = correlation_of(rec, spec)?;
    let lobe = mainlobe(spec);
    let start = em_index + 2 * lobe;
    if start >= c.magnitude.len() {
        return Ok(Detection {
            index: em_index,
            score: c.score.get(em_index).copied().unwrap_or(0.0),
        });
    }
    let region = &c.magnitude[start..];
    let peak = region.iter().cloned().fold(0.0, f64::max);
    let threshold = opts.first_arrival_fraction * peak;
    let first = region
        .iter()
        .zip(&c.score[start..])
        .position(|(&m, &s)| m > 0.0 && m >= threshold && s >= opts.floor);
    let Some(first) = first else {
        return Ok(Detection {
            index: em_index,
            score: c.score[em_index.min(c.score.len() - 1)],
        });
    };
    let first = start + first;
    let end = (first + lobe + 1).min(c.magnitude.len());
    let index = (first..end)
        .max_by(|&a, &b| c.magnitude[a].total_cmp(&c.magnitude[b]).then(b.cmp(&a)))
        .unwrap_or(first);
    Ok(Detection {
        index,
        score: c.score[index],
    })
}
