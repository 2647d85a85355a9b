use std::path::Path as FsPath;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::feature::{extract_feature, FeatureKind, FeatureParams};
use crate::angle::abs_diff;
use crate::channel::{dist, simulate_anchor_at, AnchorSpec, Position, ScenarioConfig, Waveform};
use crate::dsp::EnvelopeFeature;
use crate::error::{Error, Result};

/// Fewer entries than this cannot discriminate bearings meaningfully.
pub const MIN_TEMPLATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    /// Entries indexed by world azimuth at a fixed elevation.
    #[default]
    Azimuth,
    /// Entries indexed by elevation (positive downward) at a fixed azimuth.
    Elevation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TemplateOptions {
    pub plane: Plane,
    /// The angle held constant while the other is swept, radians.
    pub fixed_angle: f64,
    pub feature: FeatureParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateLibrary {
    pub anchor_id: u8,
    pub plane: Plane,
    pub fixed_angle: f64,
    pub kind: FeatureKind,
    pub calibration_ranges: Vec<f64>,
    /// Mean amount by which the leakage-to-onset range overshot the true
    /// range during calibration, m. Metasurface group delay shows up here.
    pub range_bias: f64,
    /// Feature grid, Hz.
    pub freqs: Vec<f64>,
    /// Radians.
    pub angles: Vec<f64>,
    /// Unit-norm rows, one per angle.
    pub templates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleMatch {
    pub angle: f64,
    /// Cosine similarity.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoaEstimate {
    pub angle: f64,
    pub score: f64,
    /// Best five matches in rank order, the winner first.
    pub alternatives: Vec<AngleMatch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    /// m, positive down.
    pub depth: f64,
    pub elevation: f64,
    pub score: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0))
}

impl TemplateLibrary {
    pub fn validate(&self) -> Result<()> {
        if self.angles.len() < MIN_TEMPLATES {
            return Err(Error::InvalidArgument(format!(
                "template library has {} entries, need at least {MIN_TEMPLATES}",
                self.angles.len()
            )));
        }
        if self.templates.len() != self.angles.len() {
            return Err(Error::InvalidArgument(format!(
                "{} templates for {} angles",
                self.templates.len(),
                self.angles.len()
            )));
        }
        if self.freqs.is_empty() {
            return Err(Error::InvalidArgument("empty feature grid".into()));
        }
        for (i, row) in self.templates.iter().enumerate() {
            if row.len() != self.freqs.len() {
                return Err(Error::InvalidArgument(format!(
                    "template {i} has {} bins, grid has {}",
                    row.len(),
                    self.freqs.len()
                )));
            }
            let n = norm(row);
            if !n.is_finite() || n == 0.0 {
                return Err(Error::DegenerateSpectrum {
                    index: i,
                    angle_deg: self.angles[i].to_degrees(),
                });
            }
        }
        for (i, &a) in self.angles.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::InvalidArgument(format!("angle {i} is not finite")));
            }
            for &b in &self.angles[i + 1..] {
                let close = match self.plane {
                    Plane::Azimuth => abs_diff(a, b) < 1e-12,
                    Plane::Elevation => (a - b).abs() < 1e-12,
                };
                if close {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate template angle {:.4} deg",
                        a.to_degrees()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let lib: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        lib.validate()?;
        Ok(lib)
    }

    pub fn save(&self, path: &FsPath) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    /// Every entry scored against `feature`, best first; equal scores rank
    /// the smaller angle first.
    pub fn rank(&self, feature: &EnvelopeFeature) -> Result<Vec<AngleMatch>> {
        feature.validate()?;
        if !same_grid(&feature.freqs, &self.freqs) {
            return Err(Error::InvalidArgument(format!(
                "feature grid ({} bins) does not match the library grid ({} bins)",
                feature.freqs.len(),
                self.freqs.len()
            )));
        }
        let q = &feature.resampled_spectrum;
        let nq = norm(q);
        if nq == 0.0 {
            return Err(Error::InvalidArgument("zero feature cannot be matched".into()));
        }
        let mut out: Vec<AngleMatch> = self
            .angles
            .iter()
            .zip(&self.templates)
            .map(|(&angle, row)| AngleMatch {
                angle,
                score: row.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / nq,
            })
            .collect();
        out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.angle.total_cmp(&b.angle)));
        Ok(out)
    }
}

/// Receiver position for a calibration shot.
pub fn calibration_position(anchor: &Position, plane: Plane, fixed: f64, angle: f64, range: f64) -> Position {
    let (az, el) = match plane {
        Plane::Azimuth => (angle, fixed),
        Plane::Elevation => (fixed, angle),
    };
    [
        anchor[0] + range * el.cos() * az.cos(),
        anchor[1] + range * el.cos() * az.sin(),
        anchor[2] + range * el.sin(),
    ]
}

struct Shot {
    spectrum: Vec<f64>,
    freqs: Vec<f64>,
    bias: f64,
}

fn calibrate_angle(
    scn: &ScenarioConfig,
    anchor: &AnchorSpec,
    angle: f64,
    ranges: &[f64],
    opts: &TemplateOptions,
) -> Result<Shot> {
    let wf = Waveform::Chirp(scn.chirp);
    let mut acc: Option<Shot> = None;
    for &r in ranges {
        let rx = calibration_position(&anchor.position, opts.plane, opts.fixed_angle, angle, r);
        scn.geometry.check_position(&rx, "calibration receiver")?;
        let cap = simulate_anchor_at(scn, anchor, rx, &wf, None)?;
        let ex = extract_feature(&cap.recording, &scn.chirp, &opts.feature)?;
        let measured = scn.geometry.sound_speed * (ex.onset.index - ex.em.index) as f64 / scn.chirp.sample_rate;
        let bias = measured - dist(&anchor.position, &rx);
        match &mut acc {
            None => {
                acc = Some(Shot {
                    spectrum: ex.feature.resampled_spectrum,
                    freqs: ex.feature.freqs,
                    bias,
                })
            }
            Some(s) => {
                s.spectrum
                    .iter_mut()
                    .zip(&ex.feature.resampled_spectrum)
                    .for_each(|(a, b)| *a += b);
                s.bias += bias;
            }
        }
    }
    Ok(acc.expect("at least one range"))
}

/// Noise-free calibration: a capture at every grid angle and range, features
/// averaged over ranges and scaled to unit norm.
pub fn build_templates(
    scn: &ScenarioConfig,
    anchor_id: u8,
    angles: &[f64],
    ranges: &[f64],
    opts: &TemplateOptions,
) -> Result<TemplateLibrary> {
    scn.validate()?;
    opts.feature.validate(&scn.chirp)?;
    if angles.is_empty() {
        return Err(Error::InvalidArgument("empty calibration angle grid".into()));
    }
    if ranges.is_empty() || ranges.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("calibration ranges must be positive and non-empty".into()));
    }
    let anchor = &scn.anchors[scn.anchor_index(anchor_id)?];
    let shots: Vec<Shot> = angles
        .par_iter()
        .map(|&a| {
            calibrate_angle(scn, anchor, a, ranges, opts)
                .map_err(|e| e.context(format!("calibration at {:.3} deg", a.to_degrees())))
        })
        .collect::<Result<_>>()?;

    let freqs = shots[0].freqs.clone();
    let mut templates = Vec::with_capacity(shots.len());
    let mut bias = 0.0;
    for (i, s) in shots.into_iter().enumerate() {
        let n = norm(&s.spectrum);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::DegenerateSpectrum {
                index: i,
                angle_deg: angles[i].to_degrees(),
            });
        }
        templates.push(s.spectrum.iter().map(|v| v / n).collect());
        bias += s.bias;
    }
    let lib = TemplateLibrary {
        anchor_id,
        plane: opts.plane,
        fixed_angle: opts.fixed_angle,
        kind: opts.feature.kind,
        calibration_ranges: ranges.to_vec(),
        range_bias: bias / (angles.len() * ranges.len()) as f64,
        freqs,
        angles: angles.to_vec(),
        templates,
    };
    lib.validate()?;
    Ok(lib)
}

/// Library angle with the highest cosine similarity to `feature`.
pub fn estimate_aoa(feature: &EnvelopeFeature, lib: &TemplateLibrary) -> Result<AoaEstimate> {
    let ranked = lib.rank(feature)?;
    Ok(AoaEstimate {
        angle: ranked[0].angle,
        score: ranked[0].score,
        alternatives: ranked.into_iter().take(5).collect(),
    })
}

/// Depth below the anchor at horizontal range `h` from the matched elevation.
pub fn estimate_depth(
    feature: &EnvelopeFeature,
    lib: &TemplateLibrary,
    anchor_depth: f64,
    h: f64,
) -> Result<DepthEstimate> {
    if lib.plane != Plane::Elevation {
        return Err(Error::InvalidArgument("depth needs an elevation-plane library".into()));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizontal range must be non-negative, got {h}")));
    }
    let m = estimate_aoa(feature, lib)?;
    Ok(DepthEstimate {
        depth: anchor_depth + h * m.angle.tan(),
        elevation: m.angle,
        score: m.score,
    })
}
