use serde::{Deserialize, Serialize};

use super::feature::{extract_feature, FeatureParams};
use super::templates::{estimate_aoa, Plane, TemplateLibrary};
use crate::channel::{AnchorSpec, Recording};
use crate::error::{Error, Result};
use crate::waveform::ChirpSpec;

/// Confidence attached to each part of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementWeights {
    pub angle: f64,
    pub range: f64,
    pub depth: f64,
}

impl Default for MeasurementWeights {
    fn default() -> Self {
        Self {
            angle: 1.0,
            range: 1.0,
            depth: 1.0,
        }
    }
}

/// Bearing, slant range and depth of the receiver as seen from one anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorMeasurement {
    pub anchor_id: u8,
    /// Time of the capture, s.
    #[serde(default)]
    pub epoch: f64,
    /// World azimuth from the anchor to the receiver, radians.
    pub bearing: f64,
    /// Slant range, m.
    pub range: f64,
    /// Receiver depth, m.
    pub depth: f64,
    /// `sqrt(range^2 - (depth - anchor depth)^2)`.
    pub horizontal_range: f64,
    pub weights: MeasurementWeights,
}

impl AnchorMeasurement {
    pub fn new(
        anchor_id: u8,
        epoch: f64,
        bearing: f64,
        range: f64,
        depth: f64,
        anchor_depth: f64,
        weights: MeasurementWeights,
    ) -> Result<Self> {
        Ok(Self {
            anchor_id,
            epoch,
            bearing,
            range,
            depth,
            horizontal_range: horizontal_range(range, depth - anchor_depth)?,
            weights,
        })
    }

    /// Checks the stored horizontal range against the anchor depth.
    pub fn validate(&self, anchor_depth: f64) -> Result<()> {
        let vals = [self.bearing, self.range, self.depth, self.horizontal_range];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "anchor {}: non-finite measurement",
                self.anchor_id
            )));
        }
        let w = self.weights;
        if [w.angle, w.range, w.depth].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "anchor {}: weights must be finite and non-negative",
                self.anchor_id
            )));
        }
        let h = horizontal_range(self.range, self.depth - anchor_depth)?;
        if (h - self.horizontal_range).abs() > 1e-6 * h.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "anchor {}: horizontal range {} disagrees with range and depth ({h})",
                self.anchor_id, self.horizontal_range
            )));
        }
        Ok(())
    }
}

pub fn horizontal_range(range: f64, depth_offset: f64) -> Result<f64> {
    if !(range >= depth_offset.abs()) {
        return Err(Error::InfeasibleMeasurement {
            range,
            depth_offset: depth_offset.abs(),
        });
    }
    Ok((range * range - depth_offset * depth_offset).sqrt())
}

/// Everything the receiver knows when turning a capture into a measurement.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext<'a> {
    pub anchor: &'a AnchorSpec,
    pub chirp: &'a ChirpSpec,
    pub sound_speed: f64,
    pub azimuth: &'a TemplateLibrary,
    /// Without it the receiver is taken to be level with the anchor.
    pub elevation: Option<&'a TemplateLibrary>,
    /// Depth weight of that level assumption.
    pub level_depth_weight: f64,
    pub feature: &'a FeatureParams,
}

/// Full receiver pipeline for one anchor's transmission.
pub fn measure(rec: &Recording, ctx: &MeasureContext, epoch: f64) -> Result<AnchorMeasurement> {
    if ctx.azimuth.plane != Plane::Azimuth {
        return Err(Error::InvalidArgument("bearing needs an azimuth-plane library".into()));
    }
    let ex = extract_feature(rec, ctx.chirp, ctx.feature)
        .map_err(|e| e.context(format!("anchor {}", ctx.anchor.id)))?;
    let lag = ex.onset.index.saturating_sub(ex.em.index) as f64;
    let range = (ctx.sound_speed * lag / rec.sample_rate - ctx.azimuth.range_bias).max(0.0);
    let aoa = estimate_aoa(&ex.feature, ctx.azimuth)?;
    let a_z = ctx.anchor.position[2];
    let (depth, w_dep) = match ctx.elevation {
        Some(lib) => {
            let el = estimate_aoa(&ex.feature, lib)?;
            // with h = r cos(el) the relation z = a_z + h tan(el) reduces to this
            (a_z + range * el.angle.sin(), el.score)
        }
        None => (a_z, ctx.level_depth_weight),
    };
    AnchorMeasurement::new(
        ctx.anchor.id,
        epoch,
        aoa.angle,
        range,
        depth,
        a_z,
        MeasurementWeights {
            angle: aoa.score,
            range: ex.onset.score,
            depth: w_dep,
        },
    )
}
