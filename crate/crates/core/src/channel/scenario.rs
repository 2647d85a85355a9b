use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{dist, Position, WaterGeometry};
use crate::ams::{ElevationModel, MetasurfaceConfig};
use crate::error::{Error, Result};
use crate::waveform::ChirpSpec;

/// A fixed transmitter. Without a metasurface it radiates isotropically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSpec {
    pub id: u8,
    pub position: Position,
    #[serde(default)]
    pub metasurface: Option<MetasurfaceConfig>,
    /// Azimuth of the metasurface's zero angle in the world frame, radians.
    #[serde(default)]
    pub orientation: f64,
    #[serde(default)]
    pub elevation_model: ElevationModel,
}

impl AnchorSpec {
    pub fn bare(id: u8, position: Position) -> Self {
        Self {
            id,
            position,
            metasurface: None,
            orientation: 0.0,
            elevation_model: ElevationModel::default(),
        }
    }

    pub fn with_metasurface(id: u8, position: Position, cfg: MetasurfaceConfig) -> Self {
        Self {
            metasurface: Some(cfg),
            ..Self::bare(id, position)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPosition {
    /// s.
    pub t: f64,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub geometry: WaterGeometry,
    pub anchors: Vec<AnchorSpec>,
    pub receiver_path: Vec<TimedPosition>,
    pub chirp: ChirpSpec,
    /// Noise-free capture when absent.
    pub noise_snr_db: Option<f64>,
    /// Leakage level below the acoustic level at 1 m, dB.
    pub em_atten_db: f64,
    pub max_reflections: u32,
    pub seed: u64,
    /// Transmit in consecutive frame slots; otherwise all anchors fire at once.
    pub tdma: bool,
    /// Silence before the first transmission, s.
    pub lead: f64,
    /// Silence after the last arrival, s.
    pub tail: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            geometry: WaterGeometry::default(),
            anchors: Vec::new(),
            receiver_path: Vec::new(),
            chirp: ChirpSpec::default(),
            noise_snr_db: None,
            em_atten_db: 8.0,
            max_reflections: 2,
            seed: 0,
            tdma: true,
            lead: 0.2e-3,
            tail: 0.2e-3,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.chirp.validate()?;
        for a in &self.anchors {
            self.geometry
                .check_position(&a.position, &format!("anchor {}", a.id))?;
            if let Some(cfg) = &a.metasurface {
                cfg.validate()?;
            }
        }
        for (i, a) in self.anchors.iter().enumerate() {
            for b in &self.anchors[i + 1..] {
                if a.id == b.id {
                    return Err(Error::InvalidArgument(format!("duplicate anchor id {}", a.id)));
                }
                if dist(&a.position, &b.position) < 1e-9 {
                    return Err(Error::DegenerateGeometry(format!(
                        "anchors {} and {} coincide",
                        a.id, b.id
                    )));
                }
            }
        }
        for p in &self.receiver_path {
            self.geometry.check_position(&p.position, "receiver")?;
        }
        if !(self.lead >= 0.0 && self.tail >= 0.0) {
            return Err(Error::InvalidArgument("lead and tail must be non-negative".into()));
        }
        if !self.em_atten_db.is_finite() {
            return Err(Error::InvalidArgument("em_atten_db must be finite".into()));
        }
        Ok(())
    }

    pub fn em_amplitude(&self) -> f64 {
        10f64.powf(-self.em_atten_db / 20.0)
    }

    pub fn anchor_index(&self, id: u8) -> Result<usize> {
        self.anchors
            .iter()
            .position(|a| a.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("no anchor with id {id}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let scn: Self = serde_json::from_str(&text)?;
        scn.validate()?;
        Ok(scn)
    }
}
