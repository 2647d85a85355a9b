//! Two-layer unit cell: a solid segment followed by a water gap.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Acoustic constants of the solid/water stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialPair {
    /// Sound speed in the solid, m/s.
    pub c_solid: f64,
    /// Sound speed in water, m/s.
    pub c_water: f64,
    /// Absorption prefactor of the solid, dB cm^-1 Hz^-n.
    pub atten_prefactor: f64,
    /// Power-law exponent of the absorption.
    pub atten_exponent: f64,
}

impl MaterialPair {
    /// 3D-printed PLA in fresh water.
    pub const PLA_WATER: MaterialPair = MaterialPair {
        c_solid: 1939.4,
        c_water: 1500.0,
        atten_prefactor: 3.72e-8,
        atten_exponent: 1.39,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_solid", self.c_solid),
            ("c_water", self.c_water),
            ("atten_prefactor", self.atten_prefactor),
            ("atten_exponent", self.atten_exponent),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.c_solid == self.c_water {
            return Err(Error::DegenerateMaterial(self.c_solid));
        }
        Ok(())
    }

    /// Absorption coefficient of the solid in dB/cm at frequency `f` (Hz).
    pub fn attenuation_db_per_cm(&self, f: f64) -> f64 {
        self.atten_prefactor * f.powf(self.atten_exponent)
    }
}

impl Default for MaterialPair {
    fn default() -> Self {
        Self::PLA_WATER
    }
}

/// One cell: `solid_len` of solid followed by `total_len - solid_len` of water (metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCellSpec {
    pub solid_len: f64,
    pub total_len: f64,
}

impl UnitCellSpec {
    pub fn new(solid_len: f64, total_len: f64) -> Result<Self> {
        let cell = Self {
            solid_len,
            total_len,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.solid_len.is_finite() && self.total_len.is_finite()) {
            return Err(Error::InvalidArgument("cell lengths must be finite".into()));
        }
        if self.solid_len < 0.0 || self.solid_len > self.total_len {
            return Err(Error::InvalidArgument(format!(
                "cell needs 0 <= solid_len <= total_len, got {} / {}",
                self.solid_len, self.total_len
            )));
        }
        Ok(())
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if f.is_finite() && f > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {f}"
        )))
    }
}

/// Path length through the cell measured in wavelengths (not reduced mod 1).
pub(crate) fn cycles(cell: &UnitCellSpec, f: f64, mats: &MaterialPair) -> f64 {
    let water = cell.total_len - cell.solid_len;
    cell.solid_len * f / mats.c_solid + water * f / mats.c_water
}

/// Output phase of the cell in `[0, 2pi)`.
pub fn unit_cell_phase(cell: &UnitCellSpec, f: f64, mats: &MaterialPair) -> Result<f64> {
    check_frequency(f)?;
    cell.validate()?;
    Ok(phase_from_cycles(cycles(cell, f, mats)))
}

pub(crate) fn phase_from_cycles(cycles: f64) -> f64 {
    let frac = cycles - cycles.floor();
    let phase = frac * TAU;
    if phase >= TAU {
        0.0
    } else {
        phase
    }
}

/// Unwrapped phase accumulated across the cell, radians.
pub fn unwrapped_phase(cell: &UnitCellSpec, f: f64, mats: &MaterialPair) -> Result<f64> {
    check_frequency(f)?;
    cell.validate()?;
    Ok(TAU * cycles(cell, f, mats))
}

/// Pressure amplitude ratio after the solid segment, in `(0, 1]`.
pub fn amplitude_transmission(cell: &UnitCellSpec, f: f64, mats: &MaterialPair) -> Result<f64> {
    check_frequency(f)?;
    Ok(transmission(cell.solid_len, f, mats))
}

pub(crate) fn transmission(solid_len: f64, f: f64, mats: &MaterialPair) -> f64 {
    let d_cm = solid_len * 100.0;
    10f64.powf(-d_cm * mats.attenuation_db_per_cm(f) / 20.0)
}

/// Smallest cell length whose phase range covers a full cycle at `f`.
pub fn min_full_coverage_thickness(mats: &MaterialPair, f: f64) -> Result<f64> {
    check_frequency(f)?;
    if mats.c_solid == mats.c_water {
        return Err(Error::DegenerateMaterial(mats.c_solid));
    }
    let (c1, c2) = (mats.c_solid, mats.c_water);
    Ok(c1 * c2 / ((c1 - c2).abs() * f))
}

/// Span of unwrapped phase reachable by sweeping `solid_len` over `[0, total_len]`.
pub fn phase_span(total_len: f64, f: f64, mats: &MaterialPair) -> Result<f64> {
    let lo = unwrapped_phase(&UnitCellSpec::new(0.0, total_len)?, f, mats)?;
    let hi = unwrapped_phase(&UnitCellSpec::new(total_len, total_len)?, f, mats)?;
    Ok((hi - lo).abs())
}
