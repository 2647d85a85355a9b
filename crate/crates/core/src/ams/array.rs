//! Circular array of unit cells and its analytical far field.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cell::{cycles, phase_from_cycles, transmission, MaterialPair, UnitCellSpec};
use crate::angle::wrap;
use crate::error::{Error, Result};

/// Default cell length (m), enough for full phase coverage at 200 kHz in PLA/water.
pub const DEFAULT_CELL_LEN: f64 = 0.033;
/// Outer radius of the prototype array, m.
pub const DEFAULT_OUTER_RADIUS: f64 = 0.048;

/// A ring of `N` unit cells centred on the transducer.
#[derive(Debug, Clone, PartialEq)]
pub struct MetasurfaceConfig {
    pub cells: Vec<UnitCellSpec>,
    pub outer_radius: f64,
    pub materials: MaterialPair,
    /// Centre angle of each cell, radians, increasing over `[0, 2pi)`.
    pub cell_angles: Vec<f64>,
}

impl MetasurfaceConfig {
    /// Cells placed at `2pi i / N`.
    pub fn new(cells: Vec<UnitCellSpec>, outer_radius: f64, materials: MaterialPair) -> Result<Self> {
        let n = cells.len();
        let cfg = Self {
            cell_angles: crate::angle::full_circle(n),
            cells,
            outer_radius,
            materials,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `N` cells of length `total_len` with the given solid lengths.
    pub fn from_solid_lengths(
        solid: &[f64],
        total_len: f64,
        outer_radius: f64,
        materials: MaterialPair,
    ) -> Result<Self> {
        let cells = solid
            .iter()
            .map(|&d| UnitCellSpec::new(d, total_len))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cells, outer_radius, materials)
    }

    /// Every solid length drawn uniformly from `[0, total_len]`.
    pub fn random<R: Rng + ?Sized>(n: usize, total_len: f64, rng: &mut R) -> Result<Self> {
        let solid: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=total_len)).collect();
        Self::from_solid_lengths(
            &solid,
            total_len,
            DEFAULT_OUTER_RADIUS,
            MaterialPair::PLA_WATER,
        )
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn solid_lengths(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.solid_len).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.materials.validate()?;
        let n = self.cells.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a metasurface needs at least 2 cells, got {n}"
            )));
        }
        if !(self.outer_radius.is_finite() && self.outer_radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "outer radius must be positive, got {}",
                self.outer_radius
            )));
        }
        if self.cell_angles.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} cell angles for {n} cells",
                self.cell_angles.len()
            )));
        }
        let pitch = TAU / n as f64;
        if !(0.0..pitch).contains(&self.cell_angles[0]) {
            return Err(Error::InvalidArgument(
                "first cell angle must lie in [0, 2pi/N)".into(),
            ));
        }
        for w in self.cell_angles.windows(2) {
            if !((w[1] - w[0]) - pitch).abs().lt(&1e-9) {
                return Err(Error::InvalidArgument(
                    "cell angles must be strictly increasing with uniform pitch".into(),
                ));
            }
        }
        for c in &self.cells {
            c.validate()?;
        }
        Ok(())
    }

    /// Complex response `A(f, d) e^{j phi(f, d)}` of cell `i`.
    pub(crate) fn cell_response(&self, i: usize, f: f64) -> Complex64 {
        cell_response(&self.cells[i], f, &self.materials)
    }

    pub fn to_json(&self) -> MetasurfaceJson {
        MetasurfaceJson {
            cells_mm: self.cells.iter().map(|c| c.solid_len * 1e3).collect(),
            outer_radius_mm: self.outer_radius * 1e3,
            c_solid: self.materials.c_solid,
            c_water: self.materials.c_water,
            atten_prefactor: self.materials.atten_prefactor,
            atten_exponent: self.materials.atten_exponent,
            cell_length_mm: self.cells.first().map_or(DEFAULT_CELL_LEN, |c| c.total_len) * 1e3,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: MetasurfaceJson = serde_json::from_str(&text)?;
        doc.into_config()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }
}

pub(crate) fn cell_response(cell: &UnitCellSpec, f: f64, mats: &MaterialPair) -> Complex64 {
    let amp = transmission(cell.solid_len, f, mats);
    Complex64::from_polar(amp, phase_from_cycles(cycles(cell, f, mats)))
}

/// On-disk form of [`MetasurfaceConfig`]; lengths in millimetres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetasurfaceJson {
    pub cells_mm: Vec<f64>,
    pub outer_radius_mm: f64,
    pub c_solid: f64,
    pub c_water: f64,
    pub atten_prefactor: f64,
    pub atten_exponent: f64,
    #[serde(default = "default_cell_length_mm")]
    pub cell_length_mm: f64,
}

fn default_cell_length_mm() -> f64 {
    DEFAULT_CELL_LEN * 1e3
}

impl MetasurfaceJson {
    pub fn into_config(self) -> Result<MetasurfaceConfig> {
        let solid: Vec<f64> = self.cells_mm.iter().map(|d| d * 1e-3).collect();
        MetasurfaceConfig::from_solid_lengths(
            &solid,
            self.cell_length_mm * 1e-3,
            self.outer_radius_mm * 1e-3,
            MaterialPair {
                c_solid: self.c_solid,
                c_water: self.c_water,
                atten_prefactor: self.atten_prefactor,
                atten_exponent: self.atten_exponent,
            },
        )
    }
}

impl Serialize for MetasurfaceConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetasurfaceConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MetasurfaceJson::deserialize(d)?
            .into_config()
            .map_err(serde::de::Error::custom)
    }
}

/// Whether a cell at `cell_angle` faces an observer at `theta`.
pub(crate) fn is_active(theta: f64, cell_angle: f64) -> bool {
    wrap(theta - cell_angle).abs() < FRAC_PI_2
}

/// Geometric factor `e^{j 2pi r cos(dtheta) / lambda} cos(dtheta)` of one active cell.
pub(crate) fn geometric_factor(radius: f64, c_water: f64, dtheta: f64, f: f64) -> Complex64 {
    let cos = dtheta.cos();
    let k_r = TAU * radius * f / c_water;
    Complex64::from_polar(cos, k_r * cos)
}

/// Far-field complex pressure at azimuth `theta` for a centre source of pressure `p0`.
pub fn far_field_pressure(
    cfg: &MetasurfaceConfig,
    theta: f64,
    f: f64,
    p0: Complex64,
) -> Result<Complex64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {f}"
        )));
    }
    Ok(p0 * far_field_sum(cfg, theta, f))
}

pub(crate) fn far_field_sum(cfg: &MetasurfaceConfig, theta: f64, f: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &ang) in cfg.cell_angles.iter().enumerate() {
        if is_active(theta, ang) {
            let geo = geometric_factor(cfg.outer_radius, cfg.materials.c_water, theta - ang, f);
            acc += cfg.cell_response(i, f) * geo;
        }
    }
    acc
}

/// Out-of-plane extension of the far-field model.
///
/// Cell `i` radiates from a vertical phase centre `z_i = span * (d_i / D - 1/2)`
/// and the horizontal path difference shrinks with `cos(elevation)`. At zero
/// elevation this reduces exactly to [`far_field_pressure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElevationModel {
    /// Vertical extent over which cell phase centres spread, m.
    pub phase_center_span: f64,
}

impl Default for ElevationModel {
    fn default() -> Self {
        Self {
            phase_center_span: 0.024,
        }
    }
}

/// Far-field pressure at azimuth `theta` and elevation `elevation` (radians,
/// positive below the array plane).
pub fn far_field_pressure_3d(
    cfg: &MetasurfaceConfig,
    model: &ElevationModel,
    theta: f64,
    elevation: f64,
    f: f64,
    p0: Complex64,
) -> Result<Complex64> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {f}"
        )));
    }
    Ok(p0 * far_field_sum_3d(cfg, model, theta, elevation, f))
}

pub(crate) fn far_field_sum_3d(
    cfg: &MetasurfaceConfig,
    model: &ElevationModel,
    theta: f64,
    elevation: f64,
    f: f64,
) -> Complex64 {
    if elevation == 0.0 {
        return far_field_sum(cfg, theta, f);
    }
    let (sin_e, cos_e) = elevation.sin_cos();
    let k = TAU * f / cfg.materials.c_water;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &ang) in cfg.cell_angles.iter().enumerate() {
        if is_active(theta, ang) {
            let cell = &cfg.cells[i];
            let z = model.phase_center_span * (cell.solid_len / cell.total_len - 0.5);
            let cos = (theta - ang).cos();
            let path = cfg.outer_radius * cos * cos_e + z * sin_e;
            let geo = Complex64::from_polar(cos * cos_e, k * path);
            acc += cfg.cell_response(i, f) * geo;
        }
    }
    acc
}

/// [`far_field_sum_3d`] toward several `(azimuth, elevation)` directions at
/// one frequency, sharing the cell responses. Results are bit-identical to
/// per-direction calls.
pub(crate) fn far_field_sums_3d(
    cfg: &MetasurfaceConfig,
    model: &ElevationModel,
    dirs: &[(f64, f64)],
    f: f64,
    out: &mut [Complex64],
) {
    let responses: Vec<Complex64> = (0..cfg.len()).map(|i| cfg.cell_response(i, f)).collect();
    let k = TAU * f / cfg.materials.c_water;
    for (o, &(theta, elevation)) in out.iter_mut().zip(dirs) {
        let mut acc = Complex64::new(0.0, 0.0);
        if elevation == 0.0 {
            for (i, &ang) in cfg.cell_angles.iter().enumerate() {
                if is_active(theta, ang) {
                    let geo =
                        geometric_factor(cfg.outer_radius, cfg.materials.c_water, theta - ang, f);
                    acc += responses[i] * geo;
                }
            }
        } else {
            let (sin_e, cos_e) = elevation.sin_cos();
            for (i, &ang) in cfg.cell_angles.iter().enumerate() {
                if is_active(theta, ang) {
                    let cell = &cfg.cells[i];
                    let z = model.phase_center_span * (cell.solid_len / cell.total_len - 0.5);
                    let cos = (theta - ang).cos();
                    let path = cfg.outer_radius * cos * cos_e + z * sin_e;
                    acc += responses[i] * Complex64::from_polar(cos * cos_e, k * path);
                }
            }
        }
        *o = acc;
    }
}
