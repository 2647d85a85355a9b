//! Directional gain table `G_theta(f)` and its binary file format.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::array::{far_field_sum, MetasurfaceConfig};
use crate::angle::{abs_diff, wrap};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MBGT";
const VERSION: u16 = 1;

/// Complex gain over an (angle x frequency) grid, stored row-major by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalGainTable {
    pub angles: Vec<f64>,
    pub freqs: Vec<f64>,
    pub gains: Vec<Complex64>,
}

/// 360 angles at 1 degree.
pub fn default_angle_grid() -> Vec<f64> {
    (0..360).map(|i| (i as f64).to_radians()).collect()
}

/// 101 bins from 100 to 200 kHz.
pub fn default_freq_grid() -> Vec<f64> {
    linspace(100e3, 200e3, 101)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl DirectionalGainTable {
    pub fn new(angles: Vec<f64>, freqs: Vec<f64>, gains: Vec<Complex64>) -> Result<Self> {
        let t = Self {
            angles,
            freqs,
            gains,
        };
        t.validate()?;
        Ok(t)
    }

    /// Table with gain `value` everywhere.
    pub fn constant(angles: Vec<f64>, freqs: Vec<f64>, value: Complex64) -> Result<Self> {
        let gains = vec![value; angles.len() * freqs.len()];
        Self::new(angles, freqs, gains)
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles.is_empty() || self.freqs.is_empty() {
            return Err(Error::InvalidArgument("gain table grids must be non-empty".into()));
        }
        if !strictly_increasing(&self.angles) || !strictly_increasing(&self.freqs) {
            return Err(Error::InvalidArgument(
                "gain table grids must be strictly increasing".into(),
            ));
        }
        if self.gains.len() != self.angles.len() * self.freqs.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} gains, got {}",
                self.angles.len() * self.freqs.len(),
                self.gains.len()
            )));
        }
        if self.gains.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(Error::InvalidArgument("gain table has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.angles.len()
    }

    pub fn cols(&self) -> usize {
        self.freqs.len()
    }

    pub fn get(&self, m: usize, l: usize) -> Complex64 {
        self.gains[m * self.freqs.len() + l]
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        let l = self.freqs.len();
        &self.gains[m * l..(m + 1) * l]
    }

    /// Index of the row whose angle is closest to `theta` (circular distance).
    /// Ties go to the lower index.
    pub fn nearest_row(&self, theta: f64) -> usize {
        let theta = wrap(theta);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &a) in self.angles.iter().enumerate() {
            let d = abs_diff(a, theta);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Gain of row `m` at frequency `f`: linear interpolation inside the grid,
    /// unit gain outside it.
    pub fn interpolate(&self, m: usize, f: f64) -> Complex64 {
        let freqs = &self.freqs;
        let row = self.row(m);
        let last = freqs.len() - 1;
        if f < freqs[0] || f > freqs[last] {
            return Complex64::new(1.0, 0.0);
        }
        if freqs.len() == 1 {
            return row[0];
        }
        let hi = freqs.partition_point(|&x| x < f).clamp(1, last);
        let lo = hi - 1;
        let t = (f - freqs[lo]) / (freqs[hi] - freqs[lo]);
        row[lo] * (1.0 - t) + row[hi] * t
    }

    pub fn max_abs(&self) -> f64 {
        self.gains.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.angles.len() as u32).to_le_bytes())?;
        w.write_all(&(self.freqs.len() as u32).to_le_bytes())?;
        for v in self.angles.iter().chain(&self.freqs) {
            w.write_all(&v.to_le_bytes())?;
        }
        for g in &self.gains {
            w.write_all(&g.re.to_le_bytes())?;
            w.write_all(&g.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a gain table (bad magic)".into()));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported gain table version {version}")));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let l = u32::from_le_bytes(b4) as usize;
        let mut read_f64 = || -> Result<f64> {
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let angles = (0..m).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
        let freqs = (0..l).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
        let gains = (0..m * l)
            .map(|_| Ok(Complex64::new(read_f64()?, read_f64()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(angles, freqs, gains)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Evaluates the far-field model on a grid with unit source pressure.
pub fn build_gain_table(
    cfg: &MetasurfaceConfig,
    angles: &[f64],
    freqs: &[f64],
) -> Result<DirectionalGainTable> {
    cfg.validate()?;
    if angles.is_empty() || freqs.is_empty() {
        return Err(Error::InvalidArgument("gain table grids must be non-empty".into()));
    }
    if freqs.iter().any(|&f| !(f.is_finite() && f > 0.0)) {
        return Err(Error::InvalidArgument("frequencies must be positive".into()));
    }
    let gains: Vec<Complex64> = angles
        .par_iter()
        .flat_map_iter(|&theta| freqs.iter().map(move |&f| far_field_sum(cfg, theta, f)))
        .collect();
    DirectionalGainTable::new(angles.to_vec(), freqs.to_vec(), gains)
}
