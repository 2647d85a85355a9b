//! Image-source paths between two points in a layer of water bounded by a
//! pressure-release surface (`z = 0`) and a flat bottom (`z = depth`).
//! Coordinates are metres with `z` pointing down.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Position = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaterGeometry {
    /// Bottom plane, m.
    pub depth: f64,
    /// m/s.
    pub sound_speed: f64,
    pub surface_coeff: f64,
    pub bottom_coeff: f64,
    /// Vertical walls of a rectangular tank; open water when absent.
    pub tank: Option<TankWalls>,
}

impl Default for WaterGeometry {
    fn default() -> Self {
        Self {
            depth: 10.0,
            sound_speed: 1500.0,
            surface_coeff: -1.0,
            bottom_coeff: 0.8,
            tank: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TankWalls {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub coeff: f64,
}

impl WaterGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "water depth must be positive, got {}",
                self.depth
            )));
        }
        if !(self.sound_speed > 0.0 && self.sound_speed.is_finite()) {
            return Err(Error::InvalidArgument("sound speed must be positive".into()));
        }
        if let Some(t) = &self.tank {
            if !(t.x[0] < t.x[1] && t.y[0] < t.y[1]) {
                return Err(Error::InvalidArgument("tank walls must enclose an area".into()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Position) -> bool {
        let in_column = (0.0..=self.depth).contains(&p[2]);
        let in_tank = self.tank.is_none_or(|t| {
            (t.x[0]..=t.x[1]).contains(&p[0]) && (t.y[0]..=t.y[1]).contains(&p[1])
        });
        in_column && in_tank && p.iter().all(|v| v.is_finite())
    }

    pub fn check_position(&self, p: &Position, what: &str) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::DegenerateGeometry(format!(
                "{what} at {p:?} lies outside the water volume"
            )))
        }
    }
}

/// Boundary interactions along one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathType {
    pub surface: u32,
    pub bottom: u32,
    pub walls: u32,
}

impl PathType {
    pub fn bounces(&self) -> u32 {
        self.surface + self.bottom + self.walls
    }

    pub fn is_los(&self) -> bool {
        self.bounces() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// s.
    pub delay: f64,
    /// Signed: includes reflection coefficients and `1/length` spreading.
    pub amplitude: f64,
    /// m.
    pub length: f64,
    pub kind: PathType,
    /// Departure direction at the transmitter, radians.
    pub azimuth: f64,
    /// Positive below the horizontal.
    pub elevation: f64,
}

fn reflect(c: f64, plane: f64) -> f64 {
    2.0 * plane - c
}

/// Images of coordinate `s` between planes `lo` and `hi` with at most `max`
/// reflections: `(coordinate, hits on lo, hits on hi)`.
fn slab_images(s: f64, lo: f64, hi: f64, max: u32) -> Vec<(f64, u32, u32)> {
    let mut out = vec![(s, 0, 0)];
    for start_low in [true, false] {
        let (mut c, mut n_lo, mut n_hi, mut low) = (s, 0, 0, start_low);
        for _ in 0..max {
            if low {
                c = reflect(c, lo);
                n_lo += 1;
            } else {
                c = reflect(c, hi);
                n_hi += 1;
            }
            out.push((c, n_lo, n_hi));
            low = !low;
        }
    }
    out
}

/// Every path from `tx` to `rx` with at most `max_reflections` bounces,
/// sorted by delay. The zero-bounce entry comes first.
pub fn path_set(
    tx: &Position,
    rx: &Position,
    geom: &WaterGeometry,
    max_reflections: u32,
) -> Result<Vec<Path>> {
    geom.validate()?;
    geom.check_position(tx, "transmitter")?;
    geom.check_position(rx, "receiver")?;
    let los = dist(tx, rx);
    if los < 1e-9 {
        return Err(Error::DegenerateGeometry(
            "transmitter and receiver coincide".into(),
        ));
    }
    let zs = slab_images(tx[2], 0.0, geom.depth, max_reflections);
    let (xs, ys) = match &geom.tank {
        Some(t) => (
            slab_images(tx[0], t.x[0], t.x[1], max_reflections),
            slab_images(tx[1], t.y[0], t.y[1], max_reflections),
        ),
        None => (vec![(tx[0], 0, 0)], vec![(tx[1], 0, 0)]),
    };
    let wall = geom.tank.map_or(1.0, |t| t.coeff);
    let mut paths = Vec::new();
    for &(x, xl, xh) in &xs {
        for &(y, yl, yh) in &ys {
            for &(z, surf, bot) in &zs {
                let walls = xl + xh + yl + yh;
                let kind = PathType {
                    surface: surf,
                    bottom: bot,
                    walls,
                };
                if kind.bounces() > max_reflections {
                    continue;
                }
                let mut v = [rx[0] - x, rx[1] - y, rx[2] - z];
                // an odd number of mirrorings on an axis reverses that component
                if (xl + xh) % 2 == 1 {
                    v[0] = -v[0];
                }
                if (yl + yh) % 2 == 1 {
                    v[1] = -v[1];
                }
                if (surf + bot) % 2 == 1 {
                    v[2] = -v[2];
                }
                let length = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let coeff = geom.surface_coeff.powi(surf as i32)
                    * geom.bottom_coeff.powi(bot as i32)
                    * wall.powi(walls as i32);
                paths.push(Path {
                    delay: length / geom.sound_speed,
                    amplitude: coeff / length,
                    length,
                    kind,
                    azimuth: v[1].atan2(v[0]),
                    elevation: v[2].atan2(v[0].hypot(v[1])),
                });
            }
        }
    }
    paths.sort_by(|a, b| {
        a.kind
            .is_los()
            .cmp(&b.kind.is_los())
            .reverse()
            .then(a.delay.total_cmp(&b.delay))
    });
    Ok(paths)
}

pub(crate) fn dist(a: &Position, b: &Position) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Smallest NLOS-minus-LOS delay, s, for receivers at `(tx.x + range, tx.y,
/// depth)`. Rows follow `rx_depths`, columns `ranges`.
pub fn min_tdoa_map(
    geom: &WaterGeometry,
    tx: &Position,
    rx_depths: &[f64],
    ranges: &[f64],
    max_reflections: u32,
) -> Result<Vec<Vec<f64>>> {
    if rx_depths.is_empty() || ranges.is_empty() {
        return Err(Error::InvalidArgument("TDoA grids must be non-empty".into()));
    }
    if max_reflections == 0 {
        return Err(Error::InvalidArgument(
            "a TDoA map needs at least one reflection".into(),
        ));
    }
    rx_depths
        .iter()
        .map(|&z| {
            ranges
                .iter()
                .map(|&r| {
                    let rx = [tx[0] + r, tx[1], z];
                    let paths = path_set(tx, &rx, geom, max_reflections)?;
                    let los = paths[0].delay;
                    Ok(paths[1..]
                        .iter()
                        .map(|p| p.delay - los)
                        .fold(f64::INFINITY, f64::min))
                })
                .collect()
        })
        .collect()
}
