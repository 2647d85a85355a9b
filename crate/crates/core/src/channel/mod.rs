//! Vertical-plane multipath channel: image-source paths, TDoA maps, and
//! synthetic hydrophone captures with electromagnetic leakage and noise.

mod capture;
mod geometry;
mod scenario;

pub use capture::{
    render_capture, simulate_anchor_at, simulate_anchor_capture, simulate_capture,
    simulate_with_paths, AnchorMarker, ArrivalTruth, CaptureMeta, CaptureTruth, Emission,
    NoiseSpec, Radiator, Recording, RxCapture, Waveform,
};
pub(crate) use geometry::dist;
pub use geometry::{min_tdoa_map, path_set, Path, PathType, Position, TankWalls, WaterGeometry};
pub use scenario::{AnchorSpec, ScenarioConfig, TimedPosition};
