//! Metasurface physics: unit-cell phase and absorption, the ring array's far
//! field, and the directional gain table built from it.

mod array;
mod cell;
mod table;

pub use array::{
    far_field_pressure, far_field_pressure_3d, ElevationModel, MetasurfaceConfig,
    MetasurfaceJson, DEFAULT_CELL_LEN, DEFAULT_OUTER_RADIUS,
};
pub(crate) use array::{
    cell_response, far_field_sums_3d, geometric_factor, is_active,
};
pub use cell::{
    amplitude_transmission, min_full_coverage_thickness, phase_span, unit_cell_phase,
    unwrapped_phase, MaterialPair, UnitCellSpec,
};
pub use table::{
    build_gain_table, default_angle_grid, default_freq_grid, linspace, DirectionalGainTable,
};
