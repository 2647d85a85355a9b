//! Per-anchor measurements from a capture: bearing and elevation by template
//! matching, slant range from the leakage-to-arrival delay.

mod feature;
mod measurement;
mod ranging;
mod templates;

pub use feature::{extract_feature, feature_at, Extracted, FeatureKind, FeatureParams};
pub use measurement::{
    horizontal_range, measure, AnchorMeasurement, MeasureContext, MeasurementWeights,
};
pub use ranging::{estimate_range, RangeEstimate};
pub use templates::{
    build_templates, calibration_position, estimate_aoa, estimate_depth, AngleMatch, AoaEstimate,
    DepthEstimate, Plane, TemplateLibrary, TemplateOptions, MIN_TEMPLATES,
};
