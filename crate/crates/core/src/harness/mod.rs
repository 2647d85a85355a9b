//! Monte-Carlo sweeps over the full pipeline, run provenance and plot data.

mod config;
mod experiment;
mod manifest;
mod report;

pub use config::{apply_override, load_config, ScenarioSource};
pub use experiment::{run_experiment, CalibrationSpec, ExperimentSpec, SweepAxes};
pub use manifest::{derive_seed, hex, sha256_file, InputRecord, Manifest};
pub use report::{
    export_plotdata, percentile, CellKey, CellReport, ExportOptions, Metric, MetricName, MetricsReport,
    PlotKind, Statistic,
};
