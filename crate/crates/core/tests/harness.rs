//! Sweep harness: pairing, determinism and plot export.

use amsloc::ams::{MetasurfaceConfig, DEFAULT_CELL_LEN};
use amsloc::channel::{AnchorSpec, ScenarioConfig};
use amsloc::dsp::SuppressionParams;
use amsloc::estimators::FeatureParams;
use amsloc::harness::*;
use amsloc::waveform::ChirpSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_surface(seed: u64) -> MetasurfaceConfig {
    MetasurfaceConfig::random(60, DEFAULT_CELL_LEN, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn small_spec(ams: bool) -> ExperimentSpec {
    let anchor = if ams {
        AnchorSpec::with_metasurface(0, [0.0, 0.0, 5.0], random_surface(7))
    } else {
        AnchorSpec::bare(0, [0.0, 0.0, 5.0])
    };
    let mut spec = ExperimentSpec::new(ScenarioConfig {
        anchors: vec![anchor],
        ..Default::default()
    });
    spec.calibration.angles = 36;
    spec.axes.distances = vec![2.0, 4.0];
    spec.axes.ams = vec![ams];
    spec.seed = 42;
    spec
}

fn cell(r: &MetricsReport, pred: impl Fn(&CellKey) -> bool) -> &CellReport {
    r.cells.iter().find(|c| pred(&c.key)).expect("cell present")
}

#[test]
fn repeated_run_writes_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in ["a", "b"] {
        let mut spec = small_spec(false);
        spec.output_dir = Some(dir.path().join(run));
        run_experiment(&spec, dir.path()).unwrap();
        bytes.push(std::fs::read(dir.path().join(run).join("report.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn cells_do_not_depend_on_other_axis_values() {
    let full = run_experiment(&small_spec(false), std::path::Path::new(".")).unwrap();
    let mut spec = small_spec(false);
    spec.axes.distances = vec![4.0];
    let part = run_experiment(&spec, std::path::Path::new(".")).unwrap();
    assert_eq!(part.cells.len(), 1);
    assert_eq!(&part.cells[0], cell(&full, |k| k.distance == 4.0));
}

#[test]
fn metasurface_lowers_bearing_error() {
    let mut spec = small_spec(true);
    spec.calibration.angles = 72;
    spec.axes.distances = vec![1.5];
    spec.axes.ams = vec![true, false];
    spec.trials = 40;
    let r = run_experiment(&spec, std::path::Path::new(".")).unwrap();
    let on = cell(&r, |k| k.ams).aoa_deg.mean.unwrap();
    let off = cell(&r, |k| !k.ams).aoa_deg.mean.unwrap();
    assert!(on < off, "ams on {on} deg, off {off} deg");
}

// Anchor and receiver 0.3 m below the surface at 1.5-2.5 m: the surface
// bounce trails the direct path by 0.047-0.077 ms, inside the 0.2 ms chirp.
#[test]
fn suppression_halves_error_near_the_surface() {
    let chirp = ChirpSpec {
        bandwidth: 250e3,
        ..Default::default()
    };
    let scn = ScenarioConfig {
        anchors: vec![AnchorSpec::with_metasurface(0, [0.0, 0.0, 0.3], random_surface(7))],
        chirp,
        max_reflections: 1,
        ..Default::default()
    };
    let mut spec = ExperimentSpec::new(scn);
    spec.calibration.angles = 144;
    spec.axes.distances = vec![1.5, 2.0, 2.5];
    spec.axes.suppression = vec![true, false];
    spec.trials = 30;
    spec.seed = 3;
    spec.feature = FeatureParams {
        suppression: SuppressionParams {
            f_cut: 30e3,
            t_min: 0.04e-3,
            ..Default::default()
        },
        ..Default::default()
    };
    let r = run_experiment(&spec, std::path::Path::new(".")).unwrap();
    let mean = |sup: bool| {
        let v: Vec<f64> = r
            .cells
            .iter()
            .filter(|c| c.key.suppression == sup)
            .flat_map(|c| c.aoa_deg.cdf.iter().copied())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (on, off) = (mean(true), mean(false));
    assert!(on <= 0.5 * off, "suppressed {on} deg, raw {off} deg");
}

#[test]
fn exported_csvs_are_well_formed() {
    let mut spec = small_spec(false);
    spec.trials = 5;
    let r = run_experiment(&spec, std::path::Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let cdf = export_plotdata(&r, PlotKind::Cdf, &ExportOptions::default(), dir.path()).unwrap();
    let text = std::fs::read_to_string(cdf).unwrap();
    let mut last: Option<(String, f64)> = None;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let p: f64 = cols[2].parse().unwrap();
        assert!(p > 0.0 && p <= 1.0);
        if let Some((c, q)) = &last {
            if c == cols[0] {
                assert!(p >= *q, "{line}");
            }
        }
        last = Some((cols[0].to_string(), p));
    }

    let opts = ExportOptions {
        statistics: vec![Statistic::Mean, Statistic::P90],
        ..Default::default()
    };
    let evd = export_plotdata(&r, PlotKind::ErrorVsDistance, &opts, dir.path()).unwrap();
    let rows = std::fs::read_to_string(evd).unwrap().lines().count() - 1;
    assert_eq!(rows, spec.axes.distances.len() * opts.statistics.len());
}
