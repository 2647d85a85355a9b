//! Command-line front end. Every subcommand reads a JSON config, applies
//! `--set key=value` overrides and writes its outputs plus `manifest.json`
//! into the configured output directory.
//!
//! Exit status: 0 on success, 2 when the configuration is unusable, 3 when
//! the pipeline itself fails.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use amsloc::ams::{
    build_gain_table, linspace, MaterialPair, MetasurfaceConfig, DEFAULT_CELL_LEN, DEFAULT_OUTER_RADIUS,
};
use amsloc::angle::full_circle;
use amsloc::channel::{
    simulate_anchor_capture, simulate_capture, Position, RxCapture, ScenarioConfig, TimedPosition, Waveform,
};
use amsloc::estimators::{
    build_templates, extract_feature, measure, AnchorMeasurement, FeatureParams, MeasureContext, TemplateLibrary,
    TemplateOptions,
};
use amsloc::harness::{
    export_plotdata, load_config, run_experiment, CalibrationSpec, ExperimentSpec, ExportOptions, Manifest,
    MetricsReport, PlotKind, ScenarioSource,
};
use amsloc::localizer::{fuse_track, solve_wnls, synthetic_imu, KalmanParams, PositionEstimate, SolverWeights};
use amsloc::optimizer::{optimize, write_log_csv, OptimizerParams};
use amsloc::waveform::ChirpSpec;
use amsloc::Error;

#[derive(Parser)]
#[command(name = "amsloc", version, about = "Metasurface-assisted underwater localization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration file.
    config: PathBuf,
    /// Override a config value, e.g. `--set optimizer.seed=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize unit-cell lengths and write the metasurface and its gain table.
    OptimizeAms(Common),
    /// Render receiver captures for a scenario.
    Simulate(Common),
    /// Extract the multipath-suppressed feature of a capture.
    Suppress(Common),
    /// Turn captures into per-anchor measurements.
    Estimate(Common),
    /// Solve positions from measurements.
    Localize(Common),
    /// Fuse position fixes with synthetic inertial data.
    Track(Common),
    /// Run a Monte-Carlo sweep.
    Sweep(Common),
    /// Write plot data from a sweep report.
    Export(Common),
}

enum Failure {
    Config(Error),
    Pipeline(Error),
}

trait Phase<T> {
    fn cfg(self) -> Result<T, Failure>;
    fn run(self) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Phase<T> for Result<T, E> {
    fn cfg(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn run(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Pipeline(e.into()))
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(Error::Config(msg.into()))
}

struct Loaded<T> {
    cfg: T,
    base: PathBuf,
    manifest: Manifest,
}

fn load<T: DeserializeOwned>(name: &str, common: &Common) -> Result<Loaded<T>, Failure> {
    let (cfg, value) = load_config::<T>(&common.config, &common.set).cfg()?;
    let base = common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut manifest = Manifest::new(name, value, &common.set);
    manifest.add_input(&common.config).cfg()?;
    Ok(Loaded { cfg, base, manifest })
}

fn out_dir(base: &Path, dir: &Option<PathBuf>, name: &str) -> Result<PathBuf, Failure> {
    let d = base.join(dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(name)));
    std::fs::create_dir_all(&d).run()?;
    Ok(d)
}

fn finish(mut manifest: Manifest, dir: &Path, outputs: Vec<PathBuf>) -> Result<(), Failure> {
    manifest.outputs = outputs;
    let path = manifest.write(dir).run()?;
    println!("{}", path.display());
    Ok(())
}

fn scenario(src: &ScenarioSource, base: &Path, manifest: &mut Manifest) -> Result<ScenarioConfig, Failure> {
    let scn = src.resolve(base).cfg()?;
    if let Some(p) = src.path(base) {
        manifest.add_input(&p).cfg()?;
    }
    Ok(scn)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path).run()?);
    for it in items {
        serde_json::to_writer(&mut w, it).run()?;
        writeln!(w).run()?;
    }
    w.flush().run()
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let f = File::open(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.run()?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| config_err(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

// optimize-ams

#[derive(Deserialize)]
#[serde(default)]
struct OptimizeConfig {
    optimizer: OptimizerParams,
    cells: usize,
    cell_length: f64,
    outer_radius: f64,
    materials: MaterialPair,
    angles: usize,
    freq_min: f64,
    freq_max: f64,
    freq_bins: usize,
    output_dir: Option<PathBuf>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerParams::default(),
            cells: 60,
            cell_length: DEFAULT_CELL_LEN,
            outer_radius: DEFAULT_OUTER_RADIUS,
            materials: MaterialPair::PLA_WATER,
            angles: 360,
            freq_min: 100e3,
            freq_max: 200e3,
            freq_bins: 101,
            output_dir: None,
        }
    }
}

fn cmd_optimize(common: &Common) -> Result<(), Failure> {
    let Loaded { cfg, base, mut manifest } = load::<OptimizeConfig>("optimize-ams", common)?;
    let template = MetasurfaceConfig::from_solid_lengths(
        &vec![0.0; cfg.cells],
        cfg.cell_length,
        cfg.outer_radius,
        cfg.materials,
    )
    .cfg()?;
    let angles = full_circle(cfg.angles);
    let freqs = linspace(cfg.freq_min, cfg.freq_max, cfg.freq_bins);
    cfg.optimizer.validate().cfg()?;
    let dir = out_dir(&base, &cfg.output_dir, "optimize-ams")?;
    let out = optimize(&cfg.optimizer, &template, &angles, &freqs).run()?;

    let ms = dir.join("metasurface.json");
    out.config.save(&ms).run()?;
    let log = dir.join("optimizer_log.csv");
    write_log_csv(&out.log, BufWriter::new(File::create(&log).run()?)).run()?;
    let table = dir.join("gain_table.bin");
    build_gain_table(&out.config, &angles, &freqs).run()?.save(&table).run()?;
    let scores = dir.join("scores.json");
    let summary = serde_json::json!({
        "initial": out.initial_full,
        "final": out.final_full,
        "search_objective": out.objective,
        "initial_search_objective": out.initial_objective,
        "mean_similarity_ratio": out.final_full.mean_similarity / out.initial_full.mean_similarity,
    });
    std::fs::write(&scores, serde_json::to_string_pretty(&summary).run()?).run()?;
    manifest.seeds.push(cfg.optimizer.seed);
    finish(manifest, &dir, vec![ms, log, table, scores])
}

// simulate

#[derive(Deserialize)]
struct SimulateConfig {
    scenario: ScenarioSource,
    /// The scenario's chirp when absent.
    #[serde(default)]
    waveform: Option<Waveform>,
    /// One capture per anchor instead of one TDMA capture per position.
    #[serde(default = "yes")]
    per_anchor: bool,
    /// Indices into the receiver path; all when absent.
    #[serde(default)]
    receivers: Option<Vec<usize>>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

fn cmd_simulate(common: &Common) -> Result<(), Failure> {
    let Loaded { cfg, base, mut manifest } = load::<SimulateConfig>("simulate", common)?;
    let scn = scenario(&cfg.scenario, &base, &mut manifest)?;
    let wf = cfg.waveform.unwrap_or(Waveform::Chirp(scn.chirp));
    let rxs = cfg.receivers.clone().unwrap_or_else(|| (0..scn.receiver_path.len()).collect());
    if let Some(&bad) = rxs.iter().find(|&&i| i >= scn.receiver_path.len()) {
        return Err(config_err(format!("receiver index {bad} outside the receiver path")));
    }
    let dir = out_dir(&base, &cfg.output_dir, "simulate")?;
    manifest.seeds.push(scn.seed);
    let mut outputs = Vec::new();
    for &i in &rxs {
        let caps: Vec<(String, RxCapture)> = if cfg.per_anchor {
            (0..scn.anchors.len())
                .map(|a| {
                    simulate_anchor_capture(&scn, i, a, &wf).map(|c| (format!("rx{i:04}_a{:03}", scn.anchors[a].id), c))
                })
                .collect::<Result<_, _>>()
                .run()?
        } else {
            vec![(format!("rx{i:04}"), simulate_capture(&scn, i, &wf).run()?)]
        };
        for (name, cap) in caps {
            for w in &cap.meta.warnings {
                eprintln!("warning: {name}: {w}");
            }
            let stem = dir.join(&name);
            cap.save(&stem).run()?;
            outputs.push(stem.with_extension("mbsg"));
        }
    }
    finish(manifest, &dir, outputs)
}

// suppress

#[derive(Deserialize)]
struct SuppressConfig {
    capture: PathBuf,
    #[serde(default)]
    chirp: ChirpSpec,
    #[serde(default)]
    feature: FeatureParams,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn cmd_suppress(common: &Common) -> Result<(), Failure> {
    let Loaded { cfg, base, mut manifest } = load::<SuppressConfig>("suppress", common)?;
    cfg.feature.validate(&cfg.chirp).cfg()?;
    let path = base.join(&cfg.capture);
    manifest.add_input(&path).cfg()?;
    let cap = RxCapture::load(&path).cfg()?;
    let dir = out_dir(&base, &cfg.output_dir, "suppress")?;
    let ex = extract_feature(&cap.recording, &cfg.chirp, &cfg.feature).run()?;
    let out = dir.join("feature.json");
    let body = serde_json::json!({
        "em_index": ex.em.index,
        "onset_index": ex.onset.index,
        "onset_score": ex.onset.score,
        "feature": ex.feature,
    });
    std::fs::write(&out, serde_json::to_string_pretty(&body).run()?).run()?;
    finish(manifest, &dir, vec![out])
}

// estimate

#[derive(Deserialize)]
struct EstimateConfig {
    scenario: ScenarioSource,
    captures: Vec<PathBuf>,
    #[serde(default)]
    calibration: CalibrationSpec,
    #[serde(default)]
    feature: FeatureParams,
    /// Reused when present, written otherwise.
    #[serde(default)]
    templates_dir: Option<PathBuf>,
    #[serde(default = "one_f")]
    level_depth_weight: f64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn one_f() -> f64 {
    1.0
}

fn library_for(
    scn: &ScenarioConfig,
    id: u8,
    cfg: &EstimateConfig,
    cache: &Path,
    manifest: &mut Manifest,
) -> Result<TemplateLibrary, Failure> {
    let path = cache.join(format!("templates_a{id:03}.json"));
    if path.exists() {
        manifest.add_input(&path).cfg()?;
        let lib = TemplateLibrary::load(&path).cfg()?;
        if lib.kind != cfg.feature.kind {
            return Err(config_err(format!("{} holds {:?} templates", path.display(), lib.kind)));
        }
        return Ok(lib);
    }
    let opts = TemplateOptions {
        feature: cfg.feature,
        ..Default::default()
    };
    let lib = build_templates(scn, id, &full_circle(cfg.calibration.angles), &cfg.calibration.ranges, &opts).run()?;
    std::fs::create_dir_all(cache).run()?;
    lib.save(&path).run()?;
    Ok(lib)
}

fn cmd_estimate(common: &Common) -> Result<(), Failure> {
    let Loaded { cfg, base, mut manifest } = load::<EstimateConfig>("estimate", common)?;
    let scn = scenario(&cfg.scenario, &base, &mut manifest)?;
    cfg.feature.validate(&scn.chirp).cfg()?;
    if cfg.captures.is_empty() {
        return Err(config_err("no captures listed"));
    }
    let dir = out_dir(&base, &cfg.output_dir, "estimate")?;
    let cache = cfg.templates_dir.as_ref().map(|d| base.join(d)).unwrap_or_else(|| dir.join("templates"));
    let mut libs: BTreeMap<u8, TemplateLibrary> = BTreeMap::new();
    let mut out = Vec::new();
    for c in &cfg.captures {
        let path = base.join(c);
        manifest.add_input(&path).cfg()?;
        let cap = RxCapture::load(&path).cfg()?;
        let id = match cap.meta.em_markers.as_slice() {
            [m] => m.anchor_id,
            _ => {
                return Err(config_err(format!(
                    "{} holds {} transmissions; estimate expects one per capture",
                    path.display(),
                    cap.meta.em_markers.len()
                )))
            }
        };
        let idx = scn.anchor_index(id).cfg()?;
        if let std::collections::btree_map::Entry::Vacant(e) = libs.entry(id) {
            let lib = library_for(&scn, id, &cfg, &cache, &mut manifest)?;
            e.insert(lib);
        }
        let ctx = MeasureContext {
            anchor: &scn.anchors[idx],
            chirp: &scn.chirp,
            sound_speed: scn.geometry.sound_speed,
            azimuth: &libs[&id],
            elevation: None,
            level_depth_weight: cfg.level_depth_weight,
            feature: &cfg.feature,
        };
        let m = measure(&cap.recording, &ctx, cap.meta.epoch)
            .map_err(|e| Failure::Pipeline(e.context(path.display().to_string())))?;
        out.push(m);
    }
    let path = dir.join("measurements.jsonl");
    write_jsonl(&path, &out)?;
    finish(manifest, &dir, vec![path])
}

// localize

#[derive(Deserialize)]
struct LocalizeConfig {
    scenario: ScenarioSource,
    measurements: PathBuf,
    #[serde(default)]
    weights: SolverWeights,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Fix {
    epoch: f64,
    #[serde(flatten)]
    estimate: PositionEstimate,
}

fn cmd_localize(common: &Common) -> Result<(), Failure> {
    let Loaded { cfg, base, mut manifest } = load::<LocalizeConfig>("localize", common)?;
    let scn = scenario(&cfg.scenario, &base, &mut manifest)?;
    cfg.weights.validate().cfg()?;
    let mpath = base.join(&cfg.measurements);
    manifest.add_input(&mpath).cfg()?;
    let ms: Vec<AnchorMeasurement> = read_jsonl(&mpath)?;
    let mut epochs: BTreeMap<u64, Vec<AnchorMeasurement>> = BTreeMap::new();
    for m in ms {
        if !m.epoch.is_finite() || m.epoch < 0.0 {
            return Err(config_err(format!("measurement epoch {} is not a valid time", m.epoch)));
        }
        epochs.entry(m.epoch.to_bits()).or_default().push(m);
    }
    let dir = out_dir(&base, &cfg.output_dir, "localize")?;
    let mut fixes = Vec::new();
    for (bits, group) in epochs {
        let anchors: Vec<Position> = group
            .iter()
            .map(|m| scn.anchor_index(m.anchor_id).map(|i| scn.anchors[i].position))
            .collect::<Result<_, _>>()
            .cfg()?;
        let epoch = f64::from_bits(bits);
        let estimate = solve_wnls(&group, &anchors, &cfg.weights, None)
            .map_err(|e| Failure::Pipeline(e.context(format!("epoch {epoch}"))))?;
        fixes.push(Fix { epoch, estimate });
    }
    let path = dir.join("fixes.jsonl");
    write_jsonl(&path, &fixes)?;
    finish(manifest, &dir, vec![path])
}

// track

#[derive(Deserialize)]
struct TrackConfig {
    scenario: ScenarioSource,
    fixes: PathBuf,
    #[serde(default)]
    kalman: KalmanParams,
    #[serde(default)]
    imu_seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

/// Linear interpolation along the receiver path.
fn truth_at(path: &[TimedPosition], t: f64) -> Option<Position> {
    let i = path.partition_point(|p| p.t < t);
    let lerp = |a: &TimedPosition, b: &TimedPosition| {
        let w = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        [0, 1, 2].map(|k| a.position[k] + w * (b.position[k] - a.position[k]))
    };
    match i {
        0 => path.first().filter(|p| p.t == t).map(|p| p.position),
        i if i == path.len() => None,
        i => Some(lerp(&path[i - 1], &path[i])),
    }
}

fn cmd_track(common: &Common) -> Result<(), Failure> {
    let Loaded { cfg, base, mut manifest } = load::<TrackConfig>("track", common)?;
    let scn = scenario(&cfg.scenario, &base, &mut manifest)?;
    cfg.kalman.validate().cfg()?;
    let fpath = base.join(&cfg.fixes);
    manifest.add_input(&fpath).cfg()?;
    let fixes: Vec<Fix> = read_jsonl(&fpath)?;
    let timed: Vec<TimedPosition> = fixes
        .iter()
        .map(|f| TimedPosition {
            t: f.epoch,
            position: f.estimate.p,
        })
        .collect();
    let imu = synthetic_imu(&scn.receiver_path, &cfg.kalman, cfg.imu_seed).cfg()?;
    manifest.seeds.push(cfg.imu_seed);
    let dir = out_dir(&base, &cfg.output_dir, "track")?;
    let track = fuse_track(&timed, &imu, &cfg.kalman).run()?;
    let path = dir.join("track.csv");
    let mut w = BufWriter::new(File::create(&path).run()?);
    writeln!(w, "t,x,y,z,err").run()?;
    for s in &track {
        let p = s.position();
        let err = truth_at(&scn.receiver_path, s.t)
            .map(|q| {
                let d = [0, 1, 2].map(|k| p[k] - q[k]);
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().to_string()
            })
            .unwrap_or_default();
        writeln!(w, "{},{},{},{},{err}", s.t, p[0], p[1], p[2]).run()?;
    }
    w.flush().run()?;
    finish(manifest, &dir, vec![path])
}

// sweep

fn cmd_sweep(common: &Common) -> Result<(), Failure> {
    let Loaded { mut cfg, base, mut manifest } = load::<ExperimentSpec>("sweep", common)?;
    let scn = scenario(&cfg.scenario, &base, &mut manifest)?;
    cfg.validate(&scn).cfg()?;
    let dir = out_dir(&base, &cfg.output_dir, "sweep")?;
    cfg.output_dir = Some(dir.clone());
    manifest.seeds.push(cfg.seed);
    let report = run_experiment(&cfg, &base).run()?;
    let mut outputs = vec![dir.join("report.json")];
    outputs.push(export_plotdata(&report, PlotKind::Cdf, &ExportOptions::default(), &dir).run()?);
    finish(manifest, &dir, outputs)
}

// export

#[derive(Deserialize)]
struct ExportConfig {
    report: PathBuf,
    kind: String,
    #[serde(flatten)]
    options: ExportOptions,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn cmd_export(common: &Common) -> Result<(), Failure> {
    let Loaded { cfg, base, mut manifest } = load::<ExportConfig>("export", common)?;
    let kind: PlotKind = cfg.kind.parse().cfg()?;
    let rpath = base.join(&cfg.report);
    manifest.add_input(&rpath).cfg()?;
    let report = MetricsReport::load(&rpath).cfg()?;
    let dir = out_dir(&base, &cfg.output_dir, "export")?;
    let out = export_plotdata(&report, kind, &cfg.options, &dir).run()?;
    finish(manifest, &dir, vec![out])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::OptimizeAms(c) => cmd_optimize(c),
        Command::Simulate(c) => cmd_simulate(c),
        Command::Suppress(c) => cmd_suppress(c),
        Command::Estimate(c) => cmd_estimate(c),
        Command::Localize(c) => cmd_localize(c),
        Command::Track(c) => cmd_track(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Export(c) => cmd_export(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
