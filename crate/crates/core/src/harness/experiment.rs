use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioSource;
use super::manifest::derive_seed;
use super::report::{CellKey, CellReport, Metric, MetricsReport};
use crate::angle::{abs_diff, full_circle};
use crate::channel::{dist, simulate_anchor_at, AnchorSpec, NoiseSpec, Position, ScenarioConfig, Waveform};
use crate::error::{Error, Result};
use crate::estimators::{
    build_templates, measure, FeatureKind, FeatureParams, MeasureContext, TemplateLibrary, TemplateOptions,
};
use crate::localizer::{solve_wnls, SolverWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepAxes {
    /// Horizontal distance of the receiver from the first anchor, m.
    pub distances: Vec<f64>,
    pub snr_db: Vec<f64>,
    /// The first `n` anchors of the scenario take part.
    pub anchor_counts: Vec<usize>,
    pub suppression: Vec<bool>,
    pub ams: Vec<bool>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            distances: vec![2.0, 4.0, 6.0, 8.0],
            snr_db: vec![20.0],
            anchor_counts: vec![1],
            suppression: vec![true],
            ams: vec![true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSpec {
    /// Evenly spaced over the full circle.
    pub angles: usize,
    pub ranges: Vec<f64>,
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            angles: 360,
            ranges: vec![0.4, 0.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSource,
    #[serde(default)]
    pub axes: SweepAxes,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    /// The kind is set per cell by the suppression axis.
    #[serde(default)]
    pub feature: FeatureParams,
    #[serde(default)]
    pub weights: SolverWeights,
    /// Depth weight of the level-with-anchor assumption.
    #[serde(default = "one_f")]
    pub level_depth_weight: f64,
    /// Receiver depth; the first anchor's depth when absent.
    #[serde(default)]
    pub receiver_depth: Option<f64>,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            scenario: ScenarioSource::Inline(Box::new(scenario)),
            axes: SweepAxes::default(),
            trials: 1,
            seed: 0,
            output_dir: None,
            calibration: CalibrationSpec::default(),
            feature: FeatureParams::default(),
            weights: SolverWeights::default(),
            level_depth_weight: 1.0,
            receiver_depth: None,
        }
    }

    pub fn validate(&self, scn: &ScenarioConfig) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        let a = &self.axes;
        if a.distances.is_empty() || a.snr_db.is_empty() || a.anchor_counts.is_empty() || a.suppression.is_empty() || a.ams.is_empty() {
            return bad("every sweep axis needs at least one value".into());
        }
        if a.distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("distances must be positive".into());
        }
        if let Some(&n) = a.anchor_counts.iter().find(|&&n| n == 0 || n > scn.anchors.len()) {
            return bad(format!("anchor count {n} outside 1..={}", scn.anchors.len()));
        }
        let max_n = a.anchor_counts.iter().copied().max().unwrap_or(0);
        if a.ams.contains(&true) {
            if let Some(x) = scn.anchors[..max_n].iter().find(|x| x.metasurface.is_none()) {
                return bad(format!("ams=true needs a metasurface on anchor {}", x.id));
            }
        }
        if self.calibration.angles < crate::estimators::MIN_TEMPLATES {
            return bad(format!("calibration needs at least {} angles", crate::estimators::MIN_TEMPLATES));
        }
        self.weights.validate()?;
        Ok(())
    }

    fn cells(&self) -> Vec<CellKey> {
        let a = &self.axes;
        let mut out = Vec::new();
        for &distance in &a.distances {
            for &snr_db in &a.snr_db {
                for &anchors in &a.anchor_counts {
                    for &suppression in &a.suppression {
                        for &ams in &a.ams {
                            out.push(CellKey {
                                distance,
                                snr_db,
                                anchors,
                                suppression,
                                ams,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

fn variant(a: &AnchorSpec, ams: bool) -> AnchorSpec {
    if ams {
        a.clone()
    } else {
        AnchorSpec {
            metasurface: None,
            ..a.clone()
        }
    }
}

fn kind(suppression: bool) -> FeatureKind {
    if suppression {
        FeatureKind::Suppressed
    } else {
        FeatureKind::Raw
    }
}

type LibKey = (u8, bool, bool);

struct Outcome {
    aoa_deg: Vec<f64>,
    range_m: Vec<f64>,
    depth_m: f64,
    error_3d_m: f64,
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    scn: &'a ScenarioConfig,
    libs: &'a BTreeMap<LibKey, TemplateLibrary>,
}

fn run_trial(ctx: &Ctx, key: &CellKey, trial: usize) -> Result<Outcome> {
    let scn = ctx.scn;
    let seed = derive_seed(ctx.spec.seed, &format!("{}|trial={trial}", key.scene_label()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a0 = scn.anchors[0].position;
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let z = ctx.spec.receiver_depth.unwrap_or(a0[2]);
    let rx: Position = [a0[0] + key.distance * theta.cos(), a0[1] + key.distance * theta.sin(), z];
    scn.geometry.check_position(&rx, "receiver")?;

    let feature = FeatureParams {
        kind: kind(key.suppression),
        ..ctx.spec.feature
    };
    let wf = Waveform::Chirp(scn.chirp);
    let mut ms = Vec::with_capacity(key.anchors);
    let mut positions = Vec::with_capacity(key.anchors);
    let mut aoa_deg = Vec::with_capacity(key.anchors);
    let mut range_m = Vec::with_capacity(key.anchors);
    for (i, spec_anchor) in scn.anchors[..key.anchors].iter().enumerate() {
        let anchor = variant(spec_anchor, key.ams);
        let noise = NoiseSpec {
            snr_db: key.snr_db,
            seed,
            stream: i as u64,
        };
        let cap = simulate_anchor_at(scn, &anchor, rx, &wf, Some(noise))?;
        let lib = &ctx.libs[&(anchor.id, key.ams, key.suppression)];
        let mctx = MeasureContext {
            anchor: &anchor,
            chirp: &scn.chirp,
            sound_speed: scn.geometry.sound_speed,
            azimuth: lib,
            elevation: None,
            level_depth_weight: ctx.spec.level_depth_weight,
            feature: &feature,
        };
        let m = measure(&cap.recording, &mctx, 0.0)?;
        let truth = &cap.truth.arrivals[0];
        aoa_deg.push(abs_diff(m.bearing, truth.azimuth).to_degrees());
        range_m.push((m.range - truth.slant_range).abs());
        ms.push(m);
        positions.push(anchor.position);
    }
    let est = solve_wnls(&ms, &positions, &ctx.spec.weights, None)?;
    Ok(Outcome {
        aoa_deg,
        range_m,
        depth_m: (est.p[2] - rx[2]).abs(),
        error_3d_m: dist(&est.p, &rx),
    })
}

fn build_libraries(spec: &ExperimentSpec, scn: &ScenarioConfig) -> Result<BTreeMap<LibKey, TemplateLibrary>> {
    let max_n = spec.axes.anchor_counts.iter().copied().max().unwrap_or(0);
    let mut keys = Vec::new();
    for a in &scn.anchors[..max_n] {
        for &ams in &spec.axes.ams {
            for &sup in &spec.axes.suppression {
                keys.push((a.id, ams, sup));
            }
        }
    }
    keys.sort();
    keys.dedup();
    let grid = full_circle(spec.calibration.angles);
    keys.into_iter()
        .map(|k @ (id, ams, sup)| {
            let mut cal = scn.clone();
            for a in &mut cal.anchors {
                *a = variant(a, ams);
            }
            let opts = TemplateOptions {
                feature: FeatureParams {
                    kind: kind(sup),
                    ..spec.feature
                },
                ..Default::default()
            };
            build_templates(&cal, id, &grid, &spec.calibration.ranges, &opts).map(|lib| (k, lib))
        })
        .collect()
}

/// Runs every cell of the sweep. Failed trials are counted and left out of
/// the statistics. Writes `report.json` when `output_dir` is set.
pub fn run_experiment(spec: &ExperimentSpec, base: &Path) -> Result<MetricsReport> {
    let scn = spec.scenario.resolve(base)?;
    spec.validate(&scn)?;
    let libs = build_libraries(spec, &scn)?;
    let ctx = Ctx {
        spec,
        scn: &scn,
        libs: &libs,
    };
    let cells = spec.cells();
    let reports: Vec<CellReport> = cells
        .par_iter()
        .map(|key| {
            let outcomes: Vec<Result<Outcome>> = (0..spec.trials)
                .into_par_iter()
                .map(|t| run_trial(&ctx, key, t))
                .collect();
            let mut aoa = Vec::new();
            let mut rng = Vec::new();
            let mut dep = Vec::new();
            let mut e3 = Vec::new();
            let mut failures = 0;
            let mut failure_examples = Vec::new();
            for o in outcomes {
                match o {
                    Ok(o) => {
                        aoa.extend(o.aoa_deg);
                        rng.extend(o.range_m);
                        dep.push(o.depth_m);
                        e3.push(o.error_3d_m);
                    }
                    Err(e) => {
                        failures += 1;
                        if failure_examples.len() < 3 {
                            failure_examples.push(e.to_string());
                        }
                    }
                }
            }
            CellReport {
                key: key.clone(),
                trials: spec.trials,
                failures,
                failure_examples,
                aoa_deg: Metric::from_samples(aoa),
                range_m: Metric::from_samples(rng),
                depth_m: Metric::from_samples(dep),
                error_3d_m: Metric::from_samples(e3),
            }
        })
        .collect();
    let report = MetricsReport {
        seed: spec.seed,
        cells: reports,
    };
    if let Some(dir) = &spec.output_dir {
        let dir = base.join(dir);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("report.json"), report.to_json()?)?;
    }
    Ok(report)
}
