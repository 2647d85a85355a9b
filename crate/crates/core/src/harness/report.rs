use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear interpolation between closest ranks; `sorted` must be ascending.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    let w = pos - i as f64;
    Some(sorted[i] + w * (sorted[j] - sorted[i]))
}

/// Summary of one error distribution. `cdf` holds the sorted samples; the
/// i-th (0-based) has cumulative probability `(i + 1) / count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Metric {
    pub count: usize,
    pub mean: Option<f64>,
    pub p50: Option<f64>,
    pub p75: Option<f64>,
    pub p90: Option<f64>,
    pub cdf: Vec<f64>,
}

impl Metric {
    pub fn from_samples(mut v: Vec<f64>) -> Self {
        v.retain(|x| x.is_finite());
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Self {
            count: n,
            mean: (n > 0).then(|| v.iter().sum::<f64>() / n as f64),
            p50: percentile(&v, 0.5),
            p75: percentile(&v, 0.75),
            p90: percentile(&v, 0.9),
            cdf: v,
        }
    }

    pub fn get(&self, s: Statistic) -> Option<f64> {
        match s {
            Statistic::Mean => self.mean,
            Statistic::P50 => self.p50,
            Statistic::P75 => self.p75,
            Statistic::P90 => self.p90,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    /// Distance bin centre, m.
    pub distance: f64,
    pub snr_db: f64,
    pub anchors: usize,
    pub suppression: bool,
    pub ams: bool,
}

impl CellKey {
    /// Label used in file output and for ordering.
    pub fn label(&self) -> String {
        format!(
            "d={:.3}|snr={:.2}|anchors={}|sup={}|ams={}",
            self.distance, self.snr_db, self.anchors, self.suppression as u8, self.ams as u8
        )
    }

    /// Coordinates that fix positions and noise; toggling suppression or the
    /// metasurface keeps them, so those cells are paired.
    pub fn scene_label(&self) -> String {
        format!("d={:.6}|snr={:.6}|anchors={}", self.distance, self.snr_db, self.anchors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub key: CellKey,
    pub trials: usize,
    pub failures: usize,
    /// First few failure messages.
    pub failure_examples: Vec<String>,
    pub aoa_deg: Metric,
    pub range_m: Metric,
    pub depth_m: Metric,
    pub error_3d_m: Metric,
}

impl CellReport {
    pub fn metric(&self, m: MetricName) -> &Metric {
        match m {
            MetricName::AoaDeg => &self.aoa_deg,
            MetricName::RangeM => &self.range_m,
            MetricName::DepthM => &self.depth_m,
            MetricName::Error3dM => &self.error_3d_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub cells: Vec<CellReport>,
}

impl MetricsReport {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    AoaDeg,
    RangeM,
    DepthM,
    Error3dM,
}

impl MetricName {
    pub const ALL: [MetricName; 4] = [Self::AoaDeg, Self::RangeM, Self::DepthM, Self::Error3dM];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AoaDeg => "aoa_deg",
            Self::RangeM => "range_m",
            Self::DepthM => "depth_m",
            Self::Error3dM => "error_3d_m",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    P50,
    P75,
    P90,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::P50 => "p50",
            Self::P75 => "p75",
            Self::P90 => "p90",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Cdf,
    ErrorVsDistance,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cdf" => Ok(Self::Cdf),
            "error_vs_distance" => Ok(Self::ErrorVsDistance),
            other => Err(Error::Config(format!(
                "unknown plot kind `{other}` (expected cdf or error_vs_distance)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportOptions {
    pub metric: MetricName,
    pub statistics: Vec<Statistic>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self {
            metric: MetricName::Error3dM,
            statistics: vec![Statistic::P50, Statistic::P75, Statistic::P90],
        }
    }
}

fn cdf_csv(report: &MetricsReport, metric: MetricName) -> String {
    let mut s = String::from("cell,value,probability\n");
    for c in &report.cells {
        let m = c.metric(metric);
        for (i, v) in m.cdf.iter().enumerate() {
            let _ = writeln!(s, "{},{v},{}", c.key.label(), (i + 1) as f64 / m.count as f64);
        }
    }
    s
}

fn distance_csv(report: &MetricsReport, opts: &ExportOptions) -> String {
    let mut cells: Vec<&CellReport> = report.cells.iter().collect();
    cells.sort_by(|a, b| a.key.distance.total_cmp(&b.key.distance));
    let mut s = String::from("distance_m,snr_db,anchors,suppression,ams,statistic,value\n");
    for c in cells {
        let m = c.metric(opts.metric);
        for &st in &opts.statistics {
            let v = m.get(st).map(|v| v.to_string()).unwrap_or_default();
            let k = &c.key;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{v}",
                k.distance,
                k.snr_db,
                k.anchors,
                k.suppression,
                k.ams,
                st.as_str()
            );
        }
    }
    s
}

/// Writes CSV for external plotting into `dir` and returns the file written.
pub fn export_plotdata(report: &MetricsReport, kind: PlotKind, opts: &ExportOptions, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let (name, body) = match kind {
        PlotKind::Cdf => (format!("cdf_{}.csv", opts.metric.as_str()), cdf_csv(report, opts.metric)),
        PlotKind::ErrorVsDistance => (
            format!("error_vs_distance_{}.csv", opts.metric.as_str()),
            distance_csv(report, opts),
        ),
    };
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}
