//! Thickness design by minimizing pairwise spectral similarity between
//! directions.
//!
//! The search is simulated annealing over the solid lengths with one
//! coordinate redrawn per proposal. Candidate scoring runs on a reduced
//! (angle x frequency) grid; the returned configuration is then re-scored on
//! the caller's full grid.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ams::{
    build_gain_table, cell_response, geometric_factor, is_active, linspace, DirectionalGainTable,
    MetasurfaceConfig, UnitCellSpec,
};
use crate::error::{Error, Result};

/// Cosine similarity between the spectra of every pair of directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    /// Row-major `M x M`.
    pub values: Vec<f64>,
    pub angles: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn size(&self) -> usize {
        self.angles.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size() + j]
    }

    /// Mean over `i != j`; zero for a 1x1 matrix.
    pub fn mean_off_diagonal(&self) -> f64 {
        let m = self.size();
        if m < 2 {
            return 0.0;
        }
        off_diagonal_stats(&self.values, m).0 / (m * (m - 1)) as f64
    }

    pub fn max_off_diagonal(&self) -> f64 {
        off_diagonal_stats(&self.values, self.size()).1
    }
}

fn off_diagonal_stats(values: &[f64], m: usize) -> (f64, f64) {
    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let v = values[i * m + j];
                sum += v;
                max = max.max(v);
            }
        }
    }
    (sum, if m < 2 { 0.0 } else { max })
}

/// Magnitude spectrum of every direction in the table.
pub fn spectral_vectors(table: &DirectionalGainTable) -> Vec<Vec<f64>> {
    (0..table.rows())
        .map(|m| table.row(m).iter().map(|g| g.norm()).collect())
        .collect()
}

/// Pairwise cosine similarity. `angles` only labels the rows.
pub fn similarity_matrix(vectors: &[Vec<f64>], angles: &[f64]) -> Result<SimilarityMatrix> {
    let m = vectors.len();
    if angles.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} angles for {m} vectors",
            angles.len()
        )));
    }
    if let Some(first) = vectors.first() {
        if vectors.iter().any(|v| v.len() != first.len()) {
            return Err(Error::InvalidArgument("spectral vectors differ in length".into()));
        }
    }
    let norms: Vec<f64> = vectors.iter().map(|v| dot(v, v).sqrt()).collect();
    if let Some(index) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::DegenerateSpectrum {
            index,
            angle_deg: angles[index].to_degrees(),
        });
    }
    Ok(SimilarityMatrix {
        values: cosine_matrix(vectors, &norms),
        angles: angles.to_vec(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_matrix(vectors: &[Vec<f64>], norms: &[f64]) -> Vec<f64> {
    let m = vectors.len();
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        values[i * m + i] = 1.0;
        for j in i + 1..m {
            let g = dot(&vectors[i], &vectors[j]) / (norms[i] * norms[j]);
            values[i * m + j] = g;
            values[j * m + i] = g;
        }
    }
    values
}

/// Sum of off-diagonal similarities plus `beta` times the largest one.
pub fn objective(sim: &SimilarityMatrix, beta: f64) -> f64 {
    let (sum, max) = off_diagonal_stats(&sim.values, sim.size());
    sum + beta * max
}

/// Search objective: the sum term is averaged over the `M(M-1)` pairs so that
/// `beta` weighs the worst pair against the mean.
pub fn normalized_objective(sim: &SimilarityMatrix, beta: f64) -> f64 {
    let m = sim.size();
    if m < 2 {
        return 0.0;
    }
    let (sum, max) = off_diagonal_stats(&sim.values, m);
    sum / (m * (m - 1)) as f64 + beta * max
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    pub beta: f64,
    pub max_iters: usize,
    pub init_temperature: f64,
    pub cooling_rate: f64,
    pub seed: u64,
    /// Upper bound on every solid length, m.
    pub d_max: f64,
    /// Angles in the reduced search grid.
    pub search_angles: usize,
    /// Frequency bins in the reduced search grid.
    pub search_freqs: usize,
    /// Iterations between log records.
    pub log_every: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            max_iters: 60_000,
            init_temperature: 1e-2,
            cooling_rate: 0.99985,
            seed: 0,
            d_max: crate::ams::DEFAULT_CELL_LEN,
            search_angles: 72,
            search_freqs: 26,
            log_every: 100,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument("beta must be non-negative".into()));
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(Error::InvalidArgument("cooling_rate must lie in (0, 1)".into()));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Error::InvalidArgument("d_max must be positive".into()));
        }
        if !(self.init_temperature >= 0.0 && self.init_temperature.is_finite()) {
            return Err(Error::InvalidArgument(
                "init_temperature must be non-negative".into(),
            ));
        }
        if self.search_angles < 2 || self.search_freqs < 1 {
            return Err(Error::InvalidArgument(
                "search grid needs >= 2 angles and >= 1 frequency".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub temperature: f64,
}

/// Scores of one configuration on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub objective: f64,
    pub mean_similarity: f64,
    pub max_similarity: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub config: MetasurfaceConfig,
    pub initial: MetasurfaceConfig,
    /// Search-grid normalized objective of the returned configuration.
    pub objective: f64,
    pub initial_objective: f64,
    /// Full-grid scores of the initialization and the result.
    pub initial_full: GridScore,
    pub final_full: GridScore,
    pub log: Vec<IterationRecord>,
}

/// Scores `cfg` on the given grid with the normalized objective.
pub fn score_config(cfg: &MetasurfaceConfig, angles: &[f64], freqs: &[f64], beta: f64) -> Result<GridScore> {
    let table = build_gain_table(cfg, angles, freqs)?;
    let vectors = spectral_vectors(&table);
    let norms: Vec<f64> = vectors.iter().map(|v| dot(v, v).sqrt()).collect();
    if let Some(index) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::DegenerateSpectrum {
            index,
            angle_deg: angles[index].to_degrees(),
        });
    }
    // row sums in parallel; the full grid has 360 x 360 pairs
    let m = vectors.len();
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            let mut mx = f64::NEG_INFINITY;
            for j in 0..m {
                if i != j {
                    let g = dot(&vectors[i], &vectors[j]) / (norms[i] * norms[j]);
                    s += g;
                    mx = mx.max(g);
                }
            }
            (s, mx)
        })
        .collect();
    let sum: f64 = rows.iter().map(|r| r.0).sum();
    let max = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let pairs = (m * (m.max(2) - 1)) as f64;
    let mean = sum / pairs;
    let max = if m < 2 { 0.0 } else { max };
    Ok(GridScore {
        objective: mean + beta * max,
        mean_similarity: mean,
        max_similarity: max,
    })
}

/// Incrementally updatable gain table on the search grid.
struct SearchState {
    m: usize,
    l: usize,
    freqs: Vec<f64>,
    /// For every cell, the `(angle index, geometric factors over freqs)` it
    /// contributes to.
    contrib: Vec<Vec<(usize, Vec<Complex64>)>>,
    responses: Vec<Vec<Complex64>>,
    gains: Vec<Complex64>,
}

impl SearchState {
    fn new(cfg: &MetasurfaceConfig, angles: &[f64], freqs: &[f64]) -> Self {
        let (m, l) = (angles.len(), freqs.len());
        let n = cfg.len();
        let mut contrib = vec![Vec::new(); n];
        for (mi, &theta) in angles.iter().enumerate() {
            for (i, &ang) in cfg.cell_angles.iter().enumerate() {
                if is_active(theta, ang) {
                    let geo = freqs
                        .iter()
                        .map(|&f| {
                            geometric_factor(cfg.outer_radius, cfg.materials.c_water, theta - ang, f)
                        })
                        .collect();
                    contrib[i].push((mi, geo));
                }
            }
        }
        let mut state = Self {
            m,
            l,
            freqs: freqs.to_vec(),
            contrib,
            responses: Vec::new(),
            gains: Vec::new(),
        };
        state.rebuild(cfg);
        state
    }

    fn response(&self, cfg: &MetasurfaceConfig, cell: &UnitCellSpec) -> Vec<Complex64> {
        self.freqs
            .iter()
            .map(|&f| cell_response(cell, f, &cfg.materials))
            .collect()
    }

    fn rebuild(&mut self, cfg: &MetasurfaceConfig) {
        self.responses = cfg.cells.iter().map(|c| self.response(cfg, c)).collect();
        self.gains = vec![Complex64::new(0.0, 0.0); self.m * self.l];
        for (i, list) in self.contrib.iter().enumerate() {
            for (mi, geo) in list {
                for li in 0..self.l {
                    self.gains[mi * self.l + li] += geo[li] * self.responses[i][li];
                }
            }
        }
    }

    /// Gains after replacing cell `i`'s response with `resp`.
    fn propose(&self, i: usize, resp: &[Complex64]) -> Vec<Complex64> {
        let mut gains = self.gains.clone();
        for (mi, geo) in &self.contrib[i] {
            for li in 0..self.l {
                let delta = resp[li] - self.responses[i][li];
                gains[mi * self.l + li] += geo[li] * delta;
            }
        }
        gains
    }

    fn score(&self, gains: &[Complex64], beta: f64) -> f64 {
        let vectors: Vec<Vec<f64>> = gains.chunks(self.l).map(|r| r.iter().map(|g| g.norm()).collect()).collect();
        let norms: Vec<f64> = vectors.iter().map(|v| dot(v, v).sqrt()).collect();
        if norms.contains(&0.0) {
            return f64::INFINITY;
        }
        let values = cosine_matrix(&vectors, &norms);
        let (sum, max) = off_diagonal_stats(&values, self.m);
        sum / (self.m * (self.m - 1)) as f64 + beta * max
    }
}

/// Anneals the solid lengths of `template_cfg`'s geometry starting from a
/// seeded random draw in `[0, d_max]`.
pub fn optimize(
    params: &OptimizerParams,
    template_cfg: &MetasurfaceConfig,
    angles: &[f64],
    freqs: &[f64],
) -> Result<OptimizeOutcome> {
    params.validate()?;
    template_cfg.validate()?;
    if angles.is_empty() || freqs.is_empty() {
        return Err(Error::InvalidArgument("optimizer grids must be non-empty".into()));
    }
    let total_len = template_cfg.cells[0].total_len;
    if params.d_max > total_len + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "d_max {} exceeds the cell length {}",
            params.d_max, total_len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut current = template_cfg.clone();
    for cell in &mut current.cells {
        cell.solid_len = rng.random_range(0.0..=params.d_max);
    }
    let initial = current.clone();

    let search_angles: Vec<f64> = (0..params.search_angles)
        .map(|i| TAU * i as f64 / params.search_angles as f64)
        .collect();
    let (f_lo, f_hi) = (freqs[0], freqs[freqs.len() - 1]);
    let search_freqs = linspace(f_lo, f_hi, params.search_freqs.min(freqs.len()).max(1));

    let mut state = SearchState::new(&current, &search_angles, &search_freqs);
    let mut current_obj = state.score(&state.gains, params.beta);
    let initial_objective = current_obj;
    let mut best = current.clone();
    let mut best_obj = current_obj;
    let mut log = vec![IterationRecord {
        iter: 0,
        objective: current_obj,
        temperature: params.init_temperature,
    }];

    let mut temperature = params.init_temperature;
    let mut accepted = 0usize;
    for iter in 1..=params.max_iters {
        let i = rng.random_range(0..current.len());
        let mut cell = current.cells[i];
        cell.solid_len = rng.random_range(0.0..=params.d_max);
        let resp = state.response(&current, &cell);
        let gains = state.propose(i, &resp);
        let obj = state.score(&gains, params.beta);
        let delta = obj - current_obj;
        let u: f64 = rng.random();
        let accept = delta <= 0.0 || (temperature > 0.0 && u < (-delta / temperature).exp());
        if accept {
            current.cells[i] = cell;
            state.responses[i] = resp;
            state.gains = gains;
            current_obj = obj;
            accepted += 1;
            if accepted.is_multiple_of(500) {
                // bound drift of the incremental update
                state.rebuild(&current);
                current_obj = state.score(&state.gains, params.beta);
            }
            if current_obj < best_obj {
                best_obj = current_obj;
                best = current.clone();
            }
        }
        temperature *= params.cooling_rate;
        if params.log_every > 0 && (iter % params.log_every == 0 || iter == params.max_iters) {
            log.push(IterationRecord {
                iter,
                objective: current_obj,
                temperature,
            });
        }
    }

    let initial_full = score_config(&initial, angles, freqs, params.beta)?;
    let final_full = if params.max_iters == 0 {
        initial_full
    } else {
        score_config(&best, angles, freqs, params.beta)?
    };
    Ok(OptimizeOutcome {
        config: best,
        initial,
        objective: best_obj,
        initial_objective,
        initial_full,
        final_full,
        log,
    })
}

/// Writes the iteration log as `iter,objective,temperature` CSV.
pub fn write_log_csv<W: std::io::Write>(log: &[IterationRecord], mut w: W) -> Result<()> {
    writeln!(w, "iter,objective,temperature")?;
    for r in log {
        writeln!(w, "{},{:.9},{:.6e}", r.iter, r.objective, r.temperature)?;
    }
    Ok(())
}
