use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::channel::Position;
use crate::error::{Error, Result};
use crate::estimators::{horizontal_range, AnchorMeasurement};

/// Global multipliers on the three residual families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverWeights {
    pub angle: f64,
    pub range: f64,
    pub depth: f64,
}

impl Default for SolverWeights {
    fn default() -> Self {
        Self {
            angle: 1.0,
            range: 1.0,
            depth: 4.0,
        }
    }
}

impl SolverWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.angle, self.range, self.depth];
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("solver weights must be finite and non-negative".into()));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument("at least one solver weight must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Signed distance from the bearing line, m.
    pub angle: f64,
    /// Horizontal distance minus measured horizontal range, m.
    pub range: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub p: Position,
    /// Square root of the weighted objective.
    pub residual_norm: f64,
    pub iterations: usize,
    pub per_anchor_residuals: Vec<Residuals>,
}

/// Position implied by one anchor's measurement alone.
pub fn single_anchor_fix(m: &AnchorMeasurement, anchor: &Position) -> Result<PositionEstimate> {
    let dz = m.depth - anchor[2];
    let h = horizontal_range(m.range, dz)?;
    let (s, c) = m.bearing.sin_cos();
    Ok(PositionEstimate {
        p: [anchor[0] + h * c, anchor[1] + h * s, anchor[2] + dz],
        residual_norm: 0.0,
        iterations: 0,
        per_anchor_residuals: vec![Residuals::default()],
    })
}

pub fn residuals(p: &Position, m: &AnchorMeasurement, anchor: &Position) -> Residuals {
    let dx = p[0] - anchor[0];
    let dy = p[1] - anchor[1];
    let (s, c) = m.bearing.sin_cos();
    Residuals {
        angle: -s * dx + c * dy,
        range: dx.hypot(dy) - m.horizontal_range,
        depth: p[2] - m.depth,
    }
}

fn check_inputs(ms: &[AnchorMeasurement], anchors: &[Position]) -> Result<()> {
    if ms.is_empty() {
        return Err(Error::InvalidArgument("no measurements to solve".into()));
    }
    if ms.len() != anchors.len() {
        return Err(Error::InvalidArgument(format!(
            "{} measurements but {} anchor positions",
            ms.len(),
            anchors.len()
        )));
    }
    for (m, a) in ms.iter().zip(anchors) {
        m.validate(a[2])?;
    }
    Ok(())
}

/// Weighted residual vector, three entries per anchor.
fn weighted(p: &Position, ms: &[AnchorMeasurement], anchors: &[Position], w: &SolverWeights, out: &mut Vec<f64>) {
    out.clear();
    for (m, a) in ms.iter().zip(anchors) {
        let r = residuals(p, m, a);
        out.push((w.angle * m.weights.angle).sqrt() * r.angle);
        out.push((w.range * m.weights.range).sqrt() * r.range);
        out.push((w.depth * m.weights.depth).sqrt() * r.depth);
    }
}

/// Weighted sum of squared residuals.
pub fn objective(p: &Position, ms: &[AnchorMeasurement], anchors: &[Position], w: &SolverWeights) -> f64 {
    let mut r = Vec::with_capacity(3 * ms.len());
    weighted(p, ms, anchors, w, &mut r);
    r.iter().map(|v| v * v).sum()
}

/// Mean of the feasible closed-form fixes, or the anchors' centroid at
/// `fallback_depth` when none is feasible.
pub fn initial_guess(ms: &[AnchorMeasurement], anchors: &[Position], fallback_depth: f64) -> Position {
    let fixes: Vec<Position> = ms
        .iter()
        .zip(anchors)
        .filter_map(|(m, a)| single_anchor_fix(m, a).ok())
        .map(|f| f.p)
        .collect();
    let mean = |ps: &[Position]| {
        let n = ps.len() as f64;
        let mut c = [0.0; 3];
        for p in ps {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        c
    };
    if fixes.is_empty() {
        let mut c = mean(anchors);
        c[2] = fallback_depth;
        c
    } else {
        mean(&fixes)
    }
}

const STEP_TOL: f64 = 1e-6;
const MAX_ITERS: usize = 100;
const JACOBIAN_STEP: f64 = 1e-6;

fn jacobian(p: &Position, ms: &[AnchorMeasurement], anchors: &[Position], w: &SolverWeights) -> Vec<[f64; 3]> {
    let n = 3 * ms.len();
    let mut jac = vec![[0.0; 3]; n];
    let (mut plus, mut minus) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..3 {
        let mut pp = *p;
        let mut pm = *p;
        pp[k] += JACOBIAN_STEP;
        pm[k] -= JACOBIAN_STEP;
        weighted(&pp, ms, anchors, w, &mut plus);
        weighted(&pm, ms, anchors, w, &mut minus);
        for i in 0..n {
            jac[i][k] = (plus[i] - minus[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    jac
}

fn normal_equations(jac: &[[f64; 3]], r: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (row, &ri) in jac.iter().zip(r) {
        let j = Vector3::from(*row);
        jtj += j * j.transpose();
        jtr += j * ri;
    }
    (jtj, jtr)
}

fn estimate_at(p: Position, ms: &[AnchorMeasurement], anchors: &[Position], w: &SolverWeights, iterations: usize) -> PositionEstimate {
    PositionEstimate {
        p,
        residual_norm: objective(&p, ms, anchors, w).sqrt(),
        iterations,
        per_anchor_residuals: ms.iter().zip(anchors).map(|(m, a)| residuals(&p, m, a)).collect(),
    }
}

/// Levenberg-Marquardt minimization of the weighted objective.
///
/// `init` defaults to [`initial_guess`] with the anchors' mean depth as the
/// fallback. Fails when some direction is left unconstrained by every
/// weighted residual.
pub fn solve_wnls(
    ms: &[AnchorMeasurement],
    anchors: &[Position],
    weights: &SolverWeights,
    init: Option<Position>,
) -> Result<PositionEstimate> {
    check_inputs(ms, anchors)?;
    weights.validate()?;
    let mut p = init.unwrap_or_else(|| {
        let mean_depth = anchors.iter().map(|a| a[2]).sum::<f64>() / anchors.len() as f64;
        initial_guess(ms, anchors, mean_depth)
    });
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial position is not finite".into()));
    }

    let mut r = Vec::new();
    weighted(&p, ms, anchors, weights, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut trial = Vec::new();
    let mut jtj_last = Matrix3::zeros();

    while iterations < MAX_ITERS {
        iterations += 1;
        let jac = jacobian(&p, ms, anchors, weights);
        let (jtj, jtr) = normal_equations(&jac, &r);
        jtj_last = jtj;
        let mut converged = false;
        loop {
            let damped = jtj + Matrix3::identity() * lambda * (1.0 + jtj.trace() / 3.0);
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-jtr))) else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    break;
                }
                continue;
            };
            let cand = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
            weighted(&cand, ms, anchors, weights, &mut trial);
            let c: f64 = trial.iter().map(|v| v * v).sum();
            if c.is_finite() && c <= cost {
                p = cand;
                std::mem::swap(&mut r, &mut trial);
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                converged = step.norm() < STEP_TOL;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 || step.norm() < 1e-3 * STEP_TOL {
                // no descent direction left: already at the minimum
                converged = true;
                break;
            }
        }
        if converged || lambda > 1e12 {
            break;
        }
    }

    let eig = jtj_last.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= 1e-10 * hi {
        return Err(Error::SolverFailure {
            reason: format!("rank-deficient geometry (normal-matrix eigenvalues {lo:.3e} .. {hi:.3e})"),
            residual_norm: cost.sqrt(),
            iterations,
        });
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure {
            reason: "diverged".into(),
            residual_norm: cost.sqrt(),
            iterations,
        });
    }
    Ok(estimate_at(p, ms, anchors, weights, iterations))
}
