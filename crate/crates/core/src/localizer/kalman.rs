//! Constant-velocity Kalman filter with inertial acceleration as control input.
//!
//! Between fixes the state is propagated through every inertial sample with a
//! zero-order hold on acceleration. Process noise follows white acceleration
//! noise plus an integrated bias random walk; fixes update position only.

use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::{Position, TimedPosition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    /// World-frame acceleration, m/s^2.
    pub accel: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KalmanParams {
    /// Accelerometer white noise density, m/s^2/sqrt(Hz).
    pub accel_noise: f64,
    /// Accelerometer bias random walk, m/s^3/sqrt(Hz).
    pub bias_walk: f64,
    /// Standard deviation of each position fix coordinate, m.
    pub fix_sigma: f64,
    pub init_velocity_sigma: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        Self {
            accel_noise: 0.02,
            bias_walk: 1e-4,
            fix_sigma: 0.4,
            init_velocity_sigma: 0.5,
        }
    }
}

impl KalmanParams {
    pub fn validate(&self) -> Result<()> {
        let v = [self.accel_noise, self.bias_walk, self.fix_sigma, self.init_velocity_sigma];
        if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument("Kalman noise parameters must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Position and velocity with their joint covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub t: f64,
    /// `[x, y, z, vx, vy, vz]`.
    pub state: [f64; 6],
    /// Row-major.
    pub covariance: [[f64; 6]; 6],
}

impl TrackState {
    pub fn position(&self) -> Position {
        [self.state[0], self.state[1], self.state[2]]
    }

    fn from_parts(t: f64, x: &Vector6<f64>, p: &Matrix6<f64>) -> Self {
        let mut covariance = [[0.0; 6]; 6];
        for (i, row) in covariance.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = p[(i, j)];
            }
        }
        Self {
            t,
            state: [x[0], x[1], x[2], x[3], x[4], x[5]],
            covariance,
        }
    }

    pub fn covariance_matrix(&self) -> Matrix6<f64> {
        Matrix6::from_fn(|i, j| self.covariance[i][j])
    }
}

fn transition(dt: f64) -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    f.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Matrix3::identity() * dt));
    f
}

fn process_noise(dt: f64, params: &KalmanParams) -> Matrix6<f64> {
    let qa = params.accel_noise.powi(2);
    let qb = params.bias_walk.powi(2);
    let pp = qa * dt.powi(3) / 3.0 + qb * dt.powi(5) / 20.0;
    let pv = qa * dt.powi(2) / 2.0 + qb * dt.powi(4) / 8.0;
    let vv = qa * dt + qb * dt.powi(3) / 3.0;
    let i = Matrix3::<f64>::identity();
    let mut q = Matrix6::zeros();
    q.fixed_view_mut::<3, 3>(0, 0).copy_from(&(i * pp));
    q.fixed_view_mut::<3, 3>(0, 3).copy_from(&(i * pv));
    q.fixed_view_mut::<3, 3>(3, 0).copy_from(&(i * pv));
    q.fixed_view_mut::<3, 3>(3, 3).copy_from(&(i * vv));
    q
}

fn predict(x: &mut Vector6<f64>, p: &mut Matrix6<f64>, dt: f64, accel: &[f64; 3], params: &KalmanParams) {
    if dt <= 0.0 {
        return;
    }
    let a = Vector3::from(*accel);
    let f = transition(dt);
    let mut u = Vector6::zeros();
    u.fixed_rows_mut::<3>(0).copy_from(&(a * (0.5 * dt * dt)));
    u.fixed_rows_mut::<3>(3).copy_from(&(a * dt));
    *x = f * *x + u;
    *p = f * *p * f.transpose() + process_noise(dt, params);
    *p = (*p + p.transpose()) * 0.5;
}

fn update(x: &mut Vector6<f64>, p: &mut Matrix6<f64>, z: &Position, params: &KalmanParams) {
    let h = SMatrix::<f64, 3, 6>::from_fn(|i, j| if i == j { 1.0 } else { 0.0 });
    let r = Matrix3::identity() * params.fix_sigma.powi(2);
    let s = h * *p * h.transpose() + r;
    let s_inv = match s.cholesky() {
        Some(c) => c.inverse(),
        // exact fixes on an exactly known state
        None => s.pseudo_inverse(1e-15).unwrap_or_else(|_| Matrix3::zeros()),
    };
    let k = *p * h.transpose() * s_inv;
    let innovation = Vector3::from(*z) - h * *x;
    *x += k * innovation;
    // Joseph form keeps the covariance symmetric positive semi-definite
    let ikh = Matrix6::identity() - k * h;
    *p = ikh * *p * ikh.transpose() + k * r * k.transpose();
    *p = (*p + p.transpose()) * 0.5;
}

fn check_monotone<T>(items: &[T], t: impl Fn(&T) -> f64) -> Result<()> {
    for (i, w) in items.windows(2).enumerate() {
        let (a, b) = (t(&w[0]), t(&w[1]));
        if !(b >= a) {
            return Err(Error::NonMonotoneTime {
                index: i + 1,
                prev: a,
                next: b,
            });
        }
    }
    Ok(())
}

/// One filtered state per fix, at the fix's timestamp.
pub fn fuse_track(fixes: &[TimedPosition], imu: &[ImuSample], params: &KalmanParams) -> Result<Vec<TrackState>> {
    params.validate()?;
    check_monotone(fixes, |f| f.t)?;
    check_monotone(imu, |s| s.t)?;
    let Some(first) = fixes.first() else {
        return Ok(Vec::new());
    };

    let mut x = Vector6::new(first.position[0], first.position[1], first.position[2], 0.0, 0.0, 0.0);
    let mut p = Matrix6::zeros();
    for i in 0..3 {
        p[(i, i)] = params.fix_sigma.powi(2);
        p[(i + 3, i + 3)] = params.init_velocity_sigma.powi(2);
    }
    let mut out = vec![TrackState::from_parts(first.t, &x, &p)];
    let mut t = first.t;
    // latest inertial sample at or before t
    let mut k = imu.partition_point(|s| s.t <= t);
    let mut accel = if k > 0 { imu[k - 1].accel } else { [0.0; 3] };

    for fix in &fixes[1..] {
        while k < imu.len() && imu[k].t <= fix.t {
            predict(&mut x, &mut p, imu[k].t - t, &accel, params);
            t = imu[k].t.max(t);
            accel = imu[k].accel;
            k += 1;
        }
        predict(&mut x, &mut p, fix.t - t, &accel, params);
        t = fix.t;
        update(&mut x, &mut p, &fix.position, params);
        out.push(TrackState::from_parts(t, &x, &p));
    }
    Ok(out)
}

/// Inertial samples along `path`: accelerations from second differences of
/// the positions, corrupted with white noise and a drifting bias.
pub fn synthetic_imu(path: &[TimedPosition], params: &KalmanParams, seed: u64) -> Result<Vec<ImuSample>> {
    params.validate()?;
    check_monotone(path, |p| p.t)?;
    let n = path.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut bias = [0.0; 3];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let truth = if i == 0 || i + 1 == n {
            [0.0; 3]
        } else {
            let (a, b, c) = (&path[i - 1], &path[i], &path[i + 1]);
            let (h0, h1) = (b.t - a.t, c.t - b.t);
            let mut acc = [0.0; 3];
            if h0 > 0.0 && h1 > 0.0 {
                for d in 0..3 {
                    let v0 = (b.position[d] - a.position[d]) / h0;
                    let v1 = (c.position[d] - b.position[d]) / h1;
                    acc[d] = 2.0 * (v1 - v0) / (h0 + h1);
                }
            }
            acc
        };
        let dt = if i == 0 { 0.0 } else { path[i].t - path[i - 1].t };
        let mut accel = [0.0; 3];
        for d in 0..3 {
            bias[d] += params.bias_walk * dt.sqrt() * std.sample(&mut rng);
            let white = if dt > 0.0 { params.accel_noise / dt.sqrt() } else { 0.0 };
            accel[d] = truth[d] + bias[d] + white * std.sample(&mut rng);
        }
        out.push(ImuSample { t: path[i].t, accel });
    }
    Ok(out)
}
