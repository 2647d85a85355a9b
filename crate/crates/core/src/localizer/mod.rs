//! Position solvers, track fusion and the anchor broadcast schedule.

mod kalman;
mod solver;
mod tdma;

pub use kalman::{fuse_track, synthetic_imu, ImuSample, KalmanParams, TrackState};
pub use solver::{
    initial_guess, objective, residuals, single_anchor_fix, solve_wnls, PositionEstimate, Residuals,
    SolverWeights,
};
pub use tdma::{tdma_schedule, tdma_schedule_with, Slot};
