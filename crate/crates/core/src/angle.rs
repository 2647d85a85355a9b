//! Angle helpers shared by every module that compares bearings.

use std::f64::consts::{PI, TAU};

/// Wraps an angle in radians to `(-pi, pi]`.
pub fn wrap(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Wraps an angle in radians to `[0, 2pi)`.
pub fn wrap_positive(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Absolute angular distance in radians, in `[0, pi]`.
pub fn abs_diff(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

/// Uniform grid of `count` angles starting at 0 with the given step.
pub fn uniform_grid(count: usize, step: f64) -> Vec<f64> {
    (0..count).map(|i| i as f64 * step).collect()
}

/// `count` angles evenly covering `[0, 2pi)`.
pub fn full_circle(count: usize) -> Vec<f64> {
    uniform_grid(count, TAU / count as f64)
}
