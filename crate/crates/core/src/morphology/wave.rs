//! Shape basis and the lateral/vertical body waves.

use std::f64::consts::TAU;

use super::ShapePoint;
use crate::error::{Error, Result};

/// Wavenumber per module index, `2π S_n / N`.
pub(crate) fn wavenumber(n_pairs: usize, spatial_period: f64) -> f64 {
    TAU * spatial_period / n_pairs as f64
}

/// Shape basis `(β1(i), β2(i)) = (sin(2π S_n i/N), cos(2π S_n i/N))` of yaw joint `i`.
pub fn shape_basis(i: usize, n_pairs: usize, spatial_period: f64) -> Result<(f64, f64)> {
    if n_pairs < 2 || i >= n_pairs - 1 {
        return Err(Error::IndexOutOfRange {
            index: i,
            bound: n_pairs.saturating_sub(1),
        });
    }
    if !(spatial_period > 0.0) {
        return Err(Error::invalid("spatial period", spatial_period.to_string()));
    }
    let angle = wavenumber(n_pairs, spatial_period) * i as f64;
    Ok((angle.sin(), angle.cos()))
}

/// Yaw angle of every joint: `α(i) = w1 β1(i) + w2 β2(i)`.
///
/// On the circular path `w = (A_b sin t, A_b cos t)` this is the traveling
/// wave `A_b cos(2π S_n i/N − t)`, moving from head to tail.
pub fn yaw_angles(w: ShapePoint, n_pairs: usize, spatial_period: f64) -> Vec<f64> {
    let k = wavenumber(n_pairs, spatial_period);
    (0..n_pairs.saturating_sub(1))
        .map(|i| {
            let a = k * i as f64;
            w.w1 * a.sin() + w.w2 * a.cos()
        })
        .collect()
}

/// Pitch angle of every joint: `α_p(i) = A_p cos(2(phase − 2π S_n i/N))`.
///
/// `phase` is the pitch-wave phase at joint 0. The wave runs at twice the yaw
/// frequency and travels in the same direction as the yaw wave.
pub fn pitch_angles(phase: f64, a_p: f64, n_pairs: usize, spatial_period: f64) -> Vec<f64> {
    let k = wavenumber(n_pairs, spatial_period);
    (0..n_pairs.saturating_sub(1))
        .map(|i| a_p * (2.0 * (phase - k * i as f64)).cos())
        .collect()
}
