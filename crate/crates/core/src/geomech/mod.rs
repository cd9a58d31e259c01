//! Quasi-static Coulomb force balance, the local connection, height
//! functions and stride integrals.

mod field;
mod solver;

pub use field::{
    connection_field, height_function, optimal_amplitude, stride_line_integral, stride_surface_integral,
    Component, ConnectionField, GridSpec, HeightField,
};
pub use solver::{
    force_balance_residual, foot_slip_velocity, grf, local_connection, solve_body_velocity, solve_configuration,
    BodyVelocity, ContactPatch, LocalConnection, FRICTION_EPSILON,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pick the body amplitude: the stride-optimal one unless it self-collides.
pub fn select_amplitude(a_sc: f64, a_b_star: f64) -> f64 {
    if a_sc < a_b_star {
        a_sc
    } else {
        a_b_star
    }
}

/// Non-slip upper bound on stride length per cycle, `4l`.
pub fn stride_upper_bound(leg_length: f64) -> f64 {
    4.0 * leg_length
}

/// Forward (`d1`) and backward (`d2`) slip distance of one foot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlipBudget {
    pub d1: f64,
    pub d2: f64,
}

impl SlipBudget {
    /// `|d1 − d2| / max(d1, d2, floor)`.
    pub fn imbalance(&self, floor: f64) -> f64 {
        (self.d1 - self.d2).abs() / self.d1.max(self.d2).max(floor)
    }
}

/// Per-step forward slip displacement of one foot (cm, along the body
/// heading), zero while the foot is in swing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FootTrack {
    pub steps_per_cycle: usize,
    pub slip: Vec<f64>,
}

/// Slip budget over a foot track spanning at least one cycle.
pub fn slip_budget(track: &FootTrack) -> Result<SlipBudget> {
    if track.steps_per_cycle == 0 || track.slip.len() < track.steps_per_cycle {
        return Err(Error::TrajectoryTooShort {
            got: track.slip.len(),
            needed: track.steps_per_cycle.max(1),
        });
    }
    let mut b = SlipBudget::default();
    for &s in &track.slip {
        if s > 0.0 {
            b.d1 += s;
        } else {
            b.d2 -= s;
        }
    }
    Ok(b)
}
