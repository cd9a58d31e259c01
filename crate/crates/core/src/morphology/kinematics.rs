//! Serial-chain kinematics.
//!
//! Frames: the chain is built from the head module (pair 0) at the origin
//! heading along +x, each following axle one `module_spacing` behind, with
//! the yaw joint halfway between axles. Module `i + 1` is rotated by
//! `+α(i)` (counter-clockwise seen from above) relative to module `i`. The
//! *body frame* used for body velocities has its origin at the mean axle
//! position and its x axis along the mean module heading. Legs sweep in the
//! horizontal plane: the left foot of a module sits at `l (sin θ, cos θ)` and
//! the right foot at `l (sin θ, −cos θ)` in module coordinates, so a positive
//! shoulder angle places the foot forward of its axle.

use super::posture::Posture;
use super::{FootId, RobotMorphology, Side};

type V2 = [f64; 2];

#[inline]
fn rot(a: f64, v: V2) -> V2 {
    let (s, c) = a.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

#[inline]
fn perp(v: V2) -> V2 {
    [-v[1], v[0]]
}

/// Joint-space rates of a posture: yaw rates and shoulder rates per side.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PostureRates {
    pub yaw: Vec<f64>,
    pub shoulder_left: Vec<f64>,
    pub shoulder_right: Vec<f64>,
}

/// Position and shape-induced velocity of a foot in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootState {
    pub position: V2,
    pub velocity: V2,
}

/// Planar body-frame geometry of the whole robot.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyFeet {
    /// Per-foot state indexed by [`FootId::index`].
    pub feet: Vec<FootState>,
    pub axles: Vec<V2>,
    /// Module headings relative to the body frame.
    pub headings: Vec<f64>,
}

impl BodyFeet {
    pub fn foot(&self, id: FootId) -> &FootState {
        &self.feet[id.index()]
    }
}

/// Planar pose of the body frame in the world, plus a reference height.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub height: f64,
}

impl BasePose {
    pub fn planar(x: f64, y: f64, theta: f64) -> Self {
        BasePose { x, y, theta, height: 0.0 }
    }

    /// Maps a body-frame point to the world plane.
    pub fn apply(&self, p: V2) -> V2 {
        let r = rot(self.theta, p);
        [self.x + r[0], self.y + r[1]]
    }

    /// Right-composes a body-frame displacement `(dx, dy, dθ)` given as an
    /// exponential coordinate (constant body velocity over the step).
    pub fn advanced(&self, twist: [f64; 3]) -> BasePose {
        let [vx, vy, w] = twist;
        let (dx, dy) = if w.abs() < 1e-12 {
            (vx - 0.5 * w * vy, vy + 0.5 * w * vx)
        } else {
            let (s, c) = w.sin_cos();
            ((s * vx - (1.0 - c) * vy) / w, ((1.0 - c) * vx + s * vy) / w)
        };
        let d = rot(self.theta, [dx, dy]);
        BasePose {
            x: self.x + d[0],
            y: self.y + d[1],
            theta: self.theta + w,
            height: self.height,
        }
    }
}

/// World-frame positions of axles and foot targets.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicState {
    pub axles: Vec<[f64; 3]>,
    /// Foot targets, indexed by [`FootId::index`]; `z` is the touchdown level.
    pub feet: Vec<[f64; 3]>,
    /// World heading of each module.
    pub headings: Vec<f64>,
}

/// Chain geometry in the head frame.
struct HeadChain {
    axles: Vec<V2>,
    axle_rates: Vec<V2>,
    headings: Vec<f64>,
    heading_rates: Vec<f64>,
}

fn head_chain(morph: &RobotMorphology, yaw: &[f64], yaw_rate: Option<&[f64]>) -> HeadChain {
    let n = morph.n_pairs;
    let half = 0.5 * morph.module_spacing;
    let mut headings = Vec::with_capacity(n);
    let mut heading_rates = Vec::with_capacity(n);
    let (mut phi, mut dphi) = (0.0, 0.0);
    headings.push(phi);
    heading_rates.push(dphi);
    for j in 0..n - 1 {
        phi += yaw[j];
        dphi += yaw_rate.map_or(0.0, |r| r[j]);
        headings.push(phi);
        heading_rates.push(dphi);
    }
    let mut axles = Vec::with_capacity(n);
    let mut axle_rates = Vec::with_capacity(n);
    let (mut p, mut dp) = ([0.0, 0.0], [0.0, 0.0]);
    axles.push(p);
    axle_rates.push(dp);
    for j in 0..n - 1 {
        let (u0, u1) = (rot(headings[j], [1.0, 0.0]), rot(headings[j + 1], [1.0, 0.0]));
        let (du0, du1) = (perp(u0), perp(u1));
        for c in 0..2 {
            p[c] -= half * (u0[c] + u1[c]);
            dp[c] -= half * (heading_rates[j] * du0[c] + heading_rates[j + 1] * du1[c]);
        }
        axles.push(p);
        axle_rates.push(dp);
    }
    HeadChain {
        axles,
        axle_rates,
        headings,
        heading_rates,
    }
}

fn leg_vector(side: Side, theta: f64) -> (V2, V2) {
    // unit leg direction in module frame and its derivative in theta
    let (s, c) = theta.sin_cos();
    match side {
        Side::Left => ([s, c], [c, -s]),
        Side::Right => ([s, -c], [c, s]),
    }
}

/// Body-frame feet with velocities induced by the posture rates.
pub(crate) fn body_feet_with_rates(
    morph: &RobotMorphology,
    posture: &Posture,
    rates: Option<&PostureRates>,
) -> BodyFeet {
    let n = morph.n_pairs;
    let chain = head_chain(morph, &posture.yaw_angles, rates.map(|r| r.yaw.as_slice()));
    let nf = n as f64;
    let mut origin = [0.0, 0.0];
    let mut origin_rate = [0.0, 0.0];
    for i in 0..n {
        for c in 0..2 {
            origin[c] += chain.axles[i][c] / nf;
            origin_rate[c] += chain.axle_rates[i][c] / nf;
        }
    }
    let mean_heading = chain.headings.iter().sum::<f64>() / nf;
    let mean_heading_rate = chain.heading_rates.iter().sum::<f64>() / nf;

    let to_body = |p: V2, dp: V2| -> (V2, V2) {
        let q = rot(-mean_heading, [p[0] - origin[0], p[1] - origin[1]]);
        let dq_rel = rot(-mean_heading, [dp[0] - origin_rate[0], dp[1] - origin_rate[1]]);
        let pq = perp(q);
        (
            q,
            [dq_rel[0] - mean_heading_rate * pq[0], dq_rel[1] - mean_heading_rate * pq[1]],
        )
    };

    let l = morph.leg_length;
    let mut feet = vec![FootState::default(); 2 * n];
    let mut axles = Vec::with_capacity(n);
    for i in 0..n {
        let (phi, dphi) = (chain.headings[i], chain.heading_rates[i]);
        for side in [Side::Left, Side::Right] {
            let theta = posture.shoulder(i, side);
            let dtheta = rates.map_or(0.0, |r| match side {
                Side::Left => r.shoulder_left[i],
                Side::Right => r.shoulder_right[i],
            });
            let (v, dv) = leg_vector(side, theta);
            let rv = rot(phi, v);
            let rdv = rot(phi, dv);
            let prv = perp(rv);
            let p = [chain.axles[i][0] + l * rv[0], chain.axles[i][1] + l * rv[1]];
            let dp = [
                chain.axle_rates[i][0] + l * (dphi * prv[0] + dtheta * rdv[0]),
                chain.axle_rates[i][1] + l * (dphi * prv[1] + dtheta * rdv[1]),
            ];
            let (position, velocity) = to_body(p, dp);
            feet[FootId::new(i, side).index()] = FootState { position, velocity };
        }
        axles.push(to_body(chain.axles[i], chain.axle_rates[i]).0);
    }
    BodyFeet {
        feet,
        axles,
        headings: chain.headings.iter().map(|h| h - mean_heading).collect(),
    }
}

/// Body-frame geometry of a posture (velocities zero).
pub fn body_feet(morph: &RobotMorphology, posture: &Posture) -> BodyFeet {
    body_feet_with_rates(morph, posture, None)
}

/// World positions of all axles and foot targets for a body pose.
///
/// Axle heights are `base.height + hip_lift`; each foot target sits at its
/// hip's lift (the level where the extended leg touches down).
pub fn forward_kinematics(morph: &RobotMorphology, posture: &Posture, base: &BasePose) -> KinematicState {
    let body = body_feet(morph, posture);
    let n = morph.n_pairs;
    let axles = (0..n)
        .map(|i| {
            let p = base.apply(body.axles[i]);
            [p[0], p[1], base.height + posture.hip_lift[i]]
        })
        .collect();
    let feet = (0..2 * n)
        .map(|f| {
            let p = base.apply(body.feet[f].position);
            [p[0], p[1], base.height + posture.hip_lift[f / 2]]
        })
        .collect();
    KinematicState {
        axles,
        feet,
        headings: body.headings.iter().map(|h| h + base.theta).collect(),
    }
}
