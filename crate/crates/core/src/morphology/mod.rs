//! Robot geometry and the gait encoding.
//!
//! A multi-legged elongate robot is a chain of `N` bipedal modules joined by
//! yaw and pitch joints. The gait is a traveling wave: the yaw joints follow
//! a two-weight shape basis, the pitch joints a double-frequency vertical
//! wave, and each leg pair retracts (in stance) and protracts (in swing) on
//! the same wave phase.

mod collision;
pub(crate) mod kinematics;
pub(crate) mod posture;
pub(crate) mod wave;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use collision::{compute_a_sc, self_collision, COLLISION_DISTANCE};
pub use kinematics::{forward_kinematics, BasePose, BodyFeet, FootState, KinematicState};
pub use posture::{posture_at, posture_at_shape, Configuration, ConfigurationRate, Posture};
pub use wave::{pitch_angles, shape_basis, yaw_angles};

/// Working chart bound on the shape variable magnitude.
pub const CHART_BOUND: f64 = PI;

/// Largest vertical wave amplitude accepted by a gait.
pub const MAX_VERTICAL_AMPLITUDE: f64 = FRAC_PI_3;

/// Foot contact geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum FootGeometry {
    Point,
    /// C-shaped leg acting as a distributed foot; lengths in cm.
    CArc { arc_length: f64, width: f64 },
}

impl Default for FootGeometry {
    fn default() -> Self {
        FootGeometry::Point
    }
}

/// Side of a leg pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn mirrored(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Identifies one of the `2N` feet; pair 0 is the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FootId {
    pub pair: usize,
    pub side: Side,
}

impl FootId {
    pub fn new(pair: usize, side: Side) -> Self {
        FootId { pair, side }
    }

    /// Flat index `2 * pair + side` used by all per-foot vectors.
    pub fn index(self) -> usize {
        2 * self.pair
            + match self.side {
                Side::Left => 0,
                Side::Right => 1,
            }
    }

    pub fn from_index(index: usize) -> Self {
        let side = if index % 2 == 0 { Side::Left } else { Side::Right };
        FootId {
            pair: index / 2,
            side,
        }
    }
}

/// Geometry of a multi-legged elongate robot. Lengths in cm, angles in rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotMorphology {
    /// Number of leg pairs `N`.
    pub n_pairs: usize,
    pub leg_length: f64,
    /// Distance between consecutive leg-pair axles.
    pub module_spacing: f64,
    /// Nominal shoulder amplitude `A_leg` of the hardware.
    pub shoulder_amplitude: f64,
    pub foot: FootGeometry,
}

impl Default for RobotMorphology {
    /// Twelve-legged robot: six pairs, 8.4 cm legs, 13 cm modules, `A_leg = π/12`.
    fn default() -> Self {
        RobotMorphology {
            n_pairs: 6,
            leg_length: 8.4,
            module_spacing: 13.0,
            shoulder_amplitude: PI / 12.0,
            foot: FootGeometry::Point,
        }
    }
}

impl RobotMorphology {
    pub fn new(n_pairs: usize, leg_length: f64, module_spacing: f64, shoulder_amplitude: f64) -> Result<Self> {
        let m = RobotMorphology {
            n_pairs,
            leg_length,
            module_spacing,
            shoulder_amplitude,
            foot: FootGeometry::Point,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_pairs(&self, n_pairs: usize) -> Self {
        RobotMorphology {
            n_pairs,
            ..self.clone()
        }
    }

    pub fn with_foot(&self, foot: FootGeometry) -> Self {
        RobotMorphology { foot, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pairs < 2 {
            return Err(Error::invalid("morphology", format!("n_pairs = {} (need >= 2)", self.n_pairs)));
        }
        if !(self.leg_length > 0.0 && self.leg_length.is_finite()) {
            return Err(Error::invalid("morphology", format!("leg_length = {}", self.leg_length)));
        }
        if !(self.module_spacing > 0.0 && self.module_spacing.is_finite()) {
            return Err(Error::invalid("morphology", format!("module_spacing = {}", self.module_spacing)));
        }
        if !(self.shoulder_amplitude > 0.0 && self.shoulder_amplitude < FRAC_PI_2) {
            return Err(Error::invalid(
                "morphology",
                format!("shoulder_amplitude = {} outside (0, π/2)", self.shoulder_amplitude),
            ));
        }
        if let FootGeometry::CArc { arc_length, width } = self.foot {
            if !(arc_length > 0.0 && width > 0.0) {
                return Err(Error::invalid("foot", format!("C-arc {arc_length} x {width}")));
            }
        }
        Ok(())
    }

    /// Body length used for BL normalization: `N · module_spacing`.
    pub fn body_length(&self) -> f64 {
        self.n_pairs as f64 * self.module_spacing
    }

    pub fn n_feet(&self) -> usize {
        2 * self.n_pairs
    }

    pub fn n_joints(&self) -> usize {
        self.n_pairs - 1
    }

    /// Default hip-lift clearance for intended stance.
    pub fn default_clearance(&self) -> f64 {
        CLEARANCE_FACTOR * self.leg_length * self.shoulder_amplitude.sin()
    }
}

/// `c0 = CLEARANCE_FACTOR · l · sin(A_leg)`.
pub const CLEARANCE_FACTOR: f64 = 0.6;

/// Parameters of the traveling-wave coding scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitProgram {
    /// Spatial period `S_n`: wave periods along the body.
    pub spatial_period: f64,
    /// Lateral body-wave amplitude `A_b`.
    pub body_amplitude: f64,
    /// Vertical (pitch) wave amplitude `A_p`.
    pub vertical_amplitude: f64,
    /// Shoulder amplitude `A_leg` executed by the gait.
    pub shoulder_amplitude: f64,
    /// Temporal period `T`; one cycle is 2π of phase.
    pub period: f64,
    /// Desired duty factor `d`.
    pub desired_duty: f64,
    /// Hip-lift clearance `c0` in cm.
    pub clearance: f64,
}

impl GaitProgram {
    /// Default open-loop gait for a morphology: `S_n = 1`, no body or vertical wave.
    pub fn for_morphology(morph: &RobotMorphology) -> Self {
        GaitProgram {
            spatial_period: 1.0,
            body_amplitude: 0.0,
            vertical_amplitude: 0.0,
            shoulder_amplitude: morph.shoulder_amplitude,
            period: 1.0,
            desired_duty: 0.5,
            clearance: morph.default_clearance(),
        }
    }

    pub fn with_body_amplitude(&self, a_b: f64) -> Self {
        GaitProgram {
            body_amplitude: a_b,
            ..self.clone()
        }
    }

    pub fn with_vertical_amplitude(&self, a_p: f64) -> Self {
        GaitProgram {
            vertical_amplitude: a_p,
            ..self.clone()
        }
    }

    pub fn with_spatial_period(&self, s_n: f64) -> Self {
        GaitProgram {
            spatial_period: s_n,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |d: String| Err(Error::invalid("gait", d));
        if !(self.spatial_period > 0.0 && self.spatial_period.is_finite()) {
            return bad(format!("spatial_period = {}", self.spatial_period));
        }
        if !(self.body_amplitude >= 0.0 && self.body_amplitude <= CHART_BOUND) {
            return bad(format!("body_amplitude = {}", self.body_amplitude));
        }
        if !(0.0..=MAX_VERTICAL_AMPLITUDE).contains(&self.vertical_amplitude) {
            return bad(format!("vertical_amplitude = {} outside [0, π/3]", self.vertical_amplitude));
        }
        if !(self.shoulder_amplitude >= 0.0 && self.shoulder_amplitude < FRAC_PI_2) {
            return bad(format!("shoulder_amplitude = {}", self.shoulder_amplitude));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period = {}", self.period));
        }
        if !(self.desired_duty > 0.0 && self.desired_duty <= 0.5) {
            return bad(format!("desired_duty = {} outside (0, 0.5]", self.desired_duty));
        }
        if !(self.clearance >= 0.0 && self.clearance.is_finite()) {
            return bad(format!("clearance = {}", self.clearance));
        }
        Ok(())
    }
}

/// A point `w = (w1, w2)` in the two-dimensional shape space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub w1: f64,
    pub w2: f64,
}

impl ShapePoint {
    pub const ORIGIN: ShapePoint = ShapePoint { w1: 0.0, w2: 0.0 };

    pub fn new(w1: f64, w2: f64) -> Self {
        ShapePoint { w1, w2 }
    }

    /// Point on the circular gait path `w = (A_b sin t, A_b cos t)`.
    pub fn on_circle(a_b: f64, phase: f64) -> Self {
        ShapePoint {
            w1: a_b * phase.sin(),
            w2: a_b * phase.cos(),
        }
    }

    pub fn norm(self) -> f64 {
        self.w1.hypot(self.w2)
    }

    /// Gait phase encoded by the direction of `w`; zero at the origin.
    pub fn phase(self) -> f64 {
        if self.w1 == 0.0 && self.w2 == 0.0 {
            0.0
        } else {
            self.w1.atan2(self.w2)
        }
    }

    pub fn validate(self) -> Result<()> {
        if !(self.w1.is_finite() && self.w2.is_finite()) || self.norm() > CHART_BOUND {
            return Err(Error::invalid("shape point", format!("({}, {})", self.w1, self.w2)));
        }
        Ok(())
    }
}

impl std::ops::Add for ShapePoint {
    type Output = ShapePoint;
    fn add(self, o: ShapePoint) -> ShapePoint {
        ShapePoint::new(self.w1 + o.w1, self.w2 + o.w2)
    }
}

impl std::ops::Mul<ShapePoint> for f64 {
    type Output = ShapePoint;
    fn mul(self, p: ShapePoint) -> ShapePoint {
        ShapePoint::new(self * p.w1, self * p.w2)
    }
}
