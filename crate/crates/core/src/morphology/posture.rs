//! Full-body posture and intended contact as a function of gait phase.

use std::f64::consts::TAU;

use super::kinematics::PostureRates;
use super::wave::{pitch_angles, wavenumber, yaw_angles};
use super::{GaitProgram, RobotMorphology, ShapePoint, Side};

/// Phase lag of the leg cycle behind the yaw wave at the same module.
///
/// With this lag a module's heading swings in the direction that carries
/// its stance foot backward, so body undulation adds to the leg stroke.
pub(crate) const LEG_PHASE_LAG: f64 = 0.6;

/// Shape and gait phase together fix the posture.
///
/// The yaw joints follow the shape weights `w`; the legs and the vertical
/// wave follow the phase. On the circular gait path the phase is the polar
/// angle of `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    pub w: ShapePoint,
    pub phase: f64,
}

impl Configuration {
    /// Point of the gait path at `phase`.
    pub fn on_gait(gait: &GaitProgram, phase: f64) -> Self {
        Configuration {
            w: ShapePoint::on_circle(gait.body_amplitude, phase),
            phase,
        }
    }

    /// Shape-space point with the phase read from the direction of `w`.
    pub fn from_shape(w: ShapePoint) -> Self {
        Configuration { w, phase: w.phase() }
    }
}

/// Rate of change of a [`Configuration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigurationRate {
    pub wdot: ShapePoint,
    pub phase_rate: f64,
}

impl ConfigurationRate {
    /// Unit phase rate along the circular gait path.
    pub fn along_gait(gait: &GaitProgram, phase: f64) -> Self {
        let a = gait.body_amplitude;
        ConfigurationRate {
            wdot: ShapePoint::new(a * phase.cos(), -a * phase.sin()),
            phase_rate: 1.0,
        }
    }

    /// Shape velocity at `w`; the phase rate is the angular rate of `w`.
    pub fn from_shape_velocity(w: ShapePoint, wdot: ShapePoint) -> Self {
        let r2 = w.w1 * w.w1 + w.w2 * w.w2;
        let phase_rate = if r2 == 0.0 {
            0.0
        } else {
            (w.w2 * wdot.w1 - w.w1 * wdot.w2) / r2
        };
        ConfigurationRate { wdot, phase_rate }
    }

    pub fn scaled(self, c: f64) -> Self {
        ConfigurationRate {
            wdot: c * self.wdot,
            phase_rate: c * self.phase_rate,
        }
    }
}

/// Joint angles, hip lifts and intended contacts at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Posture {
    /// Yaw angle of each of the `N − 1` joints.
    pub yaw_angles: Vec<f64>,
    /// Pitch angle of each of the `N − 1` joints.
    pub pitch_angles: Vec<f64>,
    /// Shoulder angles, positive when the foot is protracted (forward).
    pub shoulder_left: Vec<f64>,
    pub shoulder_right: Vec<f64>,
    /// Leg-cycle phase of each pair; the left leg retracts on `(0, π)`.
    pub leg_phase: Vec<f64>,
    /// Hip height above the settled ground plane, cm.
    pub hip_lift: Vec<f64>,
    /// Intended stance flag per foot, indexed by [`super::FootId::index`].
    pub intended_stance: Vec<bool>,
}

impl Posture {
    pub fn n_pairs(&self) -> usize {
        self.shoulder_left.len()
    }

    pub fn shoulder(&self, pair: usize, side: Side) -> f64 {
        match side {
            Side::Left => self.shoulder_left[pair],
            Side::Right => self.shoulder_right[pair],
        }
    }

    pub fn stance_count(&self) -> usize {
        self.intended_stance.iter().filter(|&&s| s).count()
    }
}

/// Posture on the gait path at `phase`, with `w = (A_b sin t, A_b cos t)`.
pub fn posture_at(morph: &RobotMorphology, gait: &GaitProgram, phase: f64) -> Posture {
    posture_for(morph, gait, Configuration::on_gait(gait, phase))
}

/// Posture at a point of the shape space.
pub fn posture_at_shape(morph: &RobotMorphology, gait: &GaitProgram, w: ShapePoint) -> Posture {
    posture_for(morph, gait, Configuration::from_shape(w))
}

pub(crate) fn leg_phases(n: usize, spatial_period: f64, phase: f64) -> Vec<f64> {
    let k = wavenumber(n, spatial_period);
    (0..n).map(|i| phase - k * i as f64 - LEG_PHASE_LAG).collect()
}

/// Pitch-wave phase at joint 0; crests sit at the stance transitions.
fn pitch_phase(n: usize, spatial_period: f64, phase: f64) -> f64 {
    phase - 0.5 * wavenumber(n, spatial_period) - LEG_PHASE_LAG
}

pub(crate) fn posture_for(morph: &RobotMorphology, gait: &GaitProgram, config: Configuration) -> Posture {
    let n = morph.n_pairs;
    let s_n = gait.spatial_period;
    // wrapping keeps contact flags identical across whole cycles
    let phase = config.phase.rem_euclid(TAU);
    let yaw = yaw_angles(config.w, n, s_n);
    let pitch = pitch_angles(pitch_phase(n, s_n, phase), gait.vertical_amplitude, n, s_n);
    let leg_phase = leg_phases(n, s_n, phase);
    let a_leg = gait.shoulder_amplitude;
    let shoulder_left: Vec<f64> = leg_phase.iter().map(|c| a_leg * c.cos()).collect();
    let shoulder_right = shoulder_left.iter().map(|a| -a).collect();
    let hip_lift = hip_lift(&pitch, morph.module_spacing);

    let mut intended_stance = vec![false; 2 * n];
    for i in 0..n {
        let reachable = hip_lift[i] <= gait.clearance;
        let s = leg_phase[i].sin();
        intended_stance[2 * i] = reachable && s > 0.0;
        intended_stance[2 * i + 1] = reachable && s < 0.0;
    }
    Posture {
        yaw_angles: yaw,
        pitch_angles: pitch,
        shoulder_left,
        shoulder_right,
        leg_phase,
        hip_lift,
        intended_stance,
    }
}

/// Joint rates of the posture for a configuration rate.
pub(crate) fn posture_rates(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    config: Configuration,
    rate: ConfigurationRate,
) -> PostureRates {
    let n = morph.n_pairs;
    let yaw = yaw_angles(rate.wdot, n, gait.spatial_period);
    let shoulder_left: Vec<f64> = leg_phases(n, gait.spatial_period, config.phase)
        .iter()
        .map(|c| -gait.shoulder_amplitude * c.sin() * rate.phase_rate)
        .collect();
    let shoulder_right = shoulder_left.iter().map(|r| -r).collect();
    PostureRates {
        yaw,
        shoulder_left,
        shoulder_right,
    }
}

/// Hip heights from the pitch chain, settled onto the ground.
///
/// The chain is integrated from a level head; the best-fit line through the
/// module heights is removed (the body rests level on average) and the
/// lowest hip is placed on the nominal ground plane.
pub(crate) fn hip_lift(pitch: &[f64], spacing: f64) -> Vec<f64> {
    let n = pitch.len() + 1;
    let mut z = Vec::with_capacity(n);
    let (mut slope, mut height) = (0.0f64, 0.0f64);
    z.push(0.0);
    for &p in pitch {
        let next = slope + p;
        height -= 0.5 * spacing * (slope.sin() + next.sin());
        slope = next;
        z.push(height);
    }
    let nf = n as f64;
    let mean_i = (nf - 1.0) / 2.0;
    let mean_z = z.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, zi) in z.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxy += di * (zi - mean_z);
        sxx += di * di;
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let resid: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, zi)| zi - mean_z - b * (i as f64 - mean_i))
        .collect();
    let lowest = resid.iter().cloned().fold(f64::INFINITY, f64::min);
    resid.iter().map(|r| r - lowest).collect()
}
