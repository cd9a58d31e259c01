//! Self-collision between adjacent feet and the collision-free amplitude.

use std::f64::consts::TAU;

use super::kinematics::body_feet;
use super::posture::posture_at;
use super::{FootId, GaitProgram, Posture, RobotMorphology, Side, CHART_BOUND};

/// Feet closer than this (cm) collide; roughly the size of a foot.
pub const COLLISION_DISTANCE: f64 = 1.0;

const PHASE_SAMPLES: usize = 256;
const SWEEP_STEP: f64 = 0.01;
const BISECTION_TOL: f64 = 1e-3;

/// True iff two same-side feet of consecutive pairs are closer than 1 cm.
///
/// Feet are treated as points for every foot geometry.
pub fn self_collision(morph: &RobotMorphology, posture: &Posture) -> bool {
    let body = body_feet(morph, posture);
    (0..morph.n_pairs - 1).any(|i| {
        [Side::Left, Side::Right].into_iter().any(|side| {
            let a = body.foot(FootId::new(i, side)).position;
            let b = body.foot(FootId::new(i + 1, side)).position;
            (a[0] - b[0]).hypot(a[1] - b[1]) < COLLISION_DISTANCE
        })
    })
}

fn collides_somewhere(morph: &RobotMorphology, gait: &GaitProgram, a_b: f64) -> bool {
    let g = gait.with_body_amplitude(a_b);
    (0..PHASE_SAMPLES).any(|k| self_collision(morph, &posture_at(morph, &g, TAU * k as f64 / PHASE_SAMPLES as f64)))
}

/// Largest body amplitude `A_SC` for which no sampled phase collides at any
/// amplitude up to it.
///
/// Amplitudes are swept upward in 0.01 rad steps until the first collision,
/// then the bracket is bisected to 1e-3 rad. Returns the chart bound π when
/// nothing collides and 0 when the straight body already collides. The
/// gait's own body amplitude is ignored.
pub fn compute_a_sc(morph: &RobotMorphology, gait: &GaitProgram) -> f64 {
    if collides_somewhere(morph, gait, 0.0) {
        return 0.0;
    }
    let mut safe = 0.0;
    loop {
        let next = (safe + SWEEP_STEP).min(CHART_BOUND);
        if collides_somewhere(morph, gait, next) {
            let mut hit = next;
            while hit - safe > BISECTION_TOL {
                let mid = 0.5 * (safe + hit);
                if collides_somewhere(morph, gait, mid) {
                    hit = mid;
                } else {
                    safe = mid;
                }
            }
            return safe;
        }
        if next >= CHART_BOUND {
            return CHART_BOUND;
        }
        safe = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::posture_at;

    fn mirrored(p: &Posture) -> Posture {
        let n = p.n_pairs();
        let mut stance = vec![false; 2 * n];
        for i in 0..n {
            stance[2 * i] = p.intended_stance[2 * i + 1];
            stance[2 * i + 1] = p.intended_stance[2 * i];
        }
        Posture {
            yaw_angles: p.yaw_angles.iter().map(|a| -a).collect(),
            pitch_angles: p.pitch_angles.clone(),
            shoulder_left: p.shoulder_right.clone(),
            shoulder_right: p.shoulder_left.clone(),
            leg_phase: p.leg_phase.clone(),
            hip_lift: p.hip_lift.clone(),
            intended_stance: stance,
        }
    }

    #[test]
    fn straight_body_does_not_collide() {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m);
        for k in 0..32 {
            assert!(!self_collision(&m, &posture_at(&m, &g, k as f64 * 0.2)));
        }
    }

    #[test]
    fn exactly_one_cm_is_not_a_collision() {
        let m = RobotMorphology::new(2, 8.4, 1.0, 0.2).unwrap();
        let p = Posture {
            yaw_angles: vec![0.0],
            pitch_angles: vec![0.0],
            shoulder_left: vec![0.0; 2],
            shoulder_right: vec![0.0; 2],
            leg_phase: vec![0.0; 2],
            hip_lift: vec![0.0; 2],
            intended_stance: vec![true; 4],
        };
        assert!(!self_collision(&m, &p));
        let closer = RobotMorphology::new(2, 8.4, 0.999, 0.2).unwrap();
        assert!(self_collision(&closer, &p));
    }

    #[test]
    fn collision_is_mirror_invariant() {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m);
        for a_b in [0.5, 1.0, 1.3, 1.6] {
            let g = g.with_body_amplitude(a_b);
            for k in 0..64 {
                let p = posture_at(&m, &g, k as f64 * TAU / 64.0);
                assert_eq!(self_collision(&m, &p), self_collision(&m, &mirrored(&p)));
            }
        }
    }

    #[test]
    fn a_sc_bounds_collisions() {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m);
        let a_sc = compute_a_sc(&m, &g);
        assert!(a_sc > 0.0 && a_sc < CHART_BOUND);
        assert!(!collides_somewhere(&m, &g, a_sc));
        assert!(collides_somewhere(&m, &g, a_sc + 2e-3));
    }

    #[test]
    fn shorter_legs_allow_larger_amplitude() {
        let long = RobotMorphology::default();
        let short = RobotMorphology::new(6, 2.0, 13.0, 0.2).unwrap();
        let a_long = compute_a_sc(&long, &GaitProgram::for_morphology(&long));
        let a_short = compute_a_sc(&short, &GaitProgram::for_morphology(&short));
        assert!(a_short > a_long, "{a_short} vs {a_long}");
    }

    #[test]
    fn degenerate_spacing_returns_zero() {
        let m = RobotMorphology::new(4, 8.4, 0.5, 0.2).unwrap();
        let g = GaitProgram::for_morphology(&m);
        assert_eq!(compute_a_sc(&m, &g), 0.0);
    }
}
