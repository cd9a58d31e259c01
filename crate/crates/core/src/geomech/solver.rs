//! Regularized Coulomb force balance and its solution for body velocity.
//!
//! The balance `Σ F_f = 0, Σ q_f × F_f = 0` with `F_f = −N v_f / (|v_f| + ε)`
//! is the stationarity condition of the convex dissipation potential
//! `Φ(ξ) = Σ N (|v_f| − ε ln(1 + |v_f|/ε))`, so it is solved by damped
//! Newton on `Φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::kinematics::body_feet_with_rates;
use crate::morphology::posture::{posture_for, posture_rates};
use crate::morphology::{Configuration, ConfigurationRate, FootId, GaitProgram, RobotMorphology, ShapePoint};

/// Friction regularization, cm per phase-radian.
pub const FRICTION_EPSILON: f64 = 1e-6;

const MAX_ITERATIONS: usize = 200;
const GRADIENT_TOL: f64 = 1e-10;
/// Largest residual accepted from a solve.
///
/// Converged solves normally land below 1e-8. A nearly stuck foot turns the
/// last-bit rounding of `ξ` into force errors of order `ulp(ξ)/ε`, so a few
/// geometries (two stuck feet far from the torque reference) bottom out
/// between 1e-8 and 1e-7; those are still returned.
const RESIDUAL_TOL: f64 = 1e-6;
/// Iterations without gradient progress before the rounding floor is declared.
const STALL_LIMIT: usize = 8;

/// Body-frame velocity per radian of gait phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    /// Forward, cm per phase-radian.
    pub xi_x: f64,
    /// Lateral (left positive), cm per phase-radian.
    pub xi_y: f64,
    /// Yaw rate, rad per phase-radian.
    pub xi_theta: f64,
}

impl BodyVelocity {
    pub const ZERO: BodyVelocity = BodyVelocity {
        xi_x: 0.0,
        xi_y: 0.0,
        xi_theta: 0.0,
    };

    pub fn from_array(a: [f64; 3]) -> Self {
        BodyVelocity {
            xi_x: a[0],
            xi_y: a[1],
            xi_theta: a[2],
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.xi_x, self.xi_y, self.xi_theta]
    }

    pub fn norm(self) -> f64 {
        let [a, b, c] = self.to_array();
        (a * a + b * b + c * c).sqrt()
    }

    pub fn scaled(self, c: f64) -> Self {
        BodyVelocity::from_array(self.to_array().map(|v| c * v))
    }
}

/// The 3×2 local connection: rows map shape velocity to `ξ_x`, `ξ_y`, `ξ_θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalConnection {
    pub rows: [[f64; 2]; 3],
}

impl LocalConnection {
    pub fn apply(&self, wdot: ShapePoint) -> BodyVelocity {
        BodyVelocity::from_array(self.rows.map(|r| r[0] * wdot.w1 + r[1] * wdot.w2))
    }
}

/// Planar regularized Coulomb force opposing `slip`, magnitude below `scale`.
pub fn grf(slip: [f64; 2], scale: f64) -> [f64; 2] {
    let k = -scale / (slip[0].hypot(slip[1]) + FRICTION_EPSILON);
    [k * slip[0], k * slip[1]]
}

/// Stance feet of one instant in the body frame, with the foot velocities
/// induced by shape change alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPatch {
    pub feet: Vec<FootId>,
    pub positions: Vec<[f64; 2]>,
    pub shape_velocities: Vec<[f64; 2]>,
}

impl ContactPatch {
    /// Patch for a configuration; `stance` overrides the intended contacts.
    pub fn new(
        morph: &RobotMorphology,
        gait: &GaitProgram,
        config: Configuration,
        rate: ConfigurationRate,
        stance: Option<&[bool]>,
    ) -> Self {
        let posture = posture_for(morph, gait, config);
        let rates = posture_rates(morph, gait, config, rate);
        let body = body_feet_with_rates(morph, &posture, Some(&rates));
        let mask = stance.unwrap_or(&posture.intended_stance);
        let mut patch = ContactPatch {
            feet: Vec::new(),
            positions: Vec::new(),
            shape_velocities: Vec::new(),
        };
        for (k, foot) in body.feet.iter().enumerate() {
            if mask[k] {
                patch.feet.push(FootId::from_index(k));
                patch.positions.push(foot.position);
                patch.shape_velocities.push(foot.velocity);
            }
        }
        patch
    }

    fn at_shape(morph: &RobotMorphology, gait: &GaitProgram, w: ShapePoint, wdot: ShapePoint) -> Self {
        ContactPatch::new(
            morph,
            gait,
            Configuration::from_shape(w),
            ConfigurationRate::from_shape_velocity(w, wdot),
            None,
        )
    }

    pub fn is_empty(&self) -> bool {
        self.feet.is_empty()
    }

    /// Normal load per stance foot; the total is 1.
    pub fn load(&self) -> f64 {
        1.0 / self.feet.len() as f64
    }

    /// Slip velocity of the `k`-th stance foot.
    pub fn slip(&self, xi: BodyVelocity, k: usize) -> [f64; 2] {
        let q = self.positions[k];
        let u = self.shape_velocities[k];
        // a stuck foot has ξ_x ≈ −u_x, so the sum is exact and the fused
        // multiply-add rounds only once: near-zero slips keep full precision
        [
            (-xi.xi_theta).mul_add(q[1], xi.xi_x + u[0]),
            xi.xi_theta.mul_add(q[0], xi.xi_y + u[1]),
        ]
    }

    /// Net force and torque about the mean stance-foot position.
    pub fn residual(&self, xi: BodyVelocity) -> Result<[f64; 3]> {
        if self.is_empty() {
            return Err(Error::AllFeetAirborne);
        }
        let n = self.load();
        let [cx, cy] = self.centroid();
        let mut r = [0.0; 3];
        for k in 0..self.feet.len() {
            let f = grf(self.slip(xi, k), n);
            let q = self.positions[k];
            r[0] += f[0];
            r[1] += f[1];
            r[2] += (q[0] - cx) * f[1] - (q[1] - cy) * f[0];
        }
        Ok(r)
    }

    /// Potential `Φ_ε`, its gradient and Hessian at `xi`.
    fn potential(&self, xi: [f64; 3], eps: f64) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let n = self.load();
        let mut phi = 0.0;
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for k in 0..self.feet.len() {
            let q = self.positions[k];
            let v = self.slip(BodyVelocity::from_array(xi), k);
            let r = v[0].hypot(v[1]);
            phi += n * (r - eps * (r / eps).ln_1p());
            let d = r + eps;
            let f = [v[0] / d, v[1] / d];
            // columns of the slip Jacobian: ∂v/∂ξ_x, ∂v/∂ξ_y, ∂v/∂ξ_θ
            let jac = [[1.0, 0.0], [0.0, 1.0], [-q[1], q[0]]];
            let mut mv = [[1.0 / d, 0.0], [0.0, 1.0 / d]];
            if r > 0.0 {
                let c = 1.0 / (r * d * d);
                for a in 0..2 {
                    for b in 0..2 {
                        mv[a][b] -= c * v[a] * v[b];
                    }
                }
            }
            for a in 0..3 {
                g[a] += n * (jac[a][0] * f[0] + jac[a][1] * f[1]);
                for b in 0..3 {
                    let mut s = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            s += jac[a][i] * mv[i][j] * jac[b][j];
                        }
                    }
                    h[a][b] += n * s;
                }
            }
        }
        (phi, g, h)
    }

    /// Body velocity balancing all stance-foot friction forces.
    ///
    /// Newton steps on the dissipation potential with backtracking, with the
    /// regularization relaxed from the slip scale down to
    /// [`FRICTION_EPSILON`]. Starts from rest; fully deterministic.
    pub fn solve(&self) -> Result<BodyVelocity> {
        if self.is_empty() {
            return Err(Error::AllFeetAirborne);
        }
        let scale = self
            .shape_velocities
            .iter()
            .map(|u| u[0].hypot(u[1]))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok(BodyVelocity::ZERO);
        }
        // solve for the velocity of the stance centroid: short lever arms
        let centroid = self.centroid();
        let centered = ContactPatch {
            feet: self.feet.clone(),
            positions: self.positions.iter().map(|q| [q[0] - centroid[0], q[1] - centroid[1]]).collect(),
            shape_velocities: self.shape_velocities.clone(),
        };
        let xi_c = centered.minimize(scale)?;
        let solution = BodyVelocity {
            xi_x: xi_c[0] + xi_c[2] * centroid[1],
            xi_y: xi_c[1] - xi_c[2] * centroid[0],
            xi_theta: xi_c[2],
        };
        let solution = self.polish(solution);
        if norm3(self.residual(solution)?) > RESIDUAL_TOL {
            return Err(self.failure(MAX_ITERATIONS, solution.to_array()));
        }
        Ok(solution)
    }

    /// Best residual among floating-point neighbours of `xi`.
    ///
    /// Stuck feet amplify the last-bit rounding of `ξ` by `1/ε`; one ulp of
    /// the yaw rate can move the torque by ~1e-8. The residual is linear over
    /// a few ulps, so the integer ulp offsets cancelling it are estimated from
    /// that linearization and the lattice points around them are scanned.
    fn polish(&self, xi: BodyVelocity) -> BodyVelocity {
        let score = |x: [f64; 3]| self.residual(BodyVelocity::from_array(x)).map(norm3).unwrap_or(f64::INFINITY);
        let shift = |x: [f64; 3], k: [i64; 3]| {
            let mut x = x;
            for c in 0..3 {
                for _ in 0..k[c].unsigned_abs().min(1 << 12) {
                    x[c] = if k[c] > 0 { x[c].next_up() } else { x[c].next_down() };
                }
            }
            x
        };
        let base = xi.to_array();
        let Ok(r0) = self.residual(xi) else { return xi };
        let mut per_ulp = [[0.0; 3]; 3];
        for c in 0..3 {
            let mut k = [0; 3];
            k[c] = 1;
            let Ok(r) = self.residual(BodyVelocity::from_array(shift(base, k))) else {
                return xi;
            };
            for row in 0..3 {
                per_ulp[row][c] = r[row] - r0[row];
            }
        }
        let target = solve3(per_ulp, r0.map(|v| -v));
        let mut best = (score(base), base);
        if target.iter().all(|t| t.is_finite() && t.abs() < 1024.0) {
            let centre = target.map(|t| t.round() as i64);
            for dx in -2..=2 {
                for dy in -2..=2 {
                    for dt in -2..=2 {
                        let trial = shift(base, [centre[0] + dx, centre[1] + dy, centre[2] + dt]);
                        let s = score(trial);
                        if s < best.0 {
                            best = (s, trial);
                        }
                    }
                }
            }
        }
        BodyVelocity::from_array(best.1)
    }

    fn centroid(&self) -> [f64; 2] {
        let m = self.feet.len() as f64;
        [
            self.positions.iter().map(|q| q[0]).sum::<f64>() / m,
            self.positions.iter().map(|q| q[1]).sum::<f64>() / m,
        ]
    }

    fn minimize(&self, scale: f64) -> Result<[f64; 3]> {
        let mut xi = [0.0; 3];
        let mut eps = (0.1 * scale).max(FRICTION_EPSILON);
        let mut iterations = 0;
        loop {
            let last = eps <= FRICTION_EPSILON;
            let tol = if last { GRADIENT_TOL } else { 1e-3 * eps };
            let (mut best, mut stalled) = (f64::INFINITY, 0);
            loop {
                let (phi, g, h) = self.potential(xi, eps);
                let gnorm = norm3(g);
                if gnorm <= tol {
                    break;
                }
                if gnorm < 0.5 * best {
                    (best, stalled) = (gnorm, 0);
                } else {
                    stalled += 1;
                    if stalled > STALL_LIMIT {
                        break;
                    }
                }
                if iterations >= MAX_ITERATIONS {
                    return Err(self.failure(iterations, xi));
                }
                iterations += 1;
                let step = newton_step(h, g);
                if norm3(step) <= 1e-15 * (1.0 + norm3(xi)) {
                    // stiff stuck-foot curvature (~1/ε) puts a rounding floor under the gradient
                    break;
                }
                let slope = -dot3(g, step);
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let trial = [xi[0] + t * step[0], xi[1] + t * step[1], xi[2] + t * step[2]];
                    if trial == xi {
                        break;
                    }
                    // near the optimum Φ stops resolving progress; the gradient still does
                    let (phi_t, g_t, _) = self.potential(trial, eps);
                    let flat = phi_t <= phi + 1e-14 * (1.0 + phi.abs());
                    if phi_t < phi - 1e-4 * t * slope || (flat && norm3(g_t) < (1.0 - 1e-4 * t) * gnorm) {
                        xi = trial;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    // no decrease representable in floating point: stationary to rounding
                    break;
                }
            }
            if last {
                break;
            }
            eps = (0.1 * eps).max(FRICTION_EPSILON);
        }
        Ok(xi)
    }

    fn failure(&self, iterations: usize, xi: [f64; 3]) -> Error {
        let xi = BodyVelocity::from_array(xi);
        let r = self.residual(xi).unwrap_or([f64::NAN; 3]);
        Error::NoConvergence {
            iterations,
            residual: norm3(r),
            state: format!(
                "xi = {xi:?}, residual = {r:?}, stance = {:?}, positions = {:?}, shape velocities = {:?}",
                self.feet, self.positions, self.shape_velocities
            ),
        }
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Solve `(H + μI) s = −g`.
///
/// The small shift keeps directions the potential does not see (a single
/// stance foot leaves the yaw rate free) at their current value.
fn newton_step(h: [[f64; 3]; 3], g: [f64; 3]) -> [f64; 3] {
    let trace = h[0][0] + h[1][1] + h[2][2];
    let mu = 1e-14 * trace.max(1e-300);
    let mut a = h;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += mu;
    }
    solve3(a, g.map(|v| -v))
}

/// Gaussian elimination with partial pivoting.
fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = b[i];
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut s = [0.0; 3];
    for row in (0..3).rev() {
        let mut v = a[row][3];
        for k in row + 1..3 {
            v -= a[row][k] * s[k];
        }
        s[row] = v / a[row][row];
    }
    s
}

/// World-frame (body frame at this instant) slip velocity of a stance foot.
pub fn foot_slip_velocity(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    w: ShapePoint,
    wdot: ShapePoint,
    xi: BodyVelocity,
    foot: FootId,
) -> Result<[f64; 2]> {
    let patch = ContactPatch::at_shape(morph, gait, w, wdot);
    match patch.feet.iter().position(|&f| f == foot) {
        Some(k) => Ok(patch.slip(xi, k)),
        None => Err(Error::SwingFoot(foot.index())),
    }
}

/// Net friction force and torque (about the mean stance foot) at `ξ`.
pub fn force_balance_residual(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    w: ShapePoint,
    wdot: ShapePoint,
    xi: BodyVelocity,
) -> Result<[f64; 3]> {
    ContactPatch::at_shape(morph, gait, w, wdot).residual(xi)
}

/// Body velocity at shape `w` moving with shape velocity `wdot`.
pub fn solve_body_velocity(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    w: ShapePoint,
    wdot: ShapePoint,
) -> Result<BodyVelocity> {
    ContactPatch::at_shape(morph, gait, w, wdot).solve()
}

/// Body velocity for a full configuration, optionally with a realized
/// stance set replacing the intended one.
pub fn solve_configuration(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    config: Configuration,
    rate: ConfigurationRate,
    stance: Option<&[bool]>,
) -> Result<BodyVelocity> {
    ContactPatch::new(morph, gait, config, rate, stance).solve()
}

/// Columns are body velocities for unit shape velocities along `w1` and `w2`.
pub fn local_connection(morph: &RobotMorphology, gait: &GaitProgram, w: ShapePoint) -> Result<LocalConnection> {
    let c1 = solve_body_velocity(morph, gait, w, ShapePoint::new(1.0, 0.0))?.to_array();
    let c2 = solve_body_velocity(morph, gait, w, ShapePoint::new(0.0, 1.0))?.to_array();
    Ok(LocalConnection {
        rows: [[c1[0], c2[0]], [c1[1], c2[1]], [c1[2], c2[2]]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::{forward_kinematics, posture_at_shape, BasePose, Side};

    fn setup() -> (RobotMorphology, GaitProgram) {
        let m = RobotMorphology::default();
        let g = GaitProgram::for_morphology(&m);
        (m, g)
    }

    fn first_stance(m: &RobotMorphology, g: &GaitProgram, w: ShapePoint) -> FootId {
        let p = posture_at_shape(m, g, w);
        FootId::from_index(p.intended_stance.iter().position(|&s| s).unwrap())
    }

    #[test]
    fn grf_examples() {
        let f = grf([1.0, 0.0], 1.0);
        assert!((f[0] + 1.0).abs() < 1e-5 && f[1] == 0.0);
        assert_eq!(grf([0.0, 0.0], 1.0), [0.0, 0.0]);
    }

    #[test]
    fn grf_magnitude_bounds() {
        for k in 0..2000 {
            let a = k as f64 * 0.37;
            let r = 10f64.powf(-3.0 + 6.0 * (k as f64 / 2000.0));
            let f = grf([r * a.cos(), r * a.sin()], 2.5);
            let m = f[0].hypot(f[1]);
            assert!(m <= 2.5);
            assert!(m >= 0.999 * 2.5);
        }
    }

    #[test]
    fn rest_and_rigid_translation_slip() {
        let (m, g) = setup();
        let w = ShapePoint::new(0.3, 0.4);
        let foot = first_stance(&m, &g, w);
        let zero = foot_slip_velocity(&m, &g, w, ShapePoint::ORIGIN, BodyVelocity::ZERO, foot).unwrap();
        assert_eq!(zero, [0.0, 0.0]);
        let xi = BodyVelocity::from_array([1.0, 0.0, 0.0]);
        let v = foot_slip_velocity(&m, &g, w, ShapePoint::ORIGIN, xi, foot).unwrap();
        assert_eq!(v, [1.0, 0.0]);
    }

    #[test]
    fn swing_foot_is_rejected() {
        let (m, g) = setup();
        let w = ShapePoint::new(0.3, 0.4);
        let p = posture_at_shape(&m, &g, w);
        let swing = p.intended_stance.iter().position(|&s| !s).unwrap();
        let r = foot_slip_velocity(&m, &g, w, ShapePoint::ORIGIN, BodyVelocity::ZERO, FootId::from_index(swing));
        assert!(matches!(r, Err(Error::SwingFoot(k)) if k == swing));
    }

    #[test]
    fn shape_slip_matches_finite_difference() {
        // body-frame foot displacement between nearby shapes
        let (m, g) = setup();
        let g = g.with_body_amplitude(0.6);
        for &(w, wdot) in &[
            (ShapePoint::new(0.3, 0.5), ShapePoint::new(1.0, 0.0)),
            (ShapePoint::new(-0.4, 0.2), ShapePoint::new(0.3, -0.8)),
        ] {
            let foot = first_stance(&m, &g, w);
            let v = foot_slip_velocity(&m, &g, w, wdot, BodyVelocity::ZERO, foot).unwrap();
            let h = 1e-6;
            let at = |c: f64| {
                let p = posture_at_shape(&m, &g, w + (c * h) * wdot);
                let body = crate::morphology::kinematics::body_feet(&m, &p);
                body.foot(foot).position
            };
            let (a, b) = (at(1.0), at(-1.0));
            for c in 0..2 {
                let fd = (a[c] - b[c]) / (2.0 * h);
                assert!((v[c] - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{} vs {}", v[c], fd);
            }
        }
    }

    #[test]
    fn translation_matches_forward_kinematics() {
        // rigid-body term: moving the base by ξ dt moves a foot by the slip
        let (m, g) = setup();
        let w = ShapePoint::new(0.2, -0.5);
        let p = posture_at_shape(&m, &g, w);
        let foot = first_stance(&m, &g, w);
        let xi = BodyVelocity::from_array([0.4, -0.2, 0.05]);
        let v = foot_slip_velocity(&m, &g, w, ShapePoint::ORIGIN, xi, foot).unwrap();
        let h = 1e-6;
        let a = forward_kinematics(&m, &p, &BasePose::default().advanced([h * 0.4, -h * 0.2, h * 0.05]));
        let b = forward_kinematics(&m, &p, &BasePose::default().advanced([-h * 0.4, h * 0.2, -h * 0.05]));
        for c in 0..2 {
            let fd = (a.feet[foot.index()][c] - b.feet[foot.index()][c]) / (2.0 * h);
            assert!((v[c] - fd).abs() < 1e-6, "{} vs {}", v[c], fd);
        }
    }

    #[test]
    fn zero_shape_velocity_gives_rest() {
        let (m, g) = setup();
        let xi = solve_body_velocity(&m, &g, ShapePoint::new(0.5, 0.1), ShapePoint::ORIGIN).unwrap();
        assert_eq!(xi, BodyVelocity::ZERO);
    }

    #[test]
    fn solve_balances_forces() {
        let (m, g) = setup();
        let w = ShapePoint::new(0.4, 0.7);
        let wdot = ShapePoint::new(0.7, -0.4);
        let xi = solve_body_velocity(&m, &g, w, wdot).unwrap();
        let r = force_balance_residual(&m, &g, w, wdot, xi).unwrap();
        assert!(norm3(r) < 1e-8, "{r:?}");
        assert!(xi.xi_x.abs() > 1e-3);
    }

    #[test]
    fn straight_body_at_rest_has_zero_residual() {
        let (m, g) = setup();
        let r = force_balance_residual(&m, &g, ShapePoint::ORIGIN, ShapePoint::ORIGIN, BodyVelocity::ZERO).unwrap();
        assert_eq!(r, [0.0; 3]);
    }

    #[test]
    fn single_foot_sticks() {
        let patch = ContactPatch {
            feet: vec![FootId::new(0, Side::Left)],
            positions: vec![[3.0, 4.0]],
            shape_velocities: vec![[1.0, -2.0]],
        };
        let xi = patch.solve().unwrap();
        let v = patch.slip(xi, 0);
        assert!(v[0].hypot(v[1]) < 1e-5);
    }

    #[test]
    fn empty_patch_is_airborne() {
        let patch = ContactPatch {
            feet: vec![],
            positions: vec![],
            shape_velocities: vec![],
        };
        assert!(matches!(patch.solve(), Err(Error::AllFeetAirborne)));
        assert!(matches!(patch.residual(BodyVelocity::ZERO), Err(Error::AllFeetAirborne)));
    }

    #[test]
    fn connection_reproduces_basis_solves() {
        let (m, g) = setup();
        let w = ShapePoint::new(-0.3, 0.6);
        let a = local_connection(&m, &g, w).unwrap();
        let xi = solve_body_velocity(&m, &g, w, ShapePoint::new(0.0, 1.0)).unwrap();
        let via = a.apply(ShapePoint::new(0.0, 1.0));
        assert!((via.xi_x - xi.xi_x).abs() < 1e-12);
    }

    #[test]
    fn newton_step_solves_system() {
        let h = [[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]];
        let g = [1.0, -2.0, 0.5];
        let s = newton_step(h, g);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| h[i][j] * s[j]).sum::<f64>() + g[i];
            assert!(r.abs() < 1e-12);
        }
    }
}
