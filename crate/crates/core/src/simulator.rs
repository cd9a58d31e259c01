//! Quasi-static rollouts over stepfields with realized contacts.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{stop_and_wait, Controller, SensorFrame};
use crate::error::{Error, Result};
use crate::geomech::{grf, ContactPatch, FootTrack, SlipBudget};
use crate::morphology::{
    forward_kinematics, posture_at, BasePose, Configuration, ConfigurationRate, FootGeometry, GaitProgram, Posture,
    RobotMorphology,
};
use crate::terrain::{flat_terrain, Stepfield};

/// Default steps per gait cycle.
pub const STEPS_PER_CYCLE: usize = 128;
/// Default reach window as a fraction of leg length.
pub const REACH_FACTOR: f64 = 0.35;
/// Samples along a C-arc footprint.
pub const ARC_SAMPLES: usize = 9;

/// Piecewise-linear, non-decreasing map from rugosity to contact-loss
/// probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTable {
    /// `(rugosity, probability)` knots sorted by rugosity.
    pub points: Vec<(f64, f64)>,
}

impl LossTable {
    pub fn constant(p: f64) -> Self {
        LossTable {
            points: vec![(0.0, p)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::invalid("loss table", "no knots"));
        }
        for w in self.points.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                return Err(Error::invalid("loss table", "knots must increase in rugosity and be non-decreasing"));
            }
        }
        if self.points.iter().any(|&(r, p)| !r.is_finite() || !(0.0..=1.0).contains(&p)) {
            return Err(Error::invalid("loss table", "probabilities must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Interpolated probability, held constant beyond the end knots.
    pub fn probability(&self, rugosity: f64) -> f64 {
        let pts = &self.points;
        if rugosity <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let ((r0, p0), (r1, p1)) = (w[0], w[1]);
            if rugosity <= r1 {
                return p0 + (p1 - p0) * (rugosity - r0) / (r1 - r0);
            }
        }
        pts[pts.len() - 1].1
    }
}

/// How intended contacts become realized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContactMode {
    /// A foot engages when the terrain lies within `reach` cm of its target.
    Geometric { reach: f64 },
    /// Each intended contact is erased with the table's probability at the
    /// terrain's rugosity, independently per foot and contact.
    Channel { loss: LossTable },
}

impl ContactMode {
    pub fn geometric(morph: &RobotMorphology) -> Self {
        ContactMode::Geometric {
            reach: REACH_FACTOR * morph.leg_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ContactMode::Geometric { reach } if !(*reach > 0.0) => {
                Err(Error::invalid("reach", format!("{reach} must be positive")))
            }
            ContactMode::Geometric { .. } => Ok(()),
            ContactMode::Channel { loss } => loss.validate(),
        }
    }
}

/// Rollout state between steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub pose: BasePose,
    /// Gait phase in `[0, 2π)`.
    pub phase: f64,
    pub intended_stance: Vec<bool>,
    pub realized_stance: Vec<bool>,
    /// Forward (world `x`) travel since the start.
    pub distance: f64,
    /// Per-foot slip accumulated since the start.
    pub slip: Vec<SlipBudget>,
    /// Forward thrust of each foot during the last step.
    pub thrust: Vec<f64>,
    /// Forward slip displacement of each foot during the last step.
    pub step_slip: Vec<f64>,
    /// Channel mode: erasure drawn at the onset of the current contact.
    pub erased: Vec<bool>,
    /// Feet that used their retry this cycle.
    pub retried: Vec<bool>,
    /// Feet engaged through a retry for the current contact.
    pub extended: Vec<bool>,
    pub airborne: bool,
}

impl SimState {
    pub fn new(morph: &RobotMorphology, pose: BasePose) -> Self {
        let m = morph.n_feet();
        SimState {
            pose,
            phase: 0.0,
            intended_stance: vec![false; m],
            realized_stance: vec![false; m],
            distance: 0.0,
            slip: vec![SlipBudget::default(); m],
            thrust: vec![0.0; m],
            step_slip: vec![0.0; m],
            erased: vec![false; m],
            retried: vec![false; m],
            extended: vec![false; m],
            airborne: false,
        }
    }
}

/// Mean terrain height under the axles: the body settles onto the terrain
/// it spans.
pub fn ride_height(morph: &RobotMorphology, posture: &Posture, pose: &BasePose, terrain: &Stepfield) -> f64 {
    let ks = forward_kinematics(morph, posture, &BasePose { height: 0.0, ..*pose });
    ks.axles.iter().map(|a| terrain.height_at(a[0], a[1])).sum::<f64>() / ks.axles.len() as f64
}

/// Whether a foot at `(x, y)` with target level `z` and heading `heading`
/// finds ground within `reach`.
fn foot_engages(foot: FootGeometry, terrain: &Stepfield, x: f64, y: f64, z: f64, heading: f64, reach: f64) -> bool {
    let within = |px: f64, py: f64, pz: f64| (terrain.height_at(px, py) - pz).abs() <= reach;
    match foot {
        FootGeometry::Point => within(x, y, z),
        FootGeometry::CArc { arc_length, .. } => {
            // semicircular arc in the fore-aft plane, lowest point at the target
            let r = arc_length / PI;
            let (s, c) = heading.sin_cos();
            (0..ARC_SAMPLES).any(|k| {
                let a = -0.5 * PI + PI * k as f64 / (ARC_SAMPLES - 1) as f64;
                let along = r * a.sin();
                within(x + along * c, y + along * s, z + r * (1.0 - a.cos()))
            })
        }
    }
}

/// Geometric realized contacts with a per-foot reach.
fn geometric_contacts(morph: &RobotMorphology, posture: &Posture, pose: &BasePose, terrain: &Stepfield, reach: &[f64]) -> Vec<bool> {
    let ks = forward_kinematics(morph, posture, pose);
    (0..morph.n_feet())
        .map(|f| {
            posture.intended_stance[f] && {
                let p = ks.feet[f];
                foot_engages(morph.foot, terrain, p[0], p[1], p[2], ks.headings[f / 2], reach[f])
            }
        })
        .collect()
}

/// Realized contacts for a posture at a pose whose `height` is the ride
/// height.
///
/// `erased` holds channel-mode erasures: a fresh draw is made for each
/// foot whose contact starts now (intended now but not in `previous`).
pub fn resolve_contacts<R: Rng>(
    morph: &RobotMorphology,
    posture: &Posture,
    pose: &BasePose,
    terrain: &Stepfield,
    mode: &ContactMode,
    previous: &[bool],
    erased: &mut [bool],
    rng: &mut R,
) -> Vec<bool> {
    match mode {
        ContactMode::Geometric { reach } => {
            geometric_contacts(morph, posture, pose, terrain, &vec![*reach; morph.n_feet()])
        }
        ContactMode::Channel { loss } => {
            let p = loss.probability(terrain.rugosity().unwrap_or(0.0));
            (0..morph.n_feet())
                .map(|f| {
                    let on = posture.intended_stance[f];
                    if on && !previous[f] {
                        erased[f] = rng.random::<f64>() < p;
                    }
                    on && !erased[f]
                })
                .collect()
        }
    }
}

/// Fixed inputs of a rollout.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub morph: &'a RobotMorphology,
    pub gait: &'a GaitProgram,
    pub terrain: &'a Stepfield,
    pub mode: &'a ContactMode,
    /// Extra reach for one retry per foot per cycle.
    pub retry_reach: Option<f64>,
}

/// Advances the state by `dphase` of gait phase.
///
/// The posture and body velocity are taken at the step midpoint. With no
/// realized contact the pose is left unchanged.
pub fn step<R: Rng>(state: &SimState, ctx: &StepContext, dphase: f64, rng: &mut R) -> Result<SimState> {
    if !(dphase > 0.0 && dphase <= TAU / 64.0) {
        return Err(Error::invalid("dphase", format!("{dphase} outside (0, 2π/64]")));
    }
    let morph = ctx.morph;
    let mid = state.phase + 0.5 * dphase;
    let posture = posture_at(morph, ctx.gait, mid);
    let mut pose = state.pose;
    pose.height = ride_height(morph, &posture, &pose, ctx.terrain);

    let mut next = state.clone();
    for f in 0..morph.n_feet() {
        if !posture.intended_stance[f] {
            next.extended[f] = false;
        }
    }
    let mut realized = resolve_contacts(
        morph,
        &posture,
        &pose,
        ctx.terrain,
        ctx.mode,
        &state.intended_stance,
        &mut next.erased,
        rng,
    );
    if let (Some(extra), ContactMode::Geometric { reach }) = (ctx.retry_reach, ctx.mode) {
        let frame = SensorFrame {
            intended: vec![posture.intended_stance.clone()],
            realized: vec![realized.clone()],
        };
        for f in stop_and_wait(&frame, &next.retried) {
            next.retried[f] = true;
            next.extended[f] = true;
        }
        if next.extended.iter().any(|&e| e) {
            let reaches: Vec<f64> = next.extended.iter().map(|&e| if e { reach + extra } else { *reach }).collect();
            let wide = geometric_contacts(morph, &posture, &pose, ctx.terrain, &reaches);
            for f in 0..realized.len() {
                realized[f] = realized[f] || (next.extended[f] && wide[f]);
            }
        }
    }

    next.intended_stance = posture.intended_stance.clone();
    next.realized_stance = realized;
    next.thrust.iter_mut().for_each(|t| *t = 0.0);
    next.step_slip.iter_mut().for_each(|s| *s = 0.0);
    next.phase = (state.phase + dphase).rem_euclid(TAU);

    let patch = ContactPatch::new(
        morph,
        ctx.gait,
        Configuration::on_gait(ctx.gait, mid),
        ConfigurationRate::along_gait(ctx.gait, mid),
        Some(&next.realized_stance),
    );
    next.airborne = patch.is_empty();
    if next.airborne {
        return Ok(next);
    }
    let xi = patch.solve()?;
    let load = patch.load();
    for (k, foot) in patch.feet.iter().enumerate() {
        let f = foot.index();
        let v = patch.slip(xi, k);
        let ds = v[0] * dphase;
        next.step_slip[f] = ds;
        if ds > 0.0 {
            next.slip[f].d1 += ds;
        } else {
            next.slip[f].d2 -= ds;
        }
        next.thrust[f] = grf(v, load)[0];
    }
    let x0 = state.pose.x;
    next.pose = state
        .pose
        .advanced([xi.xi_x * dphase, xi.xi_y * dphase, xi.xi_theta * dphase]);
    next.distance += next.pose.x - x0;
    Ok(next)
}

/// Heading that makes one flat-ground cycle of the gait travel along `+x`.
pub fn travel_heading(morph: &RobotMorphology, gait: &GaitProgram, steps_per_cycle: usize) -> Result<f64> {
    let flat = flat_terrain();
    let mode = ContactMode::geometric(morph);
    let ctx = StepContext {
        morph,
        gait,
        terrain: &flat,
        mode: &mode,
        retry_reach: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = SimState::new(morph, BasePose::default());
    let dphase = TAU / steps_per_cycle as f64;
    for _ in 0..steps_per_cycle {
        s = step(&s, &ctx, dphase, &mut rng)?;
    }
    if s.pose.x.hypot(s.pose.y) < 1e-12 {
        return Ok(0.0);
    }
    Ok(-s.pose.y.atan2(s.pose.x))
}

/// Where a trial starts: body-frame origin and heading (aligned to travel
/// when `None`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub heading: Option<f64>,
}

impl Default for StartPose {
    fn default() -> Self {
        StartPose {
            x: 0.0,
            y: 0.0,
            heading: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub n_cycles: usize,
    pub steps_per_cycle: usize,
    pub seed: u64,
    pub start: StartPose,
    /// Upper clamp on the body amplitude a controller may request; the
    /// initial amplitude when `None`.
    pub body_limit: Option<f64>,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            n_cycles: 3,
            steps_per_cycle: STEPS_PER_CYCLE,
            seed: 0,
            start: StartPose::default(),
            body_limit: None,
        }
    }
}

/// Gait amplitudes in force during one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitTrace {
    pub vertical_amplitude: f64,
    pub body_amplitude: f64,
    pub shoulder_amplitude: f64,
}

/// Everything recorded during a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub controller: String,
    pub steps_per_cycle: usize,
    pub n_cycles: usize,
    pub body_length: f64,
    pub start: BasePose,
    /// Pose `(x, y, θ)` after every step.
    pub poses: Vec<[f64; 3]>,
    /// Forward travel per cycle (cm).
    pub stride: Vec<f64>,
    /// Forward travel per cycle in body lengths.
    pub stride_bl: Vec<f64>,
    /// Measured duty factor per cycle.
    pub duty: Vec<f64>,
    pub trace: Vec<GaitTrace>,
    /// `[step][foot]` contact matrices.
    pub intended: Vec<Vec<bool>>,
    pub realized: Vec<Vec<bool>>,
    /// `[step][foot]` forward thrust.
    pub thrust: Vec<Vec<f64>>,
    /// Per-foot forward slip displacement for every step.
    pub slip: Vec<FootTrack>,
    /// Per-foot slip budget over all cycles after the first.
    pub slip_budgets: Vec<SlipBudget>,
    pub airborne_steps: usize,
}

impl TrialRecord {
    /// Forward distance after every step.
    pub fn distances(&self) -> Vec<f64> {
        self.poses.iter().map(|p| p[0] - self.start.x).collect()
    }

    pub fn thrust_profile(&self) -> ThrustProfile {
        ThrustProfile {
            steps_per_cycle: self.steps_per_cycle,
            samples: self.thrust.clone(),
            stance: self.realized.clone(),
        }
    }

    pub fn total_distance(&self) -> f64 {
        self.stride.iter().sum()
    }

    pub fn mean_stride(&self) -> f64 {
        self.total_distance() / self.n_cycles as f64
    }
}

/// Rolls out a gait for `n_cycles`, consulting the controller at the end of
/// every cycle.
pub fn run_trial(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    terrain: &Stepfield,
    mode: &ContactMode,
    controller: &dyn Controller,
    opts: &TrialOptions,
) -> Result<TrialRecord> {
    morph.validate()?;
    gait.validate()?;
    mode.validate()?;
    if opts.n_cycles == 0 {
        return Err(Error::invalid("n_cycles", "need at least one cycle"));
    }
    if opts.steps_per_cycle < 64 {
        return Err(Error::invalid("steps_per_cycle", format!("{} < 64", opts.steps_per_cycle)));
    }
    let steps = opts.steps_per_cycle;
    let dphase = TAU / steps as f64;
    let heading = match opts.start.heading {
        Some(h) => h,
        None => travel_heading(morph, gait, steps)?,
    };
    let start = BasePose::planar(opts.start.x, opts.start.y, heading);
    let body_limit = opts.body_limit.unwrap_or(gait.body_amplitude);
    let retry_reach = controller.retry_reach(morph);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut gait = gait.clone();
    let mut state = SimState::new(morph, start);
    let m = morph.n_feet();
    let total = opts.n_cycles * steps;
    let mut rec = TrialRecord {
        seed: opts.seed,
        controller: controller.name().to_string(),
        steps_per_cycle: steps,
        n_cycles: opts.n_cycles,
        body_length: morph.body_length(),
        start,
        poses: Vec::with_capacity(total),
        stride: Vec::with_capacity(opts.n_cycles),
        stride_bl: Vec::with_capacity(opts.n_cycles),
        duty: Vec::with_capacity(opts.n_cycles),
        trace: Vec::with_capacity(opts.n_cycles),
        intended: Vec::with_capacity(total),
        realized: Vec::with_capacity(total),
        thrust: Vec::with_capacity(total),
        slip: vec![
            FootTrack {
                steps_per_cycle: steps,
                slip: Vec::with_capacity(total),
            };
            m
        ],
        slip_budgets: vec![SlipBudget::default(); m],
        airborne_steps: 0,
    };
    for cycle in 0..opts.n_cycles {
        rec.trace.push(GaitTrace {
            vertical_amplitude: gait.vertical_amplitude,
            body_amplitude: gait.body_amplitude,
            shoulder_amplitude: gait.shoulder_amplitude,
        });
        state.retried.iter_mut().for_each(|r| *r = false);
        let x0 = state.pose.x;
        let ctx = StepContext {
            morph,
            gait: &gait,
            terrain,
            mode,
            retry_reach,
        };
        for k in 0..steps {
            // phase from the step index keeps cycles aligned exactly
            state.phase = dphase * k as f64;
            state = step(&state, &ctx, dphase, &mut rng)?;
            rec.poses.push([state.pose.x, state.pose.y, state.pose.theta]);
            rec.intended.push(state.intended_stance.clone());
            rec.realized.push(state.realized_stance.clone());
            rec.thrust.push(state.thrust.clone());
            for f in 0..m {
                rec.slip[f].slip.push(state.step_slip[f]);
                if cycle > 0 {
                    let s = state.step_slip[f];
                    if s > 0.0 {
                        rec.slip_budgets[f].d1 += s;
                    } else {
                        rec.slip_budgets[f].d2 -= s;
                    }
                }
            }
            rec.airborne_steps += state.airborne as usize;
        }
        let dx = state.pose.x - x0;
        rec.stride.push(dx);
        rec.stride_bl.push(dx / morph.body_length());
        let lo = cycle * steps;
        let frame = SensorFrame {
            intended: rec.intended[lo..].to_vec(),
            realized: rec.realized[lo..].to_vec(),
        };
        rec.duty.push(crate::control::measure_duty(&frame)?);
        let decision = controller.decide(&frame, &gait)?;
        gait = decision.apply(&gait, body_limit);
    }
    Ok(rec)
}

/// Time to cover a forward distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeToDistance {
    /// Cycles (fractional) at the first crossing.
    Reached(f64),
    /// The distance was never reached within the trial.
    Censored,
}

impl TimeToDistance {
    pub fn cycles(self) -> Option<f64> {
        match self {
            TimeToDistance::Reached(c) => Some(c),
            TimeToDistance::Censored => None,
        }
    }
}

/// First time the forward distance reaches `target`, interpolating
/// linearly within the crossing step.
pub fn time_to_distance(distances: &[f64], steps_per_cycle: usize, target: f64) -> TimeToDistance {
    let mut prev = 0.0;
    for (k, &d) in distances.iter().enumerate() {
        if d >= target {
            let frac = if d > prev { (target - prev) / (d - prev) } else { 1.0 };
            return TimeToDistance::Reached((k as f64 + frac.clamp(0.0, 1.0)) / steps_per_cycle as f64);
        }
        prev = d;
    }
    TimeToDistance::Censored
}

/// Empirical CDF of normalized velocities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityCdf {
    /// Sorted normalized samples.
    pub values: Vec<f64>,
}

impl VelocityCdf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Step points `(value, cumulative fraction)`.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, (k + 1) as f64 / n))
            .collect()
    }

    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }
}

pub fn velocity_cdf(samples: &[f64], v_open: f64) -> Result<VelocityCdf> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples(format!("CDF needs 2 samples, got {}", samples.len())));
    }
    if !(v_open > 0.0) {
        return Err(Error::invalid("v_open", format!("{v_open} must be positive")));
    }
    let mut values: Vec<f64> = samples.iter().map(|s| s / v_open).collect();
    values.sort_by(f64::total_cmp);
    Ok(VelocityCdf { values })
}

/// Per-step thrust samples with the contact mask they were produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrustProfile {
    pub steps_per_cycle: usize,
    pub samples: Vec<Vec<f64>>,
    pub stance: Vec<Vec<bool>>,
}

impl ThrustProfile {
    /// Contiguous contact runs per foot as `(foot, first step, length)`.
    pub fn bacs(&self) -> Vec<(usize, usize, usize)> {
        let m = self.stance.first().map_or(0, |r| r.len());
        let mut out = Vec::new();
        for f in 0..m {
            let mut start = None;
            for (k, row) in self.stance.iter().enumerate() {
                match (row[f], start) {
                    (true, None) => start = Some(k),
                    (false, Some(s)) => {
                        out.push((f, s, k - s));
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = start {
                out.push((f, s, self.stance.len() - s));
            }
        }
        out
    }

    /// Contact durations as fractions of the period.
    pub fn bac_durations(&self) -> Vec<f64> {
        self.bacs()
            .iter()
            .map(|&(_, _, len)| len as f64 / self.steps_per_cycle as f64)
            .collect()
    }
}

/// Variance of thrust within each contact, averaged over all contacts.
pub fn thrust_variance(profile: &ThrustProfile) -> Result<f64> {
    let bacs = profile.bacs();
    if bacs.is_empty() {
        return Err(Error::NoBacs);
    }
    let total: f64 = bacs
        .iter()
        .map(|&(f, s, len)| {
            let xs: Vec<f64> = (s..s + len).map(|k| profile.samples[k][f]).collect();
            let mean = xs.iter().sum::<f64>() / len as f64;
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / len as f64
        })
        .sum();
    Ok(total / bacs.len() as f64)
}

/// Fraction of intended contact samples that were not realized.
pub fn loss_fraction(record: &TrialRecord) -> f64 {
    let mut intended = 0usize;
    let mut lost = 0usize;
    for (i, r) in record.intended.iter().zip(&record.realized) {
        for (a, b) in i.iter().zip(r) {
            intended += *a as usize;
            lost += (*a && !*b) as usize;
        }
    }
    if intended == 0 {
        0.0
    } else {
        lost as f64 / intended as f64
    }
}

/// Minimum fields per rugosity level for channel calibration.
pub const MIN_CALIBRATION_SEEDS: usize = 10;

/// Isotonic (non-decreasing) weighted least-squares fit.
fn isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (v2, w2, n2) = blocks.pop().unwrap();
            let (v1, w1, n1) = blocks.pop().unwrap();
            blocks.push(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, n1 + n2));
        }
    }
    blocks.into_iter().flat_map(|(v, _, n)| std::iter::repeat_n(v, n)).collect()
}

/// Contact-loss table from geometric rollouts over a terrain ensemble.
///
/// Fields are grouped by generation parameters; each group needs at least
/// ten fields. The knots are the group-mean rugosity and loss frequency,
/// anchored at zero loss on flat ground and made non-decreasing.
pub fn calibrate_channel(
    ensemble: &[Stepfield],
    morph: &RobotMorphology,
    gait: &GaitProgram,
    opts: &TrialOptions,
) -> Result<LossTable> {
    let mode = ContactMode::geometric(morph);
    let mut groups: Vec<((u64, u64, u64), Vec<&Stepfield>)> = Vec::new();
    for f in ensemble {
        let p = &f.provenance;
        let key = (p.mean.to_bits(), p.std.to_bits(), p.increment.to_bits());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(f),
            None => groups.push((key, vec![f])),
        }
    }
    if groups.is_empty() {
        return Err(Error::InsufficientSamples("empty terrain ensemble".into()));
    }
    let mut knots = Vec::new();
    for (_, fields) in &groups {
        if fields.len() < MIN_CALIBRATION_SEEDS {
            return Err(Error::InsufficientSamples(format!(
                "{} fields in a rugosity level, need {MIN_CALIBRATION_SEEDS}",
                fields.len()
            )));
        }
        let mut rg = 0.0;
        let mut loss = 0.0;
        for f in fields {
            rg += f.rugosity()?;
            let o = TrialOptions {
                seed: f.provenance.seed,
                ..*opts
            };
            loss += loss_fraction(&run_trial(morph, gait, f, &mode, &crate::control::OpenLoop, &o)?);
        }
        let n = fields.len() as f64;
        knots.push((rg / n, loss / n, n));
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    if knots[0].0 > 0.0 {
        knots.insert(0, (0.0, 0.0, 1.0));
    }
    let fit = isotonic(
        &knots.iter().map(|k| k.1).collect::<Vec<_>>(),
        &knots.iter().map(|k| k.2).collect::<Vec<_>>(),
    );
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (k, p) in knots.iter().zip(fit) {
        match points.last_mut() {
            Some(last) if k.0 <= last.0 => last.1 = last.1.max(p),
            _ => points.push((k.0, p.clamp(0.0, 1.0))),
        }
    }
    Ok(LossTable { points })
}
