//! Experiment recipes: parameter sweeps and seeded ensembles.
//!
//! Every recipe cell draws its randomness from `cell_seed(master, index)`.
//! Ensembles that compare conditions reuse the same indices, so trial `k`
//! sees the same terrain and start offset under every condition.

use std::f64::consts::{PI, TAU};

use mer_core::control::{Controller, OpenLoop};
use mer_core::geomech::{
    height_function, optimal_amplitude, select_amplitude, stride_line_integral,
    stride_surface_integral, stride_upper_bound, Component, GridSpec, HeightField,
};
use mer_core::morphology::{compute_a_sc, FootGeometry, GaitProgram, RobotMorphology, ShapePoint};
use mer_core::simulator::{
    calibrate_channel, loss_fraction, run_trial, thrust_variance, time_to_distance, travel_heading,
    velocity_cdf, ContactMode, StartPose, TrialOptions, TrialRecord,
};
use mer_core::terrain::{flat_terrain, generate_stepfield, Stepfield};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ContactKind, FieldParams};
use crate::error::{HarnessError, Result};
use crate::output::{trial_outputs, Cell, Output, Table};
use crate::seeds::{cell_seed, splitmix64};
use crate::svg::{Plot, Series};

/// Samples on the closed circle used for line integrals.
const LOOP_SAMPLES: usize = 256;
/// Upper end of the body amplitudes used for the Stokes comparison.
pub const STOKES_MAX_AMPLITUDE: f64 = PI / 4.0;
/// Nodes whose height is below this fraction of the peak are skipped in
/// the small-loop check: their relative error is dominated by noise.
const GREEN_MIN_FRACTION: f64 = 0.1;
/// Flatness tolerance for the saturation onset.
pub const SATURATION_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Recipe {
    /// Both configured ensembles, or one field from the master seed when
    /// explicit parameters are given.
    GenTerrain { field: Option<FieldParams> },
    Heightfield { component: Component },
    SweepAmplitude,
    SweepLegs,
    Tradeoff,
    VwaveCdf,
    Siso,
    Cleg,
    BoundCheck,
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::GenTerrain { .. } => "gen-terrain",
            Recipe::Heightfield { .. } => "heightfield",
            Recipe::SweepAmplitude => "sweep-amplitude",
            Recipe::SweepLegs => "sweep-legs",
            Recipe::Tradeoff => "tradeoff",
            Recipe::VwaveCdf => "vwave-cdf",
            Recipe::Siso => "siso",
            Recipe::Cleg => "cleg",
            Recipe::BoundCheck => "bound-check",
        }
    }
}

/// Outputs of one recipe and the cell seeds it drew.
#[derive(Debug, Clone)]
pub struct RecipeRun {
    pub output: Output,
    pub seeds: Vec<u64>,
}

/// Terrain class of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Flat,
    /// Moderate rugosity (about 0.17).
    Low,
    /// High rugosity (about 0.32).
    High,
}

impl Level {
    pub fn label(self) -> &'static str {
        match self {
            Level::Flat => "flat",
            Level::Low => "low",
            Level::High => "high",
        }
    }
}

/// Collision limit, stride optimum and the amplitude picked between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeChoice {
    pub a_sc: f64,
    pub a_b_star: f64,
    pub a_b: f64,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Index of the first point after which the curve stays within
/// `SATURATION_TOLERANCE` of its value there.
pub fn saturation_onset(strides: &[f64]) -> Option<usize> {
    (0..strides.len()).find(|&i| {
        let s = strides[i];
        strides[i + 1..].iter().all(|v| (v - s).abs() <= SATURATION_TOLERANCE * s.abs())
    })
}

/// Planar displacement per cycle predicted by integrating the connection
/// around the circular gait path.
pub fn gm_stride(morph: &RobotMorphology, gait: &GaitProgram, a_b: f64) -> Result<f64> {
    if a_b == 0.0 {
        return Ok(0.0);
    }
    let d = gm_displacement(morph, gait, a_b)?;
    Ok(d[0].hypot(d[1]))
}

fn gm_displacement(morph: &RobotMorphology, gait: &GaitProgram, a_b: f64) -> Result<[f64; 3]> {
    let path = circle(ShapePoint::ORIGIN, a_b);
    Ok(stride_line_integral(morph, &gait.with_body_amplitude(a_b), &path)?)
}

fn circle(center: ShapePoint, radius: f64) -> Vec<ShapePoint> {
    (0..=LOOP_SAMPLES)
        .map(|k| {
            // close the loop exactly
            let t = if k == LOOP_SAMPLES { 0.0 } else { TAU * k as f64 / LOOP_SAMPLES as f64 };
            center + ShapePoint::on_circle(radius, t)
        })
        .collect()
}

pub fn amplitude_choice(morph: &RobotMorphology, gait: &GaitProgram) -> Result<AmplitudeChoice> {
    let a_sc = compute_a_sc(morph, gait);
    let field = height_function(morph, gait, Component::X, GridSpec::default())?;
    let a_b_star = optimal_amplitude(&field);
    Ok(AmplitudeChoice {
        a_sc,
        a_b_star,
        a_b: select_amplitude(a_sc, a_b_star),
    })
}

/// Mean stride per cycle on flat ground, open loop.
pub fn flat_stride(morph: &RobotMorphology, gait: &GaitProgram, cycles: usize, steps: usize) -> Result<f64> {
    Ok(flat_record(morph, gait, cycles, steps)?.mean_stride())
}

fn flat_record(morph: &RobotMorphology, gait: &GaitProgram, cycles: usize, steps: usize) -> Result<TrialRecord> {
    let opts = TrialOptions {
        n_cycles: cycles,
        steps_per_cycle: steps,
        ..TrialOptions::default()
    };
    Ok(run_trial(morph, gait, &flat_terrain(), &ContactMode::geometric(morph), &OpenLoop, &opts)?)
}

/// Line integral around a small circle versus the height value times its
/// area, at one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopCheck {
    pub i1: usize,
    pub i2: usize,
    pub line: f64,
    pub surface: f64,
}

/// Small-loop checks at every `stride`-th node whose neighbourhood keeps
/// one stance pattern and whose height is not negligible.
pub fn green_checks(
    morph: &RobotMorphology,
    gait: &GaitProgram,
    field: &HeightField,
    stride: usize,
) -> Result<Vec<LoopCheck>> {
    let n = field.grid.n;
    let h = field.grid.spacing();
    let peak = field
        .values
        .iter()
        .zip(&field.mask)
        .filter(|(_, &m)| !m)
        .fold(0.0f64, |a, (v, _)| a.max(v.abs()));
    let mut nodes = Vec::new();
    for i2 in (1..n - 1).step_by(stride.max(1)) {
        for i1 in (1..n - 1).step_by(stride.max(1)) {
            let clean = (i2 - 1..=i2 + 1).all(|j2| (i1 - 1..=i1 + 1).all(|j1| !field.mask[j2 * n + j1]));
            if clean && field.value_at(i1, i2).abs() >= GREEN_MIN_FRACTION * peak {
                nodes.push((i1, i2));
            }
        }
    }
    let row = field.component.row();
    nodes
        .into_par_iter()
        .map(|(i1, i2)| {
            let path = circle(field.grid.node(i1, i2), h);
            let line = stride_line_integral(morph, gait, &path)?[row];
            Ok(LoopCheck {
                i1,
                i2,
                line,
                surface: field.value_at(i1, i2) * PI * h * h,
            })
        })
        .collect()
}

/// Pooled relative error `Σ|line − surface| / Σ|surface|`.
pub fn pooled_error(checks: &[LoopCheck]) -> f64 {
    let num: f64 = checks.iter().map(|c| (c.line - c.surface).abs()).sum();
    let den: f64 = checks.iter().map(|c| c.surface.abs()).sum();
    num / den
}

pub struct Runner<'a> {
    cfg: &'a Config,
    master: u64,
    pool: rayon::ThreadPool,
}

impl<'a> Runner<'a> {
    /// `jobs = 0` uses every available core.
    pub fn new(cfg: &'a Config, master: u64, jobs: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?;
        Ok(Runner { cfg, master, pool })
    }

    pub fn run(&self, recipe: Recipe) -> Result<RecipeRun> {
        self.pool.install(|| match recipe {
            Recipe::GenTerrain { field: None } => self.gen_terrain(),
            Recipe::GenTerrain { field: Some(p) } => self.single_field(p),
            Recipe::Heightfield { component } => self.heightfield(component),
            Recipe::SweepAmplitude => self.sweep_amplitude(),
            Recipe::SweepLegs => self.sweep_legs(),
            Recipe::Tradeoff => self.tradeoff(),
            Recipe::VwaveCdf => self.vwave_cdf(),
            Recipe::Siso => self.siso(),
            Recipe::Cleg => self.cleg(),
            Recipe::BoundCheck => self.bound_check(),
        })
    }

    fn seeds(&self, count: usize) -> Vec<u64> {
        (0..count as u64).map(|k| cell_seed(self.master, k)).collect()
    }

    fn params(&self, level: Level) -> Option<FieldParams> {
        match level {
            Level::Flat => None,
            Level::Low => Some(self.cfg.terrain.low),
            Level::High => Some(self.cfg.terrain.high),
        }
    }

    /// Terrain for one trial.
    pub fn field(&self, level: Level, seed: u64) -> Result<Stepfield> {
        let t = &self.cfg.terrain;
        match self.params(level) {
            None => Ok(flat_terrain()),
            Some(p) => Ok(generate_stepfield(seed, p.mean, p.std, p.increment, t.trial_cols, t.trial_rows)?),
        }
    }

    /// Arena-sized field as configured for the level.
    pub fn arena(&self, level: Level, seed: u64) -> Result<Stepfield> {
        match self.params(level) {
            None => Ok(flat_terrain()),
            Some(p) => Ok(generate_stepfield(seed, p.mean, p.std, p.increment, p.cols, p.rows)?),
        }
    }

    /// Start with the tail at the field edge plus a random offset.
    fn start(&self, morph: &RobotMorphology, field: &Stepfield, seed: u64, heading: f64) -> StartPose {
        let jitter = self.cfg.terrain.start_jitter;
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
        let (dx, dy): (f64, f64) = (rng.random(), rng.random());
        StartPose {
            x: 0.5 * morph.body_length() + jitter * dx,
            y: 0.5 * field.y_extent() + jitter * (dy - 0.5),
            heading: Some(heading),
        }
    }

    fn contact_mode(&self, morph: &RobotMorphology, gait: &GaitProgram) -> Result<ContactMode> {
        match self.cfg.contact.mode {
            ContactKind::Geometric => Ok(self.cfg.geometric_mode(morph)),
            ContactKind::Channel => {
                let count = self.cfg.contact.calibration_seeds;
                let mut ensemble = Vec::with_capacity(2 * count);
                for (k, level) in [Level::Low, Level::High].into_iter().enumerate() {
                    for j in 0..count {
                        let seed = cell_seed(self.master ^ 0xCA11_B8A7E, (k * count + j) as u64);
                        ensemble.push(self.field(level, seed)?);
                    }
                }
                let opts = TrialOptions {
                    n_cycles: self.cfg.run.cycles,
                    steps_per_cycle: self.cfg.run.steps_per_cycle,
                    ..TrialOptions::default()
                };
                let loss = calibrate_channel(&ensemble, morph, gait, &opts)?;
                Ok(ContactMode::Channel { loss })
            }
        }
    }

    /// Body amplitude for the configured gait: explicit or selected.
    fn configured_gait(&self, morph: &RobotMorphology) -> Result<GaitProgram> {
        let base = self.cfg.gait(morph, 0.0)?;
        let a_b = match self.cfg.gait.body_amplitude {
            Some(a) => a,
            None => amplitude_choice(morph, &base)?.a_b,
        };
        self.cfg.gait(morph, a_b)
    }

    /// Runs trial `k` for each seed on the given terrain class.
    #[allow(clippy::too_many_arguments)]
    fn ensemble(
        &self,
        morph: &RobotMorphology,
        gait: &GaitProgram,
        level: Level,
        cycles: usize,
        controller: &dyn Controller,
        seeds: &[u64],
    ) -> Result<Vec<(f64, TrialRecord)>> {
        let steps = self.cfg.run.steps_per_cycle;
        let heading = travel_heading(morph, gait, steps)?;
        let mode = self.contact_mode(morph, gait)?;
        seeds
            .par_iter()
            .map(|&seed| {
                let field = self.field(level, seed)?;
                let opts = TrialOptions {
                    n_cycles: cycles,
                    steps_per_cycle: steps,
                    seed,
                    start: self.start(morph, &field, seed, heading),
                    body_limit: None,
                };
                let rec = run_trial(morph, gait, &field, &mode, controller, &opts)?;
                Ok((field.rugosity()?, rec))
            })
            .collect()
    }

    fn gen_terrain(&self) -> Result<RecipeRun> {
        let seeds = self.seeds(self.cfg.run.seeds);
        let mut out = Output::default();
        let mut table = Table::new("terrain", &["level", "index", "seed", "rugosity", "mean_height", "std_height"]);
        let mut summary = Table::new("terrain_summary", &["level", "fields", "mean_rugosity", "std_rugosity"]);
        for level in [Level::Low, Level::High] {
            let fields: Vec<Stepfield> = seeds
                .par_iter()
                .map(|&s| self.arena(level, s))
                .collect::<Result<_>>()?;
            let mut rg = Vec::new();
            for (k, f) in fields.iter().enumerate() {
                let r = f.rugosity()?;
                let (mh, sh) = mean_std(&f.heights);
                rg.push(r);
                table.push(vec![
                    level.label().into(),
                    k.into(),
                    seeds[k].to_string().into(),
                    r.into(),
                    mh.into(),
                    sh.into(),
                ]);
                out.files.push((format!("fields/{}_{k:03}.txt", level.label()), f.to_text()));
            }
            let (m, s) = mean_std(&rg);
            summary.push(vec![level.label().into(), rg.len().into(), m.into(), s.into()]);
        }
        out.tables.push(table);
        out.tables.push(summary);
        Ok(RecipeRun { output: out, seeds })
    }

    fn single_field(&self, p: FieldParams) -> Result<RecipeRun> {
        let f = generate_stepfield(self.master, p.mean, p.std, p.increment, p.cols, p.rows)?;
        let (mh, sh) = mean_std(&f.heights);
        let mut table = Table::new("terrain", &["seed", "rugosity", "mean_height", "std_height"]);
        table.push(vec![self.master.to_string().into(), f.rugosity()?.into(), mh.into(), sh.into()]);
        Ok(RecipeRun {
            output: Output {
                tables: vec![table],
                plots: Vec::new(),
                files: vec![("stepfield.txt".into(), f.to_text())],
            },
            seeds: vec![self.master],
        })
    }

    fn heightfield(&self, component: Component) -> Result<RecipeRun> {
        let morph = self.cfg.morphology()?;
        let gait = self.cfg.gait(&morph, 0.0)?;
        let grid = GridSpec::default();
        let field = height_function(&morph, &gait, component, grid)?;
        let choice = amplitude_choice(&morph, &gait)?;
        let tag = format!("{component:?}").to_lowercase();
        let mut out = Output::default();
        out.files.push((format!("height_{tag}.txt"), field.to_columnar()));

        let mut values = Table::new(&format!("height_{tag}"), &["w1", "w2", "value", "masked"]);
        for i2 in 0..grid.n {
            for i1 in 0..grid.n {
                let w = grid.node(i1, i2);
                values.push(vec![
                    w.w1.into(),
                    w.w2.into(),
                    field.value_at(i1, i2).into(),
                    field.mask[i2 * grid.n + i1].into(),
                ]);
            }
        }
        let mut amp = Table::new("amplitude", &["n_pairs", "a_sc", "a_b_star", "a_b"]);
        amp.push(vec![morph.n_pairs.into(), choice.a_sc.into(), choice.a_b_star.into(), choice.a_b.into()]);

        let radii: Vec<f64> = self
            .cfg
            .sweep
            .amplitudes
            .iter()
            .copied()
            .filter(|&a| a > 0.0 && a <= STOKES_MAX_AMPLITUDE + 1e-12)
            .collect();
        let line: Vec<f64> = radii
            .par_iter()
            .map(|&a| Ok(gm_displacement(&morph, &gait, a)?[component.row()]))
            .collect::<Result<_>>()?;
        let mut stokes = Table::new("stokes", &["a_b", "line", "surface", "rel_error"]);
        for (&a, &l) in radii.iter().zip(&line) {
            let s = stride_surface_integral(&field, a)?;
            stokes.push(vec![a.into(), l.into(), s.into(), ((l - s).abs() / l.abs().max(s.abs())).into()]);
        }

        let checks = green_checks(&morph, &gait, &field, 1)?;
        let mut green = Table::new("green", &["w1", "w2", "line", "surface", "rel_error"]);
        for c in &checks {
            let w = grid.node(c.i1, c.i2);
            green.push(vec![
                w.w1.into(),
                w.w2.into(),
                c.line.into(),
                c.surface.into(),
                ((c.line - c.surface).abs() / c.surface.abs()).into(),
            ]);
        }
        let mut pooled = Table::new("green_summary", &["nodes", "pooled_rel_error"]);
        pooled.push(vec![checks.len().into(), pooled_error(&checks).into()]);

        out.plots.push((
            format!("height_{tag}"),
            Plot::Heatmap {
                title: format!("height function ({tag}), N = {}", morph.n_pairs),
                values: field
                    .values
                    .iter()
                    .zip(&field.mask)
                    .map(|(&v, &m)| (!m).then_some(v))
                    .collect(),
                n: grid.n,
                bound: grid.bound,
            },
        ));
        out.tables.extend([values, amp, stokes, green, pooled]);
        Ok(RecipeRun {
            output: out,
            seeds: Vec::new(),
        })
    }

    fn sweep_amplitude(&self) -> Result<RecipeRun> {
        let morph = self.cfg.morphology()?;
        let gait = self.cfg.gait(&morph, 0.0)?;
        let choice = amplitude_choice(&morph, &gait)?;
        let run = &self.cfg.run;
        let rows: Vec<(f64, f64, f64)> = self
            .cfg
            .sweep
            .amplitudes
            .par_iter()
            .map(|&a| {
                let g = gait.with_body_amplitude(a);
                Ok((a, gm_stride(&morph, &g, a)?, flat_stride(&morph, &g, run.cycles, run.steps_per_cycle)?))
            })
            .collect::<Result<_>>()?;
        let mut table = Table::new("amplitude_sweep", &["a_b", "gm_stride", "sim_stride"]);
        for &(a, gm, sim) in &rows {
            table.push(vec![a.into(), gm.into(), sim.into()]);
        }
        let peak = |f: fn(&(f64, f64, f64)) -> f64| {
            rows.iter().fold((f64::NAN, f64::NEG_INFINITY), |best, r| if f(r) > best.1 { (r.0, f(r)) } else { best }).0
        };
        let (gm_peak, sim_peak) = (peak(|r| r.1), peak(|r| r.2));
        let mut markers = Table::new("amplitude_markers", &["a_sc", "a_b_star", "gm_peak", "sim_peak"]);
        markers.push(vec![choice.a_sc.into(), choice.a_b_star.into(), gm_peak.into(), sim_peak.into()]);
        let plot = Plot::Lines {
            title: format!("stride vs body amplitude, N = {}", morph.n_pairs),
            x_label: "A_b (rad)".into(),
            y_label: "stride (cm/cycle)".into(),
            series: vec![
                Series::line("GM", rows.iter().map(|r| (r.0, r.1)).collect()),
                Series::line("simulated", rows.iter().map(|r| (r.0, r.2)).collect()),
            ],
            markers: vec![(choice.a_sc, "A_SC".into()), (choice.a_b_star, "A_b*".into())],
        };
        Ok(RecipeRun {
            output: Output {
                tables: vec![table, markers],
                plots: vec![("amplitude_sweep".into(), plot)],
                files: Vec::new(),
            },
            seeds: Vec::new(),
        })
    }

    fn sweep_legs(&self) -> Result<RecipeRun> {
        let base = self.cfg.morphology()?;
        let run = &self.cfg.run;
        let bound = stride_upper_bound(base.leg_length);
        let rows: Vec<(usize, AmplitudeChoice, f64, f64)> = self
            .cfg
            .sweep
            .pairs
            .par_iter()
            .map(|&n| {
                let morph = base.with_pairs(n);
                let gait = self.cfg.gait(&morph, 0.0)?;
                let c = amplitude_choice(&morph, &gait)?;
                let g = gait.with_body_amplitude(c.a_b);
                Ok((n, c, gm_stride(&morph, &g, c.a_b)?, flat_stride(&morph, &g, run.cycles, run.steps_per_cycle)?))
            })
            .collect::<Result<_>>()?;
        let mut table = Table::new(
            "leg_saturation",
            &["n_pairs", "a_sc", "a_b_star", "a_b", "gm_stride", "sim_stride", "bound"],
        );
        for (n, c, gm, sim) in &rows {
            table.push(vec![
                (*n).into(),
                c.a_sc.into(),
                c.a_b_star.into(),
                c.a_b.into(),
                (*gm).into(),
                (*sim).into(),
                bound.into(),
            ]);
        }
        let sims: Vec<f64> = rows.iter().map(|r| r.3).collect();
        let onset = saturation_onset(&sims).map(|i| rows[i].0 as f64).unwrap_or(f64::NAN);
        let mut summary = Table::new("saturation", &["onset_n_pairs", "max_sim_stride", "bound"]);
        summary.push(vec![onset.into(), sims.iter().copied().fold(f64::NAN, f64::max).into(), bound.into()]);
        let ns: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let mut bound_line = Series::line("4l", ns.iter().map(|&n| (n, bound)).collect());
        bound_line.dashed = true;
        let plot = Plot::Lines {
            title: "stride vs leg pairs".into(),
            x_label: "N (leg pairs)".into(),
            y_label: "stride (cm/cycle)".into(),
            series: vec![
                Series::line("GM", rows.iter().map(|r| (r.0 as f64, r.2)).collect()),
                Series::line("simulated", rows.iter().map(|r| (r.0 as f64, r.3)).collect()),
                bound_line,
            ],
            markers: Vec::new(),
        };
        Ok(RecipeRun {
            output: Output {
                tables: vec![table, summary],
                plots: vec![("leg_saturation".into(), plot)],
                files: Vec::new(),
            },
            seeds: Vec::new(),
        })
    }

    fn tradeoff(&self) -> Result<RecipeRun> {
        let base = self.cfg.morphology()?;
        let sweep = &self.cfg.sweep;
        let seeds = self.seeds(sweep.tradeoff_seeds);
        let controller = self.cfg.controller()?;
        let mut cells: Vec<(&str, f64, RobotMorphology, f64)> = Vec::new();
        for &n in &sweep.pairs {
            cells.push(("n_pairs", n as f64, base.with_pairs(n), self.cfg.gait.spatial_period));
        }
        for &s in &sweep.spatial_periods {
            cells.push(("spatial_period", s, base.clone(), s));
        }
        let mut trials = Table::new(
            "tradeoff_trials",
            &["axis", "value", "terrain", "index", "seed", "t60_cycles", "stride"],
        );
        let mut summary = Table::new(
            "tradeoff",
            &["axis", "value", "terrain", "a_b", "mean_t60", "std_t60", "censored", "mean_stride"],
        );
        let mut plots: Vec<(String, Plot)> = Vec::new();
        for axis in ["n_pairs", "spatial_period"] {
            let mut series = Vec::new();
            for level in [Level::Flat, Level::Low] {
                let mut pts = Vec::new();
                let mut errs = Vec::new();
                for (_, value, morph, s_n) in cells.iter().filter(|c| c.0 == axis) {
                    let gait = self.cfg.gait(morph, 0.0)?.with_spatial_period(*s_n);
                    let a_b = match self.cfg.gait.body_amplitude {
                        Some(a) => a,
                        None => amplitude_choice(morph, &gait)?.a_b,
                    };
                    let gait = gait.with_body_amplitude(a_b);
                    let recs =
                        self.ensemble(morph, &gait, level, sweep.distance_cycles, controller.as_ref(), &seeds)?;
                    let mut times = Vec::new();
                    let mut strides = Vec::new();
                    for (k, (_, rec)) in recs.iter().enumerate() {
                        let t = time_to_distance(&rec.distances(), rec.steps_per_cycle, sweep.distance).cycles();
                        strides.push(rec.mean_stride());
                        times.extend(t);
                        trials.push(vec![
                            axis.into(),
                            (*value).into(),
                            level.label().into(),
                            k.into(),
                            seeds[k].to_string().into(),
                            t.map_or(Cell::Text(String::new()), Cell::Num),
                            rec.mean_stride().into(),
                        ]);
                    }
                    let (mt, st) = mean_std(&times);
                    summary.push(vec![
                        axis.into(),
                        (*value).into(),
                        level.label().into(),
                        a_b.into(),
                        mt.into(),
                        st.into(),
                        (recs.len() - times.len()).into(),
                        mean_std(&strides).0.into(),
                    ]);
                    pts.push((*value, mt));
                    errs.push(st);
                }
                let mut s = Series::line(level.label(), pts);
                s.errors = Some(errs);
                series.push(s);
            }
            plots.push((
                format!("tradeoff_{axis}"),
                Plot::Lines {
                    title: format!("time to travel {} cm", sweep.distance),
                    x_label: axis.into(),
                    y_label: "cycles".into(),
                    series,
                    markers: Vec::new(),
                },
            ));
        }
        Ok(RecipeRun {
            output: Output {
                tables: vec![trials, summary],
                plots,
                files: Vec::new(),
            },
            seeds,
        })
    }

    fn vwave_cdf(&self) -> Result<RecipeRun> {
        let morph = self.cfg.morphology()?;
        let base = self.configured_gait(&morph)?;
        let run = &self.cfg.run;
        let seeds = self.seeds(run.seeds);
        let controller = self.cfg.controller()?;
        let mut trials = Table::new("vwave_trials", &["a_p", "index", "seed", "rugosity", "stride", "duty", "loss"]);
        let mut summary = Table::new(
            "vwave_summary",
            &[
                "a_p",
                "tau",
                "flat_stride",
                "mean",
                "std",
                "cv",
                "cdf_variance",
                "thrust_variance",
                "loss",
            ],
        );
        let mut cdf_table = Table::new("vwave_cdf", &["a_p", "v_norm", "f"]);
        let mut sources = Table::new("vwave_sources", &["a_p", "source", "mean", "std"]);
        let mut series = Vec::new();
        for &a_p in &self.cfg.sweep.vertical_amplitudes {
            let gait = base.with_vertical_amplitude(a_p);
            let flat = flat_record(&morph, &gait, run.cycles, run.steps_per_cycle)?;
            let v_open = flat.mean_stride();
            let tau = mean_std(&flat.duty).0;
            let recs = self.ensemble(&morph, &gait, Level::Low, run.cycles, controller.as_ref(), &seeds)?;
            let strides: Vec<f64> = recs.iter().map(|r| r.1.mean_stride()).collect();
            let losses: Vec<f64> = recs.iter().map(|r| loss_fraction(&r.1)).collect();
            for (k, (rg, rec)) in recs.iter().enumerate() {
                trials.push(vec![
                    a_p.into(),
                    k.into(),
                    seeds[k].to_string().into(),
                    (*rg).into(),
                    strides[k].into(),
                    mean_std(&rec.duty).0.into(),
                    losses[k].into(),
                ]);
            }
            let cdf = velocity_cdf(&strides, v_open)?;
            let (m, s) = mean_std(&strides);
            summary.push(vec![
                a_p.into(),
                tau.into(),
                v_open.into(),
                m.into(),
                s.into(),
                (s / m).into(),
                cdf.variance().into(),
                thrust_variance(&flat.thrust_profile())?.into(),
                mean_std(&losses).0.into(),
            ]);
            for (v, f) in cdf.steps() {
                cdf_table.push(vec![a_p.into(), v.into(), f.into()]);
            }
            let mut line = Series::line(&format!("A_p = {a_p:.3}"), cdf.steps());
            line.step = true;
            series.push(line);
            for (source, m, s) in self.variance_sources(&morph, &gait, controller.as_ref(), &seeds)? {
                sources.push(vec![a_p.into(), source.into(), m.into(), s.into()]);
            }
        }
        let plot = Plot::Lines {
            title: "cycle-average velocity on moderate rugosity".into(),
            x_label: "v / v_open".into(),
            y_label: "CDF".into(),
            series,
            markers: Vec::new(),
        };
        Ok(RecipeRun {
            output: Output {
                tables: vec![trials, summary, cdf_table, sources],
                plots: vec![("vwave_cdf".into(), plot)],
                files: Vec::new(),
            },
            seeds,
        })
    }

    /// Stride spread with only the terrain varying (centred start) and with
    /// only the start varying (first terrain), reported separately.
    fn variance_sources(
        &self,
        morph: &RobotMorphology,
        gait: &GaitProgram,
        controller: &dyn Controller,
        seeds: &[u64],
    ) -> Result<Vec<(&'static str, f64, f64)>> {
        let run = &self.cfg.run;
        let heading = travel_heading(morph, gait, run.steps_per_cycle)?;
        let mode = self.contact_mode(morph, gait)?;
        let first = self.field(Level::Low, seeds[0])?;
        let centred = |f: &Stepfield| StartPose {
            x: 0.5 * morph.body_length() + 0.5 * self.cfg.terrain.start_jitter,
            y: 0.5 * f.y_extent(),
            heading: Some(heading),
        };
        let trial = |field: &Stepfield, start: StartPose, seed: u64| -> Result<f64> {
            let opts = TrialOptions {
                n_cycles: run.cycles,
                steps_per_cycle: run.steps_per_cycle,
                seed,
                start,
                body_limit: None,
            };
            Ok(run_trial(morph, gait, field, &mode, controller, &opts)?.mean_stride())
        };
        let terrain_only: Vec<f64> = seeds
            .par_iter()
            .map(|&s| {
                let f = self.field(Level::Low, s)?;
                trial(&f, centred(&f), s)
            })
            .collect::<Result<_>>()?;
        let start_only: Vec<f64> = seeds
            .par_iter()
            .map(|&s| trial(&first, self.start(morph, &first, s, heading), s))
            .collect::<Result<_>>()?;
        let (mt, st) = mean_std(&terrain_only);
        let (ms, ss) = mean_std(&start_only);
        Ok(vec![("terrain", mt, st), ("start", ms, ss)])
    }

    fn siso(&self) -> Result<RecipeRun> {
        let morph = self.cfg.morphology()?;
        let base = self.configured_gait(&morph)?.with_vertical_amplitude(0.0);
        let run = &self.cfg.run;
        let cycles = run.profile_cycles;
        let seeds = self.seeds(run.seeds);
        let adaptive = self.cfg.siso_controller();
        let arms: [(&str, GaitProgram, &dyn Controller); 3] = [
            ("a_p_0", base.clone(), &OpenLoop),
            ("a_p_2pi_9", base.with_vertical_amplitude(2.0 * PI / 9.0), &OpenLoop),
            ("adaptive", base.clone(), &adaptive),
        ];
        let mut columns = vec!["cycle".to_string()];
        let mut profiles = Vec::new();
        let mut finals = Table::new("siso_final", &["controller", "mean", "std"]);
        let mut out = Output::default();
        let mut series = Vec::new();
        for (name, gait, controller) in &arms {
            let recs = self.ensemble(&morph, gait, Level::High, cycles, *controller, &seeds)?;
            let mut profile = Vec::with_capacity(cycles + 1);
            for c in 0..=cycles {
                let d: Vec<f64> = recs.iter().map(|(_, r)| r.stride[..c].iter().sum()).collect();
                profile.push(mean_std(&d));
            }
            let (m, s) = profile[cycles];
            finals.push(vec![(*name).into(), m.into(), s.into()]);
            columns.push(format!("{name}_mean"));
            columns.push(format!("{name}_std"));
            let mut line = Series::line(name, profile.iter().enumerate().map(|(c, p)| (c as f64, p.0)).collect());
            line.errors = Some(profile.iter().map(|p| p.1).collect());
            series.push(line);
            profiles.push(profile);
            if *name == "adaptive" {
                let mut trace = Table::new("siso_trace", &["terrain", "cycle", "duty", "a_p"]);
                let rough = &recs[0].1;
                let flat = run_trial(
                    &morph,
                    gait,
                    &flat_terrain(),
                    &ContactMode::geometric(&morph),
                    *controller,
                    &TrialOptions {
                        n_cycles: cycles,
                        steps_per_cycle: run.steps_per_cycle,
                        ..TrialOptions::default()
                    },
                )?;
                for (label, rec) in [("high", rough), ("flat", &flat)] {
                    for (c, (d, t)) in rec.duty.iter().zip(&rec.trace).enumerate() {
                        trace.push(vec![label.into(), c.into(), (*d).into(), t.vertical_amplitude.into()]);
                    }
                }
                out.tables.push(trace);
                let (tables, json) = trial_outputs("trial_adaptive", rough)?;
                out.tables.extend(tables);
                out.files.push(json);
            }
        }
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        let mut table = Table::new("siso_profile", &cols);
        for c in 0..=cycles {
            let mut row: Vec<Cell> = vec![c.into()];
            for p in &profiles {
                row.push(p[c].0.into());
                row.push(p[c].1.into());
            }
            table.push(row);
        }
        out.tables.insert(0, table);
        out.tables.insert(1, finals);
        out.plots.push((
            "siso_profile".into(),
            Plot::Lines {
                title: "displacement on high rugosity".into(),
                x_label: "cycle".into(),
                y_label: "displacement (cm)".into(),
                series,
                markers: Vec::new(),
            },
        ));
        Ok(RecipeRun { output: out, seeds })
    }

    fn cleg(&self) -> Result<RecipeRun> {
        let point = self.cfg.morphology()?.with_foot(FootGeometry::Point);
        let arc = point.with_foot(FootGeometry::CArc {
            arc_length: self.cfg.sweep.arc_length,
            width: self.cfg.sweep.arc_width,
        });
        let gait = self.configured_gait(&point)?;
        let run = &self.cfg.run;
        let seeds = self.seeds(run.seeds);
        let controller = self.cfg.controller()?;
        let mut trials = Table::new("cleg_trials", &["foot", "terrain", "index", "seed", "rugosity", "speed", "loss"]);
        let mut summary = Table::new("cleg", &["foot", "terrain", "rugosity", "mean", "std", "rel_flat", "loss"]);
        let mut series = Vec::new();
        for (foot, morph) in [("c_arc", &arc), ("point", &point)] {
            let mut flat_mean = f64::NAN;
            let mut pts = Vec::new();
            let mut errs = Vec::new();
            for level in [Level::Flat, Level::Low, Level::High] {
                let recs = self.ensemble(morph, &gait, level, run.cycles, controller.as_ref(), &seeds)?;
                let speeds: Vec<f64> = recs.iter().map(|r| r.1.mean_stride()).collect();
                let losses: Vec<f64> = recs.iter().map(|r| loss_fraction(&r.1)).collect();
                let rgs: Vec<f64> = recs.iter().map(|r| r.0).collect();
                for (k, (rg, _)) in recs.iter().enumerate() {
                    trials.push(vec![
                        foot.into(),
                        level.label().into(),
                        k.into(),
                        seeds[k].to_string().into(),
                        (*rg).into(),
                        speeds[k].into(),
                        losses[k].into(),
                    ]);
                }
                let (m, s) = mean_std(&speeds);
                if level == Level::Flat {
                    flat_mean = m;
                }
                let rg = mean_std(&rgs).0;
                summary.push(vec![
                    foot.into(),
                    level.label().into(),
                    rg.into(),
                    m.into(),
                    s.into(),
                    (m / flat_mean).into(),
                    mean_std(&losses).0.into(),
                ]);
                pts.push((rg, m));
                errs.push(s);
            }
            let mut line = Series::line(foot, pts);
            line.errors = Some(errs);
            series.push(line);
        }
        let plot = Plot::Lines {
            title: "speed vs rugosity".into(),
            x_label: "rugosity".into(),
            y_label: "speed (cm/cycle)".into(),
            series,
            markers: Vec::new(),
        };
        Ok(RecipeRun {
            output: Output {
                tables: vec![trials, summary],
                plots: vec![("cleg".into(), plot)],
                files: Vec::new(),
            },
            seeds,
        })
    }

    fn bound_check(&self) -> Result<RecipeRun> {
        let base = self.cfg.morphology()?;
        let sweep = &self.cfg.sweep;
        let run = &self.cfg.run;
        let bound = stride_upper_bound(base.leg_length);
        let seeds = self.seeds(sweep.bound_gaits);
        let (s_lo, s_hi) = sweep
            .spatial_periods
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        let a_p_max = sweep.vertical_amplitudes.iter().copied().fold(0.0, f64::max);
        let rows: Vec<(usize, f64, f64, f64, f64)> = seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = rng.random_range(3..=10usize);
                let s_n = s_lo + (s_hi - s_lo) * rng.random::<f64>();
                let a_p = a_p_max * rng.random::<f64>();
                let morph = base.with_pairs(n);
                let gait = self.cfg.gait(&morph, 0.0)?.with_spatial_period(s_n).with_vertical_amplitude(a_p);
                let a_b = compute_a_sc(&morph, &gait) * rng.random::<f64>();
                let stride = flat_stride(&morph, &gait.with_body_amplitude(a_b), run.cycles, run.steps_per_cycle)?;
                Ok((n, s_n, a_p, a_b, stride))
            })
            .collect::<Result<_>>()?;
        let seven = base.with_pairs(7);
        let g7 = self.cfg.gait(&seven, 0.0)?;
        let c7 = amplitude_choice(&seven, &g7)?;
        let g7 = g7.with_body_amplitude(c7.a_b);
        let s7 = flat_stride(&seven, &g7, run.cycles, run.steps_per_cycle)?;

        let mut table = Table::new(
            "bound_check",
            &["gait", "index", "n_pairs", "s_n", "a_p", "a_b", "stride", "bound", "ratio"],
        );
        for (k, &(n, s_n, a_p, a_b, stride)) in rows.iter().enumerate() {
            table.push(vec![
                "random".into(),
                k.into(),
                n.into(),
                s_n.into(),
                a_p.into(),
                a_b.into(),
                stride.into(),
                bound.into(),
                (stride / bound).into(),
            ]);
        }
        table.push(vec![
            "optimized_n7".into(),
            0usize.into(),
            7usize.into(),
            g7.spatial_period.into(),
            g7.vertical_amplitude.into(),
            c7.a_b.into(),
            s7.into(),
            bound.into(),
            (s7 / bound).into(),
        ]);
        let max = rows.iter().map(|r| r.4).fold(f64::NEG_INFINITY, f64::max);
        let over = rows.iter().filter(|r| r.4 > bound).count();
        let mut summary = Table::new("bound_summary", &["max_random_stride", "bound", "gaits_over_bound", "optimized_n7"]);
        summary.push(vec![max.into(), bound.into(), over.into(), s7.into()]);
        Ok(RecipeRun {
            output: Output {
                tables: vec![table, summary],
                plots: Vec::new(),
                files: Vec::new(),
            },
            seeds,
        })
    }
}
