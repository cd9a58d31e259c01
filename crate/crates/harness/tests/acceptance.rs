//! Acceptance criteria, one line each, run against the default configuration.
//!
//! Every criterion is evaluated and reported. The test fails only when a
//! criterion outside `EXPECTED_RED` fails, or when one inside it starts
//! passing (so the list cannot go stale silently).

use std::f64::consts::PI;
use std::io::Write;

use mer_core::geomech::{force_balance_residual, solve_body_velocity, BodyVelocity};
use mer_core::morphology::{GaitProgram, RobotMorphology, ShapePoint};
use mer_core::Error as CoreError;
use mer_harness::output::{Format, Table};
use mer_harness::recipes::{saturation_onset, Recipe, Runner};
use mer_harness::{execute, replay, Config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria known to miss their threshold with this model; the analysis
/// for each lives in the project's decision notes.
const EXPECTED_RED: &[u32] = &[1, 2, 3, 5, 7, 9, 10];

/// Four leg lengths.
const STRIDE_BOUND: f64 = 33.6;
const BOUND_SLACK: f64 = 1.01;
const N7_MIN_STRIDE: f64 = 28.0;
const ONSET_TARGET: f64 = 7.0;
const ONSET_SLACK: f64 = 1.0;
const STOKES_TOL: f64 = 0.03;
const GREEN_TOL: f64 = 0.05;
const RESIDUAL_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-6;
const RANDOM_SOLVES: usize = 10_000;
const SYMMETRY_SOLVES: usize = 1_000;
const TERRAIN_SEEDS: usize = 100;
const LOW_RUGOSITY: (f64, f64) = (0.17, 0.05);
const HIGH_RUGOSITY: (f64, f64) = (0.32, 0.06);
const TAU_MID: f64 = 0.4;
const TAU_HIGH: f64 = 0.5;
const TAU_LOW: f64 = 0.3;
const ARC_FLAT_TOL: f64 = 0.15;
const POINT_MIN_LOSS: f64 = 0.25;

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

fn table<'a>(tables: &'a [Table], name: &str) -> &'a Table {
    tables
        .iter()
        .find(|t| t.name == name)
        .unwrap_or_else(|| panic!("missing table {name}"))
}

fn text(t: &Table, row: usize, col: &str) -> String {
    let k = t.column(col).unwrap_or_else(|| panic!("{}: no column {col}", t.name));
    match &t.rows[row][k] {
        mer_harness::output::Cell::Text(s) => s.clone(),
        mer_harness::output::Cell::Num(v) => v.to_string(),
    }
}

fn run(cfg: &Config, recipe: Recipe) -> Vec<Table> {
    Runner::new(cfg, cfg.run.seed, 0)
        .and_then(|r| r.run(recipe))
        .unwrap_or_else(|e| panic!("{}: {e}", recipe.name()))
        .output
        .tables
}

fn bound_check(cfg: &Config) -> Verdict {
    let tables = run(cfg, Recipe::BoundCheck);
    let s = table(&tables, "bound_summary");
    let max_random = s.values("max_random_stride")[0];
    let n7 = s.values("optimized_n7")[0];
    let pass = max_random <= STRIDE_BOUND * BOUND_SLACK && n7 >= N7_MIN_STRIDE;
    Verdict {
        id: 1,
        pass,
        detail: format!(
            "max random stride {max_random:.2} (limit {:.2}), optimized N=7 stride {n7:.2} (min {N7_MIN_STRIDE})",
            STRIDE_BOUND * BOUND_SLACK
        ),
    }
}

fn leg_sweep(cfg: &Config) -> (Verdict, Verdict) {
    let tables = run(cfg, Recipe::SweepLegs);
    let t = table(&tables, "leg_saturation");
    let ns = t.values("n_pairs");
    let sims = t.values("sim_stride");
    let onset = saturation_onset(&sims);
    let onset_n = onset.map(|i| ns[i]);
    let rising = onset.is_some_and(|i| sims[..=i].windows(2).all(|w| w[1] >= w[0]));
    let near = onset_n.is_some_and(|n| (n - ONSET_TARGET).abs() <= ONSET_SLACK);
    let saturation = Verdict {
        id: 2,
        pass: near && rising,
        detail: format!(
            "onset N = {}, non-decreasing before onset: {rising}, strides {:?}",
            onset_n.map_or("none".into(), |n| format!("{n}")),
            sims.iter().map(|s| (s * 10.0).round() / 10.0).collect::<Vec<_>>()
        ),
    };

    let a_sc = t.values("a_sc");
    let a_star = t.values("a_b_star");
    let sc_up = a_sc.windows(2).all(|w| w[1] >= w[0]);
    let star_down = a_star.windows(2).all(|w| w[1] <= w[0]);
    // First N where the self-collision limit reaches the optimum; the
    // crossover lies between it and its predecessor.
    let cross = (0..ns.len()).find(|&i| a_sc[i] >= a_star[i]);
    let bracket = cross.filter(|&i| i > 0).map(|i| (ns[i - 1], ns[i]));
    let contains = bracket.is_some_and(|(lo, hi)| lo <= ONSET_TARGET && ONSET_TARGET <= hi);
    let crossover = Verdict {
        id: 3,
        pass: sc_up && star_down && contains,
        detail: format!(
            "A_SC non-decreasing: {sc_up}, A_b* non-increasing: {star_down}, crossover bracket {}",
            bracket.map_or("none".into(), |(a, b)| format!("[{a}, {b}]"))
        ),
    };
    (saturation, crossover)
}

fn stokes(cfg: &Config) -> Verdict {
    let tables = run(cfg, Recipe::Heightfield { component: mer_core::geomech::Component::X });
    let worst = table(&tables, "stokes")
        .values("rel_error")
        .into_iter()
        .fold(0.0f64, f64::max);
    let g = table(&tables, "green_summary");
    let pooled = g.values("pooled_rel_error")[0];
    let nodes = g.values("nodes")[0];
    Verdict {
        id: 4,
        pass: worst < STOKES_TOL && pooled < GREEN_TOL,
        detail: format!(
            "worst Stokes error {:.2}% (< {}%), small-loop pooled error {:.2}% over {nodes} nodes (< {}%)",
            100.0 * worst,
            100.0 * STOKES_TOL,
            100.0 * pooled,
            100.0 * GREEN_TOL
        ),
    }
}

fn random_case(rng: &mut ChaCha8Rng) -> (RobotMorphology, GaitProgram, ShapePoint, ShapePoint) {
    let morph = RobotMorphology::default().with_pairs(rng.random_range(3..=10));
    let gait = GaitProgram::for_morphology(&morph).with_vertical_amplitude(rng.random_range(0.0..=2.0 * PI / 9.0));
    let w = ShapePoint::new(rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5));
    let wdot = ShapePoint::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
    (morph, gait, w, wdot)
}

fn close(a: BodyVelocity, b: BodyVelocity) -> bool {
    let d = BodyVelocity::from_array([a.xi_x - b.xi_x, a.xi_y - b.xi_y, a.xi_theta - b.xi_theta]);
    d.norm() <= SYMMETRY_TOL * b.norm().max(1e-9)
}

fn solver() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut solved, mut over, mut failed, mut worst) = (0usize, 0usize, 0usize, 0.0f64);
    while solved + failed < RANDOM_SOLVES {
        let (m, g, w, wdot) = random_case(&mut rng);
        match solve_body_velocity(&m, &g, w, wdot) {
            Ok(xi) => {
                let r = force_balance_residual(&m, &g, w, wdot, xi).expect("stance set is non-empty");
                let r = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                worst = worst.max(r);
                over += usize::from(r >= RESIDUAL_TOL);
                solved += 1;
            }
            Err(CoreError::AllFeetAirborne) => {}
            Err(_) => failed += 1,
        }
    }
    let (mut homog_bad, mut mirror_bad, mut checked) = (0usize, 0usize, 0usize);
    while checked < SYMMETRY_SOLVES {
        let (m, g, w, wdot) = random_case(&mut rng);
        let Ok(xi) = solve_body_velocity(&m, &g, w, wdot) else { continue };
        let c = rng.random_range(0.1..=10.0);
        let scaled = solve_body_velocity(&m, &g, w, ShapePoint::new(c * wdot.w1, c * wdot.w2)).expect("same stance set");
        homog_bad += usize::from(!close(scaled, xi.scaled(c)));
        let mirrored = solve_body_velocity(&m, &g, ShapePoint::new(-w.w1, -w.w2), ShapePoint::new(-wdot.w1, -wdot.w2))
            .expect("mirrored stance set");
        let expect = BodyVelocity::from_array([xi.xi_x, -xi.xi_y, -xi.xi_theta]);
        mirror_bad += usize::from(!close(mirrored, expect));
        checked += 1;
    }
    Verdict {
        id: 5,
        pass: over == 0 && failed == 0 && homog_bad == 0 && mirror_bad == 0,
        detail: format!(
            "{over}/{solved} residuals >= {RESIDUAL_TOL:e} (worst {worst:.1e}), {failed} non-converged, \
             homogeneity misses {homog_bad}/{checked}, reflection misses {mirror_bad}/{checked}"
        ),
    }
}

fn terrain(cfg: &Config) -> Verdict {
    let mut cfg = cfg.clone();
    cfg.run.seeds = TERRAIN_SEEDS;
    let tables = run(&cfg, Recipe::GenTerrain { field: None });
    let s = table(&tables, "terrain_summary");
    let mut low = f64::NAN;
    let mut high = f64::NAN;
    for r in 0..s.rows.len() {
        let v = s.values("mean_rugosity")[r];
        match text(s, r, "level").as_str() {
            "low" => low = v,
            "high" => high = v,
            _ => {}
        }
    }
    let pass = (low - LOW_RUGOSITY.0).abs() <= LOW_RUGOSITY.1 && (high - HIGH_RUGOSITY.0).abs() <= HIGH_RUGOSITY.1;
    Verdict {
        id: 6,
        pass,
        detail: format!(
            "mean rugosity over {TERRAIN_SEEDS} fields: low {low:.3} ({}±{}), high {high:.3} ({}±{})",
            LOW_RUGOSITY.0, LOW_RUGOSITY.1, HIGH_RUGOSITY.0, HIGH_RUGOSITY.1
        ),
    }
}

/// Index of the row whose `tau` is nearest `target`; ties go to the
/// smaller vertical amplitude.
fn nearest_tau(a_p: &[f64], tau: &[f64], target: f64) -> usize {
    let mut order: Vec<usize> = (0..a_p.len()).collect();
    order.sort_by(|&i, &j| {
        let (di, dj) = ((tau[i] - target).abs(), (tau[j] - target).abs());
        di.partial_cmp(&dj).expect("finite tau").then(a_p[i].total_cmp(&a_p[j]))
    });
    order[0]
}

fn vertical_wave(cfg: &Config) -> (Verdict, Verdict) {
    let tables = run(cfg, Recipe::VwaveCdf);
    let s = table(&tables, "vwave_summary");
    let a_p = s.values("a_p");
    let cv = s.values("cv");
    let tau = s.values("tau");
    let var = s.values("cdf_variance");
    let best = (0..cv.len()).min_by(|&i, &j| cv[i].total_cmp(&cv[j])).expect("rows");
    let near_ninth = (a_p[best] - PI / 9.0).abs() <= PI / 18.0 + 1e-12;
    let (mid, hi, lo) = (
        nearest_tau(&a_p, &tau, TAU_MID),
        nearest_tau(&a_p, &tau, TAU_HIGH),
        nearest_tau(&a_p, &tau, TAU_LOW),
    );
    let dip = var[mid] < var[hi] && var[mid] < var[lo];
    let spread = Verdict {
        id: 7,
        pass: near_ninth && dip,
        detail: format!(
            "argmin CV at A_p {:.3} (target π/9 ± π/18), CDF variance {:.2e} at tau {:.2} vs {:.2e} at tau {:.2} and {:.2e} at tau {:.2}",
            a_p[best], var[mid], tau[mid], var[hi], tau[hi], var[lo], tau[lo]
        ),
    };

    let thrust = s.values("thrust_variance");
    let pick = |target: f64| {
        a_p.iter()
            .position(|&a| (a - target).abs() < 1e-9)
            .map(|i| thrust[i])
            .expect("vertical amplitude in sweep")
    };
    let seq = [pick(0.0), pick(PI / 18.0), pick(PI / 9.0)];
    let thrust = Verdict {
        id: 10,
        pass: seq[0] > seq[1] && seq[1] > seq[2],
        detail: format!(
            "thrust variance at A_p 0, π/18, π/9: {:.6}, {:.6}, {:.6} (strictly decreasing)",
            seq[0], seq[1], seq[2]
        ),
    };
    (spread, thrust)
}

fn siso(cfg: &Config) -> Verdict {
    let tables = run(cfg, Recipe::Siso);
    let f = table(&tables, "siso_final");
    let row = |name: &str| {
        let r = (0..f.rows.len()).find(|&r| text(f, r, "controller") == name).expect("controller row");
        (f.values("mean")[r], f.values("std")[r])
    };
    let (m0, _) = row("a_p_0");
    let (_, s29) = row("a_p_2pi_9");
    let (ma, sa) = row("adaptive");
    Verdict {
        id: 8,
        pass: ma >= m0 && sa <= s29,
        detail: format!(
            "adaptive mean {ma:.1} vs A_p=0 mean {m0:.1}; adaptive std {sa:.1} vs A_p=2π/9 std {s29:.1}"
        ),
    }
}

fn c_leg(cfg: &Config) -> Verdict {
    let tables = run(cfg, Recipe::Cleg);
    let t = table(&tables, "cleg");
    let rel = |foot: &str, terrain: &str| {
        let r = (0..t.rows.len())
            .find(|&r| text(t, r, "foot") == foot && text(t, r, "terrain") == terrain)
            .expect("cleg row");
        t.values("rel_flat")[r]
    };
    let arc = rel("c_arc", "high");
    let point = rel("point", "high");
    Verdict {
        id: 9,
        pass: (1.0 - arc).abs() <= ARC_FLAT_TOL && 1.0 - point > POINT_MIN_LOSS,
        detail: format!(
            "high rugosity speed relative to flat: C-arc {arc:.3} (within {ARC_FLAT_TOL}), point {point:.3} (loss > {POINT_MIN_LOSS})"
        ),
    }
}

fn determinism(cfg: &Config) -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut small = cfg.clone();
    small.run.seeds = 4;
    let first = dir.path().join("run");
    let outcome = execute(Recipe::Cleg, &small, 11, 0, Format::Json, &first)
        .and_then(|_| replay(&first.join("manifest.json"), Some(&dir.path().join("again")), 1));
    Verdict {
        id: 11,
        pass: outcome.is_ok(),
        detail: match outcome {
            Ok(r) => format!("replay reproduced {} files byte for byte with a different thread count", r.files),
            Err(e) => format!("replay failed: {e}"),
        },
    }
}

#[test]
fn acceptance() {
    let cfg = Config::default();
    let mut verdicts = vec![bound_check(&cfg)];
    let (c2, c3) = leg_sweep(&cfg);
    verdicts.extend([c2, c3, stokes(&cfg), solver(), terrain(&cfg)]);
    let (c7, c10) = vertical_wave(&cfg);
    verdicts.extend([c7, siso(&cfg), c_leg(&cfg), c10, determinism(&cfg)]);
    verdicts.sort_by_key(|v| v.id);

    // Written straight to stdout so the lines survive test output capture.
    let mut out = std::io::stdout().lock();
    for v in &verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {:>2}: {tag}  {}", v.id, v.detail).expect("stdout");
    }
    drop(out);

    let unexpected: Vec<u32> = verdicts
        .iter()
        .filter(|v| v.pass == EXPECTED_RED.contains(&v.id))
        .map(|v| v.id)
        .collect();
    assert!(
        unexpected.is_empty(),
        "criteria {unexpected:?} disagree with the expected outcome list {EXPECTED_RED:?}"
    );
}
