//! Property checks across module boundaries.

use std::f64::consts::FRAC_PI_2;

use mer_core::control::{siso_update, ControllerDecision};
use mer_core::geomech::solve_body_velocity;
use mer_core::morphology::{GaitProgram, RobotMorphology, ShapePoint, MAX_VERTICAL_AMPLITUDE};
use mer_core::terrain::{generate_stepfield, Stepfield};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stepfield_heights_are_bounded_increment_multiples(
        seed in any::<u64>(),
        mean in 0.0f64..=12.0,
        std in 0.0f64..6.0,
        inc in prop::sample::select(vec![0.5, 1.0, 2.5]),
        cols in 2usize..12,
        rows in 1usize..12,
    ) {
        let f = generate_stepfield(seed, mean, std, inc, cols, rows).unwrap();
        prop_assert_eq!(f.heights.len(), cols * rows);
        for &h in &f.heights {
            prop_assert!((0.0..=12.0).contains(&h));
            prop_assert!(((h / inc) - (h / inc).round()).abs() < 1e-9);
        }
        let r = f.rugosity().unwrap();
        prop_assert!(r >= 0.0 && r.is_finite());
        let back = Stepfield::from_text(&f.to_text()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn siso_is_monotone_and_clamped(d in 0.0f64..0.5, a in 0.0f64..1.0, b in 0.0f64..1.0, gain in 0.0f64..20.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // more measured duty never asks for a larger vertical wave
        prop_assert!(siso_update(d, hi, gain) <= siso_update(d, lo, gain));
        let v = siso_update(d, a, gain);
        prop_assert!((0.0..=MAX_VERTICAL_AMPLITUDE).contains(&v));
    }

    #[test]
    fn decisions_clamp_to_safe_gait(
        a_p in prop::num::f64::ANY,
        a_b in prop::num::f64::ANY,
        a_leg in prop::num::f64::ANY,
        limit in 0.0f64..1.6,
    ) {
        let base = GaitProgram::for_morphology(&RobotMorphology::default());
        let g = ControllerDecision { vertical_amplitude: a_p, body_amplitude: a_b, shoulder_amplitude: a_leg }
            .apply(&base, limit);
        prop_assert!((0.0..=MAX_VERTICAL_AMPLITUDE).contains(&g.vertical_amplitude));
        prop_assert!((0.0..=limit).contains(&g.body_amplitude));
        prop_assert!((0.0..=FRAC_PI_2).contains(&g.shoulder_amplitude));
        prop_assert_eq!(g.spatial_period, base.spatial_period);
    }

    #[test]
    fn mirrored_shape_mirrors_body_velocity(
        n in 3usize..=10,
        w1 in -1.5f64..1.5, w2 in -1.5f64..1.5,
        v1 in -1.0f64..1.0, v2 in -1.0f64..1.0,
    ) {
        let m = RobotMorphology::default().with_pairs(n);
        let g = GaitProgram::for_morphology(&m);
        let Ok(xi) = solve_body_velocity(&m, &g, ShapePoint::new(w1, w2), ShapePoint::new(v1, v2)) else {
            return Ok(());
        };
        let mir = solve_body_velocity(&m, &g, ShapePoint::new(-w1, -w2), ShapePoint::new(-v1, -v2)).unwrap();
        let tol = 1e-6 * xi.norm().max(1e-9);
        prop_assert!((mir.xi_x - xi.xi_x).abs() <= tol);
        prop_assert!((mir.xi_y + xi.xi_y).abs() <= tol);
        prop_assert!((mir.xi_theta + xi.xi_theta).abs() <= tol);
    }
}
