//! Trial records, tables and seeds through their serialized forms.

use mer_core::control::OpenLoop;
use mer_core::morphology::{GaitProgram, RobotMorphology};
use mer_core::simulator::{run_trial, ContactMode, TrialOptions, TrialRecord};
use mer_core::terrain::flat_terrain;
use mer_harness::output::{trial_outputs, Cell, Table};
use mer_harness::seeds::cell_seed;
use proptest::prelude::*;

fn short_trial() -> TrialRecord {
    let morph = RobotMorphology::default();
    let gait = GaitProgram::for_morphology(&morph);
    let opts = TrialOptions {
        n_cycles: 1,
        steps_per_cycle: 64,
        seed: 3,
        ..TrialOptions::default()
    };
    run_trial(&morph, &gait, &flat_terrain(), &ContactMode::geometric(&morph), &OpenLoop, &opts).unwrap()
}

#[test]
fn trial_json_round_trips_exactly() {
    let rec = short_trial();
    let (tables, (name, json)) = trial_outputs("t", &rec).unwrap();
    assert_eq!(name, "t.json");
    let back: TrialRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rec);
    let poses = &tables[0];
    assert_eq!(poses.rows.len(), rec.poses.len());
    let parsed = Table::from_csv("t_poses", &poses.to_csv().unwrap()).unwrap();
    assert_eq!(parsed.values("x"), poses.values("x"));
    assert_eq!(tables[1].rows.len(), rec.n_cycles);
}

proptest! {
    #[test]
    fn csv_preserves_finite_numbers(xs in prop::collection::vec(-1e12f64..1e12, 1..20)) {
        let mut t = Table::new("p", &["v", "k"]);
        for (k, &x) in xs.iter().enumerate() {
            t.push(vec![Cell::Num(x), k.into()]);
        }
        let back = Table::from_csv("p", &t.to_csv().unwrap()).unwrap();
        prop_assert_eq!(back.values("v"), xs);
    }

    #[test]
    fn cell_seeds_depend_on_master(master in any::<u64>(), cell in 0u64..1000) {
        prop_assert_eq!(cell_seed(master, cell), cell_seed(master, cell));
        prop_assert_ne!(cell_seed(master, cell), cell_seed(master ^ 1, cell));
    }
}
