//! End-to-end behaviour of the `mer` binary: exit codes, outputs and replay.

use std::path::Path;
use std::process::{Command, Output};

use mer_harness::RunManifest;

fn mer(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mer"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn mer")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SINGLE_FIELD: &[&str] = &["gen-terrain", "--cols", "6", "--rows", "4", "--out", "field", "--seed", "9"];

#[test]
fn single_field_writes_stepfield_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = mer(SINGLE_FIELD, dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let field = mer_core::terrain::Stepfield::read(&dir.path().join("field/stepfield.txt")).unwrap();
    assert_eq!((field.n_cols, field.n_rows), (6, 4));
    let m = RunManifest::read(&dir.path().join("field/manifest.json")).unwrap();
    assert_eq!(m.master_seed, 9);
    assert!(m.files.iter().any(|f| f.path == "stepfield.txt"));
}

#[test]
fn replay_matches_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mer(SINGLE_FIELD, dir.path())), 0);
    let ok = mer(&["replay", "field/manifest.json"], dir.path());
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("field/replay/stepfield.txt").exists());

    let path = dir.path().join("field/manifest.json");
    let mut m = RunManifest::read(&path).unwrap();
    m.files[0].sha256 = "0".repeat(64);
    m.write(&path).unwrap();
    assert_eq!(code(&mer(&["replay", "field/manifest.json"], dir.path())), 3);

    m.master_seed += 1;
    m.write(&path).unwrap();
    assert_eq!(code(&mer(&["replay", "field/manifest.json"], dir.path())), 2);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[run]\nseeds = 3\nbogus = 1\n").unwrap();
    let out = mer(&["--config", "bad.toml", "bound-check"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "controller = \"table_mimo\"\n").unwrap();
    assert_eq!(code(&mer(&["--config", "c.toml", "siso"], dir.path())), 2);
    assert_eq!(code(&mer(&["gen-terrain", "--std", "-1"], dir.path())), 2);
}

#[test]
fn formats_select_extra_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[sweep]\namplitudes = [0.2, 0.4]\n").unwrap();
    for (format, ext) in [("json", "json"), ("svg", "svg")] {
        let out_dir = format!("amp_{format}");
        let out = mer(
            &["--config", "c.toml", "--format", format, "--out", &out_dir, "sweep-amplitude"],
            dir.path(),
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let names: Vec<String> = std::fs::read_dir(dir.path().join(&out_dir))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert!(names.iter().any(|n| n == "amplitude_sweep.csv"));
        assert!(names.iter().any(|n| n.ends_with(ext) && n != "manifest.json"), "{names:?}");
    }
}
