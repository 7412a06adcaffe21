use std::path::Path;
use std::process::{Command, Output};

use sarnsaf::harness::{Experiment, ExperimentConfig, LearningCurve, SystemSource};
use sarnsaf::scenario::{read_system, SystemKind};

fn sarnsaf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sarnsaf")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(
        &path,
        "# short run\ntaps = 64\ntotal_samples = 4000\nswitch_at = 2000\nruns = 3\nactive_taps = 8\n\
         system_chi = 0.85\nswitch_chi = 0.4\n",
    )
    .unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_a_readable_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("curve.csv");
    let o = sarnsaf(&["run", "--config", &cfg, "--algo", "aop-sa-rnsaf", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let curve = LearningCurve::read_csv(&out).unwrap();
    assert_eq!(curve.len(), 1000);
    assert_eq!(curve.samples[1], 4);
    assert!(curve.nmsd_db.iter().all(|v| v.is_finite()));
}

#[test]
fn run_to_stdout_is_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = sarnsaf(&["run", "--config", &cfg, "--seed", "5"]);
    let b = sarnsaf(&["run", "--config", &cfg, "--seed", "5"]);
    let c = sarnsaf(&["run", "--config", &cfg, "--seed", "6", "--alpha", "1.2", "--gamma", "0.05"]);
    assert!(a.status.success() && c.status.success());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn design_bank_writes_a_prototype() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("proto.txt");
    let o = sarnsaf(&["design-bank", "--bands", "4", "--length", "33", "--atten", "60", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("stopband attenuation"));
    let (proto, bands) = sarnsaf::filterbank::read_prototype(&out).unwrap();
    assert_eq!(bands, 4);
    assert_eq!(proto.len(), 33);
}

#[test]
fn synth_system_matches_the_harness_and_chi_reads_it_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.txt");
    let o = sarnsaf(&[
        "synth-system", "--taps", "64", "--kind", "sparse", "--chi", "0.85", "--active-taps", "8", "--seed", "2022",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let written = read_system(&out).unwrap();

    let exp = Experiment::new(ExperimentConfig {
        taps: 64,
        active_taps: 8,
        system_seed: 2022,
        system: SystemSource::Synthetic { kind: SystemKind::Sparse, chi: 0.85 },
        ..ExperimentConfig::default()
    })
    .unwrap();
    for (a, b) in written.taps().iter().zip(exp.system().taps()) {
        assert!((a - b).abs() < 1e-12);
    }

    let chi = sarnsaf(&["chi", "--in", out.to_str().unwrap()]);
    assert!(chi.status.success());
    let value: f64 = text(&chi.stdout).trim().parse().unwrap();
    assert!((value - 0.85).abs() < 1e-3, "{value}");
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for args in [
        vec!["run", "--config", cfg.as_str(), "--algo", "lms"],
        vec!["run", "--config", cfg.as_str(), "--alpha", "2.5"],
        vec!["run", "--config", "/nonexistent/config"],
        vec!["chi", "--in", "/nonexistent/system"],
        vec!["design-bank", "--bands", "4", "--length", "9", "--out", "/tmp/never"],
    ] {
        let o = sarnsaf(&args);
        assert!(!o.status.success(), "{args:?}");
        assert!(text(&o.stderr).starts_with("error:"), "{args:?}: {}", text(&o.stderr));
    }
    assert!(!sarnsaf(&["synth-system", "--kind", "wiggly", "--chi", "0.5", "--out", "/tmp/x"]).status.success());
}
