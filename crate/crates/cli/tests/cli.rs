use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use spray_cli::commands::{decay_study, kinetic_compare};
use spray_cli::config::{KineticConfig, RunConfig};
use spray_cli::records::read_records;
use spray_core::init::{InitKind, InitSpec, PerField};
use spray_core::integrator::TimeConfig;

fn short(amp: f64) -> RunConfig {
    let mut c = RunConfig::reference();
    c.grid = spray_core::GridSpec::new(1, 16).unwrap();
    c.time = TimeConfig::new(0.2, 0.01);
    c.initial_data = InitSpec::single_mode(amp);
    c
}

fn simulate(args: &[&str], cfg: &str, dir: &Path) -> std::process::Output {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg).unwrap();
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn equilibrium_run_keeps_functionals_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&["run"], &short(0.0).to_json(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let (header, rows) = read_records(&text).unwrap();
    let e = header.iter().position(|h| h == "E").unwrap();
    let l = header.iter().position(|h| h == "L").unwrap();
    assert!(rows.len() > 2);
    for r in &rows {
        assert_eq!(r.values[e], rows[0].values[e]);
        assert_eq!(r.values[l], 0.0);
    }
}

#[test]
fn missing_gamma_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&short(0.05).to_json()).unwrap();
    v["params"].as_object_mut().unwrap().remove("gamma");
    let out = simulate(&["run"], &v.to_string(), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.gamma"));
}

#[test]
fn unstable_time_step_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = short(0.05);
    c.grid = spray_core::GridSpec::new(1, 64).unwrap();
    c.time.dt_max = 1.0;
    c.time.cfl_diffusive = 5.0;
    c.time.t_end = 1.0;
    let out = simulate(&["validate"], &c.to_json(), dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn validate_passes_on_reference_like_run() {
    let dir = tempfile::tempdir().unwrap();
    // the balance tolerance assumes dt = 1e-3
    let mut c = short(0.05);
    c.time.dt_max = 1e-3;
    let out = simulate(&["validate"], &c.to_json(), dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.starts_with("check,value,bound,status"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn repeated_runs_write_identical_csv() {
    let mut c = short(0.05);
    c.initial_data.kind = InitKind::MultiMode;
    c.initial_data.seed = 42;
    let text: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = simulate(&["run", "--emit-plot-data"], &c.to_json(), dir.path());
            assert_eq!(out.status.code(), Some(0));
            assert!(dir.path().join("plot_data.csv").exists());
            std::fs::read_to_string(dir.path().join("records.csv")).unwrap()
        })
        .collect();
    assert_eq!(text[0], text[1]);
}

#[test]
fn duplicate_amplitudes_give_identical_rows() {
    let mut c = short(0.05);
    c.time.t_end = 1.0;
    let rows = decay_study(&c, &[0.02, 0.02, 0.0]);
    assert_eq!(rows[0], rows[1]);
    assert_eq!(rows[2].note, "NonPositiveValues");
}

#[test]
fn uniform_drag_kinetic_matches_hydro() {
    let mut c = short(0.0);
    c.initial_data.kind = InitKind::UniformDrag;
    c.initial_data.amplitudes = PerField { u: 0.5, v: -0.25, ..PerField::default() };
    c.time = TimeConfig::new(1.0, 1e-3);
    c.kinetic = Some(KineticConfig {
        particles: 256,
        sample_times: vec![0.5, 1.0],
        refine: false,
    });
    let cmp = kinetic_compare(&c).unwrap();
    for k in 0..cmp.coarse.times.len() {
        assert!(cmp.coarse.rho_err[k] <= 1e-6, "{:?}", cmp.coarse.rho_err);
        assert!(cmp.coarse.m_err[k] <= 1e-6, "{:?}", cmp.coarse.m_err);
    }
}

#[test]
fn run_resumes_from_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = short(0.05);
    c.outputs.snapshots_path = Some("snaps".into());
    c.outputs.snapshot_every = Some(5);
    let out = simulate(&["run"], &c.to_json(), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let index = dir.path().join("snaps").join("index.json");
    assert!(index.exists());

    let mut r = short(0.05);
    r.initial_data.kind = InitKind::FromSnapshot;
    r.initial_data.snapshot = Some(index.to_string_lossy().into_owned());
    let out = simulate(&["run"], &r.to_json(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bogovskii_command_passes() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = short(0.0);
    c.grid = spray_core::GridSpec::new(2, 16).unwrap();
    let out = simulate(&["bogovskii-test", "--seed", "3"], &c.to_json(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        gamma in 1.01f64..4.0,
        mu in 0.01f64..5.0,
        dt in 1e-4f64..0.1,
        amp in 0.0f64..0.2,
        seed in any::<u64>(),
        sigma in proptest::option::of(0.0f64..0.01),
    ) {
        let mut c = RunConfig::reference();
        c.params.gamma = gamma;
        c.params.mu = mu;
        c.time.dt_max = dt;
        c.initial_data = InitSpec::single_mode(amp);
        c.initial_data.seed = seed;
        c.sigma_override = sigma;
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back, c);
    }
}
