// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workdir(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nvreg"))
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const LEVELS: &str = "[model]\npreset = \"nearest\"\n\n[levels]\nb_lo_mT = 95.0\nb_hi_mT = 110.0\npoints = 151\n";

const SCAN: &str = r#"
[model]
preset = "nearest"
b_mT = 25.0

[[scan]]
name = "xv"
gate = "x_v"
omega0_grid_MHz = [34.0, 38.0, 42.0]
refine_factor = 2

[[scan]]
name = "curve"
gate = "x_v"
mode = "curve"
omega0_lo_MHz = 30.0
omega0_hi_MHz = 40.0
omega0_step_MHz = 5.0
refine_factor = 1
"#;

#[test]
fn levels_outputs_are_byte_identical_across_runs_and_workers() {
    let d = workdir("levels_det");
    let a = run(&d, LEVELS, &["--out", "a", "--workers", "1", "levels"]);
    let b = run(&d, LEVELS, &["--out", "b", "--workers", "3", "levels"]);
    let c = run(&d, LEVELS, &["--out", "c", "--workers", "3", "levels"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0);
    assert_eq!(code(&c), 0);
    let (fa, fb, fc) = (files(&d.join("a")), files(&d.join("b")), files(&d.join("c")));
    assert_eq!(fa.keys().collect::<Vec<_>>(), ["crossings.csv", "levels.csv", "z_fidelity.csv"]);
    assert_eq!(fa, fb);
    assert_eq!(fb, fc);
    let levels = String::from_utf8(fa["levels.csv"].clone()).unwrap();
    assert!(levels.lines().next().unwrap().starts_with("b_mT,E_"));
    assert!(levels.lines().next().unwrap().ends_with("_MHz"));
    assert_eq!(levels.lines().count(), 152);
    let summary = String::from_utf8_lossy(&a.stdout);
    assert!(summary.contains("electron-only exchange crossings centred at B = 102."), "{summary}");
}

#[test]
fn scan_outputs_are_byte_identical_across_worker_counts() {
    let d = workdir("scan_det");
    let a = run(&d, SCAN, &["--out", "a", "--workers", "1", "scan"]);
    let b = run(&d, SCAN, &["--out", "b", "--workers", "4", "scan"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let (fa, fb) = (files(&d.join("a")), files(&d.join("b")));
    assert_eq!(fa.keys().collect::<Vec<_>>(), ["curve_curve.csv", "gates.csv", "xv.json", "xv_trace.csv"]);
    assert_eq!(fa, fb);
    let gates = String::from_utf8(fa["gates.csv"].clone()).unwrap();
    assert!(gates.starts_with("transition,other,omega0_MHz,fidelity_pct,uncertainty_pct,time_ns\n"));
    let report: serde_json::Value = serde_json::from_slice(&fa["xv.json"]).unwrap();
    assert_eq!(report["per_state"].as_array().unwrap().len(), 25);
}

#[test]
fn noise_free_scan_beats_noisy_scan() {
    let d = workdir("scan_noise");
    let noisy = run(&d, SCAN, &["--out", "noisy", "scan"]);
    let clean_cfg = format!("{SCAN}\n[noise]\nenabled = false\n");
    let clean = run(&d, &clean_cfg, &["--out", "clean", "scan"]);
    assert_eq!(code(&noisy), 0);
    assert_eq!(code(&clean), 0);
    let f = |dir: &str| {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join(dir).join("xv.json")).unwrap()).unwrap();
        v["gate_fidelity"].as_f64().unwrap()
    };
    assert!(f("clean") > f("noisy"), "{} vs {}", f("clean"), f("noisy"));
}

#[test]
fn unknown_key_is_a_config_error_with_line() {
    let d = workdir("unknown_key");
    let o = run(&d, "[model]\npreset = \"nearest\"\n\n[noise]\nt2star_us = 5.0\n", &["levels"]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("run.toml:5:"), "{e}");
    assert!(e.contains("t2star_us"), "{e}");
    assert!(!d.join("out").exists());
}

#[test]
fn invalid_value_points_at_its_line() {
    let d = workdir("bad_value");
    let o = run(&d, "[levels]\nb_lo_mT = 1.0\npoints = 1\n", &["levels"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("run.toml:3:"), "{}", stderr(&o));
    let o = run(&d, "", &["pulse"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn peak_outside_window_is_a_scan_error() {
    let d = workdir("scan_edge");
    let cfg = "[[scan]]\ngate = \"x_v\"\nomega0_grid_MHz = [38.0]\nwindow = { kind = \"absolute\", lo_ns = 2.0, hi_ns = 4.0 }\n";
    let o = run(&d, cfg, &["scan"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn exhausted_step_budget_is_an_integration_fault() {
    let d = workdir("fault");
    let cfg = r#"
[evolve]
max_steps = 5
periodic_shortcut = false

[pulse]
initial = "0,u,u"
samples = 3

[[pulse.segments]]
duration_ns = 50.0
tones = [{ omega0_MHz = 10.0, nu_MHz = 2800.0, phi0_rad = 0.0 }]
"#;
    let o = run(&d, cfg, &["pulse"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn empty_identity_list_gives_primitives_only_table() {
    let d = workdir("compose_empty");
    let o = run(&d, "[compose]\ndefault_identities = false\n", &["compose"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = std::fs::read_to_string(d.join("out/table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "gate,time_ns,fidelity_pct,identity,reference_time_ns,reference_fidelity_pct");
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    for r in rows {
        assert!(r.ends_with(",tabulated,,") || r.ends_with(",assumed,,"), "{r}");
    }
    let alt = std::fs::read_to_string(d.join("out/alternatives.csv")).unwrap();
    assert_eq!(alt.lines().count(), 1);
}

#[test]
fn configured_identities_compose_and_compare() {
    let d = workdir("compose_custom");
    let cfg = r#"
[compose]
default_identities = false

[[compose.identities]]
target = "T"
steps = ["X_V", "X_V"]
note = "double rotation"

[[compose.identities]]
target = "T"
steps = ["X_C"]
note = "slow single"
"#;
    let o = run(&d, cfg, &["compose"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let alt = std::fs::read_to_string(d.join("out/alternatives.csv")).unwrap();
    assert_eq!(alt.lines().count(), 3);
    let dot = std::fs::read_to_string(d.join("out/graph.dot")).unwrap();
    assert!(dot.starts_with("digraph"), "{dot}");
    assert!(dot.contains("\"T\"") && dot.contains("\"X_V\"") && dot.contains("\"X_C\""), "{dot}");
    let bad = run(&d, "[[compose.identities]]\ntarget = \"T\"\nsteps = [\"NOPE\"]\n", &["compose"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn selftest_subcommand_reports_and_passes() {
    let d = workdir("selftest");
    let o = run(&d, "", &["selftest", "--instances", "4", "--seed", "11"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("out/selftest.json")).unwrap()).unwrap();
    assert_eq!(v["instances"], 4);
    assert_eq!(v["seed"], 11);
}

#[test]
fn bare_model_transitions_are_zeeman_lines() {
    let d = workdir("bare");
    let o = run(&d, "[model]\npreset = \"bare\"\nb_mT = 20.0\n\n[transitions]\nallowed_only = true\n", &["transitions"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("out/transitions.csv")).unwrap();
    let m = nvreg::model::RegisterModel::bare(20.0);
    let lines = [m.d - m.gamma_e * 20.0, m.d + m.gamma_e * 20.0, 2.0 * m.gamma_e * 20.0];
    let mut n = 0;
    for row in csv.lines().skip(1) {
        let f: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        if f > 1.0 {
            n += 1;
            assert!(lines.iter().any(|l| (l - f).abs() < 1e-6), "{row}");
        }
    }
    assert!(n >= 8, "{csv}");
}

#[test]
fn sequence_runs_a_bell_preset() {
    let d = workdir("sequence");
    let cfg = "[model]\nb_mT = 1.1\n\n[noise]\nenabled = false\n\n[sequence]\nroute = \"two_pulse_vc\"\nmw_MHz = 10.0\nrf_MHz = 40.0\n";
    let o = run(&d, cfg, &["sequence"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("out/sequence.json")).unwrap()).unwrap();
    let f = v["fidelity"].as_f64().unwrap();
    assert!(f > 0.5 && f <= 1.0);
    let both = run(&d, "[sequence]\nroute = \"two_pulse_vc\"\nmw_MHz = 1.0\nrf_MHz = 1.0\n[[sequence.steps]]\na = \"0,d,d\"\nb = \"-1,d,d\"\nangle_rad = 1.0\nomega0_MHz = 1.0\n", &["sequence"]);
    assert_eq!(code(&both), 2);
}
