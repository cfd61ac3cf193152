// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one line per criterion.
//!
//! A criterion whose measured value misses its tolerance prints FAIL. A
//! criterion that cannot be evaluated at all prints ERROR and makes the
//! binary exit non-zero. `NVREG_ACCEPTANCE=1,4` restricts the run.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nvreg::composer::{reference_catalog, with_reference_entries, GateIdentity, Neighbor, Objective};
use nvreg::evolution::oracle::{piecewise_expm, ConstantPiece};
use nvreg::evolution::{analysis, Engine, EvolveOptions, NoiseSpec, Representation};
use nvreg::fidelity::{uhlmann_fidelity, GateReport};
use nvreg::linalg::max_abs;
use nvreg::model::{
    build_static_hamiltonian, crossing_family_field, find_avoided_crossings, CrossingKind, Eigensystem, RegisterModel,
};
use nvreg::pulses::{drive_operator, PulseSchedule, PulseSegment, Tone};
use nvreg::scan::{
    bell_sequence, curve_peaks, fidelity_vs_omega_scan, gate_spec, optimize_pi_pulse, run_sequence, BellRoute,
    GateEvaluator, GateKind, ScanSpec, TargetFrame,
};
use nvreg::selftest::{random_density, random_model, DEFAULT_SEED};
use nvreg::spincore::C64;

type Outcome = Result<(bool, String), String>;

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

fn level_structure() -> Outcome {
    let nn = RegisterModel::nearest_neighbor(0.0);
    let third = RegisterModel::third_neighbor(0.0);
    let ex = find_avoided_crossings(&nn, 95.0, 110.0, 301);
    let bx = crossing_family_field(&ex, CrossingKind::Exchange, |x| x.conserves_nuclear())
        .ok_or("no electron-only exchange crossing found")?;
    let strain = |m: &RegisterModel| {
        let xs = find_avoided_crossings(m, 0.0, 6.0, 1201);
        crossing_family_field(&xs, CrossingKind::Strain, |x| x.conserves_carbon())
    };
    let b_nn = strain(&nn).ok_or("no nn strain crossing found")?;
    let b_3 = strain(&third).ok_or("no third-neighbour strain crossing found")?;
    let (o1, o2, o3) = (within(bx, 103.0, 1.0), within(b_nn, 2.6, 0.2), within(b_3, 0.28, 0.05));
    Ok((
        o1 && o2 && o3,
        format!(
            "exchange {bx:.3} mT (103 ± 1, {}); nn strain {b_nn:.3} mT (2.6 ± 0.2, {}); 3rd strain {b_3:.3} mT (0.28 ± 0.05, {})",
            mark(o1),
            mark(o2),
            mark(o3)
        ),
    ))
}

fn gaussian_dephasing() -> Outcome {
    let t2 = 1.0;
    let noise = NoiseSpec { t2star_v_us: t2, ..NoiseSpec::default() };
    let times: Vec<f64> = (0..=100).map(|k| 25.0 * k as f64).collect();
    let env = analysis::free_induction_decay(&RegisterModel::nearest_neighbor(25.0), &noise, &EvolveOptions::default(), &times)
        .map_err(|e| e.to_string())?;
    let fit = analysis::fit_stretched_exponential(&times, &env, 200.0, 2000.0).ok_or("stretched-exponential fit failed")?;
    let t_e = analysis::one_over_e_time(&times, &env).ok_or("envelope never reaches 1/e")?;
    let t2_ns = 1000.0 * t2;
    let (o1, o2) = (within(fit.p, 2.0, 0.1), within(t_e / t2_ns, 1.0, 0.03));
    Ok((
        o1 && o2,
        format!(
            "p = {:.4} (2 ± 0.1, {}); 1/e at {t_e:.1} ns vs T2* = {t2_ns} ns ({:+.2} %, {})",
            fit.p,
            mark(o1),
            100.0 * (t_e / t2_ns - 1.0),
            mark(o2)
        ),
    ))
}

fn unitary_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 3);
    let (mut worst, mut max_diff) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let model = random_model(&mut rng);
        let nseg = rng.random_range(1..=4);
        let mut segs = Vec::new();
        let mut amps = Vec::new();
        for _ in 0..nseg {
            let a: f64 = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(-40.0..40.0) };
            let d: f64 = rng.random_range(0.5..20.0);
            let phi = if a < 0.0 { std::f64::consts::PI } else { 0.0 };
            segs.push(PulseSegment::new(vec![Tone::new(a.abs(), 0.0, phi)], d).map_err(|e| e.to_string())?);
            amps.push((a, d));
        }
        let sched = PulseSchedule::new(segs).map_err(|e| e.to_string())?;
        let h0 = build_static_hamiltonian(&model).into_matrix();
        let x = drive_operator(&model).into_matrix();
        let pieces: Vec<ConstantPiece> = amps
            .iter()
            .map(|&(a, d)| ConstantPiece { hamiltonian: &h0 + &x * C64::new(a, 0.0), channels: vec![], duration: d })
            .collect();
        let rho0 = random_density(&mut rng, 1);
        let want = piecewise_expm(&rho0, &pieces);
        let engine = Engine::new(&model, &NoiseSpec::off(), &EvolveOptions::default()).map_err(|e| e.to_string())?;
        let mut got = None;
        engine
            .evolve_density(&rho0, &sched, &[sched.total_duration()], Representation::Lab, |_, r| got = Some(r.clone()))
            .map_err(|e| e.to_string())?;
        let got = got.ok_or("no sample")?;
        worst = worst.max(1.0 - uhlmann_fidelity(&got, &want));
        max_diff = max_diff.max(max_abs(&(&got - &want)));
    }
    Ok((worst <= 1e-8, format!("worst 1 − F = {worst:.2e} over 20 schedules (≤ 1e-8); max |Δρ| = {max_diff:.2e}")))
}

struct GateTarget {
    label: &'static str,
    kind: GateKind,
    frame: TargetFrame,
    grid: Vec<f64>,
    fidelity_pct: f64,
    tol_pts: f64,
    time_ns: Option<f64>,
}

fn evaluate_gate(model: &RegisterModel, g: &GateTarget) -> Result<(bool, String), String> {
    let mut spec = gate_spec(model, g.kind);
    spec.target_frame = g.frame;
    let scan = ScanSpec::new(spec, g.grid.clone());
    let r: GateReport = optimize_pi_pulse(model, &scan).map_err(|e| format!("{}: {e}", g.label))?;
    let f_ok = within(100.0 * r.gate_fidelity, g.fidelity_pct, g.tol_pts);
    let t_ok = g.time_ns.is_none_or(|t| within(r.duration / t, 1.0, 0.10));
    let mut s = format!(
        "{} {:.2} % at Ω₀ = {:.1} MHz, T = {:.0} ns (target {} ± {}",
        g.label,
        100.0 * r.gate_fidelity,
        r.omega0,
        r.duration,
        g.fidelity_pct,
        g.tol_pts
    );
    if let Some(t) = g.time_ns {
        s.push_str(&format!(", {t} ns ± 10 %"));
    }
    s.push_str(&format!(", {})", mark(f_ok && t_ok)));
    if g.frame == TargetFrame::DriveShifted {
        let fixed = gate_spec(model, g.kind);
        let ev = GateEvaluator::new(model, &fixed, scan.window, scan.jitter);
        let engine = Engine::new(model, &NoiseSpec::off(), &scan.evolve).map_err(|e| e.to_string())?;
        match ev.evaluate(&engine, r.omega0) {
            Ok((p, _)) => s.push_str(&format!(" [static-frame noise-free {:.2} %]", 100.0 * p.gate_fidelity)),
            Err(e) => s.push_str(&format!(" [static frame: {e}]")),
        }
    }
    Ok((f_ok && t_ok, s))
}

fn run_gates(model: &RegisterModel, targets: &[GateTarget]) -> Outcome {
    let mut all = true;
    let mut parts = Vec::new();
    for g in targets {
        let (ok, s) = evaluate_gate(model, g)?;
        all &= ok;
        parts.push(s);
    }
    Ok((all, parts.join("; ")))
}

fn grid_around(centre: f64, rel: f64, n: usize) -> Vec<f64> {
    let (lo, hi) = (centre * (1.0 - rel), centre * (1.0 + rel));
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

fn nn_table() -> Outcome {
    let m = RegisterModel::nearest_neighbor(25.0);
    run_gates(
        &m,
        &[
            GateTarget {
                label: "X_V",
                kind: GateKind::XV,
                frame: TargetFrame::Static,
                grid: ScanSpec::grid(36.0, 46.0, 1.0),
                fidelity_pct: 96.1,
                tol_pts: 1.5,
                time_ns: Some(16.0),
            },
            GateTarget {
                label: "X_C",
                kind: GateKind::XC,
                frame: TargetFrame::DriveShifted,
                grid: grid_around(52.7, 0.1, 10),
                fidelity_pct: 98.4,
                tol_pts: 1.0,
                time_ns: Some(332.0),
            },
            GateTarget {
                label: "X_N",
                kind: GateKind::XN,
                frame: TargetFrame::DriveShifted,
                grid: grid_around(109.5, 0.1, 10),
                fidelity_pct: 94.1,
                tol_pts: 1.5,
                time_ns: Some(6232.0),
            },
            GateTarget {
                label: "CROT_V,C",
                kind: GateKind::CrotVC,
                frame: TargetFrame::DriveShifted,
                grid: grid_for_time(&m, GateKind::CrotVC, 325.0),
                fidelity_pct: 97.9,
                tol_pts: 1.5,
                time_ns: Some(325.0),
            },
        ],
    )
}

/// Ω₀ grid (±10 %) centred where the two-level π-time equals `t_ns`.
fn grid_for_time(m: &RegisterModel, kind: GateKind, t_ns: f64) -> Vec<f64> {
    let spec = gate_spec(m, kind);
    let es = Eigensystem::of(m);
    let elem = spec.reference_element(m, &es);
    let omega = 1.0 / (2.0 * elem * nvreg::pulses::MHZ_NS * t_ns);
    grid_around(omega, 0.1, 10)
}

fn third_table() -> Outcome {
    let m = RegisterModel::third_neighbor(25.0);
    run_gates(
        &m,
        &[
            GateTarget {
                label: "X_V",
                kind: GateKind::XV,
                frame: TargetFrame::Static,
                grid: ScanSpec::grid(185.0, 195.0, 1.0),
                fidelity_pct: 97.7,
                tol_pts: 1.5,
                time_ns: None,
            },
            GateTarget {
                label: "CROT_V,N",
                kind: GateKind::CrotVN,
                frame: TargetFrame::DriveShifted,
                grid: grid_for_time(&m, GateKind::CrotVN, 6553.0),
                fidelity_pct: 98.0,
                tol_pts: 1.5,
                time_ns: Some(6553.0),
            },
        ],
    )
}

fn bell_sequences() -> Outcome {
    let m = RegisterModel::nearest_neighbor(1.1);
    let es = Eigensystem::of(&m);
    let targets = [(BellRoute::TwoPulseVC, 98.5), (BellRoute::TwoPulseVN, 98.9), (BellRoute::ThreePulseVC, 97.4)];
    let mut all = true;
    let mut parts = Vec::new();
    for (route, target) in targets {
        let mut best: Option<(f64, f64, f64)> = None;
        for mw in [2.0, 10.0, 30.0] {
            for rf in [2.0, 10.0, 40.0, 100.0] {
                let seq = bell_sequence(route, mw, rf);
                let rho0 = es.eigen_density(seq.steps[0].a);
                let r = run_sequence(&m, &seq, &rho0, &NoiseSpec::off(), &EvolveOptions::default())
                    .map_err(|e| format!("{route:?} mw {mw} rf {rf}: {e}"))?;
                if best.is_none_or(|b| r.fidelity > b.0) {
                    best = Some((r.fidelity, mw, rf));
                }
            }
        }
        let (f0, mw, rf) = best.expect("non-empty grid");
        let seq = bell_sequence(route, mw, rf);
        let rho0 = es.eigen_density(seq.steps[0].a);
        let r = run_sequence(&m, &seq, &rho0, &NoiseSpec::default(), &EvolveOptions::default())
            .map_err(|e| format!("{route:?}: {e}"))?;
        let ok = within(100.0 * r.fidelity, target, 1.5);
        all &= ok;
        parts.push(format!(
            "{route:?} {:.2} % (noise-free {:.2} %, mw {mw} rf {rf} MHz, {:.0} ns; target {target} ± 1.5, {})",
            100.0 * r.fidelity,
            100.0 * f0,
            r.t_opt,
            mark(ok)
        ));
    }
    Ok((all, parts.join("; ")))
}

fn omega_scan_shape() -> Outcome {
    let m = RegisterModel::third_neighbor(25.0);
    let mut spec = ScanSpec::new(gate_spec(&m, GateKind::XV), ScanSpec::grid(150.0, 250.0, 1.0));
    spec.refine_factor = 1;
    spec.noise = NoiseSpec::off();
    let points = fidelity_vs_omega_scan(&m, &spec).map_err(|e| e.to_string())?;
    let sharp = curve_peaks(&points, |p| p.jitter_fidelity);
    let best = points
        .iter()
        .max_by(|a, b| a.jitter_fidelity.total_cmp(&b.jitter_fidelity))
        .ok_or("empty scan")?;
    let (o1, o2) = (sharp.len() >= 2, within(best.omega0, 192.0, 5.0));
    let list: Vec<String> = sharp.iter().map(|&i| format!("{:.0}", points[i].omega0)).collect();
    Ok((
        o1 && o2,
        format!(
            "{} jitter-fidelity peaks at [{}] MHz ({}); jitter-preferred Ω₀ = {:.0} MHz, F = {:.2} % (192 ± 5, {})",
            sharp.len(),
            list.join(", "),
            mark(o1),
            best.omega0,
            100.0 * best.jitter_fidelity,
            mark(o2)
        ),
    ))
}

fn composer_arithmetic() -> Outcome {
    let cat = with_reference_entries(reference_catalog(Neighbor::Nearest), &["CNOT_V,C", "CNOT_C,V", "H_V", "H_C"]);
    let a = cat
        .compose(&GateIdentity::new("BELL_VC", &["CNOT_V,C", "H_V", "CNOT_V,C"], ""))
        .map_err(|e| e.to_string())?;
    let b = cat
        .compose(&GateIdentity::new("BELL_VC", &["CROT_C,V", "H_C", "CROT_C,V"], ""))
        .map_err(|e| e.to_string())?;
    // The quoted times carry two significant digits in µs.
    let o_a = a.time_ns == 720.0;
    let o_b = (b.time_ns / 10.0).round() * 10.0 == 860.0;
    let mut ratio_ok = true;
    let mut worst: f64 = 0.0;
    for nb in [Neighbor::Nearest, Neighbor::Third] {
        let c = reference_catalog(nb);
        for q in ["V", "C", "N"] {
            for (g, want_ratio) in [("Z", 2.0), ("H", 2.5)] {
                let name = format!("{g}_{q}");
                let d = c.best_identity(&name, Objective::Fidelity).map_err(|e| e.to_string())?;
                let x = c.entries[&format!("X_{q}")].time_ns;
                let r = &c.reference[&name];
                ratio_ok &= (d.time_ns / x - want_ratio).abs() < 1e-12;
                let dev = (d.time_ns / x) / (r.time_ns / x) - 1.0;
                worst = worst.max(dev.abs());
            }
        }
    }
    let o_r = ratio_ok && worst <= 0.01;
    Ok((
        o_a && o_b && o_r,
        format!(
            "CNOT_V,C·H_V·CNOT_V,C {} ns, F {:.1} % ({}); CROT_C,V·H_C·CROT_C,V {} ns, F {:.1} % ({}); Z/X = 2, H/X = 2.5, worst deviation from tabulated ratios {:.2} % ({})",
            a.time_ns,
            100.0 * a.fidelity,
            mark(o_a),
            b.time_ns,
            100.0 * b.fidelity,
            mark(o_b),
            100.0 * worst,
            mark(o_r)
        ),
    ))
}

fn invariant_suite() -> Outcome {
    let r = nvreg::selftest::run(100, DEFAULT_SEED);
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    let worst: Vec<String> = r.checks.iter().map(|c| format!("{} {:.1e}", c.name, c.worst)).collect();
    Ok((
        r.passed(),
        if failed.is_empty() {
            format!("100 instances, all {} checks pass ({})", r.checks.len(), worst.join(", "))
        } else {
            format!("failing: {}", failed.join(", "))
        },
    ))
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("NVREG_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "level structure", level_structure),
        (2, "gaussian dephasing", gaussian_dephasing),
        (3, "unitary-limit oracle", unitary_oracle),
        (4, "nearest-neighbour gate table", nn_table),
        (5, "third-neighbour spot checks", third_table),
        (6, "low-field Bell sequences", bell_sequences),
        (7, "fidelity versus drive power", omega_scan_shape),
        (8, "composer arithmetic", composer_arithmetic),
        (9, "invariant suite", invariant_suite),
    ];
    let mut errors = 0;
    let mut failures = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let (status, detail) = match f() {
            Ok((true, d)) => ("PASS", d),
            Ok((false, d)) => {
                failures += 1;
                ("FAIL", d)
            }
            Err(e) => {
                errors += 1;
                ("ERROR", e)
            }
        };
        println!("criterion {id} {status} {name} [{:.1} s]: {detail}", t.elapsed().as_secs_f64());
    }
    println!("acceptance: {failures} failing, {errors} erroring");
    if errors > 0 {
        std::process::exit(1);
    }
}
