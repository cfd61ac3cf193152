// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Subcommands. Each one computes its artifacts in memory; the caller writes
//! them.

use std::fmt::Write as _;

use serde_json::Value;

use nvreg::composer::{reference_catalog, Catalog};
use nvreg::evolution::{Engine, Representation};
use nvreg::{csv_field, fmt_sig};
use nvreg::model::{crossing_family_field, find_avoided_crossings, scan_levels, transition_table, CrossingKind, Eigensystem, RegisterModel};
use nvreg::pulses::PulseSchedule;
use nvreg::scan::{
    bell_sequence, curve_peaks, fidelity_vs_omega_scan, gate_spec, optimize_pi_pulse, run_sequence, scan_csv,
    GateEvaluator, GateKind, ScanSpec, SequenceSpec,
};
use nvreg::spincore::{BasisLabel, Half, Ms};

use crate::config::{Loaded, ScanMode};
use crate::error::CliError;

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

impl Artifact {
    fn new(name: impl Into<String>, body: String) -> Self {
        Self { name: name.into(), body }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    /// Reported after the artifacts are written.
    pub failure: Option<CliError>,
}

/// Compact level tag for CSV columns: `0uu`, `+1ud`, `-1dd`.
pub fn tag(l: BasisLabel) -> String {
    let v = match l.ms {
        Ms::Plus => "+1",
        Ms::Zero => "0",
        Ms::Minus => "-1",
    };
    let h = |x: Half| if x == Half::Up { 'u' } else { 'd' };
    format!("{v}{}{}", h(l.c), h(l.n))
}

fn kind_name(k: CrossingKind) -> &'static str {
    match k {
        CrossingKind::Strain => "strain",
        CrossingKind::Exchange => "exchange",
        CrossingKind::Nuclear => "nuclear",
    }
}

/// Rounds every JSON number to 9 significant digits.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| n.is_f64()) {
                if let Some(r) = fmt_sig(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn json<T: serde::Serialize>(x: &T) -> String {
    let mut v = serde_json::to_value(x).expect("serialisable output");
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("serialisable output");
    s.push('\n');
    s
}

fn model(cfg: &Loaded) -> Result<RegisterModel, CliError> {
    cfg.config.model.build().map_err(|m| cfg.error_at("model", "preset", m))
}

pub fn levels(cfg: &Loaded) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let lv = &cfg.config.levels;
    if lv.points < 2 {
        return Err(cfg.error_at("levels", "points", "need at least 2 grid points"));
    }
    if !(lv.b_lo >= 0.0 && lv.b_hi > lv.b_lo) {
        return Err(cfg.error_at("levels", "b_hi_mT", format!("need 0 ≤ b_lo_mT < b_hi_mT, got {}..{}", lv.b_lo, lv.b_hi)));
    }
    let n = lv.points - 1;
    let grid: Vec<f64> = (0..=n).map(|k| lv.b_lo + (lv.b_hi - lv.b_lo) * k as f64 / n as f64).collect();
    let scan = scan_levels(&m, &grid)?;
    let tags: Vec<String> = scan.labels.iter().map(|&l| tag(l)).collect();

    let table = |prefix: &str, suffix: &str, rows: &[Vec<f64>]| {
        let mut s = String::from("b_mT");
        for t in &tags {
            let _ = write!(s, ",{prefix}{t}{suffix}");
        }
        s.push('\n');
        for (b, row) in grid.iter().zip(rows) {
            s.push_str(&fmt_sig(*b));
            for x in row {
                s.push(',');
                s.push_str(&fmt_sig(*x));
            }
            s.push('\n');
        }
        s
    };
    let energies = table("E_", "_MHz", &scan.energies);
    let zfid = table("zfid_", "", &scan.z_fidelity);

    let xs = find_avoided_crossings(&m, lv.b_lo, lv.b_hi, lv.points);
    let mut cs = String::from("b_mT,gap_MHz,lower_level,kind,state_a,state_b\n");
    for x in &xs {
        let _ = writeln!(
            cs,
            "{},{},{},{},{},{}",
            fmt_sig(x.b),
            fmt_sig(x.gap),
            x.lower,
            kind_name(x.kind),
            tag(x.states.0),
            tag(x.states.1)
        );
    }

    let mut summary = String::new();
    if let Some((b, gap, i, j)) = scan.minimum_gap() {
        let _ = writeln!(summary, "minimum gap {} MHz at B = {} mT between {} and {}", fmt_sig(gap), fmt_sig(b), tags[i], tags[j]);
    }
    for kind in [CrossingKind::Strain, CrossingKind::Exchange, CrossingKind::Nuclear] {
        let sel: Vec<_> = xs.iter().filter(|x| x.kind == kind).collect();
        if let Some(widest) = sel.iter().max_by(|a, b| a.gap.total_cmp(&b.gap)) {
            let _ = writeln!(
                summary,
                "{} {} crossing(s); widest {} MHz at B = {} mT",
                sel.len(),
                kind_name(kind),
                fmt_sig(widest.gap),
                fmt_sig(widest.b)
            );
        }
    }
    if let Some(b) = crossing_family_field(&xs, CrossingKind::Exchange, |x| x.conserves_nuclear()) {
        let _ = writeln!(summary, "electron-only exchange crossings centred at B = {} mT", fmt_sig(b));
    }
    if let Some(b) = crossing_family_field(&xs, CrossingKind::Strain, |x| x.conserves_carbon()) {
        let _ = writeln!(summary, "carbon-conserving strain crossings centred at B = {} mT", fmt_sig(b));
    }
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("levels.csv", energies),
            Artifact::new("z_fidelity.csv", zfid),
            Artifact::new("crossings.csv", cs),
        ],
        summary,
        failure: None,
    })
}

pub fn transitions(cfg: &Loaded) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let mut s = String::from("lower,upper,frequency_MHz,matrix_element,allowed\n");
    let mut count = 0;
    for t in transition_table(&m) {
        if cfg.config.transitions.allowed_only && !t.allowed {
            continue;
        }
        count += 1;
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            tag(t.lower),
            tag(t.upper),
            fmt_sig(t.frequency),
            fmt_sig(t.matrix_element),
            t.allowed
        );
    }
    Ok(Outcome {
        artifacts: vec![Artifact::new("transitions.csv", s)],
        summary: format!("{count} transitions at B = {} mT\n", fmt_sig(m.b)),
        failure: None,
    })
}

pub fn pulse(cfg: &Loaded) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let p = cfg.config.pulse.as_ref().ok_or_else(|| CliError::Config("the pulse command needs a [pulse] section".into()))?;
    if p.samples < 2 {
        return Err(cfg.error_at("pulse", "samples", "need at least 2 samples"));
    }
    let schedule = PulseSchedule::new(p.segments.clone()).map_err(|e| cfg.error_at("pulse", "segments", e))?;
    let engine = Engine::new(&m, &cfg.config.noise, &cfg.config.evolve)?;
    let rho0 = engine.eigen.eigen_density(p.initial);
    let total = schedule.total_duration();
    let n = p.samples - 1;
    let times: Vec<f64> = (0..=n).map(|k| total * k as f64 / n as f64).collect();
    let repr = if p.rotating { Representation::Rotating } else { Representation::Lab };
    let res = engine.evolve(&rho0, &schedule, &times, repr)?;
    let mut artifacts = vec![Artifact::new("populations.csv", res.populations_csv())];
    if p.trajectory {
        artifacts.push(Artifact::new("trajectory.csv", res.trajectory_csv()));
    }
    let fin = res.rho_final.matrix();
    let (k, pk) = (0..fin.nrows()).map(|k| (k, fin[(k, k)].re)).fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let summary = format!(
        "{} ns from {}; largest final population {} in basis state {}\n",
        fmt_sig(total),
        tag(p.initial),
        fmt_sig(pk),
        k
    );
    Ok(Outcome { artifacts, summary, failure: None })
}

fn gate_stem(kind: GateKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_else(|| format!("{kind:?}"))
}

pub fn scan(cfg: &Loaded) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    if cfg.config.scan.is_empty() {
        return Err(CliError::Config("the scan command needs at least one [[scan]] entry".into()));
    }
    let mut out = Outcome::default();
    let mut table = String::from(nvreg::fidelity::GateReport::CSV_HEADER);
    table.push('\n');
    let mut seen = std::collections::BTreeSet::new();
    for (i, entry) in cfg.config.scan.iter().enumerate() {
        let stem = entry.name.clone().unwrap_or_else(|| format!("{}_{i}", gate_stem(entry.gate)));
        if !seen.insert(stem.clone()) {
            return Err(cfg.error_at("scan", "name", format!("duplicate output name {stem}")));
        }
        let grid = entry.grid().map_err(|e| cfg.error_at("scan", "gate", format!("entry {i}: {e}")))?;
        let mut gate = gate_spec(&m, entry.gate);
        if let Some(f) = entry.target_frame {
            gate.target_frame = f;
        }
        let mut spec = ScanSpec::new(gate, grid);
        spec.noise = cfg.config.noise.clone();
        spec.evolve = cfg.config.evolve.clone();
        if let Some(r) = entry.refine_factor {
            spec.refine_factor = r;
        }
        if let Some(w) = entry.window {
            spec.window = w;
        }
        if let Some(j) = entry.jitter {
            spec.jitter = j;
        }
        if let Some(s) = entry.screen_noise_free {
            spec.screen_noise_free = s;
        }
        spec.validate().map_err(|e| match e {
            nvreg::scan::ScanError::Invalid(msg) => cfg.error_at("scan", "gate", format!("entry {i}: {msg}")),
            other => other.into(),
        })?;
        match entry.mode {
            ScanMode::Optimize => {
                let report = optimize_pi_pulse(&m, &spec)?;
                let ev = GateEvaluator::new(&m, &spec.gate, spec.window, spec.jitter);
                let engine = Engine::new(&m, &spec.noise, &spec.evolve)?;
                let (tr, _, _) = ev.trace(&engine, report.omega0)?;
                let mut s = String::from("t_ns");
                for l in &tr.labels {
                    s.push(',');
                    s.push_str(&csv_field(&format!("F_{l}")));
                }
                s.push_str(",F_min,F_avg\n");
                let (mn, avg) = (tr.min_trace(), tr.avg_trace());
                for (k, t) in tr.times.iter().enumerate() {
                    s.push_str(&fmt_sig(*t));
                    for v in &tr.values {
                        s.push(',');
                        s.push_str(&fmt_sig(v[k]));
                    }
                    let _ = writeln!(s, ",{},{}", fmt_sig(mn[k]), fmt_sig(avg[k]));
                }
                let _ = writeln!(
                    out.summary,
                    "{stem}: {} at Ω₀ = {} MHz, t = {} ns, F = {} %",
                    report.name,
                    fmt_sig(report.omega0),
                    fmt_sig(report.duration),
                    fmt_sig(100.0 * report.gate_fidelity)
                );
                table.push_str(&report.csv_row());
                table.push('\n');
                out.artifacts.push(Artifact::new(format!("{stem}.json"), json(&report)));
                out.artifacts.push(Artifact::new(format!("{stem}_trace.csv"), s));
            }
            ScanMode::Curve => {
                let points = fidelity_vs_omega_scan(&m, &spec)?;
                let peaks = curve_peaks(&points, |p| p.jitter_fidelity);
                let list: Vec<String> = peaks.iter().map(|&k| fmt_sig(points[k].omega0)).collect();
                let _ = writeln!(out.summary, "{stem}: {} points, jitter-fidelity peaks at Ω₀ = [{}] MHz", points.len(), list.join(", "));
                out.artifacts.push(Artifact::new(format!("{stem}_curve.csv"), scan_csv(&points)));
            }
        }
    }
    if out.artifacts.iter().any(|a| a.name.ends_with(".json")) {
        out.artifacts.push(Artifact::new("gates.csv", table));
    }
    Ok(out)
}

#[derive(serde::Serialize)]
struct SequenceOutput<'a> {
    name: &'a str,
    initial: BasisLabel,
    fidelity: f64,
    #[serde(rename = "t_opt_ns")]
    t_opt: f64,
    #[serde(rename = "nominal_end_ns")]
    nominal_end: f64,
    noise: bool,
    steps: &'a [nvreg::scan::SequenceStep],
}

pub fn sequence(cfg: &Loaded) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let sc = cfg
        .config
        .sequence
        .as_ref()
        .ok_or_else(|| CliError::Config("the sequence command needs a [sequence] section".into()))?;
    let mut seq = match (sc.route, sc.steps.is_empty()) {
        (Some(route), true) => {
            let (Some(mw), Some(rf)) = (sc.mw, sc.rf) else {
                return Err(cfg.error_at("sequence", "route", "a preset route needs mw_MHz and rf_MHz"));
            };
            bell_sequence(route, mw, rf)
        }
        (None, false) => SequenceSpec { name: "custom".into(), steps: sc.steps.clone(), final_window: [0.7, 1.3] },
        _ => return Err(cfg.error_at("sequence", "route", "give either route or steps, not both")),
    };
    if let Some(w) = sc.final_window {
        seq.final_window = w;
    }
    let initial = sc.initial.unwrap_or(seq.steps[0].a);
    let es = Eigensystem::of(&m);
    let rho0 = es.eigen_density(initial);
    let res = run_sequence(&m, &seq, &rho0, &cfg.config.noise, &cfg.config.evolve)?;
    let out = SequenceOutput {
        name: &seq.name,
        initial,
        fidelity: res.fidelity,
        t_opt: res.t_opt,
        nominal_end: res.nominal_end,
        noise: cfg.config.noise.enabled,
        steps: &seq.steps,
    };
    Ok(Outcome {
        summary: format!("{}: F = {} % at t = {} ns\n", seq.name, fmt_sig(100.0 * res.fidelity), fmt_sig(res.t_opt)),
        artifacts: vec![Artifact::new("sequence.json", json(&out))],
        failure: None,
    })
}

pub fn compose(cfg: &Loaded) -> Result<Outcome, CliError> {
    let cc = &cfg.config.compose;
    let mut catalog = match &cc.catalog {
        Some(p) => {
            let path = cfg.relative(p);
            let src = std::fs::read_to_string(&path)
                .map_err(|e| cfg.error_at("compose", "catalog", format!("{}: {e}", path.display())))?;
            Catalog::from_json(&src).map_err(|e| cfg.error_at("compose", "catalog", format!("{}: {e}", path.display())))?
        }
        None => reference_catalog(cc.neighbor.into()),
    };
    if !cc.default_identities {
        catalog.identities.clear();
    }
    for id in &cc.identities {
        catalog.add_identity(id.clone()).map_err(|e| cfg.error_at("compose", "target", e))?;
    }
    catalog.validate()?;
    let rows = catalog.derived_table(cc.objective)?;
    let graph = catalog.dependency_graph()?;

    let mut alt = String::from("target,identity,time_ns,fidelity_pct\n");
    let mut ids: Vec<_> = catalog.identities.iter().collect();
    ids.sort_by(|a, b| (&a.target, &a.steps).cmp(&(&b.target, &b.steps)));
    for id in ids {
        let d = catalog.compose(id)?;
        let _ = writeln!(alt, "{},{},{},{}", csv_field(&id.target), csv_field(&id.steps.join(" ")), fmt_sig(d.time_ns), fmt_sig(100.0 * d.fidelity));
    }
    let summary = format!("{} primitives, {} derived gates\n", catalog.entries.len(), rows.len());
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("table.csv", nvreg::composer::table_csv(&catalog, &rows)),
            Artifact::new("alternatives.csv", alt),
            Artifact::new("graph.dot", graph.to_dot()),
            Artifact::new("catalog.json", json(&catalog)),
        ],
        summary,
        failure: None,
    })
}

pub fn selftest(cfg: &Loaded) -> Result<Outcome, CliError> {
    let st = &cfg.config.selftest;
    if st.instances == 0 {
        return Err(cfg.error_at("selftest", "instances", "need at least one instance"));
    }
    let report = nvreg::selftest::run(st.instances, st.seed);
    let failure = (!report.passed()).then(|| CliError::Integration("invariant suite failed".into()));
    Ok(Outcome {
        artifacts: vec![Artifact::new("selftest.json", json(&report))],
        summary: report.summary(),
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_are_compact_and_comma_free() {
        assert_eq!(tag(BasisLabel::new(Ms::Minus, Half::Up, Half::Down)), "-1ud");
        assert_eq!(tag(BasisLabel::new(Ms::Plus, Half::Down, Half::Down)), "+1dd");
        assert_eq!(csv_field("F_|0,u,u>"), "\"F_|0,u,u>\"");
    }

    #[test]
    fn json_numbers_are_rounded() {
        let s = json(&serde_json::json!({"x": 0.1234567891234, "n": 3, "v": [1.0 / 3.0]}));
        assert!(s.contains("0.123456789"), "{s}");
        assert!(s.contains("0.333333333"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
    }
}
