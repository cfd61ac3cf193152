// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Drive-power optimisation of π-pulses, Ω₀ scans and multi-pulse sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolution::{Engine, EvolutionError, EvolveOptions, NoiseSpec, Representation};
use crate::fidelity::{
    drive_shifts, fidelity_traces_shifted, ideal_rotation, uhlmann_fidelity, FidelityError, FidelityTrace, GateReport, IdealDrive,
    StateFidelity, StateSet, TIMING_JITTER_NS,
};
use crate::model::{transition_between, CarbonSite, Eigensystem, RegisterModel};
use crate::pulses::{rotation_time, PulseError, PulseSchedule, PulseSegment, Tone, MHZ_NS};
use crate::spincore::{BasisLabel, CMat, Half, Ms, NuclearKet, Slot, VacancyKet};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Samples per Rabi estimate and hard cap (ns) on the trace resolution.
const SAMPLES_PER_PI: f64 = 200.0;
const MAX_DT_NS: f64 = 1.0;
const PEAK_SUBGRID: usize = 64;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("fidelity maximum at the window edge (Ω₀ = {omega0} MHz, t = {t} ns); widen the time window")]
    WidenWindow { omega0: f64, t: f64 },
    #[error("invalid scan: {0}")]
    Invalid(String),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

/// Preset gate families at intermediate field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "x_v")]
    XV,
    #[serde(rename = "x_c")]
    XC,
    #[serde(rename = "x_n")]
    XN,
    #[serde(rename = "crot_c_v")]
    CrotCV,
    #[serde(rename = "crot_v_c")]
    CrotVC,
    #[serde(rename = "crot_v_n")]
    CrotVN,
    #[serde(rename = "crot_cn_v")]
    CrotCNV,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SetSpec {
    Vacancy25,
    Carbon16,
    Nitrogen8,
    Controlled {
        involved: Vec<Slot>,
        spectator_v: VacancyKet,
        spectator_nuclear: NuclearKet,
    },
}

impl SetSpec {
    pub fn build(&self) -> StateSet {
        match self {
            SetSpec::Vacancy25 => StateSet::vacancy25(),
            SetSpec::Carbon16 => StateSet::carbon16(),
            SetSpec::Nitrogen8 => StateSet::nitrogen8(),
            SetSpec::Controlled { involved, spectator_v, spectator_nuclear } => {
                StateSet::controlled(involved, *spectator_v, *spectator_nuclear)
            }
        }
    }
}

/// A driven pair of the ideal gate and the carrier that addresses it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivenPair {
    pub a: BasisLabel,
    pub b: BasisLabel,
    pub tone: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub name: String,
    pub transition: String,
    pub other: String,
    #[serde(rename = "carriers_MHz")]
    pub carriers: Vec<f64>,
    #[serde(rename = "phases_rad")]
    pub phases: Vec<f64>,
    pub drives: Vec<DrivenPair>,
    #[serde(rename = "angle_rad")]
    pub angle: f64,
    pub set: SetSpec,
    #[serde(default)]
    pub target_frame: TargetFrame,
}

/// Level frequencies the target co-rotates with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetFrame {
    /// Static eigenenergies.
    #[default]
    Static,
    /// Static eigenenergies plus the drive-induced second-order shifts.
    DriveShifted,
}

fn lab(ms: Ms, c: Half, n: Half) -> BasisLabel {
    BasisLabel::new(ms, c, n)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Builds one preset from the model's spectrum. Vacancy gates use the 0 ↔ −1
/// transition: two tones at the nitrogen-averaged carbon branches for the
/// nearest-neighbour site, one tone at the four-line average otherwise.
pub fn gate_spec(model: &RegisterModel, kind: GateKind) -> GateSpec {
    use Half::{Down, Up};
    let es = Eigensystem::of(model);
    let f = |a: BasisLabel, b: BasisLabel| transition_between(&es, model, a, b).frequency;
    let pi = std::f64::consts::PI;
    let mut drives = Vec::new();
    let (carriers, transition, other, set) = match kind {
        GateKind::XV => {
            let branch = |c: Half| mean(&[Up, Down].map(|n| f(lab(Ms::Zero, c, n), lab(Ms::Minus, c, n))));
            let dual = model.site != CarbonSite::ThirdNeighbor;
            for (ci, c) in [Up, Down].into_iter().enumerate() {
                for n in [Up, Down] {
                    drives.push(DrivenPair { a: lab(Ms::Zero, c, n), b: lab(Ms::Minus, c, n), tone: if dual { ci } else { 0 } });
                }
            }
            let carriers = if dual {
                vec![branch(Up), branch(Down)]
            } else {
                vec![mean(&[branch(Up), branch(Down)])]
            };
            (carriers, "|0>->|-1>", "gate (vacancy25)", SetSpec::Vacancy25)
        }
        GateKind::XC => {
            for n in [Up, Down] {
                drives.push(DrivenPair { a: lab(Ms::Minus, Down, n), b: lab(Ms::Minus, Up, n), tone: 0 });
            }
            let nu = mean(&[Up, Down].map(|n| f(lab(Ms::Minus, Down, n), lab(Ms::Minus, Up, n))));
            (vec![nu], "|d>->|u> (C)", "gate (carbon16)", SetSpec::Carbon16)
        }
        GateKind::XN => {
            for c in [Up, Down] {
                drives.push(DrivenPair { a: lab(Ms::Minus, c, Down), b: lab(Ms::Minus, c, Up), tone: 0 });
            }
            let nu = mean(&[Up, Down].map(|c| f(lab(Ms::Minus, c, Down), lab(Ms::Minus, c, Up))));
            (vec![nu], "|d>->|u> (N)", "gate (nitrogen8)", SetSpec::Nitrogen8)
        }
        GateKind::CrotCV => {
            let (a, b) = (lab(Ms::Zero, Up, Up), lab(Ms::Minus, Up, Up));
            drives.push(DrivenPair { a, b, tone: 0 });
            let set = SetSpec::Controlled {
                involved: vec![Slot::C, Slot::V],
                spectator_v: VacancyKet::Zero,
                spectator_nuclear: NuclearKet::Up,
            };
            (vec![f(a, b)], "CROT_C,V", "N = u", set)
        }
        GateKind::CrotVC => {
            let (a, b) = (lab(Ms::Minus, Down, Up), lab(Ms::Minus, Up, Up));
            drives.push(DrivenPair { a, b, tone: 0 });
            let set = SetSpec::Controlled {
                involved: vec![Slot::V, Slot::C],
                spectator_v: VacancyKet::Zero,
                spectator_nuclear: NuclearKet::Up,
            };
            (vec![f(a, b)], "CROT_V,C", "N = u", set)
        }
        GateKind::CrotVN => {
            let (a, b) = (lab(Ms::Minus, Up, Down), lab(Ms::Minus, Up, Up));
            drives.push(DrivenPair { a, b, tone: 0 });
            let set = SetSpec::Controlled {
                involved: vec![Slot::V, Slot::N],
                spectator_v: VacancyKet::Zero,
                spectator_nuclear: NuclearKet::Up,
            };
            (vec![f(a, b)], "CROT_V,N", "C = u", set)
        }
        GateKind::CrotCNV => {
            let (a, b) = (lab(Ms::Zero, Up, Up), lab(Ms::Minus, Up, Up));
            drives.push(DrivenPair { a, b, tone: 0 });
            let set = SetSpec::Controlled {
                involved: vec![Slot::V, Slot::C, Slot::N],
                spectator_v: VacancyKet::Zero,
                spectator_nuclear: NuclearKet::Up,
            };
            (vec![f(a, b)], "CROT_CN,V", "-", set)
        }
    };
    GateSpec {
        name: format!("{kind:?}"),
        transition: transition.into(),
        other: other.into(),
        phases: vec![0.0; carriers.len()],
        carriers,
        drives,
        angle: pi,
        set,
        target_frame: TargetFrame::Static,
    }
}

impl GateSpec {
    pub fn validate(&self) -> Result<(), ScanError> {
        if self.carriers.is_empty() || self.carriers.len() != self.phases.len() {
            return Err(ScanError::Invalid("carriers and phases must be non-empty and of equal length".into()));
        }
        if self.drives.iter().any(|d| d.tone >= self.carriers.len()) {
            return Err(ScanError::Invalid("drive refers to a missing tone".into()));
        }
        if self.drives.is_empty() {
            return Err(ScanError::Invalid("gate drives no transition".into()));
        }
        Ok(())
    }

    /// Mean |⟨b|X|a⟩| over the driven pairs.
    pub fn reference_element(&self, model: &RegisterModel, es: &Eigensystem) -> f64 {
        let m: Vec<f64> = self
            .drives
            .iter()
            .map(|d| transition_between(es, model, d.a, d.b).matrix_element)
            .collect();
        mean(&m)
    }

    pub fn ideal(&self, model: &RegisterModel, es: &Eigensystem) -> CMat {
        let drives: Vec<IdealDrive> = self
            .drives
            .iter()
            .map(|d| IdealDrive { a: d.a, b: d.b, phase: self.phases[d.tone] })
            .collect();
        ideal_rotation(model, es, &drives, self.angle)
    }

    pub fn tones(&self, omega0: f64) -> Vec<Tone> {
        self.carriers.iter().zip(&self.phases).map(|(&nu, &phi)| Tone::new(omega0, nu, phi)).collect()
    }

    /// Per-level target-frame shifts at this drive power, or None for the
    /// static frame.
    pub fn frame_shifts(&self, model: &RegisterModel, es: &Eigensystem, omega0: f64) -> Option<Vec<f64>> {
        match self.target_frame {
            TargetFrame::Static => None,
            TargetFrame::DriveShifted => {
                let pairs: Vec<_> = self.drives.iter().map(|d| (d.a, d.b)).collect();
                Some(drive_shifts(model, es, &self.tones(omega0), &pairs))
            }
        }
    }

    pub fn segment(&self, omega0: f64, duration: f64) -> Result<PulseSegment, PulseError> {
        PulseSegment::new(self.tones(omega0), duration)
    }
}

/// Two tones of equal amplitude, each resonant with one carbon branch.
pub fn dual_frequency_pulse(
    model: &RegisterModel,
    es: &Eigensystem,
    first: (BasisLabel, BasisLabel),
    second: (BasisLabel, BasisLabel),
    omega0: f64,
) -> Result<PulseSegment, PulseError> {
    let t1 = transition_between(es, model, first.0, first.1);
    let t2 = transition_between(es, model, second.0, second.1);
    for t in [&t1, &t2] {
        if !t.allowed {
            return Err(PulseError::Forbidden { lower: t.lower, upper: t.upper, element: t.matrix_element });
        }
    }
    let m = 0.5 * (t1.matrix_element + t2.matrix_element);
    let duration = rotation_time(omega0, m, std::f64::consts::PI);
    PulseSegment::new(vec![Tone::new(omega0, t1.frequency, 0.0), Tone::new(omega0, t2.frequency, 0.0)], duration)
}

/// Search window for the fidelity maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Window {
    /// Multiples of the two-level π-time estimate.
    Relative { lo: f64, hi: f64 },
    Absolute {
        #[serde(rename = "lo_ns")]
        lo: f64,
        #[serde(rename = "hi_ns")]
        hi: f64,
    },
}

impl Default for Window {
    fn default() -> Self {
        Window::Relative { lo: 0.5, hi: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub gate: GateSpec,
    #[serde(rename = "omega0_grid_MHz")]
    pub omega0_grid: Vec<f64>,
    #[serde(default = "default_refine")]
    pub refine_factor: usize,
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Locate the optimum without noise and re-evaluate it with noise.
    #[serde(default = "default_true")]
    pub screen_noise_free: bool,
    #[serde(default = "default_jitter", rename = "jitter_ns")]
    pub jitter: f64,
    #[serde(default)]
    pub evolve: EvolveOptions,
}

fn default_refine() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_jitter() -> f64 {
    TIMING_JITTER_NS
}

impl ScanSpec {
    pub fn new(gate: GateSpec, omega0_grid: Vec<f64>) -> Self {
        Self {
            gate,
            omega0_grid,
            refine_factor: 10,
            window: Window::default(),
            noise: NoiseSpec::default(),
            screen_noise_free: true,
            jitter: TIMING_JITTER_NS,
            evolve: EvolveOptions::default(),
        }
    }

    /// Uniform grid lo, lo + step, …, hi.
    pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| lo + step * k as f64).collect()
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        self.gate.validate()?;
        if self.omega0_grid.is_empty() {
            return Err(ScanError::Invalid("empty Ω₀ grid".into()));
        }
        if self.omega0_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScanError::Invalid("Ω₀ grid must be increasing".into()));
        }
        if self.omega0_grid.iter().any(|&o| !(o > 0.0 && o.is_finite())) {
            return Err(ScanError::Invalid("Ω₀ values must be positive".into()));
        }
        match self.window {
            Window::Relative { lo, hi } | Window::Absolute { lo, hi } if !(lo >= 0.0 && hi > lo) => {
                return Err(ScanError::Invalid(format!("bad time window [{lo}, {hi}]")));
            }
            _ => {}
        }
        if !(self.jitter >= 0.0) || self.refine_factor == 0 {
            return Err(ScanError::Invalid("jitter must be ≥ 0 and refine_factor ≥ 1".into()));
        }
        Ok(())
    }
}

/// Outcome at one drive power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    #[serde(rename = "omega0_MHz")]
    pub omega0: f64,
    #[serde(rename = "t_ns")]
    pub t_opt: f64,
    pub gate_fidelity: f64,
    pub avg_fidelity: f64,
    /// Worst gate fidelity inside the timing-jitter window.
    pub jitter_fidelity: f64,
    pub uncertainty: f64,
    pub per_state: Vec<f64>,
}

/// Model-bound evaluator shared by all scan points.
pub struct GateEvaluator<'a> {
    pub model: &'a RegisterModel,
    pub es: Eigensystem,
    pub gate: &'a GateSpec,
    pub set: StateSet,
    pub ideal: CMat,
    pub element: f64,
    pub window: Window,
    pub jitter: f64,
}

impl<'a> GateEvaluator<'a> {
    pub fn new(model: &'a RegisterModel, gate: &'a GateSpec, window: Window, jitter: f64) -> Self {
        let es = Eigensystem::of(model);
        let ideal = gate.ideal(model, &es);
        let element = gate.reference_element(model, &es);
        Self { model, set: gate.set.build(), es, gate, ideal, element, window, jitter }
    }

    /// Search window [lo, hi] in ns for a drive power.
    pub fn window_ns(&self, omega0: f64) -> (f64, f64) {
        match self.window {
            Window::Absolute { lo, hi } => (lo, hi),
            Window::Relative { lo, hi } => {
                let t = rotation_time(omega0, self.element, self.gate.angle);
                (lo * t, hi * t)
            }
        }
    }

    pub fn trace(&self, engine: &Engine, omega0: f64) -> Result<(FidelityTrace, f64, f64), ScanError> {
        let (lo, hi) = self.window_ns(omega0);
        if !(hi.is_finite() && hi > lo) {
            return Err(ScanError::Invalid(format!("degenerate window for Ω₀ = {omega0}")));
        }
        let t_est = rotation_time(omega0, self.element, self.gate.angle);
        let dt = MAX_DT_NS.min(t_est / SAMPLES_PER_PI).min((hi - lo) / 8.0);
        let pad = self.jitter + 3.0 * dt;
        let start = (lo - pad).max(0.0);
        let end = hi + pad;
        let n = ((end - start) / dt).ceil() as usize;
        let h = (end - start) / n as f64;
        let times: Vec<f64> = (0..=n).map(|k| start + h * k as f64).collect();
        let segment = self.gate.segment(omega0, end)?;
        let schedule = PulseSchedule::single(segment);
        let shifts = self.gate.frame_shifts(self.model, &self.es, omega0);
        let tr = fidelity_traces_shifted(engine, &self.set, &self.ideal, &schedule, &times, shifts.as_deref())?;
        Ok((tr, lo, hi))
    }

    pub fn evaluate(&self, engine: &Engine, omega0: f64) -> Result<(ScanPoint, FidelityTrace), ScanError> {
        let (tr, lo, hi) = self.trace(engine, omega0)?;
        let point = locate_peak(&tr, omega0, lo, hi, self.jitter)?;
        Ok((point, tr))
    }
}

/// Maximum over t of min over states, with the earliest sample winning ties.
pub fn locate_peak(tr: &FidelityTrace, omega0: f64, lo: f64, hi: f64, jitter: f64) -> Result<ScanPoint, ScanError> {
    let gate = tr.min_trace();
    let idx: Vec<usize> = (0..tr.times.len()).filter(|&k| tr.times[k] >= lo - 1e-12 && tr.times[k] <= hi + 1e-12).collect();
    if idx.len() < 3 {
        return Err(ScanError::Invalid("time window holds fewer than 3 samples".into()));
    }
    let mut best = idx[0];
    for &k in &idx {
        if gate[k] > gate[best] {
            best = k;
        }
    }
    if best == idx[0] || best == *idx.last().expect("non-empty") {
        return Err(ScanError::WidenWindow { omega0, t: tr.times[best] });
    }
    let (a, b) = (tr.times[best - 1], tr.times[best + 1]);
    let mut t_opt = tr.times[best];
    let mut f_opt = tr.gate_at(t_opt);
    for k in 0..=PEAK_SUBGRID {
        let t = a + (b - a) * k as f64 / PEAK_SUBGRID as f64;
        let f = tr.gate_at(t);
        if f > f_opt {
            f_opt = f;
            t_opt = t;
        }
    }
    let per_state = tr.at(t_opt);
    let gate_fidelity = per_state.iter().copied().fold(f64::INFINITY, f64::min);
    let avg_fidelity = per_state.iter().sum::<f64>() / per_state.len() as f64;
    let (mn, mx) = if jitter > 0.0 { tr.gate_window(t_opt, jitter)? } else { (gate_fidelity, gate_fidelity) };
    Ok(ScanPoint {
        omega0,
        t_opt,
        gate_fidelity,
        avg_fidelity: avg_fidelity.max(gate_fidelity),
        jitter_fidelity: mn.min(gate_fidelity),
        uncertainty: 0.5 * (mx.max(gate_fidelity) - mn.min(gate_fidelity)),
        per_state,
    })
}

fn screening_engine(model: &RegisterModel, spec: &ScanSpec) -> Result<Engine, ScanError> {
    let noise = if spec.screen_noise_free { NoiseSpec::off() } else { spec.noise };
    Ok(Engine::new(model, &noise, &spec.evolve)?)
}

fn evaluate_grid(ev: &GateEvaluator<'_>, engine: &Engine, grid: &[f64]) -> Vec<Result<ScanPoint, ScanError>> {
    grid.par_iter().map(|&o| ev.evaluate(engine, o).map(|(p, _)| p)).collect()
}

/// Index of the best successful point; earliest on ties.
fn best_of(points: &[Result<ScanPoint, ScanError>], key: impl Fn(&ScanPoint) -> f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if let Ok(p) = p {
            match best {
                Some(b) if key(p) <= key(points[b].as_ref().expect("ok")) => {}
                _ => best = Some(i),
            }
        }
    }
    best
}

fn first_error(points: Vec<Result<ScanPoint, ScanError>>) -> ScanError {
    points
        .into_iter()
        .find_map(|p| p.err())
        .unwrap_or_else(|| ScanError::Invalid("no scan points".into()))
}

fn refined_grid(grid: &[f64], i: usize, factor: usize) -> Vec<f64> {
    let step = if grid.len() < 2 {
        return vec![grid[i]];
    } else if i + 1 < grid.len() {
        grid[i + 1] - grid[i]
    } else {
        grid[i] - grid[i - 1]
    };
    let lo = if i > 0 { grid[i - 1] } else { grid[i] };
    let hi = if i + 1 < grid.len() { grid[i + 1] } else { grid[i] };
    let fine = step / factor as f64;
    let n = ((hi - lo) / fine).round() as usize;
    (0..=n).map(|k| lo + fine * k as f64).filter(|&o| o > 0.0).collect()
}

/// Coarse Ω₀ search, local refinement around the winner, and a final
/// evaluation with the requested noise.
pub fn optimize_pi_pulse(model: &RegisterModel, spec: &ScanSpec) -> Result<GateReport, ScanError> {
    spec.validate()?;
    let ev = GateEvaluator::new(model, &spec.gate, spec.window, spec.jitter);
    let screen = screening_engine(model, spec)?;
    let coarse = evaluate_grid(&ev, &screen, &spec.omega0_grid);
    let Some(ib) = best_of(&coarse, |p| p.gate_fidelity) else {
        return Err(first_error(coarse));
    };
    let mut best = coarse[ib].clone().expect("ok");
    if spec.refine_factor > 1 {
        let fine = refined_grid(&spec.omega0_grid, ib, spec.refine_factor);
        let refined = evaluate_grid(&ev, &screen, &fine);
        if let Some(j) = best_of(&refined, |p| p.gate_fidelity) {
            let r = refined[j].clone().expect("ok");
            if r.gate_fidelity > best.gate_fidelity {
                best = r;
            }
        }
    }
    let (point, labels) = if spec.noise.enabled && spec.screen_noise_free {
        let noisy = Engine::new(model, &spec.noise, &spec.evolve)?;
        let (p, tr) = ev.evaluate(&noisy, best.omega0)?;
        (p, tr.labels)
    } else {
        let (p, tr) = ev.evaluate(&screen, best.omega0)?;
        (p, tr.labels)
    };
    Ok(report(&spec.gate, &point, labels, spec.noise.enabled))
}

pub fn report(gate: &GateSpec, p: &ScanPoint, labels: Vec<String>, noise: bool) -> GateReport {
    GateReport {
        name: gate.name.clone(),
        transition: gate.transition.clone(),
        other: gate.other.clone(),
        omega0: p.omega0,
        duration: p.t_opt,
        gate_fidelity: p.gate_fidelity,
        avg_fidelity: p.avg_fidelity,
        per_state: labels
            .into_iter()
            .zip(&p.per_state)
            .map(|(label, &fidelity)| StateFidelity { label, fidelity })
            .collect(),
        uncertainty: p.uncertainty,
        nu: gate.carriers.clone(),
        noise,
    }
}

/// Best fidelity per Ω₀ on the coarse grid, refined around every local
/// maximum of the coarse curve. Points whose maximum sits on the window edge
/// are left out. Sorted by Ω₀.
pub fn fidelity_vs_omega_scan(model: &RegisterModel, spec: &ScanSpec) -> Result<Vec<ScanPoint>, ScanError> {
    spec.validate()?;
    let ev = GateEvaluator::new(model, &spec.gate, spec.window, spec.jitter);
    let engine = Engine::new(model, &spec.noise, &spec.evolve)?;
    let grid = &spec.omega0_grid;
    let coarse = evaluate_grid(&ev, &engine, grid);
    let value = |r: &Result<ScanPoint, ScanError>| r.as_ref().map(|p| p.gate_fidelity).unwrap_or(f64::NEG_INFINITY);
    let mut extra: Vec<f64> = Vec::new();
    if spec.refine_factor > 1 && grid.len() > 1 {
        for i in 0..grid.len() {
            let v = value(&coarse[i]);
            let left = if i > 0 { value(&coarse[i - 1]) } else { f64::NEG_INFINITY };
            let right = if i + 1 < grid.len() { value(&coarse[i + 1]) } else { f64::NEG_INFINITY };
            if v.is_finite() && v >= left && v >= right {
                extra.extend(refined_grid(grid, i, spec.refine_factor));
            }
        }
    }
    let tol = 1e-9 * grid.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    extra.sort_by(f64::total_cmp);
    extra.dedup_by(|a, b| (*a - *b).abs() < tol);
    extra.retain(|o| !grid.iter().any(|g| (g - o).abs() < tol));
    let refined = evaluate_grid(&ev, &engine, &extra);
    let mut points: Vec<ScanPoint> = coarse.into_iter().chain(refined).filter_map(Result::ok).collect();
    if points.is_empty() {
        return Err(ScanError::WidenWindow { omega0: grid[0], t: f64::NAN });
    }
    points.sort_by(|a, b| a.omega0.total_cmp(&b.omega0));
    Ok(points)
}

/// Local maxima of a curve (strictly above both neighbours, plateaus count once).
pub fn curve_peaks(points: &[ScanPoint], key: impl Fn(&ScanPoint) -> f64) -> Vec<usize> {
    let n = points.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && key(&points[j + 1]) == key(&points[i]) {
            j += 1;
        }
        let v = key(&points[i]);
        let left = if i > 0 { key(&points[i - 1]) } else { f64::NEG_INFINITY };
        let right = if j + 1 < n { key(&points[j + 1]) } else { f64::NEG_INFINITY };
        if v > left && v > right && i > 0 && j + 1 < n {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

pub const SCAN_CSV_HEADER: &str = "omega0_MHz,t_ns,min_fidelity,avg_fidelity,jitter_fidelity,uncertainty";

pub fn scan_csv(points: &[ScanPoint]) -> String {
    use crate::fmt_sig;
    let mut s = String::from(SCAN_CSV_HEADER);
    s.push('\n');
    for p in points {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_sig(p.omega0),
            fmt_sig(p.t_opt),
            fmt_sig(p.gate_fidelity),
            fmt_sig(p.avg_fidelity),
            fmt_sig(p.jitter_fidelity),
            fmt_sig(p.uncertainty)
        ));
    }
    s
}

/// One resonant rotation of a sequence. Forbidden pairs are driven directly
/// when their matrix element exceeds the allowed threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceStep {
    pub a: BasisLabel,
    pub b: BasisLabel,
    #[serde(rename = "angle_rad")]
    pub angle: f64,
    #[serde(default, rename = "phase_rad")]
    pub phase: f64,
    #[serde(rename = "omega0_MHz")]
    pub omega0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub name: String,
    pub steps: Vec<SequenceStep>,
    /// Search window for the last step, as multiples of its nominal length.
    #[serde(default = "default_final_window")]
    pub final_window: [f64; 2],
}

fn default_final_window() -> [f64; 2] {
    [0.7, 1.3]
}

/// Compiled schedule plus the ideal rotating-frame unitary of each step.
#[derive(Debug, Clone)]
pub struct CompiledSequence {
    pub schedule: PulseSchedule,
    pub ideal_steps: Vec<CMat>,
    pub ideal: CMat,
    pub nominal_end: f64,
    pub last_start: f64,
}

impl SequenceSpec {
    pub fn compile(&self, model: &RegisterModel, es: &Eigensystem) -> Result<CompiledSequence, ScanError> {
        let mut segments = Vec::new();
        let mut ideal_steps = Vec::new();
        let mut ideal = CMat::identity(crate::spincore::DIM, crate::spincore::DIM);
        let mut t = 0.0;
        let mut last_start = 0.0;
        for s in &self.steps {
            if !(s.omega0 > 0.0) || !(s.angle > 0.0) {
                return Err(ScanError::Invalid(format!("step {} -> {} needs Ω₀ > 0 and angle > 0", s.a, s.b)));
            }
            let tr = transition_between(es, model, s.a, s.b);
            if !tr.allowed {
                return Err(PulseError::Forbidden { lower: tr.lower, upper: tr.upper, element: tr.matrix_element }.into());
            }
            let duration = rotation_time(s.omega0, tr.matrix_element, s.angle);
            segments.push(PulseSegment::new(vec![Tone::new(s.omega0, tr.frequency, s.phase)], duration)?);
            // phase restarts at each segment, so the interaction-picture phase is shifted
            let phase = s.phase - TWO_PI * tr.frequency * t * MHZ_NS;
            let u = ideal_rotation(model, es, &[IdealDrive { a: s.a, b: s.b, phase }], s.angle);
            ideal = &u * &ideal;
            ideal_steps.push(u);
            last_start = t;
            t += duration;
        }
        Ok(CompiledSequence {
            schedule: PulseSchedule { segments },
            ideal_steps,
            ideal,
            nominal_end: t,
            last_start,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SequenceResult {
    pub rho_final: CMat,
    pub target: CMat,
    pub fidelity: f64,
    /// Total sequence time at the fidelity maximum.
    pub t_opt: f64,
    pub nominal_end: f64,
}

/// Runs the sequence from `rho0` (lab, computational basis) and compares
/// against the ideal composition of its steps, scanning the length of the
/// last step over the final window.
pub fn run_sequence(
    model: &RegisterModel,
    seq: &SequenceSpec,
    rho0: &CMat,
    noise: &NoiseSpec,
    options: &EvolveOptions,
) -> Result<SequenceResult, ScanError> {
    let engine = Engine::new(model, noise, options)?;
    let compiled = seq.compile(model, &engine.eigen)?;
    let r0 = engine.to_rotating_initial(rho0);
    let target = &compiled.ideal * &r0 * compiled.ideal.adjoint();
    if seq.steps.is_empty() {
        return Ok(SequenceResult {
            rho_final: rho0.clone(),
            fidelity: uhlmann_fidelity(&r0, &target),
            target,
            t_opt: 0.0,
            nominal_end: 0.0,
        });
    }
    let last = compiled.nominal_end - compiled.last_start;
    let [wlo, whi] = seq.final_window;
    if !(whi >= wlo && wlo > 0.0) {
        return Err(ScanError::Invalid("final window must satisfy 0 < lo ≤ hi".into()));
    }
    let mut schedule = compiled.schedule.clone();
    let tail = schedule.segments.last_mut().expect("non-empty");
    tail.duration = last * whi;
    let lo = compiled.last_start + last * wlo;
    let hi = compiled.last_start + last * whi;
    let dt = MAX_DT_NS.min(last / SAMPLES_PER_PI);
    let n = (((hi - lo) / dt).ceil() as usize).max(8);
    let times: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let mut best = (f64::NEG_INFINITY, lo, CMat::zeros(1, 1));
    let pure = crate::fidelity::pure_vector(&target);
    engine.evolve_density(rho0, &schedule, &times, Representation::Rotating, |k, rho| {
        let f = match &pure {
            Some(phi) => (phi.adjoint() * rho * phi)[(0, 0)].re,
            None => uhlmann_fidelity(rho, &target),
        };
        if f > best.0 {
            best = (f, times[k], rho.clone());
        }
    })?;
    let rho_lab = engine.rotating_to_lab(&best.2, best.1);
    Ok(SequenceResult {
        rho_final: rho_lab,
        target,
        fidelity: best.0.clamp(0.0, 1.0),
        t_opt: best.1,
        nominal_end: compiled.nominal_end,
    })
}

/// Low-field Bell-state preparations from |0,d,d⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellRoute {
    /// MW π on |0,d⟩↔|−1,d⟩ (VC), then direct π/2 on |−1,d⟩↔|+1,u⟩.
    #[serde(rename = "two_pulse_vc")]
    TwoPulseVC,
    /// MW π on |0,d⟩↔|+1,d⟩ (VN), then direct π/2 on |+1,d⟩↔|−1,u⟩.
    #[serde(rename = "two_pulse_vn")]
    TwoPulseVN,
    /// π/2, π (nuclear), π with allowed transitions only, VC pair.
    #[serde(rename = "three_pulse_vc")]
    ThreePulseVC,
    #[serde(rename = "three_pulse_vn")]
    ThreePulseVN,
}

/// Sequence preset. `mw` and `rf` set Ω₀ (MHz) for the electron and for the
/// nuclear or two-spin-flip steps.
pub fn bell_sequence(route: BellRoute, mw: f64, rf: f64) -> SequenceSpec {
    use Half::{Down, Up};
    use Ms::{Minus, Plus, Zero};
    let pi = std::f64::consts::PI;
    let step = |a, b, angle, omega0| SequenceStep { a, b, angle, phase: 0.0, omega0 };
    let steps = match route {
        BellRoute::TwoPulseVC => vec![
            step(lab(Zero, Down, Down), lab(Minus, Down, Down), pi, mw),
            step(lab(Minus, Down, Down), lab(Plus, Up, Down), pi / 2.0, rf),
        ],
        BellRoute::TwoPulseVN => vec![
            step(lab(Zero, Down, Down), lab(Plus, Down, Down), pi, mw),
            step(lab(Plus, Down, Down), lab(Minus, Down, Up), pi / 2.0, rf),
        ],
        BellRoute::ThreePulseVC => vec![
            step(lab(Zero, Down, Down), lab(Minus, Down, Down), pi / 2.0, mw),
            step(lab(Minus, Down, Down), lab(Minus, Up, Down), pi, rf),
            step(lab(Zero, Down, Down), lab(Plus, Down, Down), pi, mw),
        ],
        BellRoute::ThreePulseVN => vec![
            step(lab(Zero, Down, Down), lab(Minus, Down, Down), pi / 2.0, mw),
            step(lab(Minus, Down, Down), lab(Minus, Down, Up), pi, rf),
            step(lab(Zero, Down, Down), lab(Plus, Down, Down), pi, mw),
        ],
    };
    SequenceSpec { name: format!("{route:?}"), steps, final_window: default_final_window() }
}
