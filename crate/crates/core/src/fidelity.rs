// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! State fidelity, sampled gate fidelity and timing-jitter estimates.
//!
//! Gate targets live in the rotating representation (dressed basis,
//! interaction picture of the static Hamiltonian), so spectator levels carry
//! no free phase and a resonant π-pulse is a time-independent block.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolution::{Engine, EvolutionError, Representation};
use crate::linalg::{hermitian_eigen, sqrt_psd};
use crate::model::{Eigensystem, RegisterModel};
use crate::pulses::drive_operator;
use crate::spincore::{
    product_density, BasisLabel, CMat, Factor, NuclearKet, RegisterLayout, Slot, VacancyKet, C64, DIM,
};

/// Default timing accuracy (ns) for uncertainty estimates.
pub const TIMING_JITTER_NS: f64 = 0.25;
const RANK_ONE_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FidelityError {
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("ideal gate is not unitary (deviation {0:.2e})")]
    NotUnitary(f64),
    #[error("jitter window [{lo}, {hi}] ns leaves the sampled trace [{t0}, {t1}] ns")]
    WindowOutside { lo: f64, hi: f64, t0: f64, t1: f64 },
    #[error("sample times must be uniform and contain at least 4 points")]
    BadGrid,
    #[error("empty state set")]
    EmptySet,
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

fn check_density(rho: &CMat) -> Result<(), FidelityError> {
    if rho.nrows() != rho.ncols() {
        return Err(FidelityError::NotDensity("not square".into()));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-6 {
        return Err(FidelityError::NotDensity(format!("trace {tr}")));
    }
    let herm = crate::linalg::max_abs(&(rho - rho.adjoint()));
    if herm > 1e-8 {
        return Err(FidelityError::NotDensity(format!("hermiticity error {herm:.2e}")));
    }
    let (ev, _) = hermitian_eigen(rho);
    if ev[0] < -1e-6 {
        return Err(FidelityError::NotDensity(format!("eigenvalue {:.2e}", ev[0])));
    }
    Ok(())
}

/// Dominant eigenvector if `rho` is rank one within tolerance.
pub fn pure_vector(rho: &CMat) -> Option<DVector<C64>> {
    let (ev, v) = hermitian_eigen(rho);
    let n = ev.len();
    (ev[n - 1] >= 1.0 - RANK_ONE_TOL).then(|| v.column(n - 1).into_owned())
}

/// (Tr √(√ρ σ √ρ))² without shortcuts, evaluated as the squared trace norm
/// of √ρ·√σ so near-zero eigenvalues do not pick up √ε noise.
pub fn uhlmann_fidelity(rho: &CMat, sigma: &CMat) -> f64 {
    let m = sqrt_psd(rho) * sqrt_psd(sigma);
    let t: f64 = m.singular_values().iter().sum();
    (t * t).min(1.0)
}

fn expectation(psi: &DVector<C64>, m: &CMat) -> f64 {
    (psi.adjoint() * m * psi)[(0, 0)].re
}

/// Uhlmann fidelity, using ⟨φ|ρ|φ⟩ when either argument is pure.
pub fn state_fidelity(rho: &CMat, sigma: &CMat) -> Result<f64, FidelityError> {
    check_density(rho)?;
    check_density(sigma)?;
    if let Some(phi) = pure_vector(sigma) {
        return Ok(expectation(&phi, rho).clamp(0.0, 1.0));
    }
    if let Some(phi) = pure_vector(rho) {
        return Ok(expectation(&phi, sigma).clamp(0.0, 1.0));
    }
    Ok(uhlmann_fidelity(rho, sigma))
}

pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    crate::linalg::max_abs(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn target_state(rho0: &CMat, ideal: &CMat) -> Result<CMat, FidelityError> {
    let e = unitarity_error(ideal);
    if e > 1e-9 {
        return Err(FidelityError::NotUnitary(e));
    }
    Ok(ideal * rho0 * ideal.adjoint())
}

/// One resonantly driven pair of the ideal gate. `phase` is the carrier phase
/// seen by the pair in the interaction picture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealDrive {
    pub a: BasisLabel,
    pub b: BasisLabel,
    pub phase: f64,
}

/// Ideal rotation by `angle` on each listed pair, identity elsewhere, as a
/// matrix in the rotating representation (index = label index).
///
/// For a pair with E_hi > E_lo, the rotating-wave Hamiltonian is
/// (Ω₀/2)·|Y|·(ĝ|hi⟩⟨lo| + h.c.) with ĝ = e^{−iφ}·Y/|Y|, Y = ⟨hi|X|lo⟩,
/// which fixes the phases of the block.
pub fn ideal_rotation(model: &RegisterModel, es: &Eigensystem, drives: &[IdealDrive], angle: f64) -> CMat {
    let x = drive_operator(model).into_matrix();
    let mut u = CMat::identity(DIM, DIM);
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    for d in drives {
        let (lo, hi) = if es.energy(d.a) <= es.energy(d.b) { (d.a, d.b) } else { (d.b, d.a) };
        let y = es.matrix_element(&x, hi, lo);
        let g = if y.norm() > 0.0 { y / y.norm() } else { C64::new(1.0, 0.0) } * C64::from_polar(1.0, -d.phase);
        let (ih, il) = (RegisterLayout::index(hi), RegisterLayout::index(lo));
        let mut block = CMat::identity(DIM, DIM);
        block[(ih, ih)] = C64::new(c, 0.0);
        block[(il, il)] = C64::new(c, 0.0);
        block[(ih, il)] = C64::new(0.0, -s) * g;
        block[(il, ih)] = C64::new(0.0, -s) * g.conj();
        u = block * u;
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetName {
    Vacancy25,
    Carbon16,
    Nitrogen8,
    Controlled,
    Custom,
}

#[derive(Debug, Clone)]
pub struct SetMember {
    pub label: String,
    /// Initial density in the computational basis.
    pub rho: CMat,
}

#[derive(Debug, Clone)]
pub struct StateSet {
    pub name: SetName,
    pub members: Vec<SetMember>,
}

fn member_label(v: &Factor<VacancyKet>, c: &Factor<NuclearKet>, n: &Factor<NuclearKet>) -> String {
    let f = |name: Option<&str>| name.unwrap_or("mix").to_string();
    let v = f(match v {
        Factor::Pure(k) => Some(k.name()),
        Factor::Mixed => None,
    });
    let c = f(match c {
        Factor::Pure(k) => Some(k.name()),
        Factor::Mixed => None,
    });
    let n = f(match n {
        Factor::Pure(k) => Some(k.name()),
        Factor::Mixed => None,
    });
    format!("|{v},{c},{n}>")
}

/// Logical basis states and superpositions of one subsystem, for controlled
/// gate sets: logical 0/1 are |0⟩/|−1⟩ (V) and ↓/↑ (nuclear spins).
fn logical_choices(slot: Slot) -> Vec<Factor3> {
    match slot {
        Slot::V => [VacancyKet::Zero, VacancyKet::Minus, VacancyKet::XPlus, VacancyKet::YPlus]
            .into_iter()
            .map(Factor3::V)
            .collect(),
        _ => [NuclearKet::Down, NuclearKet::Up, NuclearKet::XPlus, NuclearKet::YPlus]
            .into_iter()
            .map(Factor3::Nuc)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy)]
enum Factor3 {
    V(VacancyKet),
    Nuc(NuclearKet),
}

impl StateSet {
    fn build(name: SetName, factors: Vec<(Factor<VacancyKet>, Factor<NuclearKet>, Factor<NuclearKet>)>) -> Self {
        let members = factors
            .into_iter()
            .map(|(v, c, n)| SetMember {
                label: member_label(&v, &c, &n),
                rho: product_density(v, c, n).into_matrix(),
            })
            .collect();
        Self { name, members }
    }

    /// |0⟩_V ⊗ {↑,↓,x±,y±}_C ⊗ {↑,↓,x±}_N plus |0⟩ with both nuclei mixed.
    pub fn vacancy25() -> Self {
        use NuclearKet::*;
        let mut f = Vec::new();
        for k in [Up, Down, XPlus, XMinus, YPlus, YMinus] {
            for l in [Up, Down, XPlus, XMinus] {
                f.push((Factor::Pure(VacancyKet::Zero), Factor::Pure(k), Factor::Pure(l)));
            }
        }
        f.push((Factor::Pure(VacancyKet::Zero), Factor::Mixed, Factor::Mixed));
        Self::build(SetName::Vacancy25, f)
    }

    /// {0,−1,x±}_V ⊗ ↓_C ⊗ {↑,↓,x±}_N.
    pub fn carbon16() -> Self {
        use NuclearKet::*;
        let mut f = Vec::new();
        for m in [VacancyKet::Zero, VacancyKet::Minus, VacancyKet::XPlus, VacancyKet::XMinus] {
            for l in [Up, Down, XPlus, XMinus] {
                f.push((Factor::Pure(m), Factor::Pure(Down), Factor::Pure(l)));
            }
        }
        Self::build(SetName::Carbon16, f)
    }

    /// {0,−1}_V ⊗ {↑,↓,x±}_C ⊗ ↓_N.
    pub fn nitrogen8() -> Self {
        use NuclearKet::*;
        let mut f = Vec::new();
        for m in [VacancyKet::Zero, VacancyKet::Minus] {
            for l in [Up, Down, XPlus, XMinus] {
                f.push((Factor::Pure(m), Factor::Pure(l), Factor::Pure(Down)));
            }
        }
        Self::build(SetName::Nitrogen8, f)
    }

    /// Products of {0, 1, x+, y+} on each involved slot, with every other
    /// slot fixed to the given spectator ket.
    pub fn controlled(involved: &[Slot], spectator_v: VacancyKet, spectator_nuclear: NuclearKet) -> Self {
        let mut choices: Vec<Vec<Factor3>> = Vec::new();
        for slot in Slot::ALL {
            if involved.contains(&slot) {
                choices.push(logical_choices(slot));
            } else if slot == Slot::V {
                choices.push(vec![Factor3::V(spectator_v)]);
            } else {
                choices.push(vec![Factor3::Nuc(spectator_nuclear)]);
            }
        }
        let mut f = Vec::new();
        for v in &choices[0] {
            for c in &choices[1] {
                for n in &choices[2] {
                    let (Factor3::V(v), Factor3::Nuc(c), Factor3::Nuc(n)) = (*v, *c, *n) else {
                        unreachable!("slot order is V, C, N");
                    };
                    f.push((Factor::Pure(v), Factor::Pure(c), Factor::Pure(n)));
                }
            }
        }
        Self::build(SetName::Controlled, f)
    }

    pub fn custom(members: Vec<SetMember>) -> Result<Self, FidelityError> {
        for m in &members {
            check_density(&m.rho)?;
        }
        Ok(Self { name: SetName::Custom, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Per-state fidelity traces on a uniform time grid.
/// Second-order level shifts (MHz, by label index) induced by the
/// off-resonant Fourier components of the drive. A component of strength
/// g = Ω₀|Y|/2 at detuning δ contributes g²/δ; components with |δ| < 10·g
/// are resonant and left to the dynamics. Both members of each driven pair
/// receive their mean shift, so the correction commutes with the rotation.
pub fn drive_shifts(
    model: &RegisterModel,
    es: &Eigensystem,
    tones: &[crate::pulses::Tone],
    driven: &[(BasisLabel, BasisLabel)],
) -> Vec<f64> {
    let x = drive_operator(model).into_matrix();
    let dressed = es.dressed_basis();
    let xd = dressed.adjoint() * &x * &dressed;
    let e = es.dressed_energies();
    let mut shift = vec![0.0; DIM];
    for tone in tones {
        for i in 0..DIM {
            for j in 0..DIM {
                if i == j {
                    continue;
                }
                let g = 0.5 * tone.omega0 * xd[(i, j)].norm();
                if g == 0.0 {
                    continue;
                }
                for nu in [tone.nu, -tone.nu] {
                    let d = e[i] - e[j] - nu;
                    if d.abs() > 10.0 * g {
                        shift[i] += g * g / d;
                    }
                }
            }
        }
    }
    for &(a, b) in driven {
        let (ia, ib) = (RegisterLayout::index(a), RegisterLayout::index(b));
        let m = 0.5 * (shift[ia] + shift[ib]);
        shift[ia] = m;
        shift[ib] = m;
    }
    shift
}

/// State in the frame that co-rotates with the drive-shifted levels.
fn deshift(rho: &CMat, shifts: &[f64], t: f64) -> CMat {
    let p: Vec<C64> = shifts.iter().map(|d| C64::from_polar(1.0, crate::pulses::phase_rate(*d) * t)).collect();
    CMat::from_fn(DIM, DIM, |r, c| rho[(r, c)] * p[r] * p[c].conj())
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// values[state][time]
    pub values: Vec<Vec<f64>>,
}

enum Prepared {
    Pure { psi0: DVector<C64>, phi: DVector<C64> },
    Mixed { rho0: CMat, sigma: CMat },
}

fn fid_against(prepared: &Prepared, rho: &CMat) -> f64 {
    match prepared {
        Prepared::Pure { phi, .. } => expectation(phi, rho).clamp(0.0, 1.0),
        Prepared::Mixed { sigma, .. } => uhlmann_fidelity(rho, sigma),
    }
}

/// Evolves every member of `set` through `schedule` and records
/// F(ρ_j(t), U_id ρ_j(0) U_id†) at `times`, all in the rotating representation.
pub fn fidelity_traces(
    engine: &Engine,
    set: &StateSet,
    ideal: &CMat,
    schedule: &crate::pulses::PulseSchedule,
    times: &[f64],
) -> Result<FidelityTrace, FidelityError> {
    fidelity_traces_shifted(engine, set, ideal, schedule, times, None)
}

/// As [`fidelity_traces`], with the target co-rotating at the static level
/// energies plus the given per-level shifts (see [`drive_shifts`]).
pub fn fidelity_traces_shifted(
    engine: &Engine,
    set: &StateSet,
    ideal: &CMat,
    schedule: &crate::pulses::PulseSchedule,
    times: &[f64],
    shifts: Option<&[f64]>,
) -> Result<FidelityTrace, FidelityError> {
    if set.is_empty() {
        return Err(FidelityError::EmptySet);
    }
    let e = unitarity_error(ideal);
    if e > 1e-9 {
        return Err(FidelityError::NotUnitary(e));
    }
    let prepared: Vec<Prepared> = set
        .members
        .iter()
        .map(|m| {
            let r0 = engine.to_rotating_initial(&m.rho);
            match pure_vector(&r0) {
                Some(psi0) => {
                    let phi = ideal * &psi0;
                    Prepared::Pure { psi0, phi }
                }
                None => {
                    let sigma = ideal * &r0 * ideal.adjoint();
                    Prepared::Mixed { rho0: r0, sigma }
                }
            }
        })
        .collect();
    let values: Vec<Vec<f64>> = if !engine.noisy() {
        let (props, _) = engine.propagators(schedule, times, Representation::Rotating)?;
        prepared
            .par_iter()
            .map(|p| {
                props
                    .iter()
                    .zip(times)
                    .map(|(u, &t)| match p {
                        Prepared::Pure { psi0, phi } => {
                            let mut v = u * psi0;
                            if let Some(sh) = shifts {
                                for (k, d) in sh.iter().enumerate() {
                                    v[k] *= C64::from_polar(1.0, crate::pulses::phase_rate(*d) * t);
                                }
                            }
                            let amp = (phi.adjoint() * v)[(0, 0)];
                            amp.norm_sqr().min(1.0)
                        }
                        Prepared::Mixed { rho0, sigma } => {
                            let rho = u * rho0 * u.adjoint();
                            let rho = match shifts {
                                Some(sh) => deshift(&rho, sh, t),
                                None => rho,
                            };
                            uhlmann_fidelity(&rho, sigma)
                        }
                    })
                    .collect()
            })
            .collect()
    } else {
        let run = |(m, p): (&SetMember, &Prepared)| -> Result<Vec<f64>, FidelityError> {
            let mut out = vec![0.0; times.len()];
            engine.evolve_density(&m.rho, schedule, times, Representation::Rotating, |k, rho| {
                out[k] = match shifts {
                    Some(sh) => fid_against(p, &deshift(rho, sh, times[k])),
                    None => fid_against(p, rho),
                };
            })?;
            Ok(out)
        };
        set.members
            .par_iter()
            .zip(prepared.par_iter())
            .map(run)
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(FidelityTrace {
        times: times.to_vec(),
        labels: set.members.iter().map(|m| m.label.clone()).collect(),
        values,
    })
}

/// Min and mean over a slice of per-state fidelities.
pub fn gate_fidelity_estimate(per_state: &[f64]) -> (f64, f64) {
    let min = per_state.iter().copied().fold(f64::INFINITY, f64::min);
    let avg = per_state.iter().sum::<f64>() / per_state.len() as f64;
    (min, avg.max(min))
}

/// 4-point Lagrange interpolation on a uniform grid.
pub fn cubic_interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    let dt = times[1] - times[0];
    let x = (t - times[0]) / dt;
    let i = (x.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = x - i as f64;
    let (p0, p1, p2, p3) = (values[i - 1], values[i], values[i + 1], values[i + 2]);
    // nodes at s = −1, 0, 1, 2
    -p0 * s * (s - 1.0) * (s - 2.0) / 6.0 + p1 * (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0
        - p2 * (s + 1.0) * s * (s - 2.0) / 2.0
        + p3 * (s + 1.0) * s * (s - 1.0) / 6.0
}

fn check_uniform(times: &[f64]) -> Result<(), FidelityError> {
    if times.len() < 4 {
        return Err(FidelityError::BadGrid);
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(FidelityError::BadGrid);
    }
    Ok(())
}

/// Half the spread of F over [t_opt − Δt, t_opt + Δt].
pub fn timing_uncertainty(times: &[f64], trace: &[f64], t_opt: f64, delta_t: f64) -> Result<f64, FidelityError> {
    let (lo, hi) = window_extrema(times, trace, t_opt, delta_t)?;
    Ok(0.5 * (hi - lo))
}

/// (min, max) of the interpolated trace over the jitter window.
pub fn window_extrema(times: &[f64], trace: &[f64], t_opt: f64, delta_t: f64) -> Result<(f64, f64), FidelityError> {
    check_uniform(times)?;
    let (t0, t1) = (times[0], *times.last().expect("non-empty"));
    let (lo, hi) = (t_opt - delta_t, t_opt + delta_t);
    if lo < t0 - 1e-12 || hi > t1 + 1e-12 {
        return Err(FidelityError::WindowOutside { lo, hi, t0, t1 });
    }
    let n = 64;
    let mut mn = f64::INFINITY;
    let mut mx = f64::NEG_INFINITY;
    for k in 0..=n {
        let t = lo + (hi - lo) * k as f64 / n as f64;
        let v = cubic_interpolate(times, trace, t);
        mn = mn.min(v);
        mx = mx.max(v);
    }
    Ok((mn, mx))
}

impl FidelityTrace {
    pub fn min_trace(&self) -> Vec<f64> {
        (0..self.times.len())
            .map(|k| self.values.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
            .collect()
    }

    pub fn avg_trace(&self) -> Vec<f64> {
        let n = self.values.len() as f64;
        (0..self.times.len()).map(|k| self.values.iter().map(|v| v[k]).sum::<f64>() / n).collect()
    }

    /// Per-state interpolated fidelities at time t.
    pub fn at(&self, t: f64) -> Vec<f64> {
        self.values.iter().map(|v| cubic_interpolate(&self.times, v, t).clamp(0.0, 1.0)).collect()
    }

    /// min over states of the interpolants at t.
    pub fn gate_at(&self, t: f64) -> f64 {
        self.at(t).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Gate trace min_j F_j(t) sampled finely over the jitter window.
    pub fn gate_window(&self, t_opt: f64, delta_t: f64) -> Result<(f64, f64), FidelityError> {
        check_uniform(&self.times)?;
        let (t0, t1) = (self.times[0], *self.times.last().expect("non-empty"));
        let (lo, hi) = (t_opt - delta_t, t_opt + delta_t);
        if lo < t0 - 1e-12 || hi > t1 + 1e-12 {
            return Err(FidelityError::WindowOutside { lo, hi, t0, t1 });
        }
        let n = 64;
        let vals: Vec<f64> = (0..=n).map(|k| self.gate_at(lo + (hi - lo) * k as f64 / n as f64)).collect();
        let mn = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((mn, mx))
    }
}

/// Exported summary of one optimised gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub name: String,
    pub transition: String,
    pub other: String,
    #[serde(rename = "omega0_MHz")]
    pub omega0: f64,
    #[serde(rename = "duration_ns")]
    pub duration: f64,
    pub gate_fidelity: f64,
    pub avg_fidelity: f64,
    pub per_state: Vec<StateFidelity>,
    pub uncertainty: f64,
    #[serde(rename = "nu_MHz")]
    pub nu: Vec<f64>,
    pub noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFidelity {
    pub label: String,
    pub fidelity: f64,
}

impl GateReport {
    pub const CSV_HEADER: &'static str = "transition,other,omega0_MHz,fidelity_pct,uncertainty_pct,time_ns";

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn csv_row(&self) -> String {
        use crate::{csv_field, fmt_sig};
        format!(
            "{},{},{},{},{},{}",
            csv_field(&self.transition),
            csv_field(&self.other),
            fmt_sig(self.omega0),
            fmt_sig(100.0 * self.gate_fidelity),
            fmt_sig(100.0 * self.uncertainty),
            fmt_sig(self.duration)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spincore::{Half, Ms};

    fn qubit(p: f64, re: f64, im: f64) -> CMat {
        CMat::from_row_slice(2, 2, &[C64::new(p, 0.0), C64::new(re, -im), C64::new(re, im), C64::new(1.0 - p, 0.0)])
    }

    #[test]
    fn textbook_values() {
        let zero = qubit(1.0, 0.0, 0.0);
        let one = qubit(0.0, 0.0, 0.0);
        let mixed = qubit(0.5, 0.0, 0.0);
        assert!((state_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(state_fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((state_fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
        let a = qubit(0.7, 0.1, 0.2);
        assert!((state_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_density() {
        let bad = qubit(1.3, 0.0, 0.0);
        assert!(matches!(state_fidelity(&bad, &bad), Err(FidelityError::NotDensity(_))));
    }

    #[test]
    fn set_sizes_and_labels() {
        assert_eq!(StateSet::vacancy25().len(), 25);
        assert_eq!(StateSet::carbon16().len(), 16);
        assert_eq!(StateSet::nitrogen8().len(), 8);
        let s = StateSet::controlled(&[Slot::V, Slot::C], VacancyKet::Zero, NuclearKet::Up);
        assert_eq!(s.len(), 16);
        assert_eq!(s.members[0].label, "|0,d,u>");
        assert_eq!(StateSet::vacancy25().members[24].label, "|0,mix,mix>");
    }

    #[test]
    fn ideal_pi_block_is_cinot_like() {
        let m = RegisterModel::nearest_neighbor(25.0);
        let es = Eigensystem::of(&m);
        let a = BasisLabel::new(Ms::Zero, Half::Up, Half::Up);
        let b = BasisLabel::new(Ms::Minus, Half::Up, Half::Up);
        let u = ideal_rotation(&m, &es, &[IdealDrive { a, b, phase: 0.3 }], std::f64::consts::PI);
        assert!(unitarity_error(&u) < 1e-12);
        let (ia, ib) = (RegisterLayout::index(a), RegisterLayout::index(b));
        assert!(u[(ia, ia)].norm() < 1e-12);
        assert!((u[(ib, ia)].norm() - 1.0).abs() < 1e-12);
        // untouched levels keep unit amplitude
        assert!((u[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        let rho = crate::spincore::projector(a).into_matrix();
        let t = target_state(&rho, &u).unwrap();
        assert!((t[(ib, ib)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_and_jitter() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let f: Vec<f64> = times.iter().map(|t| 1.0 - (t - 2.0).powi(2)).collect();
        assert!((cubic_interpolate(&times, &f, 2.03) - (1.0 - 0.0009)).abs() < 1e-12);
        let u = timing_uncertainty(&times, &f, 2.0, 0.25).unwrap();
        assert!((u - 0.5 * 0.0625).abs() < 1e-9);
        let flat = vec![0.9; 50];
        assert!(timing_uncertainty(&times, &flat, 2.0, 0.25).unwrap() < 1e-15);
        assert!(matches!(
            timing_uncertainty(&times, &f, 4.8, 0.25),
            Err(FidelityError::WindowOutside { .. })
        ));
    }
}
