// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Randomised invariant suite over models, schedules, states and operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::evolution::{invariants, Engine, EvolveOptions, Frame, NoiseSpec, Representation};
use crate::fidelity::{pure_vector, uhlmann_fidelity};
use crate::linalg::max_abs;
use crate::model::{nv_frame_coefficients, transition_table, HyperfineTensor, RegisterModel};
use crate::pulses::{PulseSchedule, PulseSegment, Tone};
use crate::spincore::{embed, CMat, OperatorMatrix, Slot, Unit, C64, DIM};

pub const DEFAULT_SEED: u64 = 0x6e76_7265_6721;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub instances: usize,
    /// Largest violation seen; the check passes when it stays below `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub failures: Vec<String>,
}

impl CheckResult {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, instances: 0, worst: 0.0, tolerance, failures: vec![] }
    }

    fn record(&mut self, value: f64) {
        self.instances += 1;
        if !(value <= self.worst) {
            self.worst = value;
        }
    }

    fn fail(&mut self, msg: String) {
        self.instances += 1;
        self.worst = f64::INFINITY;
        self.failures.push(msg);
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub instances: usize,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{:<28} {:>4} instances  worst {:.3e}  tol {:.1e}  {}\n",
                c.name,
                c.instances,
                c.worst,
                c.tolerance,
                if c.passed() { "ok" } else { "FAIL" }
            ));
            for f in &c.failures {
                s.push_str(&format!("    {f}\n"));
            }
        }
        s
    }
}

fn cnormal(rng: &mut ChaCha8Rng) -> C64 {
    // Box–Muller keeps the generator the only source of randomness.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    C64::new(r * t.cos(), r * t.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre-distributed density matrix of rank `rank`.
pub fn random_density(rng: &mut ChaCha8Rng, rank: usize) -> CMat {
    let g = CMat::from_fn(DIM, rank, |_, _| cnormal(rng));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho / C64::new(tr, 0.0)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| cnormal(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_model(rng: &mut ChaCha8Rng) -> RegisterModel {
    let b = rng.random_range(0.0..150.0);
    let m = match rng.random_range(0..3) {
        0 => RegisterModel::nearest_neighbor(b),
        1 => RegisterModel::third_neighbor(b),
        _ => {
            let mut m = RegisterModel::nearest_neighbor(b);
            m.carbon = HyperfineTensor::Principal {
                c_parallel: rng.random_range(-200.0..200.0),
                c_perp: rng.random_range(-200.0..200.0),
                theta: rng.random_range(0.0..std::f64::consts::PI),
            };
            m.site = crate::model::CarbonSite::Custom;
            m
        }
    };
    m.with_strain(rng.random_range(0.0..5.0))
}

/// One to three segments, each idle or with one or two tones near the
/// model's strongest lines.
pub fn random_schedule(rng: &mut ChaCha8Rng, model: &RegisterModel, max_ns: f64) -> PulseSchedule {
    let lines: Vec<f64> = transition_table(model).iter().filter(|t| t.allowed).map(|t| t.frequency).collect();
    let nseg = rng.random_range(1..=3);
    let mut segments = Vec::new();
    for _ in 0..nseg {
        let duration = rng.random_range(0.2..max_ns / nseg as f64);
        let ntones = rng.random_range(0..=2);
        if ntones == 0 {
            segments.push(PulseSegment::idle(duration).expect("valid idle segment"));
            continue;
        }
        let tones: Vec<Tone> = (0..ntones)
            .map(|_| {
                let nu = if lines.is_empty() || rng.random_bool(0.2) {
                    0.0
                } else {
                    lines[rng.random_range(0..lines.len())] + rng.random_range(-2.0..2.0)
                };
                Tone::new(rng.random_range(0.0..60.0), nu.abs(), rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        segments.push(PulseSegment::new(tones, duration).expect("valid random segment"));
    }
    PulseSchedule::new(segments).expect("valid random schedule")
}

/// Strong noise so dissipation matters within tens of ns.
pub fn stress_noise() -> NoiseSpec {
    NoiseSpec {
        enabled: true,
        t1_v_ms: 1e-3,
        t2star_v_us: 0.05,
        t1_c_s: 1e-6,
        t1_n_s: 2e-6,
        t2_c_ms: 1e-3,
        t2_n_ms: 5e-4,
        ..NoiseSpec::default()
    }
}

pub fn run(instances: usize, seed: u64) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = CheckResult::new("evolution/trace", 1e-7);
    let mut herm = CheckResult::new("evolution/hermiticity", 1e-9);
    let mut pos = CheckResult::new("evolution/positivity", 1e-6);
    let mut sym = CheckResult::new("fidelity/symmetry", 1e-9);
    let mut shortcut = CheckResult::new("fidelity/pure-shortcut", 1e-9);
    let mut range = CheckResult::new("fidelity/range", 1e-10);
    let mut tensor = CheckResult::new("hyperfine/trace-identity", 1e-10);
    let mut embed_c = CheckResult::new("spincore/embed-commutation", 1e-12);

    for k in 0..instances {
        let model = random_model(&mut rng);
        let schedule = random_schedule(&mut rng, &model, 30.0);
        let rank = rng.random_range(1..=DIM);
        let rho0 = random_density(&mut rng, rank);
        let noise = if rng.random_bool(0.75) { stress_noise() } else { NoiseSpec::off() };
        let options = EvolveOptions { frame: if k % 10 == 9 { Frame::Lab } else { Frame::Diagonal }, ..EvolveOptions::default() };
        let total = schedule.total_duration();
        let times: Vec<f64> = (0..=8).map(|j| total * j as f64 / 8.0).collect();
        let run = Engine::new(&model, &noise, &options).and_then(|e| {
            let mut samples = Vec::new();
            e.evolve_density(&rho0, &schedule, &times, Representation::Lab, |_, r| samples.push(r.clone()))?;
            Ok(samples)
        });
        match run {
            Ok(samples) => {
                let (mut t, mut h, mut p) = (0.0f64, 0.0f64, 0.0f64);
                for r in &samples {
                    let inv = invariants(r);
                    t = t.max(inv.trace_error);
                    h = h.max(inv.hermiticity_error);
                    p = p.max(-inv.min_eigenvalue);
                }
                trace.record(t);
                herm.record(h);
                pos.record(p.max(0.0));
            }
            Err(e) => {
                let msg = format!("instance {k}: {e}");
                trace.fail(msg.clone());
                herm.instances += 1;
                pos.instances += 1;
            }
        }

        let (ra, rb) = (rng.random_range(1..=DIM), rng.random_range(2..=DIM));
        let a = random_density(&mut rng, ra);
        let b = random_density(&mut rng, rb);
        let fab = uhlmann_fidelity(&a, &b);
        sym.record((fab - uhlmann_fidelity(&b, &a)).abs());
        range.record((-fab).max(fab - 1.0).max(0.0));
        let psi = random_density(&mut rng, 1);
        let phi = pure_vector(&psi).expect("rank one");
        let direct = (phi.adjoint() * &b * &phi)[(0, 0)].re;
        shortcut.record((direct - uhlmann_fidelity(&b, &psi)).abs().max((direct - uhlmann_fidelity(&psi, &b)).abs()));

        let cp: f64 = rng.random_range(-300.0..300.0);
        let cq: f64 = rng.random_range(-300.0..300.0);
        let th: f64 = rng.random_range(-4.0..4.0);
        let f = nv_frame_coefficients(cp, cq, th);
        let scale = cp.abs().max(cq.abs()).max(1.0);
        tensor.record(((f.c_parallel + 2.0 * f.c_perp) - (cp + 2.0 * cq)).abs() / scale);

        let slots = [Slot::V, Slot::C, Slot::N];
        let i = rng.random_range(0..3);
        let j = (i + rng.random_range(1..3)) % 3;
        let (si, sj) = (slots[i], slots[j]);
        let oi = OperatorMatrix::new(random_hermitian(&mut rng, si.dim()), Unit::Dimensionless).expect("hermitian");
        let oj = OperatorMatrix::new(random_hermitian(&mut rng, sj.dim()), Unit::Dimensionless).expect("hermitian");
        let ei = embed(&oi, si).expect("slot").into_matrix();
        let ej = embed(&oj, sj).expect("slot").into_matrix();
        embed_c.record(max_abs(&(&ei * &ej - &ej * &ei)));
    }
    SelftestReport { seed, instances, checks: vec![trace, herm, pos, sym, shortcut, range, tensor, embed_c] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_reproducible() {
        let a = run(6, 7);
        assert!(a.passed(), "{}", a.summary());
        let b = run(6, 7);
        assert_eq!(a.summary(), b.summary());
    }
}
