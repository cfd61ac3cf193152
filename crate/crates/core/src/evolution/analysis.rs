// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Free-induction decay of the vacancy qubit and envelope fits.

use serde::Serialize;

use super::{Engine, EvolutionError, EvolveOptions, NoiseSpec, Representation};
use crate::model::{Eigensystem, RegisterModel};
use crate::pulses::{PulseSchedule, PulseSegment};
use crate::spincore::{BasisLabel, Half, Ms, RegisterLayout, C64};

/// |ρ_ab|/|ρ_ab(0)| for the dressed superposition (|0,↑,↑⟩ + |−1,↑,↑⟩)/√2,
/// sampled in the interaction picture so only the decay envelope remains.
pub fn free_induction_decay(
    model: &RegisterModel,
    noise: &NoiseSpec,
    options: &EvolveOptions,
    times: &[f64],
) -> Result<Vec<f64>, EvolutionError> {
    let a = BasisLabel::new(Ms::Zero, Half::Up, Half::Up);
    let b = BasisLabel::new(Ms::Minus, Half::Up, Half::Up);
    let es = Eigensystem::of(model);
    let psi = (es.state(a) + es.state(b)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rho0 = &psi * psi.adjoint();
    let total = times.iter().copied().fold(0.0, f64::max);
    let schedule = PulseSchedule::single(
        PulseSegment::idle(total).map_err(|e| EvolutionError::Schedule(e.to_string()))?,
    );
    let engine = Engine::new(model, noise, options)?;
    let (ia, ib) = (RegisterLayout::index(a), RegisterLayout::index(b));
    let mut env = vec![0.0; times.len()];
    engine.evolve_density(&rho0, &schedule, times, Representation::Rotating, |k, r| {
        env[k] = 2.0 * r[(ia, ib)].norm();
    })?;
    Ok(env)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StretchedFit {
    /// Exponent p of exp(−(t/τ)^p).
    pub p: f64,
    /// τ in ns.
    pub tau: f64,
    /// RMS residual of the linearised fit.
    pub rms: f64,
}

/// Least-squares fit of exp(−(t/τ)^p) via ln(−ln E) = p·ln t − p·ln τ,
/// using samples with 0 < E < 1 and t within [lo, hi].
pub fn fit_stretched_exponential(times: &[f64], env: &[f64], lo: f64, hi: f64) -> Option<StretchedFit> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(env)
        .filter(|(&t, &e)| t >= lo && t <= hi && t > 0.0 && e > 0.0 && e < 1.0)
        .map(|(&t, &e)| (t.ln(), (-e.ln()).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let p = sxy / sxx;
    let c = my - p * mx;
    let rms = (pts.iter().map(|q| (q.1 - p * q.0 - c).powi(2)).sum::<f64>() / n).sqrt();
    Some(StretchedFit { p, tau: (-c / p).exp(), rms })
}

/// First time the envelope falls through 1/e, linearly interpolated.
pub fn one_over_e_time(times: &[f64], env: &[f64]) -> Option<f64> {
    let target = (-1.0f64).exp();
    times.windows(2).zip(env.windows(2)).find_map(|(t, e)| {
        (e[0] >= target && e[1] < target).then(|| t[0] + (e[0] - target) / (e[0] - e[1]) * (t[1] - t[0]))
    })
}
