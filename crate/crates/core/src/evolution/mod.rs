// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution of the register under drive and noise.

pub mod analysis;
mod engine;
pub mod integrator;
pub mod noise;
pub mod oracle;

pub use engine::{Engine, EvolutionError, EvolveOptions, Frame, Representation};
pub use integrator::{Dopri5, IntegratorStats, StepError};
pub use noise::{build_channels, Channel, ChannelSet, NoiseSpec, RateLaw, GAUSSIAN_CALIBRATION};

use serde::Serialize;

use crate::model::RegisterModel;
use crate::pulses::PulseSchedule;
use crate::spincore::{CMat, OperatorMatrix, Unit};

/// Final state and optional trajectory of one evolution.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub rho_final: OperatorMatrix,
    pub times: Vec<f64>,
    pub trajectory: Vec<CMat>,
    pub stats: IntegratorStats,
    pub representation: Representation,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Invariants {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

pub fn invariants(rho: &CMat) -> Invariants {
    let tr = rho.trace();
    let herm = crate::linalg::max_abs(&(rho - rho.adjoint()));
    let (ev, _) = crate::linalg::hermitian_eigen(&((rho + rho.adjoint()) * crate::spincore::C64::new(0.5, 0.0)));
    Invariants {
        trace_error: (tr - crate::spincore::C64::new(1.0, 0.0)).norm(),
        hermiticity_error: herm,
        min_eigenvalue: ev[0],
    }
}

/// Evolves a lab-frame density matrix through `schedule`, recording the state
/// at `sample_times` (ns) in the requested representation.
pub fn evolve(
    model: &RegisterModel,
    rho0: &OperatorMatrix,
    schedule: &PulseSchedule,
    noise: &NoiseSpec,
    options: &EvolveOptions,
    sample_times: &[f64],
    representation: Representation,
) -> Result<EvolutionResult, EvolutionError> {
    rho0.check_density(1e-9, 1e-8)
        .map_err(|e| EvolutionError::Schedule(format!("initial state: {e}")))?;
    let engine = Engine::new(model, noise, options)?;
    engine.evolve(rho0.matrix(), schedule, sample_times, representation)
}

impl Engine {
    pub fn evolve(
        &self,
        rho0: &CMat,
        schedule: &PulseSchedule,
        sample_times: &[f64],
        representation: Representation,
    ) -> Result<EvolutionResult, EvolutionError> {
        let mut trajectory = Vec::with_capacity(sample_times.len());
        let (fin, stats) = self.evolve_density(rho0, schedule, sample_times, representation, |_, r| {
            trajectory.push(r.clone())
        })?;
        Ok(EvolutionResult {
            rho_final: OperatorMatrix::from_raw(fin, Unit::Density),
            times: sample_times.to_vec(),
            trajectory,
            stats,
            representation,
        })
    }
}

impl EvolutionResult {
    /// Trajectory as CSV: time and populations in index order.
    pub fn populations_csv(&self) -> String {
        let mut s = String::from("time_ns");
        for k in 0..crate::spincore::DIM {
            s.push_str(&format!(",p{k}"));
        }
        s.push('\n');
        for (t, r) in self.times.iter().zip(&self.trajectory) {
            s.push_str(&crate::fmt_sig(*t));
            for k in 0..r.nrows() {
                s.push(',');
                s.push_str(&crate::fmt_sig(r[(k, k)].re));
            }
            s.push('\n');
        }
        s
    }

    /// Trajectory as CSV: time, then re/im of every ρ entry in row-major
    /// order (`re_r_c,im_r_c`), then trace and minimum eigenvalue.
    pub fn trajectory_csv(&self) -> String {
        let n = crate::spincore::DIM;
        let mut s = String::from("t_ns");
        for r in 0..n {
            for c in 0..n {
                s.push_str(&format!(",re_{r}_{c},im_{r}_{c}"));
            }
        }
        s.push_str(",trace,min_eigenvalue\n");
        for (t, rho) in self.times.iter().zip(&self.trajectory) {
            s.push_str(&crate::fmt_sig(*t));
            for r in 0..n {
                for c in 0..n {
                    let z = rho[(r, c)];
                    s.push_str(&format!(",{},{}", crate::fmt_sig(z.re), crate::fmt_sig(z.im)));
                }
            }
            let inv = invariants(rho);
            s.push_str(&format!(",{},{}\n", crate::fmt_sig(rho.trace().re), crate::fmt_sig(inv.min_eigenvalue)));
        }
        s
    }
}
