// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Independent reference propagators used to validate the integrator.
//!
//! Two routes that share no code with the adaptive path: a dense matrix
//! exponential of the 144-dim Liouvillian for piecewise-constant generators,
//! and a fourth-order Magnus propagator on a fixed fine grid for arbitrary
//! tone schedules.

use crate::linalg::hermitian_eigen;
use crate::model::{build_static_hamiltonian, RegisterModel};
use crate::pulses::{drive_operator, PulseSchedule, MHZ_NS};
use crate::spincore::{CMat, C64, DIM};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A piece with constant Hamiltonian (MHz) and constant channel rates (1/ns).
#[derive(Debug, Clone)]
pub struct ConstantPiece {
    pub hamiltonian: CMat,
    pub channels: Vec<(CMat, f64)>,
    pub duration: f64,
}

/// Row-major vectorised Liouvillian: d vec(ρ)/dt = L vec(ρ).
pub fn liouvillian(h: &CMat, channels: &[(CMat, f64)]) -> CMat {
    let n = h.nrows();
    let id = CMat::identity(n, n);
    let a = C64::new(0.0, -TWO_PI * MHZ_NS);
    let mut l = (h.kronecker(&id) - id.kronecker(&h.transpose())) * a;
    for (op, rate) in channels {
        let ldl = op.adjoint() * op;
        l += (op.kronecker(&op.conjugate())
            - (ldl.kronecker(&id) + id.kronecker(&ldl.transpose())) * C64::new(0.5, 0.0))
            * C64::new(*rate, 0.0);
    }
    l
}

/// ρ after the pieces in order, by exp(L·Δt) on each.
pub fn piecewise_expm(rho0: &CMat, pieces: &[ConstantPiece]) -> CMat {
    let n = rho0.nrows();
    let mut v = nalgebra::DVector::from_fn(n * n, |k, _| rho0[(k / n, k % n)]);
    for p in pieces {
        let prop = (liouvillian(&p.hamiltonian, &p.channels) * C64::new(p.duration, 0.0)).exp();
        v = prop * v;
    }
    CMat::from_fn(n, n, |r, c| v[r * n + c])
}

fn exp_anti_hermitian(omega: &CMat) -> CMat {
    // Ω = −iK with K Hermitian
    let k = omega * C64::new(0.0, 1.0);
    let k = (&k + k.adjoint()) * C64::new(0.5, 0.0);
    let (ev, v) = hermitian_eigen(&k);
    let d = CMat::from_fn(ev.len(), ev.len(), |r, c| {
        if r == c {
            C64::from_polar(1.0, -ev[r])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &v * d * v.adjoint()
}

/// Lab-frame noise-free propagator from 0 to the end of `schedule` using the
/// two-point Gauss Magnus expansion with steps no longer than `h_max` ns.
pub fn magnus4_propagator(model: &RegisterModel, schedule: &PulseSchedule, h_max: f64) -> CMat {
    let h0 = build_static_hamiltonian(model).into_matrix();
    let x = drive_operator(model).into_matrix();
    let a = C64::new(0.0, -TWO_PI * MHZ_NS);
    let g = 3f64.sqrt() / 6.0;
    let mut u = CMat::identity(DIM, DIM);
    let mut start = 0.0;
    for seg in &schedule.segments {
        let n = (seg.duration / h_max).ceil().max(1.0) as usize;
        let h = seg.duration / n as f64;
        for k in 0..n {
            let t = k as f64 * h;
            let a1 = (&h0 + &x * C64::new(seg.amplitude(t + (0.5 - g) * h, start), 0.0)) * a;
            let a2 = (&h0 + &x * C64::new(seg.amplitude(t + (0.5 + g) * h, start), 0.0)) * a;
            let comm = &a2 * &a1 - &a1 * &a2;
            let omega = (&a1 + &a2) * C64::new(0.5 * h, 0.0) + comm * C64::new(3f64.sqrt() / 12.0 * h * h, 0.0);
            u = exp_anti_hermitian(&omega) * u;
        }
        start += seg.duration;
    }
    u
}
