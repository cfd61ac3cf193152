// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Frame-transformed Lindblad and propagator integration.
//!
//! The integrated quantity is ρ_F = P(t)·W†ρW·P(t)† (or the matching
//! propagator), where W is a fixed unitary and P(t) = exp(+2πi·Λ·t) with Λ
//! diagonal. Lab: W = 1, Λ = 0. Diagonal: W = 1, Λ = diag(H0). Eigen: W the
//! dressed eigenbasis and Λ its energies, which removes every static phase.

use serde::{Deserialize, Serialize};

use super::integrator::{Dopri5, IntegratorStats, StepError};
use super::noise::{build_channels, ChannelSet, NoiseSpec, RateLaw};
use crate::model::{build_static_hamiltonian, Eigensystem, RegisterModel};
use crate::pulses::{drive_operator, PulseSchedule, PulseSegment, MHZ_NS};
use crate::spincore::{CMat, C64, DIM};

const N2: usize = DIM * DIM;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Dissipator superoperator entries below this fraction of the largest are dropped.
const DISSIPATOR_CUTOFF: f64 = 1e-12;
/// Hamiltonian entries below this (MHz) are dropped from the sparse pattern.
const HAMILTONIAN_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    Diagonal,
    Eigen,
}

/// Basis in which states are handed back to callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Computational basis, laboratory frame.
    Lab,
    /// Dressed eigenbasis (index = label), interaction picture of H_static.
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub frame: Frame,
    /// Reuse one carrier period of a single-tone segment (noise off only).
    pub periodic_shortcut: bool,
    pub max_steps: u64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            frame: Frame::Diagonal,
            periodic_shortcut: true,
            max_steps: 200_000_000,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("integration fault: {0}")]
    Step(#[from] StepError),
    #[error("integration fault: {what} = {value:.3e} at t = {t} ns")]
    Invariant { what: &'static str, value: f64, t: f64 },
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("noise: {0}")]
    Noise(String),
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    i: usize,
    j: usize,
    k: C64,
    y: C64,
}

#[derive(Debug, Clone)]
struct Sparse {
    rows: Vec<(u16, u16, C64)>,
}

impl Sparse {
    fn from_dense(m: &CMat, cutoff: f64) -> Self {
        let n = m.nrows();
        let max = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut rows = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = m[(r, c)];
                if v.norm() > cutoff * max && v.norm() > 0.0 {
                    rows.push((r as u16, c as u16, v));
                }
            }
        }
        Self { rows }
    }

    #[inline]
    fn apply_add(&self, x: &[C64], scale: f64, out: &mut [C64]) {
        for &(r, c, v) in &self.rows {
            out[r as usize] += v * x[c as usize] * scale;
        }
    }
}

/// Precomputed frame data for one model and noise setting.
#[derive(Debug, Clone)]
pub struct Engine {
    pub model: RegisterModel,
    pub eigen: Eigensystem,
    pub noise: NoiseSpec,
    pub options: EvolveOptions,
    h0: CMat,
    x: CMat,
    w: CMat,
    lambda: [f64; DIM],
    dressed: CMat,
    dressed_energy: [f64; DIM],
    entries: Vec<Entry>,
    diss_const: Option<Sparse>,
    diss_linear: Option<(Sparse, f64)>,
    channels: ChannelSet,
}

/// Diagonal phases exp(+2πi·λ·t).
fn phases(lambda: &[f64; DIM], t: f64) -> [C64; DIM] {
    std::array::from_fn(|j| C64::from_polar(1.0, TWO_PI * lambda[j] * t * MHZ_NS))
}

fn flat(m: &CMat) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); N2];
    for r in 0..DIM {
        for c in 0..DIM {
            v[r * DIM + c] = m[(r, c)];
        }
    }
    v
}

fn unflat(v: &[C64]) -> CMat {
    CMat::from_fn(DIM, DIM, |r, c| v[r * DIM + c])
}

fn diag_mat(p: &[C64; DIM]) -> CMat {
    CMat::from_fn(DIM, DIM, |r, c| if r == c { p[r] } else { C64::new(0.0, 0.0) })
}

/// Row-major superoperator of Σ_k c_k·D[L_k] in the basis W.
fn superoperator(ops: &[(CMat, f64)], w: &CMat) -> CMat {
    let mut s = CMat::zeros(N2, N2);
    let id = CMat::identity(DIM, DIM);
    for (l, rate) in ops {
        let lw = w.adjoint() * l * w;
        let ldl = lw.adjoint() * &lw;
        // vec(AXB) = (A ⊗ Bᵀ) vec(X) for row-major vec
        let term = lw.kronecker(&lw.conjugate())
            - (ldl.kronecker(&id) + id.kronecker(&ldl.transpose())) * C64::new(0.5, 0.0);
        s += term * C64::new(*rate, 0.0);
    }
    s
}

impl Engine {
    pub fn new(model: &RegisterModel, noise: &NoiseSpec, options: &EvolveOptions) -> Result<Self, EvolutionError> {
        noise.validate().map_err(|e| EvolutionError::Noise(e.to_string()))?;
        let h0 = build_static_hamiltonian(model).into_matrix();
        let x = drive_operator(model).into_matrix();
        let eigen = Eigensystem::new(&crate::spincore::OperatorMatrix::from_raw(
            h0.clone(),
            crate::spincore::Unit::MHz,
        ));
        let dressed = eigen.dressed_basis();
        let dressed_energy = eigen.dressed_energies();
        let (w, lambda) = match options.frame {
            Frame::Lab => (CMat::identity(DIM, DIM), [0.0; DIM]),
            Frame::Diagonal => (CMat::identity(DIM, DIM), std::array::from_fn(|j| h0[(j, j)].re)),
            Frame::Eigen => (dressed.clone(), dressed_energy),
        };
        let mut k = w.adjoint() * &h0 * &w;
        for j in 0..DIM {
            k[(j, j)] -= C64::new(lambda[j], 0.0);
        }
        let y = w.adjoint() * &x * &w;
        let mut entries = Vec::new();
        for i in 0..DIM {
            for j in 0..DIM {
                let (kv, yv) = (k[(i, j)], y[(i, j)]);
                if kv.norm() > HAMILTONIAN_CUTOFF || yv.norm() > HAMILTONIAN_CUTOFF * 1e-3 {
                    entries.push(Entry { i, j, k: kv, y: yv });
                }
            }
        }
        let channels = build_channels(noise);
        let mut constant = Vec::new();
        let mut linear = Vec::new();
        for ch in &channels.channels {
            match ch.law {
                RateLaw::Constant(r) => constant.push((ch.op.matrix().clone(), r)),
                RateLaw::Linear { slope } => linear.push((ch.op.matrix().clone(), slope)),
            }
        }
        let diss_const = (!constant.is_empty()).then(|| Sparse::from_dense(&superoperator(&constant, &w), DISSIPATOR_CUTOFF));
        let diss_linear = if linear.is_empty() {
            None
        } else {
            // all linear channels share one slope; normalise it out
            let slope = linear[0].1;
            let unit: Vec<(CMat, f64)> = linear.iter().map(|(l, s)| (l.clone(), s / slope)).collect();
            Some((Sparse::from_dense(&superoperator(&unit, &w), DISSIPATOR_CUTOFF), slope))
        };
        Ok(Self {
            model: model.clone(),
            eigen,
            noise: *noise,
            options: *options,
            h0,
            x,
            w,
            lambda,
            dressed,
            dressed_energy,
            entries,
            diss_const,
            diss_linear,
            channels,
        })
    }

    pub fn static_hamiltonian(&self) -> &CMat {
        &self.h0
    }

    pub fn drive(&self) -> &CMat {
        &self.x
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn noisy(&self) -> bool {
        self.diss_const.is_some() || self.diss_linear.is_some()
    }

    pub fn dressed_basis(&self) -> &CMat {
        &self.dressed
    }

    /// ρ_R(0) = V†ρV for a comp-basis density.
    pub fn to_rotating_initial(&self, rho_lab: &CMat) -> CMat {
        self.dressed.adjoint() * rho_lab * &self.dressed
    }

    /// Lab comp-basis state from the rotating representation at time t.
    pub fn rotating_to_lab(&self, rho_r: &CMat, t: f64) -> CMat {
        let p = phases(&self.dressed_energy, t);
        let pc: [C64; DIM] = std::array::from_fn(|j| p[j].conj());
        let m = CMat::from_fn(DIM, DIM, |r, c| pc[r] * rho_r[(r, c)] * p[c]);
        &self.dressed * m * self.dressed.adjoint()
    }

    /// A(t) with ρ_repr = A ρ_F A†.
    fn frame_map(&self, t: f64, repr: Representation) -> CMat {
        let pf = phases(&self.lambda, t);
        let pfc: [C64; DIM] = std::array::from_fn(|j| pf[j].conj());
        match repr {
            Representation::Lab => &self.w * diag_mat(&pfc),
            Representation::Rotating => {
                if self.options.frame == Frame::Eigen {
                    return CMat::identity(DIM, DIM);
                }
                let pe = phases(&self.dressed_energy, t);
                diag_mat(&pe) * self.dressed.adjoint() * &self.w * diag_mat(&pfc)
            }
        }
    }

    #[inline]
    fn hamiltonian_entries(&self, t: f64, u: f64, out: &mut Vec<(usize, usize, C64)>) {
        out.clear();
        let p = phases(&self.lambda, t);
        let scale = C64::new(0.0, -TWO_PI * MHZ_NS);
        for e in &self.entries {
            let h = (e.k + e.y * u) * p[e.i] * p[e.j].conj();
            out.push((e.i, e.j, h * scale));
        }
    }

    fn density_rhs(&self, seg: &PulseSegment, start: f64, t: f64, rho: &[C64], out: &mut [C64], buf: &mut Vec<(usize, usize, C64)>, tmp: &mut [C64]) {
        let u = seg.amplitude(t - start, start);
        self.hamiltonian_entries(t, u, buf);
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for &(i, j, g) in buf.iter() {
            let (ri, rj) = (i * DIM, j * DIM);
            for c in 0..DIM {
                out[ri + c] += g * rho[rj + c];
            }
            for r in 0..DIM {
                out[r * DIM + j] -= rho[r * DIM + i] * g;
            }
        }
        if self.diss_const.is_none() && self.diss_linear.is_none() {
            return;
        }
        let p = phases(&self.lambda, t);
        // ρ_W = P† ρ_F P
        for r in 0..DIM {
            for c in 0..DIM {
                tmp[r * DIM + c] = p[r].conj() * rho[r * DIM + c] * p[c];
            }
        }
        let mut d = [C64::new(0.0, 0.0); N2];
        if let Some(s) = &self.diss_const {
            s.apply_add(tmp, 1.0, &mut d);
        }
        if let Some((s, slope)) = &self.diss_linear {
            s.apply_add(tmp, slope * t, &mut d);
        }
        for r in 0..DIM {
            for c in 0..DIM {
                out[r * DIM + c] += p[r] * d[r * DIM + c] * p[c].conj();
            }
        }
    }

    fn propagator_rhs(&self, seg: &PulseSegment, start: f64, t: f64, u_mat: &[C64], out: &mut [C64], buf: &mut Vec<(usize, usize, C64)>) {
        let u = seg.amplitude(t - start, start);
        self.hamiltonian_entries(t, u, buf);
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for &(i, j, g) in buf.iter() {
            let (ri, rj) = (i * DIM, j * DIM);
            for c in 0..DIM {
                out[ri + c] += g * u_mat[rj + c];
            }
        }
    }

    /// Exact frame propagator of the static Hamiltonian over [t0, t1].
    fn idle_propagator(&self, t0: f64, t1: f64) -> CMat {
        let e = &self.dressed_energy;
        let ph: [C64; DIM] = std::array::from_fn(|j| C64::from_polar(1.0, -TWO_PI * e[j] * (t1 - t0) * MHZ_NS));
        let ulab = &self.dressed * diag_mat(&ph) * self.dressed.adjoint();
        let p1 = phases(&self.lambda, t1);
        let p0c: [C64; DIM] = std::array::from_fn(|j| phases(&self.lambda, t0)[j].conj());
        diag_mat(&p1) * self.w.adjoint() * ulab * &self.w * diag_mat(&p0c)
    }

    fn check_schedule(schedule: &PulseSchedule, times: &[f64]) -> Result<(), EvolutionError> {
        for s in &schedule.segments {
            s.validate().map_err(|e| EvolutionError::Schedule(e.to_string()))?;
        }
        let total = schedule.total_duration();
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(EvolutionError::Schedule("sample times must be sorted".into()));
        }
        if let (Some(&a), Some(&b)) = (times.first(), times.last()) {
            if a < 0.0 || b > total * (1.0 + 1e-12) + 1e-12 {
                return Err(EvolutionError::Schedule(format!(
                    "sample times [{a}, {b}] ns outside schedule of {total} ns"
                )));
            }
        }
        Ok(())
    }

    /// Frame propagators U_F(t_k) with U_F(0) = 1, integrated without noise.
    fn frame_propagators(&self, schedule: &PulseSchedule, times: &[f64]) -> Result<(Vec<CMat>, CMat, IntegratorStats), EvolutionError> {
        let mut stats = IntegratorStats::default();
        let mut current = CMat::identity(DIM, DIM);
        let mut out: Vec<CMat> = Vec::with_capacity(times.len());
        let mut next = 0;
        let mut start = 0.0;
        let nseg = schedule.segments.len();
        let mut buf = Vec::with_capacity(self.entries.len());
        let mut rk = Dopri5::new(N2, self.options.rtol, self.options.atol);
        rk.max_steps = self.options.max_steps;
        for (si, seg) in schedule.segments.iter().enumerate() {
            let end = start + seg.duration;
            let last_seg = si + 1 == nseg;
            let mut local: Vec<f64> = Vec::new();
            while next < times.len() && (times[next] < end || (last_seg && times[next] <= end * (1.0 + 1e-12) + 1e-12)) {
                local.push(times[next].clamp(start, end));
                next += 1;
            }
            let (seg_props, seg_end) = if seg.is_idle() {
                let props = local.iter().map(|&t| self.idle_propagator(start, t)).collect();
                (props, self.idle_propagator(start, end))
            } else if let Some(tau) = self.shortcut_period(seg) {
                self.periodic_segment(seg, start, end, tau, &local, &mut rk, &mut buf)?
            } else {
                self.direct_segment(seg, start, end, &local, &mut rk, &mut buf)?
            };
            for p in seg_props {
                out.push(p * &current);
            }
            current = seg_end * current;
            start = end;
        }
        // times at the very end of an empty-tail schedule
        while next < times.len() {
            out.push(current.clone());
            next += 1;
        }
        stats.merge(&rk.stats);
        Ok((out, current, stats))
    }

    fn shortcut_period(&self, seg: &PulseSegment) -> Option<f64> {
        if !self.options.periodic_shortcut {
            return None;
        }
        let active: Vec<_> = seg.tones.iter().filter(|t| t.omega0 != 0.0).collect();
        let nu = active.first()?.nu;
        if nu <= 0.0 || active.iter().any(|t| t.nu != nu) {
            return None;
        }
        let tau = 1.0 / (nu * MHZ_NS);
        (seg.duration >= 4.0 * tau).then_some(tau)
    }

    fn integrate_to(
        &self,
        seg: &PulseSegment,
        start: f64,
        y: &mut [C64],
        t0: f64,
        t1: f64,
        rk: &mut Dopri5,
        buf: &mut Vec<(usize, usize, C64)>,
    ) -> Result<(), EvolutionError> {
        let mut f = |t: f64, y: &[C64], dy: &mut [C64]| self.propagator_rhs(seg, start, t, y, dy, buf);
        rk.advance(&mut f, t0, t1, y)?;
        Ok(())
    }

    /// Segment propagators (frame, relative to segment start) at `local`
    /// times and at the end.
    fn direct_segment(
        &self,
        seg: &PulseSegment,
        start: f64,
        end: f64,
        local: &[f64],
        rk: &mut Dopri5,
        buf: &mut Vec<(usize, usize, C64)>,
    ) -> Result<(Vec<CMat>, CMat), EvolutionError> {
        let mut y = flat(&CMat::identity(DIM, DIM));
        let mut t = start;
        let mut props = Vec::with_capacity(local.len());
        for &tk in local {
            self.integrate_to(seg, start, &mut y, t, tk, rk, buf)?;
            t = tk;
            props.push(unflat(&y));
        }
        self.integrate_to(seg, start, &mut y, t, end, rk, buf)?;
        Ok((props, unflat(&y)))
    }

    /// Uses M(nτ + s) = M(s)·M(τ)ⁿ for the segment's lab-basis propagator.
    #[allow(clippy::too_many_arguments)]
    fn periodic_segment(
        &self,
        seg: &PulseSegment,
        start: f64,
        end: f64,
        tau: f64,
        local: &[f64],
        rk: &mut Dopri5,
        buf: &mut Vec<(usize, usize, C64)>,
    ) -> Result<(Vec<CMat>, CMat), EvolutionError> {
        let split = |t: f64| {
            let x = (t - start) / tau;
            let mut n = x.floor();
            let mut s = (t - start) - n * tau;
            if s >= tau {
                n += 1.0;
                s -= tau;
            }
            (n.max(0.0) as usize, s.clamp(0.0, tau))
        };
        let mut wanted: Vec<f64> = local.iter().map(|&t| split(t).1).collect();
        wanted.push(split(end).1);
        wanted.sort_by(f64::total_cmp);
        wanted.dedup();
        // integrate one period from the segment start
        let mut y = flat(&CMat::identity(DIM, DIM));
        let mut t = start;
        let p0c: [C64; DIM] = std::array::from_fn(|j| phases(&self.lambda, start)[j].conj());
        let p0 = phases(&self.lambda, start);
        let to_m = |uf: CMat, s: f64| -> CMat {
            let ps = phases(&self.lambda, start + s);
            let psc: [C64; DIM] = std::array::from_fn(|j| ps[j].conj());
            diag_mat(&psc) * uf * diag_mat(&p0)
        };
        let mut table: Vec<(f64, CMat)> = Vec::with_capacity(wanted.len() + 1);
        for &s in &wanted {
            self.integrate_to(seg, start, &mut y, t, start + s, rk, buf)?;
            t = start + s;
            table.push((s, to_m(unflat(&y), s)));
        }
        self.integrate_to(seg, start, &mut y, t, start + tau, rk, buf)?;
        let m_tau = to_m(unflat(&y), tau);
        let lookup = |s: f64| -> &CMat {
            let i = table.partition_point(|(x, _)| *x < s);
            let i = i.min(table.len() - 1);
            &table[i].1
        };
        let mut powers: Vec<CMat> = vec![CMat::identity(DIM, DIM)];
        let mut power = |n: usize, powers: &mut Vec<CMat>| -> CMat {
            while powers.len() <= n {
                let next = &m_tau * powers.last().expect("non-empty");
                powers.push(next);
            }
            powers[n].clone()
        };
        let assemble = |t: f64, powers: &mut Vec<CMat>, power: &mut dyn FnMut(usize, &mut Vec<CMat>) -> CMat| {
            let (n, s) = split(t);
            let m = lookup(s) * power(n, powers);
            let pt = phases(&self.lambda, t);
            diag_mat(&pt) * m * diag_mat(&p0c)
        };
        let props = local
            .iter()
            .map(|&t| assemble(t, &mut powers, &mut power))
            .collect();
        let fin = assemble(end, &mut powers, &mut power);
        Ok((props, fin))
    }

    /// Noise-free propagators in the requested representation, mapping the
    /// t = 0 state to the state at each sample time.
    pub fn propagators(&self, schedule: &PulseSchedule, times: &[f64], repr: Representation) -> Result<(Vec<CMat>, IntegratorStats), EvolutionError> {
        Self::check_schedule(schedule, times)?;
        let (props, _, stats) = self.frame_propagators(schedule, times)?;
        let a0 = self.frame_map(0.0, repr);
        let a0d = a0.adjoint();
        let out = props
            .into_iter()
            .zip(times)
            .map(|(u, &t)| self.frame_map(t, repr) * u * &a0d)
            .collect();
        Ok((out, stats))
    }

    /// Integrates one density matrix (comp basis, lab frame at t = 0) and
    /// calls `observe(k, ρ)` at each sample time in the requested representation.
    /// Noise-free runs go through the propagator path.
    pub fn evolve_density<F>(
        &self,
        rho0: &CMat,
        schedule: &PulseSchedule,
        times: &[f64],
        repr: Representation,
        mut observe: F,
    ) -> Result<(CMat, IntegratorStats), EvolutionError>
    where
        F: FnMut(usize, &CMat),
    {
        Self::check_schedule(schedule, times)?;
        let total = schedule.total_duration();
        let a0 = self.frame_map(0.0, repr);
        if !self.noisy() {
            let mut all: Vec<f64> = times.to_vec();
            all.push(total);
            let (props, stats) = self.propagators(schedule, &all, repr)?;
            let r0 = &a0 * self.w.adjoint() * rho0 * &self.w * a0.adjoint();
            for (k, u) in props.iter().take(times.len()).enumerate() {
                observe(k, &(u * &r0 * u.adjoint()));
            }
            let fin = props.last().expect("end sample");
            return Ok((fin * &r0 * fin.adjoint(), stats));
        }
        let mut y = flat(&(self.w.adjoint() * rho0 * &self.w));
        let mut rk = Dopri5::new(N2, self.options.rtol, self.options.atol);
        rk.max_steps = self.options.max_steps;
        let mut buf = Vec::with_capacity(self.entries.len());
        let mut tmp = vec![C64::new(0.0, 0.0); N2];
        let mut t = 0.0;
        let mut next = 0;
        let mut start = 0.0;
        let nseg = schedule.segments.len();
        let emit = |k: usize, t: f64, y: &[C64], observe: &mut F| -> Result<(), EvolutionError> {
            self.check_density_flat(y, t)?;
            let a = self.frame_map(t, repr);
            observe(k, &(&a * unflat(y) * a.adjoint()));
            Ok(())
        };
        for (si, seg) in schedule.segments.iter().enumerate() {
            let end = start + seg.duration;
            let last_seg = si + 1 == nseg;
            let mut f = |tt: f64, y: &[C64], dy: &mut [C64]| self.density_rhs(seg, start, tt, y, dy, &mut buf, &mut tmp);
            while next < times.len() && (times[next] < end || (last_seg && times[next] <= end * (1.0 + 1e-12) + 1e-12)) {
                let tk = times[next].clamp(start, end);
                rk.advance(&mut f, t, tk, &mut y)?;
                t = tk;
                emit(next, t, &y, &mut observe)?;
                next += 1;
            }
            rk.advance(&mut f, t, end, &mut y)?;
            t = end;
            start = end;
        }
        while next < times.len() {
            emit(next, t, &y, &mut observe)?;
            next += 1;
        }
        self.check_density_flat(&y, t)?;
        self.check_positivity(&y, t)?;
        let a = self.frame_map(t, repr);
        Ok((&a * unflat(&y) * a.adjoint(), rk.stats))
    }

    fn check_density_flat(&self, y: &[C64], t: f64) -> Result<(), EvolutionError> {
        let tr: C64 = (0..DIM).map(|i| y[i * DIM + i]).sum();
        let dev = (tr - C64::new(1.0, 0.0)).norm();
        if dev > 1e-7 {
            return Err(EvolutionError::Invariant { what: "trace deviation", value: dev, t });
        }
        let mut herm = 0.0f64;
        for r in 0..DIM {
            for c in r..DIM {
                herm = herm.max((y[r * DIM + c] - y[c * DIM + r].conj()).norm());
            }
        }
        if herm > 1e-9 {
            return Err(EvolutionError::Invariant { what: "hermiticity error", value: herm, t });
        }
        Ok(())
    }

    fn check_positivity(&self, y: &[C64], t: f64) -> Result<(), EvolutionError> {
        let m = unflat(y);
        let (ev, _) = crate::linalg::hermitian_eigen(&m);
        if ev[0] < -1e-4 {
            return Err(EvolutionError::Invariant { what: "negative eigenvalue", value: ev[0], t });
        }
        Ok(())
    }
}
