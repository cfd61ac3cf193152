// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Square multi-tone drive pulses.
//!
//! The drive Hamiltonian is `u(t)·X` with
//! `X = Sx + (γC/γe)·I_Cx + (γN/γe)·I_Nx` and
//! `u(t) = Σ Ω₀ₙ·cos(2π·νₙ·t_local + φ₀ₙ)` (MHz, t in ns). Ω₀ multiplies X
//! directly, so a resonant tone on a transition with matrix element m has
//! Rabi frequency Ω₀·|m| and π-time `1/(2·Ω₀·|m|)`. For a bare vacancy
//! transition |m| = 1/√2, which puts Ω₀ = 44 MHz at 16.1 ns.

use serde::{Deserialize, Serialize};

use crate::model::{transition_between, Eigensystem, RegisterModel};
use crate::spincore::{embed, make_spin_operators, BasisLabel, OperatorMatrix, Slot, Unit};

/// MHz·ns → cycles.
pub const MHZ_NS: f64 = 1e-3;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("time {t} ns outside schedule of length {total} ns")]
    TimeOutside { t: f64, total: f64 },
    #[error("transition {lower} <-> {upper} is forbidden (|matrix element| = {element:.3e})")]
    Forbidden {
        lower: BasisLabel,
        upper: BasisLabel,
        element: f64,
    },
    #[error("invalid tone: {0}")]
    InvalidTone(String),
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    #[serde(rename = "omega0_MHz")]
    pub omega0: f64,
    #[serde(rename = "nu_MHz")]
    pub nu: f64,
    #[serde(rename = "phi0_rad", default)]
    pub phi0: f64,
}

impl Tone {
    pub fn new(omega0: f64, nu: f64, phi0: f64) -> Self {
        Self { omega0, nu, phi0 }
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        if !(self.omega0.is_finite() && self.nu.is_finite() && self.phi0.is_finite()) {
            return Err(PulseError::InvalidTone("non-finite field".into()));
        }
        if self.omega0 < 0.0 || self.nu < 0.0 {
            return Err(PulseError::InvalidTone(format!(
                "omega0 = {}, nu = {} must be non-negative",
                self.omega0, self.nu
            )));
        }
        Ok(())
    }

    /// Ω₀·cos(2πνt + φ₀), t in ns.
    pub fn amplitude(&self, t: f64) -> f64 {
        self.omega0 * (2.0 * std::f64::consts::PI * self.nu * t * MHZ_NS + self.phi0).cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSegment {
    pub tones: Vec<Tone>,
    #[serde(rename = "duration_ns")]
    pub duration: f64,
    /// Reference carrier phases to schedule time instead of the segment start.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub continuous_phase: bool,
}

impl PulseSegment {
    pub fn new(tones: Vec<Tone>, duration: f64) -> Result<Self, PulseError> {
        let s = Self {
            tones,
            duration,
            continuous_phase: false,
        };
        s.validate()?;
        Ok(s)
    }

    /// Free evolution: a single zero-amplitude tone.
    pub fn idle(duration: f64) -> Result<Self, PulseError> {
        Self::new(vec![Tone::new(0.0, 0.0, 0.0)], duration)
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        if self.tones.is_empty() {
            return Err(PulseError::InvalidSegment("no tones".into()));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(PulseError::InvalidSegment(format!(
                "duration {} ns must be positive",
                self.duration
            )));
        }
        self.tones.iter().try_for_each(Tone::validate)
    }

    /// u at segment-local time `t_local`, given the segment's start time.
    pub fn amplitude(&self, t_local: f64, start: f64) -> f64 {
        let t = if self.continuous_phase { start + t_local } else { t_local };
        self.tones.iter().map(|tone| tone.amplitude(t)).sum()
    }

    pub fn is_idle(&self) -> bool {
        self.tones.iter().all(|t| t.omega0 == 0.0)
    }

    /// Constant amplitude over the segment (every tone has ν = 0).
    pub fn is_static(&self) -> bool {
        self.tones.iter().all(|t| t.nu == 0.0 || t.omega0 == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSchedule {
    pub segments: Vec<PulseSegment>,
}

impl PulseSchedule {
    pub fn new(segments: Vec<PulseSegment>) -> Result<Self, PulseError> {
        segments.iter().try_for_each(PulseSegment::validate)?;
        Ok(Self { segments })
    }

    pub fn single(segment: PulseSegment) -> Self {
        Self {
            segments: vec![segment],
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Start times of every segment plus the end time.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut t = 0.0;
        out.push(t);
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    pub fn then(mut self, other: &PulseSchedule) -> Self {
        self.segments.extend(other.segments.iter().cloned());
        self
    }

    /// Segment index and local time; a time on a boundary belongs to the
    /// later segment, except the end point.
    pub fn locate(&self, t: f64) -> Result<(usize, f64, f64), PulseError> {
        let total = self.total_duration();
        if !(0.0..=total).contains(&t) || self.segments.is_empty() {
            return Err(PulseError::TimeOutside { t, total });
        }
        let mut start = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            let end = start + s.duration;
            if t < end || i + 1 == self.segments.len() {
                return Ok((i, t - start, start));
            }
            start = end;
        }
        unreachable!("time located within total duration")
    }

    pub fn drive_amplitude(&self, t: f64) -> Result<f64, PulseError> {
        let (i, local, start) = self.locate(t)?;
        Ok(self.segments[i].amplitude(local, start))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// X = Sx + (γC/γe)·I_Cx + (γN/γe)·I_Nx on the 12-dim space.
pub fn drive_operator(model: &RegisterModel) -> OperatorMatrix {
    let s = make_spin_operators(2).expect("spin 1");
    let i = make_spin_operators(1).expect("spin 1/2");
    let mut x = embed(&s.sx, Slot::V).expect("V");
    x = &x + &embed(&i.sx.scale(model.gamma_c / model.gamma_e), Slot::C).expect("C");
    x = &x + &embed(&i.sx.scale(model.gamma_n / model.gamma_e), Slot::N).expect("N");
    x.with_unit(Unit::Dimensionless)
}

/// Two-level estimate of the duration for a rotation by `angle` (π = flip).
/// Angular rate in rad/ns of a frequency in MHz.
pub fn phase_rate(f_mhz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_mhz * MHZ_NS
}

pub fn rotation_time(omega0: f64, matrix_element: f64, angle: f64) -> f64 {
    angle / (2.0 * std::f64::consts::PI * omega0 * matrix_element * MHZ_NS)
}

/// Single tone at the exact eigen-transition frequency, timed for a rotation
/// by `angle` from the two-level estimate.
pub fn resonant_rotation(
    model: &RegisterModel,
    es: &Eigensystem,
    pair: (BasisLabel, BasisLabel),
    angle: f64,
    omega0: f64,
    phi0: f64,
) -> Result<PulseSegment, PulseError> {
    let tr = transition_between(es, model, pair.0, pair.1);
    if !tr.allowed {
        return Err(PulseError::Forbidden {
            lower: tr.lower,
            upper: tr.upper,
            element: tr.matrix_element,
        });
    }
    let t = rotation_time(omega0, tr.matrix_element, angle);
    PulseSegment::new(vec![Tone::new(omega0, tr.frequency, phi0)], t)
}

pub fn resonant_pi_pulse(
    model: &RegisterModel,
    pair: (BasisLabel, BasisLabel),
    omega0: f64,
    phi0: f64,
) -> Result<PulseSegment, PulseError> {
    let es = Eigensystem::of(model);
    resonant_rotation(model, &es, pair, std::f64::consts::PI, omega0, phi0)
}
