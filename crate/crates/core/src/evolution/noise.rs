// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::spincore::{embed, CMat, OperatorMatrix, Slot, Unit, C64};

/// Prefactor c of the vacancy dephasing law γ(t) = c·t/T2*². With the two
/// channels below every vacancy coherence then decays as exp(−(t/T2*)²).
pub const GAUSSIAN_CALIBRATION: f64 = 2.0;

/// Per-subsystem relaxation and dephasing times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub enabled: bool,
    pub t1_v_ms: f64,
    pub t2star_v_us: f64,
    pub t1_c_s: f64,
    pub t1_n_s: f64,
    pub t2_c_ms: f64,
    pub t2_n_ms: f64,
    pub dephasing_calibration: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            t1_v_ms: 10.0,
            t2star_v_us: 100.0,
            t1_c_s: 10.0,
            t1_n_s: 10.0,
            t2_c_ms: 10.0,
            t2_n_ms: 10.0,
            dephasing_calibration: GAUSSIAN_CALIBRATION,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
#[error("noise time {name} must be positive and finite, got {value}")]
pub struct NoiseError {
    pub name: &'static str,
    pub value: f64,
}

impl NoiseSpec {
    pub fn off() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !self.enabled {
            return Ok(());
        }
        for (name, value) in [
            ("t1_v_ms", self.t1_v_ms),
            ("t2star_v_us", self.t2star_v_us),
            ("t1_c_s", self.t1_c_s),
            ("t1_n_s", self.t1_n_s),
            ("t2_c_ms", self.t2_c_ms),
            ("t2_n_ms", self.t2_n_ms),
            ("dephasing_calibration", self.dephasing_calibration),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(NoiseError { name, value });
            }
        }
        Ok(())
    }
}

/// Rate in 1/ns, either fixed or growing linearly with time since the start
/// of the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateLaw {
    Constant(f64),
    /// γ(t) = slope·t
    Linear { slope: f64 },
}

impl RateLaw {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            RateLaw::Constant(r) => r,
            RateLaw::Linear { slope } => slope * t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Channel {
    pub name: &'static str,
    pub slot: Slot,
    pub op: OperatorMatrix,
    pub law: RateLaw,
}

#[derive(Debug, Clone, Default)]
pub struct ChannelSet {
    pub channels: Vec<Channel>,
}

fn ket_bra(dim: usize, r: usize, c: usize) -> OperatorMatrix {
    let mut m = CMat::zeros(dim, dim);
    m[(r, c)] = C64::new(1.0, 0.0);
    OperatorMatrix::from_raw(m, Unit::Dimensionless)
}

fn diag(values: &[f64]) -> OperatorMatrix {
    let n = values.len();
    let mut m = CMat::zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = C64::new(*v, 0.0);
    }
    OperatorMatrix::from_raw(m, Unit::Dimensionless)
}

/// Lindblad channels on the 12-dim space.
///
/// Nuclear spins: σ⁺ and σ⁻ at 1/(2T1) each, plus σz/√2 at 1/T2 − 1/(2T1)
/// (floored at 0); the √2 makes the channel rate equal the coherence decay
/// rate. Vacancy: |0⟩⟨±1| and |±1⟩⟨0| at 1/(4T1) each, and the traceless
/// pair diag(1,0,−1)/√2, diag(1,−2,1)/√6 with γ(t) = c·t/T2*².
pub fn build_channels(noise: &NoiseSpec) -> ChannelSet {
    if !noise.enabled {
        return ChannelSet::default();
    }
    let mut channels = Vec::new();
    let mut push = |name, slot, op: OperatorMatrix, law| {
        channels.push(Channel {
            name,
            slot,
            op: embed(&op, slot).expect("slot dimension"),
            law,
        })
    };

    let t1v = noise.t1_v_ms * 1e6;
    let relax = RateLaw::Constant(1.0 / (4.0 * t1v));
    push("v_decay_plus", Slot::V, ket_bra(3, 1, 0), relax);
    push("v_excite_plus", Slot::V, ket_bra(3, 0, 1), relax);
    push("v_decay_minus", Slot::V, ket_bra(3, 1, 2), relax);
    push("v_excite_minus", Slot::V, ket_bra(3, 2, 1), relax);
    let t2s = noise.t2star_v_us * 1e3;
    let law = RateLaw::Linear {
        slope: noise.dephasing_calibration / (t2s * t2s),
    };
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let r6 = 1.0 / 6f64.sqrt();
    push("v_dephase_a", Slot::V, diag(&[r2, 0.0, -r2]), law);
    push("v_dephase_b", Slot::V, diag(&[r6, -2.0 * r6, r6]), law);

    for (slot, t1_s, t2_ms, names) in [
        (Slot::C, noise.t1_c_s, noise.t2_c_ms, ["c_lower", "c_raise", "c_dephase"]),
        (Slot::N, noise.t1_n_s, noise.t2_n_ms, ["n_lower", "n_raise", "n_dephase"]),
    ] {
        let t1 = t1_s * 1e9;
        let t2 = t2_ms * 1e6;
        let flip = RateLaw::Constant(1.0 / (2.0 * t1));
        push(names[0], slot, ket_bra(2, 1, 0), flip);
        push(names[1], slot, ket_bra(2, 0, 1), flip);
        let pure = (1.0 / t2 - 1.0 / (2.0 * t1)).max(0.0);
        if pure > 0.0 {
            push(names[2], slot, diag(&[r2, -r2]), RateLaw::Constant(pure));
        }
    }
    ChannelSet { channels }
}

impl ChannelSet {
    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Σ_k γ_k(t)·(L ρ L† − ½{L†L, ρ}) on comp-basis density matrices.
    pub fn dissipator(&self, rho: &CMat, t: f64) -> CMat {
        let mut out = CMat::zeros(rho.nrows(), rho.ncols());
        for ch in &self.channels {
            let l = ch.op.matrix();
            let ld = l.adjoint();
            let ldl = &ld * l;
            let g = ch.law.at(t);
            out += (l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0)) * C64::new(g, 0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_inventory() {
        let set = build_channels(&NoiseSpec::default());
        assert_eq!(set.channels.len(), 12);
        assert!(build_channels(&NoiseSpec::off()).is_empty());
        let v_total: f64 = set
            .channels
            .iter()
            .filter(|c| c.slot == Slot::V)
            .filter_map(|c| match c.law {
                RateLaw::Constant(r) => Some(r),
                _ => None,
            })
            .sum();
        assert!((v_total - 1.0 / 1e7).abs() < 1e-20);
        // dephasing pair: traceless, orthogonal, diagonal
        let a: Vec<_> = set.channels.iter().filter(|c| matches!(c.law, RateLaw::Linear { .. })).collect();
        assert_eq!(a.len(), 2);
        let prod = (a[0].op.matrix() * a[1].op.matrix()).trace();
        assert!(prod.norm() < 1e-12);
        for c in &a {
            assert!(c.op.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn dephasing_pair_gives_unit_coherence_weights() {
        // Σ over a, b of (l_j − l_k)² equals 2 for all three vacancy pairs.
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let r6 = 1.0 / 6f64.sqrt();
        let a = [r2, 0.0, -r2];
        let b = [r6, -2.0 * r6, r6];
        for (j, k) in [(0, 1), (0, 2), (1, 2)] {
            let s = (a[j] - a[k]).powi(2) + (b[j] - b[k]).powi(2);
            assert!((s - 2.0).abs() < 1e-12);
        }
    }
}
