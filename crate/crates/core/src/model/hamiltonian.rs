// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::spincore::{embed, make_spin_operators, OperatorMatrix, Slot, Unit};

/// ¹⁵N hyperfine constants (MHz) used by the presets.
pub const A_PARALLEL_15N: f64 = 3.03;
pub const A_PERP_15N: f64 = 3.65;

pub const THETA_NEAREST: f64 = 1.910_633_236_249_018_5; // arccos(−1/3)

/// Angle between the NV axis and the planar third-neighbour site at lattice
/// vector (a/4)(−3, 1, 1) relative to the vacancy, NV axis along [111].
pub fn theta_third_neighbor() -> f64 {
    (-1.0 / 33f64.sqrt()).acos()
}

/// Carbon hyperfine tensor, either principal values plus the NV/bond angle
/// or the four NV-frame coefficients given directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case", deny_unknown_fields)]
pub enum HyperfineTensor {
    Principal {
        c_parallel: f64,
        c_perp: f64,
        theta: f64,
    },
    NvFrame {
        c_parallel: f64,
        c_perp: f64,
        c_r: f64,
        c_delta: f64,
    },
}

/// NV-frame coefficients (C∥(θ), C⊥(θ), C_R(θ), C_Δ(θ)) in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvFrameCoefficients {
    pub c_parallel: f64,
    pub c_perp: f64,
    pub c_r: f64,
    pub c_delta: f64,
}

pub fn nv_frame_coefficients(c_parallel: f64, c_perp: f64, theta: f64) -> NvFrameCoefficients {
    let (s, c) = theta.sin_cos();
    let (s2, c2) = (s * s, c * c);
    NvFrameCoefficients {
        c_parallel: c_parallel * c2 + c_perp * s2,
        c_perp: 0.5 * (c_perp * (1.0 + c2) + c_parallel * s2),
        c_r: 0.5 * (c_perp * (1.0 - c2) - c_parallel * s2),
        c_delta: (c_perp - c_parallel) * s * c,
    }
}

impl HyperfineTensor {
    pub fn nv_frame(&self) -> NvFrameCoefficients {
        match *self {
            HyperfineTensor::Principal {
                c_parallel,
                c_perp,
                theta,
            } => nv_frame_coefficients(c_parallel, c_perp, theta),
            HyperfineTensor::NvFrame {
                c_parallel,
                c_perp,
                c_r,
                c_delta,
            } => NvFrameCoefficients {
                c_parallel,
                c_perp,
                c_r,
                c_delta,
            },
        }
    }

    pub fn zero() -> Self {
        HyperfineTensor::NvFrame {
            c_parallel: 0.0,
            c_perp: 0.0,
            c_r: 0.0,
            c_delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarbonSite {
    NearestNeighbor,
    ThirdNeighbor,
    Custom,
}

/// Physical parameters of the static Hamiltonian. Frequencies in MHz, field
/// in mT, gyromagnetic ratios in MHz/mT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterModel {
    pub d: f64,
    #[serde(default)]
    pub e: f64,
    pub b: f64,
    pub gamma_e: f64,
    pub gamma_c: f64,
    pub gamma_n: f64,
    pub a_parallel: f64,
    pub a_perp: f64,
    pub carbon: HyperfineTensor,
    pub site: CarbonSite,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("zero-field splitting D must be positive, got {0}")]
    NonPositiveD(f64),
    #[error("magnetic field must be non-negative, got {0}")]
    NegativeField(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
}

impl RegisterModel {
    pub const D_DEFAULT: f64 = 2880.0;
    pub const GAMMA_E: f64 = 28.0;
    pub const GAMMA_C: f64 = 0.0106;
    pub const GAMMA_N: f64 = -0.0043;

    fn preset(b: f64, carbon: HyperfineTensor, site: CarbonSite) -> Self {
        Self {
            d: Self::D_DEFAULT,
            e: 0.0,
            b,
            gamma_e: Self::GAMMA_E,
            gamma_c: Self::GAMMA_C,
            gamma_n: Self::GAMMA_N,
            a_parallel: A_PARALLEL_15N,
            a_perp: A_PERP_15N,
            carbon,
            site,
        }
    }

    pub fn nearest_neighbor(b: f64) -> Self {
        Self::preset(
            b,
            HyperfineTensor::Principal {
                c_parallel: 199.0,
                c_perp: 123.0,
                theta: THETA_NEAREST,
            },
            CarbonSite::NearestNeighbor,
        )
    }

    pub fn third_neighbor(b: f64) -> Self {
        Self::preset(
            b,
            HyperfineTensor::Principal {
                c_parallel: 18.5,
                c_perp: 13.26,
                theta: theta_third_neighbor(),
            },
            CarbonSite::ThirdNeighbor,
        )
    }

    /// Bare vacancy: no hyperfine couplings, no nuclear Zeeman terms.
    pub fn bare(b: f64) -> Self {
        Self {
            gamma_c: 0.0,
            gamma_n: 0.0,
            a_parallel: 0.0,
            a_perp: 0.0,
            ..Self::preset(b, HyperfineTensor::zero(), CarbonSite::Custom)
        }
    }

    pub fn with_field(&self, b: f64) -> Self {
        Self { b, ..self.clone() }
    }

    pub fn with_strain(&self, e: f64) -> Self {
        Self { e, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("d", self.d),
            ("e", self.e),
            ("b", self.b),
            ("gamma_e", self.gamma_e),
            ("gamma_c", self.gamma_c),
            ("gamma_n", self.gamma_n),
            ("a_parallel", self.a_parallel),
            ("a_perp", self.a_perp),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        let c = self.carbon.nv_frame();
        if ![c.c_parallel, c.c_perp, c.c_r, c.c_delta]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(ModelError::NonFinite("carbon"));
        }
        if self.d <= 0.0 {
            return Err(ModelError::NonPositiveD(self.d));
        }
        if self.b < 0.0 {
            return Err(ModelError::NegativeField(self.b));
        }
        Ok(())
    }
}

/// Product of a vacancy operator with a nuclear operator on `slot`.
fn vn(a: &OperatorMatrix, slot: Slot, b: &OperatorMatrix) -> OperatorMatrix {
    let va = embed(a, Slot::V).expect("vacancy operator");
    let nb = embed(b, slot).expect("nuclear operator");
    &va * &nb
}

/// Static 12×12 Hamiltonian in MHz.
pub fn build_static_hamiltonian(model: &RegisterModel) -> OperatorMatrix {
    let s = make_spin_operators(2).expect("spin 1");
    let i = make_spin_operators(1).expect("spin 1/2");
    let sz2 = &s.sz * &s.sz;
    let strain = &(&s.sx * &s.sx) - &(&s.sy * &s.sy);
    let hv = &(&sz2.scale(model.d) + &strain.scale(0.5 * model.e)) + &s.sz.scale(model.gamma_e * model.b);
    let mut h = embed(&hv, Slot::V).expect("V");
    h = &h + &embed(&i.sz.scale(model.gamma_c * model.b), Slot::C).expect("C");
    h = &h + &embed(&i.sz.scale(model.gamma_n * model.b), Slot::N).expect("N");

    let flipflop = |slot| &vn(&s.s_plus, slot, &i.s_minus) + &vn(&s.s_minus, slot, &i.s_plus);

    h = &h + &vn(&s.sz, Slot::N, &i.sz).scale(model.a_parallel);
    h = &h + &flipflop(Slot::N).scale(0.5 * model.a_perp);

    let c = model.carbon.nv_frame();
    h = &h + &vn(&s.sz, Slot::C, &i.sz).scale(c.c_parallel);
    h = &h + &flipflop(Slot::C).scale(0.5 * c.c_perp);
    let flipflip = &vn(&s.s_plus, Slot::C, &i.s_plus) + &vn(&s.s_minus, Slot::C, &i.s_minus);
    h = &h + &flipflip.scale(0.5 * c.c_r);
    let tilt = &vn(&s.sz, Slot::C, &i.sy) + &vn(&s.sy, Slot::C, &i.sz);
    h = &h + &tilt.scale(c.c_delta);
    h.with_unit(Unit::MHz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spincore::{BasisLabel, Half, Ms, RegisterLayout};

    #[test]
    fn coefficients_limits() {
        let a = nv_frame_coefficients(199.0, 123.0, 0.0);
        assert_eq!((a.c_parallel, a.c_perp, a.c_r, a.c_delta), (199.0, 123.0, 0.0, 0.0));
        let b = nv_frame_coefficients(199.0, 123.0, std::f64::consts::FRAC_PI_2);
        assert!((b.c_parallel - 123.0).abs() < 1e-12);
        assert!(b.c_delta.abs() < 1e-12);
    }

    #[test]
    fn nearest_neighbor_coefficients() {
        let c = nv_frame_coefficients(199.0, 123.0, THETA_NEAREST);
        // Hand evaluation with cos²θ = 1/9, sin²θ = 8/9, sinθcosθ = −√8/9.
        let s8 = 8f64.sqrt();
        assert!((c.c_parallel - (199.0 / 9.0 + 123.0 * 8.0 / 9.0)).abs() < 1e-9);
        assert!((c.c_perp - 0.5 * (123.0 * 10.0 / 9.0 + 199.0 * 8.0 / 9.0)).abs() < 1e-9);
        assert!((c.c_r - 0.5 * (123.0 * 8.0 / 9.0 - 199.0 * 8.0 / 9.0)).abs() < 1e-9);
        assert!((c.c_delta - (123.0 - 199.0) * (-s8 / 9.0)).abs() < 1e-9);
        assert!((c.c_parallel - 131.444).abs() < 1e-3);
        assert!((c.c_perp - 156.778).abs() < 1e-3);
        assert!((c.c_r + 33.778).abs() < 1e-3);
        assert!((c.c_delta - 23.884).abs() < 1e-3);
        assert!((THETA_NEAREST - (-1.0f64 / 3.0).acos()).abs() < 1e-15);
    }

    #[test]
    fn trace_identity() {
        for &(p, q, t) in &[(199.0, 123.0, 1.9), (18.5, 13.26, 1.74), (-5.0, 40.0, 0.3)] {
            let c = nv_frame_coefficients(p, q, t);
            assert!((c.c_parallel + 2.0 * c.c_perp - (p + 2.0 * q)).abs() < 1e-9);
        }
    }

    #[test]
    fn hermitian_and_bare_spectrum() {
        let h = build_static_hamiltonian(&RegisterModel::nearest_neighbor(25.0));
        assert!(h.hermiticity_error() < 1e-12);
        let h0 = build_static_hamiltonian(&RegisterModel::bare(0.0));
        let ev = h0.eigenvalues_hermitian();
        for (k, e) in ev.iter().enumerate() {
            let expect = if k < 4 { 0.0 } else { 2880.0 };
            assert!((e - expect).abs() < 1e-9);
        }
        let b = 17.0;
        let hb = build_static_hamiltonian(&RegisterModel::bare(b));
        for l in RegisterLayout::labels() {
            let i = RegisterLayout::index(l);
            let m = l.ms.value() as f64;
            let expect = 2880.0 * m * m + 28.0 * b * m;
            assert!((hb.get(i, i).re - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn coupling_matrix_elements() {
        let m = RegisterModel::nearest_neighbor(0.0);
        let c = m.carbon.nv_frame();
        let h = build_static_hamiltonian(&m);
        let idx = |ms, cc, n| RegisterLayout::index(BasisLabel::new(ms, cc, n));
        // ⟨0,↓|H|+1,↑⟩ via S⁻I⁺... S⁺I⁻ maps |0,↑⟩ → √2|+1,↓⟩ with weight C⊥/2.
        let a = idx(Ms::Plus, Half::Down, Half::Up);
        let b = idx(Ms::Zero, Half::Up, Half::Up);
        assert!((h.get(a, b).re - c.c_perp / 2.0 * 2f64.sqrt()).abs() < 1e-12);
        // S⁺I⁺ maps |0,↓⟩ → √2|+1,↑⟩ with weight C_R/2.
        let a = idx(Ms::Plus, Half::Up, Half::Up);
        let b = idx(Ms::Zero, Half::Down, Half::Up);
        assert!((h.get(a, b).re - c.c_r / 2.0 * 2f64.sqrt()).abs() < 1e-12);
        // Sz·I_y between |+1,↑⟩ and |+1,↓⟩: C_Δ·(1)·(−i/2).
        let a = idx(Ms::Plus, Half::Up, Half::Down);
        let b = idx(Ms::Plus, Half::Down, Half::Down);
        assert!((h.get(a, b).im + c.c_delta / 2.0).abs() < 1e-12);
    }

    #[test]
    fn third_neighbor_angle() {
        let t = theta_third_neighbor();
        let v = [-3.0f64, 1.0, 1.0];
        let n = [1.0f64, 1.0, 1.0];
        let dot: f64 = v.iter().zip(&n).map(|(a, b)| a * b).sum();
        let cos = dot / (11f64.sqrt() * 3f64.sqrt());
        assert!((t.cos() - cos).abs() < 1e-14);
        assert!((t.to_degrees() - 100.025).abs() < 1e-3);
    }
}
