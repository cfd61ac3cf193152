// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Spin operator algebra and the V ⊗ C ⊗ N composite space.
//!
//! Tensor order is fixed: vacancy (spin 1, basis m_S = +1, 0, −1), then the
//! carbon and nitrogen nuclear spins (spin 1/2, basis ↑, ↓). Index of
//! `|m_S, m_C, m_N⟩` is `4·v + 2·c + n`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const DIM: usize = 12;
const ALLOWED_DIMS: [usize; 5] = [2, 3, 4, 6, 12];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("unsupported spin 2s = {0} (only 1 and 2 are implemented)")]
    UnsupportedSpin(u32),
    #[error("operator dimension {got} does not match slot {slot:?} (expects {expected})")]
    DimensionMismatch { slot: Slot, expected: usize, got: usize },
    #[error("operator dimension {0} is not one of 2, 3, 4, 6, 12")]
    BadDimension(usize),
    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid basis label: {0}")]
    InvalidLabel(String),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    Dimensionless,
    MHz,
    Density,
}

/// Dense complex square matrix with a unit tag.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    mat: CMat,
    unit: Unit,
}

impl OperatorMatrix {
    pub fn new(mat: CMat, unit: Unit) -> Result<Self, SpinError> {
        if mat.nrows() != mat.ncols() {
            return Err(SpinError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if !ALLOWED_DIMS.contains(&mat.nrows()) {
            return Err(SpinError::BadDimension(mat.nrows()));
        }
        let op = Self { mat, unit };
        if unit == Unit::Density {
            op.check_density(1e-9, 1e-8)?;
        }
        Ok(op)
    }

    /// Builds without validation. Callers guarantee shape, and density
    /// invariants when tagged as such.
    pub(crate) fn from_raw(mat: CMat, unit: Unit) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat, unit }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_raw(CMat::identity(dim, dim), Unit::Dimensionless)
    }

    pub fn zeros(dim: usize, unit: Unit) -> Self {
        Self::from_raw(CMat::zeros(dim, dim), unit)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.mat[(r, c)]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(&self.mat * C64::new(s, 0.0), self.unit)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self::from_raw(&self.mat * s, self.unit)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_raw(self.mat.adjoint(), self.unit)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self::from_raw(&self.mat * &other.mat - &other.mat * &self.mat, self.unit)
    }

    /// Largest entry magnitude of `self − self†`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.mat - self.mat.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> CMat {
        (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .hermitian_part()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn check_density(&self, trace_tol: f64, eig_tol: f64) -> Result<(), SpinError> {
        let herm = self.hermiticity_error();
        if herm > trace_tol {
            return Err(SpinError::NotDensity(format!("hermiticity error {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(SpinError::NotDensity(format!("trace {tr}")));
        }
        let min = self.eigenvalues_hermitian()[0];
        if min < -eig_tol {
            return Err(SpinError::NotDensity(format!("eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Kronecker product, `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_raw(self.mat.kronecker(&other.mat), self.unit)
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix::from_raw(&self.mat + &rhs.mat, self.unit)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix::from_raw(&self.mat - &rhs.mat, self.unit)
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        OperatorMatrix::from_raw(&self.mat * &rhs.mat, self.unit)
    }
}

/// Angular-momentum matrices for a single spin.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub dimension: usize,
    pub sx: OperatorMatrix,
    pub sy: OperatorMatrix,
    pub sz: OperatorMatrix,
    pub s_plus: OperatorMatrix,
    pub s_minus: OperatorMatrix,
}

/// Standard matrices in the basis m = s, s−1, …, −s.
pub fn make_spin_operators(two_s: u32) -> Result<SpinOperators, SpinError> {
    if two_s != 1 && two_s != 2 {
        return Err(SpinError::UnsupportedSpin(two_s));
    }
    let dim = two_s as usize + 1;
    let s = two_s as f64 / 2.0;
    let m = |i: usize| s - i as f64;
    let mut sz = CMat::zeros(dim, dim);
    let mut sp = CMat::zeros(dim, dim);
    for i in 0..dim {
        sz[(i, i)] = C64::new(m(i), 0.0);
    }
    // ⟨m+1|S+|m⟩ = sqrt(s(s+1) − m(m+1)); row i (larger m) couples column i+1.
    for i in 0..dim - 1 {
        let mj = m(i + 1);
        sp[(i, i + 1)] = C64::new((s * (s + 1.0) - mj * (mj + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.adjoint();
    let half = C64::new(0.5, 0.0);
    let sx = (&sp + &sm) * half;
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    let wrap = |m: CMat| OperatorMatrix::from_raw(m, Unit::Dimensionless);
    Ok(SpinOperators {
        dimension: dim,
        sx: wrap(sx),
        sy: wrap(sy),
        sz: wrap(sz),
        s_plus: wrap(sp),
        s_minus: wrap(sm),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    V,
    C,
    N,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::V, Slot::C, Slot::N];

    pub fn dim(self) -> usize {
        match self {
            Slot::V => 3,
            Slot::C | Slot::N => 2,
        }
    }
}

/// Acts as `op` on `slot` and as identity elsewhere.
pub fn embed(op: &OperatorMatrix, slot: Slot) -> Result<OperatorMatrix, SpinError> {
    if op.dim() != slot.dim() {
        return Err(SpinError::DimensionMismatch {
            slot,
            expected: slot.dim(),
            got: op.dim(),
        });
    }
    let i3 = OperatorMatrix::identity(3);
    let i2 = OperatorMatrix::identity(2);
    let out = match slot {
        Slot::V => op.kron(&i2).kron(&i2),
        Slot::C => i3.kron(op).kron(&i2),
        Slot::N => i3.kron(&i2).kron(op),
    };
    Ok(out.with_unit(op.unit()))
}

/// Vacancy projection m_S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ms {
    Plus,
    Zero,
    Minus,
}

impl Ms {
    pub const ALL: [Ms; 3] = [Ms::Plus, Ms::Zero, Ms::Minus];

    pub fn index(self) -> usize {
        match self {
            Ms::Plus => 0,
            Ms::Zero => 1,
            Ms::Minus => 2,
        }
    }

    pub fn value(self) -> i32 {
        1 - self.index() as i32
    }

    pub fn from_value(v: i32) -> Result<Self, SpinError> {
        match v {
            1 => Ok(Ms::Plus),
            0 => Ok(Ms::Zero),
            -1 => Ok(Ms::Minus),
            _ => Err(SpinError::InvalidLabel(format!("m_S = {v}"))),
        }
    }
}

/// Nuclear spin-1/2 projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Half {
    Up,
    Down,
}

impl Half {
    pub const ALL: [Half; 2] = [Half::Up, Half::Down];

    pub fn index(self) -> usize {
        match self {
            Half::Up => 0,
            Half::Down => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Half::Up => Half::Down,
            Half::Down => Half::Up,
        }
    }
}

/// Computational basis label |m_S, m_C, m_N⟩. Serialised as its display form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BasisLabel {
    pub ms: Ms,
    pub c: Half,
    pub n: Half,
}

impl BasisLabel {
    pub fn new(ms: Ms, c: Half, n: Half) -> Self {
        Self { ms, c, n }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = |x: Half| if x == Half::Up { "u" } else { "d" };
        let v = match self.ms {
            Ms::Plus => "+1",
            Ms::Zero => "0",
            Ms::Minus => "-1",
        };
        write!(f, "|{},{},{}>", v, h(self.c), h(self.n))
    }
}

impl std::str::FromStr for BasisLabel {
    type Err = SpinError;

    /// Accepts `+1,u,d`, `|0,d,d>`, `-1 up down` and similar.
    fn from_str(s: &str) -> Result<Self, SpinError> {
        let bad = || SpinError::InvalidLabel(s.to_string());
        let t = s.trim().trim_start_matches('|').trim_end_matches('>');
        let parts: Vec<&str> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let ms = match parts[0] {
            "+1" | "1" | "p" | "+" => Ms::Plus,
            "0" => Ms::Zero,
            "-1" | "m" | "-" => Ms::Minus,
            _ => return Err(bad()),
        };
        let half = |p: &str| match p {
            "u" | "up" | "↑" => Ok(Half::Up),
            "d" | "down" | "dn" | "↓" => Ok(Half::Down),
            _ => Err(bad()),
        };
        Ok(Self::new(ms, half(parts[1])?, half(parts[2])?))
    }
}

impl From<BasisLabel> for String {
    fn from(l: BasisLabel) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for BasisLabel {
    type Error = SpinError;

    fn try_from(s: String) -> Result<Self, SpinError> {
        s.parse()
    }
}

/// Label ↔ index map of the 12-dim register.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegisterLayout;

impl RegisterLayout {
    pub const DIM: usize = DIM;

    pub fn index(label: BasisLabel) -> usize {
        4 * label.ms.index() + 2 * label.c.index() + label.n.index()
    }

    pub fn label(index: usize) -> Result<BasisLabel, SpinError> {
        if index >= DIM {
            return Err(SpinError::InvalidLabel(format!("index {index}")));
        }
        Ok(BasisLabel::new(
            Ms::ALL[index / 4],
            Half::ALL[(index / 2) % 2],
            Half::ALL[index % 2],
        ))
    }

    pub fn labels() -> impl Iterator<Item = BasisLabel> {
        (0..DIM).map(|i| Self::label(i).expect("index in range"))
    }
}

/// Rank-1 projector onto a computational basis state.
pub fn basis_state(ms: i32, c: Half, n: Half) -> Result<OperatorMatrix, SpinError> {
    let label = BasisLabel::new(Ms::from_value(ms)?, c, n);
    Ok(projector(label))
}

pub fn projector(label: BasisLabel) -> OperatorMatrix {
    let i = RegisterLayout::index(label);
    let mut m = CMat::zeros(DIM, DIM);
    m[(i, i)] = C64::new(1.0, 0.0);
    OperatorMatrix::from_raw(m, Unit::Density)
}

/// Single-subsystem state vectors used to build product states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VacancyKet {
    Plus,
    Zero,
    Minus,
    /// (|0⟩ + |−1⟩)/√2
    XPlus,
    /// (|0⟩ − |−1⟩)/√2
    XMinus,
    /// (|0⟩ + i|−1⟩)/√2
    YPlus,
    /// (|0⟩ − i|−1⟩)/√2
    YMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NuclearKet {
    Up,
    Down,
    /// (|↑⟩ + |↓⟩)/√2
    XPlus,
    XMinus,
    /// (|↑⟩ + i|↓⟩)/√2
    YPlus,
    YMinus,
}

impl VacancyKet {
    pub fn vector(self) -> [C64; 3] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match self {
            VacancyKet::Plus => [one, z, z],
            VacancyKet::Zero => [z, one, z],
            VacancyKet::Minus => [z, z, one],
            VacancyKet::XPlus => [z, C64::new(r, 0.0), C64::new(r, 0.0)],
            VacancyKet::XMinus => [z, C64::new(r, 0.0), C64::new(-r, 0.0)],
            VacancyKet::YPlus => [z, C64::new(r, 0.0), C64::new(0.0, r)],
            VacancyKet::YMinus => [z, C64::new(r, 0.0), C64::new(0.0, -r)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VacancyKet::Plus => "+1",
            VacancyKet::Zero => "0",
            VacancyKet::Minus => "-1",
            VacancyKet::XPlus => "x+",
            VacancyKet::XMinus => "x-",
            VacancyKet::YPlus => "y+",
            VacancyKet::YMinus => "y-",
        }
    }
}

impl NuclearKet {
    pub fn vector(self) -> [C64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let one = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        match self {
            NuclearKet::Up => [one, z],
            NuclearKet::Down => [z, one],
            NuclearKet::XPlus => [C64::new(r, 0.0), C64::new(r, 0.0)],
            NuclearKet::XMinus => [C64::new(r, 0.0), C64::new(-r, 0.0)],
            NuclearKet::YPlus => [C64::new(r, 0.0), C64::new(0.0, r)],
            NuclearKet::YMinus => [C64::new(r, 0.0), C64::new(0.0, -r)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NuclearKet::Up => "u",
            NuclearKet::Down => "d",
            NuclearKet::XPlus => "x+",
            NuclearKet::XMinus => "x-",
            NuclearKet::YPlus => "y+",
            NuclearKet::YMinus => "y-",
        }
    }
}

/// Single-subsystem factor of a product density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor<K> {
    Pure(K),
    Mixed,
}

/// ρ_V ⊗ ρ_C ⊗ ρ_N built from pure kets or the maximally mixed state.
/// A mixed vacancy factor is the uniform mix over m_S = 0, −1 (the qubit subspace).
pub fn product_density(
    v: Factor<VacancyKet>,
    c: Factor<NuclearKet>,
    n: Factor<NuclearKet>,
) -> OperatorMatrix {
    let pure = |vec: &[C64]| {
        let k = nalgebra::DVector::from_column_slice(vec);
        &k * k.adjoint()
    };
    let rv = match v {
        Factor::Pure(k) => pure(&k.vector()),
        Factor::Mixed => CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
        ])),
    };
    let nuc = |f: Factor<NuclearKet>| match f {
        Factor::Pure(k) => pure(&k.vector()),
        Factor::Mixed => CMat::identity(2, 2) * C64::new(0.5, 0.0),
    };
    OperatorMatrix::from_raw(rv.kronecker(&nuc(c)).kronecker(&nuc(n)), Unit::Density)
}

/// 12-dim product ket |v⟩|c⟩|n⟩.
pub fn product_ket(v: VacancyKet, c: NuclearKet, n: NuclearKet) -> nalgebra::DVector<C64> {
    let a = nalgebra::DVector::from_column_slice(&v.vector());
    let b = nalgebra::DVector::from_column_slice(&c.vector());
    let d = nalgebra::DVector::from_column_slice(&n.vector());
    a.kronecker(&b).kronecker(&d)
}

pub fn ket_density(psi: &nalgebra::DVector<C64>) -> OperatorMatrix {
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    OperatorMatrix::from_raw(psi * psi.adjoint() * C64::new(1.0 / norm2, 0.0), Unit::Density)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &OperatorMatrix, b: &OperatorMatrix, tol: f64) -> bool {
        a.max_abs_diff(b) < tol
    }

    #[test]
    fn spin_half_and_one_matrices() {
        let h = make_spin_operators(1).unwrap();
        assert_eq!(h.sz.get(0, 0), C64::new(0.5, 0.0));
        assert_eq!(h.sz.get(1, 1), C64::new(-0.5, 0.0));
        let nz: Vec<_> = h.s_plus.matrix().iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(h.s_plus.get(0, 1), C64::new(1.0, 0.0));

        let one = make_spin_operators(2).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| one.sz.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        assert!(make_spin_operators(3).is_err());
    }

    #[test]
    fn commutation_and_casimir() {
        for two_s in [1u32, 2] {
            let s = make_spin_operators(two_s).unwrap();
            let i = C64::new(0.0, 1.0);
            assert!(close(&s.sx.commutator(&s.sy), &s.sz.scale_c(i), 1e-14));
            assert!(close(&s.sy.commutator(&s.sz), &s.sx.scale_c(i), 1e-14));
            assert!(close(&s.sz.commutator(&s.sx), &s.sy.scale_c(i), 1e-14));
            let spin = two_s as f64 / 2.0;
            let cas = &(&(&s.sx * &s.sx) + &(&s.sy * &s.sy)) + &(&s.sz * &s.sz);
            let id = OperatorMatrix::identity(s.dimension).scale(spin * (spin + 1.0));
            assert!(close(&cas, &id, 1e-12));
            let sp = &s.sx + &s.sy.scale_c(i);
            assert!(close(&sp, &s.s_plus, 1e-15));
            assert!(close(&s.s_plus.adjoint(), &s.s_minus, 1e-15));
            for op in [&s.sx, &s.sy, &s.sz] {
                assert_eq!(op.hermiticity_error(), 0.0);
            }
        }
    }

    #[test]
    fn embedding() {
        let v = make_spin_operators(2).unwrap();
        let c = make_spin_operators(1).unwrap();
        let ev = embed(&v.sz, Slot::V).unwrap().eigenvalues_hermitian();
        let mut expect = vec![-1.0; 4];
        expect.extend([0.0; 4]);
        expect.extend([1.0; 4]);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            embed(&OperatorMatrix::identity(2), Slot::C).unwrap(),
            OperatorMatrix::identity(12)
        );
        let comm = embed(&v.sz, Slot::V)
            .unwrap()
            .commutator(&embed(&c.sz, Slot::C).unwrap());
        assert_eq!(comm.max_abs_diff(&OperatorMatrix::zeros(12, Unit::Dimensionless)), 0.0);
        assert!(matches!(
            embed(&v.sx, Slot::N),
            Err(SpinError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn layout_round_trip() {
        for i in 0..DIM {
            let l = RegisterLayout::label(i).unwrap();
            assert_eq!(RegisterLayout::index(l), i);
            let parsed: BasisLabel = l.to_string().parse().unwrap();
            assert_eq!(parsed, l);
        }
        assert!(RegisterLayout::label(12).is_err());
        assert_eq!(
            RegisterLayout::index(BasisLabel::new(Ms::Zero, Half::Up, Half::Up)),
            4
        );
    }

    #[test]
    fn basis_projectors() {
        let p = basis_state(0, Half::Up, Half::Up).unwrap();
        assert_eq!(p.trace(), C64::new(1.0, 0.0));
        let a = basis_state(-1, Half::Down, Half::Down).unwrap();
        let b = basis_state(1, Half::Down, Half::Down).unwrap();
        assert_eq!((&a * &b).trace(), C64::new(0.0, 0.0));
        assert!(basis_state(2, Half::Up, Half::Up).is_err());

        let mut sum = OperatorMatrix::zeros(12, Unit::Dimensionless);
        for l in RegisterLayout::labels() {
            sum = &sum + &projector(l);
        }
        assert_eq!(sum.max_abs_diff(&OperatorMatrix::identity(12)), 0.0);

        let mixed = product_density(
            Factor::Pure(VacancyKet::Zero),
            Factor::Mixed,
            Factor::Pure(NuclearKet::Up),
        );
        let up = basis_state(0, Half::Up, Half::Up).unwrap();
        let down = basis_state(0, Half::Down, Half::Up).unwrap();
        let avg = (&up + &down).scale(0.5);
        assert!(mixed.max_abs_diff(&avg) < 1e-15);
        assert!(mixed.check_density(1e-12, 1e-12).is_ok());
    }

    #[test]
    fn density_validation() {
        let bad = OperatorMatrix::new(CMat::identity(12, 12), Unit::Density);
        assert!(matches!(bad, Err(SpinError::NotDensity(_))));
        assert!(matches!(
            OperatorMatrix::new(CMat::identity(5, 5), Unit::MHz),
            Err(SpinError::BadDimension(5))
        ));
    }
}
