// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{build_static_hamiltonian, RegisterModel};
use crate::linalg::{hermitian_eigen, max_weight_assignment};
use crate::spincore::{BasisLabel, CMat, OperatorMatrix, RegisterLayout, C64, DIM};

/// Eigenpairs of the static Hamiltonian with each eigenstate labelled by
/// the computational basis state it continues from. Labels come from the
/// assignment maximising total squared overlap, so they stay a bijection
/// even where states are strongly mixed.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub energies: Vec<f64>,
    pub vectors: CMat,
    labels: Vec<BasisLabel>,
    by_basis: [usize; DIM],
}

impl Eigensystem {
    pub fn new(h: &OperatorMatrix) -> Self {
        let (energies, vectors) = hermitian_eigen(h.matrix());
        let w: Vec<Vec<f64>> = (0..DIM)
            .map(|k| (0..DIM).map(|i| vectors[(i, k)].norm_sqr()).collect())
            .collect();
        let perm = max_weight_assignment(&w);
        let mut by_basis = [0; DIM];
        let labels = perm
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                by_basis[i] = k;
                RegisterLayout::label(i).expect("index")
            })
            .collect();
        Self {
            energies,
            vectors,
            labels,
            by_basis,
        }
    }

    pub fn of(model: &RegisterModel) -> Self {
        Self::new(&build_static_hamiltonian(model))
    }

    pub fn label(&self, k: usize) -> BasisLabel {
        self.labels[k]
    }

    pub fn eigen_index(&self, label: BasisLabel) -> usize {
        self.by_basis[RegisterLayout::index(label)]
    }

    pub fn energy(&self, label: BasisLabel) -> f64 {
        self.energies[self.eigen_index(label)]
    }

    pub fn state(&self, label: BasisLabel) -> DVector<C64> {
        self.vectors.column(self.eigen_index(label)).into_owned()
    }

    /// |e⟩⟨e| of the eigenstate carrying `label`, in the computational basis.
    pub fn eigen_density(&self, label: BasisLabel) -> CMat {
        let v = self.state(label);
        &v * v.adjoint()
    }

    pub fn z_fidelity(&self, k: usize) -> f64 {
        z_fidelity(&self.vectors.column(k).into_owned())
    }

    /// ⟨a|op|b⟩ between dressed states.
    pub fn matrix_element(&self, op: &CMat, a: BasisLabel, b: BasisLabel) -> C64 {
        let va = self.state(a);
        let vb = self.state(b);
        (va.adjoint() * op * vb)[(0, 0)]
    }

    /// Unitary whose column i is the dressed state labelled by basis index i.
    pub fn dressed_basis(&self) -> CMat {
        let mut w = CMat::zeros(DIM, DIM);
        for i in 0..DIM {
            w.set_column(i, &self.vectors.column(self.by_basis[i]));
        }
        w
    }

    /// Energies reordered by basis label index.
    pub fn dressed_energies(&self) -> [f64; DIM] {
        let mut e = [0.0; DIM];
        for (i, slot) in e.iter_mut().enumerate() {
            *slot = self.energies[self.by_basis[i]];
        }
        e
    }
}

/// Largest squared overlap with any computational basis state.
pub fn z_fidelity(v: &DVector<C64>) -> f64 {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    v.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max) / norm
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LevelError {
    #[error("B grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("level tracking lost between B = {b0} and {b1} mT (overlap {overlap:.3})")]
    Tracking { b0: f64, b1: f64, overlap: f64 },
}

/// Levels versus field, ordered by adiabatic continuation from the first
/// grid point (ascending energy there).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelScan {
    pub b_grid: Vec<f64>,
    /// energies[point][level], MHz
    pub energies: Vec<Vec<f64>>,
    pub z_fidelity: Vec<Vec<f64>>,
    /// Computational label of each tracked level at the first grid point.
    pub labels: Vec<BasisLabel>,
    #[serde(skip)]
    pub vectors: Vec<CMat>,
}

const OVERLAP_THRESHOLD: f64 = 0.5;
const MAX_BISECTIONS: usize = 24;

fn eigen_at(model: &RegisterModel, b: f64) -> (Vec<f64>, CMat) {
    hermitian_eigen(build_static_hamiltonian(&model.with_field(b)).matrix())
}

/// Reorders (vals, vecs) so column j continues tracked level j of `prev`.
/// Returns the smallest overlap in the chosen assignment.
fn match_levels(prev: &(Vec<f64>, CMat), next: &(Vec<f64>, CMat)) -> (Vec<usize>, f64) {
    let ov = prev.1.adjoint() * &next.1;
    let scale = prev.0.iter().chain(&next.0).map(|e| e.abs()).fold(1.0, f64::max);
    let w: Vec<Vec<f64>> = (0..DIM)
        .map(|i| {
            (0..DIM)
                .map(|j| ov[(i, j)].norm_sqr() - 1e-9 * (prev.0[i] - next.0[j]).abs() / scale)
                .collect()
        })
        .collect();
    let perm = max_weight_assignment(&w);
    let min = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| ov[(i, j)].norm_sqr())
        .fold(1.0, f64::min);
    (perm, min)
}

fn reorder(e: &(Vec<f64>, CMat), perm: &[usize]) -> (Vec<f64>, CMat) {
    let mut vecs = CMat::zeros(DIM, DIM);
    let mut vals = vec![0.0; DIM];
    for (i, &j) in perm.iter().enumerate() {
        vals[i] = e.0[j];
        vecs.set_column(i, &e.1.column(j));
    }
    (vals, vecs)
}

fn step_tracked(
    model: &RegisterModel,
    b0: f64,
    prev: &(Vec<f64>, CMat),
    b1: f64,
    next: (Vec<f64>, CMat),
    depth: usize,
) -> Result<(Vec<f64>, CMat), LevelError> {
    let (perm, min) = match_levels(prev, &next);
    if min >= OVERLAP_THRESHOLD {
        return Ok(reorder(&next, &perm));
    }
    if depth >= MAX_BISECTIONS {
        return Err(LevelError::Tracking {
            b0,
            b1,
            overlap: min,
        });
    }
    let bm = 0.5 * (b0 + b1);
    let mid = step_tracked(model, b0, prev, bm, eigen_at(model, bm), depth + 1)?;
    step_tracked(model, bm, &mid, b1, next, depth + 1)
}

/// Diagonalises on every grid point (in parallel) and stitches levels by
/// maximal successive overlap. Steps whose overlap drops below 0.5 are
/// bisected before giving up.
pub fn scan_levels(model: &RegisterModel, b_grid: &[f64]) -> Result<LevelScan, LevelError> {
    if b_grid.is_empty() || b_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LevelError::BadGrid);
    }
    let raw: Vec<(Vec<f64>, CMat)> = b_grid.par_iter().map(|&b| eigen_at(model, b)).collect();
    let first = Eigensystem::new(&build_static_hamiltonian(&model.with_field(b_grid[0])));
    let labels: Vec<BasisLabel> = (0..DIM).map(|k| first.label(k)).collect();
    let mut tracked = Vec::with_capacity(raw.len());
    let mut iter = raw.into_iter();
    tracked.push(iter.next().expect("non-empty"));
    for (k, next) in iter.enumerate() {
        let step = step_tracked(model, b_grid[k], &tracked[k], b_grid[k + 1], next, 0)?;
        tracked.push(step);
    }
    let energies = tracked.iter().map(|t| t.0.clone()).collect();
    let z_fid = tracked
        .iter()
        .map(|t| (0..DIM).map(|k| z_fidelity(&t.1.column(k).into_owned())).collect())
        .collect();
    Ok(LevelScan {
        b_grid: b_grid.to_vec(),
        energies,
        z_fidelity: z_fid,
        labels,
        vectors: tracked.into_iter().map(|t| t.1).collect(),
    })
}

impl LevelScan {
    /// Smallest gap between any two tracked levels, with its field and levels.
    pub fn minimum_gap(&self) -> Option<(f64, f64, usize, usize)> {
        let mut best: Option<(f64, f64, usize, usize)> = None;
        for (p, e) in self.energies.iter().enumerate() {
            let mut order: Vec<usize> = (0..e.len()).collect();
            order.sort_by(|&a, &b| e[a].total_cmp(&e[b]));
            for w in order.windows(2) {
                let g = e[w[1]] - e[w[0]];
                if best.is_none_or(|bst| g < bst.1) {
                    best = Some((self.b_grid[p], g, w[0], w[1]));
                }
            }
        }
        best
    }
}

/// Which spin flips an avoided crossing mixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    /// Δm_S = 2, between the m_S = ±1 manifolds.
    Strain,
    /// Δm_S = 1, between m_S = 0 and m_S = ±1.
    Exchange,
    /// Δm_S = 0, nuclear-only mixing.
    Nuclear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub b: f64,
    pub gap: f64,
    /// Index of the lower level in energy order; the partner is `lower + 1`.
    pub lower: usize,
    pub kind: CrossingKind,
    /// Dominant computational label of level `lower` on either side of the crossing, sorted.
    pub states: (BasisLabel, BasisLabel),
}

impl AvoidedCrossing {
    /// Both sides carry the same nuclear labels, so only the electron spin flips.
    pub fn conserves_nuclear(&self) -> bool {
        let (a, b) = self.states;
        a.c == b.c && a.n == b.n
    }

    pub fn conserves_carbon(&self) -> bool {
        self.states.0.c == self.states.1.c
    }
}

/// Mean field of the crossings of `kind` that pass `keep`.
pub fn crossing_family_field(
    crossings: &[AvoidedCrossing],
    kind: CrossingKind,
    keep: impl Fn(&AvoidedCrossing) -> bool,
) -> Option<f64> {
    let bs: Vec<f64> = crossings.iter().filter(|x| x.kind == kind && keep(x)).map(|x| x.b).collect();
    (!bs.is_empty()).then(|| bs.iter().sum::<f64>() / bs.len() as f64)
}

fn sorted_gap(model: &RegisterModel, b: f64, k: usize) -> f64 {
    let (e, _) = eigen_at(model, b);
    e[k + 1] - e[k]
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Local minima of adjacent-level gaps on `[b_lo, b_hi]`, refined by golden
/// section and classified by the m_S content of the mixed pair.
pub fn find_avoided_crossings(
    model: &RegisterModel,
    b_lo: f64,
    b_hi: f64,
    points: usize,
) -> Vec<AvoidedCrossing> {
    let points = points.max(3);
    let grid: Vec<f64> = (0..points)
        .map(|i| b_lo + (b_hi - b_lo) * i as f64 / (points - 1) as f64)
        .collect();
    let gaps: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&b| {
            let (e, _) = eigen_at(model, b);
            e.windows(2).map(|w| w[1] - w[0]).collect()
        })
        .collect();
    let mut out = Vec::new();
    for k in 0..DIM - 1 {
        for i in 1..points - 1 {
            let (g0, g1, g2) = (gaps[i - 1][k], gaps[i][k], gaps[i + 1][k]);
            if !(g1 < g0 && g1 <= g2) {
                continue;
            }
            let b = golden_min(|x| sorted_gap(model, x, k), grid[i - 1], grid[i + 1], 80);
            let (e, _) = eigen_at(model, b);
            let gap = e[k + 1] - e[k];
            // Character of level k well before and after the crossing.
            let delta = (grid[1] - grid[0]).max(gap / model.gamma_e.abs().max(1e-12));
            let dominant = |x: f64| {
                let (_, v) = eigen_at(model, x.max(0.0));
                let i = (0..DIM).max_by(|&p, &q| v[(p, k)].norm_sqr().total_cmp(&v[(q, k)].norm_sqr())).expect("dim");
                RegisterLayout::label(i).expect("index")
            };
            let (a, c) = (dominant(b - delta), dominant(b + delta));
            let kind = match (a.ms.value() - c.ms.value()).abs() {
                2 => CrossingKind::Strain,
                1 => CrossingKind::Exchange,
                _ => CrossingKind::Nuclear,
            };
            out.push(AvoidedCrossing {
                b,
                gap,
                lower: k,
                kind,
                states: (a.min(c), a.max(c)),
            });
        }
    }
    out.sort_by(|x, y| x.b.total_cmp(&y.b).then(x.lower.cmp(&y.lower)));
    out
}

/// Gap of the pair `lower, lower+1` minimised near `b`.
pub fn crossing_gap_near(model: &RegisterModel, b: f64, half_width: f64, lower: usize) -> (f64, f64) {
    let lo = (b - half_width).max(0.0);
    let bmin = golden_min(|x| sorted_gap(model, x, lower), lo, b + half_width, 80);
    (bmin, sorted_gap(model, bmin, lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_fidelity_examples() {
        let mut v = DVector::from_element(12, C64::new(0.0, 0.0));
        v[3] = C64::new(1.0, 0.0);
        assert_eq!(z_fidelity(&v), 1.0);
        v[5] = C64::new(0.0, 1.0);
        assert!((z_fidelity(&v) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nearest_neighbor_medium_field_is_nearly_product() {
        let es = Eigensystem::of(&RegisterModel::nearest_neighbor(25.0));
        for k in 0..DIM {
            assert!(es.z_fidelity(k) > 0.98, "level {k}: {}", es.z_fidelity(k));
        }
        let w = es.dressed_basis();
        assert!(crate::linalg::max_abs(&(w.adjoint() * &w - CMat::identity(12, 12))) < 1e-12);
    }

    #[test]
    fn zeeman_splitting_far_from_crossings() {
        let m = RegisterModel::third_neighbor(50.0);
        let es = Eigensystem::of(&m);
        let plus: f64 = RegisterLayout::labels()
            .filter(|l| l.ms == crate::spincore::Ms::Plus)
            .map(|l| es.energy(l))
            .sum::<f64>()
            / 4.0;
        let minus: f64 = RegisterLayout::labels()
            .filter(|l| l.ms == crate::spincore::Ms::Minus)
            .map(|l| es.energy(l))
            .sum::<f64>()
            / 4.0;
        assert!(((plus - minus) - 2.0 * 28.0 * 50.0).abs() < 1.0);
    }

    #[test]
    fn tracking_follows_bare_crossing() {
        // No hyperfine coupling: |−1⟩ crosses |0⟩ at D/γe without mixing.
        let model = RegisterModel {
            gamma_c: RegisterModel::GAMMA_C,
            gamma_n: RegisterModel::GAMMA_N,
            ..RegisterModel::bare(0.0)
        };
        let grid: Vec<f64> = (0..=60).map(|i| 90.0 + 0.5 * i as f64).collect();
        let scan = scan_levels(&model, &grid).unwrap();
        let slope: Vec<f64> = (0..DIM)
            .map(|l| (scan.energies[60][l] - scan.energies[0][l]) / 30.0)
            .collect();
        for s in slope {
            assert!(s.abs() < 0.02 || (s.abs() - 28.0).abs() < 0.02, "slope {s}");
        }
        assert!(scan_levels(&RegisterModel::bare(0.0), &[1.0, 1.0]).is_err());
    }
}
