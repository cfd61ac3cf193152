// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense helpers on top of nalgebra: Hermitian eigensystems, matrix functions,
//! and an exact small assignment solver.

use nalgebra::DVector;

use crate::spincore::{CMat, C64};

/// Eigenpairs of a Hermitian matrix, ascending. Each eigenvector is rotated so
/// its largest component is real and positive.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[j]);
        let col = eig.eigenvectors.column(j);
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
        let ph = col[imax].conj() / col[imax].norm();
        let fixed: DVector<C64> = col * ph;
        vecs.set_column(k, &fixed);
    }
    (vals, vecs)
}

/// exp(−2πi·H·t) for Hermitian H, with H·t measured in cycles.
pub fn unitary_from_hamiltonian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(h);
    let phases = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&e| C64::from_polar(1.0, -2.0 * std::f64::consts::PI * e * t)),
    );
    &vecs * CMat::from_diagonal(&phases) * vecs.adjoint()
}

/// Principal square root of the PSD part of a Hermitian matrix. Eigenvalues
/// at or below the round-off floor n·ε·λ_max are clamped to zero.
pub fn sqrt_psd(a: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(a);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let floor = vals.len() as f64 * f64::EPSILON * top;
    let d = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&e| C64::new(if e > floor { e.sqrt() } else { 0.0 }, 0.0)),
    );
    &vecs * CMat::from_diagonal(&d) * vecs.adjoint()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Maximises Σ w[i][perm[i]] over permutations (n ≤ 16) by subset DP.
/// Ties resolve towards the lexicographically first choice, deterministically.
pub fn max_weight_assignment(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    assert!(n <= 16, "assignment solver sized for small registers");
    let full = 1usize << n;
    // best[mask] = best score assigning rows 0..popcount(mask) to columns in mask
    let mut best = vec![f64::NEG_INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for mask in 0..full {
        if best[mask] == f64::NEG_INFINITY {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        for col in 0..n {
            if mask & (1 << col) != 0 {
                continue;
            }
            let next = mask | (1 << col);
            let score = best[mask] + w[row][col];
            if score > best[next] + 1e-15 {
                best[next] = score;
                choice[next] = col;
            }
        }
    }
    let mut perm = vec![0; n];
    let mut mask = full - 1;
    for row in (0..n).rev() {
        let col = choice[mask];
        perm[row] = col;
        mask &= !(1 << col);
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_matches_brute_force() {
        let w = vec![
            vec![0.1, 0.9, 0.3, 0.0],
            vec![0.8, 0.85, 0.1, 0.2],
            vec![0.0, 0.2, 0.4, 0.6],
            vec![0.3, 0.1, 0.7, 0.5],
        ];
        let p = max_weight_assignment(&w);
        let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| w[i][j]).sum::<f64>();
        let mut best = f64::NEG_INFINITY;
        let mut idx = [0, 1, 2, 3];
        permute(&mut idx, 0, &mut |q| best = best.max(score(q)));
        assert!((score(&p) - best).abs() < 1e-15);
    }

    fn permute(a: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize])) {
        if k == a.len() {
            f(a);
            return;
        }
        for i in k..a.len() {
            a.swap(k, i);
            permute(a, k + 1, f);
            a.swap(k, i);
        }
    }

    #[test]
    fn sqrt_and_exp() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 0)] = C64::new(2.0, 0.0);
        a[(0, 1)] = C64::new(0.0, 1.0);
        a[(1, 0)] = C64::new(0.0, -1.0);
        a[(1, 1)] = C64::new(2.0, 0.0);
        let r = sqrt_psd(&a);
        assert!(max_abs(&(&r * &r - &a)) < 1e-12);
        let u = unitary_from_hamiltonian(&a, 0.37);
        assert!(max_abs(&(&u * u.adjoint() - CMat::identity(2, 2))) < 1e-12);
        let direct = (a * C64::new(0.0, -2.0 * std::f64::consts::PI * 0.37)).exp();
        assert!(max_abs(&(u - direct)) < 1e-10);
    }
}
