// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Static Hamiltonian of the register and its eigen-analysis.

mod hamiltonian;
mod levels;

pub use hamiltonian::*;
pub use levels::*;

use serde::{Deserialize, Serialize};

use crate::pulses::drive_operator;
use crate::spincore::BasisLabel;

/// Matrix elements of the drive operator below this are treated as forbidden.
pub const ALLOWED_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub lower: BasisLabel,
    pub upper: BasisLabel,
    /// E_upper − E_lower, MHz
    pub frequency: f64,
    /// |⟨upper|X|lower⟩| with X the dimensionless drive operator
    pub matrix_element: f64,
    pub allowed: bool,
}

/// All 66 level pairs of the dressed spectrum, ordered by frequency.
pub fn transition_table(model: &RegisterModel) -> Vec<Transition> {
    let es = Eigensystem::of(model);
    transitions_of(&es, model)
}

pub fn transitions_of(es: &Eigensystem, model: &RegisterModel) -> Vec<Transition> {
    let x = drive_operator(model);
    let mut out = Vec::with_capacity(66);
    for i in 0..12 {
        for j in i + 1..12 {
            let (lo, hi) = (es.label(i), es.label(j));
            let m = es.matrix_element(x.matrix(), hi, lo).norm();
            out.push(Transition {
                lower: lo,
                upper: hi,
                frequency: es.energies[j] - es.energies[i],
                matrix_element: m,
                allowed: m > ALLOWED_THRESHOLD,
            });
        }
    }
    out.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    out
}

/// Frequency and matrix element of the transition between two labelled levels.
pub fn transition_between(es: &Eigensystem, model: &RegisterModel, a: BasisLabel, b: BasisLabel) -> Transition {
    let (lo, hi) = if es.energy(a) <= es.energy(b) { (a, b) } else { (b, a) };
    let x = drive_operator(model);
    let m = es.matrix_element(x.matrix(), hi, lo).norm();
    Transition {
        lower: lo,
        upper: hi,
        frequency: es.energy(hi) - es.energy(lo),
        matrix_element: m,
        allowed: m > ALLOWED_THRESHOLD,
    }
}
