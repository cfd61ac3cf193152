// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulator for a three-spin register: an NV⁻ electronic spin, a ¹³C nuclear
//! spin and the host ¹⁵N nuclear spin.

pub mod composer;
pub mod evolution;
pub mod fidelity;
pub mod linalg;
pub mod model;
pub mod pulses;
pub mod scan;
pub mod selftest;
pub mod spincore;

/// Formats a float with 9 significant digits for tabular output.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
