// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Dormand–Prince 5(4) for complex state vectors.

use serde::{Deserialize, Serialize};

use crate::spincore::C64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StepError {
    #[error("step size underflow at t = {t} ns (h = {h:.3e})")]
    Underflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted at t = {1} ns")]
    TooManySteps(u64, f64),
    #[error("non-finite state at t = {0} ns")]
    NonFinite(f64),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size state and work buffers for one trajectory. The accepted step
/// length carries over between calls so mandatory stops do not reset it.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
    h: f64,
    err_old: f64,
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
    pub stats: IntegratorStats,
}

impl Dopri5 {
    pub fn new(n: usize, rtol: f64, atol: f64) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            rtol,
            atol,
            max_steps: 50_000_000,
            h: 0.0,
            err_old: 1e-4,
            k: std::array::from_fn(|_| z.clone()),
            ytmp: z.clone(),
            ynew: z,
            stats: IntegratorStats::default(),
        }
    }

    /// Suggests the first step length (ns) when none has been taken yet.
    pub fn seed_step(&mut self, h: f64) {
        if self.h <= 0.0 {
            self.h = h;
        }
    }

    /// Advances `y` from `t0` to `t1` exactly. `f(t, y, dy)` must be smooth on
    /// the open interval; callers place discontinuities on the end points.
    pub fn advance<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [C64]) -> Result<(), StepError>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        debug_assert_eq!(y.len(), self.ytmp.len());
        if t1 - t0 <= 1e-13 * t1.abs().max(1.0) {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = ((t1 - t0) * 1e-3).max(1e-6);
        }
        let mut t = t0;
        f(t, y, &mut self.k[0]);
        self.stats.rhs_evals += 1;
        // Intervals below this are rounding residue of the caller's grid.
        let negligible = 1e-13 * t1.abs().max(1.0);
        loop {
            let remaining = t1 - t;
            if remaining <= negligible {
                return Ok(());
            }
            let natural = self.h;
            let last = natural >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { natural };
            if h < negligible {
                return Err(StepError::Underflow { t, h });
            }
            if self.stats.steps + self.stats.rejected >= self.max_steps {
                return Err(StepError::TooManySteps(self.max_steps, t));
            }
            let err = self.attempt(f, t, h, y);
            if !err.is_finite() {
                return Err(StepError::NonFinite(t));
            }
            if err <= 1.0 {
                // PI controller (Hairer & Wanner's dopri5 constants)
                let fac = (0.9 * err.max(1e-10).powf(-0.17) * self.err_old.powf(0.04)).clamp(0.2, 10.0);
                self.err_old = err.max(1e-4);
                self.stats.steps += 1;
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.ynew);
                self.k.swap(0, 6);
                // A short final step says nothing about the natural scale.
                if !last || h >= 0.5 * natural {
                    self.h = h * fac;
                } else {
                    self.h = natural;
                }
            } else {
                self.stats.rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                self.h = h * fac;
            }
        }
    }

    /// One trial step from (t, y) with k[0] = f(t, y). Leaves the candidate in
    /// `ynew`, f(t+h, ynew) in k[6], and returns the scaled error norm.
    fn attempt<F>(&mut self, f: &mut F, t: f64, h: f64, y: &[C64]) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let yt = &mut self.ytmp;
        for i in 0..n {
            yt[i] = y[i] + k1[i] * (h * A21);
        }
        f(t + C2 * h, yt, k2);
        for i in 0..n {
            yt[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        f(t + C3 * h, yt, k3);
        for i in 0..n {
            yt[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        f(t + C4 * h, yt, k4);
        for i in 0..n {
            yt[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        f(t + C5 * h, yt, k5);
        for i in 0..n {
            yt[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        f(t + h, yt, k6);
        let yn = &mut self.ynew;
        for i in 0..n {
            yn[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        f(t + h, yn, k7);
        self.stats.rhs_evals += 6;
        let mut acc = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = self.atol + self.rtol * y[i].norm().max(yn[i].norm());
            acc += e.norm_sqr() / (sc * sc);
        }
        (acc / n as f64).sqrt()
    }
}
