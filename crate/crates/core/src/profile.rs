//! The dyadic bump `R`: smooth, supported in [1/4, 4], and a partition of
//! unity under `tau -> 4^{-k} tau`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicProfile {
    pub transition_sharpness: f64,
}

impl Default for DyadicProfile {
    fn default() -> Self {
        DyadicProfile { transition_sharpness: 1.0 }
    }
}

/// Smooth step on [0,1] glued from `exp(-a/x)`; returns (value, derivative).
fn step(x: f64, a: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let q = a / x - a / (1.0 - x);
    let dq = -a / (x * x) - a / ((1.0 - x) * (1.0 - x));
    if q > 700.0 {
        return (0.0, 0.0);
    }
    let s = 1.0 / (1.0 + q.exp());
    (s, -s * (1.0 - s) * dq)
}

impl DyadicProfile {
    pub fn new(transition_sharpness: f64) -> Self {
        DyadicProfile { transition_sharpness }
    }

    pub fn support(&self) -> (f64, f64) {
        (0.25, 4.0)
    }

    /// Bump `chi` in the variable `u = log2(tau)`: 1 on [-1,1], 0 outside
    /// (-2,2). Returns (value, d/du).
    fn chi(&self, u: f64) -> (f64, f64) {
        let a = self.transition_sharpness;
        if u.abs() <= 1.0 {
            (1.0, 0.0)
        } else if u > 1.0 && u < 2.0 {
            let (s, ds) = step(2.0 - u, a);
            (s, -ds)
        } else if u < -1.0 && u > -2.0 {
            step(u + 2.0, a)
        } else {
            (0.0, 0.0)
        }
    }

    /// `sum_k chi(u - 2k)` and its u-derivative; 2-periodic, at least 1.
    fn denominator(&self, u: f64) -> (f64, f64) {
        let k0 = ((u - 2.0) / 2.0).floor() as i64;
        let mut d = 0.0;
        let mut dd = 0.0;
        for k in k0..=k0 + 3 {
            let (c, dc) = self.chi(u - 2.0 * k as f64);
            d += c;
            dd += dc;
        }
        (d, dd)
    }

    /// `R(tau)`.
    pub fn eval(&self, tau: f64) -> f64 {
        if !(tau > 0.25 && tau < 4.0) {
            return 0.0;
        }
        let u = tau.log2();
        let (c, _) = self.chi(u);
        if c == 0.0 {
            return 0.0;
        }
        c / self.denominator(u).0
    }

    /// `R'(tau)`.
    pub fn deriv(&self, tau: f64) -> f64 {
        if !(tau > 0.25 && tau < 4.0) {
            return 0.0;
        }
        let u = tau.log2();
        let (c, dc) = self.chi(u);
        let (d, dd) = self.denominator(u);
        (dc * d - c * dd) / (d * d) / (tau * std::f64::consts::LN_2)
    }

    /// `sum_{j in Z} R(4^{-j} tau)`; equals 1 for tau > 0.
    pub fn partition_sum(&self, tau: f64) -> f64 {
        let u = tau.log2();
        let j0 = (u / 2.0).floor() as i64;
        (j0 - 2..=j0 + 2).map(|j| self.eval(tau * 4f64.powi(-j as i32))).sum()
    }
}
