//! Power-law fits `y ~ C x^slope` by least squares in log-log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Which logarithm the abscissa is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// `x` is already an exponent (e.g. the dyadic index j); the
    /// ordinate is fitted in base 2, so the slope is the dyadic exponent.
    Dyadic,
    /// Both `x` and `y` are logged (natural log); the slope is the
    /// power-law exponent.
    LogLog,
}

/// Least-squares line through `(X, Y)` with `r_squared` reported.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<DecayFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParam("fit: length mismatch".into()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InvalidParam(format!("fit needs at least 3 points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::FitRejected("non-finite data".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitRejected("abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(DecayFit { slope, intercept, r_squared, n_points: n })
}

/// Fits `y ~ C x^slope` (LogLog) or `y ~ C 2^{slope x}` (Dyadic); every
/// `y` must be positive.
pub fn fit_power(xs: &[f64], ys: &[f64], axis: Axis) -> Result<DecayFit> {
    if ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::FitRejected("non-positive ordinate".into()));
    }
    match axis {
        Axis::LogLog => {
            if xs.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::FitRejected("non-positive abscissa".into()));
            }
            let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            fit_line(&lx, &ly)
        }
        Axis::Dyadic => {
            let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
            fit_line(xs, &ly)
        }
    }
}

impl DecayFit {
    /// Rejects fits with `r_squared` below `min`.
    pub fn require_r_squared(self, min: f64) -> Result<Self> {
        if self.r_squared < min {
            return Err(Error::FitRejected(format!("r_squared {:.4} < {min}", self.r_squared)));
        }
        Ok(self)
    }
}

/// `count` log-spaced points on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Log-spaced grid with `per_decade` points per decade, endpoints included.
pub fn log_grid_per_decade(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = ((decades * per_decade as f64).round() as usize + 1).max(2);
    log_space(lo, hi, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let xs = log_space(10.0, 1000.0, 9);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.5)).collect();
        let f = fit_power(&xs, &ys, Axis::LogLog).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_exponent() {
        let js = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = js.iter().map(|j| 5.0 * 2f64.powf(2.5 * j)).collect();
        let f = fit_power(&js, &ys, Axis::Dyadic).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(fit_line(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn grid_density() {
        let g = log_grid_per_decade(10.0, 1000.0, 12);
        assert_eq!(g.len(), 25);
        assert!((g[24] - 1000.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn r_squared_in_unit_interval(ys in proptest::collection::vec(0.1f64..10.0, 3..12)) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let f = fit_line(&xs, &ys).unwrap();
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }
    }
}
