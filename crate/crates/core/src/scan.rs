//! Sup-norm scans of propagated band-limited kernels: the inverse transform
//! is sampled on whole s-lines by FFT for a list of radii, and the largest
//! peaks are refined by direct evaluation of the same trapezoid sum.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{fill_spectral_row, SpectralSymbol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Radii `|z|` to scan.
    pub r_values: Vec<f64>,
    /// Extra s half-width: `s_margin / (shortest support interval)`.
    pub s_margin: f64,
    /// Nyquist oversampling in s.
    pub oversample: f64,
    /// Number of grid peaks refined per radius.
    pub refine_peaks: usize,
    /// Largest FFT length allowed.
    pub max_fft: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { r_values: vec![0.0], s_margin: 60.0, oversample: 4.0, refine_peaks: 3, max_fft: 1 << 23 }
    }
}

/// Location and size of the sampled maximum of `|f|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupPoint {
    pub value: f64,
    pub r: f64,
    pub s: f64,
    pub fft_len: usize,
}

/// Largest group speed `d sqrt(xi) / d|lambda|` over the support.
pub fn halfwave_speed(sym: &SpectralSymbol) -> f64 {
    let p = sym.params;
    (0..sym.mode_count())
        .flat_map(|m| {
            let big_m = p.mode_weight(m);
            sym.lambda_support(m).iter().map(move |&(a, b)| {
                let l = if a > 0.0 { a } else { -b };
                (2.0 * big_m + l) / (4.0 * big_m * l + l * l).sqrt()
            })
        })
        .fold(0.0, f64::max)
}

/// Largest `d xi / d|lambda|` over the support.
pub fn schrodinger_speed(sym: &SpectralSymbol) -> f64 {
    let p = sym.params;
    (0..sym.mode_count())
        .flat_map(|m| {
            let big_m = p.mode_weight(m);
            sym.lambda_support(m).iter().map(move |&(a, b)| 4.0 * big_m + 2.0 * a.abs().max(b.abs()))
        })
        .fold(0.0, f64::max)
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `sup |f|` over the scanned radii and all `s`, where `f` is the inverse
/// transform of `sym` and `s_extent` bounds the distance travelled.
pub fn sup_over_space(sym: &SpectralSymbol, s_extent: f64, opts: &ScanOptions) -> Result<SupPoint> {
    if sym.is_zero() {
        return Ok(SupPoint { value: 0.0, r: 0.0, s: 0.0, fft_len: 0 });
    }
    if opts.r_values.is_empty() {
        return Err(Error::InvalidParam("no radii to scan".into()));
    }
    let lmax = sym.lambda_max();
    let half = s_extent.abs() + opts.s_margin / sym.min_interval();
    let dl = PI / half;
    let need = (2.0 * lmax * opts.oversample.max(1.05) / dl).ceil() as usize;
    let n = need.next_power_of_two().max(16);
    if n > opts.max_fft {
        return Err(Error::BudgetExceeded(format!("FFT length {n} exceeds {}", opts.max_fft)));
    }
    let lambdas: Vec<f64> = (0..n).map(|k| (k as f64 - n as f64 / 2.0) * dl).collect();
    let ds = 2.0 * half / n as f64;
    let c = sym.params.plancherel_const() * dl;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let best: Vec<SupPoint> = opts
        .r_values
        .par_iter()
        .map(|&r| {
            let mut lag = Vec::new();
            let mut g = vec![Complex64::new(0.0, 0.0); n];
            fill_spectral_row(sym, r, &lambdas, &mut g, &mut lag);
            let sparse: Vec<(f64, Complex64)> =
                g.iter().zip(&lambdas).filter(|(v, _)| v.norm_sqr() > 0.0).map(|(v, &l)| (l, *v)).collect();
            let mut buf: Vec<Complex64> =
                g.iter().enumerate().map(|(k, v)| if k % 2 == 1 { -*v } else { *v }).collect();
            fft.process(&mut buf);
            let mag: Vec<f64> = buf.iter().map(|v| v.norm() * c).collect();
            // Local maxima, largest first.
            let mut peaks: Vec<usize> = (0..n)
                .filter(|&l| mag[l] >= mag[(l + n - 1) % n] && mag[l] >= mag[(l + 1) % n])
                .collect();
            peaks.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]));
            peaks.truncate(opts.refine_peaks.max(1));
            let direct = |s: f64| -> f64 {
                let v: Complex64 = sparse.iter().map(|&(l, gv)| gv * Complex64::from_polar(1.0, -l * s)).sum();
                v.norm() * c
            };
            let mut top = SupPoint { value: 0.0, r, s: 0.0, fft_len: n };
            for &l in &peaks {
                let s0 = (l as f64 - n as f64 / 2.0) * ds;
                let (s, v) = if opts.refine_peaks > 0 {
                    let (s, v) = golden_max(&direct, s0 - ds, s0 + ds, 30);
                    if v >= mag[l] {
                        (s, v)
                    } else {
                        (s0, mag[l])
                    }
                } else {
                    (s0, mag[l])
                };
                if v > top.value {
                    top = SupPoint { value: v, r, s, fft_len: n };
                }
            }
            top
        })
        .collect();
    Ok(best.into_iter().fold(SupPoint { value: -1.0, r: 0.0, s: 0.0, fft_len: n }, |a, b| if b.value > a.value { b } else { a }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::{lp_symbol, OperatorTag};
    use crate::profile::DyadicProfile;
    use crate::propagator::halfwave_symbol;
    use crate::spectral::{inverse_at, GroupParams};

    #[test]
    fn scan_matches_pointwise_inversion() {
        let p = GroupParams::new(1).unwrap();
        let sym = lp_symbol(OperatorTag::Full, 0, DyadicProfile::default(), p, 3);
        let t = 20.0;
        let u = halfwave_symbol(&sym, t);
        let opts = ScanOptions { r_values: vec![0.0, 0.5], ..Default::default() };
        let sp = sup_over_space(&u, t * halfwave_speed(&u), &opts).unwrap();
        let direct = inverse_at(&u, sp.r, sp.s, 1e-12).unwrap().norm();
        assert!((sp.value - direct).abs() < 1e-4 * direct, "{} vs {direct}", sp.value);
        // A wider s-window removes the periodization error.
        let wide = ScanOptions { s_margin: 1200.0, ..opts.clone() };
        let sp = sup_over_space(&u, t * halfwave_speed(&u), &wide).unwrap();
        let direct = inverse_at(&u, sp.r, sp.s, 1e-12).unwrap().norm();
        assert!((sp.value - direct).abs() < 1e-6 * direct, "{} vs {direct}", sp.value);
        // Nearby points are not larger.
        for ds in [-0.05, 0.05] {
            assert!(inverse_at(&u, sp.r, sp.s + ds, 1e-12).unwrap().norm() <= sp.value * (1.0 + 1e-9));
        }
    }

    #[test]
    fn time_zero_sup_is_value_at_origin() {
        let p = GroupParams::new(1).unwrap();
        let sym = lp_symbol(OperatorTag::Full, 0, DyadicProfile::default(), p, 2);
        let opts = ScanOptions { s_margin: 1200.0, ..Default::default() };
        let sp = sup_over_space(&sym, 0.0, &opts).unwrap();
        let origin = inverse_at(&sym, 0.0, 0.0, 1e-13).unwrap().norm();
        assert!((sp.value - origin).abs() < 1e-6 * origin, "{} vs {origin}", sp.value);
        assert!(sp.s.abs() < 1e-6);
    }

    #[test]
    fn budget_guard() {
        let p = GroupParams::new(1).unwrap();
        let sym = lp_symbol(OperatorTag::Full, 0, DyadicProfile::default(), p, 1);
        let opts = ScanOptions { max_fft: 1 << 10, ..Default::default() };
        assert!(matches!(sup_over_space(&sym, 1e6, &opts), Err(Error::BudgetExceeded(_))));
    }
}
