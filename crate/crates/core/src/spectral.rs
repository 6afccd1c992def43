//! Spherical Fourier analysis of radial functions on the Heisenberg group
//! `H_n`: spherical functions, the Plancherel measure, and the forward and
//! inverse transforms.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Grid};
use crate::special::{laguerre, laguerre_all, mode_multiplicity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    pub n: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("n must be at least 1".into()));
        }
        Ok(GroupParams { n })
    }

    /// Homogeneous dimension `2n + 2`.
    pub fn homogeneous_dim(&self) -> usize {
        2 * self.n + 2
    }

    /// Laguerre type `n - 1` of the spherical functions.
    pub fn alpha(&self) -> f64 {
        (self.n - 1) as f64
    }

    /// `M = 2m + n`.
    pub fn mode_weight(&self, m: usize) -> f64 {
        (2 * m + self.n) as f64
    }

    /// Density constant of the Plancherel measure, `2^{n-1} / pi^{n+1}`.
    pub fn plancherel_const(&self) -> f64 {
        2f64.powi(self.n as i32 - 1) / PI.powi(self.n as i32 + 1)
    }

    /// Haar measure in radial coordinates: `dg = haar_const * r^{2n-1} dr ds`.
    pub fn haar_const(&self) -> f64 {
        let fact: f64 = (1..self.n).map(|k| k as f64).product();
        2.0 * PI.powi(self.n as i32) / fact
    }

    /// Eigenvalue of the full Laplacian on mode `m` at `lambda`.
    pub fn full_eigenvalue(&self, m: usize, lambda: f64) -> f64 {
        4.0 * self.mode_weight(m) * lambda.abs() + lambda * lambda
    }

    /// Eigenvalue of the Kohn-Laplacian on mode `m` at `lambda`.
    pub fn kohn_eigenvalue(&self, m: usize, lambda: f64) -> f64 {
        4.0 * self.mode_weight(m) * lambda.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub m: usize,
    pub lambda: f64,
}

impl SpectrumPoint {
    pub fn new(m: usize, lambda: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParam("spectral point needs a finite nonzero lambda".into()));
        }
        Ok(SpectrumPoint { m, lambda })
    }
}

/// `omega_{m,lambda}(r, s)`.
pub fn spherical_function(pt: SpectrumPoint, r: f64, s: f64, params: GroupParams) -> Complex64 {
    let a = pt.lambda.abs();
    let l = laguerre(pt.m, params.alpha(), 2.0 * a * r * r) / mode_multiplicity(pt.m, params.n);
    Complex64::from_polar((-a * r * r).exp() * l, pt.lambda * s)
}

/// Radial factor of the inverse-transform integrand:
/// `e^{-|lambda| r^2} L_m^{(n-1)}(2|lambda| r^2) |lambda|^n`.
pub fn inversion_weight(m: usize, lambda: f64, r: f64, params: GroupParams) -> f64 {
    let a = lambda.abs();
    (-a * r * r).exp() * laguerre(m, params.alpha(), 2.0 * a * r * r) * a.powi(params.n as i32)
}

pub type SymbolFn = Arc<dyn Fn(usize, f64) -> Complex64 + Send + Sync>;

/// A function on the spectrum `N x R*`, truncated to finitely many modes and
/// supported on finitely many bounded lambda-intervals per mode.
#[derive(Clone)]
pub struct SpectralSymbol {
    pub params: GroupParams,
    supports: Vec<Vec<(f64, f64)>>,
    value: SymbolFn,
}

impl std::fmt::Debug for SpectralSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSymbol").field("params", &self.params).field("supports", &self.supports).finish()
    }
}

fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.retain(|(a, b)| b > a);
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersect_intervals(x: &[(f64, f64)], y: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a, b) in x {
        for &(c, d) in y {
            let lo = a.max(c);
            let hi = b.min(d);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    merge_intervals(out)
}

impl SpectralSymbol {
    /// Builds a symbol from a value rule and per-mode support intervals.
    /// Intervals must be bounded and must not contain lambda = 0 in their
    /// interior.
    pub fn new(params: GroupParams, supports: Vec<Vec<(f64, f64)>>, value: SymbolFn) -> Result<Self> {
        let mut clean = Vec::with_capacity(supports.len());
        for ivs in supports {
            for &(a, b) in &ivs {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidParam("unbounded lambda support".into()));
                }
                if a < 0.0 && b > 0.0 {
                    return Err(Error::InvalidParam("lambda support straddles 0".into()));
                }
            }
            clean.push(merge_intervals(ivs));
        }
        while clean.last().is_some_and(|v| v.is_empty()) {
            clean.pop();
        }
        Ok(SpectralSymbol { params, supports: clean, value })
    }

    pub fn zero(params: GroupParams) -> Self {
        SpectralSymbol { params, supports: Vec::new(), value: Arc::new(|_, _| Complex64::new(0.0, 0.0)) }
    }

    /// Number of retained modes (`m_max + 1`, or 0 for the zero symbol).
    pub fn mode_count(&self) -> usize {
        self.supports.len()
    }

    pub fn m_max(&self) -> usize {
        self.supports.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn lambda_support(&self, m: usize) -> &[(f64, f64)] {
        self.supports.get(m).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn value(&self, m: usize, lambda: f64) -> Complex64 {
        if lambda == 0.0 || !self.lambda_support(m).iter().any(|&(a, b)| lambda >= a && lambda <= b) {
            return Complex64::new(0.0, 0.0);
        }
        (self.value)(m, lambda)
    }

    /// Value without the support test; callers guarantee `lambda` lies in
    /// the support of mode `m`.
    pub(crate) fn value_unchecked(&self, m: usize, lambda: f64) -> Complex64 {
        (self.value)(m, lambda)
    }

    /// Largest `|lambda|` in any support.
    pub fn lambda_max(&self) -> f64 {
        self.supports.iter().flatten().map(|&(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max)
    }

    /// Smallest `|lambda|` in any support.
    pub fn lambda_min(&self) -> f64 {
        self.supports
            .iter()
            .flatten()
            .map(|&(a, b)| if a > 0.0 { a } else { -b })
            .fold(f64::INFINITY, f64::min)
    }

    /// Shortest support interval.
    pub fn min_interval(&self) -> f64 {
        self.supports.iter().flatten().map(|&(a, b)| b - a).fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&self, c: Complex64) -> SpectralSymbol {
        let v = self.value.clone();
        SpectralSymbol { params: self.params, supports: self.supports.clone(), value: Arc::new(move |m, l| c * v(m, l)) }
    }

    /// Pointwise product; support is the intersection.
    pub fn mul(&self, other: &SpectralSymbol) -> SpectralSymbol {
        let k = self.mode_count().min(other.mode_count());
        let supports: Vec<Vec<(f64, f64)>> =
            (0..k).map(|m| intersect_intervals(&self.supports[m], &other.supports[m])).collect();
        let (a, b) = (self.value.clone(), other.value.clone());
        SpectralSymbol::new(self.params, supports, Arc::new(move |m, l| a(m, l) * b(m, l)))
            .expect("intersection of bounded supports")
    }

    /// Pointwise sum; support is the union.
    pub fn add(&self, other: &SpectralSymbol) -> SpectralSymbol {
        let k = self.mode_count().max(other.mode_count());
        let supports: Vec<Vec<(f64, f64)>> = (0..k)
            .map(|m| {
                let mut v = self.lambda_support(m).to_vec();
                v.extend_from_slice(other.lambda_support(m));
                merge_intervals(v)
            })
            .collect();
        let (x, y) = (self.clone(), other.clone());
        SpectralSymbol::new(self.params, supports, Arc::new(move |m, l| x.value(m, l) + y.value(m, l)))
            .expect("union of bounded supports")
    }

    /// Multiplies by `f(m, lambda)` keeping the support.
    pub fn map(&self, f: impl Fn(usize, f64) -> Complex64 + Send + Sync + 'static) -> SpectralSymbol {
        let v = self.value.clone();
        SpectralSymbol { params: self.params, supports: self.supports.clone(), value: Arc::new(move |m, l| v(m, l) * f(m, l)) }
    }

    /// Multiplies by a function of the full-Laplacian eigenvalue
    /// `xi = 4(2m+n)|lambda| + lambda^2`.
    pub fn full_multiplier(&self, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> SpectralSymbol {
        let p = self.params;
        self.map(move |m, l| f(p.full_eigenvalue(m, l)))
    }

    /// Keeps only the modes `0..count`.
    pub fn truncate_modes(&self, count: usize) -> SpectralSymbol {
        let mut s = self.clone();
        s.supports.truncate(count);
        while s.supports.last().is_some_and(|v| v.is_empty()) {
            s.supports.pop();
        }
        s
    }

    /// Integral of `g(m, lambda)` against the Plancherel measure over the
    /// support of this symbol.
    pub fn plancherel_integral(&self, g: impl Fn(usize, f64) -> f64 + Sync) -> f64 {
        let p = self.params;
        let c = p.plancherel_const();
        let per_mode: Vec<f64> = (0..self.mode_count())
            .into_par_iter()
            .map(|m| {
                let w = mode_multiplicity(m, p.n);
                self.supports[m]
                    .iter()
                    .map(|&(a, b)| {
                        let f = |l: f64| g(m, l) * l.abs().powi(p.n as i32);
                        let scale = crate::quadrature::gk15(&|l: f64| f(l).abs(), a, b).0;
                        if scale == 0.0 {
                            return 0.0;
                        }
                        integrate(f, a, b, 16, 1e-15 * scale, 1e-13, 200_000)
                            .map(|r| r.value)
                            .unwrap_or_else(|_| crate::quadrature::gk15(&f, a, b).0)
                    })
                    .sum::<f64>()
                    * w
            })
            .collect();
        c * per_mode.iter().sum::<f64>()
    }
}

/// `(int_Sigma |sym|^2 dmu)^{1/2}`.
pub fn plancherel_norm(sym: &SpectralSymbol) -> f64 {
    sym.plancherel_integral(|m, l| sym.value_unchecked(m, l).norm_sqr()).sqrt()
}

/// Samples of a radial function on an (r, s) grid, row-major in r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub params: GroupParams,
    pub r_grid: Grid,
    pub s_grid: Grid,
    pub samples: Vec<Complex64>,
}

impl RadialFunction {
    pub fn new(params: GroupParams, r_grid: Grid, s_grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        let ok_r = r_grid.nodes.windows(2).all(|w| w[1] > w[0]) && r_grid.nodes.first().is_some_and(|&r| r >= 0.0);
        let ok_s = s_grid.nodes.windows(2).all(|w| w[1] > w[0]);
        if !ok_r || !ok_s {
            return Err(Error::InvalidParam("grids must be strictly increasing with r >= 0".into()));
        }
        if samples.len() != r_grid.len() * s_grid.len() {
            return Err(Error::InvalidParam("sample count must equal |r_grid| * |s_grid|".into()));
        }
        Ok(RadialFunction { params, r_grid, s_grid, samples })
    }

    pub fn at(&self, ir: usize, is: usize) -> Complex64 {
        self.samples[ir * self.s_grid.len() + is]
    }

    pub fn row(&self, ir: usize) -> &[Complex64] {
        let ns = self.s_grid.len();
        &self.samples[ir * ns..(ir + 1) * ns]
    }

    /// `int g(f) dg` with the radial Haar measure; returns (value, error).
    fn haar_integral(&self, g: impl Fn(Complex64) -> f64 + Sync) -> (f64, f64) {
        let p = self.params;
        let rows: Vec<(f64, f64)> = (0..self.r_grid.len())
            .into_par_iter()
            .map(|ir| {
                let vals: Vec<f64> = self.row(ir).iter().map(|&z| g(z)).collect();
                self.s_grid.integrate(&vals)
            })
            .collect();
        let w: Vec<f64> = self.r_grid.nodes.iter().map(|r| r.powi(2 * p.n as i32 - 1)).collect();
        let inner: Vec<f64> = rows.iter().zip(&w).map(|(v, w)| v.0 * w).collect();
        let (v, e_r) = self.r_grid.integrate(&inner);
        let e_s: f64 = rows.iter().zip(&w).zip(&self.r_grid.weights).map(|((v, w), q)| v.1 * w * q.abs()).sum();
        (p.haar_const() * v, p.haar_const() * (e_r + e_s))
    }

    /// `L^p` norm on the grid (p = infinity gives the sampled sup).
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        self.haar_integral(|z| z.norm().powf(p)).0.powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.haar_integral(|z| z.norm_sqr()).0.sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.haar_integral(|z| z.norm()).0
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest sample magnitude on the outer boundary (r = r_max or
    /// s at either end), relative to the sup norm.
    pub fn boundary_ratio(&self) -> f64 {
        let sup = self.sup_norm();
        if sup == 0.0 {
            return 0.0;
        }
        let ns = self.s_grid.len();
        let nr = self.r_grid.len();
        let mut b: f64 = self.row(nr - 1).iter().map(|z| z.norm()).fold(0.0, f64::max);
        for ir in 0..nr {
            b = b.max(self.at(ir, 0).norm()).max(self.at(ir, ns - 1).norm());
        }
        b / sup
    }

    /// Self-describing JSON envelope; `meta` carries producer-specific
    /// fields.
    pub fn to_envelope(&self, meta: serde_json::Value) -> serde_json::Value {
        let data: Vec<[f64; 2]> = self.samples.iter().map(|z| [z.re, z.im]).collect();
        serde_json::json!({
            "kind": "radial_function",
            "params": self.params,
            "grids": { "r": self.r_grid, "s": self.s_grid },
            "data": data,
            "meta": meta,
        })
    }

    pub fn from_envelope(v: &serde_json::Value) -> Result<(RadialFunction, serde_json::Value)> {
        let params: GroupParams = serde_json::from_value(v["params"].clone())?;
        let r_grid: Grid = serde_json::from_value(v["grids"]["r"].clone())?;
        let s_grid: Grid = serde_json::from_value(v["grids"]["s"].clone())?;
        let data: Vec<[f64; 2]> = serde_json::from_value(v["data"].clone())?;
        let samples = data.into_iter().map(|[a, b]| Complex64::new(a, b)).collect();
        Ok((RadialFunction::new(params, r_grid, s_grid, samples)?, v["meta"].clone()))
    }

    /// CSV of the slice at the r-node closest to `r`: header `r,s,re,im`.
    pub fn slice_csv(&self, r: f64) -> String {
        let ir = self
            .r_grid
            .nodes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - r).abs().total_cmp(&(b.1 - r).abs()))
            .map(|x| x.0)
            .unwrap_or(0);
        let mut out = String::from("r,s,re,im\n");
        for (is, s) in self.s_grid.nodes.iter().enumerate() {
            let z = self.at(ir, is);
            out.push_str(&format!("{},{},{},{}\n", self.r_grid.nodes[ir], s, z.re, z.im));
        }
        out
    }
}

/// Space-side sampling plan for a band-limited symbol: a GK panel grid in r
/// and an FFT-compatible uniform pair of grids in (lambda, s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Half-width S of the s-window: the s-period is 2S.
    pub s_half_width: f64,
    /// FFT length (power of two).
    pub fft_len: usize,
    /// Largest r node.
    pub r_max: f64,
    /// Number of GK15 panels in r.
    pub r_panels: usize,
}

/// Knobs for [`SamplingPlan::for_symbol`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    /// `S = s_factor / (shortest support interval)`.
    pub s_factor: f64,
    /// Extra s half-width (e.g. the propagation distance).
    pub s_shift: f64,
    /// Nyquist oversampling in s.
    pub oversample: f64,
    /// Multiplier on the r-panel count.
    pub r_resolution: f64,
    /// Gaussian cutoff: `2 |lambda_min| r_max^2 >= 4M + r_tail`.
    pub r_tail: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions { s_factor: 1200.0, s_shift: 0.0, oversample: 2.0, r_resolution: 1.0, r_tail: 70.0 }
    }
}

impl SamplingPlan {
    pub fn for_symbol(sym: &SpectralSymbol, opts: &PlanOptions) -> Result<SamplingPlan> {
        if sym.is_zero() {
            return Ok(SamplingPlan { s_half_width: 1.0, fft_len: 16, r_max: 1.0, r_panels: 1 });
        }
        let lmax = sym.lambda_max();
        let lmin = sym.lambda_min();
        let s_half_width = opts.s_factor / sym.min_interval() + opts.s_shift;
        let dl = PI / s_half_width;
        let need = (2.0 * lmax * opts.oversample.max(1.05) / dl).ceil() as usize;
        let fft_len = need.next_power_of_two().max(16);
        let m_top = sym.mode_count() as f64;
        let big_m = 2.0 * m_top + sym.params.n as f64;
        let r_max = ((4.0 * big_m + opts.r_tail) / (2.0 * lmin)).sqrt();
        let r_panels = ((r_max * lmax.sqrt() * (1.0 + big_m.sqrt()) * 0.2 * opts.r_resolution).ceil() as usize).max(4);
        Ok(SamplingPlan { s_half_width, fft_len, r_max, r_panels })
    }

    pub fn lambda_step(&self) -> f64 {
        PI / self.s_half_width
    }

    pub fn s_step(&self) -> f64 {
        2.0 * self.s_half_width / self.fft_len as f64
    }

    pub fn r_grid(&self) -> Result<Grid> {
        Grid::gk_panels(0.0, self.r_max, self.r_panels)
    }

    pub fn s_grid(&self) -> Result<Grid> {
        let h = self.s_step();
        Grid::uniform(-(self.fft_len as f64 / 2.0) * h, h, self.fft_len)
    }

    /// Uniform lambda nodes paired with [`Self::s_grid`] by the FFT.
    pub fn lambda_nodes(&self) -> Vec<f64> {
        let dl = self.lambda_step();
        (0..self.fft_len).map(|k| (k as f64 - self.fft_len as f64 / 2.0) * dl).collect()
    }
}

/// Per-row evaluation of `G(r, lambda_k) = sum_m F(m, lambda_k) Phi_m(r, lambda_k)`
/// on the uniform lambda nodes, for every mode whose support contains the node.
pub(crate) fn fill_spectral_row(sym: &SpectralSymbol, r: f64, lambdas: &[f64], out: &mut [Complex64], lag: &mut Vec<f64>) {
    let p = sym.params;
    let alpha = p.alpha();
    let dl = lambdas[1] - lambdas[0];
    let l0 = lambdas[0];
    for v in out.iter_mut() {
        *v = Complex64::new(0.0, 0.0);
    }
    for m in 0..sym.mode_count() {
        for &(a, b) in sym.lambda_support(m) {
            let k_lo = (((a - l0) / dl).ceil().max(0.0)) as usize;
            let k_hi = (((b - l0) / dl).floor() as i64).min(lambdas.len() as i64 - 1);
            if k_hi < k_lo as i64 {
                continue;
            }
            for k in k_lo..=k_hi as usize {
                let l = lambdas[k];
                if l == 0.0 {
                    continue;
                }
                let f = sym.value_unchecked(m, l);
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let al = l.abs();
                let x = 2.0 * al * r * r;
                let lg = if x == 0.0 {
                    mode_multiplicity(m, p.n)
                } else if m < 2 {
                    laguerre(m, alpha, x)
                } else {
                    laguerre_all(m, alpha, x, lag);
                    lag[m]
                };
                out[k] += f * ((-0.5 * x).exp() * lg * al.powi(p.n as i32));
            }
        }
    }
}

/// Inverse transform on a sampling plan via FFT in (lambda, s).
pub fn inverse_transform_planned(sym: &SpectralSymbol, plan: &SamplingPlan) -> Result<RadialFunction> {
    let r_grid = plan.r_grid()?;
    let s_grid = plan.s_grid()?;
    let n = plan.fft_len;
    let lambdas = plan.lambda_nodes();
    let lmax = sym.lambda_max();
    if lmax >= lambdas[n - 1] {
        return Err(Error::GridTooCoarse { estimate: lmax, tol: lambdas[n - 1] });
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let c = sym.params.plancherel_const() * plan.lambda_step();
    let rows: Vec<Vec<Complex64>> = r_grid
        .nodes
        .par_iter()
        .map_init(Vec::new, |lag, &r| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            fill_spectral_row(sym, r, &lambdas, &mut buf, lag);
            for (k, v) in buf.iter_mut().enumerate() {
                if k % 2 == 1 {
                    *v = -*v;
                }
            }
            fft.process(&mut buf);
            for (l, v) in buf.iter_mut().enumerate() {
                *v *= if l % 2 == 1 { -c } else { c };
            }
            buf
        })
        .collect();
    let samples = rows.concat();
    RadialFunction::new(sym.params, r_grid, s_grid, samples)
}

/// Inverse transform at a single point `(r, s)` by adaptive quadrature in
/// lambda, mode by mode.
pub fn inverse_at(sym: &SpectralSymbol, r: f64, s: f64, tol: f64) -> Result<Complex64> {
    let p = sym.params;
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..sym.mode_count() {
        for &(a, b) in sym.lambda_support(m) {
            let f = |l: f64| {
                sym.value_unchecked(m, l) * Complex64::from_polar(inversion_weight(m, l, r, p), -l * s)
            };
            let init = (((b - a) * s.abs() / 2.0).ceil() as usize).clamp(8, 100_000);
            let res = integrate(f, a, b, init, tol, 0.0, 1_000_000)?;
            total += res.value;
        }
    }
    Ok(total * p.plancherel_const())
}

/// Inverse transform on arbitrary grids. Uses the FFT route when the
/// s-grid is an FFT-compatible uniform grid (see [`SamplingPlan`]),
/// otherwise pointwise adaptive quadrature.
pub fn inverse_transform(sym: &SpectralSymbol, r_grid: &Grid, s_grid: &Grid) -> Result<RadialFunction> {
    if sym.is_zero() {
        let samples = vec![Complex64::new(0.0, 0.0); r_grid.len() * s_grid.len()];
        return RadialFunction::new(sym.params, r_grid.clone(), s_grid.clone(), samples);
    }
    let pts: Vec<(f64, f64)> =
        r_grid.nodes.iter().flat_map(|&r| s_grid.nodes.iter().map(move |&s| (r, s))).collect();
    let samples: Result<Vec<Complex64>> = pts.par_iter().map(|&(r, s)| inverse_at(sym, r, s, 1e-13)).collect();
    RadialFunction::new(sym.params, r_grid.clone(), s_grid.clone(), samples?)
}

/// `f_hat(m, lambda)` for `m = 0..=m_max` and each lambda in `lambdas`, by
/// tensor quadrature on the grids of `f`. Returns the table indexed
/// `[m][k]` and an error estimate.
pub fn forward_table(f: &RadialFunction, m_max: usize, lambdas: &[f64]) -> Result<(Vec<Vec<Complex64>>, f64)> {
    if lambdas.iter().any(|&l| l == 0.0) {
        return Err(Error::InvalidParam("lambda grid must not contain 0".into()));
    }
    let p = f.params;
    let haar = p.haar_const();
    let nr = f.r_grid.len();
    let rw: Vec<f64> = f.r_grid.nodes.iter().map(|r| r.powi(2 * p.n as i32 - 1)).collect();
    let cols: Vec<(Vec<Complex64>, f64)> = lambdas
        .par_iter()
        .map_init(Vec::new, |lag, &l| {
            let ph: Vec<Complex64> = f.s_grid.nodes.iter().zip(&f.s_grid.weights).map(|(&s, &w)| Complex64::from_polar(w, l * s)).collect();
            let phc: Vec<Complex64> = f.s_grid.nodes.iter().zip(&f.s_grid.coarse_weights).map(|(&s, &w)| Complex64::from_polar(w, l * s)).collect();
            let mut b = vec![Complex64::new(0.0, 0.0); nr];
            let mut s_err = 0.0;
            for ir in 0..nr {
                let row = f.row(ir);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut acc_c = Complex64::new(0.0, 0.0);
                for i in 0..row.len() {
                    acc += row[i] * ph[i];
                    acc_c += row[i] * phc[i];
                }
                b[ir] = acc * rw[ir];
                s_err += (acc - acc_c).norm() * rw[ir] * f.r_grid.weights[ir].abs();
            }
            let a = l.abs();
            let mut out = Vec::with_capacity(m_max + 1);
            let mut r_err: f64 = 0.0;
            let mut per_r: Vec<Vec<f64>> = Vec::with_capacity(nr);
            for &r in &f.r_grid.nodes {
                let x = 2.0 * a * r * r;
                laguerre_all(m_max, p.alpha(), x, lag);
                let e = (-0.5 * x).exp();
                per_r.push(lag.iter().map(|v| v * e).collect());
            }
            for m in 0..=m_max {
                let vals: Vec<Complex64> = (0..nr).map(|ir| b[ir] * per_r[ir][m]).collect();
                let (v, e) = f.r_grid.integrate(&vals);
                let mult = mode_multiplicity(m, p.n);
                out.push(v * (haar / mult));
                r_err = r_err.max(e * haar / mult);
            }
            (out, r_err + s_err * haar)
        })
        .collect();
    let mut table = vec![Vec::with_capacity(lambdas.len()); m_max + 1];
    let mut err: f64 = 0.0;
    for (col, e) in cols {
        for (m, v) in col.into_iter().enumerate() {
            table[m].push(v);
        }
        err = err.max(e);
    }
    Ok((table, err))
}

/// Forward transform as a symbol: tabulated on `lambda_grid` (sorted,
/// nonzero) and linearly interpolated, with support the hull of the grid on
/// each side of 0. Fails with `GridTooCoarse` if the quadrature error
/// estimate exceeds `tol` times the largest tabulated magnitude.
pub fn forward_transform(f: &RadialFunction, m_max: usize, lambda_grid: &[f64], tol: f64) -> Result<SpectralSymbol> {
    if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParam("lambda grid must be increasing".into()));
    }
    let (table, err) = forward_table(f, m_max, lambda_grid)?;
    let scale = table.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if err > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::GridTooCoarse { estimate: err / scale.max(f64::MIN_POSITIVE), tol });
    }
    let neg: Vec<f64> = lambda_grid.iter().copied().filter(|&l| l < 0.0).collect();
    let pos: Vec<f64> = lambda_grid.iter().copied().filter(|&l| l > 0.0).collect();
    let mut hull = Vec::new();
    if neg.len() >= 2 {
        hull.push((neg[0], *neg.last().unwrap()));
    }
    if pos.len() >= 2 {
        hull.push((pos[0], *pos.last().unwrap()));
    }
    let grid = Arc::new(lambda_grid.to_vec());
    let table = Arc::new(table);
    let value: SymbolFn = Arc::new(move |m, l| {
        let g = &grid;
        let i = g.partition_point(|&x| x < l);
        if i == 0 || i >= g.len() {
            return if i < g.len() && g[i] == l { table[m][i] } else { Complex64::new(0.0, 0.0) };
        }
        let (x0, x1) = (g[i - 1], g[i]);
        let t = (l - x0) / (x1 - x0);
        table[m][i - 1] * (1.0 - t) + table[m][i] * t
    });
    SpectralSymbol::new(f.params, vec![hull; m_max + 1], value)
}

/// Samples a symbol on a lambda grid: `{params, grids: {lambda, modes}, data}`.
pub fn symbol_envelope(sym: &SpectralSymbol, lambdas: &[f64], meta: serde_json::Value) -> serde_json::Value {
    let data: Vec<Vec<[f64; 2]>> = (0..sym.mode_count())
        .map(|m| lambdas.iter().map(|&l| { let z = sym.value(m, l); [z.re, z.im] }).collect())
        .collect();
    serde_json::json!({
        "kind": "spectral_symbol",
        "params": sym.params,
        "grids": { "lambda": lambdas, "modes": sym.mode_count() },
        "data": data,
        "meta": meta,
    })
}
