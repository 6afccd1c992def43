//! One-dimensional oscillatory integrals `int_a^b e^{-i omega gamma(x)} eta(x) dx`:
//! evaluation, van der Corput upper bounds and stationary-phase lower bounds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{gk15, integrate as adaptive};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Default panel budget for [`integrate`].
pub const PANEL_BUDGET: usize = 8_000_000;

#[derive(Clone)]
pub struct OscillatoryProblem {
    pub phase: RealFn,
    /// `[gamma', gamma'', ...]`, at least the first two.
    pub phase_derivs: Vec<RealFn>,
    pub amplitude: ComplexFn,
    pub amplitude_deriv: ComplexFn,
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    /// `omega = t * time_scale`; the wave problems use `time_scale = 4^j`.
    pub time_scale: f64,
}

impl std::fmt::Debug for OscillatoryProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OscillatoryProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("omega", &self.omega)
            .field("time_scale", &self.time_scale)
            .finish()
    }
}

impl OscillatoryProblem {
    pub fn new(
        phase: RealFn,
        phase_derivs: Vec<RealFn>,
        amplitude: ComplexFn,
        amplitude_deriv: ComplexFn,
        interval: (f64, f64),
        omega: f64,
    ) -> Result<Self> {
        let (a, b) = interval;
        if !(a < b) || !(omega > 0.0) || phase_derivs.len() < 2 {
            return Err(Error::InvalidParam("need a < b, omega > 0 and two phase derivatives".into()));
        }
        Ok(OscillatoryProblem { phase, phase_derivs, amplitude, amplitude_deriv, a, b, omega, time_scale: 1.0 })
    }

    pub fn with_time_scale(mut self, s: f64) -> Self {
        self.time_scale = s;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.phase_derivs[0])(x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        (self.phase_derivs[1])(x)
    }

    /// Compares the derivative callables with centered differences at
    /// `samples` seeded random points; returns the worst relative mismatch.
    pub fn derivative_mismatch(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let w = self.b - self.a;
        for _ in 0..samples {
            let x = self.a + w * rng.gen_range(0.05..0.95);
            let h = 1e-5 * w;
            let mut f: Vec<Box<dyn Fn(f64) -> f64>> = vec![Box::new(|x| (self.phase)(x))];
            for d in &self.phase_derivs {
                let d = d.clone();
                f.push(Box::new(move |x| d(x)));
            }
            for k in 0..f.len() - 1 {
                let fd = (f[k](x + h) - f[k](x - h)) / (2.0 * h);
                let an = f[k + 1](x);
                worst = worst.max((fd - an).abs() / (1.0 + an.abs()));
            }
            let fd = ((self.amplitude)(x + h) - (self.amplitude)(x - h)) / (2.0 * h);
            let an = (self.amplitude_deriv)(x);
            worst = worst.max((fd - an).norm() / (1.0 + an.norm()));
        }
        worst
    }
}

/// `int_a^b e^{-i omega gamma} eta dx` with absolute error at most `tol`.
pub fn integrate(prob: &OscillatoryProblem, tol: f64) -> Result<Complex64> {
    integrate_with_budget(prob, tol, PANEL_BUDGET)
}

pub fn integrate_with_budget(prob: &OscillatoryProblem, tol: f64, budget: usize) -> Result<Complex64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam("tol must be positive".into()));
    }
    let w = prob.omega;
    let f = |x: f64| (prob.amplitude)(x) * Complex64::from_polar(1.0, -w * (prob.phase)(x));
    let width = prob.b - prob.a;
    // Phase panels: omega * (phase variation) at most pi.
    let mut stack = vec![(prob.a, prob.b)];
    let mut panels: Vec<(f64, f64)> = Vec::new();
    while let Some((x0, x1)) = stack.pop() {
        let xm = 0.5 * (x0 + x1);
        let g = [(prob.phase)(x0), (prob.phase)(xm), (prob.phase)(x1)];
        let dg = [prob.d1(x0).abs(), prob.d1(xm).abs(), prob.d1(x1).abs()];
        let var = (g[2] - g[0]).abs().max((g[1] - g[0]).abs() + (g[2] - g[1]).abs());
        let slope_var = dg.iter().cloned().fold(0.0, f64::max) * (x1 - x0);
        if (w * var <= PI && w * slope_var <= 2.0 * PI) || x1 - x0 < 1e-14 * width {
            panels.push((x0, x1));
        } else {
            stack.push((xm, x1));
            stack.push((x0, xm));
        }
        if panels.len() + stack.len() > budget {
            return Err(Error::TolNotMet { estimate: f64::INFINITY, tol, panels: budget });
        }
    }
    panels.sort_by(|p, q| p.0.total_cmp(&q.0));
    // Roundoff in `omega * gamma` caps the attainable accuracy.
    let gmax = panels.iter().map(|p| (prob.phase)(p.0).abs()).fold((prob.phase)(prob.b).abs(), f64::max);
    let abs_mass: f64 = panels.iter().map(|&(x0, x1)| gk15(&|x: f64| (prob.amplitude)(x).norm(), x0, x1).0).sum();
    let tol = tol.max(16.0 * f64::EPSILON * (1.0 + w * gmax) * abs_mass);
    let mut total = Complex64::new(0.0, 0.0);
    let mut count = panels.len();
    let mut work: Vec<(f64, f64, Complex64)> = panels.iter().map(|&(x0, x1)| (x0, x1, gk15(&f, x0, x1).0)).collect();
    while let Some((x0, x1, whole)) = work.pop() {
        let xm = 0.5 * (x0 + x1);
        let left = gk15(&f, x0, xm).0;
        let right = gk15(&f, xm, x1).0;
        let diff = (left + right - whole).norm();
        if diff <= tol * (x1 - x0) / width || x1 - x0 < 1e-13 * width {
            total += left + right;
        } else {
            count += 1;
            if count > budget {
                return Err(Error::TolNotMet { estimate: diff, tol, panels: count });
            }
            work.push((x0, xm, left));
            work.push((xm, x1, right));
        }
    }
    Ok(total)
}

/// van der Corput constant `C_k` (3 and 8 for k = 1, 2; `5 2^{k-1} - 2`
/// beyond).
pub fn vdc_constant(k: usize) -> f64 {
    match k {
        1 => 3.0,
        2 => 8.0,
        _ => 5.0 * 2f64.powi(k as i32 - 1) - 2.0,
    }
}

const HYPOTHESIS_SAMPLES: usize = 2049;

/// `C_k (omega delta)^{-1/k} (|eta(b)| + int |eta'|)` after checking by
/// sampling that `|gamma^{(k)}| >= delta` (and, for k = 1, that `gamma'` is
/// monotone).
pub fn vdc_bound(prob: &OscillatoryProblem, k: usize, delta: f64) -> Result<f64> {
    if k == 0 || !(delta > 0.0) {
        return Err(Error::InvalidParam("need k >= 1 and delta > 0".into()));
    }
    let dk = prob
        .phase_derivs
        .get(k - 1)
        .ok_or_else(|| Error::InvalidParam(format!("phase derivative of order {k} not supplied")))?;
    let mut sign = 0.0;
    for i in 0..HYPOTHESIS_SAMPLES {
        let x = prob.a + (prob.b - prob.a) * i as f64 / (HYPOTHESIS_SAMPLES - 1) as f64;
        let v = dk(x);
        if v.abs() < delta * (1.0 - 1e-12) {
            return Err(Error::HypothesisViolated(format!("|phase^({k})({x})| = {:.3e} < delta = {delta:.3e}", v.abs())));
        }
        if k == 1 {
            let s = prob.d2(x);
            if s != 0.0 {
                if sign != 0.0 && s.signum() != sign {
                    return Err(Error::HypothesisViolated("phase' is not monotone".into()));
                }
                sign = s.signum();
            }
        }
    }
    let var = amplitude_variation(prob)?;
    Ok(vdc_constant(k) * (prob.omega * delta).powf(-1.0 / k as f64) * ((prob.amplitude)(prob.b).norm() + var))
}

/// `int_a^b |eta'|`.
pub fn amplitude_variation(prob: &OscillatoryProblem) -> Result<f64> {
    let g = |x: f64| (prob.amplitude_deriv)(x).norm();
    let scale = gk15(&g, prob.a, prob.b).0.abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(adaptive(g, prob.a, prob.b, 32, 1e-10 * scale, 1e-10, 100_000)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x0: f64,
    pub phase_dd: f64,
}

impl CriticalPoint {
    /// Validates `|gamma'(x0)| < 1e-10` and `|gamma''(x0)| >= 1e-8`.
    pub fn new(prob: &OscillatoryProblem, x0: f64) -> Result<Self> {
        if !(x0 > prob.a && x0 < prob.b) {
            return Err(Error::InvalidParam("critical point must lie inside (a, b)".into()));
        }
        let d1 = prob.d1(x0);
        if d1.abs() >= 1e-10 {
            return Err(Error::NotCritical(d1));
        }
        let d2 = prob.d2(x0);
        if d2.abs() < 1e-8 {
            return Err(Error::Degenerate(d2));
        }
        Ok(CriticalPoint { x0, phase_dd: d2 })
    }

    /// Locates the zero of `gamma'` in (a, b) by bisection.
    pub fn locate(prob: &OscillatoryProblem) -> Result<Self> {
        let (mut lo, mut hi) = (prob.a, prob.b);
        let (flo, fhi) = (prob.d1(lo), prob.d1(hi));
        if flo.signum() == fhi.signum() {
            return Err(Error::NotCritical(flo.abs().min(fhi.abs())));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if prob.d1(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x0 = 0.5 * (lo + hi);
        let d2 = prob.d2(x0);
        if d2.abs() < 1e-8 {
            return Err(Error::Degenerate(d2));
        }
        Ok(CriticalPoint { x0, phase_dd: d2 })
    }
}

/// Lower bound `(sqrt(pi)/2) |eta(x0)| / sqrt(omega |gamma''(x0)|)` and the
/// time threshold `T` beyond which it holds (`omega = t * time_scale`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryBound {
    pub lower: f64,
    pub threshold: f64,
    /// Total variation of the remainder function in the proof.
    pub remainder_variation: f64,
    /// `|J|`, the Gaussian main term.
    pub main_term: f64,
}

const TV_SAMPLES: usize = 20_001;

/// Gaussian main term `J = sqrt(pi) eta(x0) / sqrt(1 + i omega gamma''/2)`.
pub fn gaussian_main_term(eta0: Complex64, omega: f64, phase_dd: f64) -> Complex64 {
    let z = Complex64::new(1.0, omega * phase_dd / 2.0);
    eta0 * PI.sqrt() / z.sqrt()
}

pub fn stationary_lower(prob: &OscillatoryProblem, cp: &CriticalPoint) -> Result<StationaryBound> {
    let g2 = cp.phase_dd;
    if g2.abs() < 1e-8 {
        return Err(Error::Degenerate(g2));
    }
    for i in 0..HYPOTHESIS_SAMPLES {
        let x = prob.a + (prob.b - prob.a) * i as f64 / (HYPOTHESIS_SAMPLES - 1) as f64;
        if prob.d2(x) * g2 <= 0.0 {
            return Err(Error::HypothesisViolated("phase'' changes sign on [a, b]".into()));
        }
    }
    let eta0 = (prob.amplitude)(cp.x0);
    if eta0.norm() == 0.0 {
        return Err(Error::HypothesisViolated("amplitude vanishes at the critical point".into()));
    }
    let x0 = cp.x0;
    let g0 = (prob.phase)(x0);
    let xi = |x: f64| {
        let v = (2.0 * ((prob.phase)(x) - g0) / g2).max(0.0).sqrt();
        if x < x0 {
            -v
        } else {
            v
        }
    };
    // q(y) = (Phi(y) - e^{-y^2} Phi(0)) / y with Phi(y) = eta(x) / xi'(x).
    let q = |x: f64| {
        let y = xi(x);
        let dxi = prob.d1(x) / (g2 * y);
        let phi = (prob.amplitude)(x) / dxi;
        (phi - eta0 * (-y * y).exp()) / y
    };
    let gap = 1e-5 * (prob.b - prob.a);
    let mut tv = 0.0;
    let mut prev: Option<Complex64> = None;
    for i in 0..TV_SAMPLES {
        let x = prob.a + (prob.b - prob.a) * i as f64 / (TV_SAMPLES - 1) as f64;
        if (x - x0).abs() < gap || x == prob.a || x == prob.b {
            continue;
        }
        let v = q(x);
        if let Some(p) = prev {
            tv += (v - p).norm();
        }
        prev = Some(v);
    }
    // Ends: jumps of Phi at the interval edges and the pure Gaussian tails.
    for x in [prob.a, prob.b] {
        let y = xi(x);
        let e = (-y * y).exp() / y.abs();
        let dxi = prob.d1(x) / (g2 * y);
        let phi = (prob.amplitude)(x) / dxi;
        tv += phi.norm() / y.abs() + eta0.norm() * e;
    }
    let tv = tv * 1.02;
    let scale = prob.time_scale * g2.abs();
    let c_prime = tv / (PI.sqrt() * eta0.norm() * scale.sqrt());
    let threshold = (4.0 * c_prime * c_prime).max(2.0 / scale);
    let lower = 0.5 * PI.sqrt() * eta0.norm() / (prob.omega * g2.abs()).sqrt();
    let main_term = gaussian_main_term(eta0, prob.omega, g2).norm();
    Ok(StationaryBound { lower, threshold, remainder_variation: tv, main_term })
}

/// Serializable descriptor of a regression-corpus problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusProblem {
    pub phase_id: String,
    pub params: Vec<f64>,
    pub interval: (f64, f64),
    pub omega: f64,
}

fn bump(u: f64) -> (f64, f64) {
    // exp(-1/(1-u^2)) on (-1, 1) and its derivative.
    if u.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - u * u;
    let v = (-1.0 / d).exp();
    (v, v * (-2.0 * u / (d * d)))
}

impl CorpusProblem {
    /// Phase families: `linear [c]`, `quadratic [c, x0]`,
    /// `cubic [c, x0, d]`, `root [sigma, c]` (`sigma x + sqrt(c x + x^2)`).
    /// The last parameter selects the amplitude: 0 = constant 1,
    /// 1 = bump on the interval, 2 = Gaussian centered mid-interval.
    pub fn build(&self) -> Result<OscillatoryProblem> {
        let p = self.params.clone();
        let amp_kind = *p.last().ok_or_else(|| Error::InvalidParam("empty params".into()))? as i32;
        let (phase, d): (RealFn, Vec<RealFn>) = match self.phase_id.as_str() {
            "linear" => {
                let c = p[0];
                (Arc::new(move |x| c * x), vec![Arc::new(move |_| c), Arc::new(|_| 0.0)])
            }
            "quadratic" => {
                let (c, x0) = (p[0], p[1]);
                (
                    Arc::new(move |x| 0.5 * c * (x - x0) * (x - x0)),
                    vec![Arc::new(move |x| c * (x - x0)), Arc::new(move |_| c), Arc::new(|_| 0.0), Arc::new(|_| 0.0)],
                )
            }
            "cubic" => {
                let (c, x0, e) = (p[0], p[1], p[2]);
                (
                    Arc::new(move |x| 0.5 * c * (x - x0).powi(2) + e * (x - x0).powi(3)),
                    vec![
                        Arc::new(move |x| c * (x - x0) + 3.0 * e * (x - x0).powi(2)),
                        Arc::new(move |x| c + 6.0 * e * (x - x0)),
                        Arc::new(move |_| 6.0 * e),
                        Arc::new(|_| 0.0),
                    ],
                )
            }
            "root" => {
                let (s, c) = (p[0], p[1]);
                (
                    Arc::new(move |x| s * x + (c * x + x * x).sqrt()),
                    vec![
                        Arc::new(move |x| s + (c + 2.0 * x) / (2.0 * (c * x + x * x).sqrt())),
                        Arc::new(move |x| -c * c / (4.0 * (c * x + x * x).powf(1.5))),
                    ],
                )
            }
            other => return Err(Error::InvalidParam(format!("unknown phase_id '{other}'"))),
        };
        let (a, b) = self.interval;
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let (amp, damp): (ComplexFn, ComplexFn) = match amp_kind {
            0 => (Arc::new(|_| Complex64::new(1.0, 0.0)), Arc::new(|_| Complex64::new(0.0, 0.0))),
            1 => (
                Arc::new(move |x| Complex64::new(bump((x - mid) / half).0, 0.0)),
                Arc::new(move |x| Complex64::new(bump((x - mid) / half).1 / half, 0.0)),
            ),
            _ => {
                let w = 4.0 / (half * half);
                (
                    Arc::new(move |x| Complex64::new((-w * (x - mid).powi(2)).exp(), 0.0)),
                    Arc::new(move |x| Complex64::new(-2.0 * w * (x - mid) * (-w * (x - mid).powi(2)).exp(), 0.0)),
                )
            }
        };
        OscillatoryProblem::new(phase, d, amp, damp, self.interval, self.omega)
    }

    /// Location of the critical point for the stationary families.
    pub fn critical_point(&self) -> Option<f64> {
        match self.phase_id.as_str() {
            "quadratic" | "cubic" => Some(self.params[1]),
            _ => None,
        }
    }
}

/// The 20-problem regression corpus (all with `omega <= 1000`).
pub fn corpus() -> Vec<CorpusProblem> {
    let mk = |id: &str, params: Vec<f64>, interval: (f64, f64), omega: f64| CorpusProblem {
        phase_id: id.into(),
        params,
        interval,
        omega,
    };
    vec![
        mk("linear", vec![1.0, 0.0], (0.0, 2.0 * PI / 50.0), 50.0),
        mk("linear", vec![1.0, 0.0], (0.3, 1.7), 20.0),
        mk("linear", vec![2.0, 1.0], (-1.0, 1.0), 100.0),
        mk("linear", vec![-1.5, 2.0], (0.0, 3.0), 1000.0),
        mk("quadratic", vec![2.0, 0.0, 1.0], (-1.0, 1.0), 500.0),
        mk("quadratic", vec![1.0, 0.2, 1.0], (-1.0, 1.5), 50.0),
        mk("quadratic", vec![3.0, 0.5, 2.0], (0.0, 1.0), 1000.0),
        mk("quadratic", vec![-0.5, 1.0, 1.0], (0.0, 2.5), 200.0),
        mk("quadratic", vec![2.0, 0.0, 0.0], (-1.0, 1.0), 300.0),
        mk("cubic", vec![1.0, 0.3, 0.1, 1.0], (-0.5, 1.0), 400.0),
        mk("cubic", vec![-2.0, 0.5, 0.3, 1.0], (0.0, 1.0), 800.0),
        mk("cubic", vec![1.5, 0.0, -0.2, 2.0], (-1.0, 1.0), 100.0),
        mk("cubic", vec![0.8, 1.0, 0.05, 1.0], (0.2, 2.0), 1000.0),
        mk("root", vec![-2.0, 1.0, 1.0], (0.1, 1.0), 300.0),
        mk("root", vec![-1.2, 0.5, 1.0], (0.05, 2.0), 700.0),
        mk("root", vec![0.5, 1.0, 1.0], (0.1, 1.0), 1000.0),
        mk("root", vec![-3.0, 4.0, 2.0], (0.2, 3.0), 150.0),
        mk("root", vec![1.0, 2.0, 0.0], (0.5, 1.5), 60.0),
        mk("linear", vec![0.7, 2.0], (-2.0, 2.0), 5.0),
        mk("quadratic", vec![1.0, 0.0, 1.0], (-2.0, 2.0), 1000.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a: f64, b: f64, omega: f64) -> OscillatoryProblem {
        CorpusProblem { phase_id: "linear".into(), params: vec![1.0, 0.0], interval: (a, b), omega }.build().unwrap()
    }

    #[test]
    fn full_period_vanishes() {
        let w = 37.0;
        let v = integrate(&linear(0.0, 2.0 * PI / w, w), 1e-12).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn linear_closed_form() {
        let (a, b, w) = (0.3, 2.9, 123.0);
        let v = integrate(&linear(a, b, w), 1e-12).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let exact = ((-i * w * a).exp() - (-i * w * b).exp()) / (i * w);
        assert!((v - exact).norm() < 1e-12);
    }

    #[test]
    fn derivatives_consistent() {
        for c in corpus() {
            let p = c.build().unwrap();
            assert!(p.derivative_mismatch(5, 7) < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn vdc_scaling_and_hypotheses() {
        let c = CorpusProblem { phase_id: "quadratic".into(), params: vec![2.0, 0.0, 1.0], interval: (-1.0, 1.0), omega: 100.0 };
        let p = c.build().unwrap();
        let b1 = vdc_bound(&p, 2, 2.0).unwrap();
        let b2 = vdc_bound(&p.clone().with_omega(400.0), 2, 2.0).unwrap();
        assert!((b1 / b2 - 2.0).abs() < 1e-12);
        assert!(matches!(vdc_bound(&p, 1, 0.1), Err(Error::HypothesisViolated(_))));
        assert!(matches!(vdc_bound(&p, 2, 2.5), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn gaussian_model_main_term_exact() {
        // gamma = g2 (x - x0)^2 / 2, eta = eta0 e^{-(x-x0)^2} on a wide interval.
        let (g2, x0, eta0, w) = (1.5, 0.2, 0.7, 40.0);
        let p = OscillatoryProblem::new(
            Arc::new(move |x| 0.5 * g2 * (x - x0).powi(2)),
            vec![Arc::new(move |x| g2 * (x - x0)), Arc::new(move |_| g2)],
            Arc::new(move |x| Complex64::new(eta0 * (-(x - x0).powi(2)).exp(), 0.0)),
            Arc::new(move |x| Complex64::new(-2.0 * (x - x0) * eta0 * (-(x - x0).powi(2)).exp(), 0.0)),
            (x0 - 9.0, x0 + 9.0),
            w,
        )
        .unwrap();
        let v = integrate(&p, 1e-13).unwrap();
        let j = gaussian_main_term(Complex64::new(eta0, 0.0), w, g2);
        assert!((v - j).norm() < 1e-10, "{v} {j}");
        let cp = CriticalPoint::new(&p, x0).unwrap();
        let sb = stationary_lower(&p, &cp).unwrap();
        assert!((sb.main_term - j.norm()).abs() < 1e-12);
        assert!(sb.remainder_variation < 1e-6);
    }

    #[test]
    fn critical_point_validation() {
        let c = CorpusProblem { phase_id: "quadratic".into(), params: vec![2.0, 0.1, 1.0], interval: (-1.0, 1.0), omega: 10.0 };
        let p = c.build().unwrap();
        assert!(matches!(CriticalPoint::new(&p, 0.3), Err(Error::NotCritical(_))));
        let cp = CriticalPoint::locate(&p).unwrap();
        assert!((cp.x0 - 0.1).abs() < 1e-12);
        let flat = CorpusProblem { phase_id: "quadratic".into(), params: vec![1e-9, 0.1, 1.0], interval: (-1.0, 1.0), omega: 10.0 };
        assert!(matches!(CriticalPoint::new(&flat.build().unwrap(), 0.1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lower_bound_depends_only_on_local_data() {
        let base = CorpusProblem { phase_id: "quadratic".into(), params: vec![2.0, 0.0, 1.0], interval: (-1.0, 1.0), omega: 900.0 };
        let pert = CorpusProblem { phase_id: "cubic".into(), params: vec![2.0, 0.0, 0.1, 1.0], interval: (-1.0, 1.0), omega: 900.0 };
        let (p, q) = (base.build().unwrap(), pert.build().unwrap());
        let a = stationary_lower(&p, &CriticalPoint::new(&p, 0.0).unwrap()).unwrap();
        let b = stationary_lower(&q, &CriticalPoint::new(&q, 0.0).unwrap()).unwrap();
        assert_eq!(a.lower, b.lower);
    }

    #[test]
    fn budget_exhaustion() {
        let p = linear(0.0, 1.0, 1e9);
        assert!(matches!(integrate_with_budget(&p, 1e-8, 1000), Err(Error::TolNotMet { .. })));
    }
}
