//! Wave and Schrödinger propagators of the full Laplacian applied to
//! band-limited radial data, written as sums over Laguerre modes of
//! one-dimensional oscillatory integrals in the rescaled variable
//! `x = 4^{-j} M lambda`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oscillatory::{integrate, CriticalPoint, OscillatoryProblem, StationaryBound};
use crate::profile::DyadicProfile;
use crate::quadrature::{gk15, integrate as adaptive, Grid};
use crate::special::{laguerre, laguerre_deriv, laguerre_function_sup, mode_multiplicity};
use crate::spectral::{inverse_transform_planned, GroupParams, PlanOptions, RadialFunction, SamplingPlan, SpectralSymbol};

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

/// `x`-support `a <= |x| <= b` of the mode amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSupport {
    pub a: f64,
    pub b: f64,
}

impl ModeSupport {
    pub fn new(j: i32, big_m: f64) -> Self {
        let a = 1.0 / (8.0 * (1.0 + (1.0 + pow2(2 * j - 4) / (big_m * big_m)).sqrt()));
        let b = 2.0 / (1.0 + (1.0 + pow2(2 * j) / (big_m * big_m)).sqrt());
        ModeSupport { a, b }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// Phase `(sigma x +- sqrt(4^{1-j} M^2 x + x^2)) / M` of mode `m` at
/// dyadic index `j` and speed `sigma = s / t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePhase {
    pub j: i32,
    pub sigma: f64,
    pub m: usize,
    pub big_m: f64,
}

impl ModePhase {
    pub fn new(j: i32, sigma: f64, m: usize, params: GroupParams) -> Self {
        ModePhase { j, sigma, m, big_m: params.mode_weight(m) }
    }

    pub fn support(&self) -> ModeSupport {
        ModeSupport::new(self.j, self.big_m)
    }

    fn quad(&self, x: f64) -> f64 {
        pow2(2 - 2 * self.j) * self.big_m * self.big_m * x + x * x
    }

    pub fn plus(&self, x: f64) -> f64 {
        (self.sigma * x + self.quad(x).sqrt()) / self.big_m
    }

    /// Branch with the square root subtracted (the `e^{+it sqrt(L)}` half of
    /// the cosine).
    pub fn minus(&self, x: f64) -> f64 {
        (self.sigma * x - self.quad(x).sqrt()) / self.big_m
    }

    /// `(gamma', gamma'')` of the plus branch, without a support check.
    pub fn plus_derivs(&self, x: f64) -> (f64, f64) {
        let m = self.big_m;
        let c = pow2(1 - 2 * self.j) * m * m;
        let q = self.quad(x);
        let d1 = (self.sigma + (c + x) / q.sqrt()) / m;
        let d2 = -pow2(2 - 4 * self.j) * m * m * m * q.powf(-1.5);
        (d1, d2)
    }

    pub fn minus_derivs(&self, x: f64) -> (f64, f64) {
        let m = self.big_m;
        let c = pow2(1 - 2 * self.j) * m * m;
        let q = self.quad(x);
        let d1 = (self.sigma - (c + x) / q.sqrt()) / m;
        let d2 = pow2(2 - 4 * self.j) * m * m * m * q.powf(-1.5);
        (d1, d2)
    }
}

/// `(gamma', gamma'')` of the plus branch on the amplitude support.
pub fn phase_derivatives(mp: &ModePhase, x: f64) -> Result<(f64, f64)> {
    let sup = mp.support();
    let tol = 1e-12 * sup.b;
    if !(x >= sup.a - tol && x <= sup.b + tol) {
        return Err(Error::OutOfSupport(x));
    }
    Ok(mp.plus_derivs(x))
}

/// Amplitude `R(4x + 4^j x^2/M^2) e^{-4^j x z^2/M} L_m(2 4^j x z^2/M) x^n / M^{n+1}`
/// for `x >= 0` (it is even in `x`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitude {
    pub j: i32,
    pub m: usize,
    pub big_m: f64,
    pub z_modulus: f64,
    pub n: usize,
    pub profile: DyadicProfile,
}

impl ModeAmplitude {
    pub fn new(j: i32, m: usize, z_modulus: f64, params: GroupParams, profile: DyadicProfile) -> Self {
        ModeAmplitude { j, m, big_m: params.mode_weight(m), z_modulus, n: params.n, profile }
    }

    pub fn support(&self) -> ModeSupport {
        ModeSupport::new(self.j, self.big_m)
    }

    fn tau(&self, x: f64) -> (f64, f64) {
        let k = pow2(2 * self.j) / (self.big_m * self.big_m);
        (4.0 * x + k * x * x, 4.0 + 2.0 * k * x)
    }

    fn kappa(&self) -> f64 {
        pow2(1 + 2 * self.j) * self.z_modulus * self.z_modulus / self.big_m
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        let (tau, _) = self.tau(x);
        let r = self.profile.eval(tau);
        if r == 0.0 {
            return 0.0;
        }
        let u = self.kappa() * x;
        let alpha = (self.n - 1) as f64;
        r * (-0.5 * u).exp() * laguerre(self.m, alpha, u) * x.powi(self.n as i32) / self.big_m.powi(self.n as i32 + 1)
    }

    /// Derivative for `x > 0`.
    pub fn deriv(&self, x: f64) -> f64 {
        let (tau, dtau) = self.tau(x);
        let r = self.profile.eval(tau);
        let dr = self.profile.deriv(tau) * dtau;
        if r == 0.0 && dr == 0.0 {
            return 0.0;
        }
        let kap = self.kappa();
        let u = kap * x;
        let alpha = (self.n - 1) as f64;
        let e = (-0.5 * u).exp();
        let l = laguerre(self.m, alpha, u);
        let f = e * l;
        let df = kap * e * (laguerre_deriv(self.m, alpha, u) - 0.5 * l);
        let n = self.n as i32;
        let p = x.powi(n) / self.big_m.powi(n + 1);
        let dp = n as f64 * x.powi(n - 1) / self.big_m.powi(n + 1);
        dr * f * p + r * df * p + r * f * dp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// The oscillatory integral of mode `m` on `[a, b]` with frequency
/// `omega = t 4^j`.
pub fn wave_mode_problem(
    j: i32,
    t: f64,
    sigma: f64,
    amp: ModeAmplitude,
    params: GroupParams,
    branch: Branch,
) -> Result<OscillatoryProblem> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam("mode problems need t > 0".into()));
    }
    let mp = ModePhase::new(j, sigma, amp.m, params);
    let sup = mp.support();
    let (phase, d1, d2): (Arc<dyn Fn(f64) -> f64 + Send + Sync>, Arc<dyn Fn(f64) -> f64 + Send + Sync>, Arc<dyn Fn(f64) -> f64 + Send + Sync>) =
        match branch {
            Branch::Plus => (
                Arc::new(move |x| mp.plus(x)),
                Arc::new(move |x| mp.plus_derivs(x).0),
                Arc::new(move |x| mp.plus_derivs(x).1),
            ),
            Branch::Minus => (
                Arc::new(move |x| mp.minus(x)),
                Arc::new(move |x| mp.minus_derivs(x).0),
                Arc::new(move |x| mp.minus_derivs(x).1),
            ),
        };
    let time_scale = pow2(2 * j);
    Ok(OscillatoryProblem::new(
        phase,
        vec![d1, d2],
        Arc::new(move |x| Complex64::new(amp.eval(x), 0.0)),
        Arc::new(move |x| Complex64::new(amp.deriv(x), 0.0)),
        (sup.a, sup.b),
        t * time_scale,
    )?
    .with_time_scale(time_scale))
}

/// Mode sum with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSum {
    pub value: Complex64,
    /// Number of modes summed.
    pub modes: usize,
    /// Estimated bound on the discarded modes.
    pub tail: f64,
}

/// Largest mode count considered by the tail control.
pub const MODE_CAP: usize = 4000;

/// `sup |u d/du (e^{-u/2} L_m(u))|` and `sup |e^{-u/2} L_m(u)|` (the latter
/// equals the value at 0) for the Laguerre type `n - 1`.
fn laguerre_constants(m: usize, n: usize) -> (f64, f64) {
    let alpha = (n - 1) as f64;
    let big_m = (2 * m + n) as f64;
    let samples = 40 * (m + 1) + 400;
    let (sup, dsup) = laguerre_function_sup(m, alpha, 4.0 * big_m + 80.0, samples);
    (sup.max(mode_multiplicity(m, n)), dsup * 1.05)
}

/// Upper bound on `|I_m|` (one branch, one sign of x) from van der
/// Corput with `k = 2`, `delta = 2^{-1-j}` and an amplitude variation bound
/// uniform in `|z|`.
pub fn per_mode_bound(j: i32, t: f64, m: usize, params: GroupParams, profile: DyadicProfile) -> f64 {
    let n = params.n;
    let big_m = params.mode_weight(m);
    let sup = ModeSupport::new(j, big_m);
    let (b_m, d_m) = laguerre_constants(m, n);
    let k = pow2(2 * j) / (big_m * big_m);
    let ni = n as i32;
    let dr = |x: f64| (profile.deriv(4.0 * x + k * x * x) * (4.0 + 2.0 * k * x)).abs() * x.powi(ni);
    let r0 = |x: f64| profile.eval(4.0 * x + k * x * x) * x.powi(ni - 1);
    let quad = |f: &dyn Fn(f64) -> f64| {
        let s = gk15(&f, sup.a, sup.b).0.abs();
        adaptive(f, sup.a, sup.b, 16, 1e-12 * s.max(1e-300), 1e-10, 100_000).map(|r| r.value).unwrap_or(s)
    };
    let w = (b_m * quad(&dr) + (d_m + n as f64 * b_m) * quad(&r0)) / big_m.powi(ni + 1);
    let omega = t.abs() * pow2(2 * j);
    8.0 * (omega * pow2(-1 - j)).powf(-0.5) * w
}

/// `int |h_m| <=` mode-m bound without oscillation.
pub fn per_mode_trivial(j: i32, m: usize, params: GroupParams, profile: DyadicProfile) -> f64 {
    let n = params.n as i32;
    let big_m = params.mode_weight(m);
    let sup = ModeSupport::new(j, big_m);
    let k = pow2(2 * j) / (big_m * big_m);
    let f = |x: f64| profile.eval(4.0 * x + k * x * x) * x.powi(n);
    let s = gk15(&f, sup.a, sup.b).0;
    let v = adaptive(f, sup.a, sup.b, 16, 1e-12 * s.max(1e-300), 1e-10, 100_000).map(|r| r.value).unwrap_or(s);
    mode_multiplicity(m, params.n) * v / big_m.powi(n + 1)
}

/// The decay shape of the per-mode estimate: `t^{-1/2} 2^{-(n+1/2) j} M^{n-2}`
/// for `M <= 2^j`, `t^{-1/2} 2^{-j/2} M^{-2}` beyond.
pub fn per_mode_rate(j: i32, t: f64, m: usize, params: GroupParams) -> f64 {
    let big_m = params.mode_weight(m);
    let n = params.n as f64;
    let ti = t.abs().powf(-0.5);
    if big_m <= pow2(j) {
        ti * 2f64.powf(-(n + 0.5) * j as f64) * big_m.powf(n - 2.0)
    } else {
        ti * 2f64.powf(-0.5 * j as f64) * big_m.powi(-2)
    }
}

/// Modes beyond this index use the `M^{-2}` extrapolation of the bound at
/// this index instead of sampling the Laguerre functions.
const EXACT_BOUND_MODES: usize = 64;

/// `min(per_mode_bound, per_mode_trivial)`, extrapolated past
/// [`EXACT_BOUND_MODES`].
fn mode_bound(j: i32, t: f64, m: usize, params: GroupParams, profile: DyadicProfile) -> f64 {
    let exact = |m: usize| per_mode_bound(j, t, m, params, profile).min(per_mode_trivial(j, m, params, profile));
    if m <= EXACT_BOUND_MODES {
        return exact(m);
    }
    let n = params.n as i32;
    let (m0, mm) = (params.mode_weight(EXACT_BOUND_MODES), params.mode_weight(m));
    let growth = ((m + 1) as f64 / (EXACT_BOUND_MODES + 1) as f64).powi(n - 1);
    exact(EXACT_BOUND_MODES) * (m0 / mm).powi(2) * growth
}

/// Bound on the kernel-level contribution of all modes `>= m_cut`,
/// extrapolated from the bound at `m_cut` with the `M^{-2}` decay of the
/// per-mode estimate.
pub fn mode_tail(j: i32, t: f64, m_cut: usize, params: GroupParams, profile: DyadicProfile) -> f64 {
    let pref = params.plancherel_const() * pow2(params.homogeneous_dim() as i32 * j);
    let big_m = params.mode_weight(m_cut);
    2.0 * pref * mode_bound(j, t, m_cut, params, profile) * (1.0 + big_m / 2.0) * 1.5
}

/// Smallest mode count (a power of two) whose tail bound is at most `tol`.
pub fn choose_mode_cut(j: i32, t: f64, tol: f64, params: GroupParams, profile: DyadicProfile) -> Result<(usize, f64)> {
    let mut m = 1usize;
    loop {
        let tail = mode_tail(j, t, m, params, profile);
        if tail <= tol {
            return Ok((m, tail));
        }
        if m >= MODE_CAP {
            return Err(Error::TailUnstable { tail, cap: MODE_CAP });
        }
        m = (m * 2).min(MODE_CAP);
    }
}

/// How many Laguerre modes a mode sum keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCut {
    /// Exactly this many modes (the truncated kernel).
    Fixed(usize),
    /// As many as needed for the tail bound to fall below the tolerance.
    Tail(f64),
}

impl ModeCut {
    pub fn resolve(self, j: i32, t: f64, params: GroupParams, profile: DyadicProfile) -> Result<(usize, f64)> {
        match self {
            ModeCut::Fixed(k) => {
                if k == 0 {
                    return Err(Error::InvalidParam("need at least one mode".into()));
                }
                Ok((k, mode_tail(j, t, k, params, profile)))
            }
            ModeCut::Tail(tol) => choose_mode_cut(j, t, tol, params, profile),
        }
    }
}

/// `e^{-it sqrt(L)} psi_j` at `(|z| = r, s = sigma t)` by the mode sum of
/// oscillatory integrals; `tol` is the absolute quadrature target for the
/// retained modes.
pub fn halfwave_on_kernel(
    j: i32,
    t: f64,
    r: f64,
    sigma: f64,
    params: GroupParams,
    profile: DyadicProfile,
    cut: ModeCut,
    tol: f64,
) -> Result<ModeSum> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidParam("t must be nonzero".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParam("tol must be positive".into()));
    }
    let ta = t.abs();
    let (modes, tail) = cut.resolve(j, ta, params, profile)?;
    let pref = params.plancherel_const() * pow2(params.homogeneous_dim() as i32 * j);
    let per = tol / (2.0 * modes as f64 * pref);
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..modes {
        let amp = ModeAmplitude::new(j, m, r, params, profile);
        for sg in [sigma, -sigma] {
            let p = wave_mode_problem(j, ta, sg, amp, params, Branch::Plus)?;
            total += integrate(&p, per)?;
        }
    }
    let value = total * pref;
    Ok(ModeSum { value: if t < 0.0 { value.conj() } else { value }, modes, tail })
}

/// Region of the mode index in the `n = 1`, `j >= 0` case analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeClass {
    A1,
    A2,
    A3,
    A4,
    A5,
}

/// Evaluates the five defining inequalities for `n = 1`, `j >= 0`.
pub fn classify_mode(j: i32, t: f64, sigma: f64, m: usize) -> Result<ModeClass> {
    if j < 0 || t == 0.0 {
        return Err(Error::InvalidParam("classification needs j >= 0 and t != 0".into()));
    }
    let big_m = (2 * m + 1) as f64;
    let two_j = pow2(j);
    if big_m > two_j {
        return Ok(ModeClass::A1);
    }
    if big_m <= t.abs().powf(-0.5) * 2f64.powf(0.5 * j as f64) {
        return Ok(ModeClass::A2);
    }
    let lo = -(1.0 + pow2(-1 - 2 * j) * big_m * big_m).sqrt();
    let hi = -(1.0 + pow2(5 - 2 * j) * big_m * big_m).sqrt();
    if sigma >= lo {
        Ok(ModeClass::A3)
    } else if sigma <= hi {
        Ok(ModeClass::A4)
    } else {
        Ok(ModeClass::A5)
    }
}

/// The two single-mode test families: `v_j` (full scale) and `w_j` (Kohn
/// scale).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharpFamily {
    Vj,
    Wj,
}

impl std::str::FromStr for SharpFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vj" | "v" => Ok(SharpFamily::Vj),
            "wj" | "w" => Ok(SharpFamily::Wj),
            _ => Err(Error::InvalidParam(format!("unknown family '{s}'"))),
        }
    }
}

/// Critical point `x_j` and the speed `sigma_j < 0` at which the plus
/// phase of mode 0 is stationary there.
pub fn stationary_sigma(j: i32, params: GroupParams, which: SharpFamily) -> (f64, f64) {
    let n = params.n as f64;
    let x = match which {
        SharpFamily::Vj => 1.0 / ((4.0 + pow2(2 * j) / (n * n)).sqrt() + 2.0),
        SharpFamily::Wj => 0.25,
    };
    let q = pow2(2 - 2 * j) * n * n * x + x * x;
    let sigma = -(1.0 + pow2(2 - 4 * j) * n.powi(4) / q).sqrt();
    (x, sigma)
}

/// Symbol of `v_j`: `R(4^{-j}(4 n lambda + lambda^2))` on mode 0, `lambda > 0`.
pub fn vj_symbol(j: i32, params: GroupParams, profile: DyadicProfile) -> SpectralSymbol {
    let n = params.n as f64;
    let root = |c: f64| c / ((4.0 * n * n + c).sqrt() + 2.0 * n);
    let (lo, hi) = (root(pow2(2 * j - 2)), root(pow2(2 * j + 2)));
    let sc = pow2(-2 * j);
    SpectralSymbol::new(
        params,
        vec![vec![(lo, hi)]],
        Arc::new(move |_, l| Complex64::new(profile.eval(sc * (4.0 * n * l + l * l)), 0.0)),
    )
    .expect("bounded band")
}

/// Symbol of `w_j`: `R(4^{1-j} n lambda)` on mode 0, `lambda > 0`.
pub fn wj_symbol(j: i32, params: GroupParams, profile: DyadicProfile) -> SpectralSymbol {
    let n = params.n as f64;
    let sc = pow2(2 - 2 * j) * n;
    SpectralSymbol::new(
        params,
        vec![vec![(0.25 / sc, 4.0 / sc)]],
        Arc::new(move |_, l| Complex64::new(profile.eval(sc * l), 0.0)),
    )
    .expect("bounded band")
}

/// Amplitude of the single-mode families at `z = 0`.
fn sharp_amplitude(j: i32, params: GroupParams, profile: DyadicProfile, which: SharpFamily) -> (RealAmp, (f64, f64)) {
    let n = params.n as i32;
    let nf = params.n as f64;
    match which {
        SharpFamily::Vj => {
            let amp = ModeAmplitude::new(j, 0, 0.0, params, profile);
            let s = amp.support();
            (RealAmp { f: Arc::new(move |x| amp.eval(x)), df: Arc::new(move |x| amp.deriv(x)) }, (s.a, s.b))
        }
        SharpFamily::Wj => {
            let c = nf.powi(n + 1);
            (
                RealAmp {
                    f: Arc::new(move |x| profile.eval(4.0 * x) * x.powi(n) / c),
                    df: Arc::new(move |x| {
                        (4.0 * profile.deriv(4.0 * x) * x.powi(n) + profile.eval(4.0 * x) * nf * x.powi(n - 1)) / c
                    }),
                },
                (1.0 / 16.0, 1.0),
            )
        }
    }
}

#[derive(Clone)]
struct RealAmp {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// Mode-0 problem for `v_j` / `w_j` at `z = 0` on the given branch.
pub fn sharp_problem(
    j: i32,
    t: f64,
    sigma: f64,
    params: GroupParams,
    profile: DyadicProfile,
    which: SharpFamily,
    branch: Branch,
) -> Result<OscillatoryProblem> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam("need t > 0".into()));
    }
    let mp = ModePhase::new(j, sigma, 0, params);
    let (amp, (a, b)) = sharp_amplitude(j, params, profile, which);
    let (phase, d1, d2): (Arc<dyn Fn(f64) -> f64 + Send + Sync>, Arc<dyn Fn(f64) -> f64 + Send + Sync>, Arc<dyn Fn(f64) -> f64 + Send + Sync>) =
        match branch {
            Branch::Plus => (
                Arc::new(move |x| mp.plus(x)),
                Arc::new(move |x| mp.plus_derivs(x).0),
                Arc::new(move |x| mp.plus_derivs(x).1),
            ),
            Branch::Minus => (
                Arc::new(move |x| mp.minus(x)),
                Arc::new(move |x| mp.minus_derivs(x).0),
                Arc::new(move |x| mp.minus_derivs(x).1),
            ),
        };
    let (f, df) = (amp.f.clone(), amp.df.clone());
    let ts = pow2(2 * j);
    Ok(OscillatoryProblem::new(
        phase,
        vec![d1, d2],
        Arc::new(move |x| Complex64::new(f(x), 0.0)),
        Arc::new(move |x| Complex64::new(df(x), 0.0)),
        (a, b),
        t * ts,
    )?
    .with_time_scale(ts))
}

/// `cos(t sqrt(L)) u (0, sigma t)` for `u = v_j` or `w_j`, split by branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineValue {
    /// `int e^{-i t 4^j g} h` (stationary branch, unscaled).
    pub plus: Complex64,
    /// `int e^{-i t 4^j g~} h` (non-stationary branch, unscaled).
    pub minus: Complex64,
    /// `(c/2) 2^{Nj} (plus + minus)`: the kernel value.
    pub value: Complex64,
    /// `(c/2) 2^{Nj}`.
    pub prefactor: f64,
}

fn sharp_value(
    j: i32,
    t: f64,
    sigma: f64,
    params: GroupParams,
    profile: DyadicProfile,
    tol: f64,
    which: SharpFamily,
) -> Result<CosineValue> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidParam("t must be nonzero".into()));
    }
    // cos is even in t; s = sigma t is kept fixed.
    let (ta, sg) = if t < 0.0 { (-t, -sigma) } else { (t, sigma) };
    let prefactor = 0.5 * params.plancherel_const() * pow2(params.homogeneous_dim() as i32 * j);
    let per = 0.5 * tol / prefactor;
    let plus = integrate(&sharp_problem(j, ta, sg, params, profile, which, Branch::Plus)?, per)?;
    let minus = integrate(&sharp_problem(j, ta, sg, params, profile, which, Branch::Minus)?, per)?;
    Ok(CosineValue { plus, minus, value: (plus + minus) * prefactor, prefactor })
}

/// `cos(t sqrt(L)) v_j (0, sigma t)`.
pub fn vj_value(j: i32, t: f64, sigma: f64, params: GroupParams, profile: DyadicProfile, tol: f64) -> Result<CosineValue> {
    sharp_value(j, t, sigma, params, profile, tol, SharpFamily::Vj)
}

/// `cos(t sqrt(L)) w_j (0, sigma t)`.
pub fn wj_value(j: i32, t: f64, sigma: f64, params: GroupParams, profile: DyadicProfile, tol: f64) -> Result<CosineValue> {
    sharp_value(j, t, sigma, params, profile, tol, SharpFamily::Wj)
}

/// Stationary-phase lower bound for the plus branch at `(x_j, sigma_j)`.
pub fn sharp_lower(
    j: i32,
    t: f64,
    params: GroupParams,
    profile: DyadicProfile,
    which: SharpFamily,
) -> Result<StationaryBound> {
    let (x0, sigma) = stationary_sigma(j, params, which);
    let p = sharp_problem(j, t, sigma, params, profile, which, Branch::Plus)?;
    let cp = CriticalPoint::new(&p, x0).or_else(|_| CriticalPoint::locate(&p))?;
    crate::oscillatory::stationary_lower(&p, &cp)
}

/// `sin(t sqrt(xi)) / sqrt(xi)`, by its Taylor series when `xi t^2` is small.
pub fn sinc_multiplier(t: f64, xi: f64) -> f64 {
    let y = xi * t * t;
    if y < 1e-4 {
        t * (1.0 - y / 6.0 + y * y / 120.0 - y * y * y / 5040.0)
    } else {
        let w = xi.sqrt();
        (t * w).sin() / w
    }
}

pub fn cos_multiplier(t: f64, xi: f64) -> f64 {
    (t * xi.sqrt()).cos()
}

/// Band-limited forcing `f(tau) = theta(tau) F`.
#[derive(Clone)]
pub struct Forcing {
    pub symbol: SpectralSymbol,
    pub time_profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// Symbol of `int_0^t sin((t - tau) sqrt(L)) / sqrt(L) f(tau) dtau`, the
/// time integral done by composite GK15 on `panels` panels.
pub fn duhamel_symbol(forcing: &Forcing, t: f64, panels: usize) -> Result<SpectralSymbol> {
    if panels == 0 {
        return Err(Error::InvalidParam("need at least one time panel".into()));
    }
    let grid = Grid::gk_panels(0.0, t.abs().max(f64::MIN_POSITIVE), panels)?;
    let sign = t.signum();
    let theta = forcing.time_profile.clone();
    let nodes: Vec<(f64, f64)> = grid.nodes.iter().zip(&grid.weights).map(|(&x, &w)| (sign * x, sign * w)).collect();
    let values: Vec<f64> = nodes.iter().map(|&(x, _)| theta(x)).collect();
    Ok(forcing.symbol.full_multiplier(move |xi| {
        let s: f64 = nodes.iter().zip(&values).map(|(&(tau, w), &th)| w * sinc_multiplier(t - tau, xi) * th).sum();
        Complex64::new(s, 0.0)
    }))
}

/// Symbol of the solution of `u_tt + L u = f`, `u(0) = u0`, `u_t(0) = u1`.
pub fn cauchy_symbol(
    u0: &SpectralSymbol,
    u1: &SpectralSymbol,
    forcing: Option<&Forcing>,
    t: f64,
    panels: usize,
) -> Result<SpectralSymbol> {
    let v = u0.full_multiplier(move |xi| Complex64::new(cos_multiplier(t, xi), 0.0));
    let w = u1.full_multiplier(move |xi| Complex64::new(sinc_multiplier(t, xi), 0.0));
    let mut out = v.add(&w);
    if let Some(f) = forcing {
        out = out.add(&duhamel_symbol(f, t, panels)?);
    }
    Ok(out)
}

/// Space-side Duhamel term on an automatic sampling plan.
pub fn duhamel(forcing: &Forcing, t: f64, panels: usize, opts: &PlanOptions) -> Result<RadialFunction> {
    let sym = duhamel_symbol(forcing, t, panels)?;
    let plan = SamplingPlan::for_symbol(&sym, opts)?;
    inverse_transform_planned(&sym, &plan)
}

/// Space-side solution of the Cauchy problem on an automatic sampling plan.
pub fn cauchy_solution(
    u0: &SpectralSymbol,
    u1: &SpectralSymbol,
    forcing: Option<&Forcing>,
    t: f64,
    panels: usize,
    opts: &PlanOptions,
) -> Result<RadialFunction> {
    let sym = cauchy_symbol(u0, u1, forcing, t, panels)?;
    let plan = SamplingPlan::for_symbol(&sym, opts)?;
    inverse_transform_planned(&sym, &plan)
}

/// `||sqrt(L) v(t)||^2 + ||d_t v(t)||^2` for the homogeneous solution.
pub fn wave_energy(u0: &SpectralSymbol, u1: &SpectralSymbol, t: f64) -> f64 {
    let p = u0.params;
    let grad = |m: usize, l: f64| {
        let xi = p.full_eigenvalue(m, l);
        let w = xi.sqrt();
        let (a, b) = (u0.value(m, l), u1.value(m, l));
        let v = a * (t * w).cos() + b * sinc_multiplier(t, xi);
        let dv = -a * w * (t * w).sin() + b * (t * w).cos();
        xi * v.norm_sqr() + dv.norm_sqr()
    };
    let support = u0.add(u1);
    support.plancherel_integral(grad)
}

/// Symbol of `e^{-it sqrt(L)} u`.
pub fn halfwave_symbol(u: &SpectralSymbol, t: f64) -> SpectralSymbol {
    u.full_multiplier(move |xi| Complex64::from_polar(1.0, -t * xi.sqrt()))
}

/// Symbol of `cos(t sqrt(L)) u`.
pub fn cosine_symbol(u: &SpectralSymbol, t: f64) -> SpectralSymbol {
    u.full_multiplier(move |xi| Complex64::new(cos_multiplier(t, xi), 0.0))
}

/// Symbol of `e^{-itL} u`.
pub fn schrodinger_symbol(u: &SpectralSymbol, t: f64) -> SpectralSymbol {
    u.full_multiplier(move |xi| Complex64::from_polar(1.0, -t * xi))
}

/// Schrödinger analogue of [`halfwave_on_kernel`]: phase
/// `sigma x / M + 4 x + 4^j x^2 / M^2` with the same amplitudes.
pub fn schrodinger_on_kernel(
    j: i32,
    t: f64,
    r: f64,
    sigma: f64,
    params: GroupParams,
    profile: DyadicProfile,
    modes: usize,
    tol: f64,
) -> Result<ModeSum> {
    if !(t > 0.0) {
        return Err(Error::InvalidParam("need t > 0".into()));
    }
    if modes == 0 {
        return Err(Error::InvalidParam("need at least one mode".into()));
    }
    let pref = params.plancherel_const() * pow2(params.homogeneous_dim() as i32 * j);
    let per = tol / (2.0 * modes as f64 * pref);
    let mut total = Complex64::new(0.0, 0.0);
    let k = pow2(2 * j);
    for m in 0..modes {
        let amp = ModeAmplitude::new(j, m, r, params, profile);
        let sup = amp.support();
        let big_m = amp.big_m;
        for sg in [sigma, -sigma] {
            let p = OscillatoryProblem::new(
                Arc::new(move |x| sg * x / big_m + 4.0 * x + k * x * x / (big_m * big_m)),
                vec![
                    Arc::new(move |x| sg / big_m + 4.0 + 2.0 * k * x / (big_m * big_m)),
                    Arc::new(move |_| 2.0 * k / (big_m * big_m)),
                ],
                Arc::new(move |x| Complex64::new(amp.eval(x), 0.0)),
                Arc::new(move |x| Complex64::new(amp.deriv(x), 0.0)),
                (sup.a, sup.b),
                t * k,
            )?
            .with_time_scale(k);
            total += integrate(&p, per)?;
        }
    }
    Ok(ModeSum { value: total * pref, modes, tail: f64::NAN })
}
