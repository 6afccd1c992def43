//! Homogeneous Besov norms on the Kohn and full-Laplacian scales, the
//! inclusion and kernel-asymptotics checks, and exact Strichartz exponent
//! arithmetic.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fit::{fit_power, Axis, DecayFit};
use crate::littlewood_paley::{lp_symbol, project, OperatorTag};
use crate::profile::DyadicProfile;
use crate::propagator::vj_symbol;
use crate::spectral::{
    forward_transform, inverse_transform_planned, plancherel_norm, GroupParams, PlanOptions, RadialFunction,
    SamplingPlan, SpectralSymbol,
};

/// Default dyadic window for [`besov_norm`].
pub const DEFAULT_WINDOW: (i32, i32) = (-8, 8);

/// Relative change allowed when the window is widened by two blocks.
pub const WINDOW_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    pub tag: OperatorTag,
    pub rho: f64,
    /// Dyadic summability in `[1, inf]`.
    pub q: f64,
    /// Lebesgue exponent in `[1, inf]`.
    pub r: f64,
}

impl BesovSpec {
    pub fn new(tag: OperatorTag, rho: f64, q: f64, r: f64) -> Result<Self> {
        if !(q >= 1.0) || !(r >= 1.0) || !rho.is_finite() {
            return Err(Error::InvalidParam(format!("need q, r in [1, inf] and finite rho (q={q}, r={r}, rho={rho})")));
        }
        Ok(BesovSpec { tag, rho, q, r })
    }

    /// `rho < N/r`, the range where the homogeneous space is normed.
    pub fn is_normed(&self, params: GroupParams) -> bool {
        self.rho < params.homogeneous_dim() as f64 / self.r
    }
}

/// Knobs for space-side block norms (`r != 2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockOptions {
    pub plan: PlanOptions,
    /// Recompute on a grid of twice the extent and require agreement to
    /// [`WINDOW_TOL`].
    pub verify_extent: bool,
}

impl Default for BlockOptions {
    fn default() -> Self {
        BlockOptions { plan: PlanOptions::default(), verify_extent: true }
    }
}

fn lq(vals: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        vals.iter().copied().fold(0.0, f64::max)
    } else {
        vals.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

fn space_lr(block: &SpectralSymbol, r: f64, plan: &PlanOptions) -> Result<f64> {
    let sp = SamplingPlan::for_symbol(block, plan)?;
    Ok(inverse_transform_planned(block, &sp)?.lp_norm(r))
}

/// `||f||_{L^r}` of a band-limited symbol: Plancherel for `r = 2`, radial
/// Haar quadrature of the inverse transform otherwise.
pub fn block_norm(block: &SpectralSymbol, r: f64, opts: &BlockOptions) -> Result<f64> {
    if block.is_zero() {
        return Ok(0.0);
    }
    if r == 2.0 {
        return Ok(plancherel_norm(block));
    }
    let v = space_lr(block, r, &opts.plan)?;
    if opts.verify_extent {
        // r_max^2 is proportional to 4M + r_tail; doubling r_max.
        let big_m = block.params.mode_weight(block.mode_count());
        let wide = PlanOptions {
            s_factor: 2.0 * opts.plan.s_factor,
            r_tail: 12.0 * big_m + 4.0 * opts.plan.r_tail,
            ..opts.plan
        };
        let w = space_lr(block, r, &wide)?;
        let rel = (w - v).abs() / w.max(f64::MIN_POSITIVE);
        if rel > WINDOW_TOL {
            return Err(Error::GridTooCoarse { estimate: rel, tol: WINDOW_TOL });
        }
    }
    Ok(v)
}

/// Range of `j` whose projections on the tagged scale can meet the support.
pub fn support_window(u: &SpectralSymbol, tag: OperatorTag) -> Option<(i32, i32)> {
    if u.is_zero() {
        return None;
    }
    let p = u.params;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for m in 0..u.mode_count() {
        for &(a, b) in u.lambda_support(m) {
            let (x, y) = (tag.eigenvalue(p, m, a), tag.eigenvalue(p, m, b));
            lo = lo.min(x.min(y));
            hi = hi.max(x.max(y));
        }
    }
    // Block j lives on 4^{j-1} <= xi <= 4^{j+1}.
    let lo4 = lo.max(f64::MIN_POSITIVE).log(4.0);
    let hi4 = hi.log(4.0);
    Some(((lo4 - 1.0).floor() as i32, (hi4 + 1.0).ceil() as i32))
}

/// `(j, 2^{j rho} ||Delta_j u||_{L^r})` for `j` in the window.
pub fn block_norms(
    u: &SpectralSymbol,
    spec: &BesovSpec,
    window: (i32, i32),
    profile: DyadicProfile,
    opts: &BlockOptions,
) -> Result<Vec<(i32, f64)>> {
    let avail = support_window(u, spec.tag);
    (window.0..=window.1)
        .into_par_iter()
        .map(|j| {
            let inside = avail.is_some_and(|(a, b)| j >= a && j <= b);
            let v = if inside { block_norm(&project(u, spec.tag, j, profile), spec.r, opts)? } else { 0.0 };
            Ok((j, 2f64.powf(j as f64 * spec.rho) * v))
        })
        .collect()
}

/// `|| {2^{j rho} ||Delta_j u||_{L^r}} ||_{l^q}` over `window`; fails with
/// `WindowUnstable` if widening the window by two blocks on each side
/// changes the value by more than [`WINDOW_TOL`] relative.
pub fn besov_norm(
    u: &SpectralSymbol,
    spec: &BesovSpec,
    window: (i32, i32),
    profile: DyadicProfile,
    opts: &BlockOptions,
) -> Result<f64> {
    if window.0 > window.1 {
        return Err(Error::InvalidParam(format!("empty window {window:?}")));
    }
    let blocks = block_norms(u, spec, (window.0 - 2, window.1 + 2), profile, opts)?;
    let inner: Vec<f64> = blocks.iter().filter(|(j, _)| *j >= window.0 && *j <= window.1).map(|b| b.1).collect();
    let all: Vec<f64> = blocks.iter().map(|b| b.1).collect();
    let (a, b) = (lq(&inner, spec.q), lq(&all, spec.q));
    if b > 0.0 {
        let rel = (b - a) / b;
        if rel > WINDOW_TOL {
            return Err(Error::WindowUnstable(rel));
        }
    }
    Ok(a)
}

/// [`besov_norm`] on the window covering the support of `u`.
pub fn besov_norm_auto(u: &SpectralSymbol, spec: &BesovSpec, profile: DyadicProfile, opts: &BlockOptions) -> Result<f64> {
    match support_window(u, spec.tag) {
        None => Ok(0.0),
        Some(w) => besov_norm(u, spec, w, profile, opts),
    }
}

/// Besov norm of sampled space data: forward transform on `modes` modes and
/// the sorted nonzero `lambdas`, then [`besov_norm`].
pub fn besov_norm_space(
    f: &RadialFunction,
    modes: usize,
    lambdas: &[f64],
    spec: &BesovSpec,
    window: (i32, i32),
    profile: DyadicProfile,
    opts: &BlockOptions,
) -> Result<f64> {
    if modes == 0 {
        return Err(Error::InvalidParam("need at least one mode".into()));
    }
    let sym = forward_transform(f, modes - 1, lambdas, 1e-4)?;
    besov_norm(&sym, spec, window, profile, opts)
}

/// `||v_j||_{B^rho_{1,1}} / 2^{j rho}` on the full-Laplacian scale.
pub fn vj_besov_bound(j: i32, rho: f64, params: GroupParams, profile: DyadicProfile, opts: &BlockOptions) -> Result<f64> {
    let spec = BesovSpec::new(OperatorTag::Full, rho, 1.0, 1.0)?;
    let v = vj_symbol(j, params, profile);
    Ok(besov_norm_auto(&v, &spec, profile, opts)? / 2f64.powf(j as f64 * rho))
}

/// Fits the dyadic growth of `||phi_j||` in `B^rho_{q,2}` on the given
/// scale, `phi_j` being the Kohn kernel truncated to `modes` modes.
pub fn kernel_norm_asymptotics(
    space: OperatorTag,
    rho: f64,
    q: f64,
    j_list: &[i32],
    params: GroupParams,
    profile: DyadicProfile,
    modes: usize,
) -> Result<DecayFit> {
    if j_list.iter().any(|&j| j <= 0) {
        return Err(Error::InvalidParam("kernel asymptotics need j > 0".into()));
    }
    let n_dim = params.homogeneous_dim() as f64;
    if !(rho >= 0.0 && rho < n_dim / 2.0) {
        return Err(Error::InvalidParam(format!("need 0 <= rho < N/2, got {rho}")));
    }
    let spec = BesovSpec::new(space, rho, q, 2.0)?;
    let norms: Vec<f64> = j_list
        .iter()
        .map(|&j| {
            let phi = lp_symbol(OperatorTag::Kohn, j, profile, params, modes);
            besov_norm_auto(&phi, &spec, profile, &BlockOptions::default())
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = j_list.iter().map(|&j| j as f64).collect();
    fit_power(&xs, &norms, Axis::Dyadic)?.require_r_squared(0.99)
}

/// `||u||_{B(num)} / ||u||_{B(den)}` for the same `(rho, q, r)`.
pub fn scale_ratio(
    u: &SpectralSymbol,
    rho: f64,
    q: f64,
    r: f64,
    num: OperatorTag,
    den: OperatorTag,
    profile: DyadicProfile,
    opts: &BlockOptions,
) -> Result<f64> {
    let a = besov_norm_auto(u, &BesovSpec::new(num, rho, q, r)?, profile, opts)?;
    let b = besov_norm_auto(u, &BesovSpec::new(den, rho, q, r)?, profile, opts)?;
    if b == 0.0 {
        return Err(Error::ZeroDenominator("Besov norm vanishes".into()));
    }
    Ok(a / b)
}

/// Largest `||u||_{B(Kohn)} / ||u||_{B(Full)}` over the samples.
pub fn inclusion_check(
    rho: f64,
    q: f64,
    r: f64,
    samples: &[SpectralSymbol],
    profile: DyadicProfile,
    opts: &BlockOptions,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for u in samples {
        worst = worst.max(scale_ratio(u, rho, q, r, OperatorTag::Kohn, OperatorTag::Full, profile, opts)?);
    }
    Ok(worst)
}

/// An exponent in `[1, inf]` held through its exact reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponent {
    pub inv: Ratio<i64>,
}

impl Exponent {
    pub fn infinite() -> Self {
        Exponent { inv: Ratio::from_integer(0) }
    }

    pub fn from_inverse(inv: Ratio<i64>) -> Result<Self> {
        if inv < Ratio::from_integer(0) || inv > Ratio::from_integer(1) {
            return Err(Error::InvalidParam(format!("reciprocal exponent {inv} outside [0, 1]")));
        }
        Ok(Exponent { inv })
    }

    pub fn is_infinite(&self) -> bool {
        self.inv == Ratio::from_integer(0)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            *self.inv.denom() as f64 / *self.inv.numer() as f64
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.inv.recip())
        }
    }
}

/// Accepts `inf`, integers and `a/b`; decimal points are rejected.
impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(Exponent::infinite());
        }
        let bad = || Error::InvalidParam(format!("exponent '{s}' must be an integer, a fraction a/b, or inf"));
        let (a, b) = match t.split_once('/') {
            Some((a, b)) => (a.trim().parse::<i64>().map_err(|_| bad())?, b.trim().parse::<i64>().map_err(|_| bad())?),
            None => (t.parse::<i64>().map_err(|_| bad())?, 1),
        };
        if a <= 0 || b <= 0 {
            return Err(bad());
        }
        Exponent::from_inverse(Ratio::new(b, a))
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrichartzRegion {
    /// Regularity window for the initial data (shifted by `+1`).
    DataWindow,
    /// Regularity window for the forcing term.
    ForcingWindow,
    /// The `(1/r, 1/p)` region of the mixed `L^p L^r` estimate; no `rho`.
    LpLr,
}

impl FromStr for StrichartzRegion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['.', '_'], "-").as_str() {
            "data-window" | "data" | "b" => Ok(StrichartzRegion::DataWindow),
            "forcing-window" | "forcing" | "c" => Ok(StrichartzRegion::ForcingWindow),
            "lp-lr" | "lplr" => Ok(StrichartzRegion::LpLr),
            _ => Err(Error::InvalidParam(format!("unknown region '{s}' (data-window, forcing-window, lp-lr)"))),
        }
    }
}

fn ser_ratio<S: Serializer>(v: &Option<Ratio<i64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_f64(*r.numer() as f64 / *r.denom() as f64),
        None => s.serialize_none(),
    }
}

/// Outcome of [`strichartz_admissible`]. The regularity window is empty
/// (`None`) for the mixed-norm region, which carries no `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibleWindow {
    pub p: Exponent,
    pub r: Exponent,
    #[serde(serialize_with = "ser_ratio")]
    pub rho_min: Option<Ratio<i64>>,
    #[serde(serialize_with = "ser_ratio")]
    pub rho_max: Option<Ratio<i64>>,
    pub admissible: bool,
}

impl AdmissibleWindow {
    /// Whether `rho` lies in the window (false when not admissible).
    pub fn contains(&self, rho: Ratio<i64>) -> bool {
        self.admissible && self.rho_min.is_some_and(|a| a <= rho) && self.rho_max.is_some_and(|b| rho <= b)
    }
}

/// Exact evaluation of the Strichartz exponent conditions.
pub fn strichartz_admissible(p: Exponent, r: Exponent, params: GroupParams, which: StrichartzRegion) -> AdmissibleWindow {
    let one = Ratio::from_integer(1);
    let zero = Ratio::from_integer(0);
    let half = Ratio::new(1, 2);
    let n_dim = Ratio::from_integer(params.homogeneous_dim() as i64);
    let d = half - r.inv;
    let r_ok = r.inv <= half;
    match which {
        StrichartzRegion::DataWindow | StrichartzRegion::ForcingWindow => {
            let shift = if which == StrichartzRegion::DataWindow { one } else { zero };
            let lo = -(n_dim - half) * d + shift;
            let hi = -(n_dim - Ratio::new(3, 2)) * d + shift;
            let admissible = r_ok && p.inv * 2 == d;
            AdmissibleWindow { p, r, rho_min: Some(lo), rho_max: Some(hi), admissible }
        }
        StrichartzRegion::LpLr => {
            let two_p = p.inv * 2;
            let admissible = r_ok
                && zero <= two_p
                && two_p <= d
                && (n_dim - one) * d - one <= p.inv
                && p.inv <= n_dim * d - one;
            AdmissibleWindow { p, r, rho_min: None, rho_max: None, admissible }
        }
    }
}

/// Membership in the segment `1/p = N(1/2 - 1/r) - 1`, `0 <= 2/p <= 1/2 - 1/r`
/// of the Kohn-Laplacian wave estimate.
pub fn on_kohn_segment(p: Exponent, r: Exponent, params: GroupParams) -> bool {
    let half = Ratio::new(1, 2);
    let d = half - r.inv;
    let n_dim = Ratio::from_integer(params.homogeneous_dim() as i64);
    r.inv <= half && p.inv * 2 <= d && p.inv == n_dim * d - Ratio::from_integer(1)
}
