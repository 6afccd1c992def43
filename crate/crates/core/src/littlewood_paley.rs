//! Littlewood–Paley kernels on both operator scales: `phi_j` for the
//! Kohn-Laplacian and `psi_j` for the full Laplacian.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profile::DyadicProfile;
use crate::spectral::{
    inverse_transform_planned, plancherel_norm, GroupParams, PlanOptions, RadialFunction, SamplingPlan, SpectralSymbol,
};
use crate::special::mode_multiplicity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorTag {
    Kohn,
    Full,
}

impl OperatorTag {
    /// Eigenvalue of the tagged operator on mode `m` at `lambda`.
    pub fn eigenvalue(self, params: GroupParams, m: usize, lambda: f64) -> f64 {
        match self {
            OperatorTag::Kohn => params.kohn_eigenvalue(m, lambda),
            OperatorTag::Full => params.full_eigenvalue(m, lambda),
        }
    }

    /// `|lambda|`-interval where `1/4 <= 4^{-j} eigenvalue <= 4` on mode `m`.
    pub fn band(self, params: GroupParams, m: usize, j: i32) -> (f64, f64) {
        let big_m = params.mode_weight(m);
        let lo = 4f64.powi(j) / 4.0;
        let hi = 4f64.powi(j) * 4.0;
        match self {
            OperatorTag::Kohn => (lo / (4.0 * big_m), hi / (4.0 * big_m)),
            OperatorTag::Full => {
                // Positive root of lambda^2 + 4 M lambda = c, without cancellation.
                let root = |c: f64| c / ((4.0 * big_m * big_m + c).sqrt() + 2.0 * big_m);
                (root(lo), root(hi))
            }
        }
    }
}

impl std::str::FromStr for OperatorTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kohn" => Ok(OperatorTag::Kohn),
            "full" => Ok(OperatorTag::Full),
            _ => Err(Error::InvalidParam(format!("unknown operator tag '{s}'"))),
        }
    }
}

/// Symbol `R(4^{-j} xi)` of the j-th Littlewood–Paley projection on modes
/// `0..modes`, with `xi` the eigenvalue of the tagged operator.
pub fn lp_symbol(tag: OperatorTag, j: i32, profile: DyadicProfile, params: GroupParams, modes: usize) -> SpectralSymbol {
    let supports = (0..modes)
        .map(|m| {
            let (lo, hi) = tag.band(params, m, j);
            vec![(-hi, -lo), (lo, hi)]
        })
        .collect();
    let scale = 4f64.powi(-j);
    let value = Arc::new(move |m: usize, l: f64| Complex64::new(profile.eval(scale * tag.eigenvalue(params, m, l)), 0.0));
    SpectralSymbol::new(params, supports, value).expect("bounded dyadic bands")
}

/// Smallest mode count whose discarded Plancherel mass, relative to the
/// total, is below `mass_tol` for a dyadic kernel. Mode `m` carries mass
/// proportional to `C(m+n-1, m) / M^{n+1}`.
pub fn kohn_mode_cap(params: GroupParams, mass_tol: f64) -> usize {
    let n = params.n as i32;
    let term = |m: usize| mode_multiplicity(m, params.n) / params.mode_weight(m).powi(n + 1);
    // Terms behave like c/m^2, so the tail after K is about K * term(K).
    let far = 1_000_000usize;
    let mut total = 0.0;
    for m in 0..far {
        total += term(m);
    }
    total += term(far) * far as f64;
    let mut acc = 0.0;
    for m in 0..far {
        acc += term(m);
        if (total - acc) <= mass_tol * total {
            return m + 1;
        }
    }
    far
}

#[derive(Debug, Clone)]
pub struct LPKernel {
    pub tag: OperatorTag,
    pub j: i32,
    pub profile: DyadicProfile,
    pub symbol: SpectralSymbol,
    pub space: Option<RadialFunction>,
}

impl LPKernel {
    pub fn new(tag: OperatorTag, j: i32, profile: DyadicProfile, params: GroupParams, modes: usize) -> Self {
        LPKernel { tag, j, profile, symbol: lp_symbol(tag, j, profile, params, modes), space: None }
    }

    /// Materializes the kernel on an automatic grid; fails with
    /// `GridTooCoarse` if the samples on the grid boundary exceed
    /// `boundary_tol` relative to the sup norm.
    pub fn materialize(&mut self, opts: &PlanOptions, boundary_tol: f64) -> Result<&RadialFunction> {
        let plan = SamplingPlan::for_symbol(&self.symbol, opts)?;
        let f = inverse_transform_planned(&self.symbol, &plan)?;
        let b = f.boundary_ratio();
        if b > boundary_tol {
            return Err(Error::GridTooCoarse { estimate: b, tol: boundary_tol });
        }
        self.space = Some(f);
        Ok(self.space.as_ref().unwrap())
    }

    pub fn meta(&self) -> serde_json::Value {
        serde_json::json!({
            "tag": self.tag,
            "j": self.j,
            "profile_params": self.profile,
            "modes": self.symbol.mode_count(),
        })
    }
}

/// Space-side kernel materialization (`kernel` operation).
pub fn kernel(
    tag: OperatorTag,
    j: i32,
    profile: DyadicProfile,
    params: GroupParams,
    modes: usize,
    opts: &PlanOptions,
) -> Result<LPKernel> {
    let mut k = LPKernel::new(tag, j, profile, params, modes);
    k.materialize(opts, 1e-6)?;
    Ok(k)
}

/// `Delta_j u`: pointwise product of `u` with the j-th projection symbol.
pub fn project(u: &SpectralSymbol, tag: OperatorTag, j: i32, profile: DyadicProfile) -> SpectralSymbol {
    if u.is_zero() {
        return u.clone();
    }
    u.mul(&lp_symbol(tag, j, profile, u.params, u.mode_count()))
}

/// Window of k for which the supports of `phi_j` (Kohn) and `psi_k` (full)
/// can overlap: feasibility of `1/4 <= 4^{-j} xi <= 4`,
/// `1/4 <= 4^{-k}(xi + eta) <= 4`, `0 < eta <= xi^2/(16 n^2)` (`eta = lambda^2`
/// with `lambda != 0`).
pub fn overlap_window(j: i32, params: GroupParams) -> (i32, i32) {
    let n2 = (params.n * params.n) as f64;
    let xi_lo = 4f64.powi(j) / 4.0;
    let xi_hi = 4f64.powi(j) * 4.0;
    let sum_hi = xi_hi + xi_hi * xi_hi / (16.0 * n2);
    // Need 4^k * 4 > xi_lo (eta > 0) and 4^k / 4 <= sum_hi.
    let mut k_min = j - 10;
    while 4f64.powi(k_min) * 4.0 <= xi_lo {
        k_min += 1;
    }
    let mut k_max = k_min;
    while 4f64.powi(k_max + 1) / 4.0 <= sum_hi {
        k_max += 1;
    }
    (k_min, k_max)
}

/// `int |k| dg` of a materialized kernel.
pub fn l1_norm(k: &LPKernel) -> Result<f64> {
    match &k.space {
        Some(f) => Ok(f.l1_norm()),
        None if k.symbol.is_zero() => Ok(0.0),
        None => Err(Error::InvalidParam("kernel has not been materialized".into())),
    }
}

/// `||A^{sigma/2} Delta_j u||_2 / (2^{j sigma} ||Delta_j u||_2)` with `A` the
/// tagged operator, computed on the symbol side.
pub fn bernstein_check(u: &SpectralSymbol, tag: OperatorTag, j: i32, sigma: f64, profile: DyadicProfile) -> Result<f64> {
    let d = project(u, tag, j, profile);
    let den = plancherel_norm(&d);
    if den == 0.0 {
        return Err(Error::ZeroDenominator(format!("Delta_{j} u vanishes")));
    }
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let p = u.params;
    let num = d
        .plancherel_integral(|m, l| d.value(m, l).norm_sqr() * tag.eigenvalue(p, m, l).powf(sigma))
        .sqrt();
    Ok(num / (2f64.powf(j as f64 * sigma) * den))
}
