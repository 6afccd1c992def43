//! Experiment harness: decay scans, sharpness and counterexample fits, the
//! Strichartz spot check, and pass/fail verdicts.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::time::Instant;

use crate::besov::{
    besov_norm_auto, strichartz_admissible, vj_besov_bound, BesovSpec, BlockOptions, Exponent, StrichartzRegion,
};
use crate::error::{Error, Result};
use crate::fit::{fit_power, Axis, DecayFit};
use crate::littlewood_paley::{lp_symbol, OperatorTag};
use crate::oscillatory::integrate as osc_integrate;
use crate::profile::DyadicProfile;
use crate::propagator::{
    cosine_symbol, halfwave_symbol, per_mode_bound, schrodinger_symbol, sharp_lower, stationary_sigma,
    sharp_problem, vj_symbol, vj_value, wave_mode_problem, wj_symbol, wj_value, Branch, ModeAmplitude, SharpFamily,
};
use crate::quadrature::Grid;
use crate::scan::{halfwave_speed, schrodinger_speed, sup_over_space, ScanOptions, SupPoint};
use crate::spectral::{GroupParams, SpectralSymbol};

/// Closed interval; infinite ends are written as `null` in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn around(center: f64, tol: f64) -> Self {
        Interval { lo: center - tol, hi: center + tol }
    }

    pub fn at_most(hi: f64) -> Self {
        Interval { lo: f64::NEG_INFINITY, hi }
    }

    pub fn at_least(lo: f64) -> Self {
        Interval { lo, hi: f64::INFINITY }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let f = |x: f64| if x.is_finite() { Some(x) } else { None };
        [f(self.lo), f(self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi]: [Option<f64>; 2] = Deserialize::deserialize(d)?;
        Ok(Interval { lo: lo.unwrap_or(f64::NEG_INFINITY), hi: hi.unwrap_or(f64::INFINITY) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub claim_id: String,
    pub expected: Interval,
    pub observed: f64,
    pub pass: bool,
    /// Seconds.
    pub runtime: f64,
}

impl Verdict {
    pub fn new(claim_id: impl Into<String>, expected: Interval, observed: f64, runtime: f64) -> Self {
        Verdict { claim_id: claim_id.into(), expected, observed, pass: expected.contains(observed), runtime }
    }

    /// One line of the human-readable table.
    pub fn row(&self) -> String {
        let e = |x: f64| if x.is_finite() { format!("{x:.4}") } else if x > 0.0 { "inf".into() } else { "-inf".into() };
        format!(
            "{:<4} {:<40} observed {:>12.5} expected [{}, {}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.claim_id,
            self.observed,
            e(self.expected.lo),
            e(self.expected.hi)
        )
    }
}

/// Expected interval for each claim id.
pub type Expectations = BTreeMap<String, Interval>;

/// Default expectations for `H_n`.
pub fn default_expectations(params: GroupParams) -> Expectations {
    let nd = params.homogeneous_dim() as f64;
    let n = params.n as f64;
    let mut e = Expectations::new();
    let mut put = |k: &str, v: Interval| {
        e.insert(k.to_string(), v);
    };
    put("dispersive.t_slope", Interval::at_most(-0.45));
    put("dispersive.j_exp.pos", Interval::around(nd - 1.5, 0.15));
    put("dispersive.j_exp.neg", Interval::around(nd - 0.5, 0.15));
    put("dispersive.per_mode_bound", Interval::new(1.0, 1.0));
    put("sharpness.t_slope", Interval::around(-0.5, 0.05));
    put("sharpness.j_exp.pos", Interval::around(nd - n - 0.5, 0.15));
    put("sharpness.j_exp.neg", Interval::around(nd - 0.5, 0.15));
    put("sharpness.minus_slope", Interval::at_most(-0.9));
    put("sharpness.lower_bound", Interval::new(1.0, 1.0));
    put("sharpness.besov_uniform", Interval::new(1.0, 3.0));
    put("counterexample.j_exp.pos", Interval::around(nd + 1.0, 0.2));
    put("counterexample.j_exp.neg", Interval::around(nd - 0.5, 0.2));
    put("counterexample.window_gap", Interval::at_least(1.0));
    put("counterexample.dilation", Interval::new(0.0, 1e-3));
    put("strichartz.growth", Interval::new(f64::NEG_INFINITY, 0.05));
    put("schrodinger.t_slope", Interval::at_most(-0.45));
    put("schrodinger.j_exp", Interval::around(nd - 2.0, 0.15));
    put("consistency.violations", Interval::new(0.0, 0.0));
    put("fit.r_squared", Interval::new(0.98, 1.0));
    e
}

/// Shared numerical settings of the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierConfig {
    pub params: GroupParams,
    pub profile: DyadicProfile,
    /// Laguerre modes kept in `psi_j`.
    pub modes: usize,
    /// Scanned radii in units of `2^{-j}`.
    pub r_rel: Vec<f64>,
    pub scan: ScanOptions,
    /// Target for one-dimensional oscillatory integrals, relative to the
    /// stationary-phase size of the integral.
    pub quad_tol: f64,
    /// Non-stationary integrals below `noise_floor` machine epsilons are
    /// excluded from their decay fit.
    pub noise_floor: f64,
    /// Replaces the largest group speed when sizing the scanned s-window.
    pub speed_override: Option<f64>,
    /// Seed of the random speeds in the per-mode check.
    pub seed: u64,
    pub expectations: Expectations,
}

impl VerifierConfig {
    pub fn new(params: GroupParams) -> Self {
        VerifierConfig {
            params,
            profile: DyadicProfile::default(),
            modes: 12,
            r_rel: vec![0.0, 0.25, 0.5, 1.0],
            scan: ScanOptions::default(),
            quad_tol: 1e-9,
            noise_floor: 100.0,
            speed_override: None,
            seed: 0,
            expectations: default_expectations(params),
        }
    }

    pub fn expected(&self, id: &str) -> Result<Interval> {
        self.expectations.get(id).copied().ok_or_else(|| Error::InvalidParam(format!("no expectation for claim '{id}'")))
    }

    fn verdict(&self, key: &str, id: impl Into<String>, observed: f64, started: Instant) -> Result<Verdict> {
        Ok(Verdict::new(id, self.expected(key)?, observed, started.elapsed().as_secs_f64()))
    }

    fn scan_for(&self, j: i32) -> ScanOptions {
        let unit = 2f64.powi(-j);
        ScanOptions { r_values: self.r_rel.iter().map(|x| x * unit).collect(), ..self.scan.clone() }
    }
}

/// One `(j, t)` cell of a sup scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCell {
    pub j: i32,
    pub t: f64,
    pub sup: f64,
    pub r: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JFit {
    pub j: i32,
    pub fit: DecayFit,
}

/// Output of [`dispersive_scan`] and [`schrodinger_scan`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub cells: Vec<ScanCell>,
    pub t_fits: Vec<JFit>,
    /// `(j, max_t sqrt(t) sup)`.
    pub normalized: Vec<(i32, f64)>,
    pub j_fits: BTreeMap<String, DecayFit>,
    /// `max / min` over j of `normalized * 2^{-j rho}`.
    pub rho_spread: f64,
    pub verdicts: Vec<Verdict>,
}

/// j-lists and times of a sup scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPlan {
    /// j values whose t-slope is fitted.
    pub slope_j: Vec<i32>,
    /// j values of the `j >= 0` exponent fit.
    pub pos_j: Vec<i32>,
    /// j values of the `j < 0` exponent fit.
    pub neg_j: Vec<i32>,
    pub t_list: Vec<f64>,
}

impl ScanPlan {
    fn all_j(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self.slope_j.iter().chain(&self.pos_j).chain(&self.neg_j).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn validate(&self) -> Result<()> {
        if self.t_list.len() < 3 {
            return Err(Error::InvalidParam(format!("t_list needs at least 3 points, got {}", self.t_list.len())));
        }
        if self.t_list.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParam("times must be positive".into()));
        }
        if self.all_j().is_empty() {
            return Err(Error::InvalidParam("empty j list".into()));
        }
        for (name, l) in [("pos_j", &self.pos_j), ("neg_j", &self.neg_j)] {
            if !l.is_empty() && l.len() < 3 {
                return Err(Error::InvalidParam(format!("{name} needs at least 3 values for an exponent fit")));
            }
        }
        if self.pos_j.iter().any(|&j| j < 0) || self.neg_j.iter().any(|&j| j >= 0) {
            return Err(Error::InvalidParam("pos_j must be >= 0 and neg_j < 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    HalfWave,
    Schrodinger,
}

fn flow_sup(flow: Flow, j: i32, t: f64, cfg: &VerifierConfig) -> Result<SupPoint> {
    let base = lp_symbol(OperatorTag::Full, j, cfg.profile, cfg.params, cfg.modes);
    let (sym, speed) = match flow {
        Flow::HalfWave => {
            let s = halfwave_symbol(&base, t);
            let v = halfwave_speed(&s);
            (s, v)
        }
        Flow::Schrodinger => {
            let s = schrodinger_symbol(&base, t);
            let v = schrodinger_speed(&s);
            (s, v)
        }
    };
    sup_over_space(&sym, t * cfg.speed_override.unwrap_or(speed), &cfg.scan_for(j))
}

fn fit_j(pairs: &[(i32, f64)], js: &[i32]) -> Result<DecayFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        pairs.iter().filter(|(j, _)| js.contains(j)).map(|&(j, v)| (j as f64, v)).unzip();
    fit_power(&xs, &ys, Axis::Dyadic)
}

fn run_scan(flow: Flow, plan: &ScanPlan, rho: f64, cfg: &VerifierConfig, prefix: &str) -> Result<ScanReport> {
    plan.validate()?;
    let started = Instant::now();
    let js = plan.all_j();
    let jobs: Vec<(i32, f64)> = js.iter().flat_map(|&j| plan.t_list.iter().map(move |&t| (j, t))).collect();
    let cells: Vec<ScanCell> = jobs
        .par_iter()
        .map(|&(j, t)| flow_sup(flow, j, t, cfg).map(|sp| ScanCell { j, t, sup: sp.value, r: sp.r, s: sp.s }))
        .collect::<Result<_>>()?;
    let mut verdicts = Vec::new();
    let mut t_fits = Vec::new();
    for &j in &plan.slope_j {
        let (ts, vs): (Vec<f64>, Vec<f64>) = cells.iter().filter(|c| c.j == j).map(|c| (c.t, c.sup)).unzip();
        let fit = fit_power(&ts, &vs, Axis::LogLog)?;
        verdicts.push(cfg.verdict(&format!("{prefix}.t_slope"), format!("{prefix}.t_slope.j={j}"), fit.slope, started)?);
        verdicts.push(cfg.verdict("fit.r_squared", format!("{prefix}.t_slope.j={j}.r2"), fit.r_squared, started)?);
        t_fits.push(JFit { j, fit });
    }
    let normalized: Vec<(i32, f64)> = js
        .iter()
        .map(|&j| {
            let c = cells.iter().filter(|c| c.j == j).map(|c| c.sup * c.t.sqrt()).fold(0.0, f64::max);
            (j, c)
        })
        .collect();
    let mut j_fits = BTreeMap::new();
    let branches: Vec<(&str, &Vec<i32>)> = match flow {
        Flow::HalfWave => vec![("pos", &plan.pos_j), ("neg", &plan.neg_j)],
        Flow::Schrodinger => vec![("", &plan.pos_j)],
    };
    for (name, list) in branches {
        if list.is_empty() {
            continue;
        }
        let fit = fit_j(&normalized, list)?;
        let key = if name.is_empty() { format!("{prefix}.j_exp") } else { format!("{prefix}.j_exp.{name}") };
        verdicts.push(cfg.verdict(&key, key.clone(), fit.slope, started)?);
        verdicts.push(cfg.verdict("fit.r_squared", format!("{key}.r2"), fit.r_squared, started)?);
        j_fits.insert(key, fit);
    }
    let weighted: Vec<f64> = normalized.iter().map(|&(j, c)| c * 2f64.powf(-rho * j as f64)).collect();
    let rho_spread = weighted.iter().copied().fold(0.0, f64::max) / weighted.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ScanReport { cells, t_fits, normalized, j_fits, rho_spread, verdicts })
}

/// Sup over space of `|e^{-it sqrt(L)} psi_j|` on the `(j, t)` grid: t-slopes
/// per j, the dyadic exponents of `max_t sqrt(t) sup` on both sides of
/// `j = 0`, and a per-mode bound check at the scanned maxima.
pub fn dispersive_scan(plan: &ScanPlan, rho: f64, cfg: &VerifierConfig) -> Result<ScanReport> {
    let mut report = run_scan(Flow::HalfWave, plan, rho, cfg, "dispersive")?;
    let started = Instant::now();
    let (checked, held) = per_mode_check(&report.cells, plan, cfg)?;
    report.verdicts.push(cfg.verdict("dispersive.per_mode_bound", "dispersive.per_mode_bound", held as f64 / checked.max(1) as f64, started)?);
    Ok(report)
}

/// Compares `|I_m|` with [`per_mode_bound`] at the scanned maxima, at two
/// fixed speeds and at two seeded random speeds in `[-2, 2]`; returns
/// `(checked, held)`.
pub fn per_mode_check(cells: &[ScanCell], plan: &ScanPlan, cfg: &VerifierConfig) -> Result<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jobs = Vec::new();
    for c in cells.iter().filter(|c| plan.slope_j.contains(&c.j)) {
        for m in [0usize, 1, 2, 4, 8].into_iter().filter(|&m| m < cfg.modes) {
            let random: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            for sigma in [c.s / c.t, 0.5, -1.5].into_iter().chain(random) {
                jobs.push((c.j, c.t, c.r, sigma, m));
            }
        }
    }
    let held: Vec<bool> = jobs
        .par_iter()
        .map(|&(j, t, r, sigma, m)| {
            let amp = ModeAmplitude::new(j, m, r, cfg.params, cfg.profile);
            let prob = wave_mode_problem(j, t, sigma, amp, cfg.params, Branch::Plus)?;
            let val = osc_integrate(&prob, 1e-14)?.norm();
            Ok(val <= per_mode_bound(j, t, m, cfg.params, cfg.profile))
        })
        .collect::<Result<_>>()?;
    Ok((held.len(), held.iter().filter(|&&h| h).count()))
}

/// Sup scan of `|e^{-itL} psi_j|`; the exponent is fitted on `pos_j`.
pub fn schrodinger_scan(plan: &ScanPlan, cfg: &VerifierConfig) -> Result<ScanReport> {
    if plan.pos_j.is_empty() && plan.slope_j.is_empty() {
        return Err(Error::InvalidParam("empty j list".into()));
    }
    let rho = cfg.params.homogeneous_dim() as f64 - 2.0;
    run_scan(Flow::Schrodinger, plan, rho, cfg, "schrodinger")
}

/// One stationary-point evaluation of a single-mode family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpCell {
    pub j: i32,
    pub t: f64,
    pub sigma: f64,
    /// `|cos(t sqrt(L)) u (0, sigma t)|`.
    pub value: f64,
    /// Kernel-scaled `|plus|` and `|minus|`.
    pub plus: f64,
    pub minus: f64,
    /// Kernel-scaled stationary-phase lower bound for `|plus|`; only
    /// meaningful when `t > threshold`.
    pub lower: f64,
    pub threshold: f64,
    /// Absolute quadrature target used for both branches.
    pub tol: f64,
}

impl SharpCell {
    pub fn above_threshold(&self) -> bool {
        self.t > self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpReport {
    pub family: SharpFamily,
    pub cells: Vec<SharpCell>,
    /// Cells of the t-slope fit.
    pub slope_cells: Vec<SharpCell>,
    pub t_fit: DecayFit,
    /// `(t, |minus|)` of the non-stationary branch at `slope_j`.
    pub minus_samples: Vec<(f64, f64)>,
    pub minus_fit: Option<DecayFit>,
    /// `(j, geometric mean over t of sqrt(t) value)`.
    pub normalized: Vec<(i32, f64)>,
    pub j_fits: BTreeMap<String, DecayFit>,
    /// Extra per-family numbers (Besov uniformity, dilation defects).
    pub extras: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
}

/// j-lists and times of a sharpness experiment. Times of the exponent fits
/// are multiples of each j's stationary-phase threshold, pulled down when
/// the frequency `t 4^j` exceeds `omega_cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpPlan {
    /// j whose t-slope and non-stationary decay are fitted.
    pub slope_j: i32,
    /// Multiples of the threshold for the t-slope fit.
    pub slope_t_rel: Vec<f64>,
    /// Absolute times for the non-stationary branch.
    pub minus_t: Vec<f64>,
    pub pos_j: Vec<i32>,
    pub neg_j: Vec<i32>,
    /// Multiples of the threshold for the exponent fits.
    pub t_rel: Vec<f64>,
    pub omega_cap: f64,
}

impl SharpPlan {
    pub fn default_for(which: SharpFamily) -> Self {
        let (pos_j, omega_cap) = match which {
            SharpFamily::Vj => (vec![4, 5, 6], 4e7),
            SharpFamily::Wj => (vec![3, 4, 5], 2.5e6),
        };
        SharpPlan {
            slope_j: 0,
            slope_t_rel: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            minus_t: crate::fit::log_space(10.0, 300.0, 6),
            pos_j,
            neg_j: vec![-3, -2, -1],
            t_rel: vec![2.0, 2.8, 4.0],
            omega_cap,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.slope_t_rel.len() < 3 || self.t_rel.is_empty() {
            return Err(Error::InvalidParam("need at least 3 slope times and one exponent time".into()));
        }
        if self.slope_t_rel.iter().chain(&self.t_rel).any(|&x| !(x > 1.0 && x.is_finite())) {
            return Err(Error::InvalidParam("threshold multiples must exceed 1".into()));
        }
        if self.minus_t.iter().any(|&t| !(t > 0.0 && t.is_finite())) || !(self.omega_cap > 0.0) {
            return Err(Error::InvalidParam("times and omega_cap must be positive".into()));
        }
        for (name, l) in [("pos_j", &self.pos_j), ("neg_j", &self.neg_j)] {
            if !l.is_empty() && l.len() < 3 {
                return Err(Error::InvalidParam(format!("{name} needs at least 3 values for an exponent fit")));
            }
        }
        if self.pos_j.iter().any(|&j| j < 0) || self.neg_j.iter().any(|&j| j >= 0) {
            return Err(Error::InvalidParam("pos_j must be >= 0 and neg_j < 0".into()));
        }
        Ok(())
    }

    /// Times used for `j` given its threshold.
    pub fn times_for(&self, j: i32, threshold: f64, rel: &[f64]) -> Vec<f64> {
        let ts: Vec<f64> = rel.iter().map(|r| r * threshold).collect();
        let top = ts.iter().copied().fold(0.0, f64::max) * 4f64.powi(j);
        let pull = if top > self.omega_cap { self.omega_cap / top } else { 1.0 };
        ts.into_iter().map(|t| t * pull).collect()
    }
}

fn prefactor(j: i32, params: GroupParams) -> f64 {
    0.5 * params.plancherel_const() * 2f64.powi(params.homogeneous_dim() as i32 * j)
}

fn sharp_cell(which: SharpFamily, j: i32, t: f64, cfg: &VerifierConfig) -> Result<SharpCell> {
    let (_, sigma) = stationary_sigma(j, cfg.params, which);
    let sb = sharp_lower(j, t, cfg.params, cfg.profile, which)?;
    let pf = prefactor(j, cfg.params);
    let tol = cfg.quad_tol * sb.lower * pf;
    let v = match which {
        SharpFamily::Vj => vj_value(j, t, sigma, cfg.params, cfg.profile, tol)?,
        SharpFamily::Wj => wj_value(j, t, sigma, cfg.params, cfg.profile, tol)?,
    };
    Ok(SharpCell {
        j,
        t,
        sigma,
        value: v.value.norm(),
        plus: v.plus.norm() * pf,
        minus: v.minus.norm() * pf,
        lower: sb.lower * pf,
        threshold: sb.threshold,
        tol,
    })
}

/// Stationary-phase threshold of one j (independent of t).
pub fn sharp_threshold(which: SharpFamily, j: i32, cfg: &VerifierConfig) -> Result<f64> {
    Ok(sharp_lower(j, 1.0, cfg.params, cfg.profile, which)?.threshold)
}

/// `|minus|` (kernel-scaled) at the stationary speed.
fn minus_branch(which: SharpFamily, j: i32, t: f64, cfg: &VerifierConfig) -> Result<f64> {
    let (_, sigma) = stationary_sigma(j, cfg.params, which);
    let prob = sharp_problem(j, t, sigma, cfg.params, cfg.profile, which, Branch::Minus)?;
    Ok(osc_integrate(&prob, 1e-300)?.norm() * prefactor(j, cfg.params))
}

fn run_sharp(which: SharpFamily, plan: &SharpPlan, cfg: &VerifierConfig, prefix: &str) -> Result<SharpReport> {
    plan.validate()?;
    let started = Instant::now();
    let mut js: Vec<i32> = plan.pos_j.iter().chain(&plan.neg_j).copied().collect();
    js.sort_unstable();
    js.dedup();
    let mut jobs = Vec::new();
    for &j in &js {
        let thr = sharp_threshold(which, j, cfg)?;
        jobs.extend(plan.times_for(j, thr, &plan.t_rel).into_iter().map(|t| (j, t)));
    }
    let thr0 = sharp_threshold(which, plan.slope_j, cfg)?;
    let slope_jobs: Vec<(i32, f64)> =
        plan.times_for(plan.slope_j, thr0, &plan.slope_t_rel).into_iter().map(|t| (plan.slope_j, t)).collect();
    let eval = |jobs: &[(i32, f64)]| -> Result<Vec<SharpCell>> {
        jobs.par_iter().map(|&(j, t)| sharp_cell(which, j, t, cfg)).collect()
    };
    let cells = eval(&jobs)?;
    let slope_cells = eval(&slope_jobs)?;
    let mut verdicts = Vec::new();

    let (ts, vs): (Vec<f64>, Vec<f64>) = slope_cells.iter().map(|c| (c.t, c.value)).unzip();
    let t_fit = fit_power(&ts, &vs, Axis::LogLog)?;
    if which == SharpFamily::Vj {
        verdicts.push(cfg.verdict(&format!("{prefix}.t_slope"), format!("{prefix}.t_slope.j={}", plan.slope_j), t_fit.slope, started)?);
        verdicts.push(cfg.verdict("fit.r_squared", format!("{prefix}.t_slope.r2"), t_fit.r_squared, started)?);
    }

    let normalized: Vec<(i32, f64)> = js
        .iter()
        .map(|&j| {
            let v: Vec<f64> = cells.iter().filter(|c| c.j == j).map(|c| (c.value * c.t.sqrt()).log2()).collect();
            (j, (v.iter().sum::<f64>() / v.len() as f64).exp2())
        })
        .collect();
    let mut j_fits = BTreeMap::new();
    for (name, list) in [("pos", &plan.pos_j), ("neg", &plan.neg_j)] {
        if list.is_empty() {
            continue;
        }
        let key = format!("{prefix}.j_exp.{name}");
        let fit = fit_j(&normalized, list)?;
        verdicts.push(cfg.verdict(&key, key.clone(), fit.slope, started)?);
        verdicts.push(cfg.verdict("fit.r_squared", format!("{key}.r2"), fit.r_squared, started)?);
        j_fits.insert(key, fit);
    }

    let minus_samples: Vec<(f64, f64)> = plan
        .minus_t
        .par_iter()
        .map(|&t| minus_branch(which, plan.slope_j, t, cfg).map(|m| (t, m)))
        .collect::<Result<_>>()?;
    Ok(SharpReport {
        family: which,
        cells,
        slope_cells,
        t_fit,
        minus_samples,
        minus_fit: None,
        normalized,
        j_fits,
        extras: BTreeMap::new(),
        verdicts,
    })
}

/// `|cos(t sqrt(L)) v_j|` at the stationary speed: t-slope, dyadic exponents,
/// the stationary-phase lower bound, the decay of the non-stationary branch
/// and the uniform Besov bound of `v_j` over `besov_j`.
pub fn sharpness_vj(plan: &SharpPlan, besov_j: &[i32], rho: f64, cfg: &VerifierConfig) -> Result<SharpReport> {
    let mut rep = run_sharp(SharpFamily::Vj, plan, cfg, "sharpness")?;
    let started = Instant::now();
    let checked: Vec<&SharpCell> = rep.cells.iter().chain(&rep.slope_cells).filter(|c| c.above_threshold()).collect();
    let ok = checked.iter().filter(|c| c.plus >= c.lower).count();
    let frac = if checked.is_empty() { f64::NAN } else { ok as f64 / checked.len() as f64 };
    rep.verdicts.push(cfg.verdict("sharpness.lower_bound", "sharpness.lower_bound", frac, started)?);

    // Values at the roundoff level carry no decay information.
    let floor = cfg.noise_floor * f64::EPSILON * prefactor(plan.slope_j, cfg.params);
    let (ts, ms): (Vec<f64>, Vec<f64>) = rep.minus_samples.iter().filter(|(_, m)| *m > floor).copied().unzip();
    let minus_slope = match fit_power(&ts, &ms, Axis::LogLog) {
        Ok(f) => {
            rep.minus_fit = Some(f);
            f.slope
        }
        Err(_) => f64::NAN,
    };
    rep.verdicts.push(cfg.verdict("sharpness.minus_slope", "sharpness.minus_slope", minus_slope, started)?);

    if !besov_j.is_empty() {
        let opts = BlockOptions::default();
        let vals: Vec<f64> =
            besov_j.par_iter().map(|&j| vj_besov_bound(j, rho, cfg.params, cfg.profile, &opts)).collect::<Result<_>>()?;
        let spread = vals.iter().copied().fold(0.0, f64::max) / vals.iter().copied().fold(f64::INFINITY, f64::min);
        for (j, v) in besov_j.iter().zip(&vals) {
            rep.extras.insert(format!("vj_besov_bound.j={j}"), *v);
        }
        rep.verdicts.push(cfg.verdict("sharpness.besov_uniform", "sharpness.besov_uniform", spread, started)?);
    }
    Ok(rep)
}

/// `|cos(t sqrt(L)) w_j|` at the stationary speed: dyadic exponents on both
/// sides of `j = 0`, the gap between the regularity windows they force, and
/// the dilation identity for the Kohn-scale Besov norm of `w_j`.
pub fn counterexample_wj(plan: &SharpPlan, dilation_j: &[i32], rho: f64, cfg: &VerifierConfig) -> Result<SharpReport> {
    let mut rep = run_sharp(SharpFamily::Wj, plan, cfg, "counterexample")?;
    let started = Instant::now();
    let pos = rep.j_fits.get("counterexample.j_exp.pos").map(|f| f.slope).unwrap_or(f64::NAN);
    let neg = rep.j_fits.get("counterexample.j_exp.neg").map(|f| f.slope).unwrap_or(f64::NAN);
    rep.verdicts.push(cfg.verdict("counterexample.window_gap", "counterexample.window_gap", pos - neg, started)?);
    if !dilation_j.is_empty() {
        let spec = BesovSpec::new(OperatorTag::Kohn, rho, 1.0, 1.0)?;
        let opts = BlockOptions::default();
        let norm = |j: i32| besov_norm_auto(&wj_symbol(j, cfg.params, cfg.profile), &spec, cfg.profile, &opts);
        let base = norm(0)?;
        rep.extras.insert("wj_besov.j=0".into(), base);
        let mut defect: f64 = 0.0;
        for &j in dilation_j {
            let v = norm(j)?;
            rep.extras.insert(format!("wj_besov.j={j}"), v);
            defect = defect.max((v / (base * 2f64.powf(rho * j as f64)) - 1.0).abs());
        }
        rep.verdicts.push(cfg.verdict("counterexample.dilation", "counterexample.dilation", defect, started)?);
    }
    Ok(rep)
}

/// A matched `(j, t)` comparison of the stationary-phase lower bound with
/// the scanned sup of the same propagated function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuardCell {
    pub j: i32,
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
}

/// For each sharpness cell above its threshold, `lower - |minus|` must not
/// exceed the scanned sup of `|cos(t sqrt(L)) u|`. Returns the cells and a
/// verdict on the number of violations.
pub fn consistency_guard(rep: &SharpReport, cfg: &VerifierConfig) -> Result<(Vec<GuardCell>, Verdict)> {
    let started = Instant::now();
    let cells: Vec<GuardCell> = rep
        .cells
        .iter()
        .chain(&rep.slope_cells)
        .filter(|c| c.above_threshold())
        .collect::<Vec<_>>()
        .par_iter()
        .map(|c| {
            let base = match rep.family {
                SharpFamily::Vj => vj_symbol(c.j, cfg.params, cfg.profile),
                SharpFamily::Wj => wj_symbol(c.j, cfg.params, cfg.profile),
            };
            let sym = cosine_symbol(&base, c.t);
            let opts = ScanOptions { r_values: vec![0.0], ..cfg.scan.clone() };
            let sp = sup_over_space(&sym, c.t * halfwave_speed(&sym), &opts)?;
            Ok(GuardCell { j: c.j, t: c.t, lower: c.lower - c.minus, upper: sp.value })
        })
        .collect::<Result<_>>()?;
    let violations = cells.iter().filter(|g| g.lower > g.upper).count();
    let v = cfg.verdict("consistency.violations", "consistency.violations", violations as f64, started)?;
    Ok((cells, v))
}

/// Initial data of the Strichartz spot check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    Psi0,
    Psi0Psi2,
}

impl InitialData {
    pub fn symbol(self, cfg: &VerifierConfig, modes: usize) -> SpectralSymbol {
        let psi = |j| lp_symbol(OperatorTag::Full, j, cfg.profile, cfg.params, modes);
        match self {
            InitialData::Psi0 => psi(0),
            InitialData::Psi0Psi2 => psi(0).add(&psi(2)),
        }
    }
}

impl std::str::FromStr for InitialData {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi0" => Ok(InitialData::Psi0),
            "psi0+psi2" | "psi0_psi2" => Ok(InitialData::Psi0Psi2),
            _ => Err(Error::InvalidParam(format!("unknown initial data '{s}' (psi0, psi0+psi2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrichartzReport {
    pub p: Exponent,
    pub r: Exponent,
    pub rho: f64,
    pub data: InitialData,
    /// `(t, ||u(t)||_{B^rho_{2,r}})` on the time nodes.
    pub samples: Vec<(f64, f64)>,
    pub norm_window: f64,
    pub norm_doubled: f64,
    pub verdict: Verdict,
}

/// Settings of the Strichartz spot check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzPlan {
    pub p: String,
    pub r: String,
    pub rho: String,
    pub data: InitialData,
    /// The window `[0, T]`; the check compares it with `[0, 2T]`.
    pub t_window: f64,
    /// GK15 panels on `[0, T]`.
    pub panels: usize,
    /// Laguerre modes kept in the data.
    pub modes: usize,
    pub region: StrichartzRegion,
    pub blocks: BlockOptions,
}

fn parse_ratio(s: &str) -> Result<Ratio<i64>> {
    let bad = || Error::InvalidParam(format!("'{s}' is not a fraction a/b"));
    match s.trim().split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse::<i64>().map_err(|_| bad())?, b.trim().parse::<i64>().map_err(|_| bad())?);
            if b == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(a, b))
        }
        None => Ok(Ratio::from_integer(s.trim().parse::<i64>().map_err(|_| bad())?)),
    }
}

/// `|| ||e^{-it sqrt(L)} u0||_{B^rho_{2,r}} ||_{L^p_t}` on `[0, T]` and on
/// `[0, 2T]`; passes when doubling the window grows the norm by less than
/// the expected bound.
pub fn strichartz_spot_check(plan: &StrichartzPlan, cfg: &VerifierConfig) -> Result<StrichartzReport> {
    let started = Instant::now();
    let p: Exponent = plan.p.parse()?;
    let r: Exponent = plan.r.parse()?;
    let rho = parse_ratio(&plan.rho)?;
    let w = strichartz_admissible(p, r, cfg.params, plan.region);
    if !w.admissible {
        return Err(Error::NotAdmissible(format!("(p, r) = ({p}, {r}) fails {:?}", plan.region)));
    }
    if w.rho_min.is_some() && !w.contains(rho) {
        return Err(Error::NotAdmissible(format!("rho = {rho} outside [{:?}, {:?}]", w.rho_min, w.rho_max)));
    }
    if !(plan.t_window > 0.0) || plan.panels == 0 {
        return Err(Error::InvalidParam("need t_window > 0 and at least one panel".into()));
    }
    let rho_f = *rho.numer() as f64 / *rho.denom() as f64;
    let spec = BesovSpec::new(OperatorTag::Full, rho_f, 2.0, r.to_f64())?;
    let u0 = plan.data.symbol(cfg, plan.modes);
    let grid = Grid::gk_panels(0.0, 2.0 * plan.t_window, 2 * plan.panels)?;
    let samples: Vec<(f64, f64)> = grid
        .nodes
        .par_iter()
        .map(|&t| {
            let u = halfwave_symbol(&u0, t);
            let mut blocks = plan.blocks;
            blocks.plan.s_shift = t * halfwave_speed(&u);
            besov_norm_auto(&u, &spec, cfg.profile, &blocks).map(|v| (t, v))
        })
        .collect::<Result<_>>()?;
    let agg = |upto: f64| -> f64 {
        let sel = samples.iter().zip(&grid.weights).filter(|((t, _), _)| *t <= upto);
        if p.is_infinite() {
            sel.map(|((_, v), _)| *v).fold(0.0, f64::max)
        } else {
            let pe = p.to_f64();
            sel.map(|((_, v), w)| w * v.powf(pe)).sum::<f64>().powf(1.0 / pe)
        }
    };
    let norm_window = agg(plan.t_window);
    let norm_doubled = agg(2.0 * plan.t_window);
    let growth = norm_doubled / norm_window - 1.0;
    let verdict = cfg.verdict("strichartz.growth", "strichartz.growth", growth, started)?;
    Ok(StrichartzReport { p, r, rho: rho_f, data: plan.data, samples, norm_window, norm_doubled, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::StrichartzRegion;

    fn cfg() -> VerifierConfig {
        VerifierConfig::new(GroupParams::new(1).unwrap())
    }

    #[test]
    fn interval_json_uses_null_for_infinite_ends() {
        let i = Interval::at_most(-0.45);
        let s = serde_json::to_string(&i).unwrap();
        assert_eq!(s, "[null,-0.45]");
        assert_eq!(serde_json::from_str::<Interval>(&s).unwrap(), i);
    }

    #[test]
    fn verdict_rejects_nan_and_respects_closed_ends() {
        let e = Interval::new(1.0, 1.0);
        assert!(Verdict::new("x", e, 1.0, 0.0).pass);
        assert!(!Verdict::new("x", e, f64::NAN, 0.0).pass);
        assert!(!Verdict::new("x", Interval::at_least(1.0), 0.999, 0.0).pass);
        assert!(Verdict::new("x", Interval::at_least(1.0), f64::INFINITY, 0.0).pass);
    }

    #[test]
    fn expectations_match_window_arithmetic() {
        let e = default_expectations(GroupParams::new(1).unwrap());
        let mid = |k: &str| 0.5 * (e[k].lo + e[k].hi);
        assert_eq!(mid("dispersive.j_exp.pos"), 2.5);
        assert_eq!(mid("dispersive.j_exp.neg"), 3.5);
        assert_eq!(mid("sharpness.j_exp.pos"), 2.5);
        assert_eq!(mid("counterexample.j_exp.pos"), 5.0);
        assert_eq!(mid("schrodinger.j_exp"), 2.0);
        let e2 = default_expectations(GroupParams::new(2).unwrap());
        assert_eq!(0.5 * (e2["sharpness.j_exp.pos"].lo + e2["sharpness.j_exp.pos"].hi), 3.5);
    }

    #[test]
    fn scan_plan_preconditions() {
        let c = cfg();
        let short = ScanPlan { slope_j: vec![0], pos_j: vec![], neg_j: vec![], t_list: vec![10.0, 20.0] };
        assert!(matches!(dispersive_scan(&short, 0.0, &c), Err(Error::InvalidParam(_))));
        let empty = ScanPlan { slope_j: vec![], pos_j: vec![], neg_j: vec![], t_list: vec![1.0, 2.0, 3.0] };
        assert!(matches!(schrodinger_scan(&empty, &c), Err(Error::InvalidParam(_))));
        let wrong_side = ScanPlan { slope_j: vec![], pos_j: vec![-1, 0, 1], neg_j: vec![], t_list: vec![1.0, 2.0, 3.0] };
        assert!(matches!(dispersive_scan(&wrong_side, 0.0, &c), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn small_dispersive_scan_decays_and_respects_mode_bounds() {
        let mut c = cfg();
        c.modes = 4;
        let plan = ScanPlan { slope_j: vec![0], pos_j: vec![], neg_j: vec![], t_list: vec![300.0, 600.0, 1200.0] };
        let rep = dispersive_scan(&plan, 0.0, &c).unwrap();
        assert_eq!(rep.cells.len(), 3);
        assert!(rep.cells.windows(2).all(|w| w[1].sup < w[0].sup));
        let pm = rep.verdicts.iter().find(|v| v.claim_id == "dispersive.per_mode_bound").unwrap();
        assert!(pm.pass, "{pm:?}");
    }

    #[test]
    fn sharp_times_respect_threshold_and_cap() {
        let plan = SharpPlan::default_for(SharpFamily::Wj);
        let ts = plan.times_for(1, 100.0, &[2.0, 4.0]);
        assert_eq!(ts, vec![200.0, 400.0]);
        let ts = plan.times_for(5, 6000.0, &[2.0, 4.0]);
        let top = ts[1] * 4f64.powi(5);
        assert!((top - plan.omega_cap).abs() < 1e-6 * plan.omega_cap);
        assert!((ts[1] / ts[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sharp_plan_preconditions() {
        let mut plan = SharpPlan::default_for(SharpFamily::Vj);
        plan.t_rel = vec![0.5];
        assert!(matches!(sharpness_vj(&plan, &[], 1.0, &cfg()), Err(Error::InvalidParam(_))));
    }

    fn strichartz(p: &str, r: &str, rho: &str, region: StrichartzRegion) -> StrichartzPlan {
        StrichartzPlan {
            p: p.into(),
            r: r.into(),
            rho: rho.into(),
            data: InitialData::Psi0,
            t_window: 2.0,
            panels: 1,
            modes: 3,
            region,
            blocks: BlockOptions::default(),
        }
    }

    #[test]
    fn strichartz_energy_case_is_constant() {
        let rep = strichartz_spot_check(&strichartz("inf", "2", "0", StrichartzRegion::ForcingWindow), &cfg()).unwrap();
        let v0 = rep.samples[0].1;
        assert!(rep.samples.iter().all(|(_, v)| (v / v0 - 1.0).abs() < 1e-6));
        assert!(rep.verdict.pass);
        assert!(rep.verdict.observed.abs() < 1e-6);
    }

    #[test]
    fn strichartz_rejects_inadmissible_input() {
        let c = cfg();
        let e = strichartz_spot_check(&strichartz("inf", "2", "0", StrichartzRegion::LpLr), &c);
        assert!(matches!(e, Err(Error::NotAdmissible(_))));
        let e = strichartz_spot_check(&strichartz("inf", "2", "1/2", StrichartzRegion::ForcingWindow), &c);
        assert!(matches!(e, Err(Error::NotAdmissible(_))));
        let e = strichartz_spot_check(&strichartz("inf", "2", "0.5", StrichartzRegion::ForcingWindow), &c);
        assert!(matches!(e, Err(Error::InvalidParam(_))));
    }

    #[test]
    fn initial_data_parsing() {
        assert_eq!("psi0".parse::<InitialData>().unwrap(), InitialData::Psi0);
        assert_eq!("psi0+psi2".parse::<InitialData>().unwrap(), InitialData::Psi0Psi2);
        assert!("psi1".parse::<InitialData>().is_err());
    }
}
