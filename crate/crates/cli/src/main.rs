//! `heisenwave`: command-line front end for the transforms, norms and
//! dispersive experiments.

mod config;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use heisenwave::besov::{
    besov_norm_space, on_kohn_segment, strichartz_admissible, support_window, BesovSpec, BlockOptions, Exponent,
    StrichartzRegion,
};
use heisenwave::fit::log_space;
use heisenwave::littlewood_paley::{kernel, l1_norm, lp_symbol, OperatorTag};
use heisenwave::propagator::{
    halfwave_on_kernel, schrodinger_on_kernel, stationary_sigma, vj_value, wj_value, ModeCut, SharpFamily,
};
use heisenwave::scan::ScanOptions;
use heisenwave::spectral::{GroupParams, PlanOptions, RadialFunction};
use heisenwave::verifier::{
    consistency_guard, counterexample_wj, dispersive_scan, schrodinger_scan, sharpness_vj, strichartz_spot_check,
    InitialData, ScanPlan, SharpPlan, StrichartzPlan, Verdict,
};
use heisenwave::{Error, Result};

use config::{check_j, Format, RunConfig};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "heisenwave", version, about = "Spectral analysis and dispersive estimates for wave flows on the Heisenberg group")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: the config's output path, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Keep wall-clock runtimes in verdicts (output is then not reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Materialize a Littlewood-Paley kernel (phi_j for the Kohn-Laplacian,
    /// psi_j for the full Laplacian) on a space grid, via the inverse
    /// spherical Fourier transform.
    Kernel(KernelArgs),
    /// Homogeneous Besov norm of a stored radial function on either operator
    /// scale, via the forward transform and dyadic block norms.
    Besov(BesovArgs),
    /// Exponent checker for the Strichartz estimates: the (p, r) region, the
    /// regularity window for rho and membership of the Kohn-Laplacian
    /// Strichartz segment. Exponents are integers, a/b or inf.
    Admissible(AdmissibleArgs),
    /// One evaluation of a propagated kernel by the Laguerre mode sum:
    /// half-wave or Schroedinger flow of psi_j, or the cosine flow of the
    /// single-mode test functions v_j / w_j at the stationary speed.
    Propagate(PropagateArgs),
    /// Dispersive upper bound for the half-wave flow of psi_j: t-decay,
    /// dyadic loss exponents on both sides of j = 0, per-mode van der
    /// Corput bounds.
    DispersiveScan(DispersiveArgs),
    /// Optimality of the dispersive estimate with the single-mode functions
    /// v_j: stationary-phase lower bounds, t^{-1/2} decay, loss exponents,
    /// t^{-1} decay of the non-stationary branch, uniform Besov bounds.
    Sharpness(SharpArgs),
    /// Failure of a Kohn-scale Besov dispersive estimate with the functions
    /// w_j: incompatible loss exponents for j >= 0 and j < 0.
    Counterexample(SharpArgs),
    /// Dispersive estimate for the Schroedinger flow e^{-itL} of psi_j.
    Schrodinger(SchrodingerArgs),
    /// Homogeneous Strichartz estimate spot check: the space-time norm of
    /// the half-wave flow stays bounded when the time window doubles.
    Strichartz(StrichartzArgs),
    /// Merge the verdicts of stored result files.
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
struct KernelArgs {
    /// kohn or full.
    #[arg(long, default_value = "full")]
    tag: String,
    #[arg(long, allow_hyphen_values = true)]
    j: i32,
    /// Laguerre modes kept; the grid grows quickly with this.
    #[arg(long, default_value_t = 1)]
    modes: usize,
    /// s half-width in units of the inverse narrowest band.
    #[arg(long, default_value_t = 1200.0)]
    s_factor: f64,
}

#[derive(Args, Debug, Serialize)]
struct BesovArgs {
    /// Radial function written by `kernel`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    /// Outer (l^q) exponent; `inf` allowed.
    #[arg(long)]
    q: String,
    /// Inner (L^r) exponent; `inf` allowed.
    #[arg(long)]
    r: String,
    /// Scale of the blocks (default: the tag stored with the kernel).
    #[arg(long)]
    tag: Option<String>,
    /// Lambda nodes per dyadic band of the forward transform.
    #[arg(long, default_value_t = 48)]
    per_band: usize,
}

#[derive(Args, Debug, Serialize)]
struct AdmissibleArgs {
    /// Homogeneous dimension N = 2n + 2.
    #[arg(long = "N")]
    big_n: usize,
    #[arg(long)]
    p: String,
    #[arg(long)]
    r: String,
    /// lp-lr (region only), data-window or forcing-window (with rho window).
    #[arg(long, default_value = "lp-lr")]
    region: String,
    /// Regularity to test against the window, as a/b.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct PropagateArgs {
    /// wave, schrodinger, vj or wj.
    #[arg(long, default_value = "wave")]
    flow: String,
    #[arg(long, allow_hyphen_values = true)]
    j: i32,
    #[arg(long)]
    t: f64,
    /// |z| of the evaluation point.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Speed s / t of the evaluation point (default: stationary speed of mode 0).
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 8)]
    modes: usize,
    /// Absolute quadrature target.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct DispersiveArgs {
    /// j values of the t-slope fits (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    j: Option<Vec<i32>>,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5", allow_hyphen_values = true)]
    pos_j: Vec<i32>,
    #[arg(long, value_delimiter = ',', default_value = "-3,-2,-1", allow_hyphen_values = true)]
    neg_j: Vec<i32>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 9)]
    t_count: usize,
    #[arg(long, default_value_t = 12)]
    modes: usize,
    /// Regularity for the reported uniformity ratio.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rho: f64,
}

#[derive(Args, Debug, Serialize)]
struct SharpArgs {
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    slope_j: i32,
    /// Default: 4,5,6 for sharpness and 3,4,5 for counterexample.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pos_j: Option<Vec<i32>>,
    #[arg(long, value_delimiter = ',', default_value = "-3,-2,-1", allow_hyphen_values = true)]
    neg_j: Vec<i32>,
    /// j values of the Besov check (uniform bound for v_j, dilation for w_j).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    besov_j: Option<Vec<i32>>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    rho: f64,
    /// Largest frequency t 4^j for the quadrature.
    #[arg(long)]
    omega_cap: Option<f64>,
    /// Skip the lower-versus-upper consistency guard.
    #[arg(long)]
    no_guard: bool,
}

#[derive(Args, Debug, Serialize)]
struct SchrodingerArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,1,2", allow_hyphen_values = true)]
    j: Vec<i32>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3", allow_hyphen_values = true)]
    pos_j: Vec<i32>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 7)]
    t_count: usize,
    #[arg(long, default_value_t = 8)]
    modes: usize,
}

#[derive(Args, Debug, Serialize)]
struct StrichartzArgs {
    #[arg(long, default_value = "8")]
    p: String,
    #[arg(long, default_value = "4")]
    r: String,
    #[arg(long, default_value = "-3/4", allow_hyphen_values = true)]
    rho: String,
    /// psi0 or psi0+psi2.
    #[arg(long, default_value = "psi0")]
    data: String,
    /// Time window T; the check compares [0, T] with [0, 2T].
    #[arg(long, default_value_t = 5.0)]
    t_window: f64,
    #[arg(long, default_value_t = 1)]
    panels: usize,
    #[arg(long, default_value_t = 3)]
    modes: usize,
    #[arg(long, default_value = "forcing-window")]
    region: String,
    /// Re-run every block norm on a doubled grid.
    #[arg(long)]
    verify_extent: bool,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// Result files written by the experiment subcommands.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

/// What a subcommand produced.
struct Outcome {
    results: Vec<Value>,
    verdicts: Vec<Verdict>,
    csv: Option<String>,
}

impl Outcome {
    fn plain(v: Value) -> Self {
        Outcome { results: vec![v], verdicts: Vec::new(), csv: None }
    }
}

fn config_hash(cfg: &RunConfig, cmd: &Command, seed: u64) -> Result<String> {
    let canon = serde_json::to_string(&json!({ "config": cfg, "args": cmd, "seed": seed }))?;
    let digest = Sha256::digest(canon.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn verdict_csv(vs: &[Verdict]) -> String {
    let f = |x: f64| if x.is_finite() { x.to_string() } else { String::new() };
    let mut out = String::from("claim_id,expected_lo,expected_hi,observed,pass,runtime\n");
    for v in vs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.claim_id,
            f(v.expected.lo),
            f(v.expected.hi),
            v.observed,
            v.pass,
            v.runtime
        ));
    }
    out
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::InvalidParam(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Error::InvalidParam(e.to_string()))
        }
    }
}

fn lists_in_range(lists: &[&[i32]]) -> Result<()> {
    lists.iter().flat_map(|l| l.iter()).try_for_each(|&j| check_j(j))
}

fn t_grid(cfg: &RunConfig, lo: Option<f64>, hi: Option<f64>, count: usize, default: [f64; 2]) -> Result<Vec<f64>> {
    let [dlo, dhi] = cfg.grids.t_window.unwrap_or(default);
    let (a, b) = (lo.unwrap_or(dlo), hi.unwrap_or(dhi));
    if !(a > 0.0 && b > a && b.is_finite()) || count < 3 {
        return Err(Error::InvalidParam("need 0 < t_min < t_max and at least 3 times".into()));
    }
    Ok(log_space(a, b, count))
}

fn params_and_tag(tag: &str, cfg: &RunConfig) -> Result<(GroupParams, OperatorTag)> {
    Ok((cfg.params()?, tag.parse()?))
}

fn cmd_kernel(a: &KernelArgs, cfg: &RunConfig, store: Option<&Path>, format: Format, hash: &str) -> Result<Outcome> {
    check_j(a.j)?;
    let (params, tag) = params_and_tag(&a.tag, cfg)?;
    if a.modes == 0 {
        return Err(Error::InvalidParam("need at least one mode".into()));
    }
    let opts = PlanOptions { s_factor: a.s_factor, ..PlanOptions::default() };
    let k = kernel(tag, a.j, cfg.profile(), params, a.modes, &opts)?;
    let f = k.space.as_ref().expect("materialized");
    let summary = json!({
        "tag": tag,
        "j": a.j,
        "modes": a.modes,
        "l1_norm": l1_norm(&k)?,
        "l2_norm": f.l2_norm(),
        "sup_norm": f.sup_norm(),
        "grid": { "r_nodes": f.r_grid.len(), "s_nodes": f.s_grid.len() },
    });
    let body = match format {
        Format::Json => {
            let mut meta = k.meta();
            meta["tool_version"] = json!(TOOL_VERSION);
            meta["config_hash"] = json!(hash);
            serde_json::to_string(&f.to_envelope(meta))?
        }
        Format::Csv => f.slice_csv(0.0),
    };
    match store {
        Some(p) => {
            write_output(Some(p), &body)?;
            Ok(Outcome::plain(json!({ "kernel": summary, "path": p })))
        }
        // Without a file the kernel itself is the output.
        None => {
            write_output(None, &body)?;
            Ok(Outcome { results: Vec::new(), verdicts: Vec::new(), csv: None })
        }
    }
}

/// Geometric lambda grid covering the band of the stored kernel over modes
/// `0..modes`, on both signs of lambda.
fn band_lambda_grid(tag: OperatorTag, j: i32, params: GroupParams, modes: usize, per_band: usize) -> Vec<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for m in 0..modes {
        let (a, b) = tag.band(params, m, j);
        lo = lo.min(a);
        hi = hi.max(b);
    }
    // A dyadic band spans a factor 16 in the eigenvalue.
    let count = ((hi / lo).ln() / 16f64.ln() * per_band as f64).ceil().max(8.0) as usize;
    let pos = log_space(lo, hi, count);
    pos.iter().rev().map(|l| -l).chain(pos.iter().copied()).collect()
}

fn cmd_besov(a: &BesovArgs, cfg: &RunConfig) -> Result<Outcome> {
    let text = std::fs::read_to_string(&a.input)
        .map_err(|e| Error::InvalidParam(format!("cannot read {}: {e}", a.input.display())))?;
    let (f, meta) = RadialFunction::from_envelope(&serde_json::from_str(&text)?)?;
    let stored_tag: OperatorTag = serde_json::from_value(meta["tag"].clone())?;
    let j = meta["j"].as_i64().ok_or_else(|| Error::InvalidParam("stored kernel lacks meta.j".into()))? as i32;
    let modes = meta["modes"].as_u64().ok_or_else(|| Error::InvalidParam("stored kernel lacks meta.modes".into()))? as usize;
    let tag: OperatorTag = match &a.tag {
        Some(t) => t.parse()?,
        None => stored_tag,
    };
    let profile = cfg.profile();
    let q: Exponent = a.q.parse()?;
    let r: Exponent = a.r.parse()?;
    let spec = BesovSpec::new(tag, a.rho, q.to_f64(), r.to_f64())?;
    let lambdas = band_lambda_grid(stored_tag, j, f.params, modes, a.per_band.max(4));
    let band = lp_symbol(stored_tag, j, profile, f.params, modes);
    let window = support_window(&band, tag).ok_or_else(|| Error::InvalidParam("empty support".into()))?;
    let value = besov_norm_space(&f, modes, &lambdas, &spec, window, profile, &BlockOptions::default())?;
    let l2 = f.l2_norm();
    Ok(Outcome::plain(json!({
        "besov": { "tag": tag, "rho": a.rho, "q": q, "r": r, "value": value },
        "stored": { "tag": stored_tag, "j": j, "modes": modes, "l2_norm": l2 },
        "ratio_to_l2": value / l2,
    })))
}

fn cmd_admissible(a: &AdmissibleArgs) -> Result<Outcome> {
    if a.big_n < 4 || a.big_n % 2 == 1 {
        return Err(Error::InvalidParam(format!("N = {} is not 2n + 2 with n >= 1", a.big_n)));
    }
    let params = GroupParams::new(a.big_n / 2 - 1)?;
    let p: Exponent = a.p.parse()?;
    let r: Exponent = a.r.parse()?;
    let region: StrichartzRegion = a.region.parse()?;
    let w = strichartz_admissible(p, r, params, region);
    let mut out = serde_json::to_value(&w)?;
    out["region"] = json!(a.region);
    out["on_kohn_segment"] = json!(on_kohn_segment(p, r, params));
    if let Some(rho) = &a.rho {
        let value = parse_fraction(rho)?;
        out["rho"] = json!(rho);
        out["rho_in_window"] = json!(w.contains(value));
    }
    Ok(Outcome::plain(out))
}

fn parse_fraction(s: &str) -> Result<num_rational::Ratio<i64>> {
    let bad = || Error::InvalidParam(format!("'{s}' is not an integer or a/b"));
    let (a, b) = match s.trim().split_once('/') {
        Some((a, b)) => (a.trim().parse::<i64>().map_err(|_| bad())?, b.trim().parse::<i64>().map_err(|_| bad())?),
        None => (s.trim().parse::<i64>().map_err(|_| bad())?, 1),
    };
    if b == 0 {
        return Err(bad());
    }
    Ok(num_rational::Ratio::new(a, b))
}

fn cmd_propagate(a: &PropagateArgs, cfg: &RunConfig) -> Result<Outcome> {
    check_j(a.j)?;
    let params = cfg.params()?;
    let profile = cfg.profile();
    let family = match a.flow.as_str() {
        "vj" => Some(SharpFamily::Vj),
        "wj" => Some(SharpFamily::Wj),
        "wave" | "schrodinger" => None,
        other => return Err(Error::InvalidParam(format!("unknown flow '{other}' (wave, schrodinger, vj, wj)"))),
    };
    let sigma = a.sigma.unwrap_or_else(|| stationary_sigma(a.j, params, family.unwrap_or(SharpFamily::Vj)).1);
    let (value, extra) = match (a.flow.as_str(), family) {
        ("wave", _) => {
            let s = halfwave_on_kernel(a.j, a.t, a.r, sigma, params, profile, ModeCut::Fixed(a.modes), a.tol)?;
            (s.value, json!({ "modes": s.modes, "tail_bound": s.tail }))
        }
        ("schrodinger", _) => {
            let s = schrodinger_on_kernel(a.j, a.t, a.r, sigma, params, profile, a.modes, a.tol)?;
            (s.value, json!({ "modes": s.modes }))
        }
        (_, Some(fam)) => {
            if a.r != 0.0 {
                return Err(Error::InvalidParam("the single-mode families are evaluated at r = 0".into()));
            }
            let v = match fam {
                SharpFamily::Vj => vj_value(a.j, a.t, sigma, params, profile, a.tol)?,
                SharpFamily::Wj => wj_value(a.j, a.t, sigma, params, profile, a.tol)?,
            };
            (v.value, json!({ "plus_abs": v.plus.norm() * v.prefactor, "minus_abs": v.minus.norm() * v.prefactor }))
        }
        _ => unreachable!(),
    };
    Ok(Outcome::plain(json!({
        "flow": a.flow, "j": a.j, "t": a.t, "r": a.r, "sigma": sigma, "s": sigma * a.t,
        "re": value.re, "im": value.im, "abs": value.norm(), "details": extra,
    })))
}

fn scan_outcome(name: &str, report: impl Serialize, verdicts: Vec<Verdict>) -> Result<Outcome> {
    let csv = Some(verdict_csv(&verdicts));
    Ok(Outcome { results: vec![json!({ "experiment": name, "report": report, "verdicts": verdicts })], verdicts, csv })
}

fn cmd_dispersive(a: &DispersiveArgs, cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let slope_j = a.j.clone().or_else(|| cfg.grids.j_list.clone()).unwrap_or_else(|| (-2..=2).collect());
    lists_in_range(&[&slope_j, &a.pos_j, &a.neg_j])?;
    let plan = ScanPlan {
        slope_j,
        pos_j: a.pos_j.clone(),
        neg_j: a.neg_j.clone(),
        t_list: t_grid(cfg, a.t_min, a.t_max, a.t_count, [10.0, 1000.0])?,
    };
    let mut v = cfg.verifier(seed)?;
    v.modes = a.modes;
    let rep = dispersive_scan(&plan, a.rho, &v)?;
    let verdicts = rep.verdicts.clone();
    scan_outcome("dispersive", json!({ "plan": plan, "cells": rep.cells, "t_fits": rep.t_fits, "normalized": rep.normalized, "j_fits": rep.j_fits, "rho_spread": rep.rho_spread }), verdicts)
}

fn cmd_sharp(a: &SharpArgs, cfg: &RunConfig, seed: u64, family: SharpFamily) -> Result<Outcome> {
    let mut plan = SharpPlan::default_for(family);
    plan.slope_j = a.slope_j;
    if let Some(p) = &a.pos_j {
        plan.pos_j = p.clone();
    }
    plan.neg_j = a.neg_j.clone();
    if let Some(c) = a.omega_cap {
        plan.omega_cap = c;
    }
    let besov_j = a.besov_j.clone().unwrap_or_else(|| match family {
        SharpFamily::Vj => (-3..=3).collect(),
        SharpFamily::Wj => vec![-1, 1],
    });
    lists_in_range(&[&plan.pos_j, &plan.neg_j, &besov_j, &[plan.slope_j]])?;
    let v = cfg.verifier(seed)?;
    let rep = match family {
        SharpFamily::Vj => sharpness_vj(&plan, &besov_j, a.rho, &v)?,
        SharpFamily::Wj => counterexample_wj(&plan, &besov_j, a.rho, &v)?,
    };
    let mut verdicts = rep.verdicts.clone();
    let guard = if a.no_guard {
        None
    } else {
        let (cells, verdict) = consistency_guard(&rep, &v)?;
        verdicts.push(verdict);
        Some(cells)
    };
    let name = match family {
        SharpFamily::Vj => "sharpness",
        SharpFamily::Wj => "counterexample",
    };
    scan_outcome(name, json!({ "plan": plan, "family": rep, "guard": guard }), verdicts)
}

fn cmd_schrodinger(a: &SchrodingerArgs, cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    lists_in_range(&[&a.j, &a.pos_j])?;
    let plan = ScanPlan {
        slope_j: a.j.clone(),
        pos_j: a.pos_j.clone(),
        neg_j: Vec::new(),
        t_list: t_grid(cfg, a.t_min, a.t_max, a.t_count, [10.0, 300.0])?,
    };
    let mut v = cfg.verifier(seed)?;
    v.modes = a.modes;
    v.scan = ScanOptions { oversample: 2.0, ..v.scan };
    let rep = schrodinger_scan(&plan, &v)?;
    let verdicts = rep.verdicts.clone();
    scan_outcome("schrodinger", json!({ "plan": plan, "cells": rep.cells, "t_fits": rep.t_fits, "normalized": rep.normalized, "j_fits": rep.j_fits }), verdicts)
}

fn cmd_strichartz(a: &StrichartzArgs, cfg: &RunConfig, seed: u64) -> Result<Outcome> {
    let plan = StrichartzPlan {
        p: a.p.clone(),
        r: a.r.clone(),
        rho: a.rho.clone(),
        data: a.data.parse::<InitialData>()?,
        t_window: a.t_window,
        panels: a.panels,
        modes: a.modes,
        region: a.region.parse()?,
        blocks: BlockOptions { verify_extent: a.verify_extent, ..BlockOptions::default() },
    };
    let rep = strichartz_spot_check(&plan, &cfg.verifier(seed)?)?;
    let verdicts = vec![rep.verdict.clone()];
    scan_outcome("strichartz", json!({ "plan": plan, "result": rep }), verdicts)
}

fn cmd_report(a: &ReportArgs) -> Result<Outcome> {
    let mut verdicts = Vec::new();
    let mut sources = Vec::new();
    for path in &a.inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParam(format!("cannot read {}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text)?;
        let results = doc["results"].as_array().ok_or_else(|| Error::InvalidParam(format!("{}: no results array", path.display())))?;
        let mut count = 0;
        for r in results {
            if let Some(vs) = r["verdicts"].as_array() {
                for v in vs {
                    verdicts.push(verdict_from_json(v)?);
                    count += 1;
                }
            }
        }
        sources.push(json!({ "path": path, "config_hash": doc["config_hash"], "verdicts": count }));
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    let csv = Some(verdict_csv(&verdicts));
    Ok(Outcome {
        results: vec![json!({ "sources": sources, "passed": passed, "total": verdicts.len(), "verdicts": verdicts })],
        verdicts,
        csv,
    })
}

fn verdict_from_json(v: &Value) -> Result<Verdict> {
    let bad = || Error::InvalidParam(format!("malformed verdict {v}"));
    let bound = |x: &Value, inf: f64| if x.is_null() { Some(inf) } else { x.as_f64() };
    let id = v["claim_id"].as_str().ok_or_else(bad)?;
    let lo = bound(&v["expected"][0], f64::NEG_INFINITY).ok_or_else(bad)?;
    let hi = bound(&v["expected"][1], f64::INFINITY).ok_or_else(bad)?;
    // Non-finite observations are written as null.
    let observed = if v["observed"].is_null() { f64::NAN } else { v["observed"].as_f64().ok_or_else(bad)? };
    let runtime = v["runtime"].as_f64().unwrap_or(0.0);
    Ok(Verdict::new(id, heisenwave::verifier::Interval::new(lo, hi), observed, runtime))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    }
    let format = cli.format.unwrap_or(cfg.output.format);
    let out_path = cli.out.clone().or_else(|| cfg.output.path.clone());
    let hash = config_hash(&cfg, &cli.cmd, cli.seed)?;
    let mut outcome = match &cli.cmd {
        Command::Kernel(a) => return cmd_kernel(a, &cfg, out_path.as_deref(), format, &hash).map(|o| {
            if !o.results.is_empty() {
                eprintln!("{}", serde_json::to_string_pretty(&o.results[0]).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }),
        Command::Besov(a) => cmd_besov(a, &cfg)?,
        Command::Admissible(a) => cmd_admissible(a)?,
        Command::Propagate(a) => cmd_propagate(a, &cfg)?,
        Command::DispersiveScan(a) => cmd_dispersive(a, &cfg, cli.seed)?,
        Command::Sharpness(a) => cmd_sharp(a, &cfg, cli.seed, SharpFamily::Vj)?,
        Command::Counterexample(a) => cmd_sharp(a, &cfg, cli.seed, SharpFamily::Wj)?,
        Command::Schrodinger(a) => cmd_schrodinger(a, &cfg, cli.seed)?,
        Command::Strichartz(a) => cmd_strichartz(a, &cfg, cli.seed)?,
        Command::Report(a) => cmd_report(a)?,
    };
    if !cli.timing {
        zero_runtimes(&mut outcome);
    }
    for v in &outcome.verdicts {
        eprintln!("{}", v.row());
    }
    let text = match (format, &outcome.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        (Format::Csv, None) => return Err(Error::InvalidParam("this subcommand has no CSV form".into())),
        (Format::Json, _) => {
            let env = json!({ "tool_version": TOOL_VERSION, "config_hash": hash, "results": outcome.results });
            serde_json::to_string_pretty(&env)? + "\n"
        }
    };
    write_output(out_path.as_deref(), &text)?;
    Ok(if outcome.verdicts.iter().all(|v| v.pass) { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn zero_runtimes(o: &mut Outcome) {
    fn walk(v: &mut Value) {
        match v {
            Value::Object(map) => {
                if map.contains_key("claim_id") && map.contains_key("runtime") {
                    map.insert("runtime".into(), json!(0.0));
                }
                map.values_mut().for_each(walk);
            }
            Value::Array(items) => items.iter_mut().for_each(walk),
            _ => {}
        }
    }
    o.results.iter_mut().for_each(walk);
    for v in &mut o.verdicts {
        v.runtime = 0.0;
    }
    if let Some(csv) = &mut o.csv {
        *csv = verdict_csv(&o.verdicts);
    }
}

fn claim_prefix(cmd: &Command) -> &'static str {
    match cmd {
        Command::Kernel(_) => "kernel",
        Command::Besov(_) => "besov",
        Command::Admissible(_) => "admissible",
        Command::Propagate(_) => "propagate",
        Command::DispersiveScan(_) => "dispersive",
        Command::Sharpness(_) => "sharpness",
        Command::Counterexample(_) => "counterexample",
        Command::Schrodinger(_) => "schrodinger",
        Command::Strichartz(_) => "strichartz",
        Command::Report(_) => "report",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", claim_prefix(&cli.cmd));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
