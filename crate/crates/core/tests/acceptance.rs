//! Acceptance run: one PASS/FAIL line per criterion, details indented below.
//! `ACCEPT_ONLY=1,4` restricts the run to the listed criteria.
//!
//! Criteria listed in `KNOWN_SHORTFALLS` are reported as FAIL when they
//! fail but do not fail the process; any other failure does.

use num_complex::Complex64;
use std::time::Instant;

use heisenwave::besov::{
    kernel_norm_asymptotics, on_kohn_segment, strichartz_admissible, BlockOptions, Exponent, StrichartzRegion,
};
use heisenwave::littlewood_paley::{kernel, l1_norm, lp_symbol, overlap_window, project, OperatorTag};
use heisenwave::oscillatory::{corpus, integrate, stationary_lower, vdc_bound, CriticalPoint, OscillatoryProblem};
use heisenwave::profile::DyadicProfile;
use heisenwave::propagator::{vj_symbol, wj_symbol, SharpFamily};
use heisenwave::spectral::{
    forward_table, inverse_at, inverse_transform_planned, plancherel_norm, GroupParams, PlanOptions, SamplingPlan,
    SpectralSymbol,
};
use heisenwave::verifier::{
    consistency_guard, counterexample_wj, dispersive_scan, schrodinger_scan, sharpness_vj, strichartz_spot_check,
    InitialData, ScanPlan, SharpPlan, StrichartzPlan, Verdict, VerifierConfig,
};
use heisenwave::fit::log_space;
use heisenwave::scan::ScanOptions;
use heisenwave::{Error, Result};
use num_rational::Ratio;

const KNOWN_SHORTFALLS: &[u8] = &[5, 8];

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn verdicts(&mut self, vs: &[Verdict]) {
        for v in vs {
            self.pass &= v.pass;
            self.lines.push(v.row());
        }
    }
}

fn p1() -> GroupParams {
    GroupParams::new(1).unwrap()
}

fn prof() -> DyadicProfile {
    DyadicProfile::default()
}

// ---------------------------------------------------------------- 1

/// Forward transform of the inverse transform on interior nodes of every
/// support interval, against the symbol itself. Returns the relative
/// discrete L^2 error (weights |lambda|^n d lambda) and the relative
/// Plancherel defect.
fn roundtrip(sym: &SpectralSymbol, opts: &PlanOptions, per_interval: usize) -> Result<(f64, f64)> {
    let plan = SamplingPlan::for_symbol(sym, opts)?;
    let f = inverse_transform_planned(sym, &plan)?;
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for m in 0..sym.mode_count() {
        for &(a, b) in sym.lambda_support(m) {
            let h = (b - a) / (per_interval + 1) as f64;
            nodes.extend((1..=per_interval).map(|i| (a + h * i as f64, h)));
        }
    }
    nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
    nodes.dedup_by(|x, y| x.0 == y.0);
    let lambdas: Vec<f64> = nodes.iter().map(|x| x.0).collect();
    let (table, _) = forward_table(&f, sym.m_max(), &lambdas)?;
    let n = sym.params.n as i32;
    let (mut num, mut den) = (0.0, 0.0);
    for (m, row) in table.iter().enumerate() {
        for (k, &(l, h)) in nodes.iter().enumerate() {
            let w = l.abs().powi(n) * h;
            let exact = sym.value(m, l);
            num += (row[k] - exact).norm_sqr() * w;
            den += exact.norm_sqr() * w;
        }
    }
    let pn = plancherel_norm(sym);
    Ok(((num / den).sqrt(), (f.l2_norm() - pn).abs() / pn))
}

fn criterion_1() -> Result<Outcome> {
    let mut o = Outcome::new();
    let opts = PlanOptions { s_factor: 2400.0, ..PlanOptions::default() };
    for j in -2..=2 {
        let cases = [
            ("psi", lp_symbol(OperatorTag::Full, j, prof(), p1(), 2)),
            ("v", vj_symbol(j, p1(), prof())),
            ("w", wj_symbol(j, p1(), prof())),
        ];
        for (name, sym) in cases {
            let (rt, pl) = roundtrip(&sym, &opts, 24)?;
            o.check(rt <= 1e-6 && pl <= 1e-6, format!("{name}_{j}: round trip {rt:.2e}, Plancherel {pl:.2e} (<= 1e-6)"));
        }
    }
    Ok(o)
}

// ---------------------------------------------------------------- 2

/// Whether the closed supports of the Kohn block j and the full block k meet
/// on some mode below `modes` (with `open`, in a set of positive length),
/// from the two eigenvalue formulas.
fn blocks_meet(j: i32, k: i32, n: usize, modes: usize, open: bool) -> bool {
    (0..modes).any(|m| {
        let big_m = (2 * m + n) as f64;
        let (a1, b1) = (4f64.powi(j) / 4.0 / (4.0 * big_m), 4f64.powi(j) * 4.0 / (4.0 * big_m));
        // 4 M l + l^2 = c.
        let root = |c: f64| c / (2.0 * big_m + (4.0 * big_m * big_m + c).sqrt());
        let (a2, b2) = (root(4f64.powi(k) / 4.0), root(4f64.powi(k) * 4.0));
        let (lo, hi) = (a1.max(a2), b1.min(b2));
        if open {
            lo < hi * (1.0 - 1e-12)
        } else {
            lo <= hi * (1.0 + 1e-12)
        }
    })
}

fn criterion_2() -> Result<Outcome> {
    let mut o = Outcome::new();
    let r = prof();
    // Partition of unity, summing every translate that can be nonzero.
    let mut taus = log_space(1e-6, 1e6, 401);
    taus.extend([1e-3, 1.0, 7.0, 1e3]);
    let worst = taus
        .iter()
        .map(|&tau| ((-40..=40).map(|j| r.eval(tau * 4f64.powi(-j))).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    o.check(worst <= 1e-12, format!("partition of unity: max defect {worst:.1e} (<= 1e-12)"));
    let mut worst = 0.0f64;
    for m in 0..6 {
        for &l in &[-37.0, -0.8, -1e-3, 2e-4, 0.5, 3.0, 250.0] {
            let s: Complex64 = (-30..=30).map(|j| lp_symbol(OperatorTag::Full, j, r, p1(), 6).value(m, l)).sum();
            worst = worst.max((s - 1.0).norm());
        }
    }
    o.check(worst <= 1e-12, format!("full-scale symbols sum to one: max defect {worst:.1e}"));

    // Overlap windows against brute force over modes.
    for n in [1usize, 2] {
        let params = GroupParams::new(n).unwrap();
        for j in -5..=5 {
            let (lo, hi) = overlap_window(j, params);
            let range = |open: bool| {
                let meet: Vec<i32> = (j - 12..=2 * j + 12).filter(|&k| blocks_meet(j, k, n, 400, open)).collect();
                (*meet.first().unwrap(), *meet.last().unwrap())
            };
            let ((bl, bh), (ol, oh)) = (range(false), range(true));
            let phi = lp_symbol(OperatorTag::Kohn, j, r, params, 40);
            let outside_zero = [lo - 2, lo - 1, hi + 1, hi + 2]
                .iter()
                .all(|&k| plancherel_norm(&project(&phi, OperatorTag::Full, k, r)) == 0.0);
            let ok = lo >= j - 2 && (lo, hi) == (bl, bh) && outside_zero;
            if !ok || j == 0 || j.abs() == 5 {
                o.check(ok, format!(
                    "n={n} j={j}: window [{lo}, {hi}], closed supports meet for [{bl}, {bh}] (positive length [{ol}, {oh}]), zero outside: {outside_zero}"
                ));
            }
        }
    }

    // Kohn-scale dilation identity.
    let big_n = p1().homogeneous_dim() as i32;
    let phi0 = lp_symbol(OperatorTag::Kohn, 0, r, p1(), 3);
    let scale0 = inverse_at(&phi0, 0.0, 0.0, 1e-13)?.norm();
    let mut worst = 0.0f64;
    for j in -2..=2 {
        let phij = lp_symbol(OperatorTag::Kohn, j, r, p1(), 3);
        let d = 2f64.powi(j);
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.0), (0.0, 0.7), (0.8, 1.9), (1.5, -3.0)] {
            let lhs = inverse_at(&phij, x / d, y / (d * d), 1e-13)?;
            let rhs = inverse_at(&phi0, x, y, 1e-13)? * 2f64.powi(big_n * j);
            worst = worst.max((lhs - rhs).norm() / (2f64.powi(big_n * j) * scale0));
        }
    }
    o.check(worst <= 1e-6, format!("phi_j(z, s) = 2^(Nj) phi_0(2^j z, 4^j s): max rel. defect {worst:.1e} (<= 1e-6)"));

    // L^1 norms.
    let opts = PlanOptions { s_factor: 2400.0, ..PlanOptions::default() };
    let kohn: Vec<f64> = (-2..=2)
        .map(|j| l1_norm(&kernel(OperatorTag::Kohn, j, r, p1(), 2, &opts)?))
        .collect::<Result<_>>()?;
    let (mn, mx) = kohn.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    o.check(mx / mn - 1.0 <= 1e-4, format!("||phi_j||_1, j=-2..2: spread {:.1e} (<= 1e-4)", mx / mn - 1.0));
    let full: Vec<f64> = (-4..=4)
        .map(|j| l1_norm(&kernel(OperatorTag::Full, j, r, p1(), 2, &opts)?))
        .collect::<Result<_>>()?;
    let ratio = full.iter().fold(0.0f64, |a, &x| a.max(x)) / full[4];
    o.check(ratio <= 3.0, format!("max ||psi_j||_1 / ||psi_0||_1, |j| <= 4: {ratio:.4} (<= 3)"));
    Ok(o)
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Result<Outcome> {
    let mut o = Outcome::new();
    let big_n = p1().homogeneous_dim() as f64;
    let rho = 1.0;
    let js = [2, 3, 4, 5];
    for (tag, expected) in [(OperatorTag::Full, 2.0 * rho + big_n / 2.0), (OperatorTag::Kohn, rho + big_n / 2.0)] {
        match kernel_norm_asymptotics(tag, rho, 1.0, &js, p1(), prof(), 3) {
            Ok(fit) => o.check(
                (fit.slope - expected).abs() <= 0.1,
                format!("{tag:?} scale: slope {:.4} (expected {expected} +- 0.1), r^2 {:.5}", fit.slope, fit.r_squared),
            ),
            Err(e) => o.check(false, format!("{tag:?} scale: {e}")),
        }
    }
    Ok(o)
}

// ---------------------------------------------------------------- 4

/// `int e^{-i omega phase} amplitude` by the composite trapezoid rule on
/// `2^k` panels, Richardson-extrapolated once.
fn trapezoid_oracle(prob: &OscillatoryProblem, k: u32) -> Complex64 {
    let f = |x: f64| (prob.amplitude)(x) * Complex64::from_polar(1.0, -prob.omega * (prob.phase)(x));
    let trap = |panels: usize| {
        let h = (prob.b - prob.a) / panels as f64;
        let inner: Complex64 = (1..panels).map(|i| f(prob.a + h * i as f64)).sum();
        (inner + (f(prob.a) + f(prob.b)) * 0.5) * h
    };
    let coarse = trap(1 << k);
    let fine = trap(1 << (k + 1));
    (fine * 4.0 - coarse) / 3.0
}

fn criterion_4() -> Result<Outcome> {
    let mut o = Outcome::new();
    let (mut worst, mut vdc_cases, mut vdc_ok, mut sp_cases, mut sp_ok) = (0.0f64, 0, 0, 0, 0);
    for c in corpus() {
        let prob = c.build()?;
        let exact = trapezoid_oracle(&prob, 20);
        let got = integrate(&prob, 1e-12)?;
        worst = worst.max((got - exact).norm());
        // van der Corput, with delta the sampled minimum of |phase^(k)|.
        for k in 1..=2usize {
            let Some(dk) = prob.phase_derivs.get(k - 1) else { continue };
            let delta = (0..=20000)
                .map(|i| dk(prob.a + (prob.b - prob.a) * i as f64 / 20000.0).abs())
                .fold(f64::INFINITY, f64::min)
                * (1.0 - 1e-6);
            if !(delta > 0.0) {
                continue;
            }
            match vdc_bound(&prob, k, delta) {
                Ok(b) => {
                    vdc_cases += 1;
                    vdc_ok += (b >= exact.norm()) as usize;
                }
                Err(Error::HypothesisViolated(_)) => {}
                Err(e) => return Err(e),
            }
        }
        if let Some(x0) = c.critical_point() {
            if x0 > prob.a && x0 < prob.b {
                let cp = CriticalPoint::new(&prob, x0)?;
                if let Ok(sb) = stationary_lower(&prob, &cp) {
                    if prob.omega / prob.time_scale > sb.threshold {
                        sp_cases += 1;
                        sp_ok += (sb.lower <= exact.norm()) as usize;
                    }
                }
            }
        }
    }
    o.check(worst <= 1e-8, format!("quadrature vs trapezoid oracle on {} problems: max error {worst:.1e} (<= 1e-8)", corpus().len()));
    o.check(vdc_cases > 0 && vdc_ok == vdc_cases, format!("vdc bound dominates: {vdc_ok}/{vdc_cases} cases"));
    o.check(sp_cases > 0 && sp_ok == sp_cases, format!("stationary lower bound below |I| past threshold: {sp_ok}/{sp_cases} cases"));
    Ok(o)
}

// ---------------------------------------------------------------- 5 - 8, 10

fn cfg() -> VerifierConfig {
    VerifierConfig::new(p1())
}

fn criterion_5() -> Result<Outcome> {
    let mut o = Outcome::new();
    let plan = ScanPlan {
        slope_j: (-2..=2).collect(),
        pos_j: vec![3, 4, 5],
        neg_j: vec![-3, -2, -1],
        t_list: log_space(10.0, 1000.0, 9),
    };
    let rep = dispersive_scan(&plan, 0.0, &cfg())?;
    o.verdicts(&rep.verdicts);
    Ok(o)
}

fn sharp_reports(
    guard_rows: &mut Vec<Verdict>,
    which: SharpFamily,
) -> Result<Outcome> {
    let mut o = Outcome::new();
    let c = cfg();
    let plan = SharpPlan::default_for(which);
    let rep = match which {
        SharpFamily::Vj => sharpness_vj(&plan, &(-3..=3).collect::<Vec<_>>(), 1.0, &c)?,
        SharpFamily::Wj => counterexample_wj(&plan, &[-1, 1], 1.0, &c)?,
    };
    o.verdicts(&rep.verdicts);
    let (_, guard) = consistency_guard(&rep, &c)?;
    guard_rows.push(Verdict { claim_id: format!("consistency.violations.{which:?}"), ..guard });
    Ok(o)
}

fn criterion_8() -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut c = cfg();
    c.modes = 8;
    c.scan = ScanOptions { oversample: 2.0, ..c.scan };
    let plan = ScanPlan { slope_j: vec![0, 1, 2], pos_j: vec![0, 1, 2, 3], neg_j: Vec::new(), t_list: log_space(10.0, 300.0, 7) };
    o.verdicts(&schrodinger_scan(&plan, &c)?.verdicts);
    Ok(o)
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Result<Outcome> {
    let mut o = Outcome::new();
    let half = Ratio::new(1, 2);
    let one = Ratio::from_integer(1);
    let (mut seg, mut seg_ok, mut agree) = (0, 0, true);
    for n in 1..=3usize {
        let params = GroupParams::new(n).unwrap();
        let big_n = Ratio::from_integer((2 * n + 2) as i64);
        for den in 1..=60i64 {
            for num in 0..=den / 2 {
                let inv_r = Ratio::new(num, den);
                let d = half - inv_r;
                let inv_p = big_n * d - one;
                let r = Exponent::from_inverse(inv_r).unwrap();
                // Segment points: 0 <= 2/p <= 1/2 - 1/r.
                if inv_p >= Ratio::from_integer(0) && inv_p * 2 <= d {
                    let p = Exponent::from_inverse(inv_p).unwrap();
                    seg += 1;
                    seg_ok += (strichartz_admissible(p, r, params, StrichartzRegion::LpLr).admissible
                        && on_kohn_segment(p, r, params)) as usize;
                }
                // Off-segment points never report membership.
                for k in 0..=8i64 {
                    let inv_p = Ratio::new(k, 8);
                    let on = inv_p * 2 <= d && inv_p == big_n * d - one;
                    agree &= on_kohn_segment(Exponent::from_inverse(inv_p).unwrap(), r, params) == on;
                }
            }
        }
        // Endpoint 2/p = 1/2 - 1/r on the segment.
        let d_end = one / (big_n - half);
        let end = strichartz_admissible(
            Exponent::from_inverse(d_end / 2).unwrap(),
            Exponent::from_inverse(half - d_end).unwrap(),
            params,
            StrichartzRegion::LpLr,
        );
        o.check(end.admissible, format!("n={n}: endpoint 1/r = {}, 1/p = {} admissible", half - d_end, d_end / 2));
    }
    o.check(seg > 0 && seg_ok == seg, format!("segment points inside the mixed-norm region: {seg_ok}/{seg}"));
    o.check(agree, "segment membership agrees with the defining equalities on a rational sweep".into());
    let e = |s: &str| s.parse::<Exponent>().unwrap();
    let p4 = GroupParams::new(1).unwrap();
    let w = strichartz_admissible(e("7"), e("14/3"), p4, StrichartzRegion::LpLr);
    o.check(w.admissible, "N=4: (p, r) = (7, 14/3) admissible".into());
    let rejected = ["inf", "2", "1"]
        .iter()
        .all(|p| !strichartz_admissible(e(p), e("2"), p4, StrichartzRegion::LpLr).admissible);
    o.check(rejected, "r = 2 rejected by the mixed-norm region".into());
    let b = strichartz_admissible(e("inf"), e("2"), p4, StrichartzRegion::DataWindow);
    let c = strichartz_admissible(e("inf"), e("2"), p4, StrichartzRegion::ForcingWindow);
    o.check(
        b.rho_min == Some(one) && b.rho_max == Some(one) && c.rho_min == Some(Ratio::from_integer(0)) && c.rho_max == Some(Ratio::from_integer(0)),
        format!("r = 2 windows: b) [{:?}, {:?}], c) [{:?}, {:?}]", b.rho_min, b.rho_max, c.rho_min, c.rho_max),
    );
    Ok(o)
}

fn strichartz_extra() -> Result<Outcome> {
    let mut o = Outcome::new();
    let plan = StrichartzPlan {
        p: "8".into(),
        r: "4".into(),
        rho: "-3/4".into(),
        data: InitialData::Psi0,
        t_window: 5.0,
        panels: 1,
        modes: 3,
        region: StrichartzRegion::ForcingWindow,
        blocks: BlockOptions { verify_extent: false, ..BlockOptions::default() },
    };
    let rep = strichartz_spot_check(&plan, &cfg())?;
    o.verdicts(&[rep.verdict]);
    Ok(o)
}

// ---------------------------------------------------------------- driver

fn report(id: &str, title: &str, started: Instant, res: Result<Outcome>) -> bool {
    let secs = started.elapsed().as_secs_f64();
    let o = res.unwrap_or_else(|e| Outcome { pass: false, lines: vec![format!("error: {e}")] });
    println!("{} {id:>2} {title} ({secs:.1} s)", if o.pass { "PASS" } else { "FAIL" });
    for l in &o.lines {
        println!("       {l}");
    }
    o.pass
}

fn main() {
    let only: Option<Vec<String>> =
        std::env::var("ACCEPT_ONLY").ok().map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
    let wanted = |id: &str| only.as_ref().map_or(true, |v| v.iter().any(|x| x == id));
    let total = Instant::now();
    let mut results: Vec<(String, bool)> = Vec::new();
    let mut run = |id: &str, title: &str, f: &mut dyn FnMut() -> Result<Outcome>| {
        if wanted(id) {
            let t = Instant::now();
            let ok = report(id, title, t, f());
            results.push((id.to_string(), ok));
        }
    };
    let mut guard: Vec<Verdict> = Vec::new();
    run("1", "transform round trip and Plancherel", &mut criterion_1);
    run("2", "partition, overlap windows, homogeneity, L1 bounds", &mut criterion_2);
    run("3", "Besov norm asymptotics of phi_j", &mut criterion_3);
    run("4", "oscillatory engine", &mut criterion_4);
    run("5", "dispersive upper bound for psi_j", &mut criterion_5);
    run("6", "sharpness with v_j", &mut || sharp_reports(&mut guard, SharpFamily::Vj));
    run("7", "counterexample with w_j", &mut || sharp_reports(&mut guard, SharpFamily::Wj));
    run("8", "Schroedinger dispersive estimate", &mut criterion_8);
    run("9", "exponent arithmetic", &mut criterion_9);
    if wanted("10") {
        let t = Instant::now();
        let res = if guard.is_empty() {
            Err(Error::InvalidParam("needs criteria 6 and 7".into()))
        } else {
            let mut o = Outcome::new();
            o.verdicts(&guard);
            Ok(o)
        };
        let ok = report("10", "consistency guard (lower <= upper at matched points)", t, res);
        results.push(("10".into(), ok));
    }
    if wanted("S") {
        let t = Instant::now();
        let ok = report("S", "Strichartz spot check (supplementary)", t, strichartz_extra());
        results.push(("S".into(), ok));
    }
    println!("total {:.1} s", total.elapsed().as_secs_f64());
    let unexpected: Vec<&str> = results
        .iter()
        .filter(|(id, ok)| !ok && !KNOWN_SHORTFALLS.iter().any(|k| k.to_string() == *id))
        .map(|(id, _)| id.as_str())
        .collect();
    let shortfalls: Vec<&str> = results.iter().filter(|(_, ok)| !ok).map(|(id, _)| id.as_str()).collect();
    println!("failed criteria: {shortfalls:?}; known shortfalls: {KNOWN_SHORTFALLS:?}");
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
