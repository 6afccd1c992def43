//! Laguerre polynomials and binomial coefficients.

/// Generalized Laguerre polynomial `L_m^{(alpha)}(tau)` by the three-term
/// recurrence.
pub fn laguerre(m: usize, alpha: f64, tau: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - tau;
    for k in 2..=m {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0 + alpha - tau) * cur - (kf - 1.0 + alpha) * prev) / kf;
        prev = cur;
        cur = next;
    }
    cur
}

/// All of `L_0^{(alpha)}(tau), ..., L_m^{(alpha)}(tau)`.
pub fn laguerre_all(m: usize, alpha: f64, tau: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if m == 0 {
        return;
    }
    out.push(1.0 + alpha - tau);
    for k in 2..=m {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0 + alpha - tau) * out[k - 1] - (kf - 1.0 + alpha) * out[k - 2]) / kf;
        out.push(next);
    }
}

/// Derivative in `tau`: `d/dtau L_m^{(alpha)} = -L_{m-1}^{(alpha+1)}`.
pub fn laguerre_deriv(m: usize, alpha: f64, tau: f64) -> f64 {
    if m == 0 {
        0.0
    } else {
        -laguerre(m - 1, alpha + 1.0, tau)
    }
}

/// Binomial coefficient `C(a, k)` for real `a`.
pub fn binomial(a: f64, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (a - i as f64) / (i + 1) as f64;
    }
    c
}

/// Multiplicity of the m-th spherical mode: `C(m+n-1, m)`.
pub fn mode_multiplicity(m: usize, n: usize) -> f64 {
    binomial((m + n - 1) as f64, n - 1)
}

/// `max |L_m^{(alpha)}(tau) e^{-tau/2}|` and `max |tau d/dtau(...)|` sampled
/// on `[0, tau_max]`, with `samples` points.
pub fn laguerre_function_sup(m: usize, alpha: f64, tau_max: f64, samples: usize) -> (f64, f64) {
    let mut sup0: f64 = 0.0;
    let mut sup1: f64 = 0.0;
    let n = samples.max(2);
    for i in 0..n {
        let tau = tau_max * i as f64 / (n - 1) as f64;
        let e = (-0.5 * tau).exp();
        let l = laguerre(m, alpha, tau);
        let dl = laguerre_deriv(m, alpha, tau);
        sup0 = sup0.max((l * e).abs());
        sup1 = sup1.max((tau * (dl - 0.5 * l) * e).abs());
    }
    (sup0, sup1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(m: usize, alpha: f64, tau: f64) -> f64 {
        (0..=m)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                sign * binomial(m as f64 + alpha, m - k) * tau.powi(k as i32) / fact
            })
            .sum()
    }

    #[test]
    fn recurrence_matches_closed_form() {
        for m in 0..12 {
            for &alpha in &[0.0, 1.0, 2.5] {
                for &tau in &[0.0, 0.3, 1.7, 5.0] {
                    let a = laguerre(m, alpha, tau);
                    let b = closed_form(m, alpha, tau);
                    assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "m={m} a={alpha} t={tau}");
                }
            }
        }
    }

    #[test]
    fn value_at_origin_is_binomial() {
        assert_eq!(laguerre(5, 0.0, 0.0), 1.0);
        assert!((laguerre(4, 2.0, 0.0) - 15.0).abs() < 1e-12);
        assert_eq!(mode_multiplicity(7, 1), 1.0);
        assert_eq!(mode_multiplicity(3, 3), 10.0);
    }

    #[test]
    fn all_matches_single() {
        let mut v = Vec::new();
        laguerre_all(9, 1.0, 3.3, &mut v);
        for (m, x) in v.iter().enumerate() {
            assert!((x - laguerre(m, 1.0, 3.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let h = 1e-6;
        let d = (laguerre(6, 1.0, 2.0 + h) - laguerre(6, 1.0, 2.0 - h)) / (2.0 * h);
        assert!((d - laguerre_deriv(6, 1.0, 2.0)).abs() < 1e-6);
    }

    #[test]
    fn laguerre_function_bounded_by_multiplicity() {
        for m in [0, 3, 20, 80] {
            let (s0, _) = laguerre_function_sup(m, 1.0, 400.0, 4001);
            assert!(s0 <= binomial(m as f64 + 1.0, m) * (1.0 + 1e-12));
        }
    }
}
