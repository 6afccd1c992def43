//! Gauss–Kronrod quadrature: adaptive integration and fixed panel grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Nodes and weights of the 15-point Kronrod rule on [a, b], with the
/// embedded 7-point Gauss weights (zero at Kronrod-only nodes).
pub fn gk15_rule(a: f64, b: f64) -> ([f64; 15], [f64; 15], [f64; 15]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [0.0; 15];
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for i in 0..7 {
        x[i] = c - h * XGK[i];
        x[14 - i] = c + h * XGK[i];
        wk[i] = h * WGK[i];
        wk[14 - i] = h * WGK[i];
        if i % 2 == 1 {
            wg[i] = h * WG[i / 2];
            wg[14 - i] = h * WG[i / 2];
        }
    }
    x[7] = c;
    wk[7] = h * WGK[7];
    wg[7] = h * WG[3];
    (x, wk, wg)
}

/// One GK15 panel: (Kronrod estimate, error estimate).
pub fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let (x, wk, wg) = gk15_rule(a, b);
    let mut k = T::zero();
    let mut g = T::zero();
    let mut fv = [T::zero(); 15];
    for i in 0..15 {
        let v = f(x[i]);
        fv[i] = v;
        k = k + v * wk[i];
        g = g + v * wg[i];
    }
    let mean = k * (1.0 / (b - a));
    let mut resasc = 0.0;
    for i in 0..15 {
        resasc += wk[i].abs() * (fv[i] - mean).magnitude();
    }
    let mut err = (k - g).magnitude();
    if resasc > 0.0 && err > 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    (k, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive GK15 integration over [a, b], starting from `initial`
/// equal panels. Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    initial: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParam("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), error: 0.0, panels: 0 });
    }
    let n0 = initial.max(1);
    let mut heap = BinaryHeap::with_capacity(n0 * 2);
    let mut total = T::zero();
    let mut err_total = 0.0;
    for i in 0..n0 {
        let pa = a + (b - a) * i as f64 / n0 as f64;
        let pb = a + (b - a) * (i + 1) as f64 / n0 as f64;
        let (v, e) = gk15(&f, pa, pb);
        total = total + v;
        err_total += e;
        heap.push(Panel { a: pa, b: pb, value: v, error: e });
    }
    while err_total > abs_tol.max(rel_tol * total.magnitude()) {
        if heap.len() >= max_panels {
            return Err(Error::TolNotMet {
                estimate: err_total,
                tol: abs_tol.max(rel_tol * total.magnitude()),
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        err_total += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let mut value = T::zero();
    let mut error = 0.0;
    let panels = heap.len();
    for p in heap.into_vec() {
        value = value + p.value;
        error += p.error;
    }
    Ok(QuadResult { value, error, panels })
}

/// A fixed quadrature grid built from GK15 panels (or, for `uniform`, a
/// trapezoid grid). `coarse_weights` hold the embedded Gauss weights and are
/// used for error estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub coarse_weights: Vec<f64>,
    #[serde(default)]
    pub uniform: bool,
}

impl Grid {
    /// Composite GK15 grid with the given panel breakpoints.
    pub fn from_breaks(breaks: &[f64]) -> Result<Grid> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParam("grid breakpoints must be strictly increasing".into()));
        }
        let mut nodes = Vec::with_capacity(15 * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut coarse = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            let (x, wk, wg) = gk15_rule(w[0], w[1]);
            nodes.extend_from_slice(&x);
            weights.extend_from_slice(&wk);
            coarse.extend_from_slice(&wg);
        }
        Ok(Grid { nodes, weights, coarse_weights: coarse, uniform: false })
    }

    /// Composite GK15 grid with `panels` equal panels on [a, b].
    pub fn gk_panels(a: f64, b: f64, panels: usize) -> Result<Grid> {
        let p = panels.max(1);
        let breaks: Vec<f64> = (0..=p).map(|i| a + (b - a) * i as f64 / p as f64).collect();
        Grid::from_breaks(&breaks)
    }

    /// Uniform grid `x_k = x0 + k h`, k = 0..n, with trapezoid weights `h`.
    /// Suited to smooth integrands that are negligible at both ends.
    pub fn uniform(x0: f64, h: f64, n: usize) -> Result<Grid> {
        if !(h > 0.0) || n < 2 {
            return Err(Error::InvalidParam("uniform grid needs h > 0 and n >= 2".into()));
        }
        let nodes: Vec<f64> = (0..n).map(|k| x0 + h * k as f64).collect();
        let weights = vec![h; n];
        // Coarse rule: every other node with doubled weight.
        let coarse: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 2.0 * h } else { 0.0 }).collect();
        Ok(Grid { nodes, weights, coarse_weights: coarse, uniform: true })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> Option<f64> {
        if self.uniform && self.nodes.len() >= 2 {
            Some(self.nodes[1] - self.nodes[0])
        } else {
            None
        }
    }

    /// Quadrature of sampled values with an error estimate from the
    /// embedded coarse rule.
    pub fn integrate<T: QuadValue>(&self, values: &[T]) -> (T, f64) {
        let mut fine = T::zero();
        let mut coarse = T::zero();
        for ((v, w), c) in values.iter().zip(&self.weights).zip(&self.coarse_weights) {
            fine = fine + *v * *w;
            coarse = coarse + *v * *c;
        }
        let err = if self.uniform { (fine - coarse).magnitude() } else { self.panel_error(values) };
        (fine, err)
    }

    fn panel_error<T: QuadValue>(&self, values: &[T]) -> f64 {
        let mut err = 0.0;
        for p in 0..self.nodes.len() / 15 {
            let r = p * 15..(p + 1) * 15;
            let mut k = T::zero();
            let mut g = T::zero();
            for i in r {
                k = k + values[i] * self.weights[i];
                g = g + values[i] * self.coarse_weights[i];
            }
            let e = (k - g).magnitude();
            // The Gauss-7 discrepancy overstates the Kronrod error; the
            // usual QUADPACK scaling without the resasc factor.
            err += e.min((200.0 * e).powf(1.5));
        }
        err
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let (v, _) = gk15(&|x: f64| x.powi(20), -1.0, 1.0);
        assert!((v - 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peak() {
        let r = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1, 1e-12, 1e-12, 10_000).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn adaptive_complex() {
        let r = integrate(|x: f64| Complex64::new(0.0, 50.0 * x).exp(), 0.0, 1.0, 4, 1e-13, 1e-13, 1000).unwrap();
        let exact = (Complex64::new(0.0, 50.0).exp() - 1.0) / Complex64::new(0.0, 50.0);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-9, 1.0, 1, 1e-15, 0.0, 8);
        assert!(matches!(r, Err(Error::TolNotMet { .. })));
    }

    #[test]
    fn grid_integrates_gaussian() {
        let g = Grid::gk_panels(-8.0, 8.0, 16).unwrap();
        let vals: Vec<f64> = g.nodes.iter().map(|x| (-x * x).exp()).collect();
        let (v, e) = g.integrate(&vals);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!(e < 1e-10);
        let u = Grid::uniform(-8.0, 0.25, 65).unwrap();
        let vals: Vec<f64> = u.nodes.iter().map(|x| (-x * x).exp()).collect();
        assert!((u.integrate(&vals).0 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
