//! Numerical integration on bounded intervals.
//!
//! Two families are provided: a composite adaptive Simpson rule used for the
//! antiderivative fallbacks of a [`SystemModel`](crate::SystemModel), and a
//! panelled adaptive Gauss-Legendre rule used by the Gaussian-channel
//! oracles where integrands have several length scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings for the composite adaptive Simpson rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Number of equal panels the interval is split into before refinement.
    pub panels: usize,
    /// Absolute error target for the whole interval.
    pub abs_tol: f64,
    /// Maximum bisection depth inside a panel.
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 16,
            abs_tol: 1e-10,
            max_depth: 30,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::domain("quadrature tolerance must be positive"));
        }
        if self.panels < 16 {
            return Err(Error::domain("quadrature needs at least 16 panels"));
        }
        Ok(())
    }
}

/// An integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Simpson<'a, F> {
    f: &'a F,
    max_depth: u32,
    err: f64,
    exhausted: bool,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || depth >= self.max_depth || h <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            if delta.abs() > 15.0 * tol {
                self.exhausted = true;
            }
            self.err += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Composite adaptive Simpson integration of `f` over `[a, b]`.
///
/// Fails with [`Error::Accuracy`] when some panel exhausts its depth budget
/// and the accumulated error bound exceeds the tolerance.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let panels = cfg.panels.max(1);
    let width = (b - a) / panels as f64;
    let tol = cfg.abs_tol / panels as f64;
    let mut state = Simpson {
        f: &f,
        max_depth: cfg.max_depth,
        err: 0.0,
        exhausted: false,
    };
    let mut total = 0.0;
    let mut lo = a;
    let mut flo = f(a);
    for p in 0..panels {
        let hi = if p + 1 == panels { b } else { a + width * (p + 1) as f64 };
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        let fhi = f(hi);
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += state.refine(lo, hi, flo, fmid, fhi, whole, tol, 0);
        lo = hi;
        flo = fhi;
    }
    if state.exhausted && state.err > cfg.abs_tol {
        return Err(Error::Accuracy {
            what: "adaptive Simpson",
            estimate: total,
            error: state.err,
        });
    }
    Ok(Estimate {
        value: total,
        error: state.err,
    })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes an `n`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Adaptive panelled Gauss-Legendre integration.
///
/// `breaks` must be sorted; each interval between consecutive breakpoints is
/// split into `initial` equal panels and each panel is bisected while the
/// one-panel and two-half-panel estimates disagree by more than its share of
/// `abs_tol`.
pub fn gauss_legendre_adaptive<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: &F,
    breaks: &[f64],
    initial: usize,
    abs_tol: f64,
    max_depth: u32,
) -> Result<Estimate> {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut failed = false;
    let intervals = breaks.windows(2).filter(|w| w[1] > w[0]).count().max(1);
    let share = abs_tol / (intervals * initial.max(1)) as f64;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let width = (b - a) / initial.max(1) as f64;
        for p in 0..initial.max(1) {
            let lo = a + width * p as f64;
            let hi = if p + 1 == initial.max(1) { b } else { lo + width };
            let whole = rule.integrate(f, lo, hi);
            let (v, e, ok) = gl_refine(rule, f, lo, hi, whole, share, max_depth);
            value += v;
            error += e;
            failed |= !ok;
        }
    }
    if failed && error > abs_tol {
        return Err(Error::Accuracy {
            what: "adaptive Gauss-Legendre",
            estimate: value,
            error,
        });
    }
    Ok(Estimate { value, error })
}

fn gl_refine<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64, bool) {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    let diff = (left + right - whole).abs();
    if diff <= tol || depth == 0 {
        return (left + right, diff, diff <= tol);
    }
    let (lv, le, lok) = gl_refine(rule, f, a, m, left, 0.5 * tol, depth - 1);
    let (rv, re, rok) = gl_refine(rule, f, m, b, right, 0.5 * tol, depth - 1);
    (lv + rv, le + re, lok && rok)
}
