//! The uncoupled scalar system `x <- f(g(x; eps); eps)`.

use crate::error::{Error, Result};
use crate::quadrature::{simpson, QuadratureConfig};

/// A pair of nondecreasing update maps `f`, `g` together with their domains.
///
/// Implementors supply `f`, `g` and the domain bounds. Derivatives and
/// antiderivatives have numerical fallbacks and should be overridden when a
/// closed form exists.
pub trait SystemModel: Send + Sync {
    /// Short identifier used in reports.
    fn name(&self) -> String;

    /// Update map `f(y; eps)` on `[0, y_max(eps)]`.
    fn f(&self, y: f64, eps: f64) -> f64;

    /// Update map `g(x; eps)` on `[0, x_max(eps)]`.
    fn g(&self, x: f64, eps: f64) -> f64;

    /// `dg/dx`. The default is a central difference with step `max(1e-6, 1e-6 x)`,
    /// shifted to one side at the domain ends.
    fn g_prime(&self, x: f64, eps: f64) -> f64 {
        let h = (1e-6 * x).max(1e-6);
        let xm = self.x_max(eps);
        let lo = (x - h).max(0.0);
        let hi = (x + h).min(xm);
        (self.g(hi, eps) - self.g(lo, eps)) / (hi - lo)
    }

    /// Closed form of `F(y; eps) = int_0^y f(s; eps) ds`, if known.
    fn f_antiderivative(&self, _y: f64, _eps: f64) -> Option<f64> {
        None
    }

    /// Closed form of `G(x; eps) = int_0^x g(s; eps) ds`, if known.
    fn g_antiderivative(&self, _x: f64, _eps: f64) -> Option<f64> {
        None
    }

    /// Lower end of the parameter domain.
    fn eps_min(&self) -> f64 {
        0.0
    }

    /// Upper end of the parameter domain.
    fn eps_max(&self) -> f64;

    fn x_max(&self, eps: f64) -> f64;

    fn y_max(&self, eps: f64) -> f64 {
        self.g(self.x_max(eps), eps)
    }

    /// Points inside `(0, x_max)` where `g` changes scale quickly. Quadrature
    /// fallbacks split their range there.
    fn g_breakpoints(&self, _eps: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Same as [`g_breakpoints`](Self::g_breakpoints) for `f` on `(0, y_max)`.
    fn f_breakpoints(&self, _eps: f64) -> Vec<f64> {
        Vec::new()
    }
}

pub(crate) fn check_eps<S: SystemModel + ?Sized>(sys: &S, eps: f64) -> Result<()> {
    if !(eps >= sys.eps_min() && eps <= sys.eps_max()) {
        return Err(Error::Domain(format!(
            "parameter {eps} outside [{}, {}]",
            sys.eps_min(),
            sys.eps_max()
        )));
    }
    Ok(())
}

pub(crate) fn check_x<S: SystemModel + ?Sized>(sys: &S, x: f64, eps: f64) -> Result<()> {
    let xm = sys.x_max(eps);
    if !(x >= 0.0 && x <= xm * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("state {x} outside [0, {xm}]")));
    }
    Ok(())
}

fn piecewise<F: Fn(f64) -> f64>(f: F, upper: f64, breaks: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    let mut pts = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < upper));
    pts.push(upper);
    let pieces = (pts.len() - 1) as f64;
    let sub = QuadratureConfig {
        abs_tol: cfg.abs_tol / pieces,
        ..*cfg
    };
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += simpson(&f, w[0], w[1], &sub)?.value;
    }
    Ok(total)
}

/// `F(y; eps)` by quadrature, ignoring any closed form.
pub fn f_antiderivative_quadrature<S: SystemModel + ?Sized>(
    sys: &S,
    y: f64,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    piecewise(|s| sys.f(s, eps), y, &sys.f_breakpoints(eps), cfg)
}

/// `G(x; eps)` by quadrature, ignoring any closed form.
pub fn g_antiderivative_quadrature<S: SystemModel + ?Sized>(
    sys: &S,
    x: f64,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    piecewise(|s| sys.g(s, eps), x, &sys.g_breakpoints(eps), cfg)
}

/// `F(y; eps)`, closed form when available.
pub fn f_antiderivative<S: SystemModel + ?Sized>(sys: &S, y: f64, eps: f64, cfg: &QuadratureConfig) -> Result<f64> {
    match sys.f_antiderivative(y, eps) {
        Some(v) => Ok(v),
        None => f_antiderivative_quadrature(sys, y, eps, cfg),
    }
}

/// `G(x; eps)`, closed form when available.
pub fn g_antiderivative<S: SystemModel + ?Sized>(sys: &S, x: f64, eps: f64, cfg: &QuadratureConfig) -> Result<f64> {
    match sys.g_antiderivative(x, eps) {
        Some(v) => Ok(v),
        None => g_antiderivative_quadrature(sys, x, eps, cfg),
    }
}

/// Samples `n` points of `[0, x_max]` and checks that `f`, `g` are
/// nondecreasing in `x` (and in `eps` across `eps_grid`) and that
/// `f(g(x))` stays in `[0, x_max]`. Returns the first violation found.
pub fn check_monotone<S: SystemModel + ?Sized>(sys: &S, eps_grid: &[f64], n: usize) -> std::result::Result<(), String> {
    let slack = 1e-12;
    for &eps in eps_grid {
        let xm = sys.x_max(eps);
        let ym = sys.y_max(eps);
        let mut prev_g = f64::NEG_INFINITY;
        let mut prev_f = f64::NEG_INFINITY;
        for k in 0..=n {
            let x = xm * k as f64 / n as f64;
            let gx = sys.g(x, eps);
            if gx < prev_g - slack {
                return Err(format!("g decreases at x={x}, eps={eps}"));
            }
            prev_g = gx;
            let y = ym * k as f64 / n as f64;
            let fy = sys.f(y, eps);
            if fy < prev_f - slack * prev_f.abs().max(1.0) {
                return Err(format!("f decreases at y={y}, eps={eps}"));
            }
            prev_f = fy;
            let fg = sys.f(gx, eps);
            if fg < -slack || fg > xm * (1.0 + slack) {
                return Err(format!("f(g(x)) = {fg} leaves [0, {xm}] at x={x}"));
            }
        }
    }
    for w in eps_grid.windows(2) {
        let (e0, e1) = (w[0].min(w[1]), w[0].max(w[1]));
        let xm = sys.x_max(e0).min(sys.x_max(e1));
        for k in 0..=n {
            let x = xm * k as f64 / n as f64;
            if sys.g(x, e1) < sys.g(x, e0) - slack {
                return Err(format!("g decreases in eps at x={x}"));
            }
        }
        let ym = sys.y_max(e0).min(sys.y_max(e1));
        for k in 0..=n {
            let y = ym * k as f64 / n as f64;
            if sys.f(y, e1) < sys.f(y, e0) - slack {
                return Err(format!("f decreases in eps at y={y}"));
            }
        }
    }
    Ok(())
}
