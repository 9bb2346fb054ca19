//! Uncoupled density evolution: iteration, fixed points, the single
//! potential and the two thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::system::{check_eps, check_x, f_antiderivative, g_antiderivative, SystemModel};

/// Default convergence tolerance for fixed-point iteration.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Default iteration budget for fixed-point iteration.
pub const MAX_ITER: usize = 1_000_000;
/// Decrement below which an iterate that is still far from `x_good` is
/// declared stuck when probing the algorithmic threshold.
pub const STUCK_DECREMENT: f64 = 1e-14;
const UNSTABLE_BISECTION_STEPS: usize = 200;

/// One step of the uncoupled recursion, `f(g(x; eps); eps)`.
pub fn de_step<S: SystemModel + ?Sized>(sys: &S, x: f64, eps: f64) -> Result<f64> {
    check_eps(sys, eps)?;
    check_x(sys, x, eps)?;
    Ok(step_unchecked(sys, x, eps))
}

#[inline]
pub(crate) fn step_unchecked<S: SystemModel + ?Sized>(sys: &S, x: f64, eps: f64) -> f64 {
    let v = sys.f(sys.g(x, eps), eps);
    let xm = sys.x_max(eps);
    // clamp only floating-point overshoot
    if v < 0.0 && v > -1e-12 {
        0.0
    } else if v > xm && v < xm + 1e-12 {
        xm
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncoupledRun {
    pub x_limit: f64,
    pub iterations: usize,
    /// Iterates `x^(0), x^(1), ...` up to and including `x_limit`.
    pub trajectory: Vec<f64>,
}

/// Iterates [`de_step`] from `x0` until two successive iterates differ by
/// less than `tol`.
pub fn run_uncoupled<S: SystemModel + ?Sized>(
    sys: &S,
    eps: f64,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<UncoupledRun> {
    check_eps(sys, eps)?;
    check_x(sys, x0, eps)?;
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let mut trajectory = vec![x0];
    let mut x = x0;
    for it in 1..=max_iter {
        let next = step_unchecked(sys, x, eps);
        trajectory.push(next);
        if (next - x).abs() < tol {
            return Ok(UncoupledRun {
                x_limit: next,
                iterations: it,
                trajectory,
            });
        }
        x = next;
    }
    let residual = (step_unchecked(sys, x, eps) - x).abs();
    Err(Error::Convergence {
        last: x,
        residual,
        iterations: max_iter,
    })
}

/// Same iteration as [`run_uncoupled`] without recording the trajectory.
pub(crate) fn iterate<S: SystemModel + ?Sized>(sys: &S, eps: f64, x0: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut x = x0;
    for _ in 0..max_iter {
        let next = step_unchecked(sys, x, eps);
        if (next - x).abs() < tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence {
        last: x,
        residual: (step_unchecked(sys, x, eps) - x).abs(),
        iterations: max_iter,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet {
    pub eps: f64,
    pub x_good: f64,
    pub x_unst: Option<f64>,
    pub x_bad: Option<f64>,
}

impl FixedPointSet {
    /// `(x_good, x_bad)` when both stable points exist.
    pub fn stable_pair(&self) -> Option<(f64, f64)> {
        self.x_bad.map(|b| (self.x_good, b))
    }
}

/// Locates the stable fixed points by iterating from `0` and `x_max`, and
/// the unstable one between them by bisection.
pub fn find_fixed_points<S: SystemModel + ?Sized>(sys: &S, eps: f64, tol: f64) -> Result<FixedPointSet> {
    check_eps(sys, eps)?;
    let x_good = iterate(sys, eps, 0.0, tol, MAX_ITER)?;
    let from_top = iterate(sys, eps, sys.x_max(eps), tol, MAX_ITER)?;
    if (from_top - x_good).abs() <= 10.0 * tol {
        return Ok(FixedPointSet {
            eps,
            x_good,
            x_unst: None,
            x_bad: None,
        });
    }
    let x_unst = unstable_between(sys, eps, x_good, from_top)?;
    Ok(FixedPointSet {
        eps,
        x_good,
        x_unst: Some(x_unst),
        x_bad: Some(from_top),
    })
}

fn unstable_between<S: SystemModel + ?Sized>(sys: &S, eps: f64, lo: f64, hi: f64) -> Result<f64> {
    let h = |x: f64| sys.f(sys.g(x, eps), eps) - x;
    // h < 0 just above the attracting x_good and h > 0 just below x_bad;
    // scan a grid (dense near both ends) for the first - to + change.
    let n = 400;
    let mut prev_x = lo;
    let mut prev_h = f64::NAN;
    let mut bracket = None;
    for k in 1..n {
        let u = k as f64 / n as f64;
        // geometric spacing near lo, linear in the bulk
        let s = 0.5 * (u + u.powi(6));
        let x = lo + (hi - lo) * s;
        let hx = h(x);
        if prev_h < 0.0 && hx > 0.0 {
            bracket = Some((prev_x, x));
            break;
        }
        if hx != 0.0 {
            prev_x = x;
            prev_h = hx;
        } else if prev_h < 0.0 {
            return Ok(x);
        }
    }
    // near a saddle-node the positive window below x_bad is narrower than the
    // grid; walk down from hi geometrically
    let bracket = bracket.or_else(|| {
        let a = (1..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).find(|&x| h(x) < 0.0)?;
        let mut d = (hi * f64::EPSILON).max(f64::MIN_POSITIVE);
        while d < hi - a {
            if h(hi - d) > 0.0 {
                return Some((a, hi - d));
            }
            d *= 2.0;
        }
        None
    });
    let (mut a, mut b) = bracket.ok_or_else(|| {
        Error::Structure(format!(
            "no sign change of f(g(x))-x between {lo} and {hi} at eps={eps}"
        ))
    })?;
    for _ in 0..UNSTABLE_BISECTION_STEPS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if h(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `U_s(x) = x g(x) - G(x) - F(g(x))`.
pub fn single_potential<S: SystemModel + ?Sized>(sys: &S, x: f64, eps: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_x(sys, x, eps)?;
    let gx = sys.g(x, eps);
    let big_g = g_antiderivative(sys, x, eps, cfg)?;
    let big_f = f_antiderivative(sys, gx, eps, cfg)?;
    Ok(x * gx - big_g - big_f)
}

/// `U_s` through quadrature of `f` and `g` only, ignoring closed forms.
pub fn single_potential_quadrature<S: SystemModel + ?Sized>(
    sys: &S,
    x: f64,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_x(sys, x, eps)?;
    let gx = sys.g(x, eps);
    let big_g = crate::system::g_antiderivative_quadrature(sys, x, eps, cfg)?;
    let big_f = crate::system::f_antiderivative_quadrature(sys, gx, eps, cfg)?;
    Ok(x * gx - big_g - big_f)
}

/// Analytic derivative of the single potential, `g'(x) (x - f(g(x)))`.
pub fn single_potential_slope<S: SystemModel + ?Sized>(sys: &S, x: f64, eps: f64) -> f64 {
    sys.g_prime(x, eps) * (x - sys.f(sys.g(x, eps), eps))
}

/// `U_s(x_bad) - U_s(x_good)` for already located fixed points.
pub fn energy_gap_at<S: SystemModel + ?Sized>(sys: &S, fp: &FixedPointSet, cfg: &QuadratureConfig) -> Result<f64> {
    let (good, bad) = fp
        .stable_pair()
        .ok_or_else(|| Error::Structure(format!("only one stable fixed point at eps={}", fp.eps)))?;
    Ok(single_potential(sys, bad, fp.eps, cfg)? - single_potential(sys, good, fp.eps, cfg)?)
}

/// `U_s(x_bad) - U_s(x_good)`; an error when `x_bad` does not exist.
pub fn energy_gap<S: SystemModel + ?Sized>(sys: &S, eps: f64) -> Result<f64> {
    let fp = find_fixed_points(sys, eps, FIXED_POINT_TOL)?;
    energy_gap_at(sys, &fp, &QuadratureConfig::default())
}

/// Whether uncoupled DE started at `x_max` reaches `x_good`.
pub fn reaches_good<S: SystemModel + ?Sized>(sys: &S, eps: f64, tol: f64) -> Result<bool> {
    let x_good = iterate(sys, eps, 0.0, tol, MAX_ITER)?;
    let target = x_good + 10.0 * tol;
    let mut x = sys.x_max(eps);
    for _ in 0..MAX_ITER {
        let next = step_unchecked(sys, x, eps);
        let dec = x - next;
        if (next - x).abs() < tol {
            return Ok(next <= target);
        }
        if dec.abs() < STUCK_DECREMENT && next > target {
            return Ok(false);
        }
        x = next;
    }
    Ok(x <= target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    /// Algorithmic threshold.
    pub eps_s: f64,
    /// Potential threshold.
    pub eps_c: f64,
    pub eps_s_bracket: f64,
    pub eps_c_bracket: f64,
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
    fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn algorithmic_bracket<S: SystemModel + ?Sized>(sys: &S, tol: f64) -> Result<Bracket> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let mut b = Bracket {
        lo: sys.eps_min(),
        hi: sys.eps_max(),
    };
    let p_lo = reaches_good(sys, b.lo, FIXED_POINT_TOL)?;
    let p_hi = reaches_good(sys, b.hi, FIXED_POINT_TOL)?;
    if p_lo == p_hi {
        return Err(Error::NoThreshold(format!(
            "DE from x_max {} reach x_good across the whole parameter range",
            if p_lo { "does" } else { "does not" }
        )));
    }
    if !p_lo {
        return Err(Error::NoThreshold("predicate is inverted on the parameter range".into()));
    }
    while b.width() > tol {
        let m = b.mid();
        if reaches_good(sys, m, FIXED_POINT_TOL)? {
            b.lo = m;
        } else {
            b.hi = m;
        }
    }
    Ok(b)
}

/// `eps_s = sup { eps : DE from x_max reaches x_good }`, by bisection.
pub fn algorithmic_threshold<S: SystemModel + ?Sized>(sys: &S, tol: f64) -> Result<f64> {
    Ok(algorithmic_bracket(sys, tol)?.mid())
}

fn potential_bracket<S: SystemModel + ?Sized>(sys: &S, start: f64, tol: f64) -> Result<Bracket> {
    let cfg = QuadratureConfig::default();
    let gap = |eps: f64| -> Result<Option<f64>> {
        let fp = match find_fixed_points(sys, eps, FIXED_POINT_TOL) {
            Ok(fp) => fp,
            // unresolvable unstable point right at the saddle-node
            Err(Error::Structure(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        match fp.stable_pair() {
            Some(_) => Ok(Some(energy_gap_at(sys, &fp, &cfg)?)),
            None => Ok(None),
        }
    };
    let mut b = Bracket {
        lo: start,
        hi: sys.eps_max(),
    };
    // an undefined gap (single stable point) counts as the positive side
    let positive = |g: Option<f64>| g.is_none_or(|v| v > 0.0);
    if !positive(gap(b.lo)?) {
        return Err(Error::NoThreshold(format!("energy gap already nonpositive at {}", b.lo)));
    }
    if positive(gap(b.hi)?) {
        return Err(Error::NoThreshold(format!(
            "energy gap stays positive up to {}",
            b.hi
        )));
    }
    while b.width() > tol {
        let m = b.mid();
        if positive(gap(m)?) {
            b.lo = m;
        } else {
            b.hi = m;
        }
    }
    Ok(b)
}

/// Parameter at which `U_s(x_good) = U_s(x_bad)`, by bisection on the sign
/// of the energy gap starting from the algorithmic threshold.
pub fn potential_threshold<S: SystemModel + ?Sized>(sys: &S, tol: f64) -> Result<f64> {
    let s = algorithmic_bracket(sys, tol)?;
    Ok(potential_bracket(sys, s.hi, tol)?.mid())
}

/// Both thresholds, sharing one algorithmic bisection.
pub fn thresholds<S: SystemModel + ?Sized>(sys: &S, tol: f64) -> Result<ThresholdPair> {
    let s = algorithmic_bracket(sys, tol)?;
    let c = potential_bracket(sys, s.hi, tol)?;
    Ok(ThresholdPair {
        eps_s: s.mid(),
        eps_c: c.mid(),
        eps_s_bracket: s.width(),
        eps_c_bracket: c.width(),
    })
}

/// Qualitative shape of `U_s` on `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PotentialShape {
    UniqueMinimum,
    /// One minimum, but `x - f(g(x))` nearly touches zero away from it.
    InflectionOnset { margin: f64 },
    TwoMinimaPositiveGap { gap: f64 },
    ZeroGap { gap: f64 },
    TwoMinimaNegativeGap { gap: f64 },
    /// Any other count of minima.
    Other { minima: usize, maxima: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeConfig {
    /// Log-spaced sample count on `[x_max * 1e-12, x_max]`.
    pub points: usize,
    /// `|gap|` below this fraction of the potential's range counts as zero.
    pub gap_tol: f64,
    /// Relative dip of `x - f(g(x))` below which a single minimum is an
    /// inflection onset.
    pub inflection_margin: f64,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            points: 4000,
            gap_tol: 1e-3,
            inflection_margin: 0.05,
        }
    }
}

/// Classifies `U_s` by counting the sign changes of `x - f(g(x))`, which
/// has the sign of `U_s'` wherever `g' > 0`.
pub fn potential_shape<S: SystemModel + ?Sized>(sys: &S, eps: f64, cfg: &ShapeConfig) -> Result<PotentialShape> {
    check_eps(sys, eps)?;
    let xm = sys.x_max(eps);
    let n = cfg.points.max(16);
    let xs: Vec<f64> = (0..n)
        .map(|k| xm * 10f64.powf(-12.0 * (1.0 - k as f64 / (n - 1) as f64)))
        .collect();
    let r: Vec<f64> = xs.iter().map(|&x| (x - sys.f(sys.g(x, eps), eps)) / x).collect();
    let mut minima = usize::from(r[0] > 0.0);
    let mut maxima = 0;
    for w in r.windows(2) {
        if w[0] <= 0.0 && w[1] > 0.0 {
            minima += 1;
        } else if w[0] > 0.0 && w[1] <= 0.0 {
            maxima += 1;
        }
    }
    match (minima, maxima) {
        (1, 0) => {
            // interior dips of the relative slope past the minimum
            let margin = r
                .windows(3)
                .filter(|w| w[1] > 0.0 && w[1] < w[0] && w[1] <= w[2])
                .map(|w| w[1])
                .fold(f64::INFINITY, f64::min);
            if margin < cfg.inflection_margin {
                Ok(PotentialShape::InflectionOnset { margin })
            } else {
                Ok(PotentialShape::UniqueMinimum)
            }
        }
        (2, 1) => {
            let qc = QuadratureConfig::default();
            let fp = find_fixed_points(sys, eps, FIXED_POINT_TOL)?;
            let gap = energy_gap_at(sys, &fp, &qc)?;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &x in xs.iter().step_by((n / 200).max(1)) {
                let u = single_potential(sys, x, eps, &qc)?;
                lo = lo.min(u);
                hi = hi.max(u);
            }
            if gap.abs() <= cfg.gap_tol * (hi - lo) {
                Ok(PotentialShape::ZeroGap { gap })
            } else if gap > 0.0 {
                Ok(PotentialShape::TwoMinimaPositiveGap { gap })
            } else {
                Ok(PotentialShape::TwoMinimaNegativeGap { gap })
            }
        }
        (minima, maxima) => Ok(PotentialShape::Other { minima, maxima }),
    }
}
