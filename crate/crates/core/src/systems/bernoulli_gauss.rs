//! MMSE and mutual information of the scalar Gaussian channel
//! `Y = sqrt(s) S + Z` under a Bernoulli-Gaussian prior on `S`.
//!
//! With `r(y)` the likelihood ratio of the slab and spike components of `Y`,
//! both quantities reduce to one-dimensional Gaussian integrals of smooth
//! logistic/log-sum-exp expressions, which keeps them free of cancellation
//! at large `s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_adaptive, Estimate, GaussLegendre};

/// `(1 - rho) delta_0 + rho N(0, slab_var)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliGauss {
    pub rho: f64,
    pub slab_var: f64,
}

impl BernoulliGauss {
    /// Unit-variance slab, so `E[S^2] = rho`.
    pub fn unit_slab(rho: f64) -> Self {
        Self { rho, slab_var: 1.0 }
    }

    /// Slab variance `1/rho`, so `E[S^2] = 1`.
    pub fn unit_power(rho: f64) -> Self {
        Self { rho, slab_var: 1.0 / rho }
    }

    pub fn second_moment(&self) -> f64 {
        self.rho * self.slab_var
    }
}

const U_MAX: f64 = 14.0;

fn phi(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Quadrature engine for the Gaussian-channel integrals.
#[derive(Debug, Clone)]
pub struct ScalarChannelOracle {
    rule: GaussLegendre,
    initial_panels: usize,
    abs_tol: f64,
    max_depth: u32,
}

impl Default for ScalarChannelOracle {
    fn default() -> Self {
        Self::new(16, 8, 1e-14)
    }
}

impl ScalarChannelOracle {
    /// `nodes` Gauss-Legendre points per panel, `initial_panels` panels per
    /// breakpoint interval before refinement.
    pub fn new(nodes: usize, initial_panels: usize, abs_tol: f64) -> Self {
        Self {
            rule: GaussLegendre::new(nodes),
            initial_panels,
            abs_tol,
            max_depth: 40,
        }
    }

    /// Nodes used before any adaptive refinement on the widest layout.
    pub fn node_count(&self) -> usize {
        self.rule.len() * self.initial_panels * 2
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    /// Breakpoints on `[0, U_MAX]` around `center`, the point where a
    /// logistic factor with slope `slope` (in units of its argument per unit
    /// `u`) switches.
    fn breaks(center: f64, slope: f64) -> Vec<f64> {
        let mut b = vec![0.0];
        if center > 0.0 && center < U_MAX {
            let w = if slope > 0.0 { (1.0 / slope).min(center) } else { center };
            for k in [-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0] {
                let p = center + k * w;
                if p > 0.0 && p < U_MAX {
                    b.push(p);
                }
            }
        }
        b.push(U_MAX);
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        b.dedup();
        b
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: &F, breaks: &[f64]) -> Result<Estimate> {
        gauss_legendre_adaptive(&self.rule, f, breaks, self.initial_panels, self.abs_tol, self.max_depth)
    }

    /// MMSE for a unit-variance slab.
    fn mmse_unit(&self, rho: f64, s: f64) -> Result<Estimate> {
        if s == 0.0 {
            return Ok(Estimate { value: rho, error: 0.0 });
        }
        // y = sqrt(1+s) u; P(spike | y) = logistic(-(c + s u^2 / 2))
        let c = (rho / (1.0 - rho)).ln() - 0.5 * s.ln_1p();
        let center = if c < 0.0 { (-2.0 * c / s).sqrt() } else { 0.0 };
        let breaks = Self::breaks(center, s * center);
        let integrand = |u: f64| u * u * phi(u) * logistic(-(c + 0.5 * s * u * u));
        let est = self.integrate(&integrand, &breaks)?;
        let scale = rho * s / (1.0 + s);
        Ok(Estimate {
            value: rho / (1.0 + s) + scale * 2.0 * est.value,
            error: scale * 2.0 * est.error,
        })
    }

    /// Mutual information in nats for a unit-variance slab.
    fn mutual_info_unit(&self, rho: f64, s: f64) -> Result<Estimate> {
        if s == 0.0 {
            return Ok(Estimate { value: 0.0, error: 0.0 });
        }
        let half_log = 0.5 * s.ln_1p();
        let ln_rho = rho.ln();
        let ln_1m = (-rho).ln_1p();
        // spike part, y on the unit scale
        let a = s / (2.0 * (1.0 + s));
        let y_center2 = (ln_1m - ln_rho + half_log) / a;
        let y_center = if y_center2 > 0.0 { y_center2.sqrt() } else { 0.0 };
        let spike = |y: f64| phi(y) * log_add_exp(ln_1m, ln_rho - half_log + a * y * y);
        let e1 = self.integrate(&spike, &Self::breaks(y_center, 2.0 * a * y_center))?;
        // slab part, y = sqrt(1+s) u
        let u_center2 = 2.0 * (ln_1m - ln_rho + half_log) / s;
        let u_center = if u_center2 > 0.0 { u_center2.sqrt() } else { 0.0 };
        let slab = |u: f64| phi(u) * log_add_exp(ln_rho, ln_1m + half_log - 0.5 * s * u * u);
        let e2 = self.integrate(&slab, &Self::breaks(u_center, s * u_center))?;
        Ok(Estimate {
            value: -(1.0 - rho) * 2.0 * e1.value + rho * (half_log - 2.0 * e2.value),
            error: 2.0 * ((1.0 - rho) * e1.error + rho * e2.error),
        })
    }

    /// `mmse(s) = E[(S - E[S | Y])^2]`.
    pub fn mmse(&self, prior: &BernoulliGauss, s: f64) -> Result<Estimate> {
        check_args(prior, s)?;
        let e = self.mmse_unit(prior.rho, s * prior.slab_var)?;
        Ok(Estimate {
            value: e.value * prior.slab_var,
            error: e.error * prior.slab_var,
        })
    }

    /// `I(S; Y)` in nats.
    pub fn mutual_info(&self, prior: &BernoulliGauss, s: f64) -> Result<Estimate> {
        check_args(prior, s)?;
        self.mutual_info_unit(prior.rho, s * prior.slab_var)
    }
}

fn check_args(prior: &BernoulliGauss, s: f64) -> Result<()> {
    if !(prior.rho > 0.0 && prior.rho < 1.0) {
        return Err(Error::domain(format!("sparsity {} outside (0, 1)", prior.rho)));
    }
    if !(prior.slab_var > 0.0) {
        return Err(Error::domain("slab variance must be positive"));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("snr {s} must be finite and nonnegative")));
    }
    Ok(())
}

/// Monotone cubic (Fritsch-Carlson) interpolant of `ln mmse` against `ln s`
/// on a uniform grid. Arguments outside the grid fall back to direct
/// quadrature.
#[derive(Debug, Clone)]
pub struct MmseCache {
    prior: BernoulliGauss,
    oracle: ScalarChannelOracle,
    ln_lo: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MmseCache {
    /// Grid with `per_unit` points per unit of `ln s` spanning `[s_lo, s_hi]`.
    pub fn new(prior: BernoulliGauss, oracle: ScalarChannelOracle, s_lo: f64, s_hi: f64, per_unit: usize) -> Result<Self> {
        if !(s_lo > 0.0 && s_hi > s_lo) {
            return Err(Error::domain("cache range must satisfy 0 < s_lo < s_hi"));
        }
        let ln_lo = s_lo.ln();
        let ln_hi = s_hi.ln();
        let n = (((ln_hi - ln_lo) * per_unit as f64).ceil() as usize).max(4) + 1;
        let step = (ln_hi - ln_lo) / (n - 1) as f64;
        let values = (0..n)
            .map(|k| {
                let s = if k + 1 == n { s_hi } else { (ln_lo + step * k as f64).exp() };
                oracle.mmse(&prior, s).map(|e| e.value.ln())
            })
            .collect::<Result<Vec<_>>>()?;
        let slopes = pchip_slopes(&values, step);
        Ok(Self {
            prior,
            oracle,
            ln_lo,
            step,
            values,
            slopes,
        })
    }

    pub fn prior(&self) -> &BernoulliGauss {
        &self.prior
    }

    pub fn oracle(&self) -> &ScalarChannelOracle {
        &self.oracle
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cached `mmse(s)`.
    pub fn mmse(&self, s: f64) -> f64 {
        let t = (s.ln() - self.ln_lo) / self.step;
        let last = self.values.len() - 1;
        if !(t >= 0.0 && t <= last as f64) {
            return self.direct(s);
        }
        let k = (t.floor() as usize).min(last - 1);
        let u = t - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.slopes[k] * self.step, self.slopes[k + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        (h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1).exp()
    }

    /// Uncached `mmse(s)`; NaN when quadrature fails.
    pub fn direct(&self, s: f64) -> f64 {
        self.oracle.mmse(&self.prior, s.max(0.0)).map(|e| e.value).unwrap_or(f64::NAN)
    }
}

fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        d[k] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
    }
    let end = |d0: f64, d1: f64| {
        let v = 1.5 * d0 - 0.5 * d1;
        if v * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && v.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            v
        }
    };
    d[0] = end(delta[0], delta.get(1).copied().unwrap_or(delta[0]));
    d[n - 1] = end(delta[n - 2], if n >= 3 { delta[n - 3] } else { delta[n - 2] });
    d
}
