use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::SystemModel;

/// Generalized LDPC ensemble: degree-2 variable nodes, length-`n` component
/// codes at the checks that fill in up to `e` erasures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GldpcParams {
    pub n: u32,
    pub e: u32,
}

impl Default for GldpcParams {
    fn default() -> Self {
        Self { n: 15, e: 3 }
    }
}

impl GldpcParams {
    pub fn new(n: u32, e: u32) -> Result<Self> {
        let p = Self { n, e };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::domain(format!("blocklength n={} must be at least 3", self.n)));
        }
        if self.e < 1 || self.e > self.n - 1 {
            return Err(Error::domain(format!("e={} must lie in [1, n-1]", self.e)));
        }
        Ok(())
    }
}

fn ln_choose(m: u32, k: u32) -> f64 {
    let k = k.min(m - k);
    (0..k).map(|j| ((m - j) as f64).ln() - ((j + 1) as f64).ln()).sum()
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            c += (sum - s) + t;
        } else {
            c += (t - s) + sum;
        }
        sum = s;
    }
    sum + c
}

/// Binomial probabilities `P(Bin(m, x) = i)` for `i` in `range`, by term
/// ratios from a log-space first term.
fn binomial_terms(m: u32, x: f64, range: std::ops::RangeInclusive<u32>) -> impl Iterator<Item = f64> {
    let (start, end) = range.into_inner();
    let lx = x.ln();
    let l1x = (-x).ln_1p();
    let a = if start == 0 { 0.0 } else { start as f64 * lx };
    let b = if start == m { 0.0 } else { (m - start) as f64 * l1x };
    let first = (ln_choose(m, start) + a + b).exp();
    let odds = x / (1.0 - x);
    (start..=end).scan(first, move |t, i| {
        let cur = *t;
        *t = cur * (m - i) as f64 / (i + 1) as f64 * odds;
        Some(cur)
    })
}

/// `g(x) = sum_{i=e}^{n-1} C(n-1, i) x^i (1-x)^(n-1-i)`: the probability that
/// a check cannot recover an edge because at least `e` of its other `n-1`
/// edges are erased.
pub fn gldpc_g(x: f64, params: &GldpcParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let m = params.n - 1;
    let e = params.e;
    // sum whichever tail is smaller
    if (e as f64) > m as f64 * x {
        compensated_sum(binomial_terms(m, x, e..=m)).min(1.0)
    } else {
        let lower = compensated_sum(binomial_terms(m, x, 0..=e - 1));
        (1.0 - lower).max(0.0)
    }
}

/// `g'(x) = (n-1) C(n-2, e-1) x^(e-1) (1-x)^(n-1-e)`.
pub fn gldpc_g_prime(x: f64, params: &GldpcParams) -> f64 {
    let n = params.n;
    let e = params.e;
    let a = e - 1;
    let b = n - 1 - e;
    if x <= 0.0 {
        return if a == 0 { (n - 1) as f64 } else { 0.0 };
    }
    if x >= 1.0 {
        return if b == 0 { (n - 1) as f64 } else { 0.0 };
    }
    let ln = ((n - 1) as f64).ln() + ln_choose(n - 2, a) + a as f64 * x.ln() + b as f64 * (-x).ln_1p();
    ln.exp()
}

/// `U(x) = (e/n) g - x(1-x) g' / n - (eps/2) g^2`.
pub fn gldpc_potential(x: f64, params: &GldpcParams, eps: f64) -> f64 {
    let n = params.n as f64;
    let e = params.e as f64;
    let g = gldpc_g(x, params);
    let gp = gldpc_g_prime(x, params);
    e / n * g - x * (1.0 - x) / n * gp - 0.5 * eps * g * g
}

/// `f(y) = eps y`, `g` = [`gldpc_g`]; `eps` is the erasure probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GldpcSystem {
    pub params: GldpcParams,
}

impl GldpcSystem {
    pub fn new(params: GldpcParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl SystemModel for GldpcSystem {
    fn name(&self) -> String {
        format!("gldpc(n={}, e={})", self.params.n, self.params.e)
    }

    fn f(&self, y: f64, eps: f64) -> f64 {
        eps * y
    }

    fn g(&self, x: f64, _eps: f64) -> f64 {
        gldpc_g(x, &self.params)
    }

    fn g_prime(&self, x: f64, _eps: f64) -> f64 {
        gldpc_g_prime(x, &self.params)
    }

    fn f_antiderivative(&self, y: f64, eps: f64) -> Option<f64> {
        Some(0.5 * eps * y * y)
    }

    fn eps_max(&self) -> f64 {
        1.0
    }

    fn x_max(&self, _eps: f64) -> f64 {
        1.0
    }

    fn y_max(&self, _eps: f64) -> f64 {
        1.0
    }
}
