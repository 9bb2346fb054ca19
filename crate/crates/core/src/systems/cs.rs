//! State evolution of AMP for noisy compressive sensing.
//!
//! The generic parameter is `eps = 1/delta` with `delta` the measurement
//! ratio, so that a larger parameter is harder as for the codes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::SystemModel;

use super::bernoulli_gauss::{BernoulliGauss, MmseCache, ScalarChannelOracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsParams {
    /// Per-component signal-to-noise ratio; the noise variance is `1/snr`.
    pub snr: f64,
    /// Fraction of nonzero signal components.
    pub rho: f64,
    /// Scale the Gaussian component to variance `1/rho` so that `E[S^2] = 1`.
    /// When false the component has unit variance and `E[S^2] = rho`.
    #[serde(default)]
    pub normalize_signal_power: bool,
    /// Smallest measurement ratio in the parameter domain. Below about 0.13
    /// (snr 1e5, rho 0.1) the low-error fixed point no longer exists.
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
}

fn default_delta_min() -> f64 {
    0.14
}

impl Default for CsParams {
    fn default() -> Self {
        Self {
            snr: 1e5,
            rho: 0.1,
            normalize_signal_power: false,
            delta_min: default_delta_min(),
        }
    }
}

impl CsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(Error::domain(format!("snr {} must be positive", self.snr)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::domain(format!("rho {} outside (0, 1)", self.rho)));
        }
        if !(self.delta_min > 0.0 && self.delta_min < 1.0) {
            return Err(Error::domain(format!("delta_min {} outside (0, 1)", self.delta_min)));
        }
        Ok(())
    }

    pub fn prior(&self) -> BernoulliGauss {
        if self.normalize_signal_power {
            BernoulliGauss::unit_power(self.rho)
        } else {
            BernoulliGauss::unit_slab(self.rho)
        }
    }
}

/// Converts a measurement ratio to the generic parameter.
pub fn eps_from_delta(delta: f64) -> f64 {
    1.0 / delta
}

pub fn delta_from_eps(eps: f64) -> f64 {
    1.0 / eps
}

/// `f(y) = mmse(snr - y)`, `g(x) = snr - 1/(1/snr + eps x)`.
#[derive(Debug, Clone)]
pub struct CsSystem {
    params: CsParams,
    cache: MmseCache,
    mi_snr: f64,
}

/// Cache density in points per unit of `ln s`.
const CACHE_PER_UNIT: usize = 256;

impl CsSystem {
    /// Builds the system and fills the mmse cache over every argument a run
    /// inside the parameter domain can request.
    pub fn new(params: CsParams) -> Result<Self> {
        Self::with_oracle(params, ScalarChannelOracle::default())
    }

    pub fn with_oracle(params: CsParams, oracle: ScalarChannelOracle) -> Result<Self> {
        params.validate()?;
        let prior = params.prior();
        let x_max = prior.second_moment();
        let eps_max = 1.0 / params.delta_min;
        let s_lo = 0.5 / (1.0 / params.snr + eps_max * x_max);
        let mi_snr = oracle.mutual_info(&prior, params.snr)?.value;
        let cache = MmseCache::new(prior, oracle, s_lo, params.snr, CACHE_PER_UNIT)?;
        Ok(Self { params, cache, mi_snr })
    }

    pub fn params(&self) -> &CsParams {
        &self.params
    }

    pub fn oracle(&self) -> &ScalarChannelOracle {
        self.cache.oracle()
    }

    pub fn prior(&self) -> &BernoulliGauss {
        self.cache.prior()
    }

    /// Cached mmse of the scalar channel at signal-to-noise ratio `s`.
    pub fn mmse(&self, s: f64) -> f64 {
        self.cache.mmse(s)
    }

    /// Mutual information of the scalar channel in nats.
    pub fn mutual_info(&self, s: f64) -> f64 {
        if s == self.params.snr {
            return self.mi_snr;
        }
        self.oracle()
            .mutual_info(self.prior(), s)
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    }

    /// Effective channel quality seen by the denoiser, `1/(1/snr + eps x)`.
    pub fn effective_snr(&self, x: f64, eps: f64) -> f64 {
        1.0 / (1.0 / self.params.snr + eps * x)
    }
}

impl SystemModel for CsSystem {
    fn name(&self) -> String {
        format!(
            "cs(snr={}, rho={}{})",
            self.params.snr,
            self.params.rho,
            if self.params.normalize_signal_power { ", unit power" } else { "" }
        )
    }

    fn f(&self, y: f64, _eps: f64) -> f64 {
        self.cache.mmse(self.params.snr - y)
    }

    fn g(&self, x: f64, eps: f64) -> f64 {
        self.params.snr - self.effective_snr(x, eps)
    }

    fn g_prime(&self, x: f64, eps: f64) -> f64 {
        let q = self.effective_snr(x, eps);
        eps * q * q
    }

    /// `F(y) = 2 [I(snr) - I(snr - y)]` by the I-MMSE relation.
    fn f_antiderivative(&self, y: f64, _eps: f64) -> Option<f64> {
        Some(2.0 * (self.mi_snr - self.mutual_info(self.params.snr - y)))
    }

    /// `G(x) = snr x - ln(1 + eps snr x) / eps`.
    fn g_antiderivative(&self, x: f64, eps: f64) -> Option<f64> {
        let snr = self.params.snr;
        Some(snr * x - (eps * snr * x).ln_1p() / eps)
    }

    fn eps_min(&self) -> f64 {
        1.0
    }

    fn eps_max(&self) -> f64 {
        1.0 / self.params.delta_min
    }

    fn x_max(&self, _eps: f64) -> f64 {
        self.prior().second_moment()
    }

    fn g_breakpoints(&self, eps: f64) -> Vec<f64> {
        // g bends where eps x ~ 1/snr
        let x0 = 1.0 / (eps * self.params.snr);
        (0..8).map(|k| x0 * 10f64.powi(k)).collect()
    }

    fn f_breakpoints(&self, _eps: f64) -> Vec<f64> {
        // mmse(snr - y) varies on the scale of its argument
        let snr = self.params.snr;
        let mut b: Vec<f64> = (0..12).map(|k| snr - snr * 10f64.powi(-k)).filter(|&v| v > 0.0).collect();
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        b
    }
}

/// `U(x) = -x q + delta ln(1 + x snr / delta) - 2 I(snr) + 2 I(q)` with
/// `q = 1/(1/snr + x/delta)`.
pub fn cs_potential(sys: &CsSystem, x: f64, delta: f64) -> f64 {
    let snr = sys.params.snr;
    let q = 1.0 / (1.0 / snr + x / delta);
    -x * q + delta * (x * snr / delta).ln_1p() - 2.0 * sys.mutual_info(snr) + 2.0 * sys.mutual_info(q)
}
