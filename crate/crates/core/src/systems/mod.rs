//! Built-in systems: GLDPC codes over the erasure channel and AMP state
//! evolution for compressive sensing with a Bernoulli-Gaussian prior.

pub mod bernoulli_gauss;
pub mod cs;
pub mod gldpc;

pub use bernoulli_gauss::{BernoulliGauss, MmseCache, ScalarChannelOracle};
pub use cs::{cs_potential, delta_from_eps, eps_from_delta, CsParams, CsSystem};
pub use gldpc::{gldpc_g, gldpc_g_prime, gldpc_potential, GldpcParams, GldpcSystem};
