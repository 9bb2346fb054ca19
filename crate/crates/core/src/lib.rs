//! Spatially coupled scalar density evolution.
//!
//! The crate covers the uncoupled recursion `x <- f(g(x))` with its
//! potential and thresholds ([`scalar`]), the coupled chain with pinned
//! boundaries ([`coupling`]), the traveling-wave measurements and the
//! closed-form wave velocity ([`wave`]), and two concrete systems
//! ([`systems`]).

pub mod coupling;
pub mod error;
pub mod quadrature;
pub mod scalar;
pub mod system;
pub mod systems;
pub mod wave;

pub use coupling::{build_coupling, coupled_potential, coupled_step, run_coupled, CoupledProfile, CouplingSpec, WindowShape};
pub use error::{Error, Result};
pub use quadrature::QuadratureConfig;
pub use scalar::{
    algorithmic_threshold, de_step, energy_gap, find_fixed_points, potential_threshold, run_uncoupled, single_potential,
    thresholds, potential_shape, FixedPointSet, PotentialShape, ShapeConfig, ThresholdPair, UncoupledRun,
};
pub use system::SystemModel;
pub use wave::{
    empirical_velocity, formula_velocity, interaction_residual, kink_position, measure_velocity, steady_profile, KinkTrack,
    SteadyConfig, SteadyProfile, VelocityConfig, VelocityMeasurement, VelocityReport,
};
