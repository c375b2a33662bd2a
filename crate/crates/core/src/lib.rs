//! Simulation and analysis of signal propagation along linear feed-forward
//! signaling cascades.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

// NaN-rejecting checks are written as `!(x > 0)`; stage loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod ode;
pub mod rescale;
pub mod scalar;
pub mod search;
pub mod stationary;
pub mod sweep;

pub use error::{Error, Result};
pub use metrics::{Frame, SpeedMeasurement};
pub use model::{classify, edge_rhs, pathway_rhs, uniform_rhs, InitialState, Region};
pub use ode::{integrate, OdeSystem};
pub use rescale::{edge_speed, rescale, OracleMode};
pub use scalar::Scalar;
pub use stationary::{decay_rate, penetration_depth_approx, penetration_depth_fit, stationary_map, stationary_profile};
pub use sweep::{
    build_gradient, run_comparison, sample_realization, GradientKind, StochasticEnsembleSpec, SweepSummary,
};

pub type EdgeParams = model::EdgeParams<f64>;
pub type PathwaySpec = model::PathwaySpec<f64>;
pub type CascadeState = model::CascadeState<f64>;
pub type EquilibriumSet = model::EquilibriumSet<f64>;
pub type IntegratorConfig = ode::IntegratorConfig<f64>;
pub type Trajectory = ode::Trajectory<f64>;
pub type StationaryProfile = stationary::StationaryProfile<f64>;
pub type ProfileFrame = metrics::ProfileFrame<f64>;
pub type VelocitySeries = metrics::VelocitySeries<f64>;
pub type ShapeResidualSeries = metrics::ShapeResidualSeries<f64>;
pub type SpeedOracle = rescale::SpeedOracle<f64>;
pub type SpeedTable = rescale::SpeedTable<f64>;
pub type RescaledCoordinates = rescale::RescaledCoordinates<f64>;
pub type GradientSpec = sweep::GradientSpec<f64>;
pub type Comparison = sweep::Comparison<f64>;
