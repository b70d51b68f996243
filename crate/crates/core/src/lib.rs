//! Numerical laboratory for the radial focusing cubic Schrödinger equation
//! with a repulsive inverse-power potential in three dimensions.

pub mod campaign;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod groundstate;
pub mod scalar;
pub mod virial;

pub use error::{Error, Result};

/// Double-precision aliases for the generic types.
pub type Grid = fields::RadialGrid<f64>;
pub type Field = fields::RadialField<f64>;
pub type Potential = fields::PotentialSpec<f64>;
pub type Moments = fields::MomentSet<f64>;
pub type Functionals = functionals::FunctionalReport<f64>;
pub type Ground = groundstate::GroundState<f64>;
pub type Config = dynamics::PropagatorConfig<f64>;
pub type Log = dynamics::TrajectoryLog<f64>;

/// Single-precision aliases.
pub type Grid32 = fields::RadialGrid<f32>;
pub type Field32 = fields::RadialField<f32>;
pub type Potential32 = fields::PotentialSpec<f32>;
pub type Moments32 = fields::MomentSet<f32>;

/// Exact rational arithmetic for the closed-form functional algebra.
pub type Rational = num_rational::Ratio<i64>;
pub type ExactPotential = fields::PotentialSpec<Rational>;
pub type ExactMoments = fields::MomentSet<Rational>;
pub type ExactScalePair = functionals::ScalePair<Rational>;
