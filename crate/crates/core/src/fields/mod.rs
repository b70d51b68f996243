//! Radial grids, sampled fields and the integrals built on them.

mod field;
mod grid;
mod moments;
mod potential;
pub mod quadrature;
mod transform;

pub use field::{gaussian_profile, sech_profile, RadialField};
pub use grid::{RadialGrid, MIN_POINTS};
pub use moments::{compute_moments, exterior_mass, offcenter_v_moment, MomentEngine, MomentSet, OFFCENTER_TOL};
pub use potential::PotentialSpec;
pub use transform::SineTransform;

#[allow(unused_imports)]
pub(crate) use moments::exterior_of_density;
