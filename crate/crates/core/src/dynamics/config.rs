use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Time-stepping and monitoring parameters for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorConfig<T> {
    pub dt: T,
    pub t_final: T,
    /// Adaptive halving stops here.
    pub dt_min: T,
    /// Kinetic growth (relative to the initial value) that counts as blow-up.
    pub blowup_gradient_factor: T,
    /// Width of the absorbing layer at the wall; 0 disables it.
    pub sponge_width: T,
    /// Peak absorption rate of the sponge (per unit time).
    pub sponge_strength: T,
    /// Steps between recorded samples.
    pub record_every: usize,
    /// Records between field checkpoints; 0 disables them.
    pub checkpoint_every: usize,
    /// Allowed relative energy change per step before `dt` is halved.
    pub energy_tolerance: T,
    /// Fraction of the mass beyond `r_max / 2` that flags contamination.
    pub contamination_fraction: T,
    /// Radius of the quadratic virial cutoff; `None` means `r_max / 4`.
    pub virial_radius: Option<T>,
    /// Test hook: `false` drops the cubic term.
    pub nonlinear: bool,
}

impl<T: Real> PropagatorConfig<T> {
    pub fn new(dt: T, t_final: T) -> Self {
        PropagatorConfig {
            dt,
            t_final,
            dt_min: dt / lit(4096.0),
            blowup_gradient_factor: lit(100.0),
            sponge_width: T::zero(),
            sponge_strength: lit(10.0),
            record_every: 100,
            checkpoint_every: 0,
            energy_tolerance: lit(1e-6),
            contamination_fraction: lit(0.01),
            virial_radius: None,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.dt_min > T::zero() && self.dt_min <= self.dt) {
            return bad("dt_min must satisfy 0 < dt_min <= dt");
        }
        if !(self.t_final > T::zero() && self.t_final.is_finite()) {
            return bad("t_final must be positive");
        }
        if !(self.blowup_gradient_factor > T::one()) {
            return bad("blowup_gradient_factor must exceed 1");
        }
        if !(self.sponge_width >= T::zero()) || !(self.sponge_strength >= T::zero()) {
            return bad("sponge width and strength must be nonnegative");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        if !(self.energy_tolerance > T::zero()) {
            return bad("energy_tolerance must be positive");
        }
        if !(self.contamination_fraction > T::zero() && self.contamination_fraction < T::one()) {
            return bad("contamination_fraction must lie in (0, 1)");
        }
        if let Some(r) = self.virial_radius {
            if !(r > T::zero()) {
                return bad("virial_radius must be positive");
            }
        }
        Ok(())
    }
}
