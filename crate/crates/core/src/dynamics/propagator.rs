use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fields::{MomentEngine, PotentialSpec, RadialField, RadialGrid};
use crate::scalar::{lit, Real};

/// Strang split-step integrator on `w = r u`.
///
/// The pointwise part (cubic term, potential, optional sponge) is an exact
/// phase rotation; the Laplacian is diagonal in the sine basis. The
/// potential enters through `k omega_j / (h r_j^2)` with the same singular
/// quadrature weights as the potential moment, so the discrete flow
/// conserves exactly the energy that is monitored.
pub struct Propagator<T: Real> {
    engine: MomentEngine<T>,
    potential: Vec<T>,
    inv_r2: Vec<T>,
    damping: Option<Vec<T>>,
    nonlinear: bool,
    linear_dt: Option<T>,
    linear_phase: Vec<Complex<T>>,
    coeffs: Vec<Complex<T>>,
    buf: Vec<Complex<T>>,
}

impl<T: Real> Propagator<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, pot: PotentialSpec<T>) -> Self {
        let engine = MomentEngine::new(grid.clone(), pot);
        let h = grid.spacing();
        let potential =
            engine.v_weights().iter().zip(grid.nodes()).map(|(&om, &r)| om / (h * r * r)).collect();
        let inv_r2 = grid.nodes().iter().map(|&r| T::one() / (r * r)).collect();
        let n = grid.n_points();
        Propagator {
            engine,
            potential,
            inv_r2,
            damping: None,
            nonlinear: true,
            linear_dt: None,
            linear_phase: Vec::new(),
            coeffs: vec![Complex::new(T::zero(), T::zero()); n],
            buf: Vec::new(),
        }
    }

    /// Absorbing layer of the given width at the wall: amplitude decays at
    /// rate `strength ((r - r_start) / width)^4` inside it.
    pub fn with_sponge(mut self, width: T, strength: T) -> Result<Self> {
        let grid = self.engine.grid().clone();
        if !(width >= T::zero() && width < grid.r_max()) {
            return Err(Error::Config(format!("sponge width {width} must lie in [0, r_max)")));
        }
        self.damping = if width > T::zero() {
            let start = grid.r_max() - width;
            Some(
                grid.nodes()
                    .iter()
                    .map(|&r| if r > start { strength * ((r - start) / width).powi(4) } else { T::zero() })
                    .collect(),
            )
        } else {
            None
        };
        Ok(self)
    }

    /// Test hook: drop the cubic term.
    pub fn with_nonlinearity(mut self, on: bool) -> Self {
        self.nonlinear = on;
        self
    }

    pub fn engine(&self) -> &MomentEngine<T> {
        &self.engine
    }

    fn phase(&self, w: &mut [Complex<T>], tau: T) {
        for j in 0..w.len() {
            let mut theta = -self.potential[j];
            if self.nonlinear {
                theta = theta + w[j].norm_sqr() * self.inv_r2[j];
            }
            let (s, c) = (tau * theta).sin_cos();
            w[j] = w[j] * Complex::new(c, s);
            if let Some(d) = &self.damping {
                if d[j] > T::zero() {
                    w[j] = w[j] * (-(tau.abs()) * d[j]).exp();
                }
            }
        }
    }

    fn linear(&mut self, w: &mut [Complex<T>], dt: T) {
        if self.linear_dt != Some(dt) {
            self.linear_phase = self
                .engine
                .transform()
                .wavenumbers()
                .iter()
                .map(|&k| Complex::from_polar(T::one(), -(dt * k * k)))
                .collect();
            self.linear_dt = Some(dt);
        }
        let t = self.engine.transform();
        t.forward_into(w, &mut self.coeffs, &mut self.buf);
        for (c, p) in self.coeffs.iter_mut().zip(&self.linear_phase) {
            *c = *c * p;
        }
        t.inverse_into(&self.coeffs, w, &mut self.buf);
    }

    /// `n` Strang steps of size `dt` on reduced samples, with adjacent half
    /// phases merged.
    pub fn advance(&mut self, w: &mut [Complex<T>], dt: T, n: usize) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let half = dt / lit(2.0);
        self.phase(w, half);
        for i in 0..n {
            self.linear(w, dt);
            self.phase(w, if i + 1 == n { half } else { dt });
        }
        if w.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numerical("non-finite state after step".into()));
        }
        Ok(())
    }

    /// One step of a field; the field is left untouched.
    pub fn step(&mut self, field: &RadialField<T>, dt: T) -> Result<RadialField<T>> {
        let mut w = field.reduced();
        self.advance(&mut w, dt, 1)?;
        RadialField::from_reduced(field.grid().clone(), &w, field.label())
    }
}

/// Single Strang step of `state` under `pot`.
pub fn step<T: Real>(state: &RadialField<T>, pot: &PotentialSpec<T>, dt: T) -> Result<RadialField<T>> {
    Propagator::new(state.grid().clone(), *pot).step(state, dt)
}
