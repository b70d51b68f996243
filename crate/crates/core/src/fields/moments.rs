use std::sync::Arc;

use num_complex::Complex;
use serde::Serialize;

use super::field::RadialField;
use super::grid::RadialGrid;
use super::potential::PotentialSpec;
use super::quadrature::{cubic_eval, cubic_partial_weights, gauss_legendre, reflected, singular_weights};
use super::transform::SineTransform;
use crate::error::{Error, Result};
use crate::scalar::{int, lit, Real, Scalar};

/// The five integrals every functional is built from.
///
/// `xgradv_moment` is always `-alpha * v_moment`; it is kept as a field so
/// the functional formulas read the same as their definitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet<T> {
    pub mass: T,
    pub kinetic: T,
    pub quartic: T,
    pub v_moment: T,
    pub xgradv_moment: T,
}

impl<T: Scalar> MomentSet<T> {
    /// Assemble a moment set; rejects negative entries.
    pub fn new(mass: T, kinetic: T, quartic: T, v_moment: T, pot: &PotentialSpec<T>) -> Result<Self> {
        let zero = T::zero();
        for (name, x) in [("mass", mass), ("kinetic", kinetic), ("quartic", quartic), ("v_moment", v_moment)] {
            if !(x >= zero) {
                return Err(Error::Data(format!("{name} must be nonnegative, got {x:?}")));
            }
        }
        Ok(MomentSet { mass, kinetic, quartic, v_moment, xgradv_moment: pot.xgradv_from_v(v_moment) })
    }

    pub fn zero() -> Self {
        let z = T::zero();
        MomentSet { mass: z, kinetic: z, quartic: z, v_moment: z, xgradv_moment: z }
    }

    /// Multiply each entry by the given factor (the `x . grad V` moment
    /// follows the potential moment).
    pub fn rescaled(&self, mass_f: T, kinetic_f: T, quartic_f: T, v_f: T) -> Self {
        MomentSet {
            mass: self.mass * mass_f,
            kinetic: self.kinetic * kinetic_f,
            quartic: self.quartic * quartic_f,
            v_moment: self.v_moment * v_f,
            xgradv_moment: self.xgradv_moment * v_f,
        }
    }
}

impl<T: Real> MomentSet<T> {
    pub fn is_finite(&self) -> bool {
        [self.mass, self.kinetic, self.quartic, self.v_moment, self.xgradv_moment].iter().all(|x| x.is_finite())
    }
}

/// Reusable evaluator for one grid and potential: holds the sine transform
/// and the singular quadrature weights of the potential moment.
#[derive(Debug, Clone)]
pub struct MomentEngine<T: Real> {
    grid: Arc<RadialGrid<T>>,
    pot: PotentialSpec<T>,
    transform: SineTransform<T>,
    v_weights: Vec<T>,
}

impl<T: Real> MomentEngine<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, pot: PotentialSpec<T>) -> Self {
        let transform = SineTransform::new(&grid);
        let v_weights = if pot.is_free() {
            vec![T::zero(); grid.n_points()]
        } else {
            singular_weights(&grid, pot.weight_exponent()).into_iter().map(|w| w * pot.k()).collect()
        };
        MomentEngine { grid, pot, transform, v_weights }
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn potential(&self) -> &PotentialSpec<T> {
        &self.pot
    }

    pub fn transform(&self) -> &SineTransform<T> {
        &self.transform
    }

    /// `k omega_j`: `v_moment = 4 pi sum_j k omega_j |u_j|^2`.
    pub fn v_weights(&self) -> &[T] {
        &self.v_weights
    }

    fn four_pi() -> T {
        int::<T>(4) * T::PI()
    }

    pub fn mass_of(&self, w: &[Complex<T>]) -> T {
        let s = w.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        Self::four_pi() * self.grid.spacing() * s
    }

    pub fn kinetic_of(&self, w: &[Complex<T>]) -> T {
        Self::four_pi() * self.transform.dirichlet_energy(w, self.grid.r_max())
    }

    pub fn quartic_of(&self, w: &[Complex<T>]) -> T {
        let s = w.iter().zip(self.grid.nodes()).fold(T::zero(), |a, (z, &r)| {
            let m = z.norm_sqr();
            a + m * m / (r * r)
        });
        Self::four_pi() * self.grid.spacing() * s
    }

    pub fn v_moment_of(&self, w: &[Complex<T>]) -> T {
        let s = w
            .iter()
            .zip(self.grid.nodes())
            .zip(&self.v_weights)
            .fold(T::zero(), |a, ((z, &r), &om)| a + om * z.norm_sqr() / (r * r));
        Self::four_pi() * s
    }

    /// `||u||_5^5 = 4 pi int r^2 |u|^5 dr`.
    pub fn l5_pow5_of(&self, w: &[Complex<T>]) -> T {
        let s = w.iter().zip(self.grid.nodes()).fold(T::zero(), |a, (z, &r)| {
            let m = z.norm();
            a + m.powi(5) / (r * r * r)
        });
        Self::four_pi() * self.grid.spacing() * s
    }

    /// All moments from reduced samples `w = r u`.
    pub fn moments_of(&self, w: &[Complex<T>]) -> Result<MomentSet<T>> {
        let m = MomentSet::new(
            self.mass_of(w),
            self.kinetic_of(w),
            self.quartic_of(w),
            self.v_moment_of(w),
            &self.pot,
        )?;
        if !m.is_finite() {
            return Err(Error::Numerical("non-finite moment".into()));
        }
        Ok(m)
    }

    pub fn moments(&self, field: &RadialField<T>) -> Result<MomentSet<T>> {
        self.check_grid(field)?;
        self.moments_of(&field.reduced())
    }

    fn check_grid(&self, field: &RadialField<T>) -> Result<()> {
        if field.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::Precondition("field lives on a different grid".into()));
        }
        Ok(())
    }
}

/// Mass, kinetic, quartic and potential moments of a field.
pub fn compute_moments<T: Real>(field: &RadialField<T>, pot: &PotentialSpec<T>) -> Result<MomentSet<T>> {
    MomentEngine::new(field.grid().clone(), *pot).moments(field)
}

/// `|w_j|^2` as `f64`.
fn density(field: &RadialField<impl Real>) -> Vec<f64> {
    field.reduced().iter().map(|z| z.norm_sqr().to_f64().unwrap()).collect()
}

/// `4 pi int_{r >= radius} r^2 |u|^2 dr`.
///
/// Integrates the piecewise cubic interpolant of `|w|^2` (extended by
/// reflection at the origin and the wall), so the value is continuous and
/// nonincreasing in `radius` and equals the mass at `radius = 0`.
pub fn exterior_mass<T: Real>(field: &RadialField<T>, radius: T) -> Result<T> {
    let grid = field.grid();
    if !(radius >= T::zero()) || radius > grid.r_max() {
        return Err(Error::Config(format!("radius {radius} outside [0, {}]", grid.r_max())));
    }
    let g = density(field);
    Ok(lit(exterior_of_density(&g, grid.spacing().to_f64().unwrap(), radius.to_f64().unwrap())))
}

pub(crate) fn exterior_of_density(g: &[f64], h: f64, radius: f64) -> f64 {
    let n = g.len();
    let x = radius / h;
    let j = (x.floor().max(0.0) as usize).min(n + 1);
    if j > n {
        return 0.0;
    }
    let t0 = (x - j as f64).clamp(0.0, 1.0);
    let stencil = |p: usize| {
        let p = p as isize;
        [reflected(g, p - 1), reflected(g, p), reflected(g, p + 1), reflected(g, p + 2)]
    };
    let part: f64 = cubic_partial_weights(t0).iter().zip(stencil(j)).map(|(w, y)| w * y).sum();
    let full = cubic_partial_weights(0.0);
    let rest: f64 = (j + 1..=n).map(|p| full.iter().zip(stencil(p)).map(|(w, y)| w * y).sum::<f64>()).sum();
    4.0 * std::f64::consts::PI * h * (part + rest)
}

/// Absolute tolerance on the estimated error of [`offcenter_v_moment`].
pub const OFFCENTER_TOL: f64 = 1e-8;

/// `int_0^pi sin(t) / |s^2 + d^2 + 2 s d cos t|^{alpha/2} dt` in closed form,
/// `gap^beta expm1(beta L) / (beta s d)` with `gap = |s - d|` and
/// `L = ln((s + d) / gap)`. Taking the gap as an input keeps full relative
/// precision next to the kink.
fn angular_kernel(s: f64, d: f64, gap: f64, beta: f64) -> f64 {
    let l = (2.0 * s.min(d) / gap).ln_1p();
    if beta < 1e-12 {
        l / (s * d)
    } else {
        gap.powf(beta) * (beta * l).exp_m1() / (beta * s * d)
    }
}

/// `int V(x) |u(x - shift e)|^2 dx` for a radial profile `u` recentred at
/// distance `shift` from the potential's singularity.
///
/// The polar angle is integrated exactly; the remaining radial integral of
/// the cubic interpolant of `|w|^2` against the kernel is done panel by
/// panel with Gauss–Legendre, with panels refined geometrically towards the
/// kink at `s = shift`. The error estimate compares two rule orders.
pub fn offcenter_v_moment<T: Real>(field: &RadialField<T>, pot: &PotentialSpec<T>, shift: T) -> Result<T> {
    if !(shift >= T::zero()) || !shift.is_finite() {
        return Err(Error::Config(format!("shift must be >= 0, got {shift}")));
    }
    if pot.is_free() {
        return Ok(T::zero());
    }
    if shift == T::zero() {
        return Ok(compute_moments(field, pot)?.v_moment);
    }
    let grid = field.grid();
    let g = density(field);
    let h = grid.spacing().to_f64().unwrap();
    let r_max = grid.r_max().to_f64().unwrap();
    let d = shift.to_f64().unwrap();
    let beta = pot.weight_exponent().to_f64().unwrap();
    let k = pot.k().to_f64().unwrap();

    let mut cuts: Vec<f64> = (0..=grid.n_points() + 1).map(|j| j as f64 * h).collect();
    if d < r_max {
        cuts.push(d);
        for i in 0..40 {
            let e = h * 0.5f64.powi(i);
            for c in [d - e, d + e] {
                if c > 0.0 && c < r_max {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * r_max);

    let density_at = |s: f64| {
        let x = s / h;
        let j = x.floor() as isize;
        let t = x - j as f64;
        let y = [reflected(&g, j - 1), reflected(&g, j), reflected(&g, j + 1), reflected(&g, j + 2)];
        cubic_eval(y, t).max(0.0)
    };
    let integrand = |s: f64, gap: f64| density_at(s) * angular_kernel(s, d, gap, beta);

    let lo = gauss_legendre(8);
    let hi = gauss_legendre(16);
    let plain = |a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)| {
        let (c, r) = ((a + b) / 2.0, (b - a) / 2.0);
        rule.0
            .iter()
            .zip(&rule.1)
            .map(|(x, w)| {
                let s = c + r * x;
                w * integrand(s, (s - d).abs())
            })
            .sum::<f64>()
            * r
    };
    // s = d -/+ len * x^4 clusters nodes at the kink.
    let graded = |a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)| {
        let (anchor, len, sign) = if (b - d).abs() < (a - d).abs() { (b, b - a, -1.0) } else { (a, b - a, 1.0) };
        rule.0
            .iter()
            .zip(&rule.1)
            .map(|(x, w)| {
                let u = (x + 1.0) / 2.0;
                let gap = len * u.powi(4);
                w * 0.5 * 4.0 * len * u.powi(3) * integrand(anchor + sign * gap, gap)
            })
            .sum::<f64>()
    };

    let (mut coarse, mut fine) = (0.0, 0.0);
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let touches = (a - d).abs() <= 1e-15 * r_max.max(d) || (b - d).abs() <= 1e-15 * r_max.max(d);
        if touches {
            coarse += graded(a, b, &lo);
            fine += graded(a, b, &hi);
        } else {
            coarse += plain(a, b, &lo);
            fine += plain(a, b, &hi);
        }
    }
    let scale = 2.0 * std::f64::consts::PI * k;
    let (coarse, fine) = (scale * coarse, scale * fine);
    let err = (fine - coarse).abs();
    if !(err <= OFFCENTER_TOL * fine.abs().max(1.0)) {
        return Err(Error::Numerical(format!("off-center quadrature error estimate {err:e} exceeds tolerance")));
    }
    Ok(lit(fine))
}
