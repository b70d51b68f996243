use crate::error::{Error, Result};
use crate::scalar::{int, Scalar};

/// Repulsive inverse-power potential `V(x) = k |x|^{-alpha}`.
///
/// Because `V` is homogeneous of degree `-alpha`, `x . grad V = -alpha V`,
/// so every `x . grad V` moment is derived from the plain `V` moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec<T> {
    k: T,
    alpha: T,
}

impl<T: Scalar> PotentialSpec<T> {
    pub fn new(k: T, alpha: T) -> Result<Self> {
        if !(k >= T::zero()) {
            return Err(Error::Config(format!("coupling k must be >= 0, got {k:?}")));
        }
        if !(alpha > T::one() && alpha <= int(2)) {
            return Err(Error::Config(format!("alpha must lie in (1, 2], got {alpha:?}")));
        }
        Ok(PotentialSpec { k, alpha })
    }

    /// No validation. Used to evaluate moments for exponents outside the
    /// admissible range and to build deliberately broken potentials in
    /// tests that check the suite can detect a wrong sign.
    #[doc(hidden)]
    pub fn new_unchecked(k: T, alpha: T) -> Self {
        PotentialSpec { k, alpha }
    }

    /// The free problem `k = 0` (alpha is irrelevant but kept valid).
    pub fn free() -> Self {
        PotentialSpec { k: T::zero(), alpha: int(2) }
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn is_free(&self) -> bool {
        self.k == T::zero()
    }

    /// Radial weight exponent `2 - alpha` of the `V` moment.
    pub fn weight_exponent(&self) -> T {
        int::<T>(2) - self.alpha
    }

    /// `x . grad V` moment from the `V` moment.
    pub fn xgradv_from_v(&self, v_moment: T) -> T {
        -(self.alpha * v_moment)
    }
}

impl<T: crate::scalar::Real> PotentialSpec<T> {
    pub fn value(&self, r: T) -> T {
        self.k * r.powf(-self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn validation() {
        assert!(PotentialSpec::new(1.0, 1.5).is_ok());
        assert!(PotentialSpec::new(0.0, 2.0).is_ok());
        assert!(PotentialSpec::new(-0.1, 1.5).is_err());
        assert!(PotentialSpec::new(1.0, 1.0).is_err());
        assert!(PotentialSpec::new(1.0, 2.5).is_err());
        assert!(PotentialSpec::new(f64::NAN, 1.5).is_err());
    }

    #[test]
    fn homogeneity_is_exact_in_rationals() {
        let p = PotentialSpec::new(Ratio::new(1i64, 2), Ratio::new(5, 4)).unwrap();
        let v = Ratio::new(7i64, 3);
        assert_eq!(p.xgradv_from_v(v) + p.alpha() * v, Ratio::from_integer(0));
    }
}
