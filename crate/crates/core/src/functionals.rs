//! Variational functionals evaluated exactly from a [`MomentSet`].
//!
//! Everything except the scaling family and the Gagliardo–Nirenberg
//! quotient is plain field arithmetic, so it runs unchanged on exact
//! rationals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::MomentSet;
use crate::scalar::{frac, int, lit, Real, Scalar};

/// Scaling parameters `(a, b)` of `phi -> e^{a l} phi(e^{-b l} x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalePair<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> ScalePair<T> {
    /// Admissible cone: `a > 0, b <= 0, 2a + b > 0, 2a + 3b >= 0`.
    pub fn new(a: T, b: T) -> Result<Self> {
        let two: T = int(2);
        let three: T = int(3);
        let zero = T::zero();
        if !(a > zero && b <= zero && two * a + b > zero && two * a + three * b >= zero) {
            return Err(Error::Config(format!("(a, b) = ({a:?}, {b:?}) is outside the admissible cone")));
        }
        Ok(ScalePair { a, b })
    }

    /// `(3, -2)`, whose derivative functional is `P`.
    pub fn virial() -> Self {
        ScalePair { a: int(3), b: int(-2) }
    }

    /// `(3, 0)`, whose derivative functional is `3 I`.
    pub fn nehari() -> Self {
        ScalePair { a: int(3), b: T::zero() }
    }

    /// `2a + b`.
    pub fn mu_bar(&self) -> T {
        int::<T>(2) * self.a + self.b
    }
}

pub fn energy<T: Scalar>(m: &MomentSet<T>) -> T {
    let half: T = frac(1, 2);
    half * m.kinetic + half * m.v_moment - frac::<T>(1, 4) * m.quartic
}

pub fn action<T: Scalar>(m: &MomentSet<T>) -> T {
    energy(m) + frac::<T>(1, 2) * m.mass
}

/// Derivative of the action along the `(a, b)` scaling family at `l = 0`.
pub fn k_ab<T: Scalar>(m: &MomentSet<T>, s: &ScalePair<T>) -> T {
    let (a, b) = (s.a, s.b);
    let two: T = int(2);
    let three: T = int(3);
    let four: T = int(4);
    let c_kin = (two * a + b) / two;
    let c_mass = (two * a + three * b) / two;
    let c_q = (four * a + three * b) / four;
    c_kin * m.kinetic + c_mass * m.v_moment + b / two * m.xgradv_moment + c_mass * m.mass - c_q * m.quartic
}

pub fn p_k<T: Scalar>(m: &MomentSet<T>) -> T {
    int::<T>(2) * m.kinetic - m.xgradv_moment - frac::<T>(3, 2) * m.quartic
}

pub fn i_k<T: Scalar>(m: &MomentSet<T>) -> T {
    m.kinetic + m.v_moment + m.mass - m.quartic
}

/// `S - K^{a,b} / (2a + b)`.
pub fn j_ab<T: Scalar>(m: &MomentSet<T>, s: &ScalePair<T>) -> T {
    action(m) - k_ab(m, s) / s.mu_bar()
}

/// The same quantity as [`j_ab`] written without the kinetic term.
pub fn j_ab_reduced<T: Scalar>(m: &MomentSet<T>, s: &ScalePair<T>) -> T {
    let b = s.b;
    let two: T = int(2);
    (-(b * m.v_moment) - b / two * m.xgradv_moment - b * m.mass + (s.a + b) / two * m.quartic) / s.mu_bar()
}

/// `||phi||^2_{H^1_k} = kinetic + v_moment + mass`.
pub fn h1k_sq<T: Scalar>(m: &MomentSet<T>) -> T {
    m.kinetic + m.v_moment + m.mass
}

/// All functionals of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport<T> {
    #[serde(flatten)]
    pub moments: MomentSet<T>,
    pub energy: T,
    pub action: T,
    pub p: T,
    pub i: T,
    pub h1k_sq: T,
}

impl<T: Scalar> FunctionalReport<T> {
    pub fn new(moments: MomentSet<T>) -> Self {
        FunctionalReport {
            moments,
            energy: energy(&moments),
            action: action(&moments),
            p: p_k(&moments),
            i: i_k(&moments),
            h1k_sq: h1k_sq(&moments),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SetTag {
    #[serde(rename = "N_PLUS")]
    NPlus,
    #[serde(rename = "N_MINUS")]
    NMinus,
    #[serde(rename = "OUTSIDE")]
    Outside,
}

impl std::fmt::Display for SetTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SetTag::NPlus => "N_PLUS",
            SetTag::NMinus => "N_MINUS",
            SetTag::Outside => "OUTSIDE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetMembership<T> {
    pub tag: SetTag,
    pub s_value: T,
    pub p_value: T,
    pub n0: T,
}

/// Sub-threshold sets: `S < n0` split by the sign of `P`.
pub fn classify<T: Scalar>(report: &FunctionalReport<T>, n0: T) -> SetMembership<T> {
    let tag = if !(report.action < n0) {
        SetTag::Outside
    } else if report.p >= T::zero() {
        SetTag::NPlus
    } else {
        SetTag::NMinus
    };
    SetMembership { tag, s_value: report.action, p_value: report.p, n0 }
}

/// Slack allowed in inequality checks: `abs + rel * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
}

impl<T: Scalar> Tolerance<T> {
    /// No slack; for exact arithmetic.
    pub fn exact() -> Self {
        Tolerance { abs: T::zero(), rel: T::zero() }
    }

    pub fn standard() -> Self {
        Tolerance { abs: lit(1e-9), rel: lit(1e-7) }
    }

    fn allowance(&self, scale: T) -> T {
        let scale = if scale < T::zero() { -scale } else { scale };
        self.abs + self.rel * scale
    }

    /// `lhs <= rhs` up to tolerance; returns `(passed, rhs - lhs)`.
    pub fn le(&self, lhs: T, rhs: T, scale: T) -> LemmaCheck<T> {
        let slack = rhs - lhs;
        LemmaCheck { passed: slack >= -self.allowance(scale), slack }
    }
}

/// Result of one inequality check; `slack >= 0` means it holds outright.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaCheck<T> {
    pub passed: bool,
    pub slack: T,
}

fn require<T: Scalar>(report: &FunctionalReport<T>, n0: T, tag: SetTag) -> Result<()> {
    let got = classify(report, n0).tag;
    if got != tag {
        return Err(Error::Precondition(format!("state classifies as {got}, check needs {tag}")));
    }
    Ok(())
}

/// On the blow-up set: `P <= -4 (n0 - S)`.
pub fn check_p_upper_bound<T: Scalar>(report: &FunctionalReport<T>, n0: T, tol: &Tolerance<T>) -> Result<LemmaCheck<T>> {
    require(report, n0, SetTag::NMinus)?;
    let bound = -(int::<T>(4) * (n0 - report.action));
    Ok(tol.le(report.p, bound, report.h1k_sq))
}

/// On the global set: `P >= min(4 (n0 - S), (2/5)(kinetic - xgradv / 2))`.
pub fn check_p_lower_bound<T: Scalar>(report: &FunctionalReport<T>, n0: T, tol: &Tolerance<T>) -> Result<LemmaCheck<T>> {
    require(report, n0, SetTag::NPlus)?;
    let m = &report.moments;
    let first = int::<T>(4) * (n0 - report.action);
    let second = frac::<T>(2, 5) * (m.kinetic - frac::<T>(1, 2) * m.xgradv_moment);
    let bound = if first < second { first } else { second };
    Ok(tol.le(bound, report.p, report.h1k_sq))
}

/// On the global set: `h1k_sq / 4 <= S <= h1k_sq / 2`. The slack is the
/// smaller of the two margins.
pub fn h1k_equivalence_check<T: Scalar>(report: &FunctionalReport<T>, n0: T, tol: &Tolerance<T>) -> Result<LemmaCheck<T>> {
    require(report, n0, SetTag::NPlus)?;
    let lower = tol.le(frac::<T>(1, 4) * report.h1k_sq, report.action, report.h1k_sq);
    let upper = tol.le(report.action, frac::<T>(1, 2) * report.h1k_sq, report.h1k_sq);
    let slack = if lower.slack < upper.slack { lower.slack } else { upper.slack };
    Ok(LemmaCheck { passed: lower.passed && upper.passed, slack })
}

/// Growth exponents of (kinetic, v_moment, mass, quartic) along the
/// `(a, b)` family.
pub fn scaling_exponents<T: Scalar>(s: &ScalePair<T>, alpha: T) -> [T; 4] {
    let (a, b) = (s.a, s.b);
    let two: T = int(2);
    let three: T = int(3);
    let four: T = int(4);
    [two * a + b, two * a + three * b - alpha * b, two * a + three * b, four * a + three * b]
}

/// Moments of `e^{a l} phi(e^{-b l} x)`, exactly.
pub fn scaled_moments<T: Real>(m: &MomentSet<T>, s: &ScalePair<T>, lambda: T, alpha: T) -> MomentSet<T> {
    let [ek, ev, em, eq] = scaling_exponents(s, alpha);
    m.rescaled((em * lambda).exp(), (ek * lambda).exp(), (eq * lambda).exp(), (ev * lambda).exp())
}

pub fn scaled_action<T: Real>(m: &MomentSet<T>, s: &ScalePair<T>, lambda: T, alpha: T) -> T {
    action(&scaled_moments(m, s, lambda, alpha))
}

/// `(s(l), s'(l), s''(l))` for `s(l) = S(phi_l)`, differentiated analytically.
pub fn scaled_action_derivatives<T: Real>(m: &MomentSet<T>, s: &ScalePair<T>, lambda: T, alpha: T) -> [T; 3] {
    let [ek, ev, em, eq] = scaling_exponents(s, alpha);
    let half: T = lit(0.5);
    let quarter: T = lit(0.25);
    let terms = [
        (half * m.kinetic, ek),
        (half * m.v_moment, ev),
        (half * m.mass, em),
        (-quarter * m.quartic, eq),
    ];
    let mut out = [T::zero(); 3];
    for (c, e) in terms {
        let v = c * (e * lambda).exp();
        out[0] = out[0] + v;
        out[1] = out[1] + e * v;
        out[2] = out[2] + e * e * v;
    }
    out
}

/// `quartic / (mass^{1/2} kinetic^{3/2})`.
pub fn gn_quotient<T: Real>(m: &MomentSet<T>) -> Result<T> {
    if !(m.mass > T::zero() && m.kinetic > T::zero()) {
        return Err(Error::Domain("Gagliardo-Nirenberg quotient of the zero field".into()));
    }
    Ok(m.quartic / (m.mass.sqrt() * m.kinetic.powf(lit(1.5))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PotentialSpec;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(n, d)
    }

    #[test]
    fn cone_validation() {
        assert!(ScalePair::new(3.0, -2.0).is_ok());
        assert!(ScalePair::new(3.0, 0.0).is_ok());
        assert!(ScalePair::new(1.0, 0.5).is_err());
        assert!(ScalePair::new(0.0, 0.0).is_err());
        assert!(ScalePair::new(3.0, -2.5).is_err());
    }

    #[test]
    fn specializations_are_exact_in_rationals() {
        let pot = PotentialSpec::new(q(1, 2), q(3, 2)).unwrap();
        let m = MomentSet::new(q(7, 3), q(11, 5), q(13, 7), q(2, 9), &pot).unwrap();
        assert_eq!(k_ab(&m, &ScalePair::virial()), p_k(&m));
        assert_eq!(k_ab(&m, &ScalePair::nehari()), q(3, 1) * i_k(&m));
        for (a, b) in [(3, -2), (3, 0), (2, -1), (5, -3), (1, 0)] {
            let s = ScalePair::new(q(a, 1), q(b, 1)).unwrap();
            assert_eq!(j_ab(&m, &s), j_ab_reduced(&m, &s));
        }
        let r = FunctionalReport::new(m);
        assert_eq!(r.action, r.energy + m.mass / q(2, 1));
    }

    #[test]
    fn zero_field_is_n_plus() {
        let m = MomentSet::<f64>::zero();
        let r = FunctionalReport::new(m);
        assert_eq!(classify(&r, 18.9).tag, SetTag::NPlus);
        let tol = Tolerance::standard();
        assert!(check_p_lower_bound(&r, 18.9, &tol).unwrap().passed);
        assert!(h1k_equivalence_check(&r, 18.9, &tol).unwrap().passed);
        assert!(matches!(check_p_upper_bound(&r, 18.9, &tol), Err(Error::Precondition(_))));
        assert!(matches!(gn_quotient(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn report_serializes_flat() {
        let r = FunctionalReport::new(MomentSet::<f64>::zero());
        let v = serde_json::to_value(r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["action", "energy", "h1k_sq", "i", "kinetic", "mass", "p", "quartic", "v_moment", "xgradv_moment"]
        );
    }
}
