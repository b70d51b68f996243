//! Localized virial quantities `I`, `I'`, `I''` and the decomposition
//! `I'' = 4P + R1 + R2 + R3 + R4`.

use std::sync::OnceLock;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{MomentEngine, RadialField, RadialGrid};
use crate::functionals::p_k;
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CutoffKind {
    /// 0 inside `R/2`, 1 beyond `R`.
    #[serde(rename = "EXTERIOR")]
    Exterior,
    /// `r^2` inside `R`, constant beyond `2R`.
    #[serde(rename = "QUADRATIC")]
    Quadratic,
}

/// Ramp length (as a fraction of the transition interval) of the exterior
/// cutoff's slope profile.
const EXTERIOR_RAMP: f64 = 0.25;

/// Plateau value of the quadratic cutoff in units of `R^2`.
pub const QUADRATIC_PLATEAU: f64 = 1.0 + 2.0 * (1.0 + 0.5 - 11.0 + 21.5 - 106.0 / 7.0 + 3.75);

/// Bound on `|phi''''|` of the quadratic cutoff in units of `1/R^2`.
pub const QUADRATIC_FOURTH_BOUND: f64 = 157.8;

/// Radial weight `phi` sampled with its derivatives at the grid nodes.
#[derive(Debug, Clone)]
pub struct VirialCutoff<T> {
    pub kind: CutoffKind,
    pub radius: T,
    pub phi: Vec<T>,
    pub d1: Vec<T>,
    pub d2: Vec<T>,
    pub d3: Vec<T>,
    pub d4: Vec<T>,
    /// `phi'' + 2 phi' / r`.
    pub laplacian: Vec<T>,
    /// `phi'''' + 4 phi''' / r`.
    pub bilaplacian: Vec<T>,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &a)| i as f64 * a).collect()
}

/// Slope profile of the quadratic blend: `phi' = 2R g((r - R)/R)` on
/// `[R, 2R]`, with `g(0) = 1, g'(0) = 1` and every derivative through the
/// third vanishing at 1 (and the second and third at 0).
const G: [f64; 8] = [1.0, 1.0, 0.0, 0.0, -55.0, 129.0, -106.0, 30.0];

/// `C^3` smoothstep `35t^4 - 84t^5 + 70t^6 - 20t^7`.
const STEP7: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];

/// `[phi, phi', phi'', phi''', phi'''']` at radius `r`.
pub fn cutoff_profile(kind: CutoffKind, radius: f64, r: f64) -> [f64; 5] {
    let big_r = radius;
    match kind {
        CutoffKind::Quadratic => {
            if r <= big_r {
                [r * r, 2.0 * r, 2.0, 0.0, 0.0]
            } else if r >= 2.0 * big_r {
                [QUADRATIC_PLATEAU * big_r * big_r, 0.0, 0.0, 0.0, 0.0]
            } else {
                let x = (r - big_r) / big_r;
                let g1 = deriv(&G);
                let g2 = deriv(&g1);
                let g3 = deriv(&g2);
                let mut anti = vec![0.0];
                anti.extend(G.iter().enumerate().map(|(i, &a)| a / (i + 1) as f64));
                [
                    big_r * big_r * (1.0 + 2.0 * poly(&anti, x)),
                    2.0 * big_r * poly(&G, x),
                    2.0 * poly(&g1, x),
                    2.0 * poly(&g2, x) / big_r,
                    2.0 * poly(&g3, x) / (big_r * big_r),
                ]
            }
        }
        CutoffKind::Exterior => {
            let (x0, len) = (big_r / 2.0, big_r / 2.0);
            if r <= x0 {
                return [0.0; 5];
            }
            if r >= big_r {
                return [1.0, 0.0, 0.0, 0.0, 0.0];
            }
            let x = (r - x0) / len;
            let [p, p1, p2, p3, anti] = exterior_slope(x);
            let s = 1.0 / len;
            [anti, p * s, p1 * s * s, p2 * s.powi(3), p3 * s.powi(4)]
        }
    }
}

/// Trapezoid-shaped `C^3` slope profile on `[0, 1]` with unit integral:
/// `[p, p', p'', p''', int_0^x p]`.
fn exterior_slope(x: f64) -> [f64; 5] {
    let a = EXTERIOR_RAMP;
    let height = 1.0 / (1.0 - a);
    let s1 = deriv(&STEP7);
    let s2 = deriv(&s1);
    let s3 = deriv(&s2);
    let mut anti = vec![0.0];
    anti.extend(STEP7.iter().enumerate().map(|(i, &c)| c / (i + 1) as f64));
    if x < a {
        let t = x / a;
        [
            height * poly(&STEP7, t),
            height * poly(&s1, t) / a,
            height * poly(&s2, t) / (a * a),
            height * poly(&s3, t) / (a * a * a),
            height * a * poly(&anti, t),
        ]
    } else if x > 1.0 - a {
        let t = (1.0 - x) / a;
        [
            height * poly(&STEP7, t),
            -height * poly(&s1, t) / a,
            height * poly(&s2, t) / (a * a),
            -height * poly(&s3, t) / (a * a * a),
            1.0 - height * a * poly(&anti, t),
        ]
    } else {
        [height, 0.0, 0.0, 0.0, height * (a / 2.0 + x - a)]
    }
}

/// Sample a cutoff on the grid. Both `R/2` and `2R` must lie inside the
/// domain.
pub fn build_cutoff<T: Real>(kind: CutoffKind, radius: T, grid: &RadialGrid<T>) -> Result<VirialCutoff<T>> {
    if !(radius > T::zero()) || !(radius * lit(2.0) < grid.r_max()) {
        return Err(Error::Config(format!(
            "cutoff radius {radius} needs 0 < R and 2R < r_max = {}",
            grid.r_max()
        )));
    }
    let big_r = to_f64(radius);
    let n = grid.n_points();
    let mut c = VirialCutoff {
        kind,
        radius,
        phi: Vec::with_capacity(n),
        d1: Vec::with_capacity(n),
        d2: Vec::with_capacity(n),
        d3: Vec::with_capacity(n),
        d4: Vec::with_capacity(n),
        laplacian: Vec::with_capacity(n),
        bilaplacian: Vec::with_capacity(n),
    };
    for &r in grid.nodes() {
        let rf = to_f64(r);
        let [p, p1, p2, p3, p4] = cutoff_profile(kind, big_r, rf);
        c.phi.push(lit(p));
        c.d1.push(lit(p1));
        c.d2.push(lit(p2));
        c.d3.push(lit(p3));
        c.d4.push(lit(p4));
        c.laplacian.push(lit(p2 + 2.0 * p1 / rf));
        c.bilaplacian.push(lit(p4 + 4.0 * p3 / rf));
    }
    Ok(c)
}

/// One evaluation of the virial quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialSample<T> {
    #[serde(rename = "I")]
    pub i: T,
    #[serde(rename = "Iprime")]
    pub i_prime: T,
    #[serde(rename = "Idoubleprime")]
    pub i_doubleprime: T,
    pub p_term: T,
    pub r1: T,
    pub r2: T,
    pub r3: T,
    pub r4: T,
}

impl<T: Real> VirialSample<T> {
    pub fn zero() -> Self {
        let z = T::zero();
        VirialSample { i: z, i_prime: z, i_doubleprime: z, p_term: z, r1: z, r2: z, r3: z, r4: z }
    }

    pub fn remainders(&self) -> [T; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }
}

fn four_pi<T: Real>() -> T {
    lit::<T>(4.0) * T::PI()
}

/// `4 pi int r^2 phi |u|^2 dr`.
pub fn virial_i<T: Real>(field: &RadialField<T>, cutoff: &VirialCutoff<T>) -> T {
    i_of(&field.reduced(), cutoff, field.grid().spacing())
}

fn i_of<T: Real>(w: &[Complex<T>], c: &VirialCutoff<T>, h: T) -> T {
    let s = w.iter().zip(&c.phi).fold(T::zero(), |a, (z, &p)| a + p * z.norm_sqr());
    four_pi::<T>() * h * s
}

fn i_prime_of<T: Real>(w: &[Complex<T>], dw: &[Complex<T>], c: &VirialCutoff<T>, h: T) -> T {
    let s = w
        .iter()
        .zip(dw)
        .zip(&c.d1)
        .fold(T::zero(), |a, ((z, d), &p1)| a + p1 * (d * z.conj()).im);
    lit::<T>(2.0) * four_pi::<T>() * h * s
}

/// `2 Im int grad(phi) . grad(u) conj(u) dx`.
pub fn virial_i_prime<T: Real>(field: &RadialField<T>, cutoff: &VirialCutoff<T>, engine: &MomentEngine<T>) -> T {
    let w = field.reduced();
    let dw = engine.transform().derivative(&w);
    i_prime_of(&w, &dw, cutoff, field.grid().spacing())
}

/// `I''` and its decomposition for reduced samples `w` with spectral
/// derivative `dw`.
pub(crate) fn sample_of<T: Real>(
    w: &[Complex<T>],
    dw: &[Complex<T>],
    engine: &MomentEngine<T>,
    cutoff: &VirialCutoff<T>,
) -> Result<VirialSample<T>> {
    let grid = engine.grid();
    let h = grid.spacing();
    let alpha = engine.potential().alpha();
    let two: T = lit(2.0);
    let six: T = lit(6.0);
    let fp = four_pi::<T>();
    let (mut r1, mut r2, mut r3, mut r4) = (T::zero(), T::zero(), T::zero(), T::zero());
    for j in 0..w.len() {
        let r = grid.nodes()[j];
        let m2 = w[j].norm_sqr();
        let grad = (dw[j] - w[j] / r).norm_sqr();
        r1 = r1 + (cutoff.d2[j] - two) * grad;
        r2 = r2 + (cutoff.laplacian[j] - six) * m2 * m2 / (r * r);
        r3 = r3 + engine.v_weights()[j] * (cutoff.d1[j] / r - two) * m2 / (r * r);
        r4 = r4 + cutoff.bilaplacian[j] * m2;
    }
    let moments = engine.moments_of(w)?;
    let p_term = lit::<T>(4.0) * p_k(&moments);
    let r1 = lit::<T>(4.0) * fp * h * r1;
    let r2 = -(fp * h * r2);
    let r3 = two * alpha * fp * r3;
    let r4 = -(fp * h * r4);
    Ok(VirialSample {
        i: i_of(w, cutoff, h),
        i_prime: i_prime_of(w, dw, cutoff, h),
        i_doubleprime: p_term + r1 + r2 + r3 + r4,
        p_term,
        r1,
        r2,
        r3,
        r4,
    })
}

/// All virial quantities of a field; the decomposition needs the
/// quadratic cutoff.
pub fn virial_idoubleprime<T: Real>(
    field: &RadialField<T>,
    engine: &MomentEngine<T>,
    cutoff: &VirialCutoff<T>,
) -> Result<VirialSample<T>> {
    if cutoff.kind != CutoffKind::Quadratic {
        return Err(Error::Precondition("the I'' decomposition needs the QUADRATIC cutoff".into()));
    }
    let w = field.reduced();
    let dw = engine.transform().derivative(&w);
    sample_of(&w, &dw, engine, cutoff)
}

/// Direct form of `I''` (no decomposition), used to cross-check it.
pub fn virial_idoubleprime_direct<T: Real>(
    field: &RadialField<T>,
    engine: &MomentEngine<T>,
    cutoff: &VirialCutoff<T>,
) -> T {
    let grid = engine.grid();
    let h = grid.spacing();
    let w = field.reduced();
    let dw = engine.transform().derivative(&w);
    let alpha = engine.potential().alpha();
    let (mut a, mut b, mut c, mut d) = (T::zero(), T::zero(), T::zero(), T::zero());
    for j in 0..w.len() {
        let r = grid.nodes()[j];
        let m2 = w[j].norm_sqr();
        a = a + cutoff.d2[j] * (dw[j] - w[j] / r).norm_sqr();
        b = b + engine.v_weights()[j] * cutoff.d1[j] / r * m2 / (r * r);
        c = c + cutoff.laplacian[j] * m2 * m2 / (r * r);
        d = d + cutoff.bilaplacian[j] * m2;
    }
    let fp = four_pi::<T>();
    lit::<T>(4.0) * fp * h * a + lit::<T>(2.0) * alpha * fp * b - fp * h * c - fp * h * d
}

/// `(sup (6 - lap phi)_+, sup (-R^2 bilap phi)_+)` for the quadratic
/// cutoff. Both are scale invariant, so they are sampled at `R = 1` over
/// the blend `[1, 2]` and the plateau.
pub fn quadratic_envelope() -> (f64, f64) {
    static ENVELOPE: OnceLock<(f64, f64)> = OnceLock::new();
    *ENVELOPE.get_or_init(|| {
        let n = 20_000;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for i in 0..=n {
            let r = 1.0 + 1.5 * i as f64 / n as f64;
            let [_, d1, d2, d3, d4] = cutoff_profile(CutoffKind::Quadratic, 1.0, r);
            a = a.max(6.0 - (d2 + 2.0 * d1 / r));
            b = b.max(-(d4 + 4.0 * d3 / r));
        }
        (a, b)
    })
}

/// The constant in `I'' <= 4P + C sqrt(exterior mass beyond R)`.
///
/// Inside `R` the cutoff is exactly `r^2`, so only `R2` and `R4` can be
/// positive and both live outside `R`. With the radial bound
/// `|u(r)|^2 <= sqrt(M K) / (2 pi r^2)` this gives
/// `R2 + R4 <= (A sqrt(M K) / (2 pi) + B) m_ext / R^2` and
/// `m_ext <= sqrt(M m_ext)`, where `(A, B)` is [`quadratic_envelope`].
pub fn remainder_constant(mass: f64, kinetic: f64, radius: f64) -> f64 {
    let (a, b) = quadratic_envelope();
    (a * (mass * kinetic).sqrt() / (2.0 * std::f64::consts::PI) + b) * mass.sqrt() / (radius * radius)
}

/// Check `I'' <= 4P + C sqrt(exterior)`; the slack is the right side minus
/// the left.
pub fn remainder_bound_check<T: Real>(sample: &VirialSample<T>, mass: T, kinetic: T, exterior: T, radius: T) -> (bool, f64) {
    let c = remainder_constant(to_f64(mass), to_f64(kinetic), to_f64(radius));
    let rhs = to_f64(sample.p_term) + c * to_f64(exterior).max(0.0).sqrt();
    let slack = rhs - to_f64(sample.i_doubleprime);
    let scale = to_f64(sample.p_term).abs().max(1.0);
    (slack >= -1e-9 * scale, slack)
}

/// Maximal relative mismatch of central time differences against the
/// logged derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialConsistency {
    /// `max |dI/dt - I'| / max |I'|`.
    pub first: f64,
    /// `max |dI'/dt - I''| / max |I''|`.
    pub second: f64,
}

/// Compare central differences of `I` and `I'` against `I'` and `I''`
/// over interior samples. Sampling must be uniform.
pub fn virial_consistency(times: &[f64], i: &[f64], ip: &[f64], ipp: &[f64]) -> Result<VirialConsistency> {
    let n = times.len();
    if n < 5 || i.len() != n || ip.len() != n || ipp.len() != n {
        return Err(Error::Config("virial consistency needs at least 5 aligned samples".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::Config("virial consistency needs uniformly spaced samples".into()));
    }
    let rel = |f: &[f64], df: &[f64]| {
        let mut worst = 0.0f64;
        for k in 1..n - 1 {
            worst = worst.max(((f[k + 1] - f[k - 1]) / (2.0 * dt) - df[k]).abs());
        }
        let scale = df.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if worst == 0.0 {
            0.0
        } else {
            worst / scale
        }
    };
    Ok(VirialConsistency { first: rel(i, ip), second: rel(ip, ipp) })
}
