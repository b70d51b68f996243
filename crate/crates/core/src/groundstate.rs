//! Free ground state `Q` of `Delta Q - Q + Q^3 = 0` by shooting, the
//! threshold it defines, and the translated-ground-state probes.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{compute_moments, offcenter_v_moment, MomentSet, PotentialSpec, RadialField, RadialGrid, SineTransform};
use crate::functionals::{action, i_k, p_k, ScalePair};
use crate::scalar::{lit, to_f64, Real};

/// Bracket for `Q(0)` used when none is given.
pub const DEFAULT_BRACKET: (f64, f64) = (4.0, 4.6);
/// Largest acceptable ODE residual.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Largest RK4 step.
const MAX_STEP: f64 = 1e-3;
/// Bisection stops once the bracket is this narrow.
const BISECTION_WIDTH: f64 = 1e-12;
/// Largest acceptable relative deviation of the Pohozaev ratios.
pub const POHOZAEV_TOL: f64 = 1e-3;
/// `Q` must fall below this before the wall.
const TAIL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GroundState<T: Real> {
    pub profile: RadialField<T>,
    pub center_value: T,
    /// Max of `|w'' - w + w^3 / r^2|` over nodes with `r < r_max / 2`.
    pub residual: T,
    /// Moments at `k = 0`.
    pub moments: MomentSet<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdCertificate<T> {
    pub n0: T,
    pub pohozaev_kinetic_ratio: T,
    pub pohozaev_quartic_ratio: T,
    pub p0_at_q: T,
    pub i0_at_q: T,
}

/// Outcome of integrating one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// `w` went negative: `Q(0)` too large.
    Crosses,
    /// `w` turned upward away from the origin: `Q(0)` too small.
    Diverges,
    /// Neither happened before the wall.
    Decays,
}

/// RK4 trajectory of `w'' = w - w^3 / r^2`, `w(0) = 0`, `w'(0) = q0`,
/// sampled at the grid nodes. Stops at the first node where the shot is
/// classified, returning the samples up to there.
fn integrate(q0: f64, h: f64, n: usize, stop_early: bool) -> (Vec<f64>, Vec<f64>, Shot) {
    let sub = (h / MAX_STEP).ceil().max(10.0) as usize;
    let dr = h / sub as f64;
    let rhs = |r: f64, w: f64| if r == 0.0 { 0.0 } else { w - w * w * w / (r * r) };
    let (mut r, mut w, mut wp) = (0.0f64, 0.0f64, q0);
    let mut ws = Vec::with_capacity(n);
    let mut wps = Vec::with_capacity(n);
    let mut verdict = Shot::Decays;
    for j in 1..=n {
        for _ in 0..sub {
            let (k1w, k1p) = (wp, rhs(r, w));
            let (k2w, k2p) = (wp + 0.5 * dr * k1p, rhs(r + 0.5 * dr, w + 0.5 * dr * k1w));
            let (k3w, k3p) = (wp + 0.5 * dr * k2p, rhs(r + 0.5 * dr, w + 0.5 * dr * k2w));
            let (k4w, k4p) = (wp + dr * k3p, rhs(r + dr, w + dr * k3w));
            w += dr / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            wp += dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            r += dr;
        }
        // resync to the node to keep rounding from accumulating
        r = j as f64 * h;
        ws.push(w);
        wps.push(wp);
        if verdict == Shot::Decays {
            if w < 0.0 {
                verdict = Shot::Crosses;
            } else if wp > 0.0 && r > 1.0 {
                verdict = Shot::Diverges;
            }
            if verdict != Shot::Decays && stop_early {
                break;
            }
        }
    }
    (ws, wps, verdict)
}

/// Solve for the ground state on `grid` by bisection on `Q(0)`.
pub fn shoot_ground_state<T: Real>(grid: Arc<RadialGrid<T>>, bracket: (f64, f64)) -> Result<GroundState<T>> {
    let h = to_f64(grid.spacing());
    let n = grid.n_points();
    let shot = |q0: f64| integrate(q0, h, n, true).2;

    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("bracket ({lo}, {hi}) must satisfy 0 < lo < hi")));
    }
    // Widen a bracket that misses the sign change a few times before giving up.
    let mut tries = 0;
    loop {
        let (s_lo, s_hi) = (shot(lo), shot(hi));
        if s_lo == Shot::Diverges && s_hi == Shot::Crosses {
            break;
        }
        tries += 1;
        if tries > 6 {
            return Err(Error::Bracketing(format!("no sign change of the shooting functional in ({lo}, {hi})")));
        }
        let width = hi - lo;
        if s_lo != Shot::Diverges {
            lo = (lo - width).max(lo / 2.0);
        }
        if s_hi != Shot::Crosses {
            hi += width;
        }
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shot(mid) {
            Shot::Diverges => lo = mid,
            Shot::Crosses => hi = mid,
            Shot::Decays => {
                lo = mid;
                hi = mid;
            }
        }
    }
    let q0 = 0.5 * (lo + hi);
    let w = patched_profile(q0, lo, hi, h, n)?;

    let r_max = to_f64(grid.r_max());
    let residual = spectral_residual(&w, r_max);
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::Convergence(format!("ground-state residual {residual:e} exceeds {RESIDUAL_TOL:e}")));
    }
    let tail = w[n - 1] / (n as f64 * h);
    if !(tail < TAIL_FLOOR) {
        return Err(Error::Convergence(format!(
            "ground state is still {tail:e} at the wall; increase r_max"
        )));
    }
    let values: Vec<Complex<T>> =
        w.iter().enumerate().map(|(j, &w)| Complex::new(lit(w / ((j + 1) as f64 * h)), T::zero())).collect();
    let profile = RadialField::new(grid, values, "ground_state")?;
    let moments = compute_moments(&profile, &PotentialSpec::free())?;
    Ok(GroundState { profile, center_value: lit(q0), residual: lit(residual), moments })
}

/// Trajectory for `q0`, continued by the decaying linear tail `A e^{-r}`.
///
/// Past the core the shot is `A e^{-r}` plus a small multiple of the
/// growing mode; that multiple is fixed from `(w, w')` at a matching node
/// and removed as `B sinh(r)` up to the node, so value and slope are
/// continuous there.
fn patched_profile(q0: f64, lo: f64, hi: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    let (w, wp, _) = integrate(q0, h, n, false);
    let (wl, _, _) = integrate(lo, h, n, false);
    let (wh, _, _) = integrate(hi, h, n, false);
    // The bracketing shots agree until the unstable mode takes over.
    let split = (0..n).find(|&j| (wl[j] - wh[j]).abs() > 1e-3 * w[j].abs()).unwrap_or(n);
    let start = ((1.0 / h).ceil() as usize).min(split);
    let m = (start..split)
        .min_by(|&i, &j| (w[i] + wp[i]).abs().total_cmp(&(w[j] + wp[j]).abs()))
        .ok_or_else(|| Error::Convergence("shooting never resolved the decaying branch".into()))?;
    let rm = (m + 1) as f64 * h;
    let growing = (w[m] + wp[m]) * (-rm).exp();
    let amp = (w[m] - growing * rm.sinh()) * rm.exp();
    let mut out = w;
    for (j, v) in out.iter_mut().enumerate() {
        let r = (j + 1) as f64 * h;
        *v = if j <= m { *v - growing * r.sinh() } else { amp * (-r).exp() };
    }
    Ok(out)
}

/// `max |w'' - w + w^3 / r^2|` over `r < r_max / 2`, with `w''` spectral.
fn spectral_residual(w: &[f64], r_max: f64) -> f64 {
    let n = w.len();
    let grid = RadialGrid::new_unchecked(r_max, n);
    let t = SineTransform::new(&grid);
    let wc: Vec<Complex<f64>> = w.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let c = t.forward(&wc);
    let c2: Vec<Complex<f64>> = c.iter().zip(t.wavenumbers()).map(|(c, &k)| -c * k * k).collect();
    let wpp = t.inverse(&c2);
    grid.nodes()
        .iter()
        .zip(w)
        .zip(&wpp)
        .filter(|((&r, _), _)| r < r_max / 2.0)
        .map(|((&r, &w), d)| (d.re - w + w * w * w / (r * r)).abs())
        .fold(0.0, f64::max)
}

/// Pohozaev ratios and the threshold `n0 = S_0(Q)`.
pub fn threshold_certificate<T: Real>(q: &GroundState<T>) -> Result<ThresholdCertificate<T>> {
    let m = &q.moments;
    if !(m.mass > T::zero()) {
        return Err(Error::Inconsistency("ground state has zero mass".into()));
    }
    let cert = ThresholdCertificate {
        n0: action(m),
        pohozaev_kinetic_ratio: m.kinetic / m.mass,
        pohozaev_quartic_ratio: m.quartic / m.mass,
        p0_at_q: p_k(m),
        i0_at_q: i_k(m),
    };
    let tol: T = lit(POHOZAEV_TOL);
    let kin = (cert.pohozaev_kinetic_ratio / lit(3.0) - T::one()).abs();
    let quart = (cert.pohozaev_quartic_ratio / lit(4.0) - T::one()).abs();
    if !(kin <= tol && quart <= tol) {
        return Err(Error::Inconsistency(format!(
            "Pohozaev ratios {} and {} are off by more than {POHOZAEV_TOL}; refine the grid",
            cert.pohozaev_kinetic_ratio, cert.pohozaev_quartic_ratio
        )));
    }
    Ok(cert)
}

#[derive(Serialize)]
struct Sidecar {
    q0: f64,
    residual: f64,
    n0: f64,
    ratios: Ratios,
}

#[derive(Serialize)]
struct Ratios {
    kinetic: f64,
    quartic: f64,
    p0: f64,
    i0: f64,
}

impl<T: Real> GroundState<T> {
    /// Write `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str, cert: &ThresholdCertificate<T>) -> Result<()> {
        self.profile.write_csv(dir.join(format!("{stem}.csv")))?;
        let side = Sidecar {
            q0: to_f64(self.center_value),
            residual: to_f64(self.residual),
            n0: to_f64(cert.n0),
            ratios: Ratios {
                kinetic: to_f64(cert.pohozaev_kinetic_ratio),
                quartic: to_f64(cert.pohozaev_quartic_ratio),
                p0: to_f64(cert.p0_at_q),
                i0: to_f64(cert.i0_at_q),
            },
        };
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&side)? + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// One entry of the translated-ground-state sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaPoint<T> {
    pub shift: T,
    pub v_moment: T,
    pub theta: T,
    pub action: T,
}

/// For each shift `d`, the `theta` with `K^{a,b}(theta tau_d Q) = 0` and the
/// action there. Only the potential moment depends on `d`; every other
/// moment scales as a power of `theta`, so the equation is linear in
/// `theta^2` and solved in closed form.
pub fn theta_sequence<T: Real>(
    q: &GroundState<T>,
    pot: &PotentialSpec<T>,
    shifts: &[T],
    pair: &ScalePair<T>,
) -> Result<Vec<ThetaPoint<T>>> {
    if shifts.iter().any(|&d| !(d > T::zero())) || shifts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("shifts must be positive and increasing".into()));
    }
    let m = &q.moments;
    let (a, b) = (pair.a, pair.b);
    let two: T = lit(2.0);
    let three: T = lit(3.0);
    let four: T = lit(4.0);
    let c_kin = (two * a + b) / two;
    let c_mass = (two * a + three * b) / two;
    let c_v = c_mass - pot.alpha() * b / two;
    let c_q = (four * a + three * b) / four;
    let base = c_kin * m.kinetic + c_mass * m.mass;
    let mut out = Vec::with_capacity(shifts.len());
    for &d in shifts {
        let v = offcenter_v_moment(&q.profile, pot, d)?;
        let theta_sq = (base + c_v * v) / (c_q * m.quartic);
        let theta = if pot.is_free() { T::one() } else { theta_sq.sqrt() };
        if !pot.is_free() && !(theta > T::one() && theta < lit(10.0)) {
            return Err(Error::RootFinding(format!("no root theta in (1, 10) at shift {d} (theta^2 = {theta_sq})")));
        }
        let t2 = theta * theta;
        let s = t2 * (m.kinetic + v + m.mass) / two - t2 * t2 * m.quartic / four;
        out.push(ThetaPoint { shift: d, v_moment: v, theta, action: s });
    }
    Ok(out)
}

/// Margins of the two strict inequalities behind non-attainment, for `Q`
/// translated by `shift`: the drop of `P` and of `J^{3,-2}` relative to the
/// centred profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonAttainmentReport<T> {
    pub shift: T,
    pub v_centered: T,
    pub v_shifted: T,
    /// `P(Q) - P(tau Q) = alpha (v_0 - v_d)`.
    pub p_margin: T,
    /// `J(Q) - J(tau Q) = (2 - alpha)(v_0 - v_d) / 4`; identically 0 at alpha = 2.
    pub j_margin: T,
    pub p_strict: bool,
    pub j_strict: bool,
}

pub fn non_attainment_probe<T: Real>(
    q: &GroundState<T>,
    pot: &PotentialSpec<T>,
    shift: T,
) -> Result<NonAttainmentReport<T>> {
    let v0 = compute_moments(&q.profile, pot)?.v_moment;
    let vd = offcenter_v_moment(&q.profile, pot, shift)?;
    let dv = v0 - vd;
    let p_margin = pot.alpha() * dv;
    let j_margin = pot.weight_exponent() * dv / lit(4.0);
    Ok(NonAttainmentReport {
        shift,
        v_centered: v0,
        v_shifted: vd,
        p_margin,
        j_margin,
        p_strict: p_margin > T::zero(),
        j_strict: j_margin > T::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shots_on_either_side_of_the_root() {
        let h = 40.0 / 4096.0;
        assert_eq!(integrate(4.0, h, 4095, true).2, Shot::Diverges);
        assert_eq!(integrate(4.6, h, 4095, true).2, Shot::Crosses);
        assert_eq!(integrate(4.3374 + 0.1, h, 4095, true).2, Shot::Crosses);
        assert_eq!(integrate(4.3374 - 0.1, h, 4095, true).2, Shot::Diverges);
        // small amplitude: the -w term wins and the shot turns upward
        assert_eq!(integrate(0.01, h, 4095, true).2, Shot::Diverges);
    }

    #[test]
    fn bad_bracket_is_reported() {
        let grid = Arc::new(RadialGrid::<f64>::new(40.0, 1023).unwrap());
        // both ends below the root, and widening cannot reach it in time
        let err = shoot_ground_state(grid, (1.0, 1.0001)).unwrap_err();
        assert!(matches!(err, Error::Bracketing(_)), "{err}");
    }
}
