use serde::Serialize;

use super::log::{EventKind, TrajectoryLog, TrajectorySample};
use crate::error::{Error, Result};
use crate::functionals::SetTag;
use crate::scalar::{to_f64, Real};
use crate::virial::{virial_consistency, VirialConsistency};

/// Bounded runs may not exceed this multiple of the initial kinetic energy.
pub const BOUNDED_KINETIC_FACTOR: f64 = 2.0;
/// Required decay of the L^4 norm over the usable horizon.
pub const L4_DECAY_FACTOR: f64 = 5.0;
/// Largest share of the accumulated L^5 norm allowed in the last quarter.
pub const L5_LAST_QUARTER: f64 = 0.05;
/// Relative slack (in units of the H^1_k norm squared) for sign checks.
pub const SIGN_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    #[serde(rename = "BLOWUP_WITNESS")]
    BlowupWitness,
    #[serde(rename = "BOUNDED_SCATTERING_CONSISTENT")]
    BoundedScatteringConsistent,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictKind::BlowupWitness => "BLOWUP_WITNESS",
            VerdictKind::BoundedScatteringConsistent => "BOUNDED_SCATTERING_CONSISTENT",
            VerdictKind::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Finite-horizon stand-in for the scattering / blow-up alternative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyVerdict {
    pub kind: VerdictKind,
    pub summary: String,
    pub terminal: Option<EventKind>,
    pub end_time: f64,
    pub contamination_time: Option<f64>,
    /// `sup K(t) / K(0)` over the usable window.
    pub kinetic_growth: f64,
    /// `||u(0)||_4 / ||u(t_end)||_4` over the usable window.
    pub l4_decay: f64,
    /// `int ||u||_5^5 dt` over the usable window.
    pub l5_total: f64,
    /// Share of `l5_total` accumulated in the last quarter of the window.
    pub l5_last_quarter: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Cumulative trapezoid integral of `l5_pow5` in time.
fn l5_cumulative<T: Real>(samples: &[TrajectorySample<T>]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for p in samples.windows(2) {
        let dt = to_f64(p[1].time - p[0].time);
        let area = 0.5 * dt * (to_f64(p[0].l5_pow5) + to_f64(p[1].l5_pow5));
        acc.push(acc.last().unwrap() + area);
    }
    acc
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&x| x <= t);
    if k == 0 {
        return values[0];
    }
    if k >= times.len() {
        return *values.last().unwrap();
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    values[k - 1] + s * (values[k] - values[k - 1])
}

/// Judge a finished trajectory.
///
/// Blow-up is read off the terminal event. Otherwise the boundedness,
/// L^4 decay and L^5 flattening tests are applied to the part of the run
/// before any boundary contamination; if they fail there the verdict is
/// inconclusive.
pub fn scattering_diagnostic<T: Real>(log: &TrajectoryLog<T>) -> DichotomyVerdict {
    let terminal = log.terminal().map(|e| e.kind);
    let contamination = log.first_event(EventKind::BoundaryContamination).map(|e| to_f64(e.time));
    let end = log.samples.last().map(|s| to_f64(s.time)).unwrap_or(0.0);
    let usable: Vec<&TrajectorySample<T>> = log
        .samples
        .iter()
        .filter(|s| contamination.is_none_or(|tc| to_f64(s.time) <= tc))
        .collect();
    let owned: Vec<TrajectorySample<T>> = usable.iter().map(|s| **s).collect();
    let k0 = to_f64(log.initial().kinetic);
    let sup_k = log.samples.iter().map(|s| to_f64(s.kinetic)).fold(0.0, f64::max);
    let sup_k_usable = owned.iter().map(|s| to_f64(s.kinetic)).fold(0.0, f64::max);
    let l4_0 = to_f64(log.initial().l4_norm);
    let l4_end = owned.last().map(|s| to_f64(s.l4_norm)).unwrap_or(l4_0);
    let cumulative = l5_cumulative(&owned);
    let times: Vec<f64> = owned.iter().map(|s| to_f64(s.time)).collect();
    let total = *cumulative.last().unwrap_or(&0.0);
    let window_end = *times.last().unwrap_or(&0.0);
    let at_three_quarters = interpolate(&times, &cumulative, 0.75 * window_end);
    let last_quarter = if total > 0.0 { (total - at_three_quarters) / total } else { 0.0 };

    let mut verdict = DichotomyVerdict {
        kind: VerdictKind::Inconclusive,
        summary: String::new(),
        terminal,
        end_time: end,
        contamination_time: contamination,
        kinetic_growth: ratio(sup_k_usable, k0),
        l4_decay: ratio(l4_0, l4_end),
        l5_total: total,
        l5_last_quarter: last_quarter,
    };
    let factor = to_f64(log.blowup_gradient_factor);
    match terminal {
        Some(EventKind::BlowupDetected) | Some(EventKind::DtFloor) => {
            verdict.kinetic_growth = ratio(sup_k, k0);
            let after_contamination = contamination.is_some_and(|tc| tc < end);
            if after_contamination {
                verdict.summary = format!("gradient growth {:.3e} at t = {end:.6} came after boundary contamination", verdict.kinetic_growth);
            } else {
                verdict.kind = VerdictKind::BlowupWitness;
                verdict.summary = if terminal == Some(EventKind::BlowupDetected) {
                    format!("kinetic energy grew {:.3e}x (threshold {factor}) by t = {end:.6}", verdict.kinetic_growth)
                } else {
                    format!(
                        "time step floor hit at t = {end:.6} with monotone kinetic growth ({:.3e}x); finite-time blow-up and sequential gradient blow-up are indistinguishable here",
                        verdict.kinetic_growth
                    )
                };
            }
        }
        Some(EventKind::HorizonReached) => {
            let bounded = verdict.kinetic_growth <= BOUNDED_KINETIC_FACTOR;
            let decays = verdict.l4_decay >= L4_DECAY_FACTOR;
            let flat = last_quarter < L5_LAST_QUARTER;
            if owned.len() >= 2 && bounded && decays && flat {
                verdict.kind = VerdictKind::BoundedScatteringConsistent;
                verdict.summary = format!(
                    "sup K/K0 = {:.4}, L4 decay {:.3}x, last-quarter L5 share {:.4} over [0, {window_end:.4}]",
                    verdict.kinetic_growth, verdict.l4_decay, last_quarter
                );
            } else {
                let mut why = Vec::new();
                if !bounded {
                    why.push(format!("sup K/K0 = {:.4} > {BOUNDED_KINETIC_FACTOR}", verdict.kinetic_growth));
                }
                if !decays {
                    why.push(format!("L4 decay {:.3}x < {L4_DECAY_FACTOR}", verdict.l4_decay));
                }
                if !flat {
                    why.push(format!("last-quarter L5 share {last_quarter:.4} >= {L5_LAST_QUARTER}"));
                }
                if let Some(tc) = contamination {
                    why.push(format!("window cut at boundary contamination t = {tc:.4}"));
                }
                verdict.summary = why.join("; ");
            }
        }
        _ => verdict.summary = "no terminal event".into(),
    }
    verdict
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignPersistence {
    pub passed: bool,
    pub initial: SetTag,
    /// Most adverse `P(t) / h1k_sq(t)` seen (minimum for N_PLUS, maximum
    /// for N_MINUS).
    pub worst: f64,
}

/// Does `P` keep the sign it had at `t = 0` at every recorded time?
pub fn sign_persistence_check<T: Real>(log: &TrajectoryLog<T>, n0: T) -> Result<SignPersistence> {
    let first = log.initial();
    if !(first.action < n0) {
        return Err(Error::Precondition("initial state is not below the threshold".into()));
    }
    let initial = if first.p_value >= T::zero() { SetTag::NPlus } else { SetTag::NMinus };
    let normalized = |s: &TrajectorySample<T>| {
        let h = to_f64(s.h1k_sq);
        if h > 0.0 {
            to_f64(s.p_value) / h
        } else {
            0.0
        }
    };
    let values = log.samples.iter().map(normalized);
    let (passed, worst) = match initial {
        SetTag::NPlus => {
            let worst = values.fold(f64::INFINITY, f64::min);
            (worst >= -SIGN_TOLERANCE, worst)
        }
        _ => {
            let worst = values.fold(f64::NEG_INFINITY, f64::max);
            (worst < SIGN_TOLERANCE, worst)
        }
    };
    Ok(SignPersistence { passed, initial, worst })
}

/// Virial cross-check of a log. `valid` stops at boundary contamination,
/// after which the truncated model no longer stands in for whole space;
/// `full` spans the whole log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogVirialConsistency {
    pub valid: VirialConsistency,
    pub valid_until: f64,
    pub full: VirialConsistency,
}

/// Needs uniform sampling and at least 5 samples before contamination.
pub fn log_virial_consistency<T: Real>(log: &TrajectoryLog<T>) -> Result<LogVirialConsistency> {
    let col = |f: fn(&TrajectorySample<T>) -> T| log.samples.iter().map(|s| to_f64(f(s))).collect::<Vec<f64>>();
    let (t, i, ip, ipp) = (
        col(|s| s.time),
        col(|s| s.virial.i),
        col(|s| s.virial.i_prime),
        col(|s| s.virial.i_doubleprime),
    );
    let full = virial_consistency(&t, &i, &ip, &ipp)?;
    let end = log.first_event(EventKind::BoundaryContamination).map(|e| to_f64(e.time));
    let n = end.map_or(t.len(), |tc| t.iter().take_while(|&&x| x <= tc).count());
    let valid = virial_consistency(&t[..n], &i[..n], &ip[..n], &ipp[..n])?;
    Ok(LogVirialConsistency { valid, valid_until: t[n - 1], full })
}
