//! Radial split-step evolution with conservation monitoring and blow-up
//! and scattering diagnostics.

mod config;
mod diagnostics;
mod log;
mod propagator;

pub use config::PropagatorConfig;
pub use diagnostics::{log_virial_consistency, scattering_diagnostic, LogVirialConsistency, sign_persistence_check, DichotomyVerdict, SignPersistence, VerdictKind};
pub use log::{Checkpoint, Event, EventKind, TrajectoryLog, TrajectorySample, LOG_COLUMNS};
pub use propagator::{step, Propagator};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fields::{exterior_of_density, MomentEngine, PotentialSpec, RadialField};
use crate::functionals::FunctionalReport;
use crate::scalar::{lit, to_f64, Real};
use crate::virial::{build_cutoff, sample_of, CutoffKind, VirialCutoff};

/// Records over which kinetic growth must be monotone for a dt-floor stop
/// to count as blow-up.
pub const FLOOR_WINDOW: usize = 10;

fn measure<T: Real>(
    engine: &MomentEngine<T>,
    cutoff: &VirialCutoff<T>,
    w: &[Complex<T>],
    time: T,
    dt: T,
) -> Result<TrajectorySample<T>> {
    let moments = engine.moments_of(w)?;
    let report = FunctionalReport::new(moments);
    let dw = engine.transform().derivative(w);
    let virial = sample_of(w, &dw, engine, cutoff)?;
    let grid = engine.grid();
    let density: Vec<f64> = w.iter().map(|z| to_f64(z.norm_sqr())).collect();
    let exterior = exterior_of_density(&density, to_f64(grid.spacing()), to_f64(grid.r_max()) / 2.0);
    Ok(TrajectorySample {
        time,
        dt,
        mass: moments.mass,
        energy: report.energy,
        action: report.action,
        kinetic: moments.kinetic,
        quartic: moments.quartic,
        v_moment: moments.v_moment,
        p_value: report.p,
        i_value: report.i,
        h1k_sq: report.h1k_sq,
        l4_norm: moments.quartic.sqrt().sqrt(),
        l5_pow5: engine.l5_pow5_of(w),
        exterior_mass: lit(exterior),
        virial,
    })
}

/// `|E|`-like scale for relative energy drift: sum of magnitudes of the
/// energy's terms.
fn energy_scale<T: Real>(s: &TrajectorySample<T>) -> T {
    (s.kinetic + s.v_moment) / lit(2.0) + s.quartic / lit(4.0)
}

fn kinetic_rising<T: Real>(samples: &[TrajectorySample<T>]) -> bool {
    let n = samples.len();
    if n < 3 {
        return false;
    }
    let tail = &samples[n.saturating_sub(FLOOR_WINDOW)..];
    tail.windows(2).all(|p| p[1].kinetic > p[0].kinetic)
}

/// Evolve `initial` to `cfg.t_final` or until a terminal event.
///
/// Every `record_every` steps the state is measured; if the energy moved
/// by more than `energy_tolerance` per step (relative), the chunk is
/// discarded and redone with half the step. Running into `dt_min` with
/// the kinetic energy still rising ends the run with `DT_FLOOR`; without
/// that growth it is a numerical failure.
pub fn run<T: Real>(initial: &RadialField<T>, pot: &PotentialSpec<T>, cfg: &PropagatorConfig<T>) -> Result<TrajectoryLog<T>> {
    cfg.validate()?;
    let grid = initial.grid().clone();
    let mut prop = Propagator::new(grid.clone(), *pot)
        .with_sponge(cfg.sponge_width, cfg.sponge_strength)?
        .with_nonlinearity(cfg.nonlinear);
    let radius = cfg.virial_radius.unwrap_or(grid.r_max() / lit(4.0));
    let cutoff = build_cutoff(CutoffKind::Quadratic, radius, &grid)?;

    let mut w = initial.reduced();
    let mut dt = cfg.dt;
    let mut t = T::zero();
    let first = measure(prop.engine(), &cutoff, &w, t, dt)?;
    let k0 = first.kinetic;
    let mut log = TrajectoryLog {
        samples: vec![first],
        events: Vec::new(),
        checkpoints: Vec::new(),
        blowup_gradient_factor: cfg.blowup_gradient_factor,
    };
    if cfg.checkpoint_every > 0 {
        log.checkpoints.push(Checkpoint { record: 0, time: t, field: initial.clone() });
    }
    let mut contaminated = false;
    let horizon_slack = lit::<T>(1e-6);
    let mut trial = w.clone();

    loop {
        let remaining = cfg.t_final - t;
        if remaining <= horizon_slack * dt {
            log.events.push(Event { time: t, kind: EventKind::HorizonReached });
            break;
        }
        let steps_left = (remaining / dt - horizon_slack).ceil().to_usize().unwrap_or(1).max(1);
        let n = cfg.record_every.min(steps_left);
        trial.copy_from_slice(&w);
        let advanced = prop.advance(&mut trial, dt, n);
        let last = *log.samples.last().unwrap();
        let t_new = t + T::from_usize(n).unwrap() * dt;
        let accepted = match advanced {
            Ok(()) => {
                let s = measure(prop.engine(), &cutoff, &trial, t_new, dt)?;
                let scale = energy_scale(&last);
                let drift = if scale > T::zero() { (s.energy - last.energy).abs() / scale } else { T::zero() };
                (drift <= cfg.energy_tolerance * T::from_usize(n).unwrap()).then_some(s)
            }
            Err(Error::Numerical(_)) => None,
            Err(e) => return Err(e),
        };
        let Some(sample) = accepted else {
            let half = dt / lit(2.0);
            if half < cfg.dt_min {
                if kinetic_rising(&log.samples) {
                    log.events.push(Event { time: t, kind: EventKind::DtFloor });
                    break;
                }
                return Err(Error::Numerical(format!(
                    "time step floor {} reached at t = {t} without gradient growth",
                    cfg.dt_min
                )));
            }
            dt = half;
            continue;
        };
        std::mem::swap(&mut w, &mut trial);
        t = t_new;
        log.samples.push(sample);
        let record = log.samples.len() - 1;
        if cfg.checkpoint_every > 0 && record % cfg.checkpoint_every == 0 {
            let field = RadialField::from_reduced(grid.clone(), &w, initial.label())?;
            log.checkpoints.push(Checkpoint { record, time: t, field });
        }
        if !contaminated && sample.exterior_mass > cfg.contamination_fraction * sample.mass {
            contaminated = true;
            log.events.push(Event { time: t, kind: EventKind::BoundaryContamination });
        }
        if sample.kinetic > cfg.blowup_gradient_factor * k0 && k0 > T::zero() {
            log.events.push(Event { time: t, kind: EventKind::BlowupDetected });
            break;
        }
    }
    Ok(log)
}
