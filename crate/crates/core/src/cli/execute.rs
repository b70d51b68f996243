use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::{Command, RunConfig};
use crate::campaign::{classify_and_run, dichotomy_campaign, lemma_suite, Cell, SweepSpec};
use crate::dynamics::{log_virial_consistency, run, scattering_diagnostic, LogVirialConsistency, TrajectoryLog};
use crate::error::{Error, Result};
use crate::fields::{MomentEngine, RadialField, RadialGrid};
use crate::functionals::{classify, gn_quotient, j_ab, FunctionalReport, ScalePair};
use crate::groundstate::{shoot_ground_state, threshold_certificate, GroundState, ThresholdCertificate};

/// Exit status for a finished run with a scientific failure (a lemma
/// violation or a dichotomy mismatch).
pub const EXIT_SCIENTIFIC_FAILURE: i32 = 1;

/// Run the configured command, writing `config.ini`, `result.json`, any
/// CSVs and finally `manifest.json` into `out`. Returns 0 or
/// [`EXIT_SCIENTIFIC_FAILURE`]; errors carry their own exit code.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let start = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let echo = cfg.echo();
    write(&out.join("config.ini"), &echo)?;
    let status = match cfg.command {
        Command::GroundState => ground_state(cfg, out)?,
        Command::Functionals => functionals(cfg, out)?,
        Command::Classify => classify_cmd(cfg, out)?,
        Command::Evolve => evolve(cfg, out)?,
        Command::Campaign => campaign(cfg, out)?,
        Command::Lemmas => lemmas(cfg, out)?,
    };
    let manifest = json!({
        "program": "nlsk",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config": echo,
        "exit_status": status,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    write(&out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(status)
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn write_json(out: &Path, value: &impl Serialize) -> Result<()> {
    write(&out.join("result.json"), &(serde_json::to_string_pretty(value)? + "\n"))
}

fn say(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.verbose {
        eprintln!("{}", msg.as_ref());
    }
}

fn solve_ground_state(cfg: &RunConfig) -> Result<(GroundState<f64>, ThresholdCertificate<f64>)> {
    let grid = Arc::new(RadialGrid::new(cfg.ground.r_max, cfg.ground.n_points)?);
    let q = shoot_ground_state(grid, cfg.ground.bracket)?;
    let cert = threshold_certificate(&q)?;
    say(cfg, format!("ground state: Q(0) = {}, n0 = {}", q.center_value, cert.n0));
    Ok((q, cert))
}

/// Initial datum described by the `[field]` and `[grid]` sections.
pub fn initial_field(cfg: &RunConfig) -> Result<RadialField<f64>> {
    if let Some(path) = &cfg.field.path {
        return RadialField::read_csv(path);
    }
    let grid = Arc::new(RadialGrid::new(cfg.grid.r_max, cfg.grid.n_points)?);
    let spec = SweepSpec {
        family: cfg.field.family,
        seed: cfg.field.seed,
        r_max: cfg.grid.r_max,
        n_points: cfg.grid.n_points,
        ..SweepSpec::default()
    };
    let cell = Cell { index: 0, amplitude: cfg.field.amplitude, k: cfg.potential.k(), alpha: cfg.potential.alpha(), width: cfg.field.width };
    spec.trial_field(&grid, &cell)
}

fn ground_state(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (q, cert) = solve_ground_state(cfg)?;
    q.write(out, "ground_state", &cert)?;
    write_json(
        out,
        &json!({
            "q0": q.center_value,
            "residual": q.residual,
            "certificate": cert,
            "moments": q.moments,
            "gn_quotient": gn_quotient(&q.moments)?,
        }),
    )?;
    Ok(0)
}

fn functionals(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (_, cert) = solve_ground_state(cfg)?;
    let field = initial_field(cfg)?;
    let engine = MomentEngine::new(field.grid().clone(), cfg.potential);
    let moments = engine.moments(&field)?;
    let report = FunctionalReport::new(moments);
    let membership = classify(&report, cert.n0);
    say(cfg, format!("{}: S = {}, P = {}, {}", field.label(), report.action, report.p, membership.tag));
    let gn = if field.is_zero() { None } else { Some(gn_quotient(&moments)?) };
    write_json(
        out,
        &json!({
            "label": field.label(),
            "functionals": report,
            "membership": membership,
            "j_virial": j_ab(&moments, &ScalePair::virial()),
            "gn_quotient": gn,
        }),
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct Conservation {
    mass_drift: f64,
    energy_drift: f64,
    virial: Option<LogVirialConsistency>,
}

/// Relative drifts over the log, and the virial cross-check when the
/// sampling is uniform.
fn conservation(log: &TrajectoryLog<f64>) -> Conservation {
    let s0 = log.initial();
    let scale = (s0.kinetic + s0.v_moment) / 2.0 + s0.quartic / 4.0;
    let rel = |x: f64, x0: f64, sc: f64| if sc > 0.0 { (x - x0).abs() / sc } else { 0.0 };
    let mass_drift = log.samples.iter().map(|s| rel(s.mass, s0.mass, s0.mass)).fold(0.0, f64::max);
    let energy_drift = log.samples.iter().map(|s| rel(s.energy, s0.energy, scale)).fold(0.0, f64::max);
    let virial = log_virial_consistency(log).ok();
    Conservation { mass_drift, energy_drift, virial }
}

fn classify_cmd(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (_, cert) = solve_ground_state(cfg)?;
    let field = initial_field(cfg)?;
    let outcome = classify_and_run(&field, &cfg.potential, &cfg.propagator, cert.n0)?;
    outcome.log.write(out, "trajectory")?;
    say(cfg, format!("{}: {} -> {}", field.label(), outcome.membership.tag, outcome.verdict.kind));
    let failed = outcome.mismatch || outcome.sign_persistence.is_some_and(|s| !s.passed);
    write_json(
        out,
        &json!({
            "n0": cert.n0,
            "label": field.label(),
            "outcome": outcome,
            "conservation": conservation(&outcome.log),
        }),
    )?;
    Ok(if failed { EXIT_SCIENTIFIC_FAILURE } else { 0 })
}

fn evolve(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let field = initial_field(cfg)?;
    let log = run(&field, &cfg.potential, &cfg.propagator)?;
    log.write(out, "trajectory")?;
    let verdict = scattering_diagnostic(&log);
    say(cfg, format!("{}: {} ({})", field.label(), verdict.kind, verdict.summary));
    write_json(
        out,
        &json!({
            "label": field.label(),
            "samples": log.samples.len(),
            "events": log.events,
            "verdict": verdict,
            "conservation": conservation(&log),
        }),
    )?;
    Ok(0)
}

fn campaign(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let report = dichotomy_campaign(&cfg.sweep)?;
    report.write(out)?;
    let c = &report.counts;
    say(
        cfg,
        format!(
            "{} cells: {} N+ bounded, {} N- blow-up, {} mismatches, {} inconclusive, {} outside, {} failed, {} sign failures",
            c.cells, c.plus_bounded, c.minus_blowup, c.mismatches, c.inconclusive, c.outside, c.failed, c.sign_failures
        ),
    );
    Ok(if report.passed() { 0 } else { EXIT_SCIENTIFIC_FAILURE })
}

fn lemmas(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (q, cert) = solve_ground_state(cfg)?;
    let table = lemma_suite(&cfg.sweep, &q)?;
    for r in &table.rows {
        say(cfg, format!("{:28} {} ({} checks, {} failed)", r.name, if r.passed { "pass" } else { "FAIL" }, r.checked, r.failed));
    }
    write_json(out, &json!({ "n0": cert.n0, "lemmas": table }))?;
    Ok(if table.passed() { 0 } else { EXIT_SCIENTIFIC_FAILURE })
}
