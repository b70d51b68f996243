//! Acceptance suite: one pass/fail line per criterion, with runtimes.
//!
//! Runs as a plain binary (no libtest harness) so the criteria execute in
//! order and share the ground state and the small-data trajectory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nlsk::campaign::{dichotomy_campaign, lemma_suite, theta_slope, Prediction, SweepSpec, TrialFamily, LEMMA_PAIRS};
use nlsk::cli::{execute, initial_field, RunConfig};
use nlsk::dynamics::{log_virial_consistency, run, VerdictKind};
use nlsk::fields::{compute_moments, PotentialSpec, RadialField};
use nlsk::functionals::{k_ab, scaled_action, scaling_exponents, ScalePair};
use nlsk::groundstate::{shoot_ground_state, theta_sequence, threshold_certificate, GroundState};
use nlsk::virial::{build_cutoff, virial_idoubleprime, CutoffKind};
use nlsk::{Grid, Moments};

const TOL_RESIDUAL: f64 = 1e-8;
const TOL_POHOZAEV: f64 = 1e-4;
const TOL_N0: f64 = 1e-4;
const TOL_FD: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;
const TOL_THETA_SLOPE: f64 = 0.15;
const TOL_THETA_ACTION: f64 = 1e-3;
const TOL_MASS: f64 = 1e-8;
const TOL_ENERGY: f64 = 1e-6;
const TOL_VIRIAL: f64 = 1e-3;
const REMAINDER_DECAY: f64 = 2.0;
const REMAINDER_FLOOR: f64 = 1e-12;
/// Cutoff radii for the decay check; the ladder starts past the bulk of the
/// small-data solution up to t = 2.
const DECAY_RADII: [f64; 3] = [4.0, 8.0, 16.0];
const BLOWUP_GROWTH: f64 = 100.0;
const BOUNDED_GROWTH: f64 = 2.0;
const L4_DECAY: f64 = 5.0;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> RunConfig {
    RunConfig::from_file(&configs().join(name), None).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Plain RK4 shooting for `w'' = w - w^3 / r^2` with bisection on `Q(0)`,
/// and the mass `4 pi int w^2 dr` by Simpson's rule up to the point where
/// the best shot is closest to zero.
fn ground_state_oracle() -> (f64, f64) {
    let h = 1e-3;
    let shoot = |q0: f64, keep: bool| -> (bool, Vec<f64>) {
        let f = |r: f64, w: f64, dw: f64| (dw, w - w * w * w / (r * r));
        let mut r = h;
        let mut w = q0 * h + (q0 - q0 * q0 * q0) * h * h * h / 6.0;
        let mut dw = q0 + (q0 - q0 * q0 * q0) * h * h / 2.0;
        let mut path = vec![0.0, w];
        while r < 30.0 {
            let (k1, l1) = f(r, w, dw);
            let (k2, l2) = f(r + h / 2.0, w + h / 2.0 * k1, dw + h / 2.0 * l1);
            let (k3, l3) = f(r + h / 2.0, w + h / 2.0 * k2, dw + h / 2.0 * l2);
            let (k4, l4) = f(r + h, w + h * k3, dw + h * l3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            dw += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            r += h;
            if keep {
                path.push(w);
            }
            if w < 0.0 {
                return (true, path);
            }
            if dw > 0.0 && r > 2.0 {
                return (false, path);
            }
        }
        (false, path)
    };
    let (mut lo, mut hi) = (4.0, 4.6);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if shoot(mid, false).0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (_, path) = shoot(lo, true);
    let end = path.iter().enumerate().skip(10).min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
    let end = end - end % 2;
    let mut s = path[0].powi(2) + path[end].powi(2);
    for (i, w) in path.iter().enumerate().take(end).skip(1) {
        s += w * w * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (lo, 4.0 * std::f64::consts::PI * s * h / 3.0)
}

fn c1_ground_state(q: &GroundState<f64>, elapsed: Duration) -> Verdict {
    let cert = threshold_certificate(q).unwrap();
    let (q0_oracle, n0_oracle) = ground_state_oracle();
    let kin = (cert.pohozaev_kinetic_ratio / 3.0 - 1.0).abs();
    let quart = (cert.pohozaev_quartic_ratio / 4.0 - 1.0).abs();
    let n0_err = (cert.n0 / n0_oracle - 1.0).abs();
    let mass_err = (cert.n0 / q.moments.mass - 1.0).abs();
    let passed = q.residual < TOL_RESIDUAL
        && kin < TOL_POHOZAEV
        && quart < TOL_POHOZAEV
        && n0_err < TOL_N0
        && mass_err < TOL_N0
        && elapsed.as_secs_f64() < 10.0;
    verdict(
        passed,
        format!(
            "solved in {:.3} s, Q(0) = {:.12} (oracle {q0_oracle:.12}), residual {:.2e}, Pohozaev errors {kin:.2e} / {quart:.2e}, \
             n0 = {:.8} (oracle {n0_oracle:.8}, rel {n0_err:.2e})",
            elapsed.as_secs_f64(),
            q.center_value,
            q.residual,
            cert.n0
        ),
    )
}

fn derivative_scale(m: &Moments, s: &ScalePair<f64>, alpha: f64) -> f64 {
    let [ek, ev, em, eq] = scaling_exponents(s, alpha);
    (0.5 * ek * m.kinetic).abs() + (0.5 * ev * m.v_moment).abs() + (0.5 * em * m.mass).abs() + (0.25 * eq * m.quartic).abs()
}

fn c2_derivative_identity() -> Verdict {
    let grid = Arc::new(Grid::new(40.0, 2047).unwrap());
    let families = [TrialFamily::Gaussian, TrialFamily::Sech, TrialFamily::RandomBump, TrialFamily::Gaussian];
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 0..20 {
        let spec = SweepSpec { family: families[i % 4], seed: 17, r_max: 40.0, n_points: 2047, ..SweepSpec::default() };
        let cell = nlsk::campaign::Cell {
            index: i,
            amplitude: 0.25 + 0.3 * i as f64,
            k: [0.0, 0.25, 1.0][i % 3],
            alpha: [1.25, 1.5, 2.0][(i / 3) % 3],
            width: [0.5, 1.0, 2.0][(i / 2) % 3],
        };
        let pot = PotentialSpec::new(cell.k, cell.alpha).unwrap();
        let field = spec.trial_field(&grid, &cell).unwrap();
        let m = compute_moments(&field, &pot).unwrap();
        for &(a, b) in &LEMMA_PAIRS {
            let s = ScalePair::new(a, b).unwrap();
            let fd = (scaled_action(&m, &s, FD_STEP, cell.alpha) - scaled_action(&m, &s, -FD_STEP, cell.alpha)) / (2.0 * FD_STEP);
            worst = worst.max((fd - k_ab(&m, &s)).abs() / derivative_scale(&m, &s, cell.alpha));
            checked += 1;
        }
    }
    verdict(worst < TOL_FD && checked == 100, format!("{checked} checks, worst relative error {worst:.2e}"))
}

fn c3_lemma_bounds(q: &GroundState<f64>) -> Verdict {
    let cfg = shipped("lemmas.ini");
    let table = lemma_suite(&cfg.sweep, q).unwrap();
    let upper = table.row("p_upper_bound").unwrap();
    let lower = table.row("p_lower_bound").unwrap();
    let others: Vec<&str> = table.rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    let passed = upper.failed == 0 && lower.failed == 0 && upper.checked > 0 && lower.checked > 0 && table.states >= 200;
    verdict(
        passed,
        format!(
            "{} states ({} N+, {} N-): upper bound {}/{} ok, lower bound {}/{} ok; other failing rows: {:?}",
            table.states,
            table.n_plus,
            table.n_minus,
            upper.checked - upper.failed,
            upper.checked,
            lower.checked - lower.failed,
            lower.checked,
            others
        ),
    )
}

fn c4_theta(q: &GroundState<f64>) -> Verdict {
    let n0 = threshold_certificate(q).unwrap().n0;
    let shifts = [5.0, 10.0, 20.0, 40.0];
    let mut slopes_ok = true;
    let mut lines = Vec::new();
    let mut action_err = f64::NAN;
    for k in [0.25, 0.5, 1.0] {
        for alpha in [1.25, 1.5, 2.0] {
            let pot = PotentialSpec::new(k, alpha).unwrap();
            let pts = theta_sequence(q, &pot, &shifts, &ScalePair::virial()).unwrap();
            let decreasing = pts.windows(2).all(|w| w[1].theta < w[0].theta) && pts.iter().all(|p| p.theta > 1.0);
            let slope = theta_slope(&pts[1..]);
            let ok = decreasing && (slope / -alpha - 1.0).abs() <= TOL_THETA_SLOPE;
            slopes_ok &= ok;
            let err = (pts[3].action / n0 - 1.0).abs();
            if k == 0.5 && alpha == 1.5 {
                action_err = err;
            }
            lines.push(format!("k={k} a={alpha}: slope {slope:.3}{} S err {err:.1e}", if ok { "" } else { " FAIL" }));
        }
    }
    let passed = slopes_ok && action_err < TOL_THETA_ACTION;
    verdict(passed, format!("at k=0.5, alpha=1.5 |S/n0 - 1| = {action_err:.3e} at shift 40; {}", lines.join("; ")))
}

struct SmallRun {
    log: nlsk::Log,
    elapsed: Duration,
}

fn small_data_run() -> SmallRun {
    let mut cfg = shipped("evolve.ini");
    // Keep the field at t = 2 for the remainder-decay check.
    cfg.propagator.checkpoint_every = 200;
    let field = initial_field(&cfg).unwrap();
    let t = Instant::now();
    let log = run(&field, &cfg.potential, &cfg.propagator).unwrap();
    SmallRun { log, elapsed: t.elapsed() }
}

fn c5_conservation(r: &SmallRun) -> Verdict {
    let s0 = r.log.initial();
    let mass = r.log.samples.iter().map(|s| (s.mass / s0.mass - 1.0).abs()).fold(0.0, f64::max);
    let energy = r.log.samples.iter().map(|s| ((s.energy - s0.energy) / s0.energy).abs()).fold(0.0, f64::max);
    let t_end = r.log.samples.last().unwrap().time;
    let passed = mass < TOL_MASS && energy < TOL_ENERGY && (t_end - 20.0).abs() < 1e-6 && r.elapsed.as_secs_f64() < 60.0;
    verdict(
        passed,
        format!("t = {t_end:.3} in {:.1} s, mass drift {mass:.2e}, energy drift {energy:.2e}", r.elapsed.as_secs_f64()),
    )
}

fn c6_virial(r: &SmallRun) -> Verdict {
    let c = log_virial_consistency(&r.log).unwrap();
    let signs = r.log.samples.iter().all(|s| s.virial.r1 <= 0.0 && s.virial.r3 <= 0.0);
    let pot = PotentialSpec::new(0.5, 1.5).unwrap();
    let mut decays = Vec::new();
    let mut decay_ok = true;
    let states: Vec<(f64, &RadialField<f64>)> = r.log.checkpoints.iter().take(2).map(|c| (c.time, &c.field)).collect();
    for (time, field) in &states {
        let engine = nlsk::fields::MomentEngine::new(field.grid().clone(), pot);
        let samples: Vec<(f64, f64)> = DECAY_RADII
            .iter()
            .map(|&radius| {
                let cutoff = build_cutoff(CutoffKind::Quadratic, radius, field.grid()).unwrap();
                let s = virial_idoubleprime(field, &engine, &cutoff).unwrap();
                (s.remainders().iter().map(|x| x.abs()).sum(), s.p_term.abs())
            })
            .collect();
        let mut parts = Vec::new();
        for w in samples.windows(2) {
            let ((a, _), (b, p)) = (w[0], w[1]);
            // Below the roundoff floor the remainder has already vanished.
            let converged = b <= REMAINDER_FLOOR * p;
            decay_ok &= converged || a >= REMAINDER_DECAY * b;
            parts.push(if converged { "at floor".to_string() } else { format!("x{:.1}", a / b) });
        }
        decays.push(format!("t={time:.1}: {}", parts.join(", ")));
    }
    let passed = c.valid.first < TOL_VIRIAL
        && c.valid.second < TOL_VIRIAL
        && signs
        && decay_ok
        && states.len() == 2
        && r.elapsed.as_secs_f64() < 120.0;
    verdict(
        passed,
        format!(
            "up to contamination (t = {:.2}): {:.2e} / {:.2e} (whole run {:.2e} / {:.2e}); R1, R3 <= 0 at all {} samples: {signs}; \
             remainder decay per doubling of R: {}",
            c.valid_until,
            c.valid.first,
            c.valid.second,
            c.full.first,
            c.full.second,
            r.log.samples.len(),
            decays.join(", ")
        ),
    )
}

fn c7_campaign() -> Verdict {
    let cfg = shipped("campaign.ini");
    let report = dichotomy_campaign(&cfg.sweep).unwrap();
    let mut problems = Vec::new();
    let (mut minus, mut plus, mut outside) = (0, 0, 0);
    let (mut min_growth, mut max_bounded_growth, mut min_l4) = (f64::INFINITY, 0.0f64, f64::INFINITY);
    for cell in &report.cells {
        let Some(o) = &cell.outcome else {
            problems.push(format!("{}: {}", cell.label, cell.error.as_deref().unwrap_or("failed")));
            continue;
        };
        let v = &o.verdict;
        match o.prediction {
            Prediction::Blowup => {
                minus += 1;
                min_growth = min_growth.min(v.kinetic_growth);
                if v.kind != VerdictKind::BlowupWitness || v.kinetic_growth < BLOWUP_GROWTH {
                    problems.push(format!("{}: N- but {} (growth {:.1})", cell.label, v.kind, v.kinetic_growth));
                }
            }
            Prediction::Bounded => {
                plus += 1;
                max_bounded_growth = max_bounded_growth.max(v.kinetic_growth);
                min_l4 = min_l4.min(v.l4_decay);
                if v.kind != VerdictKind::BoundedScatteringConsistent
                    || v.kinetic_growth > BOUNDED_GROWTH
                    || v.l4_decay < L4_DECAY
                {
                    problems.push(format!("{}: N+ but {} ({})", cell.label, v.kind, v.summary));
                }
            }
            Prediction::None => outside += 1,
        }
        if o.sign_persistence.is_some_and(|s| !s.passed) {
            problems.push(format!("{}: P changed sign", cell.label));
        }
    }
    let passed = problems.is_empty() && report.counts.mismatches == 0 && report.lemmas.passed();
    verdict(
        passed,
        format!(
            "{} cells: {plus} N+, {minus} N-, {outside} outside; mismatches {}; min N- growth {min_growth:.1}x, \
             max N+ growth {max_bounded_growth:.3}x, min N+ L4 decay {min_l4:.2}x; lemma suite {}; problems: {:?}",
            report.counts.cells,
            report.counts.mismatches,
            if report.lemmas.passed() { "passed" } else { "FAILED" },
            problems
        ),
    )
}

fn c8_mutation(q: &GroundState<f64>) -> Verdict {
    let cfg = shipped("lemmas.ini");
    let sweep = SweepSpec { mutate_potential_sign: true, ..cfg.sweep };
    let table = lemma_suite(&sweep, q).unwrap();
    let j = table.row("j_positivity").unwrap();
    let failing: Vec<&str> = table.rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    verdict(
        !j.passed && j.failed > 0 && !table.passed(),
        format!("j_positivity failed on {}/{} checks; failing rows {:?}", j.failed, j.checked, failing),
    )
}

const DETERMINISM_CAMPAIGN: &str = "[run]
command = campaign

[grid]
r_max = 40
n_points = 1023

[ground_state]
r_max = 40
n_points = 2047

[propagator]
dt = 0.0005
t_final = 0.5
record_every = 20

[sweep]
amplitudes = 0.3, 2, 4.5
ks = 0, 0.5
alphas = 1.5, 2
family = RANDOM_BUMP
seed = 42
";

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c9_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("first"), tmp.path().join("second"));
    let cfg = RunConfig::parse(DETERMINISM_CAMPAIGN, None).unwrap();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let code_a = pool(3).install(|| execute(&cfg, &a)).unwrap();
    let again = RunConfig::from_file(&a.join("manifest.json"), None).unwrap();
    let code_b = pool(1).install(|| execute(&again, &b)).unwrap();
    let (fa, fb) = (files_under(&a), files_under(&b));
    // The manifest carries the wall time, so it is compared without it.
    let strip = |m: &[u8]| {
        let mut v: serde_json::Value = serde_json::from_slice(m).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_seconds");
        v
    };
    let manifest = PathBuf::from("manifest.json");
    let mut differing: Vec<String> = Vec::new();
    for (path, bytes) in &fa {
        let same = match fb.get(path) {
            None => false,
            Some(other) if *path == manifest => strip(bytes) == strip(other),
            Some(other) => bytes == other,
        };
        if !same {
            differing.push(path.display().to_string());
        }
    }
    let passed = differing.is_empty() && fa.len() == fb.len() && code_a == code_b && fa.len() > 20;
    verdict(passed, format!("{} files compared (3 threads vs 1), differing: {:?}", fa.len(), differing))
}

fn main() {
    // Criterion numbers on the command line restrict the run to those.
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| only.is_empty() || only.contains(&n);
    let mut results: Vec<(u32, bool)> = Vec::new();
    let mut timed = |n: u32, name: &str, f: &mut dyn FnMut() -> Verdict| {
        if !wanted(n) {
            return;
        }
        let t = Instant::now();
        let v = f();
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {n} [{status}] {name} ({:.1} s): {}", t.elapsed().as_secs_f64(), v.detail);
        results.push((n, v.passed));
    };

    let t = Instant::now();
    let q = shoot_ground_state(Arc::new(Grid::new(40.0, 4095).unwrap()), nlsk::groundstate::DEFAULT_BRACKET).unwrap();
    let q_time = t.elapsed();
    let small = std::cell::OnceCell::new();
    timed(1, "ground state", &mut || c1_ground_state(&q, q_time));
    timed(2, "derivative identity", &mut c2_derivative_identity);
    timed(3, "threshold bounds", &mut || c3_lemma_bounds(&q));
    timed(4, "theta sequence", &mut || c4_theta(&q));
    timed(5, "conservation", &mut || c5_conservation(small.get_or_init(small_data_run)));
    timed(6, "virial cross-validation", &mut || c6_virial(small.get_or_init(small_data_run)));
    timed(7, "dichotomy campaign", &mut c7_campaign);
    timed(8, "mutation sensitivity", &mut || c8_mutation(&q));
    timed(9, "determinism", &mut c9_determinism);

    let failed: Vec<u32> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
