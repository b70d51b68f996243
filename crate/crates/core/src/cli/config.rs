//! Line-based `key = value` configuration with `[section]` headers.
//!
//! Blank lines and lines starting with `#` or `;` are ignored, as is
//! anything after ` #` on a value line. Unknown sections or keys and
//! repeated keys are rejected with their line numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::campaign::{SweepSpec, TrialFamily};
use crate::dynamics::PropagatorConfig;
use crate::error::{Error, Result};
use crate::fields::PotentialSpec;
use crate::groundstate::DEFAULT_BRACKET;

/// Sections and the keys each one accepts.
const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["command", "out", "verbose"]),
    ("grid", &["r_max", "n_points"]),
    ("potential", &["k", "alpha"]),
    ("field", &["family", "amplitude", "width", "seed", "path"]),
    (
        "propagator",
        &[
            "dt",
            "t_final",
            "dt_min",
            "blowup_gradient_factor",
            "sponge_width",
            "sponge_strength",
            "record_every",
            "checkpoint_every",
            "energy_tolerance",
            "contamination_fraction",
            "virial_radius",
        ],
    ),
    ("ground_state", &["r_max", "n_points", "bracket_low", "bracket_high"]),
    ("sweep", &["amplitudes", "ks", "alphas", "widths", "family", "seed", "mutate_potential_sign"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GroundState,
    Functionals,
    Classify,
    Evolve,
    Campaign,
    Lemmas,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::GroundState, Command::Functionals, Command::Classify, Command::Evolve, Command::Campaign, Command::Lemmas];

    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::Functionals => "functionals",
            Command::Classify => "classify",
            Command::Evolve => "evolve",
            Command::Campaign => "campaign",
            Command::Lemmas => "lemmas",
        }
    }

    /// Sections this command reads (besides `[run]`).
    fn sections(self) -> &'static [&'static str] {
        match self {
            Command::GroundState => &["ground_state"],
            Command::Functionals => &["grid", "potential", "field", "ground_state"],
            Command::Classify => &["grid", "potential", "field", "propagator", "ground_state"],
            Command::Evolve => &["grid", "potential", "field", "propagator"],
            Command::Campaign => &["grid", "propagator", "ground_state", "sweep"],
            Command::Lemmas => &["grid", "ground_state", "sweep"],
        }
    }

    fn is_sweep(self) -> bool {
        matches!(self, Command::Campaign | Command::Lemmas)
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            Error::Config(format!("unknown command {s:?} (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub r_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSettings {
    pub family: TrialFamily,
    pub amplitude: f64,
    pub width: f64,
    pub seed: u64,
    /// Read the initial field from this CSV instead of building it.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundSettings {
    pub r_max: f64,
    pub n_points: usize,
    pub bracket: (f64, f64),
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub out: Option<PathBuf>,
    pub verbose: bool,
    pub grid: GridSettings,
    pub potential: PotentialSpec<f64>,
    pub field: FieldSettings,
    pub propagator: PropagatorConfig<f64>,
    pub ground: GroundSettings,
    /// Sweep grids; its grid, ground-state and propagator fields mirror
    /// the sections above.
    pub sweep: SweepSpec,
}

/// Grid used by single-trajectory commands unless configured.
pub const DEFAULT_GRID: GridSettings = GridSettings { r_max: 40.0, n_points: 2047 };
/// Time step used by single-trajectory commands unless configured.
pub const DEFAULT_DT: f64 = 5e-5;
pub const DEFAULT_T_FINAL: f64 = 20.0;
pub const DEFAULT_RECORD_EVERY: usize = 200;

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Raw `section -> key -> value` table with line numbers.
struct Table {
    entries: BTreeMap<(String, String), Entry>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<(String, String), Entry> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| Error::ConfigLine { line, msg };
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header {content:?}")))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    let names: Vec<&str> = SCHEMA.iter().map(|(s, _)| *s).collect();
                    return Err(err(format!("unknown section [{name}] (expected one of {})", names.join(", "))));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.as_deref().ok_or_else(|| err(format!("key `{key}` appears before any [section]")))?;
            let keys = SCHEMA.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !keys.contains(&key) {
                return Err(err(format!("unknown key `{key}` in [{sec}] (expected one of {})", keys.join(", "))));
            }
            if value.is_empty() {
                return Err(err(format!("empty value for `{key}`")));
            }
            let slot = (sec.to_string(), key.to_string());
            if let Some(first) = entries.get(&slot) {
                return Err(err(format!("duplicate key `{key}` in [{sec}] (first set on line {})", first.line)));
            }
            entries.insert(slot, Entry { value: value.to_string(), line, used: false });
        }
        Ok(Table { entries })
    }

    fn take<T: FromStr>(&mut self, sec: &str, key: &str, what: &str) -> Result<Option<(T, usize)>> {
        let Some(e) = self.entries.get_mut(&(sec.to_string(), key.to_string())) else {
            return Ok(None);
        };
        e.used = true;
        let v = e.value.parse::<T>().map_err(|_| Error::ConfigLine {
            line: e.line,
            msg: format!("`{key}` must be {what}, got {:?}", e.value),
        })?;
        Ok(Some((v, e.line)))
    }

    fn real(&mut self, sec: &str, key: &str, default: f64) -> Result<(f64, usize)> {
        let (v, line) = self.take::<f64>(sec, key, "a number")?.unwrap_or((default, 0));
        if !v.is_finite() {
            return Err(at(line, format!("`{key}` must be finite")));
        }
        Ok((v, line))
    }

    fn count(&mut self, sec: &str, key: &str, default: usize) -> Result<(usize, usize)> {
        Ok(self.take::<usize>(sec, key, "a non-negative integer")?.unwrap_or((default, 0)))
    }

    fn flag(&mut self, sec: &str, key: &str, default: bool) -> Result<bool> {
        Ok(self.take::<bool>(sec, key, "true or false")?.map(|v| v.0).unwrap_or(default))
    }

    fn list(&mut self, sec: &str, key: &str, default: &[f64]) -> Result<(Vec<f64>, usize)> {
        let Some((raw, line)) = self.take::<String>(sec, key, "a list")? else {
            return Ok((default.to_vec(), 0));
        };
        let items = raw
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| at(line, format!("`{key}`: {s:?} is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((items, line))
    }
}

fn strip_comment(raw: &str) -> &str {
    let t = raw.trim_start();
    if t.starts_with('#') || t.starts_with(';') {
        return "";
    }
    match raw.find(" #") {
        Some(i) => &raw[..i],
        None => raw,
    }
}

/// Attach a line number when there is one (0 means the value is a default).
fn at(line: usize, msg: String) -> Error {
    if line == 0 {
        Error::Config(msg)
    } else {
        Error::ConfigLine { line, msg }
    }
}

fn relocate(line: usize, e: Error) -> Error {
    match e {
        Error::Config(msg) => at(line, msg),
        other => other,
    }
}

impl RunConfig {
    /// Parse and validate configuration text. `command` overrides (and must
    /// agree with) the `[run] command` key.
    pub fn parse(text: &str, command: Option<Command>) -> Result<Self> {
        let mut t = Table::parse(text)?;
        let from_file = t.take::<String>("run", "command", "a command name")?;
        let command = match (command, from_file) {
            (Some(c), None) => c,
            (None, Some((name, line))) => name.parse::<Command>().map_err(|e| relocate(line, e))?,
            (Some(c), Some((name, line))) => {
                if name != c.name() {
                    return Err(at(line, format!("config is for `{name}` but `{c}` was requested")));
                }
                c
            }
            (None, None) => return Err(Error::Config("no command given (pass one or set `command` in [run])".into())),
        };
        let out = t.take::<PathBuf>("run", "out", "a path")?.map(|v| v.0);
        let verbose = t.flag("run", "verbose", false)?;

        let base = SweepSpec::default();
        let (grid_default, dt_default, tf_default, rec_default) = if command.is_sweep() {
            (
                GridSettings { r_max: base.r_max, n_points: base.n_points },
                base.propagator.dt,
                base.propagator.t_final,
                base.propagator.record_every,
            )
        } else {
            (DEFAULT_GRID, DEFAULT_DT, DEFAULT_T_FINAL, DEFAULT_RECORD_EVERY)
        };

        let (r_max, l1) = t.real("grid", "r_max", grid_default.r_max)?;
        let (n_points, l2) = t.count("grid", "n_points", grid_default.n_points)?;
        crate::fields::RadialGrid::new(r_max, n_points).map_err(|e| relocate(l1.max(l2), e))?;
        let grid = GridSettings { r_max, n_points };

        let (k, lk) = t.real("potential", "k", 0.0)?;
        let (alpha, la) = t.real("potential", "alpha", 1.5)?;
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(at(la, format!("alpha = {alpha} violates the constraint 1 < alpha <= 2")));
        }
        let potential = PotentialSpec::new(k, alpha).map_err(|e| relocate(lk, e))?;

        let (family, lf) = t.take::<String>("field", "family", "a family name")?.unwrap_or(("GAUSSIAN".into(), 0));
        let family: TrialFamily = family.parse().map_err(|e| relocate(lf, e))?;
        let (amplitude, lamp) = t.real("field", "amplitude", 1.0)?;
        if amplitude < 0.0 {
            return Err(at(lamp, "amplitude must be non-negative".into()));
        }
        let (width, lw) = t.real("field", "width", 1.0)?;
        if !(width > 0.0) {
            return Err(at(lw, "width must be positive".into()));
        }
        let seed = t.take::<u64>("field", "seed", "a non-negative integer")?.map(|v| v.0).unwrap_or(0);
        let path = t.take::<PathBuf>("field", "path", "a path")?.map(|v| v.0);
        let field = FieldSettings { family, amplitude, width, seed, path };

        let (dt, ldt) = t.real("propagator", "dt", dt_default)?;
        let (t_final, _) = t.real("propagator", "t_final", tf_default)?;
        let mut propagator = PropagatorConfig::new(dt, t_final);
        propagator.dt_min = t.real("propagator", "dt_min", dt / 4096.0)?.0;
        propagator.blowup_gradient_factor = t.real("propagator", "blowup_gradient_factor", 100.0)?.0;
        propagator.sponge_width = t.real("propagator", "sponge_width", 0.0)?.0;
        propagator.sponge_strength = t.real("propagator", "sponge_strength", propagator.sponge_strength)?.0;
        propagator.record_every = t.count("propagator", "record_every", rec_default)?.0;
        propagator.checkpoint_every = t.count("propagator", "checkpoint_every", 0)?.0;
        propagator.energy_tolerance = t.real("propagator", "energy_tolerance", propagator.energy_tolerance)?.0;
        propagator.contamination_fraction =
            t.real("propagator", "contamination_fraction", propagator.contamination_fraction)?.0;
        if let Some((r, line)) = t.take::<f64>("propagator", "virial_radius", "a number")? {
            if !(r > 0.0 && 2.0 * r < grid.r_max) {
                return Err(at(line, format!("virial_radius {r} must lie in (0, r_max / 2)")));
            }
            propagator.virial_radius = Some(r);
        }
        propagator.validate().map_err(|e| relocate(ldt, e))?;

        let (g_r, lg1) = t.real("ground_state", "r_max", base.ground_r_max)?;
        let (g_n, lg2) = t.count("ground_state", "n_points", base.ground_n_points)?;
        crate::fields::RadialGrid::new(g_r, g_n).map_err(|e| relocate(lg1.max(lg2), e))?;
        let (lo, _) = t.real("ground_state", "bracket_low", DEFAULT_BRACKET.0)?;
        let (hi, lhi) = t.real("ground_state", "bracket_high", DEFAULT_BRACKET.1)?;
        if !(lo > 0.0 && lo < hi) {
            return Err(at(lhi, format!("bracket ({lo}, {hi}) must satisfy 0 < low < high")));
        }
        let ground = GroundSettings { r_max: g_r, n_points: g_n, bracket: (lo, hi) };

        let (amplitudes, ls1) = t.list("sweep", "amplitudes", &base.amplitudes)?;
        let (ks, ls2) = t.list("sweep", "ks", &base.ks)?;
        let (alphas, ls3) = t.list("sweep", "alphas", &base.alphas)?;
        let (widths, ls4) = t.list("sweep", "widths", &base.widths)?;
        let (sfam, ls5) = t.take::<String>("sweep", "family", "a family name")?.unwrap_or((base.family.to_string(), 0));
        let sweep_family: TrialFamily = sfam.parse().map_err(|e| relocate(ls5, e))?;
        let sweep_seed = t.take::<u64>("sweep", "seed", "a non-negative integer")?.map(|v| v.0).unwrap_or(base.seed);
        let mutate = t.flag("sweep", "mutate_potential_sign", false)?;
        for &a in &alphas {
            if !(a > 1.0 && a <= 2.0) {
                return Err(at(ls3, format!("alpha = {a} violates the constraint 1 < alpha <= 2")));
            }
        }
        let sweep = SweepSpec {
            amplitudes,
            ks,
            alphas,
            widths,
            family: sweep_family,
            r_max: grid.r_max,
            n_points: grid.n_points,
            ground_r_max: ground.r_max,
            ground_n_points: ground.n_points,
            ground_bracket: ground.bracket,
            propagator,
            seed: sweep_seed,
            mutate_potential_sign: mutate,
        };
        if command.is_sweep() {
            sweep.validate().map_err(|e| relocate(ls1.max(ls2).max(ls3).max(ls4), e))?;
        }

        Ok(RunConfig { command, out, verbose, grid, potential, field, propagator, ground, sweep })
    }

    pub fn from_file(path: &Path, command: Option<Command>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)?;
            let echoed = manifest
                .get("config")
                .and_then(|v| v.as_str())
                .ok_or_else(|| Error::Config(format!("{} has no echoed `config`", path.display())))?;
            return Self::parse(echoed, command);
        }
        Self::parse(&text, command)
    }

    /// Every setting the command reads, defaults included, in config
    /// syntax. Parsing the echo gives back the same configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]\ncommand = {}", self.command);
        for sec in self.command.sections() {
            let _ = writeln!(s, "\n[{sec}]");
            match *sec {
                "grid" => {
                    let _ = writeln!(s, "r_max = {}\nn_points = {}", self.grid.r_max, self.grid.n_points);
                }
                "potential" => {
                    let _ = writeln!(s, "k = {}\nalpha = {}", self.potential.k(), self.potential.alpha());
                }
                "field" => {
                    let f = &self.field;
                    let _ = writeln!(s, "family = {}\namplitude = {}\nwidth = {}\nseed = {}", f.family, f.amplitude, f.width, f.seed);
                    if let Some(p) = &f.path {
                        let _ = writeln!(s, "path = {}", p.display());
                    }
                }
                "propagator" => {
                    let p = &self.propagator;
                    let _ = writeln!(
                        s,
                        "dt = {}\nt_final = {}\ndt_min = {}\nblowup_gradient_factor = {}\nsponge_width = {}\nsponge_strength = {}\nrecord_every = {}\ncheckpoint_every = {}\nenergy_tolerance = {}\ncontamination_fraction = {}",
                        p.dt,
                        p.t_final,
                        p.dt_min,
                        p.blowup_gradient_factor,
                        p.sponge_width,
                        p.sponge_strength,
                        p.record_every,
                        p.checkpoint_every,
                        p.energy_tolerance,
                        p.contamination_fraction
                    );
                    if let Some(r) = p.virial_radius {
                        let _ = writeln!(s, "virial_radius = {r}");
                    }
                }
                "ground_state" => {
                    let g = &self.ground;
                    let _ = writeln!(
                        s,
                        "r_max = {}\nn_points = {}\nbracket_low = {}\nbracket_high = {}",
                        g.r_max, g.n_points, g.bracket.0, g.bracket.1
                    );
                }
                "sweep" => {
                    let w = &self.sweep;
                    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
                    let _ = writeln!(
                        s,
                        "amplitudes = {}\nks = {}\nalphas = {}\nwidths = {}\nfamily = {}\nseed = {}\nmutate_potential_sign = {}",
                        join(&w.amplitudes),
                        join(&w.ks),
                        join(&w.alphas),
                        join(&w.widths),
                        w.family,
                        w.seed,
                        w.mutate_potential_sign
                    );
                }
                _ => {}
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: &Error) -> Option<usize> {
        match e {
            Error::ConfigLine { line, .. } => Some(*line),
            _ => None,
        }
    }

    #[test]
    fn minimal_ground_state_config_gets_defaults() {
        let c = RunConfig::parse("[run]\ncommand = ground-state\n", None).unwrap();
        assert_eq!(c.ground.bracket, DEFAULT_BRACKET);
        assert_eq!(c.ground.n_points, 4095);
        let echo = c.echo();
        assert!(echo.contains("bracket_low = 4"));
        assert_eq!(RunConfig::parse(&echo, None).unwrap(), c);
    }

    #[test]
    fn alpha_out_of_range_cites_constraint_and_line() {
        let text = "[run]\ncommand = evolve\n[potential]\nk = 1\nalpha = 2.5\n";
        let e = RunConfig::parse(text, None).unwrap_err();
        assert_eq!(line_of(&e), Some(5));
        assert!(e.to_string().contains("1 < alpha <= 2"), "{e}");
    }

    #[test]
    fn duplicate_key_reports_both_lines() {
        let text = "[grid]\nr_max = 40\n\nr_max = 50\n";
        let e = RunConfig::parse(text, Some(Command::Evolve)).unwrap_err();
        assert_eq!(line_of(&e), Some(4));
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let e = RunConfig::parse("[grid]\nrmax = 40\n", Some(Command::Evolve)).unwrap_err();
        assert_eq!(line_of(&e), Some(2));
        let e = RunConfig::parse("# c\n[gird]\n", Some(Command::Evolve)).unwrap_err();
        assert_eq!(line_of(&e), Some(2));
        let e = RunConfig::parse("r_max = 1\n", Some(Command::Evolve)).unwrap_err();
        assert_eq!(line_of(&e), Some(1));
    }

    #[test]
    fn type_errors_and_conflicts() {
        let e = RunConfig::parse("[grid]\nn_points = many\n", Some(Command::Evolve)).unwrap_err();
        assert_eq!(line_of(&e), Some(2));
        let e = RunConfig::parse("[run]\ncommand = lemmas\n", Some(Command::Evolve)).unwrap_err();
        assert_eq!(line_of(&e), Some(2));
        assert!(RunConfig::parse("", None).is_err());
        let e = RunConfig::parse("[sweep]\namplitudes = 0.1, x\n", Some(Command::Campaign)).unwrap_err();
        assert_eq!(line_of(&e), Some(2));
        let e = RunConfig::parse("[sweep]\namplitudes = \n", Some(Command::Campaign));
        assert!(e.is_err());
    }

    #[test]
    fn inline_comments_and_echo_roundtrip() {
        let text = "[run]\ncommand = campaign # sweep\n[sweep]\namplitudes = 0.1, 4.5\nks = 0\nalphas = 1.5\n[propagator]\nt_final = 0.5\nvirial_radius = 7\n";
        let c = RunConfig::parse(text, None).unwrap();
        assert_eq!(c.sweep.amplitudes, vec![0.1, 4.5]);
        assert_eq!(c.propagator.virial_radius, Some(7.0));
        assert_eq!(c.sweep.propagator, c.propagator);
        assert_eq!(RunConfig::parse(&c.echo(), None).unwrap(), c);
    }
}
