use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::RadialField;
use crate::scalar::Real;
use crate::virial::VirialSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    #[serde(rename = "BLOWUP_DETECTED")]
    BlowupDetected,
    #[serde(rename = "HORIZON_REACHED")]
    HorizonReached,
    #[serde(rename = "BOUNDARY_CONTAMINATION")]
    BoundaryContamination,
    #[serde(rename = "DT_FLOOR")]
    DtFloor,
}

impl EventKind {
    pub fn is_terminal(self) -> bool {
        !matches!(self, EventKind::BoundaryContamination)
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventKind::BlowupDetected => "BLOWUP_DETECTED",
            EventKind::HorizonReached => "HORIZON_REACHED",
            EventKind::BoundaryContamination => "BOUNDARY_CONTAMINATION",
            EventKind::DtFloor => "DT_FLOOR",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event<T> {
    pub time: T,
    pub kind: EventKind,
}

/// Everything monitored at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample<T> {
    pub time: T,
    pub dt: T,
    pub mass: T,
    pub energy: T,
    pub action: T,
    pub kinetic: T,
    pub quartic: T,
    pub v_moment: T,
    pub p_value: T,
    pub i_value: T,
    pub h1k_sq: T,
    pub l4_norm: T,
    /// `||u(t)||_5^5`, integrated in time by the scattering diagnostic.
    pub l5_pow5: T,
    /// Mass beyond `r_max / 2`.
    pub exterior_mass: T,
    pub virial: VirialSample<T>,
}

/// Column order of the trajectory CSV.
pub const LOG_COLUMNS: [&str; 22] = [
    "time",
    "dt",
    "mass",
    "energy",
    "action",
    "kinetic",
    "quartic",
    "v_moment",
    "p_value",
    "i_value",
    "h1k_sq",
    "l4_norm",
    "l5_pow5",
    "exterior_mass",
    "virial_I",
    "virial_Iprime",
    "virial_Idoubleprime",
    "p_term",
    "r1",
    "r2",
    "r3",
    "r4",
];

impl<T: Real> TrajectorySample<T> {
    fn row(&self) -> [T; 22] {
        let v = &self.virial;
        [
            self.time,
            self.dt,
            self.mass,
            self.energy,
            self.action,
            self.kinetic,
            self.quartic,
            self.v_moment,
            self.p_value,
            self.i_value,
            self.h1k_sq,
            self.l4_norm,
            self.l5_pow5,
            self.exterior_mass,
            v.i,
            v.i_prime,
            v.i_doubleprime,
            v.p_term,
            v.r1,
            v.r2,
            v.r3,
            v.r4,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint<T: Real> {
    pub record: usize,
    pub time: T,
    pub field: RadialField<T>,
}

/// Recorded history of one evolution. Exactly one terminal event, always
/// the last one.
#[derive(Debug, Clone)]
pub struct TrajectoryLog<T: Real> {
    pub samples: Vec<TrajectorySample<T>>,
    pub events: Vec<Event<T>>,
    pub checkpoints: Vec<Checkpoint<T>>,
    pub blowup_gradient_factor: T,
}

#[derive(Serialize)]
struct CheckpointEntry<T> {
    record: usize,
    time: T,
    file: String,
}

impl<T: Real> TrajectoryLog<T> {
    pub fn terminal(&self) -> Option<Event<T>> {
        self.events.last().copied().filter(|e| e.kind.is_terminal())
    }

    pub fn first_event(&self, kind: EventKind) -> Option<Event<T>> {
        self.events.iter().copied().find(|e| e.kind == kind)
    }

    pub fn initial(&self) -> &TrajectorySample<T> {
        &self.samples[0]
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = LOG_COLUMNS.join(",");
        out.push('\n');
        for s in &self.samples {
            let row = s.row();
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{x:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn events_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.events)? + "\n")
    }

    /// Write `<stem>.csv`, `<stem>_events.json` and any checkpoints
    /// (`<stem>_checkpoint_NNNNNN.csv` plus an index) into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let put = |name: String, body: String| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        put(format!("{stem}.csv"), self.to_csv_string())?;
        put(format!("{stem}_events.json"), self.events_json()?)?;
        if !self.checkpoints.is_empty() {
            let mut index = Vec::new();
            for c in &self.checkpoints {
                let file = format!("{stem}_checkpoint_{:06}.csv", c.record);
                put(file.clone(), c.field.to_csv_string())?;
                index.push(CheckpointEntry { record: c.record, time: c.time, file });
            }
            put(format!("{stem}_checkpoints.json"), serde_json::to_string_pretty(&index)? + "\n")?;
        }
        Ok(())
    }
}
