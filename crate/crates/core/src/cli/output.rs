//! CSV files and the run manifest.
//!
//! Floats are written with 17 significant digits, lines end in `\n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::Trajectory;
use crate::eraser::RamseySample;
use crate::error::Result;
use crate::field::IntensityField;
use crate::model::C64;

pub const TRAJECTORY_HEADER: &str = "t,branch,slot,re,im,prob";
pub const INTENSITY_HEADER: &str = "t,x,branch,intensity";
pub const SCAN_HEADER: &str = "t_m,delta_phi,p_e,p_e_conditional";
pub const SWEEP_HEADER: &str = "value,branch,slot,re,im,prob";
pub const VALIDATION_HEADER: &str = "check,max_deviation,tolerance,pass";

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::new();
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for (i, &t) in traj.t_grid.iter().enumerate() {
        for b in &traj.branches {
            let label = b.label.to_string();
            for (j, slot) in b.slots.iter().enumerate() {
                let z = b.amplitudes[(j, i)];
                let _ = writeln!(
                    s,
                    "{},{label},{},{},{},{}",
                    float(t),
                    slot.name(),
                    float(z.re),
                    float(z.im),
                    float(z.norm_sqr())
                );
            }
        }
    }
    s
}

pub fn intensity_csv(field: &IntensityField) -> String {
    let mut s = String::new();
    s.push_str(INTENSITY_HEADER);
    s.push('\n');
    let labels: Vec<String> = field.branches.iter().map(|b| b.label.to_string()).collect();
    for (i, &t) in field.t_grid.iter().enumerate() {
        let ts = float(t);
        for (j, &x) in field.x_grid.iter().enumerate() {
            let xs = float(x);
            for (b, label) in field.branches.iter().zip(&labels) {
                let _ = writeln!(s, "{ts},{xs},{label},{}", float(b.values[(i, j)]));
            }
            let _ = writeln!(s, "{ts},{xs},total,{}", float(field.total[(i, j)]));
        }
    }
    s
}

pub fn scan_csv(samples: &[RamseySample]) -> String {
    let mut s = String::new();
    s.push_str(SCAN_HEADER);
    s.push('\n');
    for r in samples {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            float(r.t_m),
            float(r.delta_phi),
            float(r.p_e),
            float(r.p_e_conditional)
        );
    }
    s
}

/// One sweep row: amplitude of one slot at the final time.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub branch: String,
    pub slot: String,
    pub amplitude: C64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            float(r.value),
            r.branch,
            r.slot,
            float(r.amplitude.re),
            float(r.amplitude.im),
            float(r.amplitude.norm_sqr())
        );
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(check: &str, max_deviation: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            max_deviation,
            tolerance,
            pass: max_deviation <= tolerance,
        }
    }
}

pub fn validation_csv(checks: &[CheckResult]) -> String {
    let mut s = String::new();
    s.push_str(VALIDATION_HEADER);
    s.push('\n');
    for c in checks {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            c.check,
            float(c.max_deviation),
            float(c.tolerance),
            c.pass
        );
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub modules: BTreeMap<String, String>,
    pub command: String,
    pub scenario: String,
    pub config_sha256: String,
    pub seedless: bool,
    pub format: String,
    pub tolerances: BTreeMap<String, f64>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckResult>,
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents.as_bytes())?;
    Ok(())
}

pub fn manifest_json(m: &Manifest) -> String {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serializes");
    s.push('\n');
    s
}
