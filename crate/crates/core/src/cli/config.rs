//! TOML scenario files.
//!
//! ```toml
//! scenario = "single-mirror"
//!
//! [physical]
//! gamma = 1.0
//! lambda0 = 1.0
//! v = 1e5
//!
//! [geometry]
//! kind = "single-mirror"
//! n_atoms = 100
//! x1 = 1.5
//!
//! [time]
//! t_max = 10.0
//! n_steps = 500
//! ```
//!
//! Positions are in units of `λ0`, times in `1/γ`.

use std::path::PathBuf;

use serde::Deserialize;

use crate::dynamics::uniform_grid;
use crate::eraser::EraserParams;
use crate::error::{Error, Result};
use crate::field::IntensityMode;
use crate::model::{
    build_cavity_collective, build_full_array, build_single_mirror_collective, BranchSystem, Direction, Geometry,
    MirrorSpec, PhysicalParams, ScenarioKind, C64, DEFAULT_SPEED,
};
use crate::oracle::{ModeGrid, DEFAULT_BANDWIDTH, DEFAULT_MODES_PER_DIRECTION};

pub const POINTS_PER_RABI_PERIOD: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SingleMirror,
    Cavity,
    Intensity,
    Eraser,
    Validate,
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SingleMirror => "single-mirror",
            Scenario::Cavity => "cavity",
            Scenario::Intensity => "intensity",
            Scenario::Eraser => "eraser",
            Scenario::Validate => "validate",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub physical: PhysicalSection,
    pub geometry: GeometrySection,
    /// Branch label → `[re, im]`.
    #[serde(default)]
    pub branch_weights: Option<std::collections::BTreeMap<String, [f64; 2]>>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub intensity: Option<IntensitySection>,
    #[serde(default)]
    pub eraser: Option<EraserSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub lambda0: f64,
    #[serde(default = "default_speed")]
    pub v: f64,
}

impl Default for PhysicalSection {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            lambda0: 1.0,
            v: DEFAULT_SPEED,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    SingleMirror,
    Cavity,
    FullArray,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: GeometryKind,
    #[serde(default)]
    pub n_atoms: Option<usize>,
    #[serde(default)]
    pub x1: Option<f64>,
    #[serde(default)]
    pub x_a: f64,
    /// Defaults to `λ0/2`.
    #[serde(default)]
    pub spacing: Option<f64>,
    /// Explicit atom positions for `full-array`.
    #[serde(default)]
    pub positions: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "ten")]
    pub t_max: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            n_steps: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IntensityModeName {
    PerAtom,
    #[default]
    NoDelay,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySection {
    /// Defaults to `±4 x1`.
    #[serde(default)]
    pub x_min: Option<f64>,
    #[serde(default)]
    pub x_max: Option<f64>,
    #[serde(default = "default_nx")]
    pub n_x: usize,
    /// Defaults to `time.t_max`.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_nt")]
    pub n_t: usize,
    #[serde(default)]
    pub mode: IntensityModeName,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EraserSection {
    #[serde(default)]
    pub phi_m: f64,
    #[serde(default)]
    pub phi_s: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "one")]
    pub t_m: f64,
    /// Scan `t_M` over `[0, t_m_max]`; defaults to `time.t_max`.
    #[serde(default)]
    pub t_m_max: Option<f64>,
    #[serde(default = "default_scan")]
    pub n_t_m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    X1,
    XA,
    NAtoms,
    V,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::X1 => "x1",
            SweepParameter::XA => "x_a",
            SweepParameter::NAtoms => "n_atoms",
            SweepParameter::V => "v",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_modes")]
    pub modes_per_direction: usize,
    /// In units of `γ`.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "five")]
    pub t_max: f64,
    #[serde(default = "default_oracle_steps")]
    pub n_t: usize,
    /// Guided-mode speed used for the microscopic runs.
    #[serde(default = "default_oracle_speed")]
    pub v: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            modes_per_direction: DEFAULT_MODES_PER_DIRECTION,
            bandwidth: DEFAULT_BANDWIDTH,
            t_max: 5.0,
            n_t: default_oracle_steps(),
            v: default_oracle_speed(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn five() -> f64 {
    5.0
}
fn ten() -> f64 {
    10.0
}
fn default_speed() -> f64 {
    DEFAULT_SPEED
}
fn default_steps() -> usize {
    2000
}
fn default_nx() -> usize {
    800
}
fn default_nt() -> usize {
    500
}
fn default_scan() -> usize {
    501
}
fn default_modes() -> usize {
    DEFAULT_MODES_PER_DIRECTION
}
fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH
}
fn default_oracle_steps() -> usize {
    51
}
fn default_oracle_speed() -> f64 {
    1e3
}

/// A parsed file together with its source text, for locating errors.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub source: String,
}

/// 1-based line of `key = ...` inside `[section]` (or at top level).
pub fn locate(source: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, line) in source.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('[') {
            current = Some(rest.trim_end_matches(']').trim().to_string());
            continue;
        }
        let in_section = match section {
            None => current.is_none(),
            Some(s) => current.as_deref() == Some(s),
        };
        if in_section {
            if let Some((k, _)) = trimmed.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    match section {
        Some(s) => source
            .lines()
            .position(|l| l.trim().trim_start_matches('[').trim_end_matches(']').trim() == s)
            .map(|i| i + 1),
        None => None,
    }
}

impl LoadedConfig {
    pub fn parse(source: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(source).map_err(|e| Error::Config(e.to_string().trim().to_string()))?;
        let loaded = Self {
            config,
            source: source.to_string(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let source = std::fs::read_to_string(path)?;
        Self::parse(&source).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn err(&self, section: Option<&str>, key: &str, msg: impl std::fmt::Display) -> Error {
        let place = match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        match locate(&self.source, section, key) {
            Some(line) => Error::Config(format!("line {line}: {place}: {msg}")),
            None => Error::Config(format!("{place}: {msg}")),
        }
    }

    /// Re-run every constraint the library enforces, reporting the offending key.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        let params = self.params()?;
        if !(c.time.t_max > 0.0 && c.time.t_max.is_finite()) {
            return Err(self.err(Some("time"), "t_max", "must be positive"));
        }
        if c.time.n_steps == 0 {
            return Err(self.err(Some("time"), "n_steps", "must be at least 1"));
        }
        self.system_for(&params, &self.geometry(&params)?)?;
        if let Some(i) = &c.intensity {
            if i.n_x == 0 || i.n_t == 0 {
                return Err(self.err(Some("intensity"), "n_x", "grids need at least one point"));
            }
            if let Some(t) = i.t_max {
                if !(t >= 0.0 && t <= c.time.t_max) {
                    return Err(self.err(Some("intensity"), "t_max", "must lie in [0, time.t_max]"));
                }
            }
            if let (Some(lo), Some(hi)) = (i.x_min, i.x_max) {
                if !(lo <= hi) {
                    return Err(self.err(Some("intensity"), "x_min", "must not exceed x_max"));
                }
            }
        }
        if let Some(e) = &c.eraser {
            self.eraser_params()?
                .validate()
                .map_err(|err| self.err(Some("eraser"), "t_m", err))?;
            if e.n_t_m < 2 {
                return Err(self.err(Some("eraser"), "n_t_m", "scan needs at least two points"));
            }
            if c.geometry.kind == GeometryKind::Cavity {
                return Err(self.err(Some("geometry"), "kind", "eraser scans need a single mirror"));
            }
        }
        if let Some(s) = &c.sweep {
            if s.n == 0 {
                return Err(self.err(Some("sweep"), "n", "must be at least 1"));
            }
            if !(s.start.is_finite() && s.stop.is_finite()) {
                return Err(self.err(Some("sweep"), "start", "range must be finite"));
            }
        }
        match (c.scenario, c.geometry.kind) {
            (Scenario::SingleMirror | Scenario::Eraser, GeometryKind::Cavity) => {
                return Err(self.err(Some("geometry"), "kind", "scenario needs a single mirror or full array"))
            }
            (Scenario::Cavity, k) if k != GeometryKind::Cavity => {
                return Err(self.err(Some("geometry"), "kind", "cavity scenario needs kind = \"cavity\""))
            }
            _ => {}
        }
        if c.scenario == Scenario::Sweep && c.sweep.is_none() {
            return Err(self.err(None, "scenario", "sweep scenario needs a [sweep] section"));
        }
        if c.scenario == Scenario::Eraser && c.eraser.is_none() {
            return Err(self.err(None, "scenario", "eraser scenario needs an [eraser] section"));
        }
        let ov = PhysicalParams::new(params.gamma, params.lambda0, c.oracle.v)
            .map_err(|e| self.err(Some("oracle"), "v", e))?;
        ModeGrid::new(&ov, c.oracle.modes_per_direction, c.oracle.bandwidth)
            .map_err(|e| self.err(Some("oracle"), "modes_per_direction", e))?;
        if c.oracle.n_t < 2 || !(c.oracle.t_max > 0.0) {
            return Err(self.err(Some("oracle"), "t_max", "needs t_max > 0 and n_t >= 2"));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        let p = &self.config.physical;
        PhysicalParams::new(p.gamma, p.lambda0, p.v).map_err(|e| {
            let key = if !(p.gamma > 0.0 && p.gamma.is_finite()) {
                "gamma"
            } else if !(p.lambda0 > 0.0 && p.lambda0.is_finite()) {
                "lambda0"
            } else {
                "v"
            };
            self.err(Some("physical"), key, e)
        })
    }

    pub fn geometry(&self, params: &PhysicalParams) -> Result<Geometry> {
        let g = &self.config.geometry;
        let need = |key: &str, v: Option<f64>| v.ok_or_else(|| self.err(Some("geometry"), key, "is required"));
        let spacing = g.spacing.unwrap_or(params.lambda0 / 2.0);
        let geom = match g.kind {
            GeometryKind::SingleMirror | GeometryKind::Cavity => {
                let n = g.n_atoms.ok_or_else(|| self.err(Some("geometry"), "n_atoms", "is required"))?;
                let x1 = need("x1", g.x1)?;
                if g.positions.is_some() {
                    return Err(self.err(Some("geometry"), "positions", "only used with kind = \"full-array\""));
                }
                let mut geom = if g.kind == GeometryKind::SingleMirror {
                    let mut geom = Geometry::single_mirror(params, n, x1);
                    geom.x_a = g.x_a;
                    geom
                } else {
                    Geometry::cavity(params, n, x1, g.x_a)
                };
                for m in &mut geom.mirrors {
                    m.spacing = spacing;
                }
                geom
            }
            GeometryKind::FullArray => {
                let positions = match (&g.positions, g.n_atoms, g.x1) {
                    (Some(p), _, _) => p.clone(),
                    (None, Some(n), Some(x1)) => MirrorSpec {
                        n_atoms: n,
                        x_first: x1,
                        direction: Direction::PlusX,
                        spacing,
                    }
                    .positions(),
                    _ => {
                        return Err(self.err(
                            Some("geometry"),
                            "positions",
                            "full-array needs positions or n_atoms and x1",
                        ))
                    }
                };
                Geometry {
                    x_a: g.x_a,
                    mirrors: positions
                        .iter()
                        .map(|&x| MirrorSpec {
                            n_atoms: 1,
                            x_first: x,
                            direction: Direction::PlusX,
                            spacing,
                        })
                        .collect(),
                    kind: ScenarioKind::FullArray,
                }
            }
        };
        geom.validate().map_err(|e| self.err(Some("geometry"), "kind", e))?;
        Ok(geom)
    }

    /// Branch system for the configured geometry with the configured weights.
    pub fn system_for(&self, params: &PhysicalParams, geom: &Geometry) -> Result<BranchSystem> {
        let built = match geom.kind {
            ScenarioKind::SingleMirror => build_single_mirror_collective(params, geom),
            ScenarioKind::Cavity => build_cavity_collective(params, geom),
            ScenarioKind::FullArray => build_full_array(params, &geom.mirror_positions(), geom.x_a),
        };
        let key = match &built {
            Err(Error::CollectiveInvalid(_)) => "spacing",
            Err(Error::Unsupported(_)) => "kind",
            _ => "x1",
        };
        let sys = built.map_err(|e| self.err(Some("geometry"), key, e))?;
        let Some(weights) = &self.config.branch_weights else {
            return Ok(sys);
        };
        let names: Vec<String> = sys.branches.iter().map(|b| b.label.to_string()).collect();
        for k in weights.keys() {
            if !names.contains(k) {
                return Err(self.err(
                    Some("branch_weights"),
                    k,
                    format!("unknown branch, expected one of {}", names.join(", ")),
                ));
            }
        }
        let w: Vec<C64> = names
            .iter()
            .map(|n| weights.get(n).map(|&[re, im]| C64::new(re, im)).unwrap_or(C64::from(0.0)))
            .collect();
        let first = weights.keys().next().cloned().unwrap_or_default();
        sys.with_weights(&w).map_err(|e| self.err(Some("branch_weights"), &first, e))
    }

    /// `time.n_steps + 1` points, refined for cavities to at least
    /// [`POINTS_PER_RABI_PERIOD`] points per period of `√(N/2) γ`.
    pub fn time_grid(&self) -> Vec<f64> {
        let t = &self.config.time;
        let mut steps = t.n_steps;
        if self.config.geometry.kind == GeometryKind::Cavity {
            let n = self.config.geometry.n_atoms.unwrap_or(1) as f64;
            let omega = (n / 2.0).sqrt() * self.config.physical.gamma;
            let needed = (POINTS_PER_RABI_PERIOD * omega * t.t_max / std::f64::consts::TAU).ceil();
            if needed.is_finite() {
                steps = steps.max(needed as usize);
            }
        }
        uniform_grid(t.t_max, steps + 1)
    }

    pub fn x1(&self) -> f64 {
        let g = &self.config.geometry;
        g.x1
            .or_else(|| g.positions.as_ref().and_then(|p| p.iter().map(|x| x.abs()).reduce(f64::max)))
            .unwrap_or(1.0)
    }

    pub fn intensity_grids(&self) -> (Vec<f64>, Vec<f64>, IntensityMode) {
        let c = &self.config;
        let default = IntensitySection {
            x_min: None,
            x_max: None,
            n_x: default_nx(),
            t_max: None,
            n_t: default_nt(),
            mode: IntensityModeName::NoDelay,
        };
        let s = c.intensity.as_ref().unwrap_or(&default);
        let x1 = self.x1();
        let (lo, hi) = (s.x_min.unwrap_or(-4.0 * x1), s.x_max.unwrap_or(4.0 * x1));
        let x = if s.n_x == 1 {
            vec![lo]
        } else {
            (0..s.n_x).map(|j| lo + (hi - lo) * j as f64 / (s.n_x - 1) as f64).collect()
        };
        let t = uniform_grid(s.t_max.unwrap_or(c.time.t_max), s.n_t);
        let mode = match s.mode {
            IntensityModeName::PerAtom => IntensityMode::PerAtomRetarded,
            IntensityModeName::NoDelay => IntensityMode::NoDelayCollective,
        };
        (x, t, mode)
    }

    pub fn eraser_params(&self) -> Result<EraserParams> {
        let e = self
            .config
            .eraser
            .as_ref()
            .ok_or_else(|| Error::Config("missing [eraser] section".into()))?;
        Ok(EraserParams {
            phi_m: e.phi_m,
            phi_s: e.phi_s,
            delta: e.delta,
            t_m: e.t_m,
        })
    }

    pub fn eraser_grid(&self) -> Vec<f64> {
        let e = self.config.eraser.as_ref().expect("validated");
        uniform_grid(e.t_m_max.unwrap_or(self.config.time.t_max), e.n_t_m)
    }

    /// Copy of this config with one geometry/physical value replaced.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> Result<ScenarioConfig> {
        let mut c = self.config.clone();
        match parameter {
            SweepParameter::X1 => c.geometry.x1 = Some(value),
            SweepParameter::XA => c.geometry.x_a = value,
            SweepParameter::NAtoms => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(self.err(Some("sweep"), "start", format!("n_atoms must be a positive integer, got {value}")));
                }
                c.geometry.n_atoms = Some(value as usize)
            }
            SweepParameter::V => c.physical.v = value,
        }
        Ok(c)
    }
}
