//! Scenario execution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dynamics::{
    closed_form_single_mirror, pole_decomposition, propagate, propagate_with, uniform_grid, PropagationMethod,
    CONDITION_LIMIT, DEGENERACY_GAP,
};
use crate::eraser::ramsey_scan;
use crate::error::{Error, Result};
use crate::field::intensity_map;
use crate::model::{Geometry, PhysicalParams, ScenarioKind};
use crate::oracle::{self, ModeGrid, LOCAL_TOLERANCE};

use super::config::{LoadedConfig, Scenario};
use super::output::{self, CheckResult, Manifest, SweepRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Execute the file's `scenario`.
    Run,
    Validate,
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Validate => "validate",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub seedless: bool,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const TOL_OPEN_DECAY: f64 = 1e-12;
pub const TOL_ROUTES: f64 = 1e-9;
pub const TOL_COLLECTIVE: f64 = 1e-10;
pub const TOL_ORACLE_LONE_ATOM: f64 = 0.02;
pub const TOL_ORACLE_MIRROR: f64 = 0.03;
pub const TOL_ORACLE_NORM: f64 = 1e-8;

fn tolerances() -> BTreeMap<String, f64> {
    [
        ("condition_limit", CONDITION_LIMIT),
        ("degeneracy_gap", DEGENERACY_GAP),
        ("oracle_local_error", LOCAL_TOLERANCE),
        ("open_decay", TOL_OPEN_DECAY),
        ("route_agreement", TOL_ROUTES),
        ("collective_vs_per_atom", TOL_COLLECTIVE),
        ("oracle_lone_atom_relative", TOL_ORACLE_LONE_ATOM),
        ("oracle_vs_collective", TOL_ORACLE_MIRROR),
        ("oracle_norm", TOL_ORACLE_NORM),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Run `command` on the file at `path`, writing outputs and `manifest.json`.
pub fn execute(command: Command, path: &Path, opts: &Options) -> Result<Report> {
    let source = std::fs::read(path)?;
    let text = String::from_utf8(source.clone()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = LoadedConfig::parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;

    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    let scenario = match command {
        Command::Run => cfg.config.scenario,
        Command::Validate => Scenario::Validate,
        Command::Sweep => Scenario::Sweep,
    };
    let mut files = Vec::new();
    let mut checks = Vec::new();
    match scenario {
        Scenario::SingleMirror | Scenario::Cavity => {
            let traj = propagate(&system(&cfg)?, &cfg.time_grid())?;
            emit(&out_dir, "decay.csv", &output::trajectory_csv(&traj), &mut files)?;
        }
        Scenario::Intensity => {
            let traj = propagate(&system(&cfg)?, &cfg.time_grid())?;
            let (x, t, mode) = cfg.intensity_grids();
            let field = intensity_map(&traj, &x, &t, mode)?;
            emit(&out_dir, "decay.csv", &output::trajectory_csv(&traj), &mut files)?;
            emit(&out_dir, "intensity.csv", &output::intensity_csv(&field), &mut files)?;
        }
        Scenario::Eraser => {
            let scan = ramsey_scan(&system(&cfg)?, &cfg.eraser_params()?, &cfg.eraser_grid())?;
            emit(&out_dir, "eraser.csv", &output::scan_csv(&scan), &mut files)?;
        }
        Scenario::Validate => {
            checks = validation_checks(&cfg)?;
            emit(&out_dir, "validation.csv", &output::validation_csv(&checks), &mut files)?;
        }
        Scenario::Sweep => {
            let rows = sweep(&cfg)?;
            emit(&out_dir, "sweep.csv", &output::sweep_csv(&rows), &mut files)?;
        }
    }

    let version = env!("CARGO_PKG_VERSION").to_string();
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME").to_string(),
        version: version.clone(),
        modules: ["model", "dynamics", "field", "eraser", "oracle", "cli"]
            .iter()
            .map(|m| (m.to_string(), version.clone()))
            .collect(),
        command: command.name().to_string(),
        scenario: scenario.name().to_string(),
        config_sha256: output::sha256_hex(&source),
        seedless: opts.seedless,
        format: "csv".to_string(),
        tolerances: tolerances(),
        files: files.clone(),
        checks: checks.clone(),
    };
    output::write(&out_dir, "manifest.json", &output::manifest_json(&manifest))?;
    files.push("manifest.json".to_string());
    Ok(Report { out_dir, files, checks })
}

fn emit(dir: &Path, name: &str, contents: &str, files: &mut Vec<String>) -> Result<()> {
    output::write(dir, name, contents)?;
    files.push(name.to_string());
    Ok(())
}

fn system(cfg: &LoadedConfig) -> Result<crate::model::BranchSystem> {
    let params = cfg.params()?;
    let geom = cfg.geometry(&params)?;
    cfg.system_for(&params, &geom)
}

/// Final-time amplitudes of every branch slot for each swept value.
pub fn sweep(cfg: &LoadedConfig) -> Result<Vec<SweepRow>> {
    let s = cfg
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    let values = if s.n == 1 {
        vec![s.start]
    } else {
        (0..s.n)
            .map(|i| s.start + (s.stop - s.start) * i as f64 / (s.n - 1) as f64)
            .collect()
    };
    let grid = cfg.time_grid();
    let last = grid.len() - 1;
    let mut rows = Vec::new();
    for value in values {
        let swept = LoadedConfig {
            config: cfg.with_sweep_value(s.parameter, value)?,
            source: cfg.source.clone(),
        };
        let params = swept.params()?;
        let geom = swept.geometry(&params)?;
        let sys = swept.system_for(&params, &geom)?;
        let traj = propagate(&sys, &grid)?;
        for b in &traj.branches {
            for (j, slot) in b.slots.iter().enumerate() {
                rows.push(SweepRow {
                    value,
                    branch: b.label.to_string(),
                    slot: slot.name(),
                    amplitude: b.amplitudes[(j, last)],
                });
            }
        }
    }
    Ok(rows)
}

/// Cross-checks between independent routes, with their deviations.
pub fn validation_checks(cfg: &LoadedConfig) -> Result<Vec<CheckResult>> {
    let params = cfg.params()?;
    let geom = cfg.geometry(&params)?;
    let sys = cfg.system_for(&params, &geom)?;
    let grid = cfg.time_grid();
    let mut checks = Vec::new();

    let auto = propagate(&sys, &grid)?;
    let pade = propagate_with(&sys, &grid, PropagationMethod::ScalingSquaring)?;
    let mut open: Option<f64> = None;
    let mut routes: f64 = 0.0;
    let mut poles: f64 = 0.0;
    for (b, (ta, tp)) in sys.branches.iter().zip(auto.branches.iter().zip(&pade.branches)) {
        routes = routes.max((&ta.amplitudes - &tp.amplitudes).norm());
        if b.slots.len() == 1 {
            let dev = grid
                .iter()
                .enumerate()
                .map(|(i, &t)| (ta.norm_sqr(i) - (-params.gamma * t).exp()).abs())
                .fold(0.0, f64::max);
            open = Some(open.unwrap_or(0.0).max(dev));
        }
        let d = pole_decomposition(&sys, &b.label)?;
        if d.residues.is_some() {
            for (i, &t) in grid.iter().enumerate() {
                let c = d.evaluate(t).expect("residues present");
                poles = poles.max((c - tp.state(i)).norm());
            }
        }
    }
    if let Some(dev) = open {
        checks.push(CheckResult::new("open_branch_decay", dev, TOL_OPEN_DECAY));
    }
    checks.push(CheckResult::new("eigen_vs_scaling_squaring", routes, TOL_ROUTES));
    checks.push(CheckResult::new("poles_vs_propagator", poles, TOL_ROUTES));

    if geom.kind == ScenarioKind::SingleMirror && geom.mirrors[0].is_bragg(&params) {
        let g = &pade.branches[0];
        let (qm, a) = (g.slot_index("QM").expect("QM slot"), g.probe_index().expect("probe"));
        let mut dev: f64 = 0.0;
        for (i, &t) in grid.iter().enumerate() {
            let (ca, cq) = closed_form_single_mirror(&params, &geom, t)?;
            dev = dev
                .max((ca - g.amplitudes[(a, i)]).norm())
                .max((cq - g.amplitudes[(qm, i)]).norm());
        }
        checks.push(CheckResult::new("closed_form_vs_propagator", dev, TOL_ROUTES));
    }
    if geom.kind != ScenarioKind::FullArray {
        let dev = oracle::collective_deviation(&params, &geom, &grid)?;
        checks.push(CheckResult::new("collective_vs_per_atom", dev, TOL_COLLECTIVE));
    }

    let o = &cfg.config.oracle;
    let op = PhysicalParams::new(params.gamma, params.lambda0, o.v)?;
    let modes = ModeGrid::new(&op, o.modes_per_direction, o.bandwidth)?;
    let ot = uniform_grid(o.t_max, o.n_t);
    let lone = Geometry {
        x_a: 0.0,
        mirrors: vec![],
        kind: ScenarioKind::FullArray,
    };
    let micro = oracle::simulate_microscopic(&op, &lone, &modes, &ot)?;
    let c = micro.trajectory.branches[0].probe();
    let rel = ot
        .iter()
        .zip(&c)
        .map(|(&t, z)| {
            let e = (-op.gamma * t).exp();
            (z.norm_sqr() - e).abs() / e
        })
        .fold(0.0, f64::max);
    checks.push(CheckResult::new("oracle_lone_atom", rel, TOL_ORACLE_LONE_ATOM));
    let mut norm: f64 = (0..ot.len()).map(|i| (micro.norm_sqr(0, i) - 1.0).abs()).fold(0.0, f64::max);

    if !geom.mirrors.is_empty() {
        let micro = oracle::simulate_microscopic(&op, &geom, &modes, &ot)?;
        let markov_sys = cfg.system_for(&op, &geom)?;
        let markov = propagate(&markov_sys, &ot)?;
        let dev = oracle::microscopic_deviation(&micro, &markov)?;
        checks.push(CheckResult::new("oracle_vs_markov", dev, TOL_ORACLE_MIRROR));
        for b in 0..micro.modes.len() {
            for i in 0..ot.len() {
                norm = norm.max((micro.norm_sqr(b, i) - 1.0).abs());
            }
        }
    }
    checks.push(CheckResult::new("oracle_norm", norm, TOL_ORACLE_NORM));
    Ok(checks)
}

/// Process exit status for an error: 2 configuration, 3 numerical, 4 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParams(_)
        | Error::InvalidGeometry(_)
        | Error::CollectiveInvalid(_)
        | Error::Unsupported(_)
        | Error::InvalidCase(_)
        | Error::InvalidTimeGrid(_) => 2,
        Error::NumericalFailure { .. } | Error::HistoryTooShort { .. } | Error::OracleWindowExceeded { .. } => 3,
        Error::Io(_) => 4,
    }
}
