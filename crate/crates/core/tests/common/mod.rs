//! Randomized geometry corpus and the invariants checked over it.

#![allow(dead_code)]

use quantum_mirror::dynamics::{pole_decomposition, propagate, uniform_grid};
use quantum_mirror::model::{
    build_cavity_collective, build_full_array, build_single_mirror_collective, BranchSystem, Geometry,
    PhysicalParams, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEEDS: &str = include_str!("../data/geometry_seeds.txt");

pub fn seeds() -> Vec<u64> {
    SEEDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().expect("seed is a u64"))
        .collect()
}

/// One randomly drawn configuration.
#[derive(Clone, Debug)]
pub enum Case {
    SingleMirror { n: usize, x1: f64 },
    Cavity { n: usize, x1: f64, x_a: f64 },
    FullArray { positions: Vec<f64>, probe: f64 },
}

impl Case {
    pub fn draw(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match rng.random_range(0..3) {
            0 => Case::SingleMirror {
                n: rng.random_range(1..=40),
                x1: rng.random_range(0.3..3.0),
            },
            1 => {
                let x1: f64 = rng.random_range(0.4..2.5);
                Case::Cavity {
                    n: rng.random_range(1..=30),
                    x1,
                    x_a: rng.random_range(-0.8..0.8) * x1,
                }
            }
            _ => {
                let n = rng.random_range(2..=8);
                let mut positions: Vec<f64> = Vec::with_capacity(n);
                while positions.len() < n {
                    let x: f64 = rng.random_range(-3.0..3.0);
                    if x.abs() > 0.05 && positions.iter().all(|p| (p - x).abs() > 0.05) {
                        positions.push(x);
                    }
                }
                Case::FullArray { positions, probe: 0.0 }
            }
        }
    }

    pub fn system(&self, params: &PhysicalParams) -> BranchSystem {
        match self {
            Case::SingleMirror { n, x1 } => {
                build_single_mirror_collective(params, &Geometry::single_mirror(params, *n, *x1)).unwrap()
            }
            Case::Cavity { n, x1, x_a } => {
                build_cavity_collective(params, &Geometry::cavity(params, *n, *x1, *x_a)).unwrap()
            }
            Case::FullArray { positions, probe } => build_full_array(params, positions, *probe).unwrap(),
        }
    }

    /// Every atom moved an integer number of wavelengths away from the probe.
    pub fn shifted(&self, lambda0: f64) -> Self {
        match self {
            Case::SingleMirror { n, x1 } => Case::SingleMirror { n: *n, x1: x1 + lambda0 },
            Case::Cavity { n, x1, x_a } => Case::Cavity {
                n: *n,
                x1: x1 + lambda0,
                x_a: *x_a,
            },
            Case::FullArray { positions, probe } => Case::FullArray {
                positions: positions
                    .iter()
                    .map(|&x| if x > *probe { x + lambda0 } else { x - lambda0 })
                    .collect(),
                probe: *probe,
            },
        }
    }
}

/// Worst deviations found over the corpus.
#[derive(Clone, Debug, Default)]
pub struct CorpusReport {
    pub cases: usize,
    pub norm_increase: f64,
    pub poles: f64,
    pub pole_cases: usize,
    pub semigroup: f64,
    pub translation: f64,
    pub gauge: f64,
}

pub fn max_abs_diff(a: &nalgebra::DMatrix<C64>, b: &nalgebra::DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn check_case(seed: u64, report: &mut CorpusReport) {
    let params = PhysicalParams::natural();
    let case = Case::draw(seed);
    let sys = case.system(&params);
    let grid = uniform_grid(20.0, 401);
    let traj = propagate(&sys, &grid).unwrap();
    report.cases += 1;

    for b in &traj.branches {
        for i in 1..grid.len() {
            report.norm_increase = report.norm_increase.max(b.norm_sqr(i) - b.norm_sqr(i - 1));
        }
    }

    for (b, tb) in sys.branches.iter().zip(&traj.branches) {
        let d = pole_decomposition(&sys, &b.label).unwrap();
        if d.residues.is_none() {
            continue;
        }
        report.pole_cases += 1;
        for (i, &t) in grid.iter().enumerate() {
            let c = d.evaluate(t).unwrap();
            report.poles = report.poles.max((c - tb.state(i)).norm());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let t1: f64 = rng.random_range(0.1..6.0);
    let t2: f64 = rng.random_range(0.1..6.0);
    let direct = propagate(&sys, &[0.0, t1 + t2]).unwrap();
    let first = propagate(&sys, &[0.0, t1]).unwrap();
    let mut restarted = sys.clone();
    for (b, tb) in restarted.branches.iter_mut().zip(&first.branches) {
        b.init = tb.state(1);
    }
    let second = propagate(&restarted, &[0.0, t2]).unwrap();
    for (d, s) in direct.branches.iter().zip(&second.branches) {
        report.semigroup = report.semigroup.max((d.state(1) - s.state(1)).norm());
    }

    let moved = propagate(&case.shifted(params.lambda0).system(&params), &grid).unwrap();
    for (a, b) in traj.branches.iter().zip(&moved.branches) {
        report.translation = report.translation.max(max_abs_diff(&a.amplitudes, &b.amplitudes));
    }

    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let u = C64::from_polar(1.0, theta);
    let mut rotated = sys.clone();
    for b in &mut rotated.branches {
        b.init *= u;
    }
    let rt = propagate(&rotated, &grid).unwrap();
    for (a, b) in traj.branches.iter().zip(&rt.branches) {
        report.gauge = report.gauge.max(max_abs_diff(&a.amplitudes.map(|z| z * u), &b.amplitudes));
    }
}

pub fn run_corpus() -> CorpusReport {
    let mut report = CorpusReport::default();
    for seed in seeds() {
        check_case(seed, &mut report);
    }
    report
}
