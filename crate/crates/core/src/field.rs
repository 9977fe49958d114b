//! Emitted guided-field intensity reconstructed from amplitude histories.
//!
//! Each emitter at `x_s` radiates `e^{i k0 |x - x_s|} c_s(t - |x - x_s|/v)`
//! into both directions, switched on by the light cone `Θ(t - |x - x_s|/v)`
//! with `Θ(0) = 1`. Contributions are summed coherently within a branch and
//! incoherently across branches.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dynamics::{uniform_grid, BranchTrajectory, Trajectory};
use crate::error::{Error, Result};
use crate::model::{BranchLabel, PhysicalParams, Slot, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IntensityMode {
    /// Every emitter retarded from its own position; needs per-atom slots.
    PerAtomRetarded,
    /// Bragg bright modes expanded onto their atoms, all retarded from the
    /// mirror's first atom.
    #[default]
    NoDelayCollective,
}

#[derive(Clone, Debug)]
pub struct BranchIntensity {
    pub label: BranchLabel,
    pub weight: C64,
    /// `n_t × n_x`, in units of the single-emitter intensity.
    pub values: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct IntensityField {
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub branches: Vec<BranchIntensity>,
    /// `Σ_b |w_b|² I_b`.
    pub total: DMatrix<f64>,
}

impl IntensityField {
    pub fn branch(&self, name: &str) -> Option<&BranchIntensity> {
        self.branches.iter().find(|b| b.label.to_string() == name)
    }

    /// Indices of the rows with `t ≥ max(5/γ, 0.9 t_max)`.
    pub fn steady_rows(&self, gamma: f64) -> Vec<usize> {
        let t_end = self.t_grid.last().copied().unwrap_or(0.0);
        let start = (5.0 / gamma).max(0.9 * t_end);
        (0..self.t_grid.len()).filter(|&i| self.t_grid[i] >= start).collect()
    }

    /// Time-averaged profile over the steady-state rows.
    pub fn steady_profile(values: &DMatrix<f64>, rows: &[usize]) -> Vec<f64> {
        let n = rows.len().max(1) as f64;
        (0..values.ncols())
            .map(|j| rows.iter().map(|&i| values[(i, j)]).sum::<f64>() / n)
            .collect()
    }
}

/// 800 points on `[-4 x1, 4 x1]`.
pub fn default_x_grid(x1: f64) -> Vec<f64> {
    let n = 800;
    (0..n)
        .map(|j| -4.0 * x1 + 8.0 * x1 * j as f64 / (n - 1) as f64)
        .collect()
}

/// 500 points on `[0, 10/γ]`.
pub fn default_t_grid(params: &PhysicalParams) -> Vec<f64> {
    uniform_grid(10.0 / params.gamma, 500)
}

/// A radiating piece of a branch: amplitude of `slot` retarded from `x_ref`,
/// with a position-dependent geometric factor.
struct Source {
    slot: usize,
    x_ref: f64,
    kind: SourceKind,
}

enum SourceKind {
    Point,
    /// Bright mode of a Bragg array from `x_first` with step `±λ0/2`.
    Bright { x_first: f64, step: f64, n: usize },
}

impl Source {
    /// `Σ_n e_n e^{i k0 |x - x_n|}`.
    fn factor(&self, params: &PhysicalParams, x: f64) -> C64 {
        match self.kind {
            SourceKind::Point => params.phase((x - self.x_ref).abs()),
            SourceKind::Bright { x_first, step, n } => {
                // With λ0/2 spacing and alternating signs, every atom on the
                // same side of x contributes the same phase.
                let u = (x - x_first) / step;
                let behind = if u < 0.0 { 0 } else { ((u.floor() as usize) + 1).min(n) };
                let ahead = n - behind;
                let d = x - x_first;
                let (towards, away) = if step > 0.0 {
                    (params.phase(d), params.phase(-d))
                } else {
                    (params.phase(-d), params.phase(d))
                };
                (towards * behind as f64 + away * ahead as f64) / (n as f64).sqrt()
            }
        }
    }
}

fn sources(branch: &BranchTrajectory, params: &PhysicalParams, mode: IntensityMode) -> Result<Vec<Source>> {
    branch
        .slots
        .iter()
        .enumerate()
        .map(|(slot, s)| match s {
            Slot::Probe { x } | Slot::Atom { x, .. } => Ok(Source {
                slot,
                x_ref: *x,
                kind: SourceKind::Point,
            }),
            Slot::Collective { name, mirror } => match mode {
                IntensityMode::PerAtomRetarded => Err(Error::Unsupported(format!(
                    "per-atom retardation needs per-atom amplitudes, branch {} has collective slot {name}",
                    branch.label
                ))),
                IntensityMode::NoDelayCollective => {
                    if !mirror.is_bragg(params) {
                        return Err(Error::CollectiveInvalid(format!("mirror {name} is not Bragg spaced")));
                    }
                    let step = mirror.position(1) - mirror.x_first;
                    Ok(Source {
                        slot,
                        x_ref: mirror.x_first,
                        kind: SourceKind::Bright {
                            x_first: mirror.x_first,
                            step,
                            n: mirror.n_atoms,
                        },
                    })
                }
            },
        })
        .collect()
}

/// Local cubic (4-point Lagrange) interpolation of one slot, real and
/// imaginary parts separately. Exact on grid points.
pub fn interpolate_amplitude(traj: &Trajectory, branch: usize, slot: usize, t: f64) -> Result<C64> {
    let b = &traj.branches[branch];
    interpolate_row(&traj.t_grid, b, slot, t)
}

fn interpolate_row(grid: &[f64], b: &BranchTrajectory, slot: usize, t: f64) -> Result<C64> {
    let n = grid.len();
    let t_end = grid[n - 1];
    if !(t >= 0.0 && t <= t_end) {
        return Err(Error::HistoryTooShort {
            required: t,
            available: t_end,
        });
    }
    let k = grid.partition_point(|&g| g < t);
    if k < n && grid[k] == t {
        return Ok(b.amplitudes[(slot, k)]);
    }
    if n == 1 {
        return Ok(b.amplitudes[(slot, 0)]);
    }
    // grid[k-1] < t < grid[k]
    let hi = k.min(n - 1);
    let lo = hi - 1;
    let start = lo.saturating_sub(1).min(n.saturating_sub(4));
    let end = (start + 4).min(n);
    let mut acc = C64::from(0.0);
    for i in start..end {
        let mut w = 1.0;
        for j in start..end {
            if j != i {
                w *= (t - grid[j]) / (grid[i] - grid[j]);
            }
        }
        acc += b.amplitudes[(slot, i)] * w;
    }
    Ok(acc)
}

fn branch_field_with(
    params: &PhysicalParams,
    grid: &[f64],
    b: &BranchTrajectory,
    srcs: &[Source],
    x: f64,
    t: f64,
) -> Result<C64> {
    let mut e = C64::from(0.0);
    for s in srcs {
        let tr = t - (x - s.x_ref).abs() / params.v;
        if tr < 0.0 {
            continue;
        }
        e += s.factor(params, x) * interpolate_row(grid, b, s.slot, tr)?;
    }
    Ok(e)
}

/// Complex field amplitude `E_b(x, t)` of one branch, normalized per emitter.
pub fn branch_field(traj: &Trajectory, branch: usize, mode: IntensityMode, x: f64, t: f64) -> Result<C64> {
    let b = &traj.branches[branch];
    let srcs = sources(b, &traj.params, mode)?;
    branch_field_with(&traj.params, &traj.t_grid, b, &srcs, x, t)
}

/// `I_b(x, t) = |E_b(x, t)|²` for every branch on the grid, and the
/// weighted total.
pub fn intensity_map(traj: &Trajectory, x_grid: &[f64], t_grid: &[f64], mode: IntensityMode) -> Result<IntensityField> {
    if traj.t_grid.is_empty() {
        return Err(Error::InvalidTimeGrid("empty trajectory".into()));
    }
    if let Some(&t) = t_grid.iter().find(|&&t| !(t >= 0.0)) {
        return Err(Error::InvalidTimeGrid(format!("negative time {t}")));
    }
    let required = t_grid.iter().copied().fold(0.0, f64::max);
    if required > traj.t_max() {
        return Err(Error::HistoryTooShort {
            required,
            available: traj.t_max(),
        });
    }
    let params = traj.params;
    let (nt, nx) = (t_grid.len(), x_grid.len());
    let mut branches = Vec::with_capacity(traj.branches.len());
    let mut total = DMatrix::<f64>::zeros(nt, nx);
    for b in &traj.branches {
        let srcs = sources(b, &params, mode)?;
        let rows: Vec<Vec<f64>> = t_grid
            .par_iter()
            .map(|&t| {
                x_grid
                    .iter()
                    .map(|&x| branch_field_with(&params, &traj.t_grid, b, &srcs, x, t).map(|e| e.norm_sqr()))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let values = DMatrix::from_fn(nt, nx, |i, j| rows[i][j]);
        total += &values * b.weight.norm_sqr();
        branches.push(BranchIntensity {
            label: b.label.clone(),
            weight: b.weight,
            values,
        });
    }
    Ok(IntensityField {
        x_grid: x_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        branches,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::propagate;
    use crate::model::{build_single_mirror_collective, Geometry};

    fn gp_traj(v: f64) -> Trajectory {
        let p = PhysicalParams::natural().with_speed(v);
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 10, 1.5)).unwrap();
        propagate(&sys, &uniform_grid(10.0, 501)).unwrap()
    }

    #[test]
    fn interpolation_exact_on_nodes_and_accurate_off() {
        let traj = gp_traj(1e5);
        for (k, &t) in traj.t_grid.iter().enumerate().step_by(37) {
            assert_eq!(interpolate_amplitude(&traj, 1, 0, t).unwrap(), traj.branches[1].amplitudes[(0, k)]);
        }
        for t in [0.013, 1.2345, 9.991, 9.9999] {
            let z = interpolate_amplitude(&traj, 1, 0, t).unwrap();
            assert!((z.norm() - (-t / 2.0f64).exp()).abs() < 1e-6, "t={t}");
        }
        assert!(matches!(
            interpolate_amplitude(&traj, 1, 0, 10.5),
            Err(Error::HistoryTooShort { .. })
        ));
    }

    #[test]
    fn interpolation_is_linear() {
        let mut a = gp_traj(1e5);
        let b = gp_traj(1e5);
        let mut sum = a.clone();
        {
            let g = &mut a.branches[0].amplitudes;
            g.iter_mut().enumerate().for_each(|(i, z)| *z *= C64::new(0.3, i as f64 * 1e-3));
        }
        sum.branches[0].amplitudes = &a.branches[0].amplitudes + &b.branches[0].amplitudes;
        for t in [0.011, 3.3333, 7.77] {
            let za = interpolate_amplitude(&a, 0, 1, t).unwrap();
            let zb = interpolate_amplitude(&b, 0, 1, t).unwrap();
            let zs = interpolate_amplitude(&sum, 0, 1, t).unwrap();
            assert!((zs - za - zb).norm() < 1e-12);
        }
    }

    #[test]
    fn gp_light_cone_and_mirror_symmetry() {
        let traj = gp_traj(2.0);
        let x: Vec<f64> = (0..81).map(|j| -10.0 + 0.25 * j as f64).collect();
        let t = uniform_grid(4.0, 41);
        let f = intensity_map(&traj, &x, &t, IntensityMode::NoDelayCollective).unwrap();
        let gp = &f.branch("Gp").unwrap().values;
        for (i, &ti) in t.iter().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                if xj.abs() / 2.0 > ti {
                    assert_eq!(gp[(i, j)], 0.0);
                } else {
                    let expect = (-(ti - xj.abs() / 2.0)).exp();
                    assert!((gp[(i, j)] - expect).abs() < 1e-8);
                }
                assert!((gp[(i, j)] - gp[(i, x.len() - 1 - j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bright_factor_matches_explicit_sum() {
        let p = PhysicalParams::natural();
        for (x1, step) in [(1.5, 0.5), (-1.25, -0.5)] {
            let n = 7;
            let s = Source {
                slot: 0,
                x_ref: x1,
                kind: SourceKind::Bright { x_first: x1, step, n },
            };
            for x in [-6.0, -1.3, 0.0, 1.5, 2.2, 2.5, 3.1, 7.0, -1.25, -2.6] {
                let explicit: C64 = (0..n)
                    .map(|k| {
                        let xn = x1 + step * k as f64;
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        p.phase((x - xn).abs()) * sign / (n as f64).sqrt()
                    })
                    .sum();
                assert!((s.factor(&p, x) - explicit).norm() < 1e-12, "x={x}");
            }
        }
    }

    #[test]
    fn rejects_collective_in_per_atom_mode() {
        let traj = gp_traj(1e5);
        let r = intensity_map(&traj, &[0.0], &[1.0], IntensityMode::PerAtomRetarded);
        assert!(matches!(r, Err(Error::Unsupported(_))));
        let r = intensity_map(&traj, &[0.0], &[11.0], IntensityMode::NoDelayCollective);
        assert!(matches!(r, Err(Error::HistoryTooShort { .. })));
    }

    #[test]
    fn total_is_weighted_sum() {
        let traj = gp_traj(1e5);
        let x = default_x_grid(1.5);
        let f = intensity_map(&traj, &x[..50], &[0.0, 2.0, 5.0], IntensityMode::NoDelayCollective).unwrap();
        let expect = &f.branches[0].values * 0.5 + &f.branches[1].values * 0.5;
        assert!((expect - &f.total).norm() < 1e-12);
        assert!(f.total.iter().all(|&v| v >= 0.0));
    }
}
