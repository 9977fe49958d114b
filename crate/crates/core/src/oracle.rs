//! Brute-force references for the Markovian branch model.
//!
//! Two independent checks: the per-atom simulation of a Bragg array against
//! its bright-mode reduction, and a direct integration of the microscopic
//! atom + discretized-waveguide Hamiltonian in the single-excitation sector.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{propagate, BranchTrajectory, Trajectory};
use crate::error::{Error, Result};
use crate::model::{
    build_cavity_collective, build_full_array, build_single_mirror_collective, collective_projection, BranchLabel,
    Geometry, PhysicalParams, ScenarioKind, Slot, C64,
};

pub const DEFAULT_MODES_PER_DIRECTION: usize = 2000;
/// Default bandwidth in units of `γ`.
pub const DEFAULT_BANDWIDTH: f64 = 100.0;
pub const MIN_BANDWIDTH: f64 = 50.0;
/// Largest mode spacing accepted, in units of `γ`.
pub const MAX_MODE_SPACING: f64 = 1.0 / 20.0;
pub const MAX_DIMENSION: usize = 200_000;
/// Local error bound per step (2-norm of the embedded error estimate).
pub const LOCAL_TOLERANCE: f64 = 1e-10;

/// Guided modes `k = ±(k0 + Δ/v)` with detunings on a uniform symmetric band.
#[derive(Clone, Debug)]
pub struct ModeGrid {
    pub modes_per_direction: usize,
    /// Full width of the detuning band (angular frequency).
    pub bandwidth: f64,
    pub detunings: Vec<f64>,
    pub spacing: f64,
    /// Per-mode coupling, `g² = γ Δω / (4π)`.
    pub g: f64,
}

impl ModeGrid {
    /// `bandwidth` is given in units of `γ`.
    pub fn new(params: &PhysicalParams, modes_per_direction: usize, bandwidth: f64) -> Result<Self> {
        params.validate()?;
        if modes_per_direction == 0 {
            return Err(Error::InvalidParams("mode grid needs at least one mode".into()));
        }
        if !(bandwidth >= MIN_BANDWIDTH) {
            return Err(Error::InvalidParams(format!(
                "bandwidth {bandwidth}γ is below {MIN_BANDWIDTH}γ"
            )));
        }
        let width = bandwidth * params.gamma;
        let spacing = width / modes_per_direction as f64;
        if spacing > MAX_MODE_SPACING * params.gamma * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "mode spacing {}γ exceeds γ/20",
                spacing / params.gamma
            )));
        }
        let detunings = (0..modes_per_direction)
            .map(|m| -width / 2.0 + (m as f64 + 0.5) * spacing)
            .collect();
        Ok(Self {
            modes_per_direction,
            bandwidth: width,
            detunings,
            spacing,
            g: (params.gamma * spacing / (2.0 * TAU)).sqrt(),
        })
    }

    pub fn default_for(params: &PhysicalParams) -> Result<Self> {
        Self::new(params, DEFAULT_MODES_PER_DIRECTION, DEFAULT_BANDWIDTH)
    }

    /// `2π/Δω`: beyond this the discrete bath revives.
    pub fn recurrence_window(&self) -> f64 {
        TAU / self.spacing
    }

    pub fn n_modes(&self) -> usize {
        2 * self.modes_per_direction
    }

    /// `e^{i k x}` for mode `m` (`m < M` forward, `m ≥ M` backward).
    fn plane_wave(&self, params: &PhysicalParams, m: usize, x: f64) -> C64 {
        let mm = self.modes_per_direction;
        let (delta, sign) = if m < mm {
            (self.detunings[m], 1.0)
        } else {
            (self.detunings[m - mm], -1.0)
        };
        let carrier = params.phase(x);
        let carrier = if sign > 0.0 { carrier } else { carrier.conj() };
        carrier * C64::from_polar(1.0, sign * delta * x / params.v)
    }

    fn detuning(&self, m: usize) -> f64 {
        self.detunings[m % self.modes_per_direction]
    }
}

/// Atomic amplitudes (as a [`Trajectory`]) and mode amplitudes per branch.
#[derive(Clone, Debug)]
pub struct MicroscopicTrajectory {
    pub trajectory: Trajectory,
    /// Per branch, `2M × n_times` mode amplitudes in the frame rotating at `ω0`.
    pub modes: Vec<DMatrix<C64>>,
    pub grid: ModeGrid,
}

impl MicroscopicTrajectory {
    /// `Σ_atoms |c|² + Σ_modes |b|²` for branch `b` at time index `i`.
    pub fn norm_sqr(&self, branch: usize, i: usize) -> f64 {
        self.trajectory.branches[branch].norm_sqr(i) + self.modes[branch].column(i).norm_squared()
    }
}

/// Integrate the single-excitation Schrödinger equation
///
/// `db_k/dt = -iΔ_k b_k - i g Σ_j e^{-ikx_j} c_j`, `dc_j/dt = -i g Σ_k e^{ikx_j} b_k`
///
/// for every branch, with the coupled atoms being the probe plus the atoms
/// of every mirror in `G`.
pub fn simulate_microscopic(
    params: &PhysicalParams,
    geom: &Geometry,
    modes: &ModeGrid,
    t_grid: &[f64],
) -> Result<MicroscopicTrajectory> {
    params.validate()?;
    geom.validate()?;
    check_grid(t_grid)?;
    let t_end = *t_grid.last().expect("checked non-empty");
    if t_end > modes.recurrence_window() {
        return Err(Error::OracleWindowExceeded {
            t: t_end,
            window: modes.recurrence_window(),
        });
    }
    let n_mirror_atoms: usize = geom.mirrors.iter().map(|m| m.n_atoms).sum();
    if n_mirror_atoms + 1 + modes.n_modes() > MAX_DIMENSION {
        return Err(Error::Unsupported(format!(
            "oracle dimension {} exceeds {MAX_DIMENSION}",
            n_mirror_atoms + 1 + modes.n_modes()
        )));
    }

    // A free-form array switches as one unit.
    let groups: Vec<Vec<f64>> = if geom.kind == ScenarioKind::FullArray && !geom.mirrors.is_empty() {
        vec![geom.mirror_positions()]
    } else {
        geom.mirrors.iter().map(|m| m.positions()).collect()
    };
    let labels = BranchLabel::all(groups.len());
    let w = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let results: Vec<(BranchTrajectory, DMatrix<C64>)> = labels
        .par_iter()
        .map(|label| {
            let mut slots = Vec::new();
            let mut index = 0;
            for (m, group) in groups.iter().enumerate() {
                for &x in group {
                    if label.coupled(m) {
                        slots.push(Slot::Atom { index, x });
                    }
                    index += 1;
                }
            }
            slots.push(Slot::Probe { x: geom.x_a });
            let all_same = label.0.iter().all(|s| *s == label.0[0]);
            let weight = if groups.is_empty() {
                C64::from(1.0)
            } else if all_same {
                w
            } else {
                C64::from(0.0)
            };
            let (atoms, field) = integrate_branch(params, modes, &slots, t_grid, &label.to_string())?;
            Ok((
                BranchTrajectory {
                    label: label.clone(),
                    slots,
                    weight,
                    amplitudes: atoms,
                },
                field,
            ))
        })
        .collect::<Result<_>>()?;

    let (branches, fields): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(MicroscopicTrajectory {
        trajectory: Trajectory {
            params: *params,
            t_grid: t_grid.to_vec(),
            branches,
            descriptor: format!(
                "microscopic M={} W={}γ x_a={}",
                modes.modes_per_direction,
                modes.bandwidth / params.gamma,
                geom.x_a
            ),
        },
        modes: fields,
        grid: modes.clone(),
    })
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.first() != Some(&0.0) {
        return Err(Error::InvalidTimeGrid("grid must start at 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidTimeGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Linear right-hand side `y' = -i H y` with `y = (c_atoms, b_modes)`.
struct Rhs {
    n_atoms: usize,
    /// `K[k][j] = g e^{-ik x_j}`, row-major `2M × n_atoms`.
    k: Vec<C64>,
    detuning: Vec<f64>,
}

impl Rhs {
    fn eval(&self, y: &[C64], out: &mut [C64]) {
        let n = self.n_atoms;
        let (c, b) = y.split_at(n);
        let (dc, db) = out.split_at_mut(n);
        dc.iter_mut().for_each(|z| *z = C64::from(0.0));
        let mi = C64::new(0.0, -1.0);
        for (m, (row, bm)) in self.k.chunks_exact(n).zip(b).enumerate() {
            let mut acc = C64::from(self.detuning[m]) * bm;
            for j in 0..n {
                acc += row[j] * c[j];
                dc[j] += row[j].conj() * bm;
            }
            db[m] = mi * acc;
        }
        for z in dc.iter_mut() {
            *z *= mi;
        }
    }
}

fn integrate_branch(
    params: &PhysicalParams,
    modes: &ModeGrid,
    slots: &[Slot],
    t_grid: &[f64],
    label: &str,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = slots.len();
    let nm = modes.n_modes();
    let xs: Vec<f64> = slots.iter().map(|s| s.anchor()).collect();
    let mut k = Vec::with_capacity(nm * n);
    for m in 0..nm {
        for &x in &xs {
            k.push(modes.g * modes.plane_wave(params, m, x).conj());
        }
    }
    let rhs = Rhs {
        n_atoms: n,
        k,
        detuning: (0..nm).map(|m| modes.detuning(m)).collect(),
    };

    let mut y = vec![C64::from(0.0); n + nm];
    let probe = slots.iter().position(Slot::is_probe).expect("probe slot present");
    y[probe] = C64::from(1.0);

    let mut atoms = DMatrix::zeros(n, t_grid.len());
    let mut field = DMatrix::zeros(nm, t_grid.len());
    atoms.set_column(0, &DVector::from_column_slice(&y[..n]));
    field.set_column(0, &DVector::from_column_slice(&y[n..]));

    let mut stepper = DormandPrince::new(n + nm, 0.01 / (params.gamma + modes.bandwidth / 2.0));
    let mut t = 0.0;
    for (i, &target) in t_grid.iter().enumerate().skip(1) {
        stepper.advance(&rhs, &mut y, &mut t, target, label)?;
        atoms.set_column(i, &DVector::from_column_slice(&y[..n]));
        field.set_column(i, &DVector::from_column_slice(&y[n..]));
    }
    Ok((atoms, field))
}

/// Dormand–Prince 5(4) with FSAL and a standard step-size controller.
struct DormandPrince {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    h: f64,
    fresh: bool,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

impl DormandPrince {
    fn new(dim: usize, h0: f64) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![C64::from(0.0); dim]),
            tmp: vec![C64::from(0.0); dim],
            h: h0,
            fresh: true,
        }
    }

    fn stage(&mut self, y: &[C64], h: f64, coeffs: &[(usize, f64)]) {
        for (i, out) in self.tmp.iter_mut().enumerate() {
            let mut acc = y[i];
            for &(s, a) in coeffs {
                acc += self.k[s][i] * (a * h);
            }
            *out = acc;
        }
    }

    fn advance(&mut self, rhs: &Rhs, y: &mut [C64], t: &mut f64, target: f64, label: &str) -> Result<()> {
        if self.fresh {
            rhs.eval(y, &mut self.k[0]);
            self.fresh = false;
        }
        let mut guard = 0usize;
        while *t < target {
            guard += 1;
            if guard > 50_000_000 {
                return Err(Error::NumericalFailure {
                    branch: label.to_string(),
                    t: *t,
                    reason: "step budget exhausted".into(),
                });
            }
            let remaining = target - *t;
            let landing = self.h >= remaining;
            let h = if landing { remaining } else { self.h };

            self.stage(y, h, &[(0, A21)]);
            rhs.eval(&self.tmp, &mut self.k[1]);
            self.stage(y, h, &[(0, A31), (1, A32)]);
            rhs.eval(&self.tmp, &mut self.k[2]);
            self.stage(y, h, &[(0, A41), (1, A42), (2, A43)]);
            rhs.eval(&self.tmp, &mut self.k[3]);
            self.stage(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            rhs.eval(&self.tmp, &mut self.k[4]);
            self.stage(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            rhs.eval(&self.tmp, &mut self.k[5]);
            self.stage(y, h, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
            rhs.eval(&self.tmp, &mut self.k[6]);

            let mut err2 = 0.0;
            for i in 0..y.len() {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
                err2 += e.norm_sqr();
            }
            let err = err2.sqrt();
            if !err.is_finite() {
                return Err(Error::NumericalFailure {
                    branch: label.to_string(),
                    t: *t,
                    reason: "non-finite state".into(),
                });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * (LOCAL_TOLERANCE / err).powf(0.2)).clamp(0.2, 5.0)
            };
            if err <= LOCAL_TOLERANCE {
                y.copy_from_slice(&self.tmp);
                self.k.swap(0, 6);
                *t = if landing { target } else { *t + h };
                // A shortened landing step says nothing about the natural size.
                if !landing || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor;
            }
        }
        Ok(())
    }
}

/// `E(x) = i Δω/(2π g) Σ_k b_k e^{ikx}`, normalized like the retarded
/// source formula so that a lone emitter gives `e^{ik0|x-x_s|} c(t - |x-x_s|/v)`.
pub fn field_from_modes(params: &PhysicalParams, grid: &ModeGrid, b: &[C64], x: f64) -> C64 {
    let sum: C64 = b
        .iter()
        .enumerate()
        .map(|(m, bm)| bm * grid.plane_wave(params, m, x))
        .sum();
    C64::new(0.0, grid.spacing / (TAU * grid.g)) * sum
}

/// `|E(x, t_i)|²` for branch `branch` evaluated directly from the mode amplitudes.
pub fn intensity_from_modes(micro: &MicroscopicTrajectory, branch: usize, i: usize, x: f64) -> f64 {
    let b: Vec<C64> = micro.modes[branch].column(i).iter().copied().collect();
    field_from_modes(&micro.trajectory.params, &micro.grid, &b, x).norm_sqr()
}

/// Maximum deviation between a Bragg mirror's per-atom amplitudes, projected
/// onto the bright modes, and the collective reduction, over every slot and
/// time. Single-mirror geometries compare `G`, cavities compare `GG`.
pub fn collective_deviation(params: &PhysicalParams, geom: &Geometry, t_grid: &[f64]) -> Result<f64> {
    let collective = match geom.kind {
        ScenarioKind::SingleMirror => build_single_mirror_collective(params, geom)?,
        ScenarioKind::Cavity => build_cavity_collective(params, geom)?,
        ScenarioKind::FullArray => {
            return Err(Error::Unsupported("collective comparison needs a mirror geometry".into()))
        }
    };
    let positions = geom.mirror_positions();
    let full = build_full_array(params, &positions, geom.x_a)?;
    let ct = propagate(&collective, t_grid)?;
    let ft = propagate(&full, t_grid)?;

    let cb = &ct.branches[0];
    let fb = &ft.branches[0];
    let proj = collective_projection(&geom.mirrors, fb.slots.len(), positions.len());
    let projected = &proj * &fb.amplitudes;
    // Projection rows are (probe, mirror 0, mirror 1, ...); map them onto named slots.
    let mut rows = vec![cb.probe_index().expect("probe slot")];
    rows.extend((0..cb.slots.len()).filter(|&i| !cb.slots[i].is_probe()));
    let mut dev: f64 = 0.0;
    for (r, &slot) in rows.iter().enumerate() {
        for i in 0..t_grid.len() {
            dev = dev.max((projected[(r, i)] - cb.amplitudes[(slot, i)]).norm());
        }
    }
    Ok(dev)
}

/// Max over the grid of `| |c_A^micro|² - |c_A^markov|² |` in branch `G` (or
/// `GG`), with `markov` the collective reduction.
pub fn microscopic_deviation(micro: &MicroscopicTrajectory, markov: &Trajectory) -> Result<f64> {
    let a = micro.trajectory.branches[0].probe();
    let b = markov.branches[0].probe();
    if a.len() != b.len() {
        return Err(Error::InvalidTimeGrid("trajectories use different grids".into()));
    }
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uniform_grid;

    #[test]
    fn grid_invariants() {
        let p = PhysicalParams::natural();
        let g = ModeGrid::default_for(&p).unwrap();
        assert!((g.spacing - 0.05).abs() < 1e-15);
        assert!((TAU * g.g * g.g * 2.0 / g.spacing - p.gamma).abs() < 1e-12);
        let sum: f64 = g.detunings.iter().sum();
        assert!(sum.abs() < 1e-9);
        assert!(ModeGrid::new(&p, 2000, 40.0).is_err());
        assert!(ModeGrid::new(&p, 500, 100.0).is_err());
    }

    #[test]
    fn window_is_enforced() {
        let p = PhysicalParams::natural().with_speed(10.0);
        let g = ModeGrid::new(&p, 1000, 50.0).unwrap();
        let geom = Geometry {
            x_a: 0.0,
            mirrors: vec![],
            kind: ScenarioKind::FullArray,
        };
        let r = simulate_microscopic(&p, &geom, &g, &[0.0, 200.0]);
        assert!(matches!(r, Err(Error::OracleWindowExceeded { .. })));
    }

    #[test]
    fn rhs_is_anti_hermitian() {
        let p = PhysicalParams::natural();
        let g = ModeGrid::new(&p, 1000, 50.0).unwrap();
        let slots = vec![Slot::Atom { index: 0, x: 0.7 }, Slot::Probe { x: 0.0 }];
        let nm = g.n_modes();
        let mut k = Vec::new();
        for m in 0..nm {
            for s in &slots {
                k.push(g.g * g.plane_wave(&p, m, s.anchor()).conj());
            }
        }
        let rhs = Rhs {
            n_atoms: 2,
            k,
            detuning: (0..nm).map(|m| g.detuning(m)).collect(),
        };
        let y: Vec<C64> = (0..nm + 2).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut dy = vec![C64::from(0.0); nm + 2];
        rhs.eval(&y, &mut dy);
        let d: C64 = y.iter().zip(&dy).map(|(a, b)| a.conj() * b).sum();
        assert!(d.re.abs() < 1e-10 * y.len() as f64);
    }

    #[test]
    fn short_lone_atom_run_is_unitary() {
        let p = PhysicalParams::natural().with_speed(10.0);
        let g = ModeGrid::new(&p, 1000, 50.0).unwrap();
        let geom = Geometry {
            x_a: 0.0,
            mirrors: vec![],
            kind: ScenarioKind::FullArray,
        };
        let micro = simulate_microscopic(&p, &geom, &g, &uniform_grid(1.0, 11)).unwrap();
        for i in 0..11 {
            assert!((micro.norm_sqr(0, i) - 1.0).abs() < 1e-8);
        }
        let c = micro.trajectory.branches[0].probe()[10];
        assert!((c.norm_sqr() - (-1.0f64).exp()).abs() < 0.02 * (-1.0f64).exp());
    }
}
