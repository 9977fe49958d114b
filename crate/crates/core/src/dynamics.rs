//! Time evolution of branch amplitudes.
//!
//! Three independent routes are available: the matrix exponential
//! ([`propagate`]), the pole/residue expansion of the Laplace-domain
//! solution ([`pole_decomposition`]) and closed forms for the single-mirror
//! and cavity geometries.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BranchLabel, BranchSystem, Geometry, PhysicalParams, ScenarioKind, Slot, C64};

/// Eigenvector condition number above which the eigen route is abandoned.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Relative pole gap (units of γ) below which poles count as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BranchTrajectory {
    pub label: BranchLabel,
    pub slots: Vec<Slot>,
    pub weight: C64,
    /// `n_slots × n_times`.
    pub amplitudes: DMatrix<C64>,
}

impl BranchTrajectory {
    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name() == name)
    }

    pub fn probe_index(&self) -> Option<usize> {
        self.slots.iter().position(Slot::is_probe)
    }

    pub fn series(&self, slot: usize) -> Vec<C64> {
        self.amplitudes.row(slot).iter().copied().collect()
    }

    pub fn probe(&self) -> Vec<C64> {
        self.probe_index().map(|i| self.series(i)).unwrap_or_default()
    }

    /// `Σ_slots |c(t_i)|²`.
    pub fn norm_sqr(&self, i: usize) -> f64 {
        self.amplitudes.column(i).norm_squared()
    }

    pub fn state(&self, i: usize) -> DVector<C64> {
        self.amplitudes.column(i).into_owned()
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub params: PhysicalParams,
    pub t_grid: Vec<f64>,
    pub branches: Vec<BranchTrajectory>,
    pub descriptor: String,
}

impl Trajectory {
    pub fn branch(&self, label: &BranchLabel) -> Option<&BranchTrajectory> {
        self.branches.iter().find(|b| &b.label == label)
    }

    pub fn branch_by_name(&self, name: &str) -> Option<&BranchTrajectory> {
        self.branches.iter().find(|b| b.label.to_string() == name)
    }

    pub fn t_max(&self) -> f64 {
        self.t_grid.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PropagationMethod {
    /// Eigendecomposition when well conditioned, scaling-and-squaring otherwise.
    #[default]
    Auto,
    Eigen,
    ScalingSquaring,
}

/// Uniform grid of `n` points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        None => return Err(Error::InvalidTimeGrid("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidTimeGrid(format!("grid must start at 0, starts at {t0}")))
        }
        _ => {}
    }
    if let Some(w) = t_grid.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidTimeGrid(format!(
            "grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

pub fn propagate(system: &BranchSystem, t_grid: &[f64]) -> Result<Trajectory> {
    propagate_with(system, t_grid, PropagationMethod::Auto)
}

/// `c(t) = exp(A t) c(0)` for every branch on `t_grid`.
pub fn propagate_with(system: &BranchSystem, t_grid: &[f64], method: PropagationMethod) -> Result<Trajectory> {
    check_grid(t_grid)?;
    let branches = system
        .branches
        .iter()
        .map(|b| {
            let label = b.label.to_string();
            let amplitudes = propagate_branch(&b.matrix, &b.init, t_grid, method, &label)?;
            Ok(BranchTrajectory {
                label: b.label.clone(),
                slots: b.slots.clone(),
                weight: b.weight,
                amplitudes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        params: system.params,
        t_grid: t_grid.to_vec(),
        branches,
        descriptor: system.descriptor.clone(),
    })
}

fn propagate_branch(
    a: &DMatrix<C64>,
    init: &DVector<C64>,
    t_grid: &[f64],
    method: PropagationMethod,
    label: &str,
) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, t_grid.len());
    out.set_column(0, init);

    let eig = match method {
        PropagationMethod::ScalingSquaring => None,
        _ => linalg::eigen(a).filter(|e| e.condition <= CONDITION_LIMIT),
    };
    if method == PropagationMethod::Eigen && eig.is_none() {
        return Err(Error::NumericalFailure {
            branch: label.to_string(),
            t: 0.0,
            reason: "matrix is not safely diagonalizable".into(),
        });
    }

    match eig {
        Some(e) => {
            let coeffs = &e.inverse * init;
            for (i, &t) in t_grid.iter().enumerate().skip(1) {
                let weighted = DVector::from_iterator(n, (0..n).map(|j| coeffs[j] * (e.values[j] * t).exp()));
                out.set_column(i, &(&e.vectors * weighted));
                check_finite(&out, i, t, label)?;
            }
        }
        None => {
            let mut cache: HashMap<u64, DMatrix<C64>> = HashMap::new();
            for i in 1..t_grid.len() {
                let dt = t_grid[i] - t_grid[i - 1];
                let step = cache
                    .entry(dt.to_bits())
                    .or_insert_with(|| linalg::expm(&(a * C64::from(dt))));
                let next = &*step * out.column(i - 1);
                out.set_column(i, &next);
                check_finite(&out, i, t_grid[i], label)?;
            }
        }
    }
    Ok(out)
}

fn check_finite(out: &DMatrix<C64>, i: usize, t: f64, label: &str) -> Result<()> {
    if out.column(i).iter().all(|z| z.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure {
            branch: label.to_string(),
            t,
            reason: "non-finite amplitude".into(),
        })
    }
}

/// `c_slot(t) = Σ_j r_slot,j e^{s_j t}`.
#[derive(Clone, Debug)]
pub struct PoleDecomposition {
    pub poles: Vec<C64>,
    /// `n_slots × n_poles`; absent when any pole is degenerate.
    pub residues: Option<DMatrix<C64>>,
    pub degenerate: Vec<bool>,
}

impl PoleDecomposition {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }

    pub fn evaluate(&self, t: f64) -> Option<DVector<C64>> {
        let r = self.residues.as_ref()?;
        let e = DVector::from_iterator(self.poles.len(), self.poles.iter().map(|s| (s * t).exp()));
        Some(r * e)
    }
}

/// Poles are the eigenvalues of `A`; residues are the spectral projectors
/// applied to `c(0)`.
pub fn pole_decomposition(system: &BranchSystem, label: &BranchLabel) -> Result<PoleDecomposition> {
    let branch = system
        .branch(label)
        .ok_or_else(|| Error::InvalidParams(format!("no branch {label}")))?;
    let gamma = system.params.gamma;
    let a = &branch.matrix;
    let n = a.nrows();

    let Some(e) = linalg::eigen(a) else {
        let poles = linalg::eigenvalues(a).ok_or_else(|| Error::NumericalFailure {
            branch: label.to_string(),
            t: 0.0,
            reason: "Schur iteration did not converge".into(),
        })?;
        let k = poles.len();
        return Ok(PoleDecomposition {
            poles,
            residues: None,
            degenerate: vec![true; k],
        });
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        e.values[j]
            .re
            .total_cmp(&e.values[i].re)
            .then(e.values[i].im.total_cmp(&e.values[j].im))
    });
    let poles: Vec<C64> = order.iter().map(|&i| e.values[i]).collect();

    let degenerate: Vec<bool> = (0..n)
        .map(|i| (0..n).any(|j| j != i && (poles[i] - poles[j]).norm() < DEGENERACY_GAP * gamma))
        .collect();

    let residues = if degenerate.iter().any(|&d| d) || e.condition > CONDITION_LIMIT {
        None
    } else {
        let coeffs = &e.inverse * &branch.init;
        Some(DMatrix::from_fn(n, n, |slot, p| e.vectors[(slot, order[p])] * coeffs[order[p]]))
    };
    Ok(PoleDecomposition {
        poles,
        residues,
        degenerate,
    })
}

/// Closed-form expressions provided by this module.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedFormKind {
    /// Two-pole solution for any `N`, exact in the Markov limit.
    SingleMirrorFiniteN,
    /// `N → ∞`: the mirror acts as a perfect boundary.
    SingleMirrorLargeN,
    OpenWaveguide,
    /// `x_A = 0`, `x1 = p λ0/2`.
    CavityNode,
    /// `x_A = 0`, `x1 = (2p+1) λ0/4`.
    CavityAntinode,
    /// `0 < k0 |x_A| ≪ 1`, `x1 = p λ0/2`.
    CavityNearNode,
}

/// Largest `k0 |x_A|` accepted as "near" the node.
pub const NEAR_NODE_MAX_PHASE: f64 = 0.3;
const PHASE_MATCH_TOL: f64 = 1e-9;

/// `c'_A(t) = e^{-γt/2}` for unit initial amplitude.
pub fn open_waveguide(params: &PhysicalParams, t: f64) -> C64 {
    C64::from((-params.gamma * t / 2.0).exp())
}

fn single_mirror_setup(params: &PhysicalParams, geom: &Geometry) -> Result<(f64, f64)> {
    if geom.kind != ScenarioKind::SingleMirror || geom.mirrors.len() != 1 {
        return Err(Error::InvalidGeometry("expected a single-mirror geometry".into()));
    }
    geom.validate()?;
    let m = &geom.mirrors[0];
    if !m.is_bragg(params) {
        return Err(Error::CollectiveInvalid("closed form needs λ0/2 spacing".into()));
    }
    Ok((m.n_atoms as f64, (m.x_first - geom.x_a).abs()))
}

/// Exact roots of `(s + γ/2)(s + Nγ/2) - (Nγ²/4) e^{2ik0 d} = 0`, where `d`
/// is the probe-mirror distance. The first root is the one with the smaller
/// magnitude (the slow pole).
pub fn single_mirror_poles(params: &PhysicalParams, n: f64, distance: f64) -> (C64, C64) {
    let g = params.gamma;
    let e2 = params.phase(2.0 * distance);
    let b = C64::from((n + 1.0) * g / 2.0);
    let c = C64::from(n * g * g / 4.0) * (C64::from(1.0) - e2);
    let disc = (b * b - 4.0 * c).sqrt();
    // Pick the sign that avoids cancellation, then use the product of roots.
    let q = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
    let fast = -q / 2.0;
    let slow = if fast.norm() > 0.0 { c / fast } else { C64::from(0.0) };
    (slow, fast)
}

/// `(c_A(t), c_QM(t))` for `c_A(0) = 1`, `c_QM(0) = 0`.
pub fn closed_form_single_mirror(params: &PhysicalParams, geom: &Geometry, t: f64) -> Result<(C64, C64)> {
    let (n, d) = single_mirror_setup(params, geom)?;
    let g = params.gamma;
    let (sp, sm) = single_mirror_poles(params, n, d);
    let half_n = C64::from(n * g / 2.0);
    let coupling = -C64::from(n.sqrt() * g / 2.0) * params.phase(d);
    let gap = sp - sm;
    if gap.norm() < DEGENERACY_GAP * g {
        let s = (sp + sm) / 2.0;
        let e = (s * t).exp();
        let ca = e * (C64::from(1.0) + (s + half_n) * t);
        return Ok((ca, coupling * t * e));
    }
    let (ep, em) = ((sp * t).exp(), (sm * t).exp());
    let ca = ((sp + half_n) * ep - (sm + half_n) * em) / gap;
    let cqm = coupling * (ep - em) / gap;
    Ok((ca, cqm))
}

/// Large-`N` single-mirror asymptote
/// `c_A(t) = e^{i(γt/2) sin 2k0x1} e^{-(γt/2)(1 - cos 2k0x1)}`, for `c_A(0) = 1`.
pub fn large_n_single_mirror(params: &PhysicalParams, x1: f64, t: f64) -> C64 {
    let e2 = params.phase(2.0 * x1);
    (-(params.gamma * t / 2.0) * (C64::from(1.0) - e2)).exp()
}

/// Large-`N` cavity asymptotes `(c_A,GG, c_QM1, c_QM2)` for `c_A,GG(0) = 1`.
///
/// - node: `c_A = 1`, `c_QM = -e^{ik0x1}(1 - e^{-Nγt}) / (2√N)`, vanishing as `1/√N`.
/// - antinode: `c_A = e^{-γt/4} cos(Ωt)`, `c_QM1 = c_QM2 = -(e^{ik0x1}/√2) e^{-γt/4} sin(Ωt)`,
///   `Ω = √(N/2) γ`. The mirror amplitude is fixed by probability
///   conservation, `|c_A|² + 2|c_QM|² = e^{-γt/2}`.
/// - near node: `c_A = cos(φ Ω t)`, `c_QM1 = -c_QM2 = -(i e^{ik0x1}/√2) sin(φ Ω t)`, `φ = k0 x_A`.
pub fn large_n_cavity(
    params: &PhysicalParams,
    case: ClosedFormKind,
    x_a: f64,
    x1: f64,
    n: usize,
    t: f64,
) -> Result<(C64, C64, C64)> {
    if n == 0 {
        return Err(Error::InvalidGeometry("mirror needs at least one atom".into()));
    }
    let g = params.gamma;
    let nf = n as f64;
    let omega = (nf / 2.0).sqrt() * g;
    let e1 = params.phase(x1);
    let e2 = params.phase(2.0 * x1);
    let at_node = (e2 - 1.0).norm() <= PHASE_MATCH_TOL;
    let at_antinode = (e2 + 1.0).norm() <= PHASE_MATCH_TOL;
    let centered = x_a.abs() <= 1e-12 * params.lambda0;
    let phi = params.k0() * x_a;
    let s2 = std::f64::consts::FRAC_1_SQRT_2;

    match case {
        ClosedFormKind::CavityNode => {
            if !(at_node && centered) {
                return Err(Error::InvalidCase("node case needs x_A = 0 and x1 = p λ0/2".into()));
            }
            let qm = -e1 * (1.0 - (-nf * g * t).exp()) / (2.0 * nf.sqrt());
            Ok((C64::from(1.0), qm, qm))
        }
        ClosedFormKind::CavityAntinode => {
            if !(at_antinode && centered) {
                return Err(Error::InvalidCase("antinode case needs x_A = 0 and x1 = (2p+1) λ0/4".into()));
            }
            let env = (-g * t / 4.0).exp();
            let qm = -e1 * s2 * env * (omega * t).sin();
            Ok((C64::from(env * (omega * t).cos()), qm, qm))
        }
        ClosedFormKind::CavityNearNode => {
            if !(at_node && phi.abs() > 0.0 && phi.abs() <= NEAR_NODE_MAX_PHASE) {
                return Err(Error::InvalidCase(format!(
                    "near-node case needs x1 = p λ0/2 and 0 < k0|x_A| <= {NEAR_NODE_MAX_PHASE}"
                )));
            }
            let arg = phi * omega * t;
            let qm1 = -C64::i() * e1 * s2 * arg.sin();
            Ok((C64::from(arg.cos()), qm1, -qm1))
        }
        other => Err(Error::InvalidCase(format!("{other:?} is not a cavity closed form"))),
    }
}

/// Simple estimators for frequencies and rates of sampled signals.
pub mod fit {
    /// Angular frequency from zero crossings: `π (n - 1) / (t_last - t_first)`.
    /// Crossing times are linearly interpolated; needs at least two crossings.
    pub fn zero_crossing_frequency(t: &[f64], y: &[f64]) -> Option<f64> {
        let crossings = zero_crossings(t, y);
        if crossings.len() < 2 {
            return None;
        }
        let span = crossings[crossings.len() - 1] - crossings[0];
        Some(std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
    }

    pub fn zero_crossings(t: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 1..t.len().min(y.len()) {
            let (a, b) = (y[i - 1], y[i]);
            if a == 0.0 && i == 1 {
                out.push(t[0]);
            }
            if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
                if b == 0.0 {
                    out.push(t[i]);
                } else {
                    out.push(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
                }
            }
        }
        out.dedup();
        out
    }

    /// Least-squares slope of `(x, y)`.
    pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
        let n = x.len().min(y.len());
        if n < 2 {
            return None;
        }
        let mx = x[..n].iter().sum::<f64>() / n as f64;
        let my = y[..n].iter().sum::<f64>() / n as f64;
        let sxy: f64 = (0..n).map(|i| (x[i] - mx) * (y[i] - my)).sum();
        let sxx: f64 = (0..n).map(|i| (x[i] - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }

    /// Exponential decay rate of `p(t)` from a log-linear fit over `[t_lo, t_hi]`.
    pub fn decay_rate(t: &[f64], p: &[f64], t_lo: f64, t_hi: f64) -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = t
            .iter()
            .zip(p)
            .filter(|(&ti, &pi)| ti >= t_lo && ti <= t_hi && pi > 0.0)
            .map(|(&ti, &pi)| (ti, pi.ln()))
            .unzip();
        slope(&x, &y).map(|s| -s)
    }

    /// Interior local maxima `(t, y)`.
    pub fn local_maxima(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
        (1..y.len().saturating_sub(1))
            .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
            .map(|i| (t[i], y[i]))
            .collect()
    }

    /// Decay rate of the envelope of an oscillating magnitude `|y(t)|`.
    pub fn envelope_decay_rate(t: &[f64], magnitude: &[f64]) -> Option<f64> {
        let peaks = local_maxima(t, magnitude);
        let (x, y): (Vec<f64>, Vec<f64>) = peaks
            .into_iter()
            .filter(|&(_, v)| v > 0.0)
            .map(|(ti, v)| (ti, v.ln()))
            .unzip();
        slope(&x, &y).map(|s| -s)
    }

    /// Mean spacing between consecutive interior maxima.
    pub fn mean_peak_spacing(t: &[f64], y: &[f64]) -> Option<f64> {
        let peaks = local_maxima(t, y);
        if peaks.len() < 2 {
            return None;
        }
        Some((peaks[peaks.len() - 1].0 - peaks[0].0) / (peaks.len() - 1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_full_array, build_single_mirror_collective, MirrorState};

    fn p() -> PhysicalParams {
        PhysicalParams::natural()
    }

    fn g_label() -> BranchLabel {
        BranchLabel::new(&[MirrorState::G])
    }

    #[test]
    fn open_branch_decays_at_gamma() {
        let p = p();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 100, 1.5)).unwrap();
        let grid = uniform_grid(10.0, 201);
        let traj = propagate(&sys, &grid).unwrap();
        let gp = traj.branch_by_name("Gp").unwrap();
        for (i, &t) in grid.iter().enumerate() {
            assert!((gp.norm_sqr(i) - (-t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_grid_is_identity() {
        let p = p();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 10, 1.3)).unwrap();
        let traj = propagate(&sys, &[0.0]).unwrap();
        for (b, bt) in sys.branches.iter().zip(&traj.branches) {
            assert_eq!(bt.state(0), b.init);
        }
    }

    #[test]
    fn grid_errors() {
        let p = p();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 10, 1.3)).unwrap();
        assert!(matches!(propagate(&sys, &[]), Err(Error::InvalidTimeGrid(_))));
        assert!(matches!(propagate(&sys, &[0.1, 0.2]), Err(Error::InvalidTimeGrid(_))));
        assert!(matches!(propagate(&sys, &[0.0, 0.2, 0.2]), Err(Error::InvalidTimeGrid(_))));
    }

    #[test]
    fn non_finite_is_reported() {
        let p = p();
        let mut sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 10, 1.3)).unwrap();
        sys.branches[1].matrix[(0, 0)] = C64::new(f64::NAN, 0.0);
        let err = propagate(&sys, &[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { ref branch, .. } if branch == "Gp"), "{err}");
    }

    #[test]
    fn closed_form_matches_propagation() {
        let p = p();
        for x1 in [1.5, 1.25, 0.83] {
            let geom = Geometry::single_mirror(&p, 100, x1);
            let sys = build_single_mirror_collective(&p, &geom).unwrap();
            let grid = uniform_grid(10.0, 101);
            let traj = propagate_with(&sys, &grid, PropagationMethod::ScalingSquaring).unwrap();
            let g = traj.branch_by_name("G").unwrap();
            let (qm, a) = (g.slot_index("QM").unwrap(), g.slot_index("A").unwrap());
            for (i, &t) in grid.iter().enumerate() {
                let (ca, cq) = closed_form_single_mirror(&p, &geom, t).unwrap();
                assert!((ca - g.amplitudes[(a, i)]).norm() < 1e-9, "x1={x1} t={t}");
                assert!((cq - g.amplitudes[(qm, i)]).norm() < 1e-9, "x1={x1} t={t}");
            }
        }
    }

    #[test]
    fn closed_form_initial_condition() {
        let p = p();
        for n in [1, 7, 100] {
            let (ca, cq) = closed_form_single_mirror(&p, &Geometry::single_mirror(&p, n, 1.1), 0.0).unwrap();
            assert!((ca - 1.0).norm() < 1e-14);
            assert!(cq.norm() < 1e-14);
        }
    }

    #[test]
    fn node_plateau_matches_slow_residue() {
        let p = p();
        let geom = Geometry::single_mirror(&p, 100, 1.5);
        let sys = build_single_mirror_collective(&p, &geom).unwrap();
        let traj = propagate(&sys, &[0.0, 50.0]).unwrap();
        let a = traj.branch_by_name("G").unwrap().probe()[1];
        let (ca, _) = closed_form_single_mirror(&p, &geom, 50.0).unwrap();
        assert!((ca.norm_sqr() - a.norm_sqr()).abs() < 1e-9);
        assert!((a.norm_sqr() - (100.0f64 / 101.0).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn node_poles_are_zero_and_collective_rate() {
        let p = p();
        for (n, x1) in [(100, 1.5), (7, 2.0), (1, 0.5)] {
            let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, n, x1)).unwrap();
            let poles = pole_decomposition(&sys, &g_label()).unwrap().poles;
            assert!(poles[0].norm() < 1e-10, "{poles:?}");
            assert!((poles[1] + (n as f64 + 1.0) / 2.0).norm() < 1e-10, "{poles:?}");
            let (slow, fast) = single_mirror_poles(&p, n as f64, x1);
            assert!(slow.norm() < 1e-12 && (fast + (n as f64 + 1.0) / 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn single_atom_mirror_poles_at_antinode() {
        let p = p();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 1, 0.25)).unwrap();
        let mut poles = pole_decomposition(&sys, &g_label()).unwrap().poles;
        poles.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((poles[0] - C64::new(-0.5, -0.5)).norm() < 1e-12);
        assert!((poles[1] - C64::new(-0.5, 0.5)).norm() < 1e-12);
        let (s1, s2) = single_mirror_poles(&p, 1.0, 0.25);
        let mut q = [s1, s2];
        q.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((q[0] - poles[0]).norm() < 1e-12 && (q[1] - poles[1]).norm() < 1e-12);
    }

    #[test]
    fn gp_pole_decomposition() {
        let p = p();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 5, 1.5)).unwrap();
        let d = pole_decomposition(&sys, &BranchLabel::new(&[MirrorState::Gp])).unwrap();
        assert_eq!(d.poles, vec![C64::from(-0.5)]);
        assert!((d.residues.unwrap()[(0, 0)] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn bragg_full_array_is_flagged_degenerate() {
        let p = p();
        let geom = Geometry::single_mirror(&p, 8, 1.5);
        let full = build_full_array(&p, &geom.mirror_positions(), 0.0).unwrap();
        let d = pole_decomposition(&full, &g_label()).unwrap();
        assert!(d.is_degenerate());
        assert!(d.residues.is_none());
    }

    #[test]
    fn residues_sum_to_initial_state() {
        let p = p();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 30, 1.37)).unwrap();
        let d = pole_decomposition(&sys, &g_label()).unwrap();
        let r = d.residues.unwrap();
        let sum: DVector<C64> = r.column_sum();
        assert!((sum - &sys.branches[0].init).norm() < 1e-10);
    }

    #[test]
    fn large_n_limits() {
        let p = p();
        for t in [0.0, 1.0, 7.5] {
            assert!((large_n_single_mirror(&p, 1.5, t).norm() - 1.0).abs() < 1e-12);
            assert!((large_n_single_mirror(&p, 1.25, t).norm_sqr() - (-2.0 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn cavity_case_validation() {
        let p = p();
        assert!(large_n_cavity(&p, ClosedFormKind::CavityNode, 0.0, 1.5, 100, 1.0).is_ok());
        assert!(matches!(
            large_n_cavity(&p, ClosedFormKind::CavityNode, 0.0, 1.25, 100, 1.0),
            Err(Error::InvalidCase(_))
        ));
        assert!(matches!(
            large_n_cavity(&p, ClosedFormKind::CavityAntinode, 0.1, 1.25, 100, 1.0),
            Err(Error::InvalidCase(_))
        ));
        assert!(matches!(
            large_n_cavity(&p, ClosedFormKind::CavityNearNode, 0.0, 1.5, 100, 1.0),
            Err(Error::InvalidCase(_))
        ));
        assert!(matches!(
            large_n_cavity(&p, ClosedFormKind::OpenWaveguide, 0.0, 1.5, 100, 1.0),
            Err(Error::InvalidCase(_))
        ));
    }

    #[test]
    fn antinode_closed_form_conserves_probability() {
        let p = p();
        for t in [0.0, 0.3, 2.0, 9.1] {
            let (a, q1, q2) = large_n_cavity(&p, ClosedFormKind::CavityAntinode, 0.0, 1.25, 100, t).unwrap();
            let total = a.norm_sqr() + q1.norm_sqr() + q2.norm_sqr();
            assert!((total - (-t / 2.0f64).exp()).abs() < 1e-12);
        }
        let (a, q1, q2) = large_n_cavity(&p, ClosedFormKind::CavityNearNode, 0.01, 1.5, 100, 3.0).unwrap();
        assert!((a.norm_sqr() + q1.norm_sqr() + q2.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(q1, -q2);
    }

    #[test]
    fn fit_helpers_on_synthetic_signals() {
        let t = uniform_grid(10.0, 4001);
        let y: Vec<f64> = t.iter().map(|&t| (-0.3 * t).exp() * (3.0 * t).cos()).collect();
        let w = fit::zero_crossing_frequency(&t, &y).unwrap();
        assert!((w - 3.0).abs() < 1e-3);
        let p: Vec<f64> = t.iter().map(|&t| 2.0 * (-1.7 * t).exp()).collect();
        assert!((fit::decay_rate(&t, &p, 0.5, 2.0).unwrap() - 1.7).abs() < 1e-9);
        let m: Vec<f64> = y.iter().map(|v| v.abs()).collect();
        assert!((fit::envelope_decay_rate(&t, &m).unwrap() - 0.3).abs() < 1e-2);
        let s: Vec<f64> = t.iter().map(|&t| (2.0 * t).cos()).collect();
        assert!((fit::mean_peak_spacing(&t, &s).unwrap() - std::f64::consts::PI).abs() < 1e-2);
    }
}
