//! Physical parameters, geometry and the per-branch coupling matrices.
//!
//! In the single-excitation sector every scenario reduces to a set of
//! independent linear systems `dc/dt = A c`, one per configuration of the
//! mirrors' ground states. Each system is a [`Branch`]; together with its
//! initial weight it forms part of a [`BranchSystem`].
//!
//! Couplings depend only on `|x_i - x_j|`, so every `A` is complex symmetric:
//! `A_jl = -(γ/2) e^{i k0 |x_j - x_l|}` between point emitters, with the
//! Bragg-array bright modes entering through their nearest atom and a
//! cooperative factor `√N`.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default guided-mode speed in units of `λ0 γ`; large enough that the
/// retardation across a 100-atom mirror is far below `1/γ`.
pub const DEFAULT_SPEED: f64 = 1.0e5;

const BRAGG_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Decay rate of one atom into the waveguide.
    pub gamma: f64,
    /// Resonant wavelength.
    pub lambda0: f64,
    /// Guided-mode speed.
    pub v: f64,
}

impl PhysicalParams {
    pub fn new(gamma: f64, lambda0: f64, v: f64) -> Result<Self> {
        let p = Self { gamma, lambda0, v };
        p.validate()?;
        Ok(p)
    }

    /// `γ = 1`, `λ0 = 1`: times in `1/γ`, positions in `λ0`.
    pub fn natural() -> Self {
        Self {
            gamma: 1.0,
            lambda0: 1.0,
            v: DEFAULT_SPEED,
        }
    }

    pub fn with_speed(mut self, v: f64) -> Self {
        self.v = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("gamma", self.gamma), ("lambda0", self.lambda0), ("v", self.v)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {value}")));
            }
        }
        Ok(())
    }

    pub fn k0(&self) -> f64 {
        TAU / self.lambda0
    }

    pub fn omega0(&self) -> f64 {
        self.k0() * self.v
    }

    /// Single-mode coupling with `γ = 2π g0²`.
    pub fn g0(&self) -> f64 {
        (self.gamma / TAU).sqrt()
    }

    /// `e^{i k0 d}`, with the argument reduced modulo `λ0` first so that
    /// shifting `d` by whole wavelengths leaves the phase unchanged.
    pub fn phase(&self, d: f64) -> C64 {
        let frac = (d / self.lambda0).rem_euclid(1.0);
        C64::from_polar(1.0, TAU * frac)
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::natural()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    PlusX,
    MinusX,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::PlusX => 1.0,
            Direction::MinusX => -1.0,
        }
    }
}

/// A linear array of mirror atoms, described from its atom nearest to the probe.
#[derive(Clone, Debug, PartialEq)]
pub struct MirrorSpec {
    pub n_atoms: usize,
    pub x_first: f64,
    pub direction: Direction,
    pub spacing: f64,
}

impl MirrorSpec {
    /// Bragg mirror with spacing `λ0/2`.
    pub fn bragg(params: &PhysicalParams, n_atoms: usize, x_first: f64, direction: Direction) -> Self {
        Self {
            n_atoms,
            x_first,
            direction,
            spacing: params.lambda0 / 2.0,
        }
    }

    pub fn position(&self, n: usize) -> f64 {
        self.x_first + self.direction.sign() * n as f64 * self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_atoms).map(|n| self.position(n)).collect()
    }

    pub fn span(&self) -> (f64, f64) {
        let last = self.position(self.n_atoms.saturating_sub(1));
        (self.x_first.min(last), self.x_first.max(last))
    }

    pub fn extent(&self) -> f64 {
        let (lo, hi) = self.span();
        hi - lo
    }

    pub fn is_bragg(&self, params: &PhysicalParams) -> bool {
        (self.spacing - params.lambda0 / 2.0).abs() <= BRAGG_TOL * params.lambda0
    }

    /// Sign pattern `(-1)^(n-1) / √N` of the bright mode the probe couples to.
    pub fn bright_mode(&self) -> Vec<f64> {
        let norm = (self.n_atoms as f64).sqrt();
        (0..self.n_atoms)
            .map(|n| if n % 2 == 0 { 1.0 / norm } else { -1.0 / norm })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_atoms < 1 {
            return Err(Error::InvalidGeometry("mirror needs at least one atom".into()));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!("mirror spacing must be positive, got {}", self.spacing)));
        }
        if !self.x_first.is_finite() {
            return Err(Error::InvalidGeometry("mirror position must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    SingleMirror,
    Cavity,
    FullArray,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub x_a: f64,
    pub mirrors: Vec<MirrorSpec>,
    pub kind: ScenarioKind,
}

impl Geometry {
    /// Probe at the origin, Bragg mirror starting at `x1` and extending to `+x`.
    pub fn single_mirror(params: &PhysicalParams, n_atoms: usize, x1: f64) -> Self {
        Self {
            x_a: 0.0,
            mirrors: vec![MirrorSpec::bragg(params, n_atoms, x1, Direction::PlusX)],
            kind: ScenarioKind::SingleMirror,
        }
    }

    /// Symmetric cavity: QM1 from `-x1` towards `-x`, QM2 from `x1` towards `+x`.
    pub fn cavity(params: &PhysicalParams, n_atoms: usize, x1: f64, x_a: f64) -> Self {
        Self {
            x_a,
            mirrors: vec![
                MirrorSpec::bragg(params, n_atoms, -x1, Direction::MinusX),
                MirrorSpec::bragg(params, n_atoms, x1, Direction::PlusX),
            ],
            kind: ScenarioKind::Cavity,
        }
    }

    /// Positions of all mirror atoms, mirror by mirror.
    pub fn mirror_positions(&self) -> Vec<f64> {
        self.mirrors.iter().flat_map(|m| m.positions()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x_a.is_finite() {
            return Err(Error::InvalidGeometry("probe position must be finite".into()));
        }
        for m in &self.mirrors {
            m.validate()?;
        }
        let mut all = self.mirror_positions();
        all.push(self.x_a);
        check_distinct(&all)?;
        if self.kind == ScenarioKind::Cavity {
            if self.mirrors.len() != 2 {
                return Err(Error::InvalidGeometry(format!(
                    "cavity needs exactly two mirrors, got {}",
                    self.mirrors.len()
                )));
            }
            let (m1, m2) = (&self.mirrors[0], &self.mirrors[1]);
            if (m1.x_first + m2.x_first).abs() > 1e-12 * m2.x_first.abs().max(1.0) {
                return Err(Error::Unsupported(format!(
                    "cavity mirrors must sit at x_-1 = -x_1, got {} and {}",
                    m1.x_first, m2.x_first
                )));
            }
        }
        Ok(())
    }
}

fn check_distinct(positions: &[f64]) -> Result<()> {
    let mut sorted = positions.to_vec();
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGeometry("positions must be finite".into()));
    }
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[1] - w[0] <= 1e-12 * w[0].abs().max(1.0) {
            return Err(Error::InvalidGeometry(format!("two atoms share position {}", w[0])));
        }
    }
    Ok(())
}

/// Ground-state configuration of one mirror.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MirrorState {
    /// All atoms in `|g⟩`: coupled, reflective.
    G,
    /// All atoms in `|g'⟩`: decoupled, transparent.
    Gp,
}

/// Per-mirror ground-state tags, e.g. `G`, `Gp`, `GGp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BranchLabel(pub Vec<MirrorState>);

impl BranchLabel {
    pub fn new(states: &[MirrorState]) -> Self {
        Self(states.to_vec())
    }

    /// All `2^n` labels for `n` mirrors, `G` before `Gp` in each position.
    pub fn all(n_mirrors: usize) -> Vec<BranchLabel> {
        (0..1usize << n_mirrors)
            .map(|bits| {
                BranchLabel(
                    (0..n_mirrors)
                        .map(|m| {
                            if bits >> (n_mirrors - 1 - m) & 1 == 0 {
                                MirrorState::G
                            } else {
                                MirrorState::Gp
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut states = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix("Gp") {
                states.push(MirrorState::Gp);
                rest = r;
            } else if let Some(r) = rest.strip_prefix('G') {
                states.push(MirrorState::G);
                rest = r;
            } else {
                return None;
            }
        }
        (!states.is_empty()).then_some(Self(states))
    }

    pub fn coupled(&self, mirror: usize) -> bool {
        self.0[mirror] == MirrorState::G
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                MirrorState::G => "G",
                MirrorState::Gp => "Gp",
            })?;
        }
        Ok(())
    }
}

/// One amplitude slot of a branch and the emitter(s) it stands for.
#[derive(Clone, Debug, PartialEq)]
pub enum Slot {
    Probe { x: f64 },
    Atom { index: usize, x: f64 },
    /// Bright mode of a Bragg mirror, `c = Σ (-1)^(n-1) c_n / √N`.
    Collective { name: String, mirror: MirrorSpec },
}

impl Slot {
    pub fn name(&self) -> String {
        match self {
            Slot::Probe { .. } => "A".to_string(),
            Slot::Atom { index, .. } => format!("a{index}"),
            Slot::Collective { name, .. } => name.clone(),
        }
    }

    pub fn is_probe(&self) -> bool {
        matches!(self, Slot::Probe { .. })
    }

    /// Span of positions occupied by the emitter(s).
    pub fn span(&self) -> (f64, f64) {
        match self {
            Slot::Probe { x } | Slot::Atom { x, .. } => (*x, *x),
            Slot::Collective { mirror, .. } => mirror.span(),
        }
    }

    /// Reference point for distances: the atom itself, or the mirror's first atom.
    pub fn anchor(&self) -> f64 {
        match self {
            Slot::Probe { x } | Slot::Atom { x, .. } => *x,
            Slot::Collective { mirror, .. } => mirror.x_first,
        }
    }

    /// `Σ_n |e_n|²`-weighted self-coupling: 1 for a point emitter, `N` for a bright mode.
    pub fn multiplicity(&self) -> f64 {
        match self {
            Slot::Collective { mirror, .. } => mirror.n_atoms as f64,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub label: BranchLabel,
    pub slots: Vec<Slot>,
    /// Coupling matrix in `dc/dt = A c`.
    pub matrix: DMatrix<C64>,
    pub init: DVector<C64>,
    pub weight: C64,
}

impl Branch {
    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name() == name)
    }

    pub fn probe_index(&self) -> Option<usize> {
        self.slots.iter().position(Slot::is_probe)
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }
}

#[derive(Clone, Debug)]
pub struct BranchSystem {
    pub params: PhysicalParams,
    pub kind: ScenarioKind,
    pub branches: Vec<Branch>,
    pub descriptor: String,
}

impl BranchSystem {
    pub fn branch(&self, label: &BranchLabel) -> Option<&Branch> {
        self.branches.iter().find(|b| &b.label == label)
    }

    pub fn branch_by_name(&self, name: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.label.to_string() == name)
    }

    /// `Σ_b |w_b|² Σ_slots |c_b(0)|²`.
    pub fn total_norm(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.weight.norm_sqr() * b.init.norm_squared())
            .sum()
    }

    /// Replace the branch weights (same order as `branches`).
    pub fn with_weights(mut self, weights: &[C64]) -> Result<Self> {
        if weights.len() != self.branches.len() {
            return Err(Error::InvalidParams(format!(
                "expected {} branch weights, got {}",
                self.branches.len(),
                weights.len()
            )));
        }
        for (b, w) in self.branches.iter_mut().zip(weights) {
            b.weight = *w;
        }
        self.check_normalized()?;
        Ok(self)
    }

    /// Override the initial amplitudes of one branch.
    pub fn with_initial(mut self, label: &BranchLabel, init: &[C64]) -> Result<Self> {
        let branch = self
            .branches
            .iter_mut()
            .find(|b| &b.label == label)
            .ok_or_else(|| Error::InvalidParams(format!("no branch {label}")))?;
        if init.len() != branch.dim() {
            return Err(Error::InvalidParams(format!(
                "branch {label} has {} slots, got {} initial amplitudes",
                branch.dim(),
                init.len()
            )));
        }
        branch.init = DVector::from_column_slice(init);
        self.check_normalized()?;
        Ok(self)
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.total_norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!(
                "single-excitation state must be normalized, Σ|w|²|c(0)|² = {n}"
            )));
        }
        Ok(())
    }
}

/// `Γ = -(A + A†)`; positive semidefinite for a passive system.
pub fn dissipator(a: &DMatrix<C64>) -> DMatrix<C64> {
    -(a + a.adjoint())
}

/// Smallest eigenvalue of `Γ = -(A + A†)`.
pub fn min_dissipation_eigenvalue(a: &DMatrix<C64>) -> f64 {
    let gamma = dissipator(a);
    gamma
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Coupling between two slots, in units of `-γ/2`.
fn coupling(params: &PhysicalParams, a: &Slot, b: &Slot) -> C64 {
    let d = (a.anchor() - b.anchor()).abs();
    C64::from((a.multiplicity() * b.multiplicity()).sqrt()) * params.phase(d)
}

/// Assemble `A` over the given slots. Callers guarantee that no emitter
/// lies inside another's span, which makes the bright-mode phases exact.
fn assemble(params: &PhysicalParams, slots: &[Slot]) -> DMatrix<C64> {
    let n = slots.len();
    let scale = C64::from(-params.gamma / 2.0);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            scale * slots[i].multiplicity()
        } else {
            scale * coupling(params, &slots[i], &slots[j])
        }
    })
}

fn check_disjoint(slots: &[Slot]) -> Result<()> {
    for (i, a) in slots.iter().enumerate() {
        for b in &slots[i + 1..] {
            let (alo, ahi) = a.span();
            let (blo, bhi) = b.span();
            if !(ahi < blo || bhi < alo) {
                return Err(Error::InvalidGeometry(format!(
                    "emitters {} and {} overlap",
                    a.name(),
                    b.name()
                )));
            }
        }
    }
    Ok(())
}

fn probe_init(slots: &[Slot]) -> DVector<C64> {
    DVector::from_iterator(
        slots.len(),
        slots.iter().map(|s| if s.is_probe() { C64::from(1.0) } else { C64::from(0.0) }),
    )
}

fn require_bragg(params: &PhysicalParams, m: &MirrorSpec) -> Result<()> {
    if !m.is_bragg(params) {
        return Err(Error::CollectiveInvalid(format!(
            "spacing {} differs from λ0/2 = {}",
            m.spacing,
            params.lambda0 / 2.0
        )));
    }
    Ok(())
}

/// Probe plus one Bragg mirror in its bright mode.
///
/// Branch `G` has slots `(QM, A)` and matrix
/// `-(γ/2) [[N, √N e^{ik0 x1}], [√N e^{ik0 x1}, 1]]`; branch `Gp` is the
/// open-waveguide decay `[-γ/2]`. Weights default to `1/√2` each.
pub fn build_single_mirror_collective(params: &PhysicalParams, geom: &Geometry) -> Result<BranchSystem> {
    params.validate()?;
    if geom.kind != ScenarioKind::SingleMirror || geom.mirrors.len() != 1 {
        return Err(Error::InvalidGeometry("expected a single-mirror geometry".into()));
    }
    geom.validate()?;
    let mirror = &geom.mirrors[0];
    require_bragg(params, mirror)?;

    let probe = Slot::Probe { x: geom.x_a };
    let qm = Slot::Collective {
        name: "QM".into(),
        mirror: mirror.clone(),
    };
    let g_slots = vec![qm, probe.clone()];
    check_disjoint(&g_slots)?;
    let gp_slots = vec![probe];
    let w = C64::from(std::f64::consts::FRAC_1_SQRT_2);

    let branches = vec![
        Branch {
            label: BranchLabel::new(&[MirrorState::G]),
            matrix: assemble(params, &g_slots),
            init: probe_init(&g_slots),
            slots: g_slots,
            weight: w,
        },
        Branch {
            label: BranchLabel::new(&[MirrorState::Gp]),
            matrix: assemble(params, &gp_slots),
            init: probe_init(&gp_slots),
            slots: gp_slots,
            weight: w,
        },
    ];
    Ok(BranchSystem {
        params: *params,
        kind: ScenarioKind::SingleMirror,
        branches,
        descriptor: format!(
            "single-mirror N={} x1={} x_a={}",
            mirror.n_atoms, mirror.x_first, geom.x_a
        ),
    })
}

/// Probe plus arbitrary point atoms, no collective reduction.
///
/// Branch `G` has one slot per atom followed by the probe, with
/// `A_jl = -(γ/2) e^{ik0|x_j - x_l|}`; branch `Gp` is the lone probe.
pub fn build_full_array(params: &PhysicalParams, positions: &[f64], probe_x: f64) -> Result<BranchSystem> {
    params.validate()?;
    let mut all = positions.to_vec();
    all.push(probe_x);
    check_distinct(&all)?;

    let mut g_slots: Vec<Slot> = positions
        .iter()
        .enumerate()
        .map(|(index, &x)| Slot::Atom { index, x })
        .collect();
    g_slots.push(Slot::Probe { x: probe_x });
    let gp_slots = vec![Slot::Probe { x: probe_x }];
    let w = C64::from(std::f64::consts::FRAC_1_SQRT_2);

    Ok(BranchSystem {
        params: *params,
        kind: ScenarioKind::FullArray,
        branches: vec![
            Branch {
                label: BranchLabel::new(&[MirrorState::G]),
                matrix: assemble(params, &g_slots),
                init: probe_init(&g_slots),
                slots: g_slots,
                weight: w,
            },
            Branch {
                label: BranchLabel::new(&[MirrorState::Gp]),
                matrix: assemble(params, &gp_slots),
                init: probe_init(&gp_slots),
                slots: gp_slots,
                weight: w,
            },
        ],
        descriptor: format!("full-array atoms={} probe_x={}", positions.len(), probe_x),
    })
}

/// Probe between two Bragg mirrors, each reduced to its bright mode.
///
/// Produces the four branches `GG (A, QM1, QM2)`, `GGp (A, QM1)`,
/// `GpG (A, QM2)` and `GpGp (A)`. Weights default to `1/√2` on `GG` and
/// `GpGp`, zero elsewhere.
pub fn build_cavity_collective(params: &PhysicalParams, geom: &Geometry) -> Result<BranchSystem> {
    params.validate()?;
    if geom.kind != ScenarioKind::Cavity {
        return Err(Error::InvalidGeometry("expected a cavity geometry".into()));
    }
    geom.validate()?;
    let (m1, m2) = (&geom.mirrors[0], &geom.mirrors[1]);
    if m1.n_atoms != m2.n_atoms {
        return Err(Error::Unsupported(format!(
            "mirrors of unequal size ({} vs {})",
            m1.n_atoms, m2.n_atoms
        )));
    }
    if m1.direction != Direction::MinusX || m2.direction != Direction::PlusX {
        return Err(Error::Unsupported("cavity mirrors must extend away from the probe".into()));
    }
    require_bragg(params, m1)?;
    require_bragg(params, m2)?;
    if geom.x_a.abs() >= m2.x_first {
        return Err(Error::InvalidGeometry(format!(
            "probe at {} is not inside the cavity (x1 = {})",
            geom.x_a, m2.x_first
        )));
    }

    let probe = Slot::Probe { x: geom.x_a };
    let qm1 = Slot::Collective {
        name: "QM1".into(),
        mirror: m1.clone(),
    };
    let qm2 = Slot::Collective {
        name: "QM2".into(),
        mirror: m2.clone(),
    };
    let w = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let zero = C64::from(0.0);

    let branches = BranchLabel::all(2)
        .into_iter()
        .map(|label| {
            let mut slots = vec![probe.clone()];
            if label.coupled(0) {
                slots.push(qm1.clone());
            }
            if label.coupled(1) {
                slots.push(qm2.clone());
            }
            let weight = if label.coupled(0) == label.coupled(1) { w } else { zero };
            Branch {
                matrix: assemble(params, &slots),
                init: probe_init(&slots),
                slots,
                label,
                weight,
            }
        })
        .collect();

    Ok(BranchSystem {
        params: *params,
        kind: ScenarioKind::Cavity,
        branches,
        descriptor: format!("cavity N={} x1={} x_a={}", m2.n_atoms, m2.x_first, geom.x_a),
    })
}

/// Orthonormal rows projecting per-atom amplitudes onto `(probe, bright modes...)`.
///
/// `atom_mirror[i]` names the mirror (index into `mirrors`) of atom `i`, and
/// `probe` is the slot index of the probe in the per-atom basis.
pub fn collective_projection(mirrors: &[MirrorSpec], n_slots: usize, probe: usize) -> DMatrix<C64> {
    let mut p = DMatrix::zeros(1 + mirrors.len(), n_slots);
    p[(0, probe)] = C64::from(1.0);
    let mut offset = 0;
    for (m, spec) in mirrors.iter().enumerate() {
        for (n, e) in spec.bright_mode().into_iter().enumerate() {
            p[(m + 1, offset + n)] = C64::from(e);
        }
        offset += spec.n_atoms;
    }
    p
}
