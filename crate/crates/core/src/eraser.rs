//! Post-selection on the mirror state: after measuring the mirror in the
//! basis `(|G⟩ + e^{iφ_M}|G'⟩)/√2`, the probe's excitation probability
//! carries an interference term between the reflective and transparent
//! branches.

use std::f64::consts::TAU;

use nalgebra::DMatrix;

use crate::dynamics::{pole_decomposition, propagate, Trajectory};
use crate::error::{Error, Result};
use crate::model::{BranchLabel, BranchSystem, MirrorState, PhysicalParams, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EraserParams {
    /// Measurement-basis phase (rad).
    pub phi_m: f64,
    /// Initial phase of the mirror superposition (rad).
    pub phi_s: f64,
    /// Ground-level splitting as an angular frequency, `φ_S(t) = φ_S + δ t`.
    pub delta: f64,
    /// Measurement time.
    pub t_m: f64,
}

impl Default for EraserParams {
    fn default() -> Self {
        Self {
            phi_m: 0.0,
            phi_s: 0.0,
            delta: 0.0,
            t_m: 1.0,
        }
    }
}

impl EraserParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi_m.is_finite() && self.phi_s.is_finite() && self.delta.is_finite()) {
            return Err(Error::InvalidParams("eraser phases and splitting must be finite".into()));
        }
        if !(self.t_m >= 0.0 && self.t_m.is_finite()) {
            return Err(Error::InvalidParams(format!("t_M must be >= 0, got {}", self.t_m)));
        }
        Ok(())
    }

    /// `Δφ(t) = φ_M - φ_S - δ t`, reduced to `[0, 2π)`.
    pub fn delta_phi(&self, t: f64) -> f64 {
        wrap_phase(self.phi_m - self.phi_s - self.delta * t)
    }
}

pub fn wrap_phase(phi: f64) -> f64 {
    phi.rem_euclid(TAU)
}

/// `P_e = ¼ |c_A + e^{-iφ_M} c'_A|²` for per-branch amplitudes that each
/// start at 1, with the mirror prepared in an equal superposition.
/// Equals `cos²(φ_M/2)` at `t_M = 0`.
pub fn post_erasure_probability(c_a: C64, c_ap: C64, phi_m: f64) -> f64 {
    0.5 * interference(c_a, c_ap, phi_m)
}

/// `½ |a + e^{-iφ} b|²`, expanded so that `cos φ = ±1` cancels exactly.
fn interference(a: C64, b: C64, phi: f64) -> f64 {
    let cross = a.conj() * b * C64::new(phi.cos(), -phi.sin());
    (0.5 * (a.norm_sqr() + b.norm_sqr() + 2.0 * cross.re)).max(0.0)
}

/// `P_e = ½ |a + e^{-iφ_M} b|²` for amplitudes that already carry their
/// branch weights, `a = w_G c_A`, `b = w_G' c'_A`.
pub fn weighted_post_erasure_probability(a: C64, b: C64, phi_m: f64) -> f64 {
    interference(a, b, phi_m)
}

/// Statistical-mixture baseline: the cross term averaged away.
pub fn mixture_probability(c_a: C64, c_ap: C64) -> f64 {
    0.25 * (c_a.norm_sqr() + c_ap.norm_sqr())
}

/// Large-`N` single mirror:
/// `P_e = (e^{-γt}/4) [1 + e^{γt cos 2k0x1} + 2 e^{(γt/2) cos 2k0x1} cos(Δφ + (γt/2) sin 2k0x1)]`.
pub fn large_n_p_e(params: &PhysicalParams, x1: f64, t_m: f64, delta_phi: f64) -> f64 {
    let e2 = params.phase(2.0 * x1);
    let gt = params.gamma * t_m;
    (-gt).exp() / 4.0
        * (1.0 + (gt * e2.re).exp() + 2.0 * (gt * e2.re / 2.0).exp() * (delta_phi + gt * e2.im / 2.0).cos())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RamseySample {
    pub t_m: f64,
    /// `Δφ(t_M)` in `[0, 2π)`.
    pub delta_phi: f64,
    /// Unconditioned `½ |a + e^{-iφ_M} b|²`.
    pub p_e: f64,
    /// `p_e` divided by the probability of the measurement outcome; NaN when
    /// that outcome has zero probability.
    pub p_e_conditional: f64,
}

/// Measurement-time scan of `P_e` for a single-mirror system.
///
/// The `G'` branch picks up `e^{i(φ_S + δ t)}` relative to `G`. The
/// conditional column needs the overlap of the two branches' probe+field
/// states, obtained from `dO/dt = -Σ_mirror c_j^* A_jA c'_A`, `O(0) = 1`.
pub fn ramsey_scan(system: &BranchSystem, eraser: &EraserParams, t_m_grid: &[f64]) -> Result<Vec<RamseySample>> {
    eraser.validate()?;
    let g_label = BranchLabel::new(&[MirrorState::G]);
    let gp_label = BranchLabel::new(&[MirrorState::Gp]);
    let (g, gp) = match (system.branch(&g_label), system.branch(&gp_label)) {
        (Some(g), Some(gp)) if system.branches.len() == 2 => (g, gp),
        _ => {
            return Err(Error::Unsupported(
                "eraser scan needs a single-mirror system with branches G and Gp".into(),
            ))
        }
    };
    let (ia, iap) = match (g.probe_index(), gp.probe_index()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidParams("branches have no probe slot".into())),
    };

    let mut grid: Vec<f64> = t_m_grid.to_vec();
    let prepended = grid.first().is_some_and(|&t| t > 0.0);
    if prepended {
        grid.insert(0, 0.0);
    }
    let traj = propagate(system, &grid)?;
    let overlaps = overlap_series(system, &traj, &g_label, &gp_label)?;
    let tg = traj.branch(&g_label).expect("G branch propagated");
    let tgp = traj.branch(&gp_label).expect("Gp branch propagated");
    let mirror_slots: Vec<usize> = (0..g.slots.len()).filter(|&j| j != ia).collect();
    let init_g = g.init.norm_squared();
    let init_gp = gp.init.norm_squared();

    let offset = usize::from(prepended);
    Ok((offset..grid.len())
        .map(|i| {
            let t = grid[i];
            let rot = C64::from_polar(1.0, eraser.phi_s + eraser.delta * t);
            let a = g.weight * tg.amplitudes[(ia, i)];
            let b = gp.weight * rot * tgp.amplitudes[(iap, i)];
            let p_e = weighted_post_erasure_probability(a, b, eraser.phi_m);

            let mirror: f64 = mirror_slots.iter().map(|&j| tg.amplitudes[(j, i)].norm_sqr()).sum();
            let norm_g = g.weight.norm_sqr() * (init_g - mirror);
            let norm_gp = gp.weight.norm_sqr() * init_gp;
            let cross = g.weight.conj() * gp.weight * rot * overlaps[i];
            let p_out = 0.5 * (norm_g + norm_gp + 2.0 * (C64::from_polar(1.0, -eraser.phi_m) * cross).re);
            let p_e_conditional = if p_out > 1e-14 { p_e / p_out } else { f64::NAN };
            RamseySample {
                t_m: t,
                delta_phi: eraser.delta_phi(t),
                p_e,
                p_e_conditional,
            }
        })
        .collect())
}

/// `O(t) = ⟨ψ_G|ψ_G'⟩` restricted to probe and field, per unit weights.
fn overlap_series(
    system: &BranchSystem,
    traj: &Trajectory,
    g_label: &BranchLabel,
    gp_label: &BranchLabel,
) -> Result<Vec<C64>> {
    let g = system.branch(g_label).expect("checked");
    let gp = system.branch(gp_label).expect("checked");
    let ia = g.probe_index().expect("checked");
    let iap = gp.probe_index().expect("checked");
    let init = g.init[ia].conj() * gp.init[iap];
    let mirrors: Vec<usize> = (0..g.slots.len()).filter(|&j| j != ia).collect();

    let dg = pole_decomposition(system, g_label)?;
    let dgp = pole_decomposition(system, gp_label)?;
    if let (Some(rg), Some(rgp)) = (&dg.residues, &dgp.residues) {
        // Closed-form integral of products of exponentials.
        let mut coeff: Vec<(C64, C64)> = Vec::new();
        for &j in &mirrors {
            let a_ja = g.matrix[(j, ia)];
            for (p, sp) in dg.poles.iter().enumerate() {
                for (q, sq) in dgp.poles.iter().enumerate() {
                    coeff.push((rg[(j, p)].conj() * a_ja * rgp[(iap, q)], sp.conj() + sq));
                }
            }
        }
        return Ok(traj
            .t_grid
            .iter()
            .map(|&t| {
                let integral: C64 = coeff
                    .iter()
                    .map(|&(c, s)| {
                        if (s * t).norm() < 1e-8 {
                            c * t * (C64::from(1.0) + s * t / 2.0)
                        } else {
                            c * ((s * t).exp() - 1.0) / s
                        }
                    })
                    .sum();
                init - integral
            })
            .collect());
    }
    trapezoid_overlap(traj, g_label, gp_label, &g.matrix, ia, iap, &mirrors, init)
}

/// Fallback for defective matrices: trapezoid rule on the scan grid.
#[allow(clippy::too_many_arguments)]
fn trapezoid_overlap(
    traj: &Trajectory,
    g_label: &BranchLabel,
    gp_label: &BranchLabel,
    a: &DMatrix<C64>,
    ia: usize,
    iap: usize,
    mirrors: &[usize],
    init: C64,
) -> Result<Vec<C64>> {
    let tg = traj.branch(g_label).expect("checked");
    let tgp = traj.branch(gp_label).expect("checked");
    let rate = |i: usize| -> C64 {
        mirrors
            .iter()
            .map(|&j| tg.amplitudes[(j, i)].conj() * a[(j, ia)] * tgp.amplitudes[(iap, i)])
            .sum()
    };
    let mut out = vec![init];
    for i in 1..traj.t_grid.len() {
        let dt = traj.t_grid[i] - traj.t_grid[i - 1];
        let prev = out[i - 1];
        out.push(prev - (rate(i - 1) + rate(i)) * (dt / 2.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{fit, uniform_grid};
    use crate::model::{build_single_mirror_collective, Geometry};

    #[test]
    fn endpoints_at_zero_time() {
        assert_eq!(post_erasure_probability(C64::from(1.0), C64::from(1.0), 0.0), 1.0);
        assert_eq!(post_erasure_probability(C64::from(1.0), C64::from(1.0), std::f64::consts::PI), 0.0);
        let p = PhysicalParams::natural();
        for dphi in [0.0, 0.4, 2.0, 3.0] {
            assert!((large_n_p_e(&p, 1.5, 0.0, dphi) - (dphi / 2.0f64).cos().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn periodic_in_measurement_phase() {
        let (a, b) = (C64::new(0.3, -0.2), C64::new(0.1, 0.5));
        for phi in [0.0, 1.0, 4.0] {
            assert!((post_erasure_probability(a, b, phi) - post_erasure_probability(a, b, phi + TAU)).abs() < 1e-15);
        }
    }

    #[test]
    fn antinode_substitution() {
        let p = PhysicalParams::natural();
        for dphi in [0.0f64, 1.1, 2.5] {
            let expect = (-2.0f64).exp() / 4.0 * (1.0 + (-2.0f64).exp() + 2.0 * (-1.0f64).exp() * dphi.cos());
            assert!((large_n_p_e(&p, 1.25, 2.0, dphi) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn complementary_outcomes_and_mixture() {
        let (a, b) = (C64::new(0.7, 0.1), C64::new(-0.2, 0.4));
        let phi = 0.77;
        let sum = post_erasure_probability(a, b, phi) + post_erasure_probability(a, b, phi + std::f64::consts::PI);
        assert!((sum - 2.0 * mixture_probability(a, b)).abs() < 1e-15);
        let n = 4096;
        let avg: f64 = (0..n)
            .map(|k| post_erasure_probability(a, b, TAU * k as f64 / n as f64))
            .sum::<f64>()
            / n as f64;
        assert!((avg - mixture_probability(a, b)).abs() < 1e-10);
    }

    #[test]
    fn scan_starts_certain_and_stays_bounded() {
        let p = PhysicalParams::natural();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 100, 1.5)).unwrap();
        let e = EraserParams {
            delta: 10.0,
            ..Default::default()
        };
        let scan = ramsey_scan(&sys, &e, &uniform_grid(5.0, 1001)).unwrap();
        assert!((scan[0].p_e - 1.0).abs() < 1e-14);
        assert!((scan[0].p_e_conditional - 1.0).abs() < 1e-12);
        for s in &scan {
            assert!((0.0..=1.0 + 1e-12).contains(&s.p_e));
            assert!(s.p_e_conditional.is_nan() || (-1e-9..=1.0 + 1e-9).contains(&s.p_e_conditional));
        }
        let t: Vec<f64> = scan.iter().map(|s| s.t_m).collect();
        let y: Vec<f64> = scan.iter().map(|s| s.p_e).collect();
        let period = fit::mean_peak_spacing(&t, &y).unwrap();
        assert!((period - TAU / 10.0).abs() < 0.02 * TAU / 10.0);
    }

    #[test]
    fn overlap_matches_trapezoid_fallback() {
        let p = PhysicalParams::natural();
        let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 20, 1.37)).unwrap();
        let grid = uniform_grid(4.0, 40001);
        let traj = propagate(&sys, &grid).unwrap();
        let (gl, gpl) = (BranchLabel::new(&[MirrorState::G]), BranchLabel::new(&[MirrorState::Gp]));
        let exact = overlap_series(&sys, &traj, &gl, &gpl).unwrap();
        let g = &sys.branches[0];
        let ia = g.probe_index().unwrap();
        let mirrors: Vec<usize> = (0..g.slots.len()).filter(|&j| j != ia).collect();
        let approx = trapezoid_overlap(&traj, &gl, &gpl, &g.matrix, ia, 0, &mirrors, C64::from(1.0)).unwrap();
        for i in (0..grid.len()).step_by(4000) {
            assert!((exact[i] - approx[i]).norm() < 1e-6);
        }
    }

    #[test]
    fn rejects_cavity_systems() {
        let p = PhysicalParams::natural();
        let sys = crate::model::build_cavity_collective(&p, &Geometry::cavity(&p, 10, 1.5, 0.0)).unwrap();
        assert!(matches!(
            ramsey_scan(&sys, &EraserParams::default(), &[0.0, 1.0]),
            Err(Error::Unsupported(_))
        ));
    }
}
