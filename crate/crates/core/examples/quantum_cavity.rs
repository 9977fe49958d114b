//! Probe between two mirrors: trapping at the node, vacuum Rabi oscillation
//! at the antinode, slow Rabi exchange close to the node.
//!
//! ```bash
//! cargo run --release --example quantum_cavity
//! ```

use std::f64::consts::TAU;

use quantum_mirror::dynamics::{fit, large_n_cavity, propagate, uniform_grid, ClosedFormKind};
use quantum_mirror::model::build_cavity_collective;
use quantum_mirror::{Geometry, PhysicalParams};

fn main() -> quantum_mirror::Result<()> {
    let p = PhysicalParams::natural();
    let n = 100;

    let cases = [
        ("node", ClosedFormKind::CavityNode, 1.5, 0.0, 10.0),
        ("antinode", ClosedFormKind::CavityAntinode, 1.25, 0.0, 10.0),
        ("near node", ClosedFormKind::CavityNearNode, 1.5, 0.01, 100.0),
    ];
    for (label, kind, x1, x_a, t_max) in cases {
        let grid = uniform_grid(t_max, 10_001);
        let sys = build_cavity_collective(&p, &Geometry::cavity(&p, n, x1, x_a))?;
        let traj = propagate(&sys, &grid)?;
        let gg = traj.branch_by_name("GG").unwrap();
        let c = gg.probe();
        let re: Vec<f64> = c.iter().map(|z| z.re).collect();
        let last = grid.len() - 1;
        let (ca, q1, q2) = large_n_cavity(&p, kind, x_a, x1, n, t_max)?;

        println!("{label}: x1 = {x1}, x_A = {x_a}");
        println!(
            "  |c_A(T)|^2 = {:.5} (large N {:.5}), |c_QM1|^2 = {:.3e}, |c_QM2|^2 = {:.3e}",
            c[last].norm_sqr(),
            ca.norm_sqr(),
            gg.amplitudes[(gg.slot_index("QM1").unwrap(), last)].norm_sqr(),
            gg.amplitudes[(gg.slot_index("QM2").unwrap(), last)].norm_sqr(),
        );
        println!("  large N |c_QM1 + c_QM2| = {:.3e}, |c_QM1 - c_QM2| = {:.3e}", (q1 + q2).norm(), (q1 - q2).norm());
        if let Some(w) = fit::zero_crossing_frequency(&grid, &re) {
            println!("  zero-crossing frequency of Re c_A: {w:.4}");
        }
    }
    println!("sqrt(N/2) = {:.4}, 2π·0.01·sqrt(N/2) = {:.4}", (n as f64 / 2.0).sqrt(), TAU * 0.01 * (n as f64 / 2.0).sqrt());
    Ok(())
}
