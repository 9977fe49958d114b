//! A Bragg mirror simulated atom by atom and as one collective spin.
//!
//! ```bash
//! cargo run --release --example full_array_vs_collective
//! ```

use quantum_mirror::dynamics::{propagate, uniform_grid};
use quantum_mirror::model::{build_full_array, collective_projection};
use quantum_mirror::oracle::collective_deviation;
use quantum_mirror::{Geometry, PhysicalParams};

fn main() -> quantum_mirror::Result<()> {
    let p = PhysicalParams::natural();
    let grid = uniform_grid(10.0, 201);
    for (n, x1) in [(10, 1.5), (50, 1.25), (100, 1.1)] {
        let geom = Geometry::single_mirror(&p, n, x1);
        println!("N = {n:>3}, x1 = {x1}: max deviation {:.3e}", collective_deviation(&p, &geom, &grid)?);
    }

    // Off-Bragg spacing: only the per-atom model applies.
    let positions: Vec<f64> = (0..10).map(|k| 1.5 + 0.47 * k as f64).collect();
    let sys = build_full_array(&p, &positions, 0.0)?;
    let traj = propagate(&sys, &grid)?;
    let g = &traj.branches[0];
    let a = g.probe_index().unwrap();
    println!("spacing 0.47: |c_A(10)|^2 = {:.5}", g.amplitudes[(a, grid.len() - 1)].norm_sqr());

    let geom = Geometry::single_mirror(&p, 10, 1.5);
    let full = propagate(&build_full_array(&p, &geom.mirror_positions(), 0.0)?, &grid)?;
    let proj = collective_projection(&geom.mirrors, full.branches[0].slots.len(), geom.mirror_positions().len());
    let bright = &proj * &full.branches[0].amplitudes;
    println!("bright-mode amplitude at t = 10: {:.6}", bright[(1, grid.len() - 1)]);
    Ok(())
}
