//! Poles and residues of every branch, checked against direct propagation.
//!
//! ```bash
//! cargo run --release --example pole_decomposition -- 100 1.5
//! ```

use quantum_mirror::dynamics::{pole_decomposition, propagate_with, single_mirror_poles, uniform_grid};
use quantum_mirror::model::build_single_mirror_collective;
use quantum_mirror::{Geometry, PhysicalParams, PropagationMethod};

fn main() -> quantum_mirror::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(100, |s| s.parse().expect("N"));
    let x1: f64 = args.next().map_or(1.5, |s| s.parse().expect("x1"));

    let p = PhysicalParams::natural();
    let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, n, x1))?;
    let grid = uniform_grid(20.0, 401);
    let traj = propagate_with(&sys, &grid, PropagationMethod::ScalingSquaring)?;

    for (b, tb) in sys.branches.iter().zip(&traj.branches) {
        let d = pole_decomposition(&sys, &b.label)?;
        println!("branch {}", b.label);
        for (s, deg) in d.poles.iter().zip(&d.degenerate) {
            println!("  pole {:+.10} {:+.10}i{}", s.re, s.im, if *deg { "  (degenerate)" } else { "" });
        }
        if d.residues.is_some() {
            let dev = grid
                .iter()
                .enumerate()
                .map(|(i, &t)| (d.evaluate(t).unwrap() - tb.state(i)).norm())
                .fold(0.0, f64::max);
            println!("  max |poles - propagator| = {dev:.3e}");
        }
    }
    let (slow, fast) = single_mirror_poles(&p, n as f64, x1);
    println!("quadratic roots: {slow:.10}, {fast:.10}");
    Ok(())
}
