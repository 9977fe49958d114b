//! Probe decay in front of a Bragg mirror, at a node and at an antinode.
//!
//! ```bash
//! cargo run --release --example single_mirror_decay
//! ```

use quantum_mirror::dynamics::{closed_form_single_mirror, fit, large_n_single_mirror, propagate, uniform_grid};
use quantum_mirror::model::build_single_mirror_collective;
use quantum_mirror::{Geometry, PhysicalParams};

fn main() -> quantum_mirror::Result<()> {
    let p = PhysicalParams::natural();
    let grid = uniform_grid(10.0, 1001);

    for (label, x1) in [("node", 1.5), ("antinode", 1.25)] {
        let geom = Geometry::single_mirror(&p, 100, x1);
        let traj = propagate(&build_single_mirror_collective(&p, &geom)?, &grid)?;
        let g = traj.branch_by_name("G").unwrap();
        let gp = traj.branch_by_name("Gp").unwrap();
        let pop: Vec<f64> = g.probe().iter().map(|c| c.norm_sqr()).collect();

        println!("{label}: x1 = {x1}");
        println!("  {:>5} {:>12} {:>12} {:>12} {:>12}", "t", "|c_A|^2 G", "two-pole", "large N", "|c_A|^2 Gp");
        for i in (0..grid.len()).step_by(100) {
            let t = grid[i];
            let (ca, _) = closed_form_single_mirror(&p, &geom, t)?;
            println!(
                "  {t:>5.1} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                pop[i],
                ca.norm_sqr(),
                large_n_single_mirror(&p, x1, t).norm_sqr(),
                gp.probe()[i].norm_sqr()
            );
        }
        if let Some(rate) = fit::decay_rate(&grid, &pop, 0.5, 2.0) {
            println!("  fitted decay rate on [0.5, 2]: {rate:.4}");
        }
    }
    Ok(())
}
