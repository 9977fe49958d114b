//! Discretized-bath simulation of a lone atom and of a small mirror, compared
//! with the Markovian model.
//!
//! ```bash
//! cargo run --release --example microscopic_oracle -- 2000 100
//! ```

use quantum_mirror::dynamics::{propagate, uniform_grid};
use quantum_mirror::model::{build_single_mirror_collective, ScenarioKind};
use quantum_mirror::oracle::{microscopic_deviation, simulate_microscopic, ModeGrid};
use quantum_mirror::{Geometry, PhysicalParams};

fn main() -> quantum_mirror::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().map_or(2000, |s| s.parse().expect("modes per direction"));
    let w: f64 = args.next().map_or(100.0, |s| s.parse().expect("bandwidth"));

    let p = PhysicalParams::natural().with_speed(1e3);
    let modes = ModeGrid::new(&p, m, w)?;
    let grid = uniform_grid(5.0, 51);
    println!("{} modes, recurrence window {:.1}", modes.n_modes(), modes.recurrence_window());

    let lone = Geometry {
        x_a: 0.0,
        mirrors: vec![],
        kind: ScenarioKind::FullArray,
    };
    let micro = simulate_microscopic(&p, &lone, &modes, &grid)?;
    let c = micro.trajectory.branches[0].probe();
    println!("{:>5} {:>12} {:>12} {:>10}", "t", "|c|^2", "e^-t", "norm - 1");
    for i in (0..grid.len()).step_by(5) {
        let t = grid[i];
        println!(
            "{t:>5.1} {:>12.6} {:>12.6} {:>10.2e}",
            c[i].norm_sqr(),
            (-t).exp(),
            micro.norm_sqr(0, i) - 1.0
        );
    }

    let geom = Geometry::single_mirror(&p, 10, 1.5);
    let micro = simulate_microscopic(&p, &geom, &modes, &grid)?;
    let markov = propagate(&build_single_mirror_collective(&p, &geom)?, &grid)?;
    println!(
        "N = 10 mirror at x1 = 1.5: max ||c_A|^2 oracle - collective| = {:.3e}",
        microscopic_deviation(&micro, &markov)?
    );
    Ok(())
}
