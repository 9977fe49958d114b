//! Ramsey fringes after measuring the mirror in a superposition basis.
//!
//! ```bash
//! cargo run --release --example quantum_eraser
//! ```

use std::f64::consts::TAU;

use quantum_mirror::dynamics::{fit, uniform_grid};
use quantum_mirror::eraser::{large_n_p_e, ramsey_scan, EraserParams};
use quantum_mirror::model::build_single_mirror_collective;
use quantum_mirror::{Geometry, PhysicalParams};

fn main() -> quantum_mirror::Result<()> {
    let p = PhysicalParams::natural();
    let x1 = 1.5;
    let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 100, x1))?;
    let eraser = EraserParams {
        phi_m: 0.0,
        phi_s: 0.0,
        delta: 10.0,
        t_m: 1.0,
    };
    let grid = uniform_grid(5.0, 1001);
    let scan = ramsey_scan(&sys, &eraser, &grid)?;

    println!("{:>6} {:>8} {:>10} {:>10} {:>12}", "t_M", "Δφ", "P_e", "large N", "conditional");
    for s in scan.iter().step_by(50) {
        println!(
            "{:>6.2} {:>8.4} {:>10.6} {:>10.6} {:>12.6}",
            s.t_m,
            s.delta_phi,
            s.p_e,
            large_n_p_e(&p, x1, s.t_m, s.delta_phi),
            s.p_e_conditional
        );
    }
    let t: Vec<f64> = scan.iter().map(|s| s.t_m).collect();
    let pe: Vec<f64> = scan.iter().map(|s| s.p_e).collect();
    if let Some(period) = fit::mean_peak_spacing(&t, &pe) {
        println!("fringe period {period:.5} (2π/δ = {:.5})", TAU / eraser.delta);
    }
    Ok(())
}
