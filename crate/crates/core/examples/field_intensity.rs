//! Emitted intensity along the guide for both mirror branches.
//!
//! ```bash
//! cargo run --release --example field_intensity -- 1.5 > intensity.tsv
//! ```

use quantum_mirror::dynamics::{propagate, uniform_grid};
use quantum_mirror::field::{intensity_map, IntensityField, IntensityMode};
use quantum_mirror::model::build_single_mirror_collective;
use quantum_mirror::{Geometry, PhysicalParams};

fn main() -> quantum_mirror::Result<()> {
    let x1: f64 = std::env::args().nth(1).map_or(1.5, |s| s.parse().expect("x1"));
    // A slow guide makes the light cone visible on a few-wavelength grid.
    let p = PhysicalParams::natural().with_speed(20.0);
    let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 100, x1))?;
    let ts = uniform_grid(10.0, 201);
    let traj = propagate(&sys, &ts)?;
    let xs: Vec<f64> = uniform_grid(8.0 * x1, 401).iter().map(|x| x - 4.0 * x1).collect();
    let field = intensity_map(&traj, &xs, &ts, IntensityMode::NoDelayCollective)?;

    let rows = field.steady_rows(p.gamma);
    let g = IntensityField::steady_profile(&field.branch("G").unwrap().values, &rows);
    let gp = IntensityField::steady_profile(&field.branch("Gp").unwrap().values, &rows);
    let total = IntensityField::steady_profile(&field.total, &rows);
    println!("x\tI_G\tI_Gp\tI_total");
    for (j, x) in xs.iter().enumerate() {
        println!("{x:.4}\t{:.6e}\t{:.6e}\t{:.6e}", g[j], gp[j], total[j]);
    }

    let early = 5;
    let lit = (0..xs.len()).filter(|&j| field.branch("Gp").unwrap().values[(early, j)] > 0.0).count();
    eprintln!("t = {:.2}: {lit} of {} points inside the light cone", ts[early], xs.len());
    Ok(())
}
