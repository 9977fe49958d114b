use quantum_mirror::dynamics::{propagate, uniform_grid};
use quantum_mirror::field::{intensity_map, IntensityField, IntensityMode};
use quantum_mirror::model::{build_full_array, build_single_mirror_collective, Geometry, PhysicalParams};
use quantum_mirror::Error;

fn x_grid() -> Vec<f64> {
    uniform_grid(12.0, 961).iter().map(|x| x - 6.0).collect()
}

#[test]
fn per_atom_and_collective_maps_agree() {
    let p = PhysicalParams::natural();
    let geom = Geometry::single_mirror(&p, 20, 1.5);
    let ts = uniform_grid(4.0, 81);
    let xs = x_grid();

    let collective = propagate(&build_single_mirror_collective(&p, &geom).unwrap(), &ts).unwrap();
    let per_atom = propagate(&build_full_array(&p, &geom.mirror_positions(), geom.x_a).unwrap(), &ts).unwrap();
    let a = intensity_map(&collective, &xs, &ts, IntensityMode::NoDelayCollective).unwrap();
    let b = intensity_map(&per_atom, &xs, &ts, IntensityMode::PerAtomRetarded).unwrap();

    for name in ["G", "Gp"] {
        let (va, vb) = (&a.branch(name).unwrap().values, &b.branch(name).unwrap().values);
        let peak = vb.iter().cloned().fold(0.0, f64::max);
        let dev = va.iter().zip(vb.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev <= 0.02 * peak, "{name}: {dev} vs peak {peak}");
    }
}

#[test]
fn per_atom_mode_needs_per_atom_slots() {
    let p = PhysicalParams::natural();
    let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 5, 1.5)).unwrap();
    let ts = uniform_grid(1.0, 11);
    let traj = propagate(&sys, &ts).unwrap();
    let err = intensity_map(&traj, &[0.0], &ts, IntensityMode::PerAtomRetarded).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)), "{err:?}");
}

#[test]
fn history_must_cover_the_requested_times() {
    let p = PhysicalParams::natural();
    let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 5, 1.5)).unwrap();
    let traj = propagate(&sys, &uniform_grid(1.0, 11)).unwrap();
    let err = intensity_map(&traj, &[0.0], &[0.0, 2.0], IntensityMode::NoDelayCollective).unwrap_err();
    assert!(matches!(err, Error::HistoryTooShort { .. }), "{err:?}");
}

#[test]
fn node_profile_is_dark_behind_the_probe() {
    let p = PhysicalParams::natural();
    let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 100, 1.5)).unwrap();
    let ts = uniform_grid(10.0, 101);
    let traj = propagate(&sys, &ts).unwrap();
    let xs = x_grid();
    let f = intensity_map(&traj, &xs, &ts, IntensityMode::NoDelayCollective).unwrap();
    let rows = f.steady_rows(p.gamma);
    let prof = IntensityField::steady_profile(&f.branch("G").unwrap().values, &rows);
    let max = prof.iter().cloned().fold(0.0, f64::max);
    for (x, i) in xs.iter().zip(&prof) {
        if *x < 0.0 {
            assert!(*i <= 1e-3 * max, "x = {x}: {i}");
        }
    }
    let between = xs.iter().position(|&x| (x - 0.25).abs() < 1e-9).unwrap();
    assert!(prof[between] > 0.5 * max);
}

#[test]
fn total_weights_branches_by_their_probabilities() {
    let p = PhysicalParams::natural();
    let sys = build_single_mirror_collective(&p, &Geometry::single_mirror(&p, 10, 1.25)).unwrap();
    let ts = uniform_grid(2.0, 21);
    let traj = propagate(&sys, &ts).unwrap();
    let xs = x_grid();
    let f = intensity_map(&traj, &xs, &ts, IntensityMode::NoDelayCollective).unwrap();
    for i in 0..ts.len() {
        for j in 0..xs.len() {
            let expected: f64 = f.branches.iter().map(|b| b.weight.norm_sqr() * b.values[(i, j)]).sum();
            assert!((f.total[(i, j)] - expected).abs() <= 1e-14 * expected.max(1.0));
        }
    }
}
