use quantum_mirror::dynamics::uniform_grid;
use quantum_mirror::model::{Geometry, PhysicalParams, ScenarioKind};
use quantum_mirror::oracle::{intensity_from_modes, simulate_microscopic, ModeGrid};
use quantum_mirror::Error;

fn lone() -> Geometry {
    Geometry {
        x_a: 0.0,
        mirrors: vec![],
        kind: ScenarioKind::FullArray,
    }
}

fn lone_deviation(modes: usize, bandwidth: f64) -> f64 {
    let p = PhysicalParams::natural().with_speed(10.0);
    let grid = uniform_grid(5.0, 26);
    let m = ModeGrid::new(&p, modes, bandwidth).unwrap();
    let micro = simulate_microscopic(&p, &lone(), &m, &grid).unwrap();
    grid.iter()
        .zip(micro.trajectory.branches[0].probe())
        .map(|(&t, z)| (z.norm_sqr() - (-t).exp()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn refining_the_mode_grid_does_not_hurt() {
    let coarse = lone_deviation(1000, 50.0);
    let fine = lone_deviation(2000, 50.0);
    assert!(fine <= coarse * (1.0 + 1e-5) + 1e-9, "{fine} vs {coarse}");
    assert!(lone_deviation(2000, 100.0) < fine);
}

#[test]
fn mode_sum_field_follows_the_retarded_emitter() {
    let p = PhysicalParams::natural().with_speed(10.0);
    let grid = uniform_grid(2.0, 21);
    let m = ModeGrid::default_for(&p).unwrap();
    let micro = simulate_microscopic(&p, &lone(), &m, &grid).unwrap();
    let i = grid.len() - 1;
    let t = grid[i];

    for x in [p.v * t / 2.0, -p.v * t / 2.0] {
        let expected = (-(t - x.abs() / p.v)).exp();
        let got = intensity_from_modes(&micro, 0, i, x);
        assert!((got - expected).abs() <= 0.05 * expected, "x = {x}: {got} vs {expected}");
    }

    let edge = (-(t - t)).exp();
    for x in [1.5 * p.v * t, -1.5 * p.v * t] {
        let got = intensity_from_modes(&micro, 0, i, x);
        assert!(got <= 1e-3 * edge, "leakage at x = {x}: {got}");
    }
}

#[test]
fn mirror_node_keeps_the_left_side_dark() {
    // A slow guide keeps the trapped field inside the mode bandwidth.
    let p = PhysicalParams::natural().with_speed(10.0);
    let geom = Geometry::single_mirror(&p, 10, 1.5);
    let grid = uniform_grid(5.0, 11);
    let m = ModeGrid::default_for(&p).unwrap();
    let micro = simulate_microscopic(&p, &geom, &m, &grid).unwrap();
    let i = grid.len() - 1;
    let inside = intensity_from_modes(&micro, 0, i, 0.75);
    assert!(inside > 1.0, "standing wave between probe and mirror: {inside}");
    for x in [-2.0, 0.0, 3.0] {
        let outside = intensity_from_modes(&micro, 0, i, x);
        assert!(outside <= 1e-3 * inside, "x = {x}: {outside} vs {inside}");
    }
}

#[test]
fn recurrence_window_is_refused() {
    let p = PhysicalParams::natural().with_speed(10.0);
    let m = ModeGrid::default_for(&p).unwrap();
    let t = m.recurrence_window() * 1.01;
    let err = simulate_microscopic(&p, &lone(), &m, &[0.0, t]).unwrap_err();
    assert!(matches!(err, Error::OracleWindowExceeded { .. }), "{err:?}");
}
