//! End-to-end checks through the public API only.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use marchaud_core::frac_ops::marchaud;
use marchaud_core::parabolic::problem::{first_mode_amplitude, manufactured, relaxation};
use marchaud_core::parabolic::{
    mittag_leffler, solve_strong, test_family, trajectory_distance, weak_residual, BilinearForm, Coefficient,
};
use marchaud_core::{FracOrder, Normalization, SpatialMesh, TimeGrid, Trajectory};

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

#[test]
fn half_order_mittag_leffler_value() {
    // E_{1/2}(-1) = e erfc(1)
    assert_relative_eq!(mittag_leffler(0.5, -1.0).unwrap(), 0.427_583_576_155_807, max_relative = 1e-12);
}

#[test]
fn marchaud_of_square_matches_closed_form() {
    for a in [0.25, 0.5, 0.75] {
        let g = TimeGrid::uniform(1.0, 1.0, 1024).unwrap();
        let u = Trajectory::scalar(g, |t| if t > 0.0 { t * t } else { 0.0 });
        let got = marchaud(&u, 0.5, order(a)).unwrap()[0];
        let want = 2.0 * 0.5_f64.powf(2.0 - a) / ((1.0 - a) * (2.0 - a));
        assert_relative_eq!(got, want, max_relative = 1e-3);
    }
}

#[test]
fn relaxation_tracks_mittag_leffler() {
    let a = order(0.5);
    let grid = TimeGrid::graded_with_history(1.0, 1.0, 512, 4, 2.0).unwrap();
    let data = relaxation(a, grid, 32).unwrap();
    let sol = solve_strong(&data).unwrap();
    let g = sol.u.grid();
    for i in [g.len() / 2, g.len() - 1] {
        let t = g.node(i);
        let amp = first_mode_amplitude(data.mesh(), sol.u.node(i));
        assert_relative_eq!(amp, mittag_leffler(0.5, -PI * PI * t.sqrt()).unwrap(), max_relative = 1e-2);
    }
}

#[test]
fn manufactured_solution_is_recovered_and_weak() {
    let coef = Coefficient::SignSwitch { base: 1.0, amplitude: 0.5, frequency: 20.0 };
    let errs: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let grid = TimeGrid::uniform(1.0, 1.0, n).unwrap();
            let form = BilinearForm::local(SpatialMesh::uniform(16).unwrap(), coef.clone()).unwrap();
            let m = manufactured(order(0.4), grid.clone(), form, Normalization::Paper).unwrap();
            let sol = solve_strong(&m.data).unwrap();
            for phi in test_family(m.data.mesh(), &grid, 3).unwrap() {
                assert!(weak_residual(&sol, &m.data, &phi).unwrap().residual < 1e-2);
            }
            trajectory_distance(&sol.u, &m.exact, m.data.mesh()).unwrap()
        })
        .collect();
    assert!(errs[1] < errs[0] / 2.0, "{errs:?}");
}
