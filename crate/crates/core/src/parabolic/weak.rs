//! The weak-in-time formulation: residual of a trajectory against test
//! functions, and a concrete family of admissible test functions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frac_ops::{apply_gram, marchaud_nodes};
use crate::grid::TimeGrid;
use crate::kernel::{trapezoid, KernelQuadrature};
use crate::mesh::{Pairing, SpatialMesh};
use crate::parabolic::form::BilinearForm;
use crate::parabolic::problem::ProblemData;
use crate::parabolic::solver::DiscreteSolution;
use crate::report::ResidualReport;
use crate::trajectory::Trajectory;

/// Trapezoid sum over nodes `from..=to` of `g * (u_i . A(t_i) phi_i)`.
pub(crate) fn form_integral(
    form: &BilinearForm,
    u: &Trajectory,
    phi: &Trajectory,
    from: usize,
    g: f64,
) -> Result<f64> {
    let grid = u.grid();
    let vals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if i < from {
                return Ok(0.0);
            }
            let a = form.assemble(grid.node(i))?;
            Ok(g * a.quadratic(u.node(i), phi.node(i)))
        })
        .collect::<Result<_>>()?;
    Ok(trapezoid(grid, &vals, from, grid.len() - 1))
}

/// Trapezoid sum over nodes `from..=end` of the pairing `(a_i, b_i)`.
pub(crate) fn paired_trapezoid(a: &Trajectory, b: &Trajectory, pairing: &dyn Pairing, from: usize) -> Result<f64> {
    let p = a.pair_nodes(b, pairing)?;
    Ok(trapezoid(a.grid(), p.values(), from, a.grid().len() - 1))
}

/// `alpha int_{t_from}^T int_{-inf}^t (u(t) - u(s), phi(t) - phi(s)) K ds dt`,
/// exact inner integral, trapezoid outer.
pub(crate) fn memory_double_integral(kq: &KernelQuadrature, u: &Trajectory, gphi: &Trajectory, from: usize) -> f64 {
    let grid = u.grid();
    let inner: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| if i < from { 0.0 } else { kq.bilinear_memory(u, gphi, f64::NEG_INFINITY, grid.node(i)) })
        .collect();
    trapezoid(grid, &inner, from, grid.len() - 1)
}

/// Checks `phi` against the test class: same grid and dimension, `phi = 0`
/// at (and hence before) `-M`.
pub fn check_test_function(phi: &Trajectory, grid: &TimeGrid, dim: usize) -> Result<()> {
    if phi.grid() != grid {
        return Err(Error::Incompatible("test function lives on a different time grid".into()));
    }
    if phi.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: phi.dim() });
    }
    if phi.node(0).iter().any(|&v| v != 0.0) {
        return Err(Error::Support("test function must vanish for t <= -M".into()));
    }
    Ok(())
}

/// All terms of the weak formulation for `u` (which must equal the history
/// on `[-M, 0]`) against `phi`; returns the normalized `LHS - RHS`.
///
/// The endpoint term uses the weight `(T - t)^(-alpha)`, as in the
/// integration-by-parts formula the weak form is derived from.
pub fn weak_residual_of(u: &Trajectory, data: &ProblemData, phi: &Trajectory) -> Result<ResidualReport> {
    let grid = data.grid();
    check_test_function(phi, grid, data.dim())?;
    if u.grid() != grid || u.dim() != data.dim() {
        return Err(Error::Incompatible("solution does not match the problem grid".into()));
    }
    let z = grid.zero_index();
    if (0..=z).any(|i| u.node(i) != data.history().node(i)) {
        return Err(Error::Support("solution differs from the history data on [-M, 0]".into()));
    }
    let mesh = data.mesh();
    let kq = KernelQuadrature::new(data.alpha());
    let g = data.absorption();
    let last = grid.len() - 1;
    let t_end = grid.horizon();
    let gphi = apply_gram(phi, mesh);
    let dphi = marchaud_nodes(phi, data.alpha());

    let endpoint = kq.endpoint_weighted(u, &gphi, t_end, z, last);
    let memory = memory_double_integral(&kq, u, &gphi, z);
    let transfer = -paired_trapezoid(u, &dphi, mesh, z)?;
    let form = form_integral(data.form(), u, phi, z, g)?;
    let bracket = kq.endpoint_weighted(data.history(), &gphi, t_end, 0, z)
        - kq.endpoint_weighted(data.history(), &gphi, grid.node(z), 0, z);
    let load = {
        let vals: Vec<f64> =
            (0..grid.len()).map(|i| g * data.load().node(i).iter().zip(phi.node(i)).map(|(f, p)| f * p).sum::<f64>()).collect();
        trapezoid(grid, &vals, z, last)
    };
    Ok(ResidualReport::from_sides(
        "weak",
        grid.forward_cells(),
        None,
        vec![
            ("endpoint".into(), endpoint),
            ("memory".into(), memory),
            ("transfer".into(), transfer),
            ("form".into(), form),
            ("history_bracket".into(), bracket),
        ],
        vec![("load".into(), load)],
    ))
}

pub fn weak_residual(sol: &DiscreteSolution, data: &ProblemData, phi: &Trajectory) -> Result<ResidualReport> {
    weak_residual_of(&sol.u, data, phi)
}

/// Worst weak residual over a family of test functions.
pub fn worst_weak_residual(sol: &DiscreteSolution, data: &ProblemData, family: &[Trajectory]) -> Result<ResidualReport> {
    if family.is_empty() {
        return Err(Error::Empty("test family"));
    }
    let reports: Vec<ResidualReport> =
        family.iter().map(|phi| weak_residual(sol, data, phi)).collect::<Result<_>>()?;
    Ok(reports.into_iter().max_by(|a, b| a.residual.total_cmp(&b.residual)).expect("nonempty"))
}

/// `exp(-1 / (1 - x^2))` on `(lo, hi)` mapped to `(-1, 1)`, zero outside.
pub fn smooth_bump(t: f64, lo: f64, hi: f64) -> f64 {
    if t <= lo || t >= hi {
        return 0.0;
    }
    let x = (2.0 * t - lo - hi) / (hi - lo);
    (-1.0 / (1.0 - x * x)).exp()
}

/// `count` test functions `b_j(t) e_{i_j}`: hat functions at spread-out
/// interior nodes times smooth bumps with windows inside `(-M/2, T - T/8)`,
/// each window different so the family is linearly independent.
pub fn test_family(mesh: &SpatialMesh, grid: &TimeGrid, count: usize) -> Result<Vec<Trajectory>> {
    if count == 0 {
        return Err(Error::Empty("test family"));
    }
    let dofs = mesh.dofs();
    let (m, t_end) = (grid.history_length(), grid.horizon());
    let eps0 = t_end / 8.0;
    let nb = count as f64;
    Ok((0..count)
        .map(|j| {
            let jf = j as f64;
            let lo = -m / 4.0 + jf * t_end / (2.0 * nb);
            let hi = t_end - eps0 - jf * t_end / (4.0 * nb);
            let dof = ((2 * j + 1) * dofs / (2 * count)).min(dofs - 1);
            let mut spatial = vec![0.0; dofs];
            spatial[dof] = 1.0;
            Trajectory::tensor(grid.clone(), &spatial, |t| smooth_bump(t, lo, hi))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_ops::frac_sobolev_seminorm;

    #[test]
    fn family_shape() {
        let mesh = SpatialMesh::uniform(16).unwrap();
        let grid = TimeGrid::uniform(1.0, 1.0, 64).unwrap();
        assert!(test_family(&mesh, &grid, 0).is_err());
        let one = test_family(&mesh, &grid, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].vanishes_up_to(-0.5));
        assert!(one[0].vanishes_from(1.0 - 1.0 / 8.0));
        let fam = test_family(&mesh, &grid, 12).unwrap();
        for phi in &fam {
            let s = frac_sobolev_seminorm(phi, &mesh, crate::FracOrder::new(0.5).unwrap());
            assert!(s.is_finite() && s > 0.0);
            check_test_function(phi, &grid, mesh.dofs()).unwrap();
        }
    }

    use crate::order::{FracOrder, Normalization};
    use crate::parabolic::form::Coefficient;
    use crate::parabolic::problem::{manufactured, relaxation};
    use crate::parabolic::solver::solve_strong;

    #[test]
    fn zero_everything_gives_zero_terms() {
        let mesh = SpatialMesh::uniform(8).unwrap();
        let grid = TimeGrid::uniform(1.0, 1.0, 32).unwrap();
        let form = BilinearForm::local(mesh.clone(), Coefficient::Constant(1.0)).unwrap();
        let data = ProblemData::new(FracOrder::new(0.5).unwrap(), grid.clone(), form, Normalization::Paper);
        let sol = solve_strong(&data).unwrap();
        for phi in test_family(&mesh, &grid, 3).unwrap() {
            let r = weak_residual(&sol, &data, &phi).unwrap();
            assert!(r.terms.iter().all(|t| t.1 == 0.0));
            assert_eq!(r.raw, 0.0);
        }
    }

    #[test]
    fn rejects_test_functions_outside_the_class() {
        let mesh = SpatialMesh::uniform(8).unwrap();
        let grid = TimeGrid::uniform(1.0, 1.0, 32).unwrap();
        let data = relaxation(FracOrder::new(0.5).unwrap(), grid.clone(), 8).unwrap();
        let sol = solve_strong(&data).unwrap();
        let bad = Trajectory::tensor(grid.clone(), &vec![1.0; mesh.dofs()], |_| 1.0);
        assert!(matches!(weak_residual(&sol, &data, &bad), Err(Error::Support(_))));
        let other = TimeGrid::uniform(1.0, 1.0, 64).unwrap();
        let phi = &test_family(&mesh, &other, 1).unwrap()[0];
        assert!(weak_residual(&sol, &data, phi).is_err());
        let phi = &test_family(&SpatialMesh::uniform(4).unwrap(), &grid, 1).unwrap()[0];
        assert!(weak_residual(&sol, &data, phi).is_err());
    }

    fn worst(a: f64, n: usize, hist: bool) -> f64 {
        let mesh = SpatialMesh::uniform(16).unwrap();
        let grid = TimeGrid::graded(1.0, 1.0, n, if hist { 2.0 } else { 1.0 }).unwrap();
        let alpha = FracOrder::new(a).unwrap();
        let data = if hist {
            relaxation(alpha, grid.clone(), 16).unwrap()
        } else {
            let form = BilinearForm::local(
                mesh.clone(),
                Coefficient::SignSwitch { base: 1.0, amplitude: 0.5, frequency: 20.0 },
            )
            .unwrap();
            manufactured(alpha, grid.clone(), form, Normalization::Paper).unwrap().data
        };
        let sol = solve_strong(&data).unwrap();
        let fam = test_family(&mesh, &grid, 12).unwrap();
        worst_weak_residual(&sol, &data, &fam).unwrap().residual
    }

    #[test]
    fn strong_solutions_are_weak_solutions() {
        for hist in [false, true] {
            for a in [0.3, 0.7] {
                let r: Vec<f64> = [64, 128, 256].iter().map(|&n| worst(a, n, hist)).collect();
                assert!(r[2] <= 5e-2, "{r:?}");
                assert!(r.windows(2).all(|w| w[0] / w[1] >= 2.0), "history={hist} alpha={a}: {r:?}");
            }
        }
    }

    #[test]
    fn family_is_linearly_independent() {
        let mesh = SpatialMesh::uniform(8).unwrap();
        let grid = TimeGrid::uniform(1.0, 1.0, 64).unwrap();
        let fam = test_family(&mesh, &grid, 12).unwrap();
        let rows = fam.len();
        let cols = fam[0].values().len();
        let m = nalgebra::DMatrix::from_fn(rows, cols, |i, j| fam[i].values()[j]);
        assert_eq!(m.rank(1e-10), rows);
    }
}
