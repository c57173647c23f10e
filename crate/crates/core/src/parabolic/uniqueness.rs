//! Numerical uniqueness: two discretizations of the same data must converge
//! to each other.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::parabolic::problem::ProblemData;
use crate::parabolic::solver::{solve_strong_with, SolverOptions};
use crate::trajectory::Trajectory;

/// How the second configuration differs from the first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Same grid, same solver.
    Identical,
    /// Uniform grids with `N` and `2N` cells.
    Refine,
    /// Uniform grid against a graded grid with exponent `r`, both with `N` cells.
    Graded { r: f64 },
    /// Same grid, unknowns solved in reversed order.
    Reordered,
}

impl Perturbation {
    /// The two grids and solver options for `N` cells on `[0, T]`.
    fn configurations(&self, m: f64, t: f64, n: usize) -> Result<[(TimeGrid, SolverOptions); 2]> {
        let base = TimeGrid::uniform(m, t, n)?;
        let plain = SolverOptions::default();
        Ok(match *self {
            Perturbation::Identical => [(base.clone(), plain), (base, plain)],
            Perturbation::Refine => [(base, plain), (TimeGrid::uniform(m, t, 2 * n)?, plain)],
            Perturbation::Graded { r } => [(base, plain), (TimeGrid::graded(m, t, n, r)?, plain)],
            Perturbation::Reordered => [(base.clone(), plain), (base, SolverOptions { reversed_ordering: true })],
        })
    }
}

/// `|| u1 - u2 ||_{L^2(0, T; H)}` of two trajectories after resampling both
/// to the union of their nodes (exact for the piecewise-linear
/// reconstructions). Both must share `[0, T]` and the spatial dimension.
pub fn trajectory_distance(u1: &Trajectory, u2: &Trajectory, pairing: &dyn crate::mesh::Pairing) -> Result<f64> {
    let (g1, g2) = (u1.grid(), u2.grid());
    if u1.dim() != u2.dim() {
        return Err(Error::DimensionMismatch { expected: u1.dim(), got: u2.dim() });
    }
    if g1.horizon() != g2.horizon() {
        return Err(Error::Incompatible(format!("horizons {} and {} differ", g1.horizon(), g2.horizon())));
    }
    if g1 == g2 {
        return Ok(u1.lincomb(1.0, u2, -1.0)?.l2_norm_forward(pairing));
    }
    // forward part only; history cells of the union are irrelevant
    let start = g1.start().max(g2.start());
    let mut nodes: Vec<f64> = vec![start];
    nodes.extend(g1.forward_nodes());
    let union = TimeGrid::from_nodes(nodes)?.refined(g2.forward_nodes());
    let a = u1.resample(&union)?;
    let b = u2.resample(&union)?;
    Ok(a.lincomb(1.0, &b, -1.0)?.l2_norm_forward(pairing))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// `|| u1 - u2 ||_{L^2(0, T; H)}`.
    pub distance: f64,
    /// `|| u1 ||_{L^2(0, T; H)}`.
    pub reference_norm: f64,
}

/// Solves both problems and measures the distance of the solutions.
///
/// The problems must describe the same equation: same order, normalization,
/// horizon and spatial mesh.
pub fn uniqueness_experiment(
    first: &ProblemData,
    second: &ProblemData,
    options: [SolverOptions; 2],
) -> Result<Comparison> {
    if first.mesh() != second.mesh() {
        return Err(Error::Incompatible(format!(
            "spatial meshes differ ({} vs {} cells)",
            first.mesh().n_cells(),
            second.mesh().n_cells()
        )));
    }
    if first.alpha() != second.alpha() || first.normalization() != second.normalization() {
        return Err(Error::Incompatible("order or normalization differ".into()));
    }
    if first.grid().horizon() != second.grid().horizon() {
        return Err(Error::Incompatible("horizons differ".into()));
    }
    let u1 = solve_strong_with(first, options[0])?.u;
    let u2 = solve_strong_with(second, options[1])?.u;
    Ok(Comparison {
        distance: trajectory_distance(&u1, &u2, first.mesh())?,
        reference_norm: u1.l2_norm_forward(first.mesh()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessStudy {
    pub perturbation: Perturbation,
    pub ns: Vec<usize>,
    pub differences: Vec<f64>,
    pub reference_norms: Vec<f64>,
}

impl UniquenessStudy {
    /// `d_k / d_{k+1}`.
    pub fn ratios(&self) -> Vec<f64> {
        self.differences.windows(2).map(|w| w[0] / w[1]).collect()
    }

    pub fn converges(&self, min_ratio: f64) -> bool {
        !self.differences.is_empty() && self.ratios().iter().all(|&r| r >= min_ratio)
    }
}

/// Runs [`uniqueness_experiment`] for each `N` in `ns`; `build` turns a time
/// grid into the problem data on it.
pub fn uniqueness_study<B>(m: f64, t: f64, perturbation: Perturbation, ns: &[usize], build: B) -> Result<UniquenessStudy>
where
    B: Fn(TimeGrid) -> Result<ProblemData>,
{
    if ns.is_empty() {
        return Err(Error::Empty("refinement sequence"));
    }
    let runs: Vec<Comparison> = ns
        .iter()
        .map(|&n| {
            let [(g1, o1), (g2, o2)] = perturbation.configurations(m, t, n)?;
            uniqueness_experiment(&build(g1)?, &build(g2)?, [o1, o2])
        })
        .collect::<Result<_>>()?;
    Ok(UniquenessStudy {
        perturbation,
        ns: ns.to_vec(),
        differences: runs.iter().map(|c| c.distance).collect(),
        reference_norms: runs.iter().map(|c| c.reference_norm).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SpatialMesh;
    use crate::order::{FracOrder, Normalization};
    use crate::parabolic::form::{BilinearForm, Coefficient};
    use crate::parabolic::problem::manufactured;
    use crate::parabolic::solver::solve_strong;

    const SWITCH: Coefficient = Coefficient::SignSwitch { base: 1.0, amplitude: 0.5, frequency: 20.0 };

    fn switching(n_x: usize, grid: TimeGrid) -> Result<ProblemData> {
        let form = BilinearForm::local(SpatialMesh::uniform(n_x)?, SWITCH)?;
        ProblemData::new(FracOrder::new(0.5)?, grid, form, Normalization::Paper)
            .with_history_fn(|t, x| (1.0 + 0.5 * t) * (std::f64::consts::PI * x).sin())?
            .with_source(|x, t| x * (1.0 - x) * (1.0 + t))
    }

    #[test]
    fn identical_configurations_agree_exactly() {
        let s = uniqueness_study(1.0, 1.0, Perturbation::Identical, &[32, 64], |g| switching(16, g)).unwrap();
        assert_eq!(s.differences, vec![0.0, 0.0]);
    }

    #[test]
    fn reordered_solves_agree_to_round_off() {
        let s = uniqueness_study(1.0, 1.0, Perturbation::Reordered, &[64], |g| switching(16, g)).unwrap();
        assert!(s.differences[0] < 1e-13);
    }

    #[test]
    fn mismatched_meshes_are_rejected() {
        let g = TimeGrid::uniform(1.0, 1.0, 16).unwrap();
        let a = switching(8, g.clone()).unwrap();
        let b = switching(16, g).unwrap();
        let e = uniqueness_experiment(&a, &b, [SolverOptions::default(); 2]);
        assert!(matches!(e, Err(Error::Incompatible(_))));
    }

    #[test]
    fn distance_is_exact_for_nested_grids() {
        let g1 = TimeGrid::uniform(1.0, 1.0, 8).unwrap();
        let g2 = TimeGrid::uniform(1.0, 1.0, 16).unwrap();
        let mesh = SpatialMesh::uniform(4).unwrap();
        let s = mesh.interpolate(|x| x * (1.0 - x));
        let u1 = Trajectory::tensor(g1, &s, |t| t.max(0.0));
        let u2 = Trajectory::tensor(g2, &s, |t| t.max(0.0) + 1.0);
        let d = trajectory_distance(&u1, &u2, &mesh).unwrap();
        let want = crate::mesh::Pairing::inner(&mesh, &s, &s).sqrt();
        assert!((d - want).abs() < 1e-14 * want);
    }

    #[test]
    fn discretizations_converge_together_under_switching_coefficient() {
        for p in [Perturbation::Refine, Perturbation::Graded { r: 2.0 }] {
            let s = uniqueness_study(1.0, 1.0, p, &[64, 128, 256], |g| switching(16, g)).unwrap();
            assert!(s.converges(1.5), "{p:?}: {:?}", s.differences);
        }
    }

    #[test]
    fn graded_and_uniform_within_manufactured_error() {
        let alpha = FracOrder::new(0.5).unwrap();
        let n = 256;
        let run = |grid: TimeGrid| {
            let form = BilinearForm::local(SpatialMesh::uniform(16).unwrap(), SWITCH).unwrap();
            let m = manufactured(alpha, grid, form, Normalization::Paper).unwrap();
            let u = solve_strong(&m.data).unwrap().u;
            let err = trajectory_distance(&u, &m.exact, m.data.mesh()).unwrap();
            (u, err, m.data)
        };
        let (uu, eu, data) = run(TimeGrid::uniform(1.0, 1.0, n).unwrap());
        let (ug, eg, _) = run(TimeGrid::graded(1.0, 1.0, n, 2.0).unwrap());
        let d = trajectory_distance(&uu, &ug, data.mesh()).unwrap();
        assert!(d > 0.0 && d <= 3.0 * eu.min(eg), "{d} vs {eu}, {eg}");
    }
}
