//! Implicit stepping for `d^alpha u + A(t) u = f` with the piecewise-linear
//! (L1-type) ansatz on arbitrary grids.
//!
//! For piecewise-linear `u` with constant history tail the Marchaud
//! derivative at a node is `sum_j k_j int_cell_j (t - s)^(-alpha) ds` with
//! cell slopes `k_j`. The last cell contributes `c_n (u_n - u_{n-1})` with
//! `c_n = tau^(-alpha) / (1 - alpha)`; all earlier cells are known.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::KernelQuadrature;
use crate::parabolic::form::{tridiagonal_dense, FormMatrix};
use crate::parabolic::problem::ProblemData;
use crate::trajectory::Trajectory;

/// Relative residual every step's linear solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolverOptions {
    /// Solve each step with the unknowns in reversed order.
    pub reversed_ordering: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    /// `c_n`, the weight of the current cell.
    pub weight: f64,
    /// Sum of the kernel moments of all earlier cells.
    pub history_weight: f64,
    /// Relative residual of the linear solve.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub u: Trajectory,
    pub steps: Vec<StepDiagnostics>,
}

impl DiscreteSolution {
    pub fn max_solve_residual(&self) -> f64 {
        self.steps.iter().fold(0.0, |m, s| m.max(s.residual))
    }
}

pub fn solve_strong(data: &ProblemData) -> Result<DiscreteSolution> {
    solve_strong_with(data, SolverOptions::default())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Step matrix `c M + g A(t)`.
enum StepMatrix {
    Banded(crate::mesh::Tridiagonal),
    Dense(DMatrix<f64>),
}

impl StepMatrix {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            StepMatrix::Banded(t) => t.apply(x, out),
            StepMatrix::Dense(d) => {
                let y = d * DVector::from_column_slice(x);
                out.copy_from_slice(y.as_slice());
            }
        }
    }

    fn solve_once(&self, rhs: &[f64], reversed: bool) -> Option<Vec<f64>> {
        match self {
            StepMatrix::Banded(t) => {
                if reversed {
                    let mut r = t.clone();
                    r.diag.reverse();
                    r.off.reverse();
                    let b: Vec<f64> = rhs.iter().rev().copied().collect();
                    let mut x = r.solve(&b)?;
                    x.reverse();
                    Some(x)
                } else {
                    t.solve(rhs)
                }
            }
            StepMatrix::Dense(d) => {
                let n = d.nrows();
                let (m, b) = if reversed {
                    (
                        DMatrix::from_fn(n, n, |i, j| d[(n - 1 - i, n - 1 - j)]),
                        DVector::from_iterator(n, rhs.iter().rev().copied()),
                    )
                } else {
                    (d.clone(), DVector::from_column_slice(rhs))
                };
                let x = m.cholesky()?.solve(&b);
                let mut x: Vec<f64> = x.iter().copied().collect();
                if reversed {
                    x.reverse();
                }
                Some(x)
            }
        }
    }
}

/// Solve with one step of iterative refinement when the first solve misses
/// [`SOLVE_TOLERANCE`].
fn solve_checked(k: &StepMatrix, rhs: &[f64], reversed: bool, node: usize) -> Result<(Vec<f64>, f64)> {
    let n = rhs.len();
    let scale = norm(rhs);
    if scale == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let mut x = k.solve_once(rhs, reversed).ok_or(Error::Singular { node })?;
    let mut kx = vec![0.0; n];
    let residual = |x: &[f64], kx: &mut [f64]| -> (Vec<f64>, f64) {
        k.apply(x, kx);
        let r: Vec<f64> = rhs.iter().zip(kx.iter()).map(|(b, y)| b - y).collect();
        let rel = norm(&r) / scale;
        (r, rel)
    };
    let (r, mut rel) = residual(&x, &mut kx);
    if rel > SOLVE_TOLERANCE {
        let dx = k.solve_once(&r, reversed).ok_or(Error::Singular { node })?;
        x.iter_mut().zip(dx).for_each(|(a, d)| *a += d);
        rel = residual(&x, &mut kx).1;
    }
    if !(rel <= SOLVE_TOLERANCE) {
        return Err(Error::SolveTolerance { node, residual: rel });
    }
    Ok((x, rel))
}

pub fn solve_strong_with(data: &ProblemData, options: SolverOptions) -> Result<DiscreteSolution> {
    let grid = data.grid();
    let dim = data.dim();
    let z = grid.zero_index();
    let kq = KernelQuadrature::new(data.alpha());
    let a = data.alpha().value();
    let g = data.absorption();
    let mass = data.mesh().mass();

    let mut u = Trajectory::zeros(grid.clone(), dim);
    for i in 0..=z {
        u.node_mut(i).copy_from_slice(data.history().node(i));
    }
    // slopes[j * dim..] holds the slope on cell j
    let mut slopes = vec![0.0; (grid.len() - 1) * dim];
    for j in 0..z {
        u.slope_into(j, &mut slopes[j * dim..(j + 1) * dim]);
    }

    let mut steps = Vec::with_capacity(grid.len() - z - 1);
    let mut hist = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut rhs = vec![0.0; dim];
    let mut weights = Vec::with_capacity(grid.len());
    for i in z + 1..grid.len() {
        let t = grid.node(i);
        let tau = grid.cell_width(i - 1);
        let c = tau.powf(-a) / (1.0 - a);

        weights.clear();
        weights.extend((0..i - 1).map(|j| kq.weak(t - grid.node(j + 1), grid.cell_width(j))));
        hist.fill(0.0);
        for (j, w) in weights.iter().enumerate() {
            let k = &slopes[j * dim..(j + 1) * dim];
            for (h, kk) in hist.iter_mut().zip(k) {
                *h += w * kk;
            }
        }

        // rhs = g F + M (c u_{n-1} - hist)
        for ((tm, up), h) in tmp.iter_mut().zip(u.node(i - 1)).zip(&hist) {
            *tm = c * up - h;
        }
        mass.apply(&tmp, &mut rhs);
        for (r, f) in rhs.iter_mut().zip(data.load().node(i)) {
            *r += g * f;
        }

        let am = data.form().assemble(t)?;
        let k = match am {
            FormMatrix::Banded(at) => StepMatrix::Banded(mass.scaled(c).add_scaled(g, &at)),
            FormMatrix::Dense(ad) => StepMatrix::Dense(tridiagonal_dense(mass) * c + ad * g),
        };
        let (x, residual) = solve_checked(&k, &rhs, options.reversed_ordering, i)?;
        u.node_mut(i).copy_from_slice(&x);
        let (prev, cur) = (i - 1, i);
        for d in 0..dim {
            slopes[prev * dim + d] = (u.node(cur)[d] - u.node(prev)[d]) / tau;
        }
        steps.push(StepDiagnostics { t, weight: c, history_weight: weights.iter().sum(), residual });
    }
    Ok(DiscreteSolution { u, steps })
}
