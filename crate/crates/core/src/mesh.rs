//! P1 finite elements on `(0, 1)` with homogeneous Dirichlet values, and the
//! `H` pairing used by every time integral in the crate.

use crate::error::{Error, Result};

/// Inner product on spatial coefficient vectors.
pub trait Pairing: Sync {
    fn dim(&self) -> usize;

    /// Unchecked pairing; callers guarantee both slices have length `dim()`.
    fn inner(&self, a: &[f64], b: &[f64]) -> f64;

    /// Gram operator `G` with `inner(a, b) = a . G b`, applied to `b`.
    fn apply(&self, b: &[f64], out: &mut [f64]);
}

/// Plain dot product; scalar trajectories use `Euclidean(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean(pub usize);

impl Pairing for Euclidean {
    fn dim(&self) -> usize {
        self.0
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn apply(&self, b: &[f64], out: &mut [f64]) {
        out.copy_from_slice(b);
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    pub fn quadratic(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.diag.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * y[i];
            if i + 1 < n {
                acc += self.off[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
            }
        }
        acc
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Tridiagonal) -> Tridiagonal {
        Tridiagonal {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + c * b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Tridiagonal {
        Tridiagonal {
            diag: self.diag.iter().map(|a| c * a).collect(),
            off: self.off.iter().map(|a| c * a).collect(),
        }
    }

    /// Thomas algorithm; `None` on a zero pivot.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        if n > 1 {
            c[0] = self.off[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.off[i - 1] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            if i + 1 < n {
                c[i] = self.off[i] / pivot;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Some(d)
    }
}

/// Uniform P1 mesh of `(0, 1)`; unknowns are the `n_cells - 1` interior nodal
/// values, boundary values are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMesh {
    n_cells: usize,
    dx: f64,
    mass: Tridiagonal,
    stiffness: Tridiagonal,
}

impl SpatialMesh {
    pub fn uniform(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "spatial mesh needs at least 2 cells, got {n_cells}"
            )));
        }
        let dx = 1.0 / n_cells as f64;
        let m = n_cells - 1;
        let mass = Tridiagonal::new(vec![2.0 * dx / 3.0; m], vec![dx / 6.0; m - 1]);
        let stiffness = Tridiagonal::new(vec![2.0 / dx; m], vec![-1.0 / dx; m - 1]);
        Ok(Self { n_cells, dx, mass, stiffness })
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn dofs(&self) -> usize {
        self.n_cells - 1
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Coordinate of mesh node `k` (0 and `n_cells` are the boundary).
    #[inline]
    pub fn node_x(&self, k: usize) -> f64 {
        k as f64 * self.dx
    }

    /// Coordinate of interior unknown `i`.
    #[inline]
    pub fn dof_x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dx
    }

    /// Cell `c` spans `[c dx, (c + 1) dx]`.
    pub fn cell_bounds(&self, c: usize) -> (f64, f64) {
        (self.node_x(c), self.node_x(c + 1))
    }

    pub fn mass(&self) -> &Tridiagonal {
        &self.mass
    }

    pub fn stiffness(&self) -> &Tridiagonal {
        &self.stiffness
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dofs() {
            return Err(Error::DimensionMismatch { expected: self.dofs(), got: v.len() });
        }
        Ok(())
    }

    /// `(u, w)` in `L^2(0, 1)` through the mass matrix.
    pub fn h_inner(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(w)?;
        Ok(self.mass.quadratic(u, w))
    }

    /// `(u', w')` in `L^2(0, 1)`: the `V = H^1_0` inner product.
    pub fn v_inner(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(w)?;
        Ok(self.stiffness.quadratic(u, w))
    }

    /// Nodal interpolant of `f` at the interior nodes.
    pub fn interpolate<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.dofs()).map(|i| f(self.dof_x(i))).collect()
    }

    /// Consistent load vector `b_i = int f phi_i`, three-point Gauss per cell.
    pub fn load_vector<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        const GX: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const GW: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut b = vec![0.0; self.dofs()];
        for c in 0..self.n_cells {
            let (x0, x1) = self.cell_bounds(c);
            let half = 0.5 * (x1 - x0);
            for (gx, gw) in GX.iter().zip(GW) {
                let x = x0 + half * (1.0 + gx);
                let fx = f(x) * gw * half;
                let right = (x - x0) / self.dx;
                // node c carries (1 - right), node c + 1 carries right
                if c >= 1 {
                    b[c - 1] += fx * (1.0 - right);
                }
                if c < self.dofs() {
                    b[c] += fx * right;
                }
            }
        }
        b
    }
}

/// A symmetric positive definite tridiagonal matrix as an inner product,
/// e.g. the stiffness matrix for the `V` norm.
impl Pairing for Tridiagonal {
    fn dim(&self) -> usize {
        Tridiagonal::dim(self)
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.quadratic(a, b)
    }

    fn apply(&self, b: &[f64], out: &mut [f64]) {
        Tridiagonal::apply(self, b, out);
    }
}

impl Pairing for SpatialMesh {
    fn dim(&self) -> usize {
        self.dofs()
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.quadratic(a, b)
    }

    fn apply(&self, b: &[f64], out: &mut [f64]) {
        self.mass.apply(b, out);
    }
}
