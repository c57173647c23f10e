use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::mesh::Pairing;

/// Time series of spatial coefficient vectors on a [`TimeGrid`].
///
/// The reconstruction is piecewise linear between nodes and constant
/// (`values[0]`) for `s < -M`. Above `T` the extended reconstruction is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("trajectory dimension must be positive".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch { expected: grid.len() * dim, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("trajectory values must be finite".into()));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        let values = vec![0.0; grid.len() * dim];
        Self { grid, dim, values }
    }

    pub fn from_fn<F: FnMut(f64, &mut [f64])>(grid: TimeGrid, dim: usize, mut f: F) -> Self {
        let mut values = vec![0.0; grid.len() * dim];
        for (i, chunk) in values.chunks_mut(dim).enumerate() {
            f(grid.node(i), chunk);
        }
        Self { grid, dim, values }
    }

    /// Scalar (`dim = 1`) trajectory sampled from `f`.
    pub fn scalar<F: Fn(f64) -> f64>(grid: TimeGrid, f: F) -> Self {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self { grid, dim: 1, values }
    }

    /// `phi(t) = temporal(t) * spatial`.
    pub fn tensor<F: Fn(f64) -> f64>(grid: TimeGrid, spatial: &[f64], temporal: F) -> Self {
        let dim = spatial.len();
        Self::from_fn(grid, dim, |t, out| {
            let c = temporal(t);
            for (o, s) in out.iter_mut().zip(spatial) {
                *o = c * s;
            }
        })
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Value of a scalar trajectory at node `i`.
    #[inline]
    pub fn scalar_at(&self, i: usize) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.values[i]
    }

    /// Slope on cell `j`.
    pub fn slope_into(&self, j: usize, out: &mut [f64]) {
        let h = self.grid.cell_width(j);
        let (a, b) = (self.node(j), self.node(j + 1));
        for k in 0..self.dim {
            out[k] = (b[k] - a[k]) / h;
        }
    }

    /// Reconstruction at `t <= T`; constant tail below `-M`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if t > self.grid.horizon() || t.is_nan() {
            return Err(Error::OutsideGrid { t, lo: f64::NEG_INFINITY, hi: self.grid.horizon() });
        }
        self.eval_extended_into(t, out);
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Reconstruction on the whole line: constant tail below `-M`, zero above `T`.
    pub fn eval_extended_into(&self, t: f64, out: &mut [f64]) {
        if t <= self.grid.start() {
            out.copy_from_slice(self.node(0));
            return;
        }
        if t > self.grid.horizon() {
            out.fill(0.0);
            return;
        }
        let j = self.grid.locate(t).expect("inside grid");
        let (t0, t1) = (self.grid.node(j), self.grid.node(j + 1));
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.node(j), self.node(j + 1));
        for k in 0..self.dim {
            out[k] = (1.0 - w) * a[k] + w * b[k];
        }
    }

    /// Exact integral of the extended reconstruction over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        if hi <= lo {
            return acc;
        }
        let start = self.grid.start();
        if lo < start {
            let len = hi.min(start) - lo;
            for (a, v) in acc.iter_mut().zip(self.node(0)) {
                *a += len * v;
            }
        }
        let lo_in = lo.max(start);
        let hi_in = hi.min(self.grid.horizon());
        if hi_in > lo_in {
            let mut va = vec![0.0; self.dim];
            let mut vb = vec![0.0; self.dim];
            let first = self.grid.locate(lo_in).expect("inside");
            let nodes = self.grid.nodes();
            let mut j = first;
            while j + 1 < nodes.len() && nodes[j] < hi_in {
                let a = nodes[j].max(lo_in);
                let b = nodes[j + 1].min(hi_in);
                if b > a {
                    self.eval_extended_into(a, &mut va);
                    self.eval_extended_into(b, &mut vb);
                    let half = 0.5 * (b - a);
                    for k in 0..self.dim {
                        acc[k] += half * (va[k] + vb[k]);
                    }
                }
                j += 1;
            }
        }
        acc
    }

    /// Same function sampled on `grid` (whose nodes must not exceed `T`).
    pub fn resample(&self, grid: &TimeGrid) -> Result<Trajectory> {
        if grid.horizon() > self.grid.horizon() * (1.0 + 1e-14) {
            return Err(Error::OutsideGrid {
                t: grid.horizon(),
                lo: self.grid.start(),
                hi: self.grid.horizon(),
            });
        }
        let mut out = Trajectory::zeros(grid.clone(), self.dim);
        for i in 0..grid.len() {
            let t = grid.node(i).min(self.grid.horizon());
            self.eval_extended_into(t, out.node_mut(i));
        }
        Ok(out)
    }

    /// Nodewise map producing a trajectory of dimension `dim`.
    pub fn map_nodes<F: FnMut(f64, &[f64], &mut [f64])>(&self, dim: usize, mut f: F) -> Trajectory {
        let mut out = Trajectory::zeros(self.grid.clone(), dim);
        for i in 0..self.grid.len() {
            let t = self.grid.node(i);
            let src = self.node(i);
            f(t, src, &mut out.values[i * dim..(i + 1) * dim]);
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Trajectory {
        Trajectory {
            grid: self.grid.clone(),
            dim: self.dim,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    fn check_same_shape(&self, other: &Trajectory) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.grid != other.grid {
            return Err(Error::Incompatible("trajectories live on different grids".into()));
        }
        Ok(())
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Trajectory, b: f64) -> Result<Trajectory> {
        self.check_same_shape(other)?;
        Ok(Trajectory {
            grid: self.grid.clone(),
            dim: self.dim,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    /// Nodewise product with a scalar trajectory on the same grid.
    pub fn times_scalar(&self, psi: &Trajectory) -> Result<Trajectory> {
        if psi.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: psi.dim });
        }
        if self.grid != psi.grid {
            return Err(Error::Incompatible("trajectories live on different grids".into()));
        }
        Ok(self.clone().scaled_nodewise(&psi.values))
    }

    fn scaled_nodewise(mut self, factors: &[f64]) -> Trajectory {
        let dim = self.dim;
        for (chunk, f) in self.values.chunks_mut(dim).zip(factors) {
            for v in chunk {
                *v *= f;
            }
        }
        self
    }

    /// Scalar trajectory `(self(t), other(t))` at the nodes.
    pub fn pair_nodes(&self, other: &Trajectory, pairing: &dyn Pairing) -> Result<Trajectory> {
        self.check_same_shape(other)?;
        Ok(Trajectory {
            grid: self.grid.clone(),
            dim: 1,
            values: (0..self.grid.len()).map(|i| pairing.inner(self.node(i), other.node(i))).collect(),
        })
    }

    /// Largest absolute nodal coefficient.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute nodal coefficient over nodes `t_i` in `[lo, hi]`.
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.grid.len() {
            let t = self.grid.node(i);
            if t >= lo && t <= hi {
                m = self.node(i).iter().fold(m, |acc, v| acc.max(v.abs()));
            }
        }
        m
    }

    /// True when every node `t_i <= t` is exactly zero.
    pub fn vanishes_up_to(&self, t: f64) -> bool {
        (0..self.grid.len())
            .take_while(|&i| self.grid.node(i) <= t)
            .all(|i| self.node(i).iter().all(|&v| v == 0.0))
    }

    /// True when every node `t_i >= t` is exactly zero.
    pub fn vanishes_from(&self, t: f64) -> bool {
        (0..self.grid.len())
            .filter(|&i| self.grid.node(i) >= t)
            .all(|i| self.node(i).iter().all(|&v| v == 0.0))
    }

    /// Exact `int_{t_from}^{T} ||u(t)||^2 dt` of the reconstruction, where
    /// `t_from` is node `from`.
    pub fn l2_norm_sq_from(&self, pairing: &dyn Pairing, from: usize) -> f64 {
        let mut acc = 0.0;
        for j in from..self.grid.len() - 1 {
            let (a, b) = (self.node(j), self.node(j + 1));
            let h = self.grid.cell_width(j);
            acc += h / 3.0 * (pairing.inner(a, a) + pairing.inner(a, b) + pairing.inner(b, b));
        }
        acc
    }

    /// Exact `L^2(0, T; H)` norm.
    pub fn l2_norm_forward(&self, pairing: &dyn Pairing) -> f64 {
        self.l2_norm_sq_from(pairing, self.grid.zero_index()).sqrt()
    }
}
