use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::mesh::{Pairing, SpatialMesh};
use crate::order::{FracOrder, Normalization};
use crate::parabolic::form::{BilinearForm, Coefficient};
use crate::trajectory::Trajectory;

/// Data of `d^alpha u + A(t) u = f` with history `u = v` on `(-inf, 0]`.
///
/// The load is stored as dual vectors `<f(t_i), phi_k>` at every node; only
/// nodes in `(0, T]` are used by the solver. The history is stored on the
/// same grid and is zero at the forward nodes.
#[derive(Debug, Clone)]
pub struct ProblemData {
    alpha: FracOrder,
    grid: TimeGrid,
    form: BilinearForm,
    history: Trajectory,
    load: Trajectory,
    normalization: Normalization,
}

impl ProblemData {
    /// Zero history and zero load.
    pub fn new(alpha: FracOrder, grid: TimeGrid, form: BilinearForm, normalization: Normalization) -> Self {
        let dim = form.mesh().dofs();
        Self {
            alpha,
            history: Trajectory::zeros(grid.clone(), dim),
            load: Trajectory::zeros(grid.clone(), dim),
            grid,
            form,
            normalization,
        }
    }

    fn check(&self, tr: &Trajectory, what: &str) -> Result<()> {
        if tr.grid() != &self.grid {
            return Err(Error::Incompatible(format!("{what} lives on a different time grid")));
        }
        if tr.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: tr.dim() });
        }
        Ok(())
    }

    /// History from a trajectory on the problem grid; forward nodes are ignored.
    pub fn with_history(mut self, v: Trajectory) -> Result<Self> {
        self.check(&v, "history")?;
        let z = self.grid.zero_index();
        let mut h = v;
        for i in z + 1..self.grid.len() {
            h.node_mut(i).fill(0.0);
        }
        self.history = h;
        Ok(self)
    }

    /// History `v(t, x)` interpolated at the spatial nodes.
    pub fn with_history_fn<F: Fn(f64, f64) -> f64>(self, v: F) -> Result<Self> {
        let mesh = self.form.mesh().clone();
        let z = self.grid.zero_index();
        let tr = Trajectory::from_fn(self.grid.clone(), mesh.dofs(), |t, out| {
            if t <= self.grid.node(z) {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = v(t, mesh.dof_x(i));
                }
            }
        });
        self.with_history(tr)
    }

    /// Load as dual vectors at every node.
    pub fn with_load(mut self, f: Trajectory) -> Result<Self> {
        self.check(&f, "load")?;
        self.load = f;
        Ok(self)
    }

    /// Load from a source `f(x, t)` through the consistent load vector.
    pub fn with_source<F: Fn(f64, f64) -> f64>(self, f: F) -> Result<Self> {
        let mesh = self.form.mesh().clone();
        let tr = Trajectory::from_fn(self.grid.clone(), mesh.dofs(), |t, out| {
            out.copy_from_slice(&mesh.load_vector(|x| f(x, t)));
        });
        self.with_load(tr)
    }

    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mesh(&self) -> &SpatialMesh {
        self.form.mesh()
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn history(&self) -> &Trajectory {
        &self.history
    }

    pub fn load(&self) -> &Trajectory {
        &self.load
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn dim(&self) -> usize {
        self.form.mesh().dofs()
    }

    /// Factor multiplying `A` and `f` once the derivative is written in paper
    /// normalization: 1, or `Gamma(1 - alpha)` for the classical one.
    pub fn absorption(&self) -> f64 {
        self.normalization.absorption_factor(self.alpha)
    }

    /// `int_{-inf}^0 ||v(t)||^2 (1 - t)^(-1-alpha) dt`, with the constant
    /// tail below `-M` integrated in closed form.
    pub fn weighted_history_norm(&self) -> f64 {
        const GX: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const GW: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let a = self.alpha.value();
        let mesh = self.mesh();
        let v0 = self.history.node(0);
        let m = -self.grid.start();
        let mut acc = mesh.inner(v0, v0) * (1.0 + m).powf(-a) / a;
        let mut v = vec![0.0; self.dim()];
        for j in 0..self.grid.zero_index() {
            let (lo, hi) = (self.grid.node(j), self.grid.node(j + 1));
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (gx, gw) in GX.iter().zip(GW) {
                let t = mid + half * gx;
                self.history.eval_extended_into(t, &mut v);
                acc += gw * half * mesh.inner(&v, &v) * (1.0 - t).powf(-1.0 - a);
            }
        }
        acc
    }

    /// Same data with the form and load multiplied by `c`.
    pub fn scaled_operator(&self, c: f64) -> Result<Self> {
        Ok(Self {
            alpha: self.alpha,
            grid: self.grid.clone(),
            form: self.form.scaled(c)?,
            history: self.history.clone(),
            load: self.load.scaled(c),
            normalization: self.normalization,
        })
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }
}

/// Exact solution `u*(t) = t^2 s` (zero history) of a manufactured problem,
/// with `s` the interpolant of `sin(pi x)`.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub data: ProblemData,
    pub exact: Trajectory,
}

/// Manufactured problem for `u*(t) = max(t, 0)^2 s`.
///
/// The load is `d D(t) M s + t^2 A(t) s` with the closed form
/// `D(t) = 2 t^(2-alpha) / ((1 - alpha)(2 - alpha))` of the paper-normalized
/// derivative and `d` the normalization's derivative factor, so `t^2 s` solves
/// the spatially discrete problem exactly and all error is temporal.
pub fn manufactured(alpha: FracOrder, grid: TimeGrid, form: BilinearForm, normalization: Normalization) -> Result<Manufactured> {
    let mesh = form.mesh().clone();
    let s = mesh.interpolate(|x| (std::f64::consts::PI * x).sin());
    let ms = {
        let mut v = vec![0.0; s.len()];
        mesh.mass().apply(&s, &mut v);
        v
    };
    let a = alpha.value();
    let d = normalization.derivative_factor(alpha);
    let mut load = Trajectory::zeros(grid.clone(), s.len());
    for i in grid.zero_index() + 1..grid.len() {
        let t = grid.node(i);
        let dt = 2.0 * t.powf(2.0 - a) / ((1.0 - a) * (2.0 - a));
        let mut as_ = vec![0.0; s.len()];
        form.assemble(t)?.apply(&s, &mut as_);
        for ((l, m), k) in load.node_mut(i).iter_mut().zip(&ms).zip(&as_) {
            *l = d * dt * m + t * t * k;
        }
    }
    let exact = Trajectory::tensor(grid.clone(), &s, |t| if t > 0.0 { t * t } else { 0.0 });
    let data = ProblemData::new(alpha, grid, form, normalization).with_load(load)?;
    Ok(Manufactured { data, exact })
}

/// Fractional relaxation of the first sine mode: `a = 1`, classical
/// normalization, history `v(t) = sin(pi x)` for all `t <= 0`, no load.
/// The first-mode amplitude of the exact solution is `E_alpha(-pi^2 t^alpha)`.
pub fn relaxation(alpha: FracOrder, grid: TimeGrid, n_x: usize) -> Result<ProblemData> {
    let mesh = SpatialMesh::uniform(n_x)?;
    let form = BilinearForm::local(mesh, Coefficient::Constant(1.0))?;
    ProblemData::new(alpha, grid, form, Normalization::Classical)
        .with_history_fn(|_, x| (std::f64::consts::PI * x).sin())
}

/// `(w, s)_M / (s, s)_M` with `s` the interpolant of `sin(pi x)`.
pub fn first_mode_amplitude(mesh: &SpatialMesh, w: &[f64]) -> f64 {
    let s = mesh.interpolate(|x| (std::f64::consts::PI * x).sin());
    mesh.inner(w, &s) / mesh.inner(&s, &s)
}
