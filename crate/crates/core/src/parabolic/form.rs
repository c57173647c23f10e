//! Coercive bilinear forms `a(t, u, v)` on the P1 space and their matrices.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{SpatialMesh, Tridiagonal};

type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Field3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Diffusion coefficient `a(x, t)` of the local form.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `base + amplitude * sign(sin(frequency * t))`, discontinuous in `t`.
    SignSwitch { base: f64, amplitude: f64, frequency: f64 },
    /// Arbitrary `a(x, t)` with declared bounds `lower <= a <= upper`.
    Function { f: Field2, lower: f64, upper: f64 },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::SignSwitch { base, amplitude, frequency } => {
                write!(f, "SignSwitch({base} + {amplitude} sign(sin({frequency} t)))")
            }
            Coefficient::Function { lower, upper, .. } => write!(f, "Function([{lower}, {upper}])"),
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Coefficient {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::SignSwitch { base, amplitude, frequency } => base + amplitude * sign((frequency * t).sin()),
            Coefficient::Function { f, .. } => f(x, t),
        }
    }

    /// Lower and upper bounds over all `(x, t)`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Coefficient::Constant(c) => (*c, *c),
            Coefficient::SignSwitch { base, amplitude, .. } => (base - amplitude.abs(), base + amplitude.abs()),
            Coefficient::Function { lower, upper, .. } => (*lower, *upper),
        }
    }
}

/// Symmetric interaction weights `K(x, y, t) >= 0` between mesh nodes.
#[derive(Clone)]
pub enum NonlocalKernel {
    /// `kappa(t) dx^2 / |x - y|^2`, a discrete `H^{1/2}`-type seminorm
    /// weighted in time; `kappa` is a [`Coefficient`] evaluated at `x = 0`.
    InverseSquare(Coefficient),
    /// Weight `w(t)` between neighbouring nodes only.
    NearestNeighbour(Coefficient),
    /// Arbitrary kernel with declared bound `0 <= K <= upper`.
    Function { k: Field3, upper: f64 },
}

impl fmt::Debug for NonlocalKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonlocalKernel::InverseSquare(c) => write!(f, "InverseSquare({c:?})"),
            NonlocalKernel::NearestNeighbour(c) => write!(f, "NearestNeighbour({c:?})"),
            NonlocalKernel::Function { upper, .. } => write!(f, "Function(<= {upper})"),
        }
    }
}

impl NonlocalKernel {
    fn weight(&self, mesh: &SpatialMesh, k: usize, l: usize, t: f64) -> f64 {
        let (x, y) = (mesh.node_x(k), mesh.node_x(l));
        match self {
            NonlocalKernel::InverseSquare(c) => {
                let d = (x - y) / mesh.dx();
                c.eval(0.0, t) / (d * d)
            }
            NonlocalKernel::NearestNeighbour(c) => {
                if k.abs_diff(l) == 1 {
                    c.eval(0.0, t)
                } else {
                    0.0
                }
            }
            NonlocalKernel::Function { k, .. } => k(x, y, t),
        }
    }

    fn upper(&self) -> f64 {
        match self {
            NonlocalKernel::InverseSquare(c) | NonlocalKernel::NearestNeighbour(c) => c.bounds().1,
            NonlocalKernel::Function { upper, .. } => *upper,
        }
    }

    fn lower(&self) -> f64 {
        match self {
            NonlocalKernel::InverseSquare(c) | NonlocalKernel::NearestNeighbour(c) => c.bounds().0,
            NonlocalKernel::Function { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum FormFlavor {
    /// `int a(x, t) u' v' dx`
    LocalDiv(Coefficient),
    /// `sum_{i<j} (u_i - u_j)(v_i - v_j) K_ij(t)` over all mesh nodes (boundary
    /// values zero) plus `regularization` times the local stiffness form.
    Nonlocal { kernel: NonlocalKernel, regularization: f64 },
}

/// Assembled `A(t)` on the interior unknowns.
#[derive(Debug, Clone, PartialEq)]
pub enum FormMatrix {
    Banded(Tridiagonal),
    Dense(DMatrix<f64>),
}

impl FormMatrix {
    pub fn dim(&self) -> usize {
        match self {
            FormMatrix::Banded(t) => t.dim(),
            FormMatrix::Dense(d) => d.nrows(),
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            FormMatrix::Banded(t) => t.apply(x, out),
            FormMatrix::Dense(d) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = d.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// `x . A y`
    pub fn quadratic(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; y.len()];
        self.apply(y, &mut ay);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            FormMatrix::Banded(t) => tridiagonal_dense(t),
            FormMatrix::Dense(d) => d.clone(),
        }
    }
}

pub(crate) fn tridiagonal_dense(t: &Tridiagonal) -> DMatrix<f64> {
    let n = t.dim();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = t.diag[i];
    }
    for (i, o) in t.off.iter().enumerate() {
        d[(i, i + 1)] = *o;
        d[(i + 1, i)] = *o;
    }
    d
}

/// Bounded, `V`-coercive form `a(t, ., .)` with declared constants
/// `lambda ||w||_V^2 <= a(t, w, w)` and `|a(t, w, v)| <= Lambda ||w||_V ||v||_V`.
#[derive(Debug, Clone)]
pub struct BilinearForm {
    flavor: FormFlavor,
    mesh: SpatialMesh,
    scale: f64,
    lambda: f64,
    big_lambda: f64,
}

/// Smallest eigenvalue of the stiffness matrix `(4/dx) sin^2(pi dx / 2)`.
fn stiffness_min_eig(mesh: &SpatialMesh) -> f64 {
    let s = (std::f64::consts::PI * mesh.dx() / 2.0).sin();
    4.0 / mesh.dx() * s * s
}

impl BilinearForm {
    pub fn local(mesh: SpatialMesh, coefficient: Coefficient) -> Result<Self> {
        let (lo, hi) = coefficient.bounds();
        if !(lo > 0.0 && hi.is_finite() && hi >= lo) {
            return Err(Error::InvalidParameter(format!(
                "coefficient bounds [{lo}, {hi}] must satisfy 0 < lower <= upper"
            )));
        }
        Ok(Self { flavor: FormFlavor::LocalDiv(coefficient), mesh, scale: 1.0, lambda: lo, big_lambda: hi })
    }

    pub fn nonlocal(mesh: SpatialMesh, kernel: NonlocalKernel, regularization: f64) -> Result<Self> {
        if !(regularization > 0.0 && regularization.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "nonlocal form needs a positive regularization, got {regularization}"
            )));
        }
        let (kl, ku) = (kernel.lower(), kernel.upper());
        if !(kl >= 0.0 && ku.is_finite()) {
            return Err(Error::InvalidParameter(format!("kernel bounds [{kl}, {ku}] must be nonnegative")));
        }
        // sum_{i<j} (w_i - w_j)^2 <= (#nodes) |w|^2 <= (#nodes) w.Sw / mu_min(S)
        let nodes = (mesh.n_cells() + 1) as f64;
        let big_lambda = regularization + ku * nodes / stiffness_min_eig(&mesh);
        Ok(Self {
            flavor: FormFlavor::Nonlocal { kernel, regularization },
            mesh,
            scale: 1.0,
            lambda: regularization,
            big_lambda,
        })
    }

    /// `c * a`, `c > 0`; used to absorb normalization constants.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("form scale must be positive, got {c}")));
        }
        Ok(Self {
            flavor: self.flavor.clone(),
            mesh: self.mesh.clone(),
            scale: self.scale * c,
            lambda: self.lambda * c,
            big_lambda: self.big_lambda * c,
        })
    }

    pub fn flavor(&self) -> &FormFlavor {
        &self.flavor
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.mesh
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.flavor, FormFlavor::LocalDiv(_))
    }

    /// `A(t)` on the interior unknowns.
    pub fn assemble(&self, t: f64) -> Result<FormMatrix> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::OutsideGrid { t, lo: 0.0, hi: f64::INFINITY });
        }
        Ok(match &self.flavor {
            FormFlavor::LocalDiv(c) => FormMatrix::Banded(self.local_matrix(c, t, self.scale)),
            FormFlavor::Nonlocal { kernel, regularization } => {
                let mut d = tridiagonal_dense(self.mesh.stiffness());
                d *= *regularization;
                let n = self.mesh.n_cells();
                for k in 0..=n {
                    for l in k + 1..=n {
                        let w = kernel.weight(&self.mesh, k, l, t);
                        if w == 0.0 {
                            continue;
                        }
                        let ki = (k >= 1 && k < n).then(|| k - 1);
                        let li = (l >= 1 && l < n).then(|| l - 1);
                        if let Some(i) = ki {
                            d[(i, i)] += w;
                        }
                        if let Some(j) = li {
                            d[(j, j)] += w;
                        }
                        if let (Some(i), Some(j)) = (ki, li) {
                            d[(i, j)] -= w;
                            d[(j, i)] -= w;
                        }
                    }
                }
                d *= self.scale;
                FormMatrix::Dense(d)
            }
        })
    }

    fn local_matrix(&self, c: &Coefficient, t: f64, scale: f64) -> Tridiagonal {
        const G: f64 = 0.577_350_269_189_625_8;
        let mesh = &self.mesh;
        let m = mesh.dofs();
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m.saturating_sub(1)];
        for cell in 0..mesh.n_cells() {
            let (x0, x1) = mesh.cell_bounds(cell);
            let (mid, half) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
            let a = 0.5 * (c.eval(mid - G * half, t) + c.eval(mid + G * half, t));
            let k = scale * a / mesh.dx();
            if cell >= 1 {
                diag[cell - 1] += k;
            }
            if cell < m {
                diag[cell] += k;
            }
            if cell >= 1 && cell < m {
                off[cell - 1] -= k;
            }
        }
        Tridiagonal::new(diag, off)
    }

    /// Spot check of the declared constants at `times`.
    pub fn coercivity_witness(&self, times: &[f64], probes: usize, seed: u64) -> Result<CoercivityWitness> {
        let mesh = &self.mesh;
        let s = tridiagonal_dense(mesh.stiffness());
        let chol = s.clone().cholesky().ok_or(Error::Singular { node: 0 })?;
        let l = chol.l();
        let l_inv = l.clone().try_inverse().ok_or(Error::Singular { node: 0 })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = mesh.dofs();
        let mut w = CoercivityWitness {
            min_eigenvalue: f64::INFINITY,
            max_eigenvalue: f64::NEG_INFINITY,
            min_rayleigh: f64::INFINITY,
            max_bound_ratio: 0.0,
            symmetric: true,
        };
        for &t in times {
            let a = self.assemble(t)?;
            let ad = a.to_dense();
            w.symmetric &= (&ad - ad.transpose()).amax() <= 1e-12 * ad.amax().max(1.0);
            let c = &l_inv * &ad * l_inv.transpose();
            let c = 0.5 * (&c + c.transpose());
            let eig = c.symmetric_eigenvalues();
            w.min_eigenvalue = w.min_eigenvalue.min(eig.min());
            w.max_eigenvalue = w.max_eigenvalue.max(eig.max());
            for _ in 0..probes {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (sx, sy) = (mesh.stiffness().quadratic(&x, &x), mesh.stiffness().quadratic(&y, &y));
                w.min_rayleigh = w.min_rayleigh.min(a.quadratic(&x, &x) / sx);
                w.max_bound_ratio = w.max_bound_ratio.max(a.quadratic(&x, &y).abs() / (sx * sy).sqrt());
            }
        }
        Ok(w)
    }
}

/// Observed constants of a form: generalized eigenvalues of `A(t) w = mu S w`
/// and random-probe ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityWitness {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub min_rayleigh: f64,
    pub max_bound_ratio: f64,
    pub symmetric: bool,
}

impl CoercivityWitness {
    /// Declared constants hold up to `tol`.
    pub fn confirms(&self, form: &BilinearForm, tol: f64) -> bool {
        self.symmetric
            && self.min_eigenvalue >= form.lambda() - tol
            && self.min_rayleigh >= form.lambda() - tol
            && self.max_bound_ratio <= form.big_lambda() + tol
            && self.max_eigenvalue <= form.big_lambda() + tol
    }
}
