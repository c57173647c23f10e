//! Steklov averages, the running anti-derivative, and numerical checks of
//! how both interact with the Marchaud derivative.

use crate::error::{Error, Result};
use crate::frac_ops::{apply_gram, marchaud_nodes};
use crate::kernel::{trapezoid, KernelQuadrature};
use crate::mesh::Pairing;
use crate::order::FracOrder;
use crate::report::ResidualReport;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `(1/h) int_{t-h}^t`
    Backward,
    /// `(1/h) int_t^{t+h}`
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteklovParams {
    pub h: f64,
    pub direction: Direction,
}

impl SteklovParams {
    pub fn new(h: f64, direction: Direction) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("Steklov window must be positive, got {h}")));
        }
        Ok(Self { h, direction })
    }

    pub fn backward(h: f64) -> Result<Self> {
        Self::new(h, Direction::Backward)
    }

    pub fn forward(h: f64) -> Result<Self> {
        Self::new(h, Direction::Forward)
    }
}

/// Window actually used on `u`'s grid: a whole number of cells on uniform
/// grids, `h` itself otherwise. The second value is that number of cells.
pub fn effective_window(u: &Trajectory, h: f64) -> (f64, Option<usize>) {
    match u.grid().uniform_spacing() {
        Some(dt) => {
            let m = ((h / dt).round() as usize).max(1);
            (m as f64 * dt, Some(m))
        }
        None => (h, None),
    }
}

fn check_window(u: &Trajectory, h: f64) -> Result<()> {
    let g = u.grid();
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("Steklov window must be positive, got {h}")));
    }
    if h >= g.horizon() - g.start() {
        return Err(Error::InvalidParameter(format!(
            "Steklov window {h} must be smaller than the grid span {}",
            g.horizon() - g.start()
        )));
    }
    Ok(())
}

/// Exact Steklov average of the extended reconstruction (constant below
/// `-M`, zero above `T`), sampled at the nodes.
pub fn steklov(u: &Trajectory, p: SteklovParams) -> Result<Trajectory> {
    check_window(u, p.h)?;
    let (h, cells) = effective_window(u, p.h);
    let g = u.grid();
    let dim = u.dim();
    let mut out = Trajectory::zeros(g.clone(), dim);
    match cells {
        Some(m) => {
            // exact trapezoid sums over whole cells
            let last = g.len() as isize - 1;
            let node = |k: isize| -> Option<&[f64]> {
                if k < 0 {
                    Some(u.node(0))
                } else if k > last {
                    None
                } else {
                    Some(u.node(k as usize))
                }
            };
            let m = m as isize;
            for i in 0..g.len() {
                let i = i as isize;
                let (lo, hi) = match p.direction {
                    Direction::Backward => (i - m, i),
                    Direction::Forward => (i, i + m),
                };
                let dst = out.node_mut(i as usize);
                for k in lo..=hi {
                    let w = if k == lo || k == hi { 0.5 } else { 1.0 };
                    if let Some(v) = node(k) {
                        for (d, x) in dst.iter_mut().zip(v) {
                            *d += w * x;
                        }
                    }
                }
                dst.iter_mut().for_each(|d| *d /= m as f64);
            }
        }
        None => {
            for i in 0..g.len() {
                let t = g.node(i);
                let (lo, hi) = match p.direction {
                    Direction::Backward => (t - h, t),
                    Direction::Forward => (t, t + h),
                };
                let avg = u.integral(lo, hi);
                for (d, a) in out.node_mut(i).iter_mut().zip(avg) {
                    *d = a / h;
                }
            }
        }
    }
    Ok(out)
}

/// `int_{-inf}^t u` at the nodes. The trajectory must vanish at `-M` so the
/// tail contributes nothing.
pub fn antiderivative(u: &Trajectory) -> Result<Trajectory> {
    if u.node(0).iter().any(|&v| v != 0.0) {
        return Err(Error::Support("anti-derivative needs u = 0 at -M and before".into()));
    }
    let g = u.grid();
    let dim = u.dim();
    let mut out = Trajectory::zeros(g.clone(), dim);
    let mut acc = vec![0.0; dim];
    for j in 0..g.len() - 1 {
        let half = 0.5 * g.cell_width(j);
        let (a, b) = (u.node(j), u.node(j + 1));
        for k in 0..dim {
            acc[k] += half * (a[k] + b[k]);
        }
        out.node_mut(j + 1).copy_from_slice(&acc);
    }
    Ok(out)
}

fn sup_discrepancy(a: &Trajectory, b: &Trajectory) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn commutation_report(name: &str, lhs: &Trajectory, rhs: &Trajectory, param: Option<f64>) -> ResidualReport {
    let raw = sup_discrepancy(lhs, rhs);
    let terms = vec![("max_abs_lhs".to_string(), lhs.max_abs()), ("max_abs_rhs".to_string(), rhs.max_abs())];
    ResidualReport::from_raw(name, lhs.grid().forward_cells(), param, terms, raw)
}

/// Sup over nodes of `|d^{-1} d^alpha u - d^alpha d^{-1} u|`, normalized by
/// the larger of the two sides.
pub fn check_switch_lemma(u: &Trajectory, alpha: FracOrder) -> Result<ResidualReport> {
    let lhs = antiderivative(&marchaud_nodes(u, alpha))?;
    let rhs = marchaud_nodes(&antiderivative(u)?, alpha);
    Ok(commutation_report("switch", &lhs, &rhs, None))
}

/// Sup over nodes of `|d^alpha (u_hbar) - (d^alpha u)_hbar|` for the backward
/// average with window `h`.
pub fn check_steklov_commutation(u: &Trajectory, alpha: FracOrder, h: f64) -> Result<ResidualReport> {
    if u.node(0).iter().any(|&v| v != 0.0) {
        return Err(Error::Support("Steklov commutation needs u = 0 at -M and before".into()));
    }
    let p = SteklovParams::backward(h)?;
    let lhs = marchaud_nodes(&steklov(u, p)?, alpha);
    let rhs = steklov(&marchaud_nodes(u, alpha), p)?;
    let (h_eff, _) = effective_window(u, h);
    Ok(commutation_report("steklov_commutation", &lhs, &rhs, Some(h_eff)))
}

/// Both checks of the shift identities for one pair `(u, eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCheck {
    /// `int (u, eta_hbar) = int (u_h, eta)`
    pub shift: ResidualReport,
    /// The two-sided transfer with endpoint and memory terms.
    pub two_sided: ResidualReport,
}

/// Trapezoid sum of `(a(t), b(t))` over the whole grid.
fn paired_integral(a: &Trajectory, b: &Trajectory, pairing: &dyn Pairing) -> Result<f64> {
    let p = a.pair_nodes(b, pairing)?;
    Ok(trapezoid(a.grid(), p.values(), 0, a.grid().len() - 1))
}

/// `int_{-M}^T (u, phi)(T - t)^(-alpha) + alpha int int (du, dphi) K`, the
/// right-hand side of the rewritten integration by parts for one pair.
fn endpoint_plus_memory(kq: &KernelQuadrature, u: &Trajectory, gphi: &Trajectory) -> f64 {
    let g = u.grid();
    let endpoint = kq.endpoint_weighted(u, gphi, g.horizon(), 0, g.len() - 1);
    let inner: Vec<f64> =
        (0..g.len()).map(|i| kq.bilinear_memory(u, gphi, f64::NEG_INFINITY, g.node(i))).collect();
    endpoint + trapezoid(g, &inner, 0, g.len() - 1)
}

/// Checks `int (u, eta_hbar) = int (u_h, eta)` and its two-sided version
/// with the endpoint weight and the memory double integral. Both `u` and
/// `eta` must vanish at `-M` and on `[T - 2h, T]`.
pub fn check_shift_identity(
    u: &Trajectory,
    eta: &Trajectory,
    h: f64,
    alpha: FracOrder,
    pairing: &dyn Pairing,
) -> Result<ShiftCheck> {
    let g = u.grid();
    if eta.grid() != g || eta.dim() != u.dim() {
        return Err(Error::Incompatible("u and eta must share grid and dimension".into()));
    }
    let (h_eff, _) = effective_window(u, h);
    let cut = g.horizon() - 2.0 * h_eff;
    let u_fwd = steklov(u, SteklovParams::forward(h)?)?;
    if eta.max_abs_on(cut, g.horizon()) != 0.0 || u_fwd.max_abs_on(cut, g.horizon()) != 0.0 {
        return Err(Error::Support(format!("eta and u_h must vanish on [{cut}, {}]", g.horizon())));
    }
    if u.node(0).iter().chain(eta.node(0)).any(|&v| v != 0.0) {
        return Err(Error::Support("u and eta must vanish at -M".into()));
    }
    let eta_bwd = steklov(eta, SteklovParams::backward(h)?)?;
    let n = g.forward_cells();

    let left = paired_integral(u, &eta_bwd, pairing)?;
    let right = paired_integral(&u_fwd, eta, pairing)?;
    let shift = ResidualReport::from_sides(
        "shift",
        n,
        Some(h_eff),
        vec![("u_eta_hbar".into(), left)],
        vec![("u_h_eta".into(), right)],
    );

    let kq = KernelQuadrature::new(alpha);
    let g_eta_bwd = apply_gram(&eta_bwd, pairing);
    let g_eta = apply_gram(eta, pairing);
    let end_l = kq.endpoint_weighted(u, &g_eta_bwd, g.horizon(), 0, g.len() - 1);
    let end_r = kq.endpoint_weighted(&u_fwd, &g_eta, g.horizon(), 0, g.len() - 1);
    let mem_l = endpoint_plus_memory(&kq, u, &g_eta_bwd) - end_l;
    let mem_r = endpoint_plus_memory(&kq, &u_fwd, &g_eta) - end_r;
    let two_sided = ResidualReport::from_sides(
        "two_sided_transfer",
        n,
        Some(h_eff),
        vec![("endpoint_u_eta_hbar".into(), end_l), ("memory_u_eta_hbar".into(), mem_l)],
        vec![("endpoint_u_h_eta".into(), end_r), ("memory_u_h_eta".into(), mem_r)],
    );
    Ok(ShiftCheck { shift, two_sided })
}

/// Distances `||f_h - f||_{L^2(0,T)}` for a sequence of forward windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SteklovConvergence {
    pub h: Vec<f64>,
    pub distances: Vec<f64>,
    /// `||f||_{L^2(0,T)}` in the same norm.
    pub norm: f64,
}

impl SteklovConvergence {
    /// True when every distance is strictly below its predecessor.
    pub fn monotone(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }

    /// `d_k / d_{k+1}` for consecutive windows.
    pub fn ratios(&self) -> Vec<f64> {
        self.distances.windows(2).map(|w| w[0] / w[1]).collect()
    }

    /// One report whose raw value is the distance at the smallest window.
    pub fn report(&self, n: usize) -> ResidualReport {
        let mut terms: Vec<(String, f64)> =
            self.h.iter().zip(&self.distances).map(|(h, d)| (format!("dist_h={h}"), *d)).collect();
        terms.push(("norm_f".into(), self.norm));
        let raw = self.distances.last().copied().unwrap_or(0.0);
        ResidualReport::from_raw("steklov_convergence", n, self.h.last().copied(), terms, raw)
    }
}

/// Forward averages of `f` extended by zero outside `[0, T]`, measured in
/// `L^2(0, T; pairing)`. Typically `pairing` is the stiffness form (the V
/// norm) or the mass form (the H norm).
pub fn check_steklov_convergence(
    f: &Trajectory,
    h_sequence: &[f64],
    pairing: &dyn Pairing,
) -> Result<SteklovConvergence> {
    if h_sequence.is_empty() {
        return Err(Error::Empty("h_sequence"));
    }
    let g = f.grid();
    let z = g.zero_index();
    let mut fz = f.clone();
    for i in 0..z {
        fz.node_mut(i).fill(0.0);
    }
    let mut distances = Vec::with_capacity(h_sequence.len());
    let mut h_used = Vec::with_capacity(h_sequence.len());
    for &h in h_sequence {
        let fh = steklov(&fz, SteklovParams::forward(h)?)?;
        let diff = fh.lincomb(1.0, &fz, -1.0)?;
        distances.push(diff.l2_norm_forward(pairing));
        h_used.push(effective_window(&fz, h).0);
    }
    Ok(SteklovConvergence { h: h_used, distances, norm: fz.l2_norm_forward(pairing) })
}
