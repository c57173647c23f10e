//! Closed-form cell moments of the kernels `(t - s)^(-1-alpha)` and
//! `(t - s)^(-alpha)` against piecewise-linear trajectories.
//!
//! Every routine here decomposes `(-inf, t]` into the grid cells left of `t`
//! (the last one clipped at `t`) plus the constant tail below `-M`. On each
//! cell the integrand is a polynomial in `w = t - s` times a power of `w`, so
//! the integral is a combination of the moments `int w^p dw`. On the cell
//! ending at `t` the coefficient of `w^(-1-alpha)` vanishes identically and is
//! never evaluated, so no numerical integration crosses the singularity.

use crate::grid::TimeGrid;
use crate::order::FracOrder;
use crate::trajectory::Trajectory;

/// Kernel moments for a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuadrature {
    alpha: f64,
}

/// Cell `j` of the grid clipped to `[lower, t]`, with its `w = t - s` range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpan {
    pub j: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    pub w_lo: f64,
    pub w_hi: f64,
    /// The clipped cell ends at `t` (`w_lo == 0`).
    pub touches_t: bool,
}

/// `int_lo^{lo+width} w^p dw` for `p > -1` when `lo == 0`, any `p` otherwise.
fn power_moment(p: f64, lo: f64, width: f64) -> f64 {
    let q = p + 1.0;
    if width <= 0.0 {
        return 0.0;
    }
    if lo == 0.0 {
        return width.powf(q) / q;
    }
    // lo^q ((1 + width/lo)^q - 1) / q without cancellation
    lo.powf(q) * (q * (width / lo).ln_1p()).exp_m1() / q
}

impl KernelQuadrature {
    pub fn new(alpha: FracOrder) -> Self {
        Self { alpha: alpha.value() }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `int w^(-1-alpha) dw` over `[lo, lo + width]`, `lo > 0`.
    #[inline]
    pub fn singular(&self, lo: f64, width: f64) -> f64 {
        debug_assert!(lo > 0.0);
        power_moment(-1.0 - self.alpha, lo, width)
    }

    /// `int w^(-alpha) dw`.
    #[inline]
    pub fn weak(&self, lo: f64, width: f64) -> f64 {
        power_moment(-self.alpha, lo, width)
    }

    /// `int w^(1-alpha) dw`.
    #[inline]
    pub fn linear(&self, lo: f64, width: f64) -> f64 {
        power_moment(1.0 - self.alpha, lo, width)
    }

    /// `int w^(2-alpha) dw`.
    #[inline]
    pub fn quadratic(&self, lo: f64, width: f64) -> f64 {
        power_moment(2.0 - self.alpha, lo, width)
    }

    /// `alpha int_w^inf x^(-1-alpha) dx = w^(-alpha)`.
    #[inline]
    pub fn tail(&self, w: f64) -> f64 {
        w.powf(-self.alpha)
    }

    /// `int_lower^t (t - s)^(-alpha) ds` summed over the grid decomposition.
    pub fn weak_total(&self, grid: &TimeGrid, lower: f64, t: f64) -> f64 {
        cells(grid, lower, t).map(|c| self.weak(c.w_lo, c.w_hi - c.w_lo)).sum()
    }

    /// `alpha int_{-inf}^t (u(t) - u(s)) (t - s)^(-1-alpha) ds`, the Marchaud
    /// derivative in paper normalization, accumulated into `out`.
    pub fn marchaud_into(&self, u: &Trajectory, t: f64, out: &mut [f64]) {
        let dim = u.dim();
        out.fill(0.0);
        let grid = u.grid();
        if t <= grid.start() {
            return;
        }
        let a = self.alpha;
        let mut ut = vec![0.0; dim];
        let mut ub = vec![0.0; dim];
        let mut k = vec![0.0; dim];
        u.eval_extended_into(t, &mut ut);
        for c in cells(grid, f64::NEG_INFINITY, t) {
            u.slope_into(c.j, &mut k);
            let width = c.w_hi - c.w_lo;
            let mw = a * self.weak(c.w_lo, width);
            if c.touches_t {
                for i in 0..dim {
                    out[i] += k[i] * mw;
                }
            } else {
                value_at_node_or_eval(u, c.j + 1, c.s_hi, &mut ub);
                let ms = a * self.singular(c.w_lo, width);
                for i in 0..dim {
                    let c0 = ut[i] - ub[i] - k[i] * c.w_lo;
                    out[i] += c0 * ms + k[i] * mw;
                }
            }
        }
        let tail = self.tail(t - grid.start());
        let u0 = u.node(0);
        for i in 0..dim {
            out[i] += (ut[i] - u0[i]) * tail;
        }
    }

    /// `int_a^t u'(s) (t - s)^(-alpha) ds` (Caputo, paper normalization).
    pub fn caputo_into(&self, u: &Trajectory, a: f64, t: f64, out: &mut [f64]) {
        let dim = u.dim();
        out.fill(0.0);
        let mut k = vec![0.0; dim];
        for c in cells(u.grid(), a, t) {
            u.slope_into(c.j, &mut k);
            let mw = self.weak(c.w_lo, c.w_hi - c.w_lo);
            for i in 0..dim {
                out[i] += k[i] * mw;
            }
        }
    }

    /// `int_a^t (u(s) - u(a)) (t - s)^(-alpha) ds`; zero for `t <= a`.
    pub fn riemann_integral_into(&self, u: &Trajectory, a: f64, t: f64, out: &mut [f64]) {
        let dim = u.dim();
        out.fill(0.0);
        if t <= a {
            return;
        }
        let mut ua = vec![0.0; dim];
        let mut ub = vec![0.0; dim];
        let mut k = vec![0.0; dim];
        u.eval_extended_into(a, &mut ua);
        for c in cells(u.grid(), a, t) {
            u.slope_into(c.j, &mut k);
            value_at_node_or_eval(u, c.j + 1, c.s_hi, &mut ub);
            let width = c.w_hi - c.w_lo;
            let mw = self.weak(c.w_lo, width);
            let ml = self.linear(c.w_lo, width);
            // u(s) - u(a) = (ub - ua + k w_lo) - k w
            for i in 0..dim {
                let e0 = ub[i] - ua[i] + k[i] * c.w_lo;
                out[i] += e0 * mw - k[i] * ml;
            }
        }
    }

    /// `(u(t) - u(a)) (t - a)^(-alpha) + alpha int_a^t (u(t) - u(s)) (t - s)^(-1-alpha) ds`.
    pub fn short_marchaud_into(&self, u: &Trajectory, a: f64, t: f64, out: &mut [f64]) {
        let dim = u.dim();
        out.fill(0.0);
        if t <= a {
            return;
        }
        let al = self.alpha;
        let mut ut = vec![0.0; dim];
        let mut ua = vec![0.0; dim];
        let mut ub = vec![0.0; dim];
        let mut k = vec![0.0; dim];
        u.eval_extended_into(t, &mut ut);
        u.eval_extended_into(a, &mut ua);
        for c in cells(u.grid(), a, t) {
            u.slope_into(c.j, &mut k);
            let width = c.w_hi - c.w_lo;
            let mw = al * self.weak(c.w_lo, width);
            if c.touches_t {
                for i in 0..dim {
                    out[i] += k[i] * mw;
                }
            } else {
                value_at_node_or_eval(u, c.j + 1, c.s_hi, &mut ub);
                let ms = al * self.singular(c.w_lo, width);
                for i in 0..dim {
                    out[i] += (ut[i] - ub[i] - k[i] * c.w_lo) * ms + k[i] * mw;
                }
            }
        }
        let boundary = (t - a).powf(-al);
        for i in 0..dim {
            out[i] += (ut[i] - ua[i]) * boundary;
        }
    }

    /// `alpha int_lower^t (u(t) - u(s), phi(t) - phi(s)) (t - s)^(-1-alpha) ds`
    /// with `lower = -inf` (including the tail) or a finite lower limit.
    ///
    /// `gphi` is the pairing's Gram operator applied to `phi` nodewise, so the
    /// pairing reduces to a dot product.
    pub fn bilinear_memory(&self, u: &Trajectory, gphi: &Trajectory, lower: f64, t: f64) -> f64 {
        let dim = u.dim();
        debug_assert_eq!(dim, gphi.dim());
        let grid = u.grid();
        if t <= grid.start() || t <= lower {
            return 0.0;
        }
        let al = self.alpha;
        let mut ut = vec![0.0; dim];
        let mut pt = vec![0.0; dim];
        let mut ub = vec![0.0; dim];
        let mut pb = vec![0.0; dim];
        let mut ku = vec![0.0; dim];
        let mut kp = vec![0.0; dim];
        u.eval_extended_into(t, &mut ut);
        gphi.eval_extended_into(t, &mut pt);
        let mut acc = 0.0;
        for c in cells(grid, lower, t) {
            u.slope_into(c.j, &mut ku);
            gphi.slope_into(c.j, &mut kp);
            let width = c.w_hi - c.w_lo;
            let ml = al * self.linear(c.w_lo, width);
            let kk = dot(&ku, &kp);
            if c.touches_t {
                acc += kk * ml;
                continue;
            }
            value_at_node_or_eval(u, c.j + 1, c.s_hi, &mut ub);
            value_at_node_or_eval(gphi, c.j + 1, c.s_hi, &mut pb);
            let ms = al * self.singular(c.w_lo, width);
            let mw = al * self.weak(c.w_lo, width);
            let (mut cc, mut ck, mut kc) = (0.0, 0.0, 0.0);
            for i in 0..dim {
                let cu = ut[i] - ub[i] - ku[i] * c.w_lo;
                let cp = pt[i] - pb[i] - kp[i] * c.w_lo;
                cc += cu * cp;
                ck += cu * kp[i];
                kc += ku[i] * cp;
            }
            acc += cc * ms + (ck + kc) * mw + kk * ml;
        }
        if lower <= grid.start() {
            let u0 = u.node(0);
            let p0 = gphi.node(0);
            let mut d = 0.0;
            for i in 0..dim {
                d += (ut[i] - u0[i]) * (pt[i] - p0[i]);
            }
            acc += d * self.tail(t - grid.start());
        }
        acc
    }

    /// `alpha int_{-inf}^t u(s) (psi(t) - psi(s)) (t - s)^(-1-alpha) ds` for a
    /// scalar trajectory `psi` on the same grid.
    pub fn product_memory_into(&self, u: &Trajectory, psi: &Trajectory, t: f64, out: &mut [f64]) {
        let dim = u.dim();
        out.fill(0.0);
        let grid = u.grid();
        if t <= grid.start() {
            return;
        }
        let al = self.alpha;
        let psi_t = {
            let mut v = [0.0];
            psi.eval_extended_into(t, &mut v);
            v[0]
        };
        let mut ub = vec![0.0; dim];
        let mut ku = vec![0.0; dim];
        let mut kpsi = [0.0];
        let mut psib = [0.0];
        for c in cells(grid, f64::NEG_INFINITY, t) {
            psi.slope_into(c.j, &mut kpsi);
            let kp = kpsi[0];
            let cpsi = if c.touches_t {
                0.0
            } else {
                value_at_node_or_eval(psi, c.j + 1, c.s_hi, &mut psib);
                psi_t - psib[0] - kp * c.w_lo
            };
            if kp == 0.0 && cpsi == 0.0 {
                continue;
            }
            u.slope_into(c.j, &mut ku);
            value_at_node_or_eval(u, c.j + 1, c.s_hi, &mut ub);
            let width = c.w_hi - c.w_lo;
            let mw = al * self.weak(c.w_lo, width);
            let ml = al * self.linear(c.w_lo, width);
            let ms = if c.touches_t { 0.0 } else { al * self.singular(c.w_lo, width) };
            // u(s) = d0 - ku w, psi(t) - psi(s) = cpsi + kp w
            for i in 0..dim {
                let d0 = ub[i] + ku[i] * c.w_lo;
                out[i] += d0 * cpsi * ms + (d0 * kp - ku[i] * cpsi) * mw - ku[i] * kp * ml;
            }
        }
        let tail = self.tail(t - grid.start());
        let dpsi = psi_t - psi.node(0)[0];
        if dpsi != 0.0 {
            for (o, u0) in out.iter_mut().zip(u.node(0)) {
                *o += u0 * dpsi * tail;
            }
        }
    }

    /// `int_{t_lo}^{t_hi} (u(t), phi(t)) (end - t)^(-alpha) dt` between nodes
    /// `lo <= hi`, exact for the piecewise-linear reconstructions; requires
    /// `end >= t_hi`. `gphi` as in [`Self::bilinear_memory`].
    pub fn endpoint_weighted(&self, u: &Trajectory, gphi: &Trajectory, end: f64, lo: usize, hi: usize) -> f64 {
        let grid = u.grid();
        let dim = u.dim();
        let mut ku = vec![0.0; dim];
        let mut kp = vec![0.0; dim];
        let mut acc = 0.0;
        for j in lo..hi {
            let (a, b) = (grid.node(j), grid.node(j + 1));
            let w_lo = end - b;
            let width = b - a;
            u.slope_into(j, &mut ku);
            gphi.slope_into(j, &mut kp);
            let (ub, pb) = (u.node(j + 1), gphi.node(j + 1));
            // u(t) = (ub + ku w_lo) - ku w with w = end - t
            let (mut cc, mut ck, mut kk) = (0.0, 0.0, 0.0);
            for i in 0..dim {
                let u0 = ub[i] + ku[i] * w_lo;
                let p0 = pb[i] + kp[i] * w_lo;
                cc += u0 * p0;
                ck += u0 * kp[i] + ku[i] * p0;
                kk += ku[i] * kp[i];
            }
            acc += cc * self.weak(w_lo, width) - ck * self.linear(w_lo, width) + kk * self.quadratic(w_lo, width);
        }
        acc
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn value_at_node_or_eval(u: &Trajectory, node: usize, s: f64, out: &mut [f64]) {
    if u.grid().node(node) == s {
        out.copy_from_slice(u.node(node));
    } else {
        u.eval_extended_into(s, out);
    }
}

/// Grid cells intersecting `[max(lower, -M), t]`, clipped, ordered left to right.
pub fn cells(grid: &TimeGrid, lower: f64, t: f64) -> impl Iterator<Item = CellSpan> + '_ {
    let start = lower.max(grid.start());
    let t = t.min(grid.horizon());
    let first = if t > start { grid.locate(start).unwrap_or(0) } else { grid.len() };
    let nodes = grid.nodes();
    (first..nodes.len().saturating_sub(1))
        .take_while(move |&j| nodes[j] < t)
        .filter_map(move |j| {
            let s_lo = nodes[j].max(start);
            let touches_t = nodes[j + 1] >= t;
            let s_hi = if touches_t { t } else { nodes[j + 1] };
            (s_hi > s_lo).then(|| CellSpan {
                j,
                s_lo,
                s_hi,
                w_lo: if touches_t { 0.0 } else { t - s_hi },
                w_hi: t - s_lo,
                touches_t,
            })
        })
}

/// Composite trapezoid of nodal values between nodes `from` and `to`.
pub fn trapezoid(grid: &TimeGrid, values: &[f64], from: usize, to: usize) -> f64 {
    (from..to).map(|j| 0.5 * grid.cell_width(j) * (values[j] + values[j + 1])).sum()
}
