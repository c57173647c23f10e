//! The four equivalent formulations of the fractional time derivative and the
//! fractional Sobolev seminorm.
//!
//! All evaluators work in paper normalization internally (no
//! `1 / Gamma(1 - alpha)` prefactor); [`Normalization::Classical`] divides by
//! `Gamma(1 - alpha)` on the way out.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{trapezoid, KernelQuadrature};
use crate::mesh::Pairing;
use crate::order::{FracOrder, Normalization};
use crate::report::ResidualReport;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivKind {
    /// `int_a^t u'(s) (t - s)^(-alpha) ds`
    CaputoIntegral,
    /// `d/dt int_a^t (u(s) - u(a)) (t - s)^(-alpha) ds`, centered differences
    RiemannDiff,
    /// Boundary term plus the truncated Marchaud integral on `[a, t]`
    ShortMarchaud,
    /// `alpha int_{-inf}^t (u(t) - u(s)) (t - s)^(-1-alpha) ds`
    Marchaud,
}

impl DerivKind {
    pub const ALL: [DerivKind; 4] =
        [DerivKind::CaputoIntegral, DerivKind::RiemannDiff, DerivKind::ShortMarchaud, DerivKind::Marchaud];

    pub fn name(self) -> &'static str {
        match self {
            DerivKind::CaputoIntegral => "caputo",
            DerivKind::RiemannDiff => "riemann",
            DerivKind::ShortMarchaud => "short_marchaud",
            DerivKind::Marchaud => "marchaud",
        }
    }
}

fn check_time(u: &Trajectory, t: f64) -> Result<()> {
    let g = u.grid();
    if !(t > g.start() && t <= g.horizon()) {
        return Err(Error::OutsideGrid { t, lo: g.start(), hi: g.horizon() });
    }
    Ok(())
}

fn check_lower(u: &Trajectory, a: f64, t: f64) -> Result<()> {
    let g = u.grid();
    if !(a >= g.start() && a <= g.horizon()) {
        return Err(Error::OutsideGrid { t: a, lo: g.start(), hi: g.horizon() });
    }
    if t <= g.start() || t > g.horizon() {
        return Err(Error::OutsideGrid { t, lo: g.start(), hi: g.horizon() });
    }
    if a >= t {
        return Err(Error::InvalidParameter(format!("lower limit a={a} must be below t={t}")));
    }
    Ok(())
}

fn scale(mut v: Vec<f64>, c: f64) -> Vec<f64> {
    if c != 1.0 {
        v.iter_mut().for_each(|x| *x *= c);
    }
    v
}

/// Marchaud derivative at `t in (-M, T]`, paper normalization.
pub fn marchaud(u: &Trajectory, t: f64, alpha: FracOrder) -> Result<Vec<f64>> {
    check_time(u, t)?;
    let mut out = vec![0.0; u.dim()];
    KernelQuadrature::new(alpha).marchaud_into(u, t, &mut out);
    Ok(out)
}

/// Marchaud derivative at every node (zero at `-M`), paper normalization.
pub fn marchaud_nodes(u: &Trajectory, alpha: FracOrder) -> Trajectory {
    let kq = KernelQuadrature::new(alpha);
    let dim = u.dim();
    let grid = u.grid();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = vec![0.0; dim];
            kq.marchaud_into(u, grid.node(i), &mut out);
            out
        })
        .collect();
    Trajectory::new(grid.clone(), dim, values).expect("shape preserved")
}

pub fn caputo(u: &Trajectory, a: f64, t: f64, alpha: FracOrder, norm: Normalization) -> Result<Vec<f64>> {
    check_lower(u, a, t)?;
    let mut out = vec![0.0; u.dim()];
    KernelQuadrature::new(alpha).caputo_into(u, a, t, &mut out);
    Ok(scale(out, norm.derivative_factor(alpha)))
}

/// Local grid spacing at `t`: the smaller neighbouring cell at a node, the
/// containing cell otherwise.
pub fn local_spacing(u: &Trajectory, t: f64) -> f64 {
    let g = u.grid();
    match g.node_index(t) {
        Some(i) => {
            let left = if i > 0 { g.cell_width(i - 1) } else { f64::INFINITY };
            let right = if i + 1 < g.len() { g.cell_width(i) } else { f64::INFINITY };
            left.min(right)
        }
        None => g.locate(t).map(|j| g.cell_width(j)).unwrap_or(f64::NAN),
    }
}

pub fn riemann_form(
    u: &Trajectory,
    a: f64,
    t: f64,
    alpha: FracOrder,
    dt: f64,
    norm: Normalization,
) -> Result<Vec<f64>> {
    check_lower(u, a, t)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("differencing step must be positive, got {dt}")));
    }
    let g = u.grid();
    if t - dt < g.start() || t + dt > g.horizon() {
        return Err(Error::OutsideGrid { t: t + dt, lo: g.start(), hi: g.horizon() });
    }
    let kq = KernelQuadrature::new(alpha);
    let mut plus = vec![0.0; u.dim()];
    let mut minus = vec![0.0; u.dim()];
    kq.riemann_integral_into(u, a, t + dt, &mut plus);
    kq.riemann_integral_into(u, a, t - dt, &mut minus);
    let out = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * dt)).collect();
    Ok(scale(out, norm.derivative_factor(alpha)))
}

pub fn short_marchaud(u: &Trajectory, a: f64, t: f64, alpha: FracOrder, norm: Normalization) -> Result<Vec<f64>> {
    check_lower(u, a, t)?;
    let mut out = vec![0.0; u.dim()];
    KernelQuadrature::new(alpha).short_marchaud_into(u, a, t, &mut out);
    Ok(scale(out, norm.derivative_factor(alpha)))
}

/// Dispatch over the formulations; `RiemannDiff` uses the local grid spacing
/// as differencing step, `Marchaud` ignores `a`.
pub fn derivative(
    u: &Trajectory,
    kind: DerivKind,
    norm: Normalization,
    a: f64,
    t: f64,
    alpha: FracOrder,
) -> Result<Vec<f64>> {
    match kind {
        DerivKind::CaputoIntegral => caputo(u, a, t, alpha, norm),
        DerivKind::RiemannDiff => riemann_form(u, a, t, alpha, local_spacing(u, t), norm),
        DerivKind::ShortMarchaud => short_marchaud(u, a, t, alpha, norm),
        DerivKind::Marchaud => marchaud(u, t, alpha).map(|v| scale(v, norm.derivative_factor(alpha))),
    }
}

/// Largest pairwise discrepancy among the four formulations over
/// `t_samples`, normalized by the largest magnitude. The Caputo-type
/// formulations use the lower limit `a = 0`.
pub fn formulations_agree(u: &Trajectory, alpha: FracOrder, t_samples: &[f64]) -> Result<ResidualReport> {
    if t_samples.is_empty() {
        return Err(Error::Empty("t_samples"));
    }
    let g = u.grid();
    let z = g.zero_index();
    if (0..z).any(|i| u.node(i) != u.node(z)) {
        return Err(Error::Support("formulation comparison needs constant history".into()));
    }
    let mut max_mag = [0.0_f64; 4];
    let mut worst = 0.0_f64;
    for &t in t_samples {
        let vals: Vec<Vec<f64>> = DerivKind::ALL
            .iter()
            .map(|&k| derivative(u, k, Normalization::Paper, 0.0, t, alpha))
            .collect::<Result<_>>()?;
        for (m, v) in max_mag.iter_mut().zip(&vals) {
            *m = v.iter().fold(*m, |acc, x| acc.max(x.abs()));
        }
        for p in 0..4 {
            for q in p + 1..4 {
                let d = vals[p].iter().zip(&vals[q]).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
                worst = worst.max(d);
            }
        }
    }
    let terms = DerivKind::ALL.iter().zip(max_mag).map(|(k, m)| (format!("max_abs_{}", k.name()), m)).collect();
    Ok(ResidualReport::from_raw("formulations", g.forward_cells(), None, terms, worst))
}

/// `int_0^T int_0^T ||u(t) - u(s)||^2 |t - s|^(-1-alpha) ds dt`: exact inner
/// integral per cell, trapezoid in the outer variable.
pub fn frac_sobolev_seminorm(u: &Trajectory, pairing: &dyn Pairing, alpha: FracOrder) -> f64 {
    let kq = KernelQuadrature::new(alpha);
    let gu = apply_gram(u, pairing);
    let g = u.grid();
    let z = g.zero_index();
    let inner: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|i| if i <= z { 0.0 } else { kq.bilinear_memory(u, &gu, 0.0, g.node(i)) })
        .collect();
    2.0 * trapezoid(g, &inner, z, g.len() - 1) / alpha.value()
}

/// Nodewise Gram operator of `pairing` applied to `u`.
pub fn apply_gram(u: &Trajectory, pairing: &dyn Pairing) -> Trajectory {
    u.map_nodes(u.dim(), |_, src, out| pairing.apply(src, out))
}
