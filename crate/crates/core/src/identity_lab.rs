//! Numerical checks of the integration-by-parts formulas, the cutoff transfer
//! equation, the commutator `G` and the vanishing of the `psi_delta` double
//! integral.
//!
//! Inner `s`-integrals are exact for piecewise-linear trajectories; outer
//! `t`-integrals use the trapezoid rule on the grid.

use rayon::prelude::*;

use crate::cutoff::{CutoffFn, CutoffKind};
use crate::error::{Error, Result};
use crate::frac_ops::{apply_gram, marchaud_nodes};
use crate::grid::TimeGrid;
use crate::kernel::{trapezoid, KernelQuadrature};
use crate::mesh::Pairing;
use crate::order::FracOrder;
use crate::parabolic::problem::ProblemData;
use crate::parabolic::solver::DiscreteSolution;
use crate::parabolic::weak::{form_integral, memory_double_integral, paired_trapezoid};
use crate::report::ResidualReport;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IbpVariant {
    /// Over `(-inf, T]` with `int d^alpha (u phi)` as the first right-hand term.
    FullLine,
    /// Over `(-inf, T]` with the endpoint-weighted term `int u phi (T - t)^(-alpha)`.
    Rewritten,
    /// Over `[0, T]` with the history bracket.
    ZeroToT,
}

impl IbpVariant {
    pub const ALL: [IbpVariant; 3] = [IbpVariant::FullLine, IbpVariant::Rewritten, IbpVariant::ZeroToT];

    pub fn name(self) -> &'static str {
        match self {
            IbpVariant::FullLine => "ibp_full_line",
            IbpVariant::Rewritten => "ibp_rewritten",
            IbpVariant::ZeroToT => "ibp_zero_to_t",
        }
    }
}

fn check_pair(u: &Trajectory, phi: &Trajectory, pairing: &dyn Pairing) -> Result<()> {
    if u.grid() != phi.grid() {
        return Err(Error::Incompatible("u and phi live on different grids".into()));
    }
    if u.dim() != phi.dim() || u.dim() != pairing.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: phi.dim() });
    }
    if phi.node(0).iter().any(|&v| v != 0.0) {
        return Err(Error::Support("phi must vanish for t <= -M".into()));
    }
    Ok(())
}

/// `int_{-inf}^0 (u, phi) [(T - t)^(-alpha) - (-t)^(-alpha)] dt`.
fn history_bracket(kq: &KernelQuadrature, u: &Trajectory, gphi: &Trajectory) -> f64 {
    let grid = u.grid();
    let z = grid.zero_index();
    kq.endpoint_weighted(u, gphi, grid.horizon(), 0, z) - kq.endpoint_weighted(u, gphi, grid.node(z), 0, z)
}

/// Residual of one integration-by-parts formula for the pair `(u, phi)`.
pub fn ibp_residual(
    u: &Trajectory,
    phi: &Trajectory,
    alpha: FracOrder,
    variant: IbpVariant,
    pairing: &dyn Pairing,
) -> Result<ResidualReport> {
    check_pair(u, phi, pairing)?;
    let grid = u.grid();
    let kq = KernelQuadrature::new(alpha);
    let last = grid.len() - 1;
    let z = grid.zero_index();
    let t_end = grid.horizon();
    let gphi = apply_gram(phi, pairing);
    let du = marchaud_nodes(u, alpha);
    let dphi = marchaud_nodes(phi, alpha);
    // phi and d^alpha phi vanish below -M, so node 0 stands in for -inf
    let from = if variant == IbpVariant::ZeroToT { z } else { 0 };
    let phi_du = paired_trapezoid(phi, &du, pairing, from)?;
    let u_dphi = paired_trapezoid(u, &dphi, pairing, from)?;
    let memory = memory_double_integral(&kq, u, &gphi, from);
    let n = grid.forward_cells();
    Ok(match variant {
        IbpVariant::FullLine => {
            let prod = u.pair_nodes(phi, pairing)?;
            let dprod = marchaud_nodes(&prod, alpha);
            let full = trapezoid(grid, dprod.values(), 0, last);
            ResidualReport::from_sides(
                variant.name(),
                n,
                None,
                vec![("phi_du".into(), phi_du), ("u_dphi".into(), u_dphi)],
                vec![("d_product".into(), full), ("memory".into(), memory)],
            )
        }
        IbpVariant::Rewritten => ResidualReport::from_sides(
            variant.name(),
            n,
            None,
            vec![("phi_du".into(), phi_du), ("u_dphi".into(), u_dphi)],
            vec![("endpoint".into(), kq.endpoint_weighted(u, &gphi, t_end, 0, last)), ("memory".into(), memory)],
        ),
        IbpVariant::ZeroToT => ResidualReport::from_sides(
            variant.name(),
            n,
            None,
            vec![("phi_du".into(), phi_du)],
            vec![
                ("endpoint".into(), kq.endpoint_weighted(u, &gphi, t_end, z, last)),
                ("memory".into(), memory),
                ("u_dphi".into(), -u_dphi),
                ("history_bracket".into(), history_bracket(&kq, u, &gphi)),
            ],
        ),
    })
}

/// Reconciles the `[0, T]` formula with the full-line one: their difference
/// is the full-line formula on `(-inf, 0]`,
/// `int_{-inf}^0 (phi d u + u d phi) = int_{-inf}^0 (u, phi) (-t)^(-alpha) + memory on (-inf, 0]`,
/// which is what the history bracket accounts for. The report's raw value
/// is `raw(Rewritten) - raw(ZeroToT) - raw(history part)`, zero up to
/// round-off since the three are assembled from the same pieces.
pub fn ibp_history_reconciliation(
    u: &Trajectory,
    phi: &Trajectory,
    alpha: FracOrder,
    pairing: &dyn Pairing,
) -> Result<ResidualReport> {
    let full = ibp_residual(u, phi, alpha, IbpVariant::Rewritten, pairing)?;
    let half = ibp_residual(u, phi, alpha, IbpVariant::ZeroToT, pairing)?;
    let grid = u.grid();
    let z = grid.zero_index();
    let kq = KernelQuadrature::new(alpha);
    let gphi = apply_gram(phi, pairing);
    let du = marchaud_nodes(u, alpha);
    let dphi = marchaud_nodes(phi, alpha);
    let head = |tr: &Trajectory, d: &Trajectory| -> Result<f64> {
        let p = tr.pair_nodes(d, pairing)?;
        Ok(trapezoid(grid, p.values(), 0, z))
    };
    let lhs = head(phi, &du)? + head(u, &dphi)?;
    let endpoint = kq.endpoint_weighted(u, &gphi, grid.node(z), 0, z);
    let memory_all = memory_double_integral(&kq, u, &gphi, 0);
    let memory_fwd = memory_double_integral(&kq, u, &gphi, z);
    let history_raw = lhs - endpoint - (memory_all - memory_fwd);
    let bracket = half.term("history_bracket").unwrap_or(0.0);
    Ok(ResidualReport::from_raw(
        "ibp_history_reconciliation",
        grid.forward_cells(),
        None,
        vec![
            ("rewritten_raw".into(), full.raw),
            ("zero_to_t_raw".into(), half.raw),
            ("history_raw".into(), history_raw),
            ("history_bracket".into(), bracket),
            ("history_lhs".into(), lhs),
            ("history_endpoint".into(), endpoint),
        ],
        full.raw - half.raw - history_raw,
    ))
}

/// Symmetric double integral
/// `alpha int int (u(t) - u(s), phi(t) - phi(s)) (t - s)^(-1-alpha)` over
/// `-inf < s < t <= T`.
pub fn memory_term(u: &Trajectory, phi: &Trajectory, alpha: FracOrder, pairing: &dyn Pairing) -> Result<f64> {
    check_pair(u, phi, pairing)?;
    let kq = KernelQuadrature::new(alpha);
    Ok(memory_double_integral(&kq, u, &apply_gram(phi, pairing), 0))
}

/// `G(t) = alpha int_{-inf}^t u(s) [psi(t) - psi(s)] (t - s)^(-1-alpha) ds`
/// at the nodes of the grid of `u` refined by the cutoff's breakpoints.
///
/// `psi` enters through its piecewise-linear interpolant on that grid, which
/// is `psi` itself for a piecewise-linear cutoff.
#[derive(Debug, Clone)]
pub struct GFunction {
    pub values: Trajectory,
    pub psi: CutoffFn,
    pub alpha: FracOrder,
    /// `G` is exactly zero at every node `t <= plateau_end` of the cutoff.
    pub vanishes_on_plateau: bool,
}

impl GFunction {
    pub fn l2_norm(&self, pairing: &dyn Pairing) -> f64 {
        self.values.l2_norm_forward(pairing)
    }
}

fn refined_for(grid: &TimeGrid, psi: &CutoffFn) -> TimeGrid {
    grid.refined(&psi.breakpoints())
}

pub fn g_function(u: &Trajectory, psi: &CutoffFn, alpha: FracOrder) -> Result<GFunction> {
    let grid = refined_for(u.grid(), psi);
    let u = u.resample(&grid)?;
    let psi_tr = psi.sample(&grid);
    let values = product_memory(&u, &psi_tr, alpha);
    let plateau = psi.plateau_end();
    let vanishes_on_plateau = (0..grid.len())
        .filter(|&i| grid.node(i) <= plateau)
        .all(|i| values.node(i).iter().all(|&v| v == 0.0));
    Ok(GFunction { values, psi: *psi, alpha, vanishes_on_plateau })
}

fn product_memory(u: &Trajectory, psi: &Trajectory, alpha: FracOrder) -> Trajectory {
    let kq = KernelQuadrature::new(alpha);
    let grid = u.grid();
    let dim = u.dim();
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; dim];
            kq.product_memory_into(u, psi, grid.node(i), &mut out);
            out
        })
        .collect();
    Trajectory::new(grid.clone(), dim, rows.concat()).expect("consistent shape")
}

/// Residual of the cutoff transfer equation for `psi u`, `u` a discrete
/// solution with zero history:
///
/// `int (psi u, phi) (T - t)^(-alpha) + alpha int int (psi u(t) - psi u(s), phi(t) - phi(s)) K
///  - int (psi u, d phi) + int a(t, psi u, phi) = int (phi, G) + int <f, psi phi>`.
///
/// The last term vanishes for `f = 0`, the setting of the uniqueness proof;
/// it is kept so manufactured solutions can be checked. `psi` enters through
/// its interpolant on the solution grid.
pub fn cutoff_transfer_residual(
    sol: &DiscreteSolution,
    data: &ProblemData,
    phi: &Trajectory,
    psi: &CutoffFn,
) -> Result<ResidualReport> {
    let u = &sol.u;
    let grid = data.grid();
    if u.grid() != grid || u.dim() != data.dim() {
        return Err(Error::Incompatible("solution does not match the problem grid".into()));
    }
    let z = grid.zero_index();
    if !data.history().vanishes_up_to(grid.node(z)) || !u.vanishes_up_to(grid.node(z)) {
        return Err(Error::Support("cutoff transfer needs zero history data".into()));
    }
    check_pair(u, phi, data.mesh())?;
    let mesh = data.mesh();
    let alpha = data.alpha();
    let kq = KernelQuadrature::new(alpha);
    let g = data.absorption();
    let last = grid.len() - 1;
    let psi_tr = psi.sample(grid);
    let psi_u = u.times_scalar(&psi_tr)?;
    let gphi = apply_gram(phi, mesh);
    let dphi = marchaud_nodes(phi, alpha);

    let endpoint = kq.endpoint_weighted(&psi_u, &gphi, grid.horizon(), z, last);
    let memory = memory_double_integral(&kq, &psi_u, &gphi, z);
    let transfer = -paired_trapezoid(&psi_u, &dphi, mesh, z)?;
    let form = form_integral(data.form(), &psi_u, phi, z, g)?;
    let gfun = product_memory(u, &psi_tr, alpha);
    let commutator = paired_trapezoid(phi, &gfun, mesh, z)?;
    let load = {
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = psi_tr.scalar_at(i);
                g * p * data.load().node(i).iter().zip(phi.node(i)).map(|(f, q)| f * q).sum::<f64>()
            })
            .collect();
        trapezoid(grid, &vals, z, last)
    };
    let param = match psi.kind() {
        CutoffKind::PiecewiseLinear => Some(psi.delta()),
        CutoffKind::Smooth => Some(psi.epsilon()),
    };
    Ok(ResidualReport::from_sides(
        "cutoff_transfer",
        grid.forward_cells(),
        param,
        vec![
            ("endpoint".into(), endpoint),
            ("memory".into(), memory),
            ("transfer".into(), transfer),
            ("form".into(), form),
        ],
        vec![("commutator".into(), commutator), ("load".into(), load)],
    ))
}

/// Double integral `int int (psi_delta u(t), u(s) [psi_delta(t) - psi_delta(s)]) K ds dt`
/// for a decreasing sequence of ramp widths, with the proof's upper bound
/// `delta^(-1) int ||psi_delta u(t)|| F(t, 0) dt`, `F(t, 0) = int_0^t ||u(s)|| (t - s)^(-alpha) ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiDeltaStudy {
    pub epsilon: f64,
    pub deltas: Vec<f64>,
    /// Signed values; they are nonpositive for nonnegative-correlated `u`
    /// since `psi_delta` decreases.
    pub values: Vec<f64>,
    pub bounds: Vec<f64>,
}

impl PsiDeltaStudy {
    /// `|value|` strictly decreasing along the sequence.
    pub fn strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1].abs() < w[0].abs())
    }

    /// `|last| / |first|`.
    pub fn decay(&self) -> f64 {
        let first = self.values.first().copied().unwrap_or(0.0).abs();
        let last = self.values.last().copied().unwrap_or(0.0).abs();
        if first == 0.0 {
            0.0
        } else {
            last / first
        }
    }

    pub fn within_bounds(&self) -> bool {
        self.values.iter().zip(&self.bounds).all(|(v, b)| v.abs() <= b * (1.0 + 1e-12) + 1e-300)
    }

    pub fn reports(&self, n: usize) -> Vec<ResidualReport> {
        self.deltas
            .iter()
            .zip(self.values.iter().zip(&self.bounds))
            .map(|(&d, (&v, &b))| {
                ResidualReport::from_raw(
                    "psidelta",
                    n,
                    Some(d),
                    vec![("value".into(), v), ("bound".into(), b)],
                    v,
                )
            })
            .collect()
    }
}

/// Nodes added inside each ramp so the outer integral resolves it.
const RAMP_NODES: usize = 64;

pub fn psidelta_limit_study(
    u: &Trajectory,
    epsilon: f64,
    deltas: &[f64],
    alpha: FracOrder,
    pairing: &dyn Pairing,
) -> Result<PsiDeltaStudy> {
    let grid = u.grid();
    let t_end = grid.horizon();
    if deltas.is_empty() {
        return Err(Error::Empty("delta sequence"));
    }
    if !(epsilon > 0.0 && epsilon < t_end) {
        return Err(Error::InvalidParameter(format!("need 0 < eps < T, got eps={epsilon}")));
    }
    for &d in deltas {
        if !(d > 0.0 && d <= epsilon && t_end - epsilon - d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta={d} must satisfy 0 < delta <= eps and T - eps - delta > 0"
            )));
        }
    }
    if !u.vanishes_up_to(0.0) {
        return Err(Error::Support("u must vanish for t <= 0".into()));
    }
    if u.dim() != pairing.dim() {
        return Err(Error::DimensionMismatch { expected: pairing.dim(), got: u.dim() });
    }
    let kq = KernelQuadrature::new(alpha);
    let rows: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&delta| {
            let psi = CutoffFn::piecewise_linear(t_end, epsilon, delta)?;
            let lo = psi.plateau_end();
            let extra: Vec<f64> = (0..=RAMP_NODES).map(|k| lo + delta * k as f64 / RAMP_NODES as f64).collect();
            let fine = grid.refined(&extra);
            let uf = u.resample(&fine)?;
            let psi_tr = psi.sample(&fine);
            let gfun = product_memory(&uf, &psi_tr, alpha);
            let psi_u = uf.times_scalar(&psi_tr)?;
            let norms = uf.map_nodes(1, |_, v, out| out[0] = pairing.inner(v, v).sqrt());
            let mut value = vec![0.0; fine.len()];
            let mut bound = vec![0.0; fine.len()];
            let mut f = [0.0];
            for i in 0..fine.len() {
                let t = fine.node(i);
                if t <= lo || t >= psi.zero_from() {
                    continue;
                }
                value[i] = pairing.inner(psi_u.node(i), gfun.node(i));
                kq.riemann_integral_into(&norms, 0.0, t, &mut f);
                bound[i] = pairing.inner(psi_u.node(i), psi_u.node(i)).sqrt() * f[0] / delta;
            }
            let last = fine.len() - 1;
            Ok((trapezoid(&fine, &value, 0, last), trapezoid(&fine, &bound, 0, last)))
        })
        .collect::<Result<_>>()?;
    let (values, bounds) = rows.into_iter().unzip();
    Ok(PsiDeltaStudy { epsilon, deltas: deltas.to_vec(), values, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Euclidean, SpatialMesh};
    use crate::order::Normalization;
    use crate::parabolic::form::{BilinearForm, Coefficient};
    use crate::parabolic::problem::manufactured;
    use crate::parabolic::solver::solve_strong;
    use crate::parabolic::weak::{smooth_bump, test_family, weak_residual};
    use proptest::prelude::*;

    fn order(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    fn bump_pair(n: usize, u_window: (f64, f64), phi_window: (f64, f64)) -> (Trajectory, Trajectory) {
        let grid = TimeGrid::uniform(1.0, 1.0, n).unwrap();
        let u = Trajectory::from_fn(grid.clone(), 2, |t, o| {
            let b = smooth_bump(t, u_window.0, u_window.1);
            o[0] = b;
            o[1] = -0.5 * b * t;
        });
        let phi = Trajectory::from_fn(grid, 2, |t, o| {
            let b = smooth_bump(t, phi_window.0, phi_window.1);
            o[0] = b * (1.0 + t);
            o[1] = b;
        });
        (u, phi)
    }

    #[test]
    fn zero_u_gives_zero_terms() {
        let (_, phi) = bump_pair(64, (0.1, 0.8), (0.1, 0.8));
        let u = Trajectory::zeros(phi.grid().clone(), 2);
        for v in IbpVariant::ALL {
            let r = ibp_residual(&u, &phi, order(0.5), v, &Euclidean(2)).unwrap();
            assert_eq!(r.raw, 0.0);
            assert!(r.terms.iter().all(|t| t.1 == 0.0));
        }
    }

    #[test]
    fn support_is_checked() {
        let grid = TimeGrid::uniform(1.0, 1.0, 16).unwrap();
        let one = Trajectory::scalar(grid, |_| 1.0);
        assert!(matches!(
            ibp_residual(&one, &one, order(0.5), IbpVariant::Rewritten, &Euclidean(1)),
            Err(Error::Support(_))
        ));
    }

    #[test]
    fn integration_by_parts_refines() {
        for a in [0.25, 0.5, 0.75] {
            for v in IbpVariant::ALL {
                let r: Vec<f64> = [128, 256, 512]
                    .iter()
                    .map(|&n| {
                        let (u, phi) = bump_pair(n, (0.1, 0.8), (0.05, 0.85));
                        ibp_residual(&u, &phi, order(a), v, &Euclidean(2)).unwrap().residual
                    })
                    .collect();
                assert!(r[2] <= 1e-2, "{v:?} alpha={a}: {r:?}");
                assert!(r.windows(2).all(|w| w[0] / w[1] >= 2.0), "{v:?} alpha={a}: {r:?}");
            }
        }
    }

    #[test]
    fn zero_to_t_with_history_and_reconciliation() {
        // u carries nonconstant history, phi straddles t = 0
        for a in [0.3, 0.6] {
            let r: Vec<(f64, f64)> = [128, 256, 512]
                .iter()
                .map(|&n| {
                    let (u, phi) = bump_pair(n, (-0.6, 0.7), (-0.4, 0.8));
                    let half = ibp_residual(&u, &phi, order(a), IbpVariant::ZeroToT, &Euclidean(2)).unwrap();
                    let rec = ibp_history_reconciliation(&u, &phi, order(a), &Euclidean(2)).unwrap();
                    assert!(half.term("history_bracket").unwrap().abs() > 1e-3);
                    assert!(rec.residual < 1e-12, "{rec:?}");
                    (half.residual, rec.term("history_raw").unwrap().abs() / rec.term("history_lhs").unwrap().abs())
                })
                .collect();
            assert!(r[2].0 <= 1e-2 && r[2].1 <= 1e-2, "{r:?}");
            assert!(r.windows(2).all(|w| w[0].0 / w[1].0 >= 2.0 && w[0].1 / w[1].1 >= 2.0), "{r:?}");
        }
    }

    #[test]
    fn history_bracket_vanishes_for_forward_test_functions() {
        let grid = TimeGrid::uniform(1.0, 1.0, 128).unwrap();
        let u = Trajectory::scalar(grid.clone(), |t| if t <= 0.0 { 1.0 } else { 1.0 - smooth_bump(t, 0.0, 0.6) });
        let phi = Trajectory::scalar(grid, |t| smooth_bump(t, 0.1, 0.7));
        let half = ibp_residual(&u, &phi, order(0.5), IbpVariant::ZeroToT, &Euclidean(1)).unwrap();
        assert_eq!(half.term("history_bracket").unwrap(), 0.0);
        let full = ibp_residual(&u, &phi, order(0.5), IbpVariant::Rewritten, &Euclidean(1)).unwrap();
        assert!((full.raw - half.raw).abs() < 1e-12 * full.terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn memory_term_is_symmetric(
            c0 in 0.05f64..0.4, w0 in 0.2f64..0.5, c1 in -0.5f64..0.3, w1 in 0.2f64..0.6, a in 0.1f64..0.9
        ) {
            let grid = TimeGrid::graded(1.0, 1.0, 48, 1.5).unwrap();
            let u = Trajectory::from_fn(grid.clone(), 2, |t, o| { o[0] = smooth_bump(t, c0, c0 + w0); o[1] = t * o[0]; });
            let phi = Trajectory::from_fn(grid, 2, |t, o| { o[0] = smooth_bump(t, c1, c1 + w1); o[1] = -o[0]; });
            let mesh = crate::mesh::Tridiagonal::new(vec![2.0, 3.0], vec![0.5]);
            let ab = memory_term(&u, &phi, order(a), &mesh).unwrap();
            let ba = memory_term(&phi, &u, order(a), &mesh).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-13 * (ab.abs() + ba.abs() + 1e-300));
        }
    }

    #[test]
    fn g_vanishes_where_psi_is_constant_on_support() {
        let grid = TimeGrid::uniform(1.0, 1.0, 128).unwrap();
        let u = Trajectory::scalar(grid, |t| smooth_bump(t, 0.0, 0.4));
        let psi = CutoffFn::smooth(1.0, 0.2).unwrap();
        let g = g_function(&u, &psi, order(0.5)).unwrap();
        assert!(g.vanishes_on_plateau);
        // psi = 1 on supp u, but G(t) for t on the ramp sees u(s)(psi(t) - 1)
        assert!(g.l2_norm(&Euclidean(1)) > 0.0);
        let far = CutoffFn::smooth(5.0, 1.0).unwrap();
        let g = g_function(&u, &far, order(0.5)).unwrap();
        assert_eq!(g.values.max_abs(), 0.0);
    }

    #[test]
    fn g_of_unit_trajectory_is_marchaud_of_psi() {
        let grid = TimeGrid::uniform(1.0, 1.0, 256).unwrap();
        let one = Trajectory::scalar(grid, |_| 1.0);
        for psi in [CutoffFn::smooth(1.0, 0.2).unwrap(), CutoffFn::piecewise_linear(1.0, 0.2, 0.1).unwrap()] {
            let g = g_function(&one, &psi, order(0.4)).unwrap();
            let d = marchaud_nodes(&psi.sample(g.values.grid()), order(0.4));
            let scale = d.max_abs();
            let diff = g.values.lincomb(1.0, &d, -1.0).unwrap().max_abs();
            assert!(diff <= 1e-12 * scale, "{diff} {scale}");
            assert!(g.vanishes_on_plateau);
        }
    }

    fn manufactured_setup(n: usize) -> (ProblemData, DiscreteSolution) {
        let grid = TimeGrid::uniform(1.0, 1.0, n).unwrap();
        let form = BilinearForm::local(
            SpatialMesh::uniform(16).unwrap(),
            Coefficient::SignSwitch { base: 1.0, amplitude: 0.5, frequency: 20.0 },
        )
        .unwrap();
        let m = manufactured(order(0.5), grid, form, Normalization::Paper).unwrap();
        let sol = solve_strong(&m.data).unwrap();
        (m.data, sol)
    }

    #[test]
    fn transfer_refines_for_manufactured_solution() {
        for psi in [CutoffFn::smooth(1.0, 0.15).unwrap(), CutoffFn::piecewise_linear(1.0, 0.2, 0.1).unwrap()] {
            let r: Vec<f64> = [64, 128, 256]
                .iter()
                .map(|&n| {
                    let (data, sol) = manufactured_setup(n);
                    let fam = test_family(data.mesh(), data.grid(), 4).unwrap();
                    fam.iter()
                        .map(|phi| cutoff_transfer_residual(&sol, &data, phi, &psi).unwrap().residual)
                        .fold(0.0, f64::max)
                })
                .collect();
            assert!(r.windows(2).all(|w| w[0] / w[1] >= 2.0), "{psi:?}: {r:?}");
        }
    }

    #[test]
    fn degenerate_cutoff_reduces_to_weak_form() {
        let (data, sol) = manufactured_setup(64);
        let psi = CutoffFn::smooth(3.0, 0.5).unwrap();
        for phi in test_family(data.mesh(), data.grid(), 3).unwrap() {
            let t = cutoff_transfer_residual(&sol, &data, &phi, &psi).unwrap();
            let w = weak_residual(&sol, &data, &phi).unwrap();
            assert_eq!(t.term("commutator").unwrap(), 0.0);
            assert!((t.raw - w.raw).abs() <= 1e-12 * w.terms.iter().map(|x| x.1.abs()).fold(0.0, f64::max));
        }
    }

    #[test]
    fn transfer_needs_zero_history() {
        let grid = TimeGrid::uniform(1.0, 1.0, 32).unwrap();
        let data = crate::parabolic::problem::relaxation(order(0.5), grid, 8).unwrap();
        let sol = solve_strong(&data).unwrap();
        let phi = &test_family(data.mesh(), data.grid(), 1).unwrap()[0];
        let psi = CutoffFn::smooth(1.0, 0.2).unwrap();
        assert!(matches!(cutoff_transfer_residual(&sol, &data, phi, &psi), Err(Error::Support(_))));
    }

    fn smooth_forward(n: usize) -> (Trajectory, SpatialMesh) {
        let mesh = SpatialMesh::uniform(8).unwrap();
        let s = mesh.interpolate(|x| (std::f64::consts::PI * x).sin());
        let grid = TimeGrid::uniform(1.0, 1.0, n).unwrap();
        (Trajectory::tensor(grid, &s, |t| smooth_bump(t, 0.0, 0.9)), mesh)
    }

    #[test]
    fn psidelta_values_vanish_and_respect_bound() {
        let (u, mesh) = smooth_forward(256);
        let s = psidelta_limit_study(&u, 0.2, &[0.2, 0.1, 0.05, 0.025], order(0.5), &mesh).unwrap();
        assert!(s.values.iter().all(|v| v.is_finite() && *v < 0.0));
        assert!(s.strictly_decreasing(), "{:?}", s.values);
        assert!(s.decay() <= 0.5);
        assert!(s.within_bounds(), "{:?} {:?}", s.values, s.bounds);
    }

    #[test]
    fn psidelta_bound_for_ramped_constant() {
        let grid = TimeGrid::uniform(1.0, 1.0, 128).unwrap();
        let u = Trajectory::scalar(grid, |t| (t / 0.3).clamp(0.0, 1.0));
        let s = psidelta_limit_study(&u, 0.3, &[0.3, 0.1, 0.03, 0.01], order(0.7), &Euclidean(1)).unwrap();
        assert!(s.within_bounds(), "{:?} {:?}", s.values, s.bounds);
        assert!(s.strictly_decreasing());
    }

    #[test]
    fn psidelta_rejections() {
        let (u, mesh) = smooth_forward(64);
        assert!(psidelta_limit_study(&u, 0.2, &[0.3], order(0.5), &mesh).is_err());
        assert!(psidelta_limit_study(&u, 0.2, &[], order(0.5), &mesh).is_err());
        let zero = Trajectory::zeros(u.grid().clone(), u.dim());
        let s = psidelta_limit_study(&zero, 0.2, &[0.1, 0.05], order(0.5), &mesh).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0]);
        let hist = u.map_nodes(u.dim(), |_, v, o| o.iter_mut().zip(v).for_each(|(a, b)| *a = b + 1.0));
        assert!(matches!(psidelta_limit_study(&hist, 0.2, &[0.1], order(0.5), &mesh), Err(Error::Support(_))));
    }
}
