//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the terminal.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use marchaud_cli::config::parse_config;
use marchaud_cli::suite::problem;
use marchaud_core::frac_ops::{formulations_agree, marchaud};
use marchaud_core::identity_lab::{ibp_history_reconciliation, ibp_residual, psidelta_limit_study, IbpVariant};
use marchaud_core::parabolic::problem::{first_mode_amplitude, manufactured, relaxation};
use marchaud_core::parabolic::weak::{smooth_bump, worst_weak_residual};
use marchaud_core::parabolic::{
    mittag_leffler, solve_strong, test_family, uniqueness_study, BilinearForm, Coefficient, NonlocalKernel, Perturbation,
};
use marchaud_core::steklov::{check_shift_identity, check_steklov_commutation, check_steklov_convergence, check_switch_lemma};
use marchaud_core::{Euclidean, FracOrder, Normalization, Result, SpatialMesh, TimeGrid, Trajectory};

const SWITCH: Coefficient = Coefficient::SignSwitch { base: 1.0, amplitude: 0.5, frequency: 20.0 };

fn order(a: f64) -> FracOrder {
    FracOrder::new(a).expect("valid order")
}

/// Outcome of one criterion: pass flag and a one-line summary of what was measured.
type Verdict = Result<(bool, String)>;

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn formulation_equivalence() -> Verdict {
    let mut ok = true;
    let mut worst_res = 0.0_f64;
    let mut worst_ratio = f64::INFINITY;
    for a in [0.25, 0.5, 0.75] {
        let r: Vec<f64> = [256, 512, 1024]
            .iter()
            .map(|&n| {
                let g = TimeGrid::uniform(1.0, 1.0, n)?;
                let u = Trajectory::scalar(g, |t| if t > 0.0 { t * t } else { 0.0 });
                Ok(formulations_agree(&u, order(a), &[0.25, 0.5, 0.75, 0.875])?.residual)
            })
            .collect::<Result<_>>()?;
        worst_res = worst_res.max(r[2]);
        worst_ratio = worst_ratio.min(min_of(&ratios(&r)));
        ok &= r[2] <= 1e-2 && ratios(&r).iter().all(|&q| q >= 1.8);
    }
    Ok((ok, format!("max residual {worst_res:.2e} at N=1024, min ratio {worst_ratio:.2}")))
}

fn closed_form_anchor() -> Verdict {
    let mut worst = 0.0_f64;
    for a in [0.25, 0.5, 0.75] {
        let g = TimeGrid::uniform(1.0, 1.0, 1024)?;
        let u = Trajectory::scalar(g, |t| t.max(0.0));
        let got = marchaud(&u, 1.0, order(a))?[0];
        let want = 1.0 / (1.0 - a);
        worst = worst.max((got - want).abs() / want);
    }
    Ok((worst <= 1e-2, format!("max relative error {worst:.2e}")))
}

fn bump_pair(n: usize, uw: (f64, f64), pw: (f64, f64)) -> Result<(Trajectory, Trajectory)> {
    let g = TimeGrid::uniform(1.0, 1.0, n)?;
    let u = Trajectory::from_fn(g.clone(), 2, |t, o| {
        let b = smooth_bump(t, uw.0, uw.1);
        o[0] = b;
        o[1] = -0.5 * b * t;
    });
    let phi = Trajectory::from_fn(g, 2, |t, o| {
        let b = smooth_bump(t, pw.0, pw.1);
        o[0] = b * (1.0 + t);
        o[1] = b;
    });
    Ok((u, phi))
}

fn integration_by_parts() -> Verdict {
    let ns = [128, 256, 512];
    let pair = &Euclidean(2);
    let mut ok = true;
    let (mut worst_res, mut worst_ratio, mut worst_rec) = (0.0_f64, f64::INFINITY, 0.0_f64);
    let mut check = |r: &[f64]| {
        worst_res = worst_res.max(r[2]);
        worst_ratio = worst_ratio.min(min_of(&ratios(r)));
        r[2] <= 1e-2 && ratios(r).iter().all(|&q| q >= 2.0)
    };
    for a in [0.25, 0.5, 0.75] {
        for v in IbpVariant::ALL {
            let r: Vec<f64> = ns
                .iter()
                .map(|&n| {
                    let (u, phi) = bump_pair(n, (0.1, 0.8), (0.05, 0.85))?;
                    Ok(ibp_residual(&u, &phi, order(a), v, pair)?.residual)
                })
                .collect::<Result<_>>()?;
            ok &= check(&r);
        }
        // history carried by u, phi straddling t = 0: the bracket term is active
        let mut half = Vec::new();
        let mut history = Vec::new();
        for &n in &ns {
            let (u, phi) = bump_pair(n, (-0.6, 0.7), (-0.4, 0.8))?;
            let h = ibp_residual(&u, &phi, order(a), IbpVariant::ZeroToT, pair)?;
            let rec = ibp_history_reconciliation(&u, &phi, order(a), pair)?;
            ok &= h.term("history_bracket").unwrap_or(0.0).abs() > 0.0;
            worst_rec = worst_rec.max(rec.residual);
            half.push(h.residual);
            let lhs = rec.term("history_lhs").unwrap_or(f64::NAN);
            history.push(rec.term("history_raw").unwrap_or(f64::NAN).abs() / lhs.abs());
        }
        ok &= check(&half) && check(&history);
    }
    ok &= worst_rec <= 1e-12;
    Ok((
        ok,
        format!(
            "max residual {worst_res:.2e} at N=512, min ratio {worst_ratio:.2}, reconciliation {worst_rec:.1e}"
        ),
    ))
}

fn sine(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        (PI * t).sin()
    } else {
        0.0
    }
}

fn steklov_lemmas() -> Verdict {
    let a = order(0.5);
    let h = 1.0 / 16.0;
    let mut ok = true;
    let mut lines = Vec::new();
    // uniform grids: the discrete operators commute exactly
    let g = TimeGrid::uniform(1.0, 1.0, 1024)?;
    let s = Trajectory::scalar(g.clone(), sine);
    let sw = check_switch_lemma(&s, a)?.residual;
    let cm = check_steklov_commutation(&s, a, h)?.residual;
    let u = Trajectory::scalar(g.clone(), |t| smooth_bump(t, 0.05, 0.8));
    let eta = Trajectory::scalar(g, |t| smooth_bump(t, 0.1, 0.85) * (1.0 + t));
    let sh = check_shift_identity(&u, &eta, h, a, &Euclidean(1))?;
    let uniform = [sw, cm, sh.shift.residual, sh.two_sided.residual];
    ok &= uniform.iter().all(|&r| r <= 1e-2);
    lines.push(format!("uniform N=1024 max {:.1e}", max_of(&uniform)));

    // graded grids: genuine discretization error, rate >= 1
    let graded = |n: usize| -> Result<[f64; 4]> {
        let g = TimeGrid::graded(1.0, 1.0, n, 2.0)?;
        let s = Trajectory::scalar(g.clone(), sine);
        let u = Trajectory::scalar(g.clone(), |t| smooth_bump(t, 0.05, 0.8));
        let eta = Trajectory::scalar(g, |t| smooth_bump(t, 0.1, 0.85) * (1.0 + t));
        let sh = check_shift_identity(&u, &eta, h, a, &Euclidean(1))?;
        Ok([
            check_switch_lemma(&s, a)?.residual,
            check_steklov_commutation(&s, a, h)?.residual,
            sh.shift.residual,
            sh.two_sided.residual,
        ])
    };
    let (c, f) = (graded(512)?, graded(1024)?);
    let q: Vec<f64> = c.iter().zip(&f).map(|(x, y)| x / y).collect();
    ok &= f.iter().all(|&r| r <= 1e-2) && q.iter().all(|&r| r >= 2.0);
    lines.push(format!("graded N=1024 max {:.1e}, min ratio {:.2}", max_of(&f), min_of(&q)));
    Ok((ok, lines.join("; ")))
}

fn steklov_convergence() -> Verdict {
    let mesh = SpatialMesh::uniform(16)?;
    let spatial = mesh.interpolate(|x| (PI * x).sin());
    let g = TimeGrid::uniform(1.0, 1.0, 1024)?;
    let f = Trajectory::tensor(g, &spatial, |t| smooth_bump(t, 0.1, 0.9));
    let c = check_steklov_convergence(&f, &[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], mesh.stiffness())?;
    let q = c.ratios();
    Ok((c.monotone() && q.iter().all(|&r| r >= 1.5), format!("ratios {q:.2?}")))
}

fn psidelta_vanishing() -> Verdict {
    let mesh = SpatialMesh::uniform(8)?;
    let spatial = mesh.interpolate(|x| (PI * x).sin());
    let g = TimeGrid::uniform(1.0, 1.0, 256)?;
    let u = Trajectory::tensor(g, &spatial, |t| smooth_bump(t, 0.0, 0.9));
    let s = psidelta_limit_study(&u, 0.2, &[0.2, 0.1, 0.05, 0.025], order(0.5), &mesh)?;
    let ok = s.strictly_decreasing() && s.decay() <= 0.5 && s.within_bounds();
    let values: Vec<String> = s.values.iter().map(|v| format!("{v:.3e}")).collect();
    Ok((ok, format!("values [{}], |last/first| {:.3}", values.join(", "), s.decay())))
}

fn mittag_leffler_solve() -> Verdict {
    let mut worst = 0.0_f64;
    for a in [0.4, 0.6, 0.8] {
        // constant history: a few cells on [-M, 0] resolve it exactly
        let grid = TimeGrid::graded_with_history(1.0, 1.0, 2048, 4, 2.0)?;
        let data = relaxation(order(a), grid, 64)?;
        let sol = solve_strong(&data)?;
        let last = sol.u.grid().len() - 1;
        let got = first_mode_amplitude(data.mesh(), sol.u.node(last));
        let want = mittag_leffler(a, -PI * PI)?;
        worst = worst.max((got - want).abs() / want.abs());
    }
    Ok((worst <= 2e-2, format!("max relative error {worst:.2e}")))
}

fn strong_implies_weak() -> Verdict {
    let mut ok = true;
    let (mut worst_res, mut worst_ratio) = (0.0_f64, f64::INFINITY);
    for a in [0.3, 0.7] {
        for case in 0..3 {
            let r: Vec<f64> = [128, 256, 512]
                .iter()
                .map(|&n| {
                    let (data, grid) = match case {
                        0 | 1 => {
                            let grid = TimeGrid::uniform(1.0, 1.0, n)?;
                            let mesh = SpatialMesh::uniform(16)?;
                            let form = if case == 0 {
                                BilinearForm::local(mesh, SWITCH)?
                            } else {
                                BilinearForm::nonlocal(mesh, NonlocalKernel::InverseSquare(SWITCH), 1.0)?
                            };
                            (manufactured(order(a), grid.clone(), form, Normalization::Paper)?.data, grid)
                        }
                        _ => {
                            // history data: graded grids resolve the t^alpha layer
                            let grid = TimeGrid::graded(1.0, 1.0, n, 2.0)?;
                            (relaxation(order(a), grid.clone(), 16)?, grid)
                        }
                    };
                    let sol = solve_strong(&data)?;
                    let fam = test_family(data.mesh(), &grid, 12)?;
                    Ok(worst_weak_residual(&sol, &data, &fam)?.residual)
                })
                .collect::<Result<_>>()?;
            worst_res = worst_res.max(r[2]);
            worst_ratio = worst_ratio.min(min_of(&ratios(&r)));
            ok &= r[2] <= 5e-2 && ratios(&r).iter().all(|&q| q >= 2.0);
        }
    }
    Ok((ok, format!("max residual {worst_res:.2e} at N=512, min ratio {worst_ratio:.2}")))
}

fn uniqueness_stress() -> Verdict {
    let cfg = parse_config("command = uniqueness\nalpha = 0.5\ndata = forced\nn_cells = 16")
        .map_err(|e| marchaud_core::Error::InvalidParameter(e.to_string()))?;
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, p) in [("N vs 2N", Perturbation::Refine), ("graded vs uniform", Perturbation::Graded { r: 2.0 })] {
        let s = uniqueness_study(1.0, 1.0, p, &[128, 256, 512, 1024], |g| problem(&cfg, g, 16))?;
        let q = s.ratios();
        ok &= s.converges(1.5) && q.len() == 3;
        lines.push(format!("{name} ratios {q:.2?}"));
    }
    Ok((ok, lines.join("; ")))
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("marchaud-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| marchaud_core::Error::InvalidParameter(e.to_string()))?;
    let run = |cfg: &str, file: &str| -> Option<Vec<u8>> {
        let path = dir.join("det.cfg");
        std::fs::write(&path, cfg).ok()?;
        let status = Command::new(env!("CARGO_BIN_EXE_marchaud"))
            .arg("--config")
            .arg(&path)
            .arg("--out")
            .arg(&dir)
            .status()
            .ok()?;
        status.success().then(|| std::fs::read(dir.join(file)).ok()).flatten()
    };
    let configs = [
        ("n_t = 128\nn_cells = 8\n", "verify-identities.csv"),
        ("command = psidelta\nn_t = 128\nn_cells = 8\n", "psidelta.csv"),
    ];
    let mut ok = true;
    for (cfg, file) in configs {
        let a = run(cfg, file);
        let b = run(cfg, file);
        ok &= a.is_some() && a == b;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok((ok, "two commands, two runs each".into()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 10] = [
        ("formulation equivalence", Duration::from_secs(5), formulation_equivalence),
        ("closed-form Marchaud anchor", Duration::from_secs(1), closed_form_anchor),
        ("integration by parts", Duration::from_secs(10), integration_by_parts),
        ("Steklov lemmas", Duration::from_secs(10), steklov_lemmas),
        ("Steklov convergence", Duration::from_secs(5), steklov_convergence),
        ("psi_delta vanishing", Duration::from_secs(10), psidelta_vanishing),
        ("Mittag-Leffler solve", Duration::from_secs(30), mittag_leffler_solve),
        ("strong implies weak", Duration::from_secs(20), strong_implies_weak),
        ("uniqueness stress", Duration::from_secs(60), uniqueness_stress),
        ("determinism", Duration::from_secs(5), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let took = start.elapsed();
        let (pass, detail) = match verdict {
            Ok((ok, detail)) => (ok && took <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
