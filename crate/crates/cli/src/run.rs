//! Executes a configuration and writes its CSV report.

use std::path::{Path, PathBuf};

use marchaud_core::identity_lab::psidelta_limit_study;
use marchaud_core::parabolic::weak::smooth_bump;
use marchaud_core::parabolic::{solve_strong, uniqueness_study, Perturbation};
use marchaud_core::report::fmt17;
use marchaud_core::{Error, ResidualReport, SpatialMesh, Trajectory};

use crate::config::{Command, ExperimentConfig, PerturbationKind};
use crate::suite::{grid, identity_suite, problem};

/// Both residuals below this count as exact agreement in rate checks.
pub const ROUND_OFF: f64 = 1e-12;

/// Exit codes of the command-line tool.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const TOLERANCE: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::Io(_) => exit::IO,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub path: PathBuf,
    /// One entry per failed assertion, empty on success.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            exit::PASS
        } else {
            exit::TOLERANCE
        }
    }
}

/// In-memory CSV table; written only once the whole run has finished.
#[derive(Debug, Default)]
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    failures: Vec<String>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    fn push(&mut self, fields: Vec<String>, pass: bool, what: impl FnOnce() -> String) {
        let mut fields = fields;
        fields.push(pass.to_string());
        self.rows.push(fields);
        if !pass {
            self.failures.push(what());
        }
    }
}

fn report_header(extra: &[&'static str]) -> Vec<&'static str> {
    let mut h = ResidualReport::CSV_HEADER.to_vec();
    h.extend_from_slice(extra);
    h.push("pass");
    h
}

/// Singular systems and failed solves are tolerance failures; every other
/// core error means the configuration asked for something invalid.
fn is_numerical(e: &Error) -> bool {
    matches!(e, Error::Singular { .. } | Error::SolveTolerance { .. } | Error::OutOfRange(_))
}

fn verify(cfg: &ExperimentConfig, t: &mut Table) -> Result<(), Error> {
    for row in identity_suite(cfg, cfg.n_t, cfg.min_ratio)? {
        let pass = row.passes(cfg.tolerance);
        let r = &row.report;
        t.push(r.csv_fields().to_vec(), pass, || {
            format!("{} at n={}: residual {} above {}", r.identity, r.n, r.residual, cfg.tolerance)
        });
    }
    Ok(())
}

fn convergence(cfg: &ExperimentConfig, t: &mut Table) -> Result<(), Error> {
    let levels: Vec<Vec<crate::suite::SuiteRow>> =
        (0..=cfg.refinements).map(|k| identity_suite(cfg, cfg.n_t << k, cfg.min_ratio)).collect::<Result<_, _>>()?;
    let count = levels[0].len();
    for i in 0..count {
        for (k, level) in levels.iter().enumerate() {
            let row = &level[i];
            let r = &row.report;
            let (ratio, pass) = match (row.verdict, k) {
                (Some(v), _) => (None, v),
                (None, 0) => (None, r.residual.is_finite()),
                (None, _) => {
                    let prev = levels[k - 1][i].report.residual;
                    let ratio = prev / r.residual;
                    let exact = prev <= ROUND_OFF && r.residual <= ROUND_OFF;
                    (Some(ratio), exact || ratio >= cfg.min_ratio)
                }
            };
            let mut fields = r.csv_fields().to_vec();
            fields.push(ratio.map(fmt17).unwrap_or_default());
            t.push(fields, pass, || {
                format!("{} at n={}: decay ratio {} below {}", r.identity, r.n, ratio.unwrap_or(f64::NAN), cfg.min_ratio)
            });
        }
    }
    Ok(())
}

fn solve(cfg: &ExperimentConfig, t: &mut Table) -> Result<(), Error> {
    let data = problem(cfg, grid(cfg, cfg.n_t)?, cfg.n_cells)?;
    let sol = solve_strong(&data)?;
    let g = sol.u.grid();
    for i in 0..g.len() {
        let mut fields = vec![fmt17(g.node(i))];
        fields.extend(sol.u.node(i).iter().map(|&v| fmt17(v)));
        t.rows.push(fields);
    }
    let res = sol.max_solve_residual();
    if !(res <= cfg.tolerance) || sol.u.values().iter().any(|v| !v.is_finite()) {
        t.failures.push(format!("linear solves left relative residual {res}"));
    }
    Ok(())
}

fn uniqueness(cfg: &ExperimentConfig, t: &mut Table) -> Result<(), Error> {
    let perturbation = match cfg.perturbation {
        PerturbationKind::Identical => Perturbation::Identical,
        PerturbationKind::Refine => Perturbation::Refine,
        PerturbationKind::Graded => Perturbation::Graded { r: if cfg.grading > 1.0 { cfg.grading } else { 2.0 } },
        PerturbationKind::Reordered => Perturbation::Reordered,
    };
    let ns: Vec<usize> = (0..=cfg.refinements).map(|k| cfg.n_t << k).collect();
    let study = uniqueness_study(cfg.history_length, cfg.horizon, perturbation, &ns, |g| {
        problem(cfg, g, cfg.n_cells)
    })?;
    let name = match cfg.perturbation {
        PerturbationKind::Identical => "identical",
        PerturbationKind::Refine => "refine",
        PerturbationKind::Graded => "graded",
        PerturbationKind::Reordered => "reordered",
    };
    for (k, &n) in study.ns.iter().enumerate() {
        let d = study.differences[k];
        let norm = study.reference_norms[k];
        let ratio = (k > 0).then(|| study.differences[k - 1] / d);
        let pass = match perturbation {
            Perturbation::Identical => d == 0.0,
            Perturbation::Reordered => d <= ROUND_OFF * norm.max(1.0),
            _ => ratio.is_none_or(|r| r >= cfg.min_ratio) && d.is_finite(),
        };
        let rel = if norm > 0.0 { d / norm } else { d };
        let fields =
            vec![name.to_string(), n.to_string(), fmt17(d), fmt17(norm), fmt17(rel), ratio.map(fmt17).unwrap_or_default()];
        t.push(fields, pass, || format!("{name} at n={n}: difference {d}, ratio {}", ratio.unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn psidelta(cfg: &ExperimentConfig, t: &mut Table) -> Result<(), Error> {
    let g = grid(cfg, cfg.n_t)?;
    let mesh = SpatialMesh::uniform(cfg.n_cells)?;
    let spatial = mesh.interpolate(|x| (std::f64::consts::PI * x).sin());
    let hi = cfg.horizon - cfg.epsilon / 2.0;
    let u = Trajectory::tensor(g, &spatial, |s| smooth_bump(s, 0.0, hi));
    let study = psidelta_limit_study(&u, cfg.epsilon, &cfg.deltas, cfg.alpha, &mesh)?;
    for (k, r) in study.reports(cfg.n_t).into_iter().enumerate() {
        let v = study.values[k];
        let bounded = v.abs() <= study.bounds[k] * (1.0 + 1e-12);
        let decreasing = k == 0 || v.abs() < study.values[k - 1].abs();
        t.push(r.csv_fields().to_vec(), bounded && decreasing, || {
            format!("psidelta at delta={}: value {v}, bound {}, decreasing {decreasing}", cfg.deltas[k], study.bounds[k])
        });
    }
    Ok(())
}

fn table_for(cfg: &ExperimentConfig) -> Table {
    match cfg.command {
        Command::VerifyIdentities | Command::Psidelta => Table::new(&report_header(&[])),
        Command::Convergence => Table::new(&report_header(&["ratio"])),
        Command::Solve => {
            let mut h = vec!["t".to_string()];
            h.extend((1..cfg.n_cells).map(|i| format!("u_{i}")));
            Table { header: h, ..Table::default() }
        }
        Command::Uniqueness => Table::new(&[
            "perturbation",
            "n",
            "difference",
            "reference_norm",
            "relative_difference",
            "ratio",
            "pass",
        ]),
    }
}

fn write_table(path: &Path, t: &Table) -> Result<(), RunError> {
    let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path).map_err(io)?;
    w.write_record(&t.header).map_err(io)?;
    for r in &t.rows {
        w.write_record(r).map_err(io)?;
    }
    for f in &t.failures {
        w.write_record(["FAIL", &format!("reason={f}")]).map_err(io)?;
    }
    w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

/// Runs the configured command and writes `out_dir/<output>`. Invalid
/// parameters detected by the library are configuration errors and leave
/// no file behind; tolerance and solver failures produce a report whose
/// trailing `FAIL` rows name each failed assertion.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, log: &mut dyn FnMut(&str)) -> Result<Outcome, RunError> {
    let mut table = table_for(cfg);
    log(&format!("running {} (alpha = {}, n_t = {})", cfg.command.name(), cfg.alpha.value(), cfg.n_t));
    let result = match cfg.command {
        Command::VerifyIdentities => verify(cfg, &mut table),
        Command::Convergence => convergence(cfg, &mut table),
        Command::Solve => solve(cfg, &mut table),
        Command::Uniqueness => uniqueness(cfg, &mut table),
        Command::Psidelta => psidelta(cfg, &mut table),
    };
    match result {
        Ok(()) => {}
        Err(e) if is_numerical(&e) => table.failures.push(e.to_string()),
        Err(e) => return Err(RunError::Config(e.to_string())),
    }
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::Io(format!("{}: {e}", out_dir.display())))?;
    let path = out_dir.join(&cfg.output);
    write_table(&path, &table)?;
    for f in &table.failures {
        log(&format!("FAIL {f}"));
    }
    log(&format!("wrote {} ({} rows)", path.display(), table.rows.len()));
    Ok(Outcome { path, failures: table.failures })
}
