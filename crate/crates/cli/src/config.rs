//! Line-oriented `key = value` experiment configuration.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use marchaud_core::{FracOrder, Normalization};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyIdentities,
    Convergence,
    Solve,
    Uniqueness,
    Psidelta,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::Convergence => "convergence",
            Command::Solve => "solve",
            Command::Uniqueness => "uniqueness",
            Command::Psidelta => "psidelta",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "verify-identities" => Command::VerifyIdentities,
            "convergence" => Command::Convergence,
            "solve" => Command::Solve,
            "uniqueness" => Command::Uniqueness,
            "psidelta" => Command::Psidelta,
            _ => return Err("expected one of verify-identities, convergence, solve, uniqueness, psidelta".into()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    /// `v = 0`, `f = 0`.
    Zero,
    /// `v = sin(pi x)`, `f = 0`.
    Relaxation,
    /// `u = t^2 sin(pi x)` with its load.
    Manufactured,
    /// `v = (1 + t/2) sin(pi x)`, `f = x (1 - x) (1 + t)`.
    Forced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    Identical,
    Refine,
    Graded,
    Reordered,
}

/// Parsed and validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: FracOrder,
    pub n_t: usize,
    pub n_cells: usize,
    pub n_cells_second: usize,
    pub history_length: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub deltas: Vec<f64>,
    pub grading: f64,
    pub form: FormKind,
    pub coef_base: f64,
    pub coef_amplitude: f64,
    pub coef_frequency: f64,
    pub regularization: f64,
    pub normalization: Normalization,
    pub data: DataKind,
    pub perturbation: PerturbationKind,
    pub refinements: usize,
    pub tolerance: f64,
    pub min_ratio: f64,
    pub output: String,
}

/// Default coarsest level of the convergence and uniqueness sweeps.
pub const SWEEP_N_T: usize = 128;

/// Key, default and meaning; printed by `--help`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("command", "verify-identities", "verify-identities | convergence | solve | uniqueness | psidelta"),
    ("alpha", "0.5", "fractional order, 0 < alpha < 1"),
    ("n_t", "512 (128 for sweeps)", "time cells on [0, T]; coarsest level for convergence and uniqueness"),
    ("n_cells", "16", "spatial cells on (0, 1)"),
    ("n_cells_second", "n_cells", "spatial cells of the second uniqueness run (must equal n_cells)"),
    ("m", "1.0", "history length M"),
    ("t", "1.0", "horizon T"),
    ("epsilon", "0.2", "cutoff parameter, 0 < epsilon < T/2"),
    ("delta", "0.2,0.1,0.05,0.025", "ramp widths for psidelta, decreasing, each <= epsilon"),
    ("grading", "1.0", "time grid grading exponent r >= 1"),
    ("form", "local", "local | nonlocal"),
    ("coef_base", "1.0", "coefficient base value"),
    ("coef_amplitude", "0.5", "amplitude of the sign(sin(frequency t)) switch"),
    ("coef_frequency", "20.0", "frequency of the switch"),
    ("regularization", "1.0", "stiffness multiple added to the nonlocal form"),
    ("normalization", "paper", "paper | classical"),
    ("data", "manufactured", "zero | relaxation | manufactured | forced"),
    ("perturbation", "refine", "identical | refine | graded | reordered"),
    ("refinements", "3", "grid doublings for convergence and uniqueness sweeps"),
    ("tolerance", "0.01", "largest accepted normalized residual"),
    ("min_ratio", "1.5", "smallest accepted decay factor per doubling"),
    ("output", "<command>.csv", "report file name inside the output directory"),
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::VerifyIdentities,
            alpha: FracOrder::new(0.5).expect("valid default"),
            n_t: 512,
            n_cells: 16,
            n_cells_second: 16,
            history_length: 1.0,
            horizon: 1.0,
            epsilon: 0.2,
            deltas: vec![0.2, 0.1, 0.05, 0.025],
            grading: 1.0,
            form: FormKind::Local,
            coef_base: 1.0,
            coef_amplitude: 0.5,
            coef_frequency: 20.0,
            regularization: 1.0,
            normalization: Normalization::Paper,
            data: DataKind::Manufactured,
            perturbation: PerturbationKind::Refine,
            refinements: 3,
            tolerance: 1e-2,
            min_ratio: 1.5,
            output: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::at(line, format!("{key}: expected {what}, got '{value}'")))
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|p| parse_value(line, key, p.trim(), "a comma-separated list of numbers")).collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut second_set = false;
    let mut n_t_set = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|k| k.0 == key) {
            return Err(ConfigError::at(line, format!("unknown key '{key}'")));
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::at(line, format!("duplicate key '{key}'")));
        }
        match key {
            "command" => cfg.command = value.parse().map_err(|e: String| ConfigError::at(line, format!("command: {e}")))?,
            "alpha" => {
                let a: f64 = parse_value(line, key, value, "a number")?;
                cfg.alpha = FracOrder::new(a)
                    .map_err(|_| ConfigError::at(line, format!("alpha must satisfy 0 < alpha < 1, got {a}")))?;
            }
            "n_t" => {
                cfg.n_t = parse_value(line, key, value, "a positive integer")?;
                n_t_set = true;
            }
            "n_cells" => cfg.n_cells = parse_value(line, key, value, "a positive integer")?,
            "n_cells_second" => {
                cfg.n_cells_second = parse_value(line, key, value, "a positive integer")?;
                second_set = true;
            }
            "m" => cfg.history_length = parse_value(line, key, value, "a number")?,
            "t" => cfg.horizon = parse_value(line, key, value, "a number")?,
            "epsilon" => cfg.epsilon = parse_value(line, key, value, "a number")?,
            "delta" => cfg.deltas = parse_list(line, key, value)?,
            "grading" => cfg.grading = parse_value(line, key, value, "a number")?,
            "form" => {
                cfg.form = match value {
                    "local" => FormKind::Local,
                    "nonlocal" => FormKind::Nonlocal,
                    _ => return Err(ConfigError::at(line, format!("form: expected local | nonlocal, got '{value}'"))),
                }
            }
            "coef_base" => cfg.coef_base = parse_value(line, key, value, "a number")?,
            "coef_amplitude" => cfg.coef_amplitude = parse_value(line, key, value, "a number")?,
            "coef_frequency" => cfg.coef_frequency = parse_value(line, key, value, "a number")?,
            "regularization" => cfg.regularization = parse_value(line, key, value, "a number")?,
            "normalization" => {
                cfg.normalization = match value {
                    "paper" => Normalization::Paper,
                    "classical" => Normalization::Classical,
                    _ => {
                        return Err(ConfigError::at(line, format!("normalization: expected paper | classical, got '{value}'")))
                    }
                }
            }
            "data" => {
                cfg.data = match value {
                    "zero" => DataKind::Zero,
                    "relaxation" => DataKind::Relaxation,
                    "manufactured" => DataKind::Manufactured,
                    "forced" => DataKind::Forced,
                    _ => {
                        return Err(ConfigError::at(
                            line,
                            format!("data: expected zero | relaxation | manufactured | forced, got '{value}'"),
                        ))
                    }
                }
            }
            "perturbation" => {
                cfg.perturbation = match value {
                    "identical" => PerturbationKind::Identical,
                    "refine" => PerturbationKind::Refine,
                    "graded" => PerturbationKind::Graded,
                    "reordered" => PerturbationKind::Reordered,
                    _ => {
                        return Err(ConfigError::at(
                            line,
                            format!("perturbation: expected identical | refine | graded | reordered, got '{value}'"),
                        ))
                    }
                }
            }
            "refinements" => cfg.refinements = parse_value(line, key, value, "a nonnegative integer")?,
            "tolerance" => cfg.tolerance = parse_value(line, key, value, "a number")?,
            "min_ratio" => cfg.min_ratio = parse_value(line, key, value, "a number")?,
            "output" => {
                if value.is_empty() || value.contains('/') || value.contains('\\') {
                    return Err(ConfigError::at(line, "output: expected a plain file name"));
                }
                cfg.output = value.to_string();
            }
            _ => unreachable!("key list checked above"),
        }
    }
    if !n_t_set && matches!(cfg.command, Command::Convergence | Command::Uniqueness) {
        cfg.n_t = SWEEP_N_T;
    }
    if !second_set {
        cfg.n_cells_second = cfg.n_cells;
    }
    if cfg.output.is_empty() {
        cfg.output = format!("{}.csv", cfg.command.name());
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    let fail = |m: String| Err(ConfigError::global(m));
    if c.n_t < 4 {
        return fail(format!("n_t must be >= 4, got {}", c.n_t));
    }
    if c.n_cells < 2 || c.n_cells_second < 2 {
        return fail("n_cells must be >= 2".into());
    }
    if c.command == Command::Uniqueness && c.n_cells_second != c.n_cells {
        return fail(format!(
            "uniqueness runs need the same spatial mesh, got n_cells = {} and n_cells_second = {}",
            c.n_cells, c.n_cells_second
        ));
    }
    if !(c.history_length > 0.0 && c.history_length.is_finite()) {
        return fail(format!("m must be positive, got {}", c.history_length));
    }
    if !(c.horizon > 0.0 && c.horizon.is_finite()) {
        return fail(format!("t must be positive, got {}", c.horizon));
    }
    if !(c.epsilon > 0.0 && c.epsilon < c.horizon / 2.0) {
        return fail(format!("epsilon must satisfy 0 < epsilon < T/2, got {}", c.epsilon));
    }
    if c.deltas.is_empty() {
        return fail("delta list is empty".into());
    }
    for w in c.deltas.windows(2) {
        if w[1] >= w[0] {
            return fail("delta values must decrease strictly".into());
        }
    }
    for &d in &c.deltas {
        if !(d > 0.0 && d <= c.epsilon && c.horizon - c.epsilon - d > 0.0) {
            return fail(format!("delta = {d} must satisfy 0 < delta <= epsilon < T - delta"));
        }
    }
    if !(c.grading >= 1.0 && c.grading.is_finite()) {
        return fail(format!("grading must be >= 1, got {}", c.grading));
    }
    if !(c.coef_base.is_finite() && c.coef_amplitude.is_finite() && c.coef_frequency.is_finite()) {
        return fail("coefficient parameters must be finite".into());
    }
    if !(c.coef_base - c.coef_amplitude.abs() > 0.0) {
        return fail(format!(
            "coefficient must stay positive: need coef_base > |coef_amplitude|, got {} and {}",
            c.coef_base, c.coef_amplitude
        ));
    }
    if !(c.regularization > 0.0 && c.regularization.is_finite()) {
        return fail(format!("regularization must be positive, got {}", c.regularization));
    }
    if c.refinements > 6 {
        return fail(format!("refinements must be <= 6, got {}", c.refinements));
    }
    if c.n_t.checked_shl(c.refinements as u32 + 1).is_none_or(|n| n > 1 << 16) {
        return fail("n_t * 2^(refinements + 1) must not exceed 65536".into());
    }
    if !(c.tolerance > 0.0 && c.tolerance.is_finite()) {
        return fail(format!("tolerance must be positive, got {}", c.tolerance));
    }
    if !(c.min_ratio > 0.0 && c.min_ratio.is_finite()) {
        return fail(format!("min_ratio must be positive, got {}", c.min_ratio));
    }
    Ok(())
}

/// `--help` text listing every key with its default.
pub fn keys_help() -> String {
    let mut s = String::from("Config file keys (key = value, one per line, '#' starts a comment):\n");
    for (k, d, m) in KEYS {
        s.push_str(&format!("  {k:<16} default {d:<22} {m}\n"));
    }
    s
}
