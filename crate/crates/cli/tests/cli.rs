use std::path::Path;
use std::process::{Command, Output};

fn marchaud(dir: &Path, config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_marchaud"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn zero_data_solve_writes_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let out = marchaud(dir.path(), "command = solve\ndata = zero\nn_t = 32\nn_cells = 4\n");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/solve.csv"));
    assert_eq!(rows[0], ["t", "u_1", "u_2", "u_3"]);
    // 32 history cells, 32 forward cells
    assert_eq!(rows.len(), 1 + 65);
    for r in &rows[1..] {
        assert!(r[1..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn mismatched_meshes_are_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = marchaud(dir.path(), "command = uniqueness\nn_cells = 8\nn_cells_second = 16\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_cells"));
}

#[test]
fn unparseable_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = marchaud(dir.path(), "alpha = 0.5\nalpha = 1.5\n");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    let out = marchaud(dir.path(), "alpha = 1.5\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 < alpha < 1"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_marchaud"))
        .arg("--config")
        .arg(dir.path().join("absent.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    // a regular file where the output directory should be
    std::fs::write(dir.path().join("out"), "").unwrap();
    let out = marchaud(dir.path(), "command = solve\ndata = zero\nn_t = 8\nn_cells = 2\n");
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn psidelta_three_deltas_give_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = marchaud(dir.path(), "command = psidelta\ndelta = 0.2,0.1,0.05\nn_t = 256\nn_cells = 8\n");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/psidelta.csv"));
    assert_eq!(rows.len(), 4);
    let params: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(params, [0.2, 0.1, 0.05]);
}

#[test]
fn verify_identities_at_default_size_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = marchaud(dir.path(), "alpha = 0.5\nn_t = 512\n");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/verify-identities.csv"));
    assert_eq!(rows[0], ["identity", "n", "param", "terms", "normalized_residual", "pass"]);
    assert_eq!(rows.len(), 14);
    for r in &rows[1..] {
        assert_eq!(r[5], "true", "{r:?}");
        if r[0] != "steklov_convergence" {
            assert!(r[4].parse::<f64>().unwrap() <= 1e-2, "{r:?}");
        }
    }
}

#[test]
fn tolerance_failures_exit_3_with_fail_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = marchaud(dir.path(), "n_t = 64\nn_cells = 4\ntolerance = 1e-20\n");
    assert_eq!(out.status.code(), Some(3));
    let rows = read_csv(&dir.path().join("out/verify-identities.csv"));
    let fails: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "FAIL").collect();
    assert!(!fails.is_empty());
    assert!(fails.iter().all(|r| r.len() == 2 && r[1].starts_with("reason=")));
    // the table itself precedes the failure rows
    assert!(rows[1..14].iter().all(|r| r[0] != "FAIL"));
}

#[test]
fn numbers_carry_17_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = marchaud(dir.path(), "command = solve\ndata = relaxation\nn_t = 16\nn_cells = 4\n");
    assert_eq!(out.status.code(), Some(0));
    let rows = read_csv(&dir.path().join("out/solve.csv"));
    for v in &rows[5][1..] {
        let mantissa = v.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{v}");
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "command = uniqueness\nn_t = 32\nn_cells = 8\nrefinements = 2\n";
    assert_eq!(marchaud(dir.path(), cfg).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("out/uniqueness.csv")).unwrap();
    assert_eq!(marchaud(dir.path(), cfg).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("out/uniqueness.csv")).unwrap());
}

#[test]
fn help_documents_keys_and_exit_codes() {
    let out = Command::new(env!("CARGO_BIN_EXE_marchaud")).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["n_cells_second", "perturbation", "delta", "normalization"] {
        assert!(text.contains(key), "{text}");
    }
    assert!(text.contains("2 invalid configuration"));
}
