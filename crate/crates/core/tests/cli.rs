//! End-to-end runs of the `madmm` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn madmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_madmm"))
        .args(args)
        .env("MADMM_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    root.to_str().unwrap().to_string()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn out(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn sadmm_solve_converges() {
    let dir = tempfile::tempdir().unwrap();
    let csv = out(&dir, "sadmm.csv");
    let o = madmm(&[
        "solve",
        &config("counterexample.json"),
        "--variant",
        "sadmm",
        "--beta",
        "4",
        "--omega",
        "4",
        "--iters",
        "1000",
        "--tol",
        "1e-6",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("iter,primal_residual,objective,wall_ns\n"));
    let r = rows(&csv);
    let last: f64 = r.last().unwrap()[1].parse().unwrap();
    assert!(last < 1e-6);
    let iters: Vec<usize> = r.iter().map(|row| row[0].parse().unwrap()).collect();
    assert!(iters.windows(2).all(|w| w[1] == w[0] + 1));
}

#[test]
fn cyclic_solve_diverges_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = out(&dir, "cyclic.csv");
    let o = madmm(&[
        "solve",
        &config("counterexample.json"),
        "--variant",
        "cyclic",
        "--iters",
        "2000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Diverged"));
    let r = rows(&csv);
    let last: f64 = r.last().unwrap()[1].parse().unwrap();
    assert!(last > 1e12);
}

#[test]
fn nonpositive_beta_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = out(&dir, "x.csv");
    let o = madmm(&[
        "solve",
        &config("counterexample.json"),
        "--variant",
        "sadmm",
        "--beta",
        "0",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("InvalidPenalty"));
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = out(&dir, "bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let csv = out(&dir, "x.csv");
    let o = madmm(&[
        "solve",
        bad.to_str().unwrap(),
        "--variant",
        "rp",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ParseError"));
    assert_eq!(
        madmm(&["solve", "--variant", "warp"]).status.code(),
        Some(1)
    );
    let o = madmm(&[
        "solve",
        &config("counterexample.json"),
        "--variant",
        "sadmm",
        "--omega",
        "9",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("InvalidParameter"));
}

#[test]
fn rp_csv_is_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let strip =
        |p: &Path| -> Vec<Vec<String>> { rows(p).into_iter().map(|r| r[..3].to_vec()).collect() };
    let mut runs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let csv = out(&dir, name);
        let o = madmm(&[
            "solve",
            &config("counterexample.json"),
            "--variant",
            "rp",
            "--seed",
            "7",
            "--iters",
            "150",
            "--tol",
            "0",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        runs.push(strip(&csv));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0].len(), 151);
}

#[test]
fn spectra_reports_cyclic_instability() {
    let o = madmm(&[
        "spectra",
        &config("counterexample.json"),
        "--variant",
        "cyclic",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    let rho: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rho: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rho > 1.0);
}

#[test]
fn spectra_sadmm_passes_for_admissible_omegas() {
    let dir = tempfile::tempdir().unwrap();
    for omega in ["0.8", "2.4", "4", "5.6", "7.2"] {
        let csv = out(&dir, &format!("ev{omega}.csv"));
        let o = madmm(&[
            "spectra",
            &config("counterexample.json"),
            "--variant",
            "sadmm",
            "--omega",
            omega,
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "omega {omega}");
        let text = String::from_utf8_lossy(&o.stdout);
        assert!(text.contains("theorem check: PASS"), "{text}");
        let moduli: Vec<f64> = rows(&csv).iter().map(|r| r[3].parse().unwrap()).collect();
        assert_eq!(moduli.len(), 6);
        assert!(moduli.iter().all(|&m| m < 1.0));
    }
}

#[test]
fn spectra_rejects_l1_configs() {
    let o = madmm(&["spectra", &config("quadl1.json"), "--variant", "sadmm"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotAffine"));
}

#[test]
fn repro_counterexample_writes_three_histories() {
    let dir = tempfile::tempdir().unwrap();
    let o = madmm(&[
        "repro",
        "counterexample",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["sadmm", "rp", "gadmm"] {
        let r = rows(&out(&dir, &format!("counterexample_{name}.csv")));
        assert_eq!(r.len(), 201);
        let first: f64 = r[0][1].parse().unwrap();
        let last: f64 = r[200][1].parse().unwrap();
        assert!((first - 50f64.sqrt()).abs() < 1e-12);
        assert!(last < 0.1 * first, "{name}: {last}");
    }
}

#[test]
fn repro_quadl1_residual_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let o = madmm(&["repro", "quadl1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["sadmm", "rp", "gadmm"] {
        let residual = out(&dir, &format!("quadl1_{name}_residual.csv"));
        let objective = out(&dir, &format!("quadl1_{name}_objective.csv"));
        assert!(fs::read_to_string(&residual)
            .unwrap()
            .starts_with("iter,primal_residual,wall_ns\n"));
        assert!(fs::read_to_string(&objective)
            .unwrap()
            .starts_with("iter,objective,wall_ns\n"));
        assert_eq!(rows(&objective).len(), 501);
    }
    let r: Vec<f64> = rows(&out(&dir, "quadl1_sadmm_residual.csv"))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(r[500] < r[100]);
}

#[test]
fn unknown_experiment_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = madmm(&[
        "repro",
        "figure9",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UnknownExperiment"));
}
