use std::fs;
use std::process::Command;

use varreg::adaptivity::{records_from_csv, RunRecord};
use varreg::bench::{run_cli, ExperimentConfig};

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut argv = vec!["varreg"];
    argv.extend_from_slice(args);
    let code = run_cli(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn adapt_prints_one_row_per_level() {
    let (code, out) = run(&["adapt", "--dim", "2", "--levels", "6", "--theta", "0.5"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(RunRecord::CSV_HEADER));
    assert_eq!(lines.count(), 7);
    let records = records_from_csv(&out).unwrap();
    assert_eq!(records.iter().map(|r| r.level).collect::<Vec<_>>(), (0..=6).collect::<Vec<_>>());
}

#[test]
fn solve_on_the_initial_cube_mesh() {
    let (code, out) = run(&["solve", "--dim", "3", "--levels", "1", "--solver", "pcg,cg"]);
    assert_eq!(code, 0);
    assert!(out.contains("vertices 125"), "{out}");
    let its = |name: &str| -> usize {
        let line = out.lines().find(|l| l.starts_with(name)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!((5..=9).contains(&its("pcg")));
    assert!((6..=10).contains(&its("cg")));
}

#[test]
fn compare_writes_three_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(&["compare", "--dim", "1", "--levels", "20", "--dof-budget", "20000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let file = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(file, out);
    for curve in ["l2_uniform", "energy_uniform", "diffusion_adaptive"] {
        assert!(file.lines().any(|l| l.starts_with(curve)), "{curve}");
    }
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::for_dim(1);
    c.max_levels = 3;
    c.solvers = vec![varreg::linalg::SolverKind::Gmres];
    let path = dir.path().join("run.cfg");
    fs::write(&path, c.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let (code, _) = run(&["adapt", "--config", path.to_str().unwrap(), "--levels", "4", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    let records = records_from_csv(&fs::read_to_string(out_dir.join("levels.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r.its_gmres.is_some() && r.its_pcg.is_none()));
    assert!(fs::read_to_string(out_dir.join("summary.txt")).unwrap().contains("max_its_gmres"));
}

#[test]
fn export_writes_snapshots_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["export", "--dim", "2", "--levels", "2", "--matrices", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    for f in ["level_00.vtk", "level_02.vtk", "levels.csv", "solution.txt", "stiffness.mtx", "weighted_stiffness.mtx", "mass.mtx"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let vtk = fs::read_to_string(dir.path().join("level_02.vtk")).unwrap();
    for field in ["SCALARS u", "SCALARS p", "SCALARS z", "SCALARS target", "SCALARS rho", "SCALARS eta"] {
        assert!(vtk.contains(field), "{field}");
    }
    let m = varreg::linalg::read_matrix_market(std::io::BufReader::new(fs::File::open(dir.path().join("mass.mtx")).unwrap())).unwrap();
    assert!(m.nrows() > 0);
    let sol = varreg::ocp::read_solution(std::io::BufReader::new(fs::File::open(dir.path().join("solution.txt")).unwrap())).unwrap();
    assert_eq!(sol.u.len(), m.nrows());
    assert!(sol.z.is_some());
}

#[test]
fn bad_arguments_exit_with_two() {
    assert_eq!(run(&["adapt", "--no-such-flag"]).0, 2);
    assert_eq!(run(&["adapt", "--dim", "4"]).0, 2);
    assert_eq!(run(&["adapt", "--theta", "1.5"]).0, 2);
    assert_eq!(run(&["adapt", "--solver", "minres"]).0, 2);
    assert_eq!(run(&["solve", "--levels", "0"]).0, 2);
    assert_eq!(run(&["export", "--dim", "1"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing.cfg");
    assert_eq!(run(&["adapt", "--config", path.to_str().unwrap()]).0, 1);
    // A tolerance below machine precision cannot be met by plain CG.
    assert_eq!(run(&["adapt", "--dim", "2", "--levels", "2", "--solver", "cg", "--tol", "1e-300"]).0, 1);
}

#[test]
fn binary_reports_usage_and_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_varreg");
    let out = Command::new(bin).arg("--help").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("adapt"));
    let out = Command::new(bin).args(["adapt", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = Command::new(bin).args(["adapt", "--dim", "1", "--levels", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 5);
}
