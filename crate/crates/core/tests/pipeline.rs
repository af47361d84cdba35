use std::fs;
use std::path::PathBuf;

use varreg::adaptivity::{
    adaptive_solve, adaptive_solve_observed, fit_loglog, kuhn_h_scale, records_to_csv, MarkingRule, SolveSettings,
};
use varreg::assembly::TargetFunction;
use varreg::bench::{run_experiment, ExperimentConfig};
use varreg::linalg::{vec, SolverKind};
use varreg::mesh::initial_mesh;
use varreg::ocp::{build_system, SystemOptions};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("golden").join(name)
}

/// Level CSV without the timing column.
fn without_seconds(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn check_golden(name: &str, dim: usize, levels: usize) {
    let mut c = ExperimentConfig::for_dim(dim);
    c.max_levels = levels;
    c.solvers = vec![SolverKind::Pcg, SolverKind::Gmres, SolverKind::BpCg];
    let o = run_experiment(&c).unwrap();
    assert!(o.error.is_none());
    let got = without_seconds(&records_to_csv(&o.records));
    let path = golden(name);
    if std::env::var_os("VARREG_UPDATE_GOLDEN").is_some() {
        fs::write(&path, format!("{got}\n")).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap();
    assert_eq!(got.trim_end(), want.trim_end(), "{name}");
}

#[test]
fn level_csv_matches_golden_1d() {
    check_golden("adapt_1d.csv", 1, 12);
}

#[test]
fn level_csv_matches_golden_2d() {
    check_golden("adapt_2d.csv", 2, 5);
}

#[test]
fn rate_checker_on_reference_data() {
    let text = fs::read_to_string(golden("reference_3d.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (dofs, err) = (col("adaptive_dofs"), col("adaptive_error"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 11);
    let pts: Vec<(f64, f64)> =
        rows.iter().map(|r| (r[dofs].parse().unwrap(), r[err].parse().unwrap())).collect();
    let slope = fit_loglog(&pts[pts.len() - 4..]).unwrap();
    assert!((-0.26..=-0.24).contains(&slope), "{slope}");
    let pcg: Vec<usize> = rows.iter().filter_map(|r| r[col("its_pcg")].parse().ok()).collect();
    assert!(pcg.iter().all(|&k| k <= 30));
}

#[test]
fn solvers_agree_and_errors_decrease_along_a_run() {
    let mesh = initial_mesh(2).unwrap();
    let target = TargetFunction::centered_box(2).unwrap();
    let settings = SolveSettings {
        h_scale: kuhn_h_scale(2),
        solvers: vec![SolverKind::Pcg],
        ..SolveSettings::default()
    };
    let tol = settings.tol;
    let mut checked = 0;
    let outcome = adaptive_solve_observed(
        &mesh,
        &target,
        MarkingRule::default(),
        6,
        &settings,
        &mut |problem, solution, _, _| {
            let sys = build_system(problem, SystemOptions::default())?;
            let kinds = [SolverKind::Pcg, SolverKind::Gmres, SolverKind::BpCg];
            let sols = kinds.map(|k| varreg::ocp::solve(&sys, k, tol).unwrap().u);
            for i in 0..3 {
                for j in i + 1..3 {
                    let d = vec::norm(&vec::sub(&sols[i], &sols[j])) / vec::norm(&sols[j]);
                    assert!(d <= 10.0 * tol, "{:?} vs {:?}: {d:e}", kinds[i], kinds[j]);
                }
            }
            // Discrete maximum principle holds only approximately.
            assert!(solution.u.iter().all(|&v| (-0.2..=1.2).contains(&v)));
            checked += 1;
            Ok(())
        },
    );
    let records = outcome.into_result().unwrap();
    assert_eq!(checked, records.len());
    for w in records.windows(2) {
        assert!(w[1].error <= 1.01 * w[0].error, "{} -> {}", w[0].error, w[1].error);
    }
}

#[test]
fn adaptive_runs_are_deterministic() {
    let mesh = initial_mesh(3).unwrap();
    let target = TargetFunction::centered_box(3).unwrap();
    let settings = SolveSettings { h_scale: kuhn_h_scale(3), ..SolveSettings::default() };
    let a = adaptive_solve(&mesh, &target, MarkingRule::default(), 2, &settings).into_result().unwrap();
    let b = adaptive_solve(&mesh, &target, MarkingRule::default(), 2, &settings).into_result().unwrap();
    assert_eq!(without_seconds(&records_to_csv(&a)), without_seconds(&records_to_csv(&b)));
}
