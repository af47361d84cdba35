//! Benchmark targets, experiment drivers and the command line interface.

mod cli;
mod config;

pub use cli::{cli_main, run_cli};
pub use config::{ExperimentConfig, HConvention, Refinement, TargetKind, DEFAULT_DOF_BUDGET};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::adaptivity::{
    adaptive_solve_observed, fit_rate, records_to_csv, uniform_solve_observed, MarkingRule, RecordField,
    RegularizationKind, RunOutcome, RunRecord, SolveSettings,
};
use crate::assembly::{QuadratureSpec, TargetFunction};
use crate::error::{Error, Result};
use crate::linalg::SolverKind;
use crate::mesh::{initial_mesh, write_vtk, VtkData};
use crate::ocp::{build_system, recover_control, InnerSolve, OcpProblem, OcpSolution, SystemOptions};

/// The benchmark targets on the unit cube of dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkTarget {
    pub dim: usize,
    pub kind: TargetKind,
}

impl BenchmarkTarget {
    pub fn indicator(dim: usize) -> Self {
        Self { dim, kind: TargetKind::Indicator }
    }

    pub fn sine(dim: usize) -> Self {
        Self { dim, kind: TargetKind::Sine }
    }

    pub fn name(&self) -> String {
        format!("{}_{}d", self.kind.name(), self.dim)
    }

    pub fn function(&self) -> Result<TargetFunction> {
        match self.kind {
            TargetKind::Indicator => TargetFunction::centered_box(self.dim),
            TargetKind::Sine => Ok(TargetFunction::sine_product(self.dim)),
        }
    }

    /// Exact `L2` norm on the unit cube.
    pub fn l2_norm(&self) -> f64 {
        0.5f64.powf(self.dim as f64 / 2.0)
    }
}

impl ExperimentConfig {
    pub fn settings(&self) -> SolveSettings {
        SolveSettings {
            regularization: self.regularization,
            h_scale: self.h_convention.scale(self.dim),
            solvers: self.solvers.clone(),
            tol: self.tol,
            system: SystemOptions { inner: self.inner, ..SystemOptions::default() },
            quadrature: QuadratureSpec::with_depth(self.quadrature_depth),
            max_dofs: self.dof_budget,
            cg_max_dofs: self.cg_budget,
        }
    }

    pub fn benchmark(&self) -> BenchmarkTarget {
        BenchmarkTarget { dim: self.dim, kind: self.target }
    }
}

/// Fitted rate, iteration maxima and status of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub levels: usize,
    pub final_dofs: usize,
    pub final_error: f64,
    /// Slope of error against dofs over the last `rate_window` levels.
    pub rate: Option<f64>,
    pub rate_window: usize,
    pub max_iterations: Vec<(SolverKind, usize)>,
    pub note: Option<String>,
    pub failure: Option<String>,
}

impl Summary {
    pub fn from_records(records: &[RunRecord], window: usize, note: Option<String>, failure: Option<String>) -> Self {
        let last = records.last();
        let mut max_iterations = Vec::new();
        for kind in [SolverKind::Pcg, SolverKind::Cg, SolverKind::Gmres, SolverKind::BpCg] {
            if let Some(m) = records.iter().filter_map(|r| r.iterations(kind)).max() {
                max_iterations.push((kind, m));
            }
        }
        Self {
            levels: records.len(),
            final_dofs: last.map_or(0, |r| r.dofs),
            final_error: last.map_or(f64::NAN, |r| r.error),
            rate: fit_rate(records, RecordField::Dofs, RecordField::Error, window).ok(),
            rate_window: window.min(records.len()),
            max_iterations,
            note,
            failure,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "levels = {}", self.levels);
        let _ = writeln!(s, "final_dofs = {}", self.final_dofs);
        let _ = writeln!(s, "final_error = {:.6e}", self.final_error);
        match self.rate {
            Some(r) => {
                let _ = writeln!(s, "rate = {r:.4}");
            }
            None => s.push_str("rate =\n"),
        }
        let _ = writeln!(s, "rate_window = {}", self.rate_window);
        for (kind, m) in &self.max_iterations {
            let _ = writeln!(s, "max_its_{} = {m}", kind.name());
        }
        if let Some(n) = &self.note {
            let _ = writeln!(s, "note = {n}");
        }
        let _ = writeln!(s, "status = {}", self.failure.as_deref().map_or("ok".to_string(), |f| format!("failed: {f}")));
        s
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    pub error: Option<Error>,
    pub last: Option<(OcpProblem, OcpSolution)>,
}

/// Vertex fields of one solved level.
pub fn snapshot(problem: &OcpProblem, solution: &OcpSolution, indicators: &[f64]) -> Result<VtkData> {
    let dofs = &problem.dofs;
    let z = match &solution.z {
        Some(z) => z.clone(),
        None => {
            let sys = build_system(problem, SystemOptions { inner: InnerSolve::Pcg, exploit_constant_rho: true })?;
            recover_control(&sys, solution)?
        }
    };
    let target: Vec<f64> = problem.mesh.vertices().iter().map(|x| problem.target.eval(x)).collect();
    Ok(VtkData::default()
        .point("u", dofs.to_vertex_values(&solution.u))
        .point("p", dofs.to_vertex_values(&solution.p))
        .point("z", dofs.to_vertex_values(&z))
        .point("target", target)
        .cell("rho", problem.rho.values().to_vec())
        .cell("eta", indicators.to_vec()))
}

fn write_snapshot(dir: &Path, problem: &OcpProblem, solution: &OcpSolution, eta: &[f64], level: usize) -> Result<()> {
    let data = snapshot(problem, solution, eta)?;
    let file = fs::File::create(dir.join(format!("level_{level:02}.vtk")))?;
    write_vtk(&problem.mesh, &data, std::io::BufWriter::new(file))
}

/// Runs the configured loop from the benchmark initial mesh. With an output
/// directory, writes `levels.csv` and `summary.txt` (also after a failure)
/// and, when requested, one VTK file per level.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let mesh = initial_mesh(config.dim)?;
    let target = config.benchmark().function()?;
    let settings = config.settings();
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir)?;
    }
    let vtk_dir = config.out_dir.as_deref().filter(|_| config.vtk);
    let mut observer = |pr: &OcpProblem, s: &OcpSolution, eta: &[f64], r: &RunRecord| match vtk_dir {
        Some(dir) => write_snapshot(dir, pr, s, eta, r.level),
        None => Ok(()),
    };
    let out: RunOutcome = match config.refinement {
        Refinement::Adaptive { theta } => {
            adaptive_solve_observed(&mesh, &target, MarkingRule::new(theta)?, config.max_levels, &settings, &mut observer)
        }
        Refinement::Uniform => uniform_solve_observed(&mesh, &target, config.max_levels, &settings, &mut observer),
    };
    let summary = Summary::from_records(
        &out.records,
        config.rate_window,
        out.note.clone(),
        out.error.as_ref().map(|e| e.to_string()),
    );
    if let Some(dir) = &config.out_dir {
        fs::write(dir.join("levels.csv"), records_to_csv(&out.records))?;
        fs::write(dir.join("summary.txt"), summary.to_text())?;
    }
    Ok(ExperimentOutcome { records: out.records, summary, error: out.error, last: out.last })
}

/// One curve of a regularization comparison.
#[derive(Debug, Clone)]
pub struct Curve {
    pub name: &'static str,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub dim: usize,
    pub curves: Vec<Curve>,
}

impl Comparison {
    pub const CSV_HEADER: &'static str = "curve,level,dofs,N,h_max,error";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for c in &self.curves {
            for r in &c.records {
                let _ = writeln!(s, "{},{},{},{},{:.6e},{:.6e}", c.name, r.level, r.dofs, r.elements, r.h_max, r.error);
            }
        }
        s
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }
}

/// Uniform `L2` regularization with `rho = h^4`, uniform energy
/// regularization with `rho = h^2` and adaptive diffusion regularization on
/// the indicator benchmark, each for up to `max_levels` refinements within
/// `dof_budget`.
pub fn compare_regularizations(dim: usize, max_levels: usize, dof_budget: usize) -> Result<Comparison> {
    let mut base = ExperimentConfig::for_dim(dim);
    base.max_levels = max_levels;
    base.dof_budget = dof_budget;
    let runs = [
        ("l2_uniform", RegularizationKind::L2, Refinement::Uniform),
        ("energy_uniform", RegularizationKind::Energy, Refinement::Uniform),
        ("diffusion_adaptive", RegularizationKind::Diffusion, base.refinement),
    ];
    let mut curves = Vec::new();
    for (name, regularization, refinement) in runs {
        let c = ExperimentConfig { regularization, refinement, ..base.clone() };
        let out = run_experiment(&c)?;
        if let Some(e) = out.error {
            return Err(e);
        }
        curves.push(Curve { name, records: out.records });
    }
    Ok(Comparison { dim, curves })
}

/// Iteration counts of all four solvers on adaptive and uniform levels.
#[derive(Debug)]
pub struct SolverStudy {
    pub adaptive: Option<ExperimentOutcome>,
    pub uniform: Option<ExperimentOutcome>,
}

impl SolverStudy {
    /// Table rows: level (from 1), vertices, coupled unknowns, mesh sizes,
    /// error and iteration counts.
    pub fn table(records: &[RunRecord]) -> String {
        let its = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        let mut s = String::from("level,vertices,coupled,h_min,h_max,error,pcg,cg,gmres,bpcg\n");
        for r in records {
            let _ = writeln!(
                s,
                "L{},{},{},{:.6e},{:.6e},{:.6e},{},{},{},{}",
                r.level + 1,
                r.vertices,
                2 * r.dofs,
                r.h_min,
                r.h_max,
                r.error,
                its(r.its_pcg),
                its(r.its_cg),
                its(r.its_gmres),
                its(r.its_bpcg)
            );
        }
        s
    }
}

/// Runs the indicator benchmark with every solver, adaptively and/or
/// uniformly, skipping levels above `base.dof_budget`.
pub fn solver_study(base: &ExperimentConfig, adaptive: bool, uniform: bool) -> Result<SolverStudy> {
    let mut c = base.clone();
    c.regularization = RegularizationKind::Diffusion;
    c.target = TargetKind::Indicator;
    c.solvers = vec![SolverKind::Pcg, SolverKind::Cg, SolverKind::Gmres, SolverKind::BpCg];
    let run = |refinement: Refinement, tag: &str| -> Result<ExperimentOutcome> {
        let mut c = c.clone();
        if let Refinement::Uniform = refinement {
            c.refinement = refinement;
        } else if let Refinement::Uniform = c.refinement {
            c.refinement = Refinement::Adaptive { theta: 0.5 };
        }
        c.out_dir = c.out_dir.as_ref().map(|d| d.join(tag));
        let out = run_experiment(&c)?;
        if let Some(dir) = &c.out_dir {
            fs::write(dir.join("table.csv"), SolverStudy::table(&out.records))?;
        }
        Ok(out)
    };
    let adaptive = if adaptive { Some(run(base.refinement, "adaptive")?) } else { None };
    let uniform = if uniform { Some(run(Refinement::Uniform, "uniform")?) } else { None };
    Ok(SolverStudy { adaptive, uniform })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{global_l2_error, DofMap};
    use crate::mesh::uniform_refine;

    #[test]
    fn indicator_norms() {
        for dim in 1..=3 {
            let b = BenchmarkTarget::indicator(dim);
            let mesh = initial_mesh(dim).unwrap();
            let dofs = DofMap::new(&mesh);
            let zero = vec![0.0; dofs.len()];
            let n = global_l2_error(&mesh, &dofs, &zero, &b.function().unwrap(), &QuadratureSpec::default()).unwrap();
            assert!((n - b.l2_norm()).abs() < 1e-12, "dim {dim}: {n}");
        }
        assert!((BenchmarkTarget::indicator(3).l2_norm() - 0.35355).abs() < 1e-5);
    }

    #[test]
    fn sine_norm_converges() {
        let b = BenchmarkTarget::sine(2);
        let mesh = uniform_refine(&initial_mesh(2).unwrap());
        let dofs = DofMap::new(&mesh);
        let zero = vec![0.0; dofs.len()];
        let n = global_l2_error(&mesh, &dofs, &zero, &b.function().unwrap(), &QuadratureSpec::default()).unwrap();
        assert!((n - 0.5).abs() < 1e-6);
    }

    #[test]
    fn experiment_writes_outputs_after_each_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::for_dim(1);
        c.max_levels = 6;
        c.vtk = true;
        c.out_dir = Some(dir.path().to_path_buf());
        let out = run_experiment(&c).unwrap();
        assert!(out.error.is_none());
        assert_eq!(out.records.len(), 7);
        let csv = fs::read_to_string(dir.path().join("levels.csv")).unwrap();
        assert_eq!(csv.lines().count(), 8);
        assert!(fs::read_to_string(dir.path().join("summary.txt")).unwrap().contains("status = ok"));
        assert!(dir.path().join("level_06.vtk").exists());
    }

    #[test]
    fn summary_collects_maxima() {
        let mut c = ExperimentConfig::for_dim(2);
        c.max_levels = 3;
        c.solvers = vec![SolverKind::Pcg, SolverKind::BpCg];
        let out = run_experiment(&c).unwrap();
        let s = &out.summary;
        assert_eq!(s.levels, 4);
        assert_eq!(s.max_iterations.len(), 2);
        let m = out.records.iter().filter_map(|r| r.its_bpcg).max().unwrap();
        assert!(s.max_iterations.contains(&(SolverKind::BpCg, m)));
        assert!(s.rate.unwrap() < 0.0);
        assert!(s.to_text().contains("max_its_bpcg"));
    }

    #[test]
    fn comparison_has_three_curves() {
        let c = compare_regularizations(1, 4, 10_000).unwrap();
        assert_eq!(c.curves.len(), 3);
        for curve in &c.curves {
            assert_eq!(curve.records.len(), 5);
        }
        let csv = c.to_csv();
        assert_eq!(csv.lines().count(), 16);
        // Same initial mesh: energy and diffusion coincide on level 0.
        let e = c.curve("energy_uniform").unwrap().records[0].error;
        let d = c.curve("diffusion_adaptive").unwrap().records[0].error;
        assert!((e - d).abs() < 1e-12);
    }

    #[test]
    fn study_respects_the_budget() {
        let mut c = ExperimentConfig::for_dim(2);
        c.max_levels = 8;
        c.dof_budget = 500;
        c.cg_budget = 100;
        let s = solver_study(&c, true, true).unwrap();
        for out in [s.adaptive.unwrap(), s.uniform.unwrap()] {
            assert!(out.records.iter().all(|r| r.dofs <= 500));
            assert!(out.summary.note.as_deref().unwrap().contains("budget"));
            for r in &out.records {
                assert!(r.its_pcg.is_some() && r.its_gmres.is_some() && r.its_bpcg.is_some());
                assert_eq!(r.its_cg.is_some(), r.dofs <= 100);
            }
        }
    }
}
