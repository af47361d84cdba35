use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{
    compare_regularizations, run_experiment, solver_study, ExperimentConfig, ExperimentOutcome, Refinement,
    SolverStudy,
};
use crate::adaptivity::{records_to_csv, RegularizationKind};
use crate::error::{Error, Result};
use crate::linalg::{write_matrix_market, SolverKind};
use crate::ocp::{build_system, recover_control, write_solution, InnerSolve, SolutionVectors, SystemOptions};

#[derive(Parser, Debug)]
#[command(name = "varreg", about = "Adaptive finite elements for tracking problems with variable energy regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve on one level of the refinement sequence (levels count from 1).
    Solve(CommonArgs),
    /// Run the full refinement loop and print the per-level CSV.
    Adapt(CommonArgs),
    /// Compare L2, energy and diffusion regularization.
    Compare(CommonArgs),
    /// Iteration counts of all solvers on adaptive and uniform levels.
    Solvers {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = StudyMode::Both)]
        mode: StudyMode,
    },
    /// Write VTK snapshots per level, the level CSV and the final solution
    /// vectors; optionally the final matrices in Matrix Market format.
    Export {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        matrices: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StudyMode {
    Adaptive,
    Uniform,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum InnerArg {
    Direct,
    Pcg,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Experiment file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    dim: Option<u8>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    /// One or more of cg, pcg, gmres, bpcg (comma separated).
    #[arg(long, value_delimiter = ',')]
    solver: Vec<SolverKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dof_budget: Option<usize>,
    /// diffusion, energy or l2.
    #[arg(long)]
    regularization: Option<RegularizationKind>,
    #[arg(long)]
    uniform: bool,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    inner: Option<InnerArg>,
    /// Write a VTK file per level into the output directory.
    #[arg(long)]
    vtk: bool,
}

impl CommonArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        self.config_or(2)
    }

    fn config_or(&self, default_dim: usize) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let c = ExperimentConfig::parse(&text)?;
                match self.dim {
                    Some(d) if d as usize != c.dim => {
                        let mut c = c;
                        c.dim = d as usize;
                        c
                    }
                    _ => c,
                }
            }
            None => ExperimentConfig::for_dim(self.dim.map_or(default_dim, usize::from)),
        };
        if let Some(l) = self.levels {
            c.max_levels = l;
        }
        if self.uniform {
            c.refinement = Refinement::Uniform;
        }
        if let Some(t) = self.theta {
            match &mut c.refinement {
                Refinement::Adaptive { theta } => *theta = t,
                Refinement::Uniform => {
                    return Err(Error::InvalidArgument("--theta requires adaptive refinement".into()))
                }
            }
        }
        if !self.solver.is_empty() {
            c.solvers = self.solver.clone();
        }
        if let Some(o) = &self.out {
            c.out_dir = Some(o.clone());
        }
        if let Some(b) = self.dof_budget {
            c.dof_budget = b;
        }
        if let Some(r) = self.regularization {
            c.regularization = r;
        }
        if let Some(t) = self.tol {
            c.tol = t;
        }
        if let Some(i) = self.inner {
            c.inner = match i {
                InnerArg::Direct => InnerSolve::Direct,
                InnerArg::Pcg => InnerSolve::Pcg,
            };
        }
        c.vtk |= self.vtk;
        c.validate()?;
        Ok(c)
    }
}

/// Runs the command line with `argv` (program name first) and writes to
/// stdout. Returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_cli(argv, &mut lock)
}

/// [`cli_main`] with an explicit output sink. Exit codes: 0 on success, 1 on
/// solver or I/O failure, 2 on bad arguments.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Parse(_) => 2,
                _ => 1,
            }
        }
    }
}

fn finish(outcome: &ExperimentOutcome) -> Result<()> {
    match &outcome.error {
        Some(e) => Err(Error::Solver { solver: "run".into(), reason: e.to_string() }),
        None => Ok(()),
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Solve(args) => {
            let mut c = args.config()?;
            let level = args.levels.unwrap_or(1);
            if level == 0 {
                return Err(Error::InvalidArgument("levels count from 1".into()));
            }
            c.max_levels = level - 1;
            let outcome = run_experiment(&c)?;
            finish(&outcome)?;
            let r = outcome.records.last().ok_or_else(|| Error::InsufficientData("no level solved".into()))?;
            if r.level + 1 != level {
                return Err(Error::InsufficientData(format!(
                    "stopped at level {}: {}",
                    r.level + 1,
                    outcome.summary.note.clone().unwrap_or_default()
                )));
            }
            writeln!(out, "level    L{level}")?;
            writeln!(out, "vertices {}", r.vertices)?;
            writeln!(out, "elements {}", r.elements)?;
            writeln!(out, "dofs     {}", r.dofs)?;
            writeln!(out, "h_min    {:.6e}", r.h_min)?;
            writeln!(out, "h_max    {:.6e}", r.h_max)?;
            writeln!(out, "error    {:.6e}", r.error)?;
            for &kind in &c.solvers {
                if let Some(its) = r.iterations(kind) {
                    writeln!(out, "{:<8} {its} iterations", kind.name())?;
                }
            }
        }
        Command::Adapt(args) => {
            let c = args.config()?;
            let outcome = run_experiment(&c)?;
            out.write_all(records_to_csv(&outcome.records).as_bytes())?;
            finish(&outcome)?;
        }
        Command::Compare(args) => {
            let c = args.config()?;
            let cmp = compare_regularizations(c.dim, c.max_levels, c.dof_budget)?;
            let csv = cmp.to_csv();
            if let Some(dir) = &c.out_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("compare.csv"), &csv)?;
            }
            out.write_all(csv.as_bytes())?;
        }
        Command::Solvers { common, mode } => {
            let c = common.config_or(3)?;
            let study = solver_study(&c, mode != StudyMode::Uniform, mode != StudyMode::Adaptive)?;
            for (name, o) in [("adaptive", &study.adaptive), ("uniform", &study.uniform)] {
                if let Some(o) = o {
                    writeln!(out, "# {name}")?;
                    out.write_all(SolverStudy::table(&o.records).as_bytes())?;
                    if let Some(n) = &o.summary.note {
                        writeln!(out, "# {n}")?;
                    }
                }
            }
            for o in [&study.adaptive, &study.uniform].into_iter().flatten() {
                finish(o)?;
            }
        }
        Command::Export { common, matrices } => {
            let mut c = common.config()?;
            let dir = c.out_dir.clone().ok_or_else(|| Error::InvalidArgument("export needs --out".into()))?;
            c.vtk = true;
            let outcome = run_experiment(&c)?;
            finish(&outcome)?;
            let (problem, solution) =
                outcome.last.as_ref().ok_or_else(|| Error::InsufficientData("no level solved".into()))?;
            let sys = build_system(problem, SystemOptions { inner: InnerSolve::Pcg, ..SystemOptions::default() })?;
            let mut vectors = SolutionVectors::from(solution);
            vectors.z = Some(recover_control(&sys, solution)?);
            write_solution(&vectors, std::io::BufWriter::new(fs::File::create(dir.join("solution.txt"))?))?;
            if matrices {
                for (name, m) in [("stiffness", &sys.k), ("weighted_stiffness", &sys.k_rho), ("mass", &sys.m)] {
                    let f = fs::File::create(dir.join(format!("{name}.mtx")))?;
                    write_matrix_market(m, std::io::BufWriter::new(f))?;
                }
            }
            writeln!(out, "wrote {} levels to {}", outcome.records.len(), dir.display())?;
        }
    }
    Ok(())
}
