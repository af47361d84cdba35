//! The solve, estimate, mark, refine loop and its per-level records.

use std::fmt::Write as _;
use std::time::Instant;

use crate::assembly::{element_l2_errors_sq, QuadratureSpec, RegularizationMode, TargetFunction};
use crate::error::{Error, Result};
use crate::linalg::{SolverKind, DEFAULT_TOL};
use crate::mesh::{refine_times, uniform_refine, SimplicialMesh};
use crate::ocp::{self, build_system, solve_l2_regularization_baseline, OcpProblem, OcpSolution, SystemOptions};

/// Maximum strategy: mark `T_l` when `eta_l > theta * max_k eta_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkingRule {
    theta: f64,
}

impl Default for MarkingRule {
    fn default() -> Self {
        Self { theta: 0.5 }
    }
}

impl MarkingRule {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("theta = {theta} not in (0, 1]")));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Indices with `eta_l > theta * max`. For `theta = 1` the strict test marks
/// nothing, so the elements attaining the maximum are returned instead. All
/// zero indicators give the empty set.
pub fn mark(indicators: &[f64], rule: MarkingRule) -> Vec<usize> {
    let max = indicators.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let threshold = rule.theta * max;
    let marked: Vec<usize> = (0..indicators.len()).filter(|&l| indicators[l] > threshold).collect();
    if marked.is_empty() {
        (0..indicators.len()).filter(|&l| indicators[l] == max).collect()
    } else {
        marked
    }
}

/// Local errors `eta_l = ||u_h - ubar||_{L2(T_l)}`.
pub fn compute_indicators(problem: &OcpProblem, solution: &OcpSolution) -> Result<Vec<f64>> {
    if solution.revision != problem.mesh.revision() {
        return Err(Error::RevisionMismatch { expected: problem.mesh.revision(), got: solution.revision });
    }
    let sq = element_l2_errors_sq(&problem.mesh, &problem.dofs, &solution.u, &problem.target, &problem.quadrature)?;
    Ok(sq.into_iter().map(f64::sqrt).collect())
}

/// Which regularization is applied on each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizationKind {
    /// `rho_l = h_l^2` per element.
    Diffusion,
    /// Energy regularization, `rho = h^2` with the global mesh size.
    Energy,
    /// Regularization in `L2`, `rho = h^4` with the global mesh size.
    L2,
}

impl RegularizationKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Diffusion => "diffusion",
            Self::Energy => "energy",
            Self::L2 => "l2",
        }
    }
}

impl std::str::FromStr for RegularizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffusion" => Ok(Self::Diffusion),
            "energy" => Ok(Self::Energy),
            "l2" => Ok(Self::L2),
            _ => Err(Error::Parse(format!("unknown regularization `{s}`"))),
        }
    }
}

/// Settings shared by the adaptive and uniform drivers.
#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub regularization: RegularizationKind,
    /// Local mesh size is `h_scale * volume^(1/n)`. With `(n!)^(1/n)` it is
    /// the edge length of the grid cell of a Kuhn simplex.
    pub h_scale: f64,
    /// Solvers run on every level; the first one provides the solution used
    /// for the error and the marking.
    pub solvers: Vec<SolverKind>,
    pub tol: f64,
    pub system: SystemOptions,
    pub quadrature: QuadratureSpec,
    /// Levels with more interior dofs are not solved.
    pub max_dofs: usize,
    /// Unpreconditioned CG is skipped above this many dofs.
    pub cg_max_dofs: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            regularization: RegularizationKind::Diffusion,
            h_scale: 1.0,
            solvers: vec![SolverKind::Pcg],
            tol: DEFAULT_TOL,
            system: SystemOptions::default(),
            quadrature: QuadratureSpec::default(),
            max_dofs: 2_000_000,
            cg_max_dofs: 200_000,
        }
    }
}

/// `(n!)^(1/n)`: ratio of the Kuhn cell edge to `volume^(1/n)` of its simplices.
pub fn kuhn_h_scale(dim: usize) -> f64 {
    let f: f64 = (1..=dim).map(|k| k as f64).product();
    f.powf(1.0 / dim as f64)
}

/// One level of a refinement run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub level: usize,
    /// Number of elements.
    pub elements: usize,
    /// Interior degrees of freedom.
    pub dofs: usize,
    pub vertices: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub error: f64,
    pub its_pcg: Option<usize>,
    pub its_cg: Option<usize>,
    pub its_gmres: Option<usize>,
    pub its_bpcg: Option<usize>,
    pub seconds: f64,
    /// Elements marked for the next level.
    pub marked: usize,
}

impl RunRecord {
    pub const CSV_HEADER: &'static str = "level,N,dofs,h_min,h_max,error,its_pcg,its_cg,its_gmres,its_bpcg,seconds";

    pub fn csv_row(&self) -> String {
        let its = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{:.6e},{:.6e},{:.6e},{},{},{},{},{:.3}",
            self.level,
            self.elements,
            self.dofs,
            self.h_min,
            self.h_max,
            self.error,
            its(self.its_pcg),
            its(self.its_cg),
            its(self.its_gmres),
            its(self.its_bpcg),
            self.seconds
        )
        .expect("writing to a string");
        s
    }

    pub fn iterations(&self, kind: SolverKind) -> Option<usize> {
        match kind {
            SolverKind::Pcg => self.its_pcg,
            SolverKind::Cg => self.its_cg,
            SolverKind::Gmres => self.its_gmres,
            SolverKind::BpCg => self.its_bpcg,
        }
    }

    fn set_iterations(&mut self, kind: SolverKind, its: usize) {
        let slot = match kind {
            SolverKind::Pcg => &mut self.its_pcg,
            SolverKind::Cg => &mut self.its_cg,
            SolverKind::Gmres => &mut self.its_gmres,
            SolverKind::BpCg => &mut self.its_bpcg,
        };
        *slot = Some(its);
    }
}

/// CSV text of a run, header included.
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut s = String::from(RunRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Parses the output of [`records_to_csv`]. Vertex and marking counts are
/// not part of the CSV and read back as zero.
pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RunRecord::CSV_HEADER) {
        return Err(Error::Parse("missing level CSV header".into()));
    }
    let num = |field: &str, no: usize| -> Result<f64> {
        field.parse().map_err(|_| Error::Parse(format!("row {no}: invalid number `{field}`")))
    };
    let count = |field: &str, no: usize| -> Result<usize> {
        field.parse().map_err(|_| Error::Parse(format!("row {no}: invalid count `{field}`")))
    };
    let its = |field: &str, no: usize| -> Result<Option<usize>> {
        if field.is_empty() {
            Ok(None)
        } else {
            count(field, no).map(Some)
        }
    };
    let mut out = Vec::new();
    for (no, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 11 {
            return Err(Error::Parse(format!("row {}: expected 11 fields, got {}", no + 1, f.len())));
        }
        out.push(RunRecord {
            level: count(f[0], no + 1)?,
            elements: count(f[1], no + 1)?,
            dofs: count(f[2], no + 1)?,
            vertices: 0,
            h_min: num(f[3], no + 1)?,
            h_max: num(f[4], no + 1)?,
            error: num(f[5], no + 1)?,
            its_pcg: its(f[6], no + 1)?,
            its_cg: its(f[7], no + 1)?,
            its_gmres: its(f[8], no + 1)?,
            its_bpcg: its(f[9], no + 1)?,
            seconds: num(f[10], no + 1)?,
            marked: 0,
        });
    }
    Ok(out)
}

/// Records of a run; on failure the records of the completed levels are kept.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub error: Option<Error>,
    /// Why the loop ended before `max_levels`, if it did for a benign reason.
    pub note: Option<String>,
    /// Problem and solution of the last solved level.
    pub last: Option<(OcpProblem, OcpSolution)>,
}

impl RunOutcome {
    pub fn into_result(self) -> Result<Vec<RunRecord>> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.records),
        }
    }
}

fn regularization_mode(mesh: &SimplicialMesh, settings: &SolveSettings) -> RegularizationMode {
    let s = settings.h_scale;
    match settings.regularization {
        RegularizationKind::Diffusion if s == 1.0 => RegularizationMode::VariableLocal,
        RegularizationKind::Diffusion => RegularizationMode::ScaledLocal { epsilon: s * s },
        RegularizationKind::Energy | RegularizationKind::L2 => {
            let h = s * mesh.mesh_size_range().1;
            RegularizationMode::Constant { rho: h * h }
        }
    }
}

struct LevelResult {
    record: RunRecord,
    problem: OcpProblem,
    solution: OcpSolution,
    indicators: Vec<f64>,
}

fn solve_level(
    mesh: &SimplicialMesh,
    target: &TargetFunction,
    level: usize,
    settings: &SolveSettings,
) -> Result<LevelResult> {
    let start = Instant::now();
    let mode = regularization_mode(mesh, settings);
    let problem = OcpProblem::new(mesh.clone(), target.clone(), mode, settings.quadrature)?;
    let (h_min, h_max) = mesh.mesh_size_range();
    let mut record = RunRecord {
        level,
        elements: mesh.num_elements(),
        dofs: problem.dofs.len(),
        vertices: mesh.num_vertices(),
        h_min: settings.h_scale * h_min,
        h_max: settings.h_scale * h_max,
        error: 0.0,
        its_pcg: None,
        its_cg: None,
        its_gmres: None,
        its_bpcg: None,
        seconds: 0.0,
        marked: 0,
    };

    let solution = if settings.regularization == RegularizationKind::L2 {
        let RegularizationMode::Constant { rho: h2 } = mode else { unreachable!() };
        let s = solve_l2_regularization_baseline(mesh, &problem.dofs, target, h2 * h2, &problem.quadrature, settings.tol)?;
        check_converged(&s)?;
        record.set_iterations(SolverKind::Pcg, s.report.iterations);
        s
    } else {
        let sys = build_system(&problem, settings.system)?;
        let mut primary = None;
        for &kind in &settings.solvers {
            if kind == SolverKind::Cg && sys.dim() > settings.cg_max_dofs && primary.is_some() {
                continue;
            }
            let s = ocp::solve(&sys, kind, settings.tol)?;
            check_converged(&s)?;
            record.set_iterations(kind, s.report.iterations);
            if primary.is_none() {
                primary = Some(s);
            }
        }
        primary.ok_or_else(|| Error::InvalidArgument("no solver selected".into()))?
    };
    let indicators = compute_indicators(&problem, &solution)?;
    record.error = crate::linalg::vec::pairwise_sum(0, indicators.len(), |i| indicators[i] * indicators[i]).sqrt();
    record.seconds = start.elapsed().as_secs_f64();
    Ok(LevelResult { record, problem, solution, indicators })
}

fn check_converged(s: &OcpSolution) -> Result<()> {
    let r = &s.report;
    if r.converged {
        return Ok(());
    }
    let reason = if r.breakdown {
        "breakdown".to_string()
    } else if r.stagnated {
        "stagnation".to_string()
    } else {
        format!("no convergence after {} iterations (residual {:e})", r.iterations, r.residual)
    };
    Err(Error::Solver { solver: r.solver.name().to_string(), reason })
}

/// Called after every solved level with its problem, solution, indicators
/// and record.
pub type LevelObserver<'a> = dyn FnMut(&OcpProblem, &OcpSolution, &[f64], &RunRecord) -> Result<()> + 'a;

/// Adaptive loop from `mesh`: levels `0..=max_levels`, each marked element is
/// bisected `n` times (its size halves) before closure.
pub fn adaptive_solve(
    mesh: &SimplicialMesh,
    target: &TargetFunction,
    rule: MarkingRule,
    max_levels: usize,
    settings: &SolveSettings,
) -> RunOutcome {
    adaptive_solve_observed(mesh, target, rule, max_levels, settings, &mut |_, _, _, _| Ok(()))
}

pub fn adaptive_solve_observed(
    mesh: &SimplicialMesh,
    target: &TargetFunction,
    rule: MarkingRule,
    max_levels: usize,
    settings: &SolveSettings,
    observer: &mut LevelObserver<'_>,
) -> RunOutcome {
    let mut step = |m: &SimplicialMesh, ind: &[f64]| {
        let marked = mark(ind, rule);
        let next = if marked.is_empty() { None } else { Some(refine_times(m, &marked, m.dim() as u8)) };
        (marked.len(), next)
    };
    run_loop(mesh, target, max_levels, settings, &mut step, observer)
}

/// Uniform refinement: every level halves the mesh size.
pub fn uniform_solve(
    mesh: &SimplicialMesh,
    target: &TargetFunction,
    max_levels: usize,
    settings: &SolveSettings,
) -> RunOutcome {
    uniform_solve_observed(mesh, target, max_levels, settings, &mut |_, _, _, _| Ok(()))
}

pub fn uniform_solve_observed(
    mesh: &SimplicialMesh,
    target: &TargetFunction,
    max_levels: usize,
    settings: &SolveSettings,
    observer: &mut LevelObserver<'_>,
) -> RunOutcome {
    let mut step = |m: &SimplicialMesh, _: &[f64]| (m.num_elements(), Some(Ok(uniform_refine(m))));
    run_loop(mesh, target, max_levels, settings, &mut step, observer)
}

type Step<'a> = dyn FnMut(&SimplicialMesh, &[f64]) -> (usize, Option<Result<SimplicialMesh>>) + 'a;

fn run_loop(
    mesh: &SimplicialMesh,
    target: &TargetFunction,
    max_levels: usize,
    settings: &SolveSettings,
    step: &mut Step<'_>,
    observer: &mut LevelObserver<'_>,
) -> RunOutcome {
    let mut out = RunOutcome { records: Vec::new(), error: None, note: None, last: None };
    let mut current = mesh.clone();
    for level in 0..=max_levels {
        let dofs = current.num_interior_vertices();
        if dofs > settings.max_dofs {
            out.note = Some(format!("level {level} with {dofs} dofs exceeds the budget of {}", settings.max_dofs));
            break;
        }
        let res = match solve_level(&current, target, level, settings) {
            Ok(r) => r,
            Err(e) => {
                out.error = Some(e);
                break;
            }
        };
        let LevelResult { mut record, problem, solution, indicators } = res;
        let next = if level < max_levels {
            let t = Instant::now();
            let (marked, next) = step(&current, &indicators);
            record.marked = marked;
            record.seconds += t.elapsed().as_secs_f64();
            next
        } else {
            None
        };
        if let Err(e) = observer(&problem, &solution, &indicators, &record) {
            out.error = Some(e);
            out.records.push(record);
            break;
        }
        out.records.push(record);
        out.last = Some((problem, solution));
        match next {
            None if level < max_levels => {
                out.note = Some(format!("no element marked after level {level}"));
                break;
            }
            None => break,
            Some(Err(e)) => {
                out.error = Some(e);
                break;
            }
            Some(Ok(m)) => current = m,
        }
    }
    out
}

/// Quantities of a [`RunRecord`] usable in rate fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordField {
    Dofs,
    Elements,
    Error,
    HMin,
    HMax,
}

impl RecordField {
    fn get(self, r: &RunRecord) -> f64 {
        match self {
            Self::Dofs => r.dofs as f64,
            Self::Elements => r.elements as f64,
            Self::Error => r.error,
            Self::HMin => r.h_min,
            Self::HMax => r.h_max,
        }
    }
}

/// Least-squares slope of `log y` against `log x` over the last `window`
/// records.
pub fn fit_rate(records: &[RunRecord], x: RecordField, y: RecordField, window: usize) -> Result<f64> {
    let start = records.len().saturating_sub(window);
    let pts: Vec<(f64, f64)> = records[start..].iter().map(|r| (x.get(r), y.get(r))).collect();
    fit_loglog(&pts)
}

/// Least-squares slope in log-log coordinates.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points, need at least 2", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InsufficientData("log-log fit needs positive values".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_unit_square_mesh};
    use proptest::prelude::*;

    #[test]
    fn marking_examples() {
        let r = MarkingRule::default();
        assert_eq!(mark(&[1.0, 0.6, 0.4], r), vec![0, 1]);
        assert_eq!(mark(&[1.0, 0.5, 0.4], r), vec![0]);
        assert!(mark(&[0.0, 0.0, 0.0], r).is_empty());
        assert_eq!(mark(&[0.3, 1.0, 1.0], MarkingRule::new(1.0).unwrap()), vec![1, 2]);
        assert!(MarkingRule::new(0.0).is_err() && MarkingRule::new(1.5).is_err());
    }

    proptest! {
        #[test]
        fn marking_partitions_exactly(eta in prop::collection::vec(0.0f64..10.0, 1..60), theta in 0.01f64..0.99) {
            let rule = MarkingRule::new(theta).unwrap();
            let marked = mark(&eta, rule);
            let max = eta.iter().cloned().fold(0.0, f64::max);
            for (l, &e) in eta.iter().enumerate() {
                prop_assert_eq!(marked.contains(&l), e > theta * max);
            }
        }
    }

    fn rec(dofs: usize, error: f64) -> RunRecord {
        RunRecord {
            level: 0,
            elements: dofs,
            dofs,
            vertices: dofs,
            h_min: 1.0,
            h_max: 1.0,
            error,
            its_pcg: Some(1),
            its_cg: None,
            its_gmres: None,
            its_bpcg: None,
            seconds: 0.0,
            marked: 0,
        }
    }

    #[test]
    fn rate_fits() {
        let rs: Vec<RunRecord> = [10usize, 40, 160, 640].iter().map(|&n| rec(n, (n as f64).powf(-0.5))).collect();
        assert!((fit_rate(&rs, RecordField::Dofs, RecordField::Error, 3).unwrap() + 0.5).abs() < 1e-12);
        let flat: Vec<RunRecord> = [10usize, 40, 160].iter().map(|&n| rec(n, 0.3)).collect();
        assert!(fit_rate(&flat, RecordField::Dofs, RecordField::Error, 5).unwrap().abs() < 1e-12);
        assert!(fit_rate(&rs[..1], RecordField::Dofs, RecordField::Error, 5).is_err());
    }

    #[test]
    fn csv_row_has_all_columns() {
        let r = rec(27, 0.301923);
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), RunRecord::CSV_HEADER.split(',').count());
        assert!(row.starts_with("0,27,27,1.000000e0,1.000000e0,3.019230e-1,1,,,,"));
        let back = records_from_csv(&records_to_csv(&[r.clone(), r.clone()])).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!((back[0].dofs, back[0].its_pcg, back[0].its_gmres), (27, Some(1), None));
        assert!((back[0].error - r.error).abs() < 1e-6 * r.error);
        assert!(records_from_csv("level,N\n").is_err());
    }

    #[test]
    fn indicators_sum_to_global_error() {
        let m = build_unit_square_mesh();
        let pr = OcpProblem::new(
            m,
            TargetFunction::centered_box(2).unwrap(),
            RegularizationMode::VariableLocal,
            QuadratureSpec::default(),
        )
        .unwrap();
        let sys = build_system(&pr, SystemOptions::default()).unwrap();
        let s = ocp::solve(&sys, SolverKind::Pcg, 1e-8).unwrap();
        let eta = compute_indicators(&pr, &s).unwrap();
        let total = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
        let g = crate::assembly::global_l2_error(&pr.mesh, &pr.dofs, &s.u, &pr.target, &pr.quadrature).unwrap();
        assert!((total - g).abs() <= 1e-12 * g);
        assert!(eta.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn adaptive_loop_records_every_level() {
        let settings = SolveSettings { solvers: vec![SolverKind::Pcg, SolverKind::Gmres], ..Default::default() };
        let out = adaptive_solve(
            &build_unit_square_mesh(),
            &TargetFunction::centered_box(2).unwrap(),
            MarkingRule::default(),
            4,
            &settings,
        );
        assert!(out.error.is_none());
        let rs = out.records;
        assert_eq!(rs.len(), 5);
        for w in rs.windows(2) {
            assert!(w[1].elements > w[0].elements && w[1].dofs > w[0].dofs);
            assert!(w[1].error <= 1.01 * w[0].error);
            assert!(w[0].marked > 0);
        }
        for r in &rs {
            assert!(r.h_min <= r.h_max && r.its_pcg.is_some() && r.its_gmres.is_some());
        }
    }

    #[test]
    fn rho_is_rebuilt_from_new_geometry() {
        let settings = SolveSettings::default();
        let out = adaptive_solve(
            &build_interval_mesh(4).unwrap(),
            &TargetFunction::centered_box(1).unwrap(),
            MarkingRule::default(),
            3,
            &settings,
        );
        let (problem, _) = out.last.unwrap();
        for (l, &r) in problem.rho.values().iter().enumerate() {
            assert_eq!(r, problem.mesh.local_mesh_size(l).powi(2));
        }
    }

    #[test]
    fn linear_target_stops_early() {
        // ubar = 0 is reproduced exactly: nothing is marked after level 0.
        let out = adaptive_solve(
            &build_unit_square_mesh(),
            &TargetFunction::zero(),
            MarkingRule::default(),
            5,
            &SolveSettings::default(),
        );
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].error, 0.0);
        assert!(out.note.is_some());
    }

    #[test]
    fn uniform_growth_and_budget() {
        let settings = SolveSettings { regularization: RegularizationKind::Energy, max_dofs: 300, ..Default::default() };
        let out = uniform_solve(&build_unit_square_mesh(), &TargetFunction::centered_box(2).unwrap(), 5, &settings);
        let rs = out.records;
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[1].elements, 4 * rs[0].elements);
        assert!(out.note.unwrap().contains("budget"));
        let l2 = SolveSettings { regularization: RegularizationKind::L2, ..Default::default() };
        let out = uniform_solve(&build_unit_square_mesh(), &TargetFunction::centered_box(2).unwrap(), 1, &l2);
        assert!(out.error.is_none() && out.records.len() == 2);
    }

    #[test]
    fn kuhn_scale() {
        assert_eq!(kuhn_h_scale(1), 1.0);
        assert!((kuhn_h_scale(2) - 2f64.sqrt()).abs() < 1e-15);
        let m = crate::mesh::build_unit_cube_mesh(4).unwrap();
        assert!((kuhn_h_scale(3) * m.local_mesh_size(0) - 0.25).abs() < 1e-15);
    }
}
