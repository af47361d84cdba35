use std::sync::OnceLock;

use super::OcpProblem;
use crate::assembly::{
    assemble_load, assemble_mass, assemble_stiffness, assemble_weighted_stiffness, lump_mass, DofMap,
    QuadratureSpec, RegularizationField, TargetFunction,
};
use crate::error::{Error, Result};
use crate::linalg::{
    bp_cg, gmres_weighted, lanczos_extreme_ritz, pcg, vec, BpBlocks, ChainFactorization, CsrMatrix, DiagonalMatrix, LinearOperator,
    ScaledOperator, SolverKind, SolverReport, SpdFactorization, INNER_TOL,
};
use crate::mesh::SimplicialMesh;

pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Bramble-Pasciak scaling `C = delta K_rho` when `K_rho^{-1}` is exact.
pub const DEFAULT_BP_DELTA: f64 = 0.5;

/// Number of Lanczos steps used to scale an approximate `K_rho^{-1}`.
const BP_LANCZOS_STEPS: usize = 20;

/// How `K_rho^{-1}` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerSolve {
    /// Sparse Cholesky factorization, computed once.
    #[default]
    Direct,
    /// Jacobi-preconditioned CG to a relative residual of `1e-12`.
    Pcg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemOptions {
    pub inner: InnerSolve,
    /// For a constant `rho`, use `K K_rho^{-1} K = rho K` instead of
    /// applying `K_rho^{-1}` in the Schur operator.
    pub exploit_constant_rho: bool,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self { inner: InnerSolve::Direct, exploit_constant_rho: true }
    }
}

/// Action of `K_rho^{-1}`.
pub enum KRhoInverse {
    Direct(SpdFactorization),
    /// Direct solve on an interval mesh, accurate for any grading.
    Chain(ChainFactorization),
    Pcg { matrix: CsrMatrix, jacobi: DiagonalMatrix },
}

impl KRhoInverse {
    fn new(k_rho: &CsrMatrix, inner: InnerSolve) -> Result<Self> {
        Ok(match inner {
            InnerSolve::Direct => Self::Direct(SpdFactorization::new(k_rho)?),
            InnerSolve::Pcg => Self::Pcg {
                matrix: k_rho.clone(),
                jacobi: DiagonalMatrix::new(k_rho.diagonal()).inverse(),
            },
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Direct(_) | Self::Chain(_) => "direct",
            Self::Pcg { .. } => "pcg",
        }
    }
}

impl LinearOperator for KRhoInverse {
    fn dim(&self) -> usize {
        match self {
            Self::Direct(f) => f.dim(),
            Self::Chain(f) => f.dim(),
            Self::Pcg { matrix, .. } => matrix.nrows(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Self::Direct(f) => f.apply(x, y),
            Self::Chain(f) => f.apply(x, y),
            Self::Pcg { matrix, jacobi } => {
                let (sol, _) = pcg(matrix, jacobi, x, INNER_TOL, DEFAULT_MAX_ITER);
                y.copy_from_slice(&sol);
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Assembled blocks of the optimality system on one mesh.
pub struct DiscreteSystem {
    pub k: CsrMatrix,
    pub k_rho: CsrMatrix,
    pub m: CsrMatrix,
    pub lumped: DiagonalMatrix,
    pub f: Vec<f64>,
    pub options: SystemOptions,
    lumped_inv: DiagonalMatrix,
    constant_rho: Option<f64>,
    k_rho_inv: OnceLock<KRhoInverse>,
    revision: u64,
}

impl std::fmt::Debug for DiscreteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteSystem")
            .field("dofs", &self.dim())
            .field("constant_rho", &self.constant_rho)
            .field("revision", &self.revision)
            .finish()
    }
}

impl DiscreteSystem {
    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// The common value of `rho` if it is the same on every element.
    pub fn constant_rho(&self) -> Option<f64> {
        self.constant_rho
    }

    pub fn lumped_inverse(&self) -> &DiagonalMatrix {
        &self.lumped_inv
    }

    /// `K_rho^{-1}`, factorized on first use.
    pub fn k_rho_inverse(&self) -> Result<&KRhoInverse> {
        if let Some(inv) = self.k_rho_inv.get() {
            return Ok(inv);
        }
        let inv = KRhoInverse::new(&self.k_rho, self.options.inner)?;
        Ok(self.k_rho_inv.get_or_init(|| inv))
    }

    fn schur_shortcut(&self) -> Option<f64> {
        self.constant_rho.filter(|_| self.options.exploit_constant_rho)
    }
}

pub fn build_system(problem: &OcpProblem, options: SystemOptions) -> Result<DiscreteSystem> {
    problem.check()?;
    let OcpProblem { mesh, dofs, target, rho, quadrature } = problem;
    let k = assemble_stiffness(mesh, dofs)?;
    let k_rho = assemble_weighted_stiffness(mesh, dofs, rho)?;
    let m = assemble_mass(mesh, dofs)?;
    let lumped = lump_mass(&m)?;
    let f = assemble_load(mesh, dofs, target, quadrature)?;
    if let Some(i) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("load vector entry {i} is not finite")));
    }
    let first = rho.values()[0];
    let constant_rho = rho.values().iter().all(|&v| v == first).then_some(first);
    let sys = DiscreteSystem {
        lumped_inv: lumped.inverse(),
        k,
        k_rho,
        m,
        lumped,
        f,
        options,
        constant_rho,
        k_rho_inv: OnceLock::new(),
        revision: mesh.revision(),
    };
    if mesh.dim() == 1 && options.inner == InnerSolve::Direct {
        let chain = interval_chain(mesh, dofs, rho)?;
        let _ = sys.k_rho_inv.set(KRhoInverse::Chain(chain));
    }
    if sys.schur_shortcut().is_none() {
        sys.k_rho_inverse()?;
    }
    Ok(sys)
}

/// `K_rho` of an interval mesh as a path of conductances `1 / (rho_l h_l)`.
fn interval_chain(mesh: &SimplicialMesh, dofs: &DofMap, rho: &RegularizationField) -> Result<ChainFactorization> {
    let mut by_x: Vec<usize> = (0..mesh.num_vertices()).collect();
    by_x.sort_by(|&a, &b| mesh.vertex(a)[0].total_cmp(&mesh.vertex(b)[0]));
    let mut rank = vec![0usize; mesh.num_vertices()];
    for (r, &v) in by_x.iter().enumerate() {
        rank[v] = r;
    }
    let mut c = vec![0.0; mesh.num_vertices() - 1];
    for l in 0..mesh.num_elements() {
        let e = mesh.element(l);
        let (a, b) = (rank[e[0] as usize], rank[e[1] as usize]);
        if a.abs_diff(b) != 1 {
            return Err(Error::InvalidArgument("interval mesh elements are not consecutive".into()));
        }
        c[a.min(b)] = 1.0 / (rho.values()[l] * mesh.volume(l));
    }
    let order = by_x[1..by_x.len() - 1]
        .iter()
        .map(|&v| dofs.dof(v).ok_or_else(|| Error::InvalidArgument("interior vertex without dof".into())))
        .collect::<Result<Vec<_>>>()?;
    ChainFactorization::new(c, order)
}

/// State, adjoint and (optionally) control coefficients.
#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Option<Vec<f64>>,
    pub report: SolverReport,
    /// Relative residuals of the two block equations, see [`verify_residuals`].
    pub residuals: [f64; 2],
    pub revision: u64,
}

/// `S = M + K K_rho^{-1} K`, applied matrix-free.
pub struct SchurOperator<'a> {
    sys: &'a DiscreteSystem,
    inv: Option<&'a KRhoInverse>,
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        let mut kx = vec![0.0; n];
        self.sys.k.apply(x, &mut kx);
        self.sys.m.apply(x, y);
        match self.inv {
            None => {
                let rho = self.sys.schur_shortcut().expect("shortcut requires constant rho");
                vec::axpy(rho, &kx, y);
            }
            Some(inv) => {
                let mut w = vec![0.0; n];
                inv.apply(&kx, &mut w);
                self.sys.k.apply(&w, &mut kx);
                vec::axpy(1.0, &kx, y);
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

pub fn schur_operator(sys: &DiscreteSystem) -> Result<SchurOperator<'_>> {
    let inv = match sys.schur_shortcut() {
        Some(_) => None,
        None => Some(sys.k_rho_inverse()?),
    };
    Ok(SchurOperator { sys, inv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchurMethod {
    Cg,
    PcgLump,
}

/// Solves the Schur complement equation and recovers `p = -K_rho^{-1} K u`.
pub fn solve_schur(sys: &DiscreteSystem, method: SchurMethod, tol: f64, max_iter: usize) -> Result<OcpSolution> {
    let s = schur_operator(sys)?;
    let (u, mut report) = match method {
        SchurMethod::Cg => crate::linalg::cg(&s, &sys.f, tol, max_iter),
        SchurMethod::PcgLump => pcg(&s, &sys.lumped_inv, &sys.f, tol, max_iter),
    };
    report.inner = Some(s.inv.map_or("none", |i| i.label()));
    let p = match s.inv {
        None => {
            let rho = sys.constant_rho.expect("constant");
            u.iter().map(|v| -rho * v).collect()
        }
        Some(inv) => {
            let mut p = inv.apply_vec(&sys.k.apply_vec(&u));
            vec::scale(-1.0, &mut p);
            p
        }
    };
    finish(sys, u, p, report)
}

fn finish(sys: &DiscreteSystem, u: Vec<f64>, p: Vec<f64>, report: SolverReport) -> Result<OcpSolution> {
    let residuals = verify_residuals(sys, &u, &p)?;
    Ok(OcpSolution { u, p, z: None, report, residuals, revision: sys.revision })
}

fn lump_norm(lump_inv: &DiagonalMatrix, r: &[f64]) -> f64 {
    let d = lump_inv.diag();
    vec::pairwise_sum(0, r.len(), |i| r[i] * r[i] * d[i]).sqrt()
}

/// Residuals of `K_rho p + K u = 0` in the `K_rho^{-1}` norm and of
/// `M u - K p = f` in the `lump[M]^{-1}` norm, both relative to
/// `||f||_{lump^{-1}}` (the norms of the block preconditioner).
pub fn verify_residuals(sys: &DiscreteSystem, u: &[f64], p: &[f64]) -> Result<[f64; 2]> {
    let mut r1 = sys.k_rho.apply_vec(p);
    vec::axpy(1.0, &sys.k.apply_vec(u), &mut r1);
    let n1 = match sys.schur_shortcut() {
        Some(rho) => {
            // K_rho = K / rho, so r1 = K e with e = u + p / rho.
            let e: Vec<f64> = u.iter().zip(p).map(|(a, b)| a + b / rho).collect();
            (rho * vec::dot(&e, &sys.k.apply_vec(&e))).max(0.0).sqrt()
        }
        None => vec::dot(&r1, &sys.k_rho_inverse()?.apply_vec(&r1)).max(0.0).sqrt(),
    };
    let mut r2 = sys.f.clone();
    vec::axpy(-1.0, &sys.m.apply_vec(u), &mut r2);
    vec::axpy(1.0, &sys.k.apply_vec(p), &mut r2);
    let scale = lump_norm(&sys.lumped_inv, &sys.f);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    Ok([n1 / scale, lump_norm(&sys.lumped_inv, &r2) / scale])
}

/// `[[K_rho, K], [-K, M]]` acting on `[p; u]`.
struct CoupledOperator<'a> {
    sys: &'a DiscreteSystem,
}

impl LinearOperator for CoupledOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.sys.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.sys.dim();
        let (p, u) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        let mut t = vec![0.0; n];
        self.sys.k_rho.apply(p, y1);
        self.sys.k.apply(u, &mut t);
        vec::axpy(1.0, &t, y1);
        self.sys.m.apply(u, y2);
        self.sys.k.apply(p, &mut t);
        vec::axpy(-1.0, &t, y2);
    }
}

/// `diag(K_rho^{-1}, lump[M]^{-1})`.
struct BlockDiagonal<'a> {
    first: &'a dyn LinearOperator,
    second: &'a DiagonalMatrix,
}

impl LinearOperator for BlockDiagonal<'_> {
    fn dim(&self) -> usize {
        self.first.dim() + self.second.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.first.dim();
        let (x1, x2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        self.first.apply(x1, y1);
        self.second.apply(x2, y2);
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Left-preconditioned GMRES on the nonsymmetric coupled system with
/// `P^{-1} = diag(K_rho^{-1}, lump[M]^{-1})`. Arnoldi runs in the
/// `diag(K_rho, lump[M])` inner product, so the stopping test is on
/// `r^T P^{-1} r` as for PCG and both block residuals count in their natural
/// norms.
pub fn solve_coupled_gmres(sys: &DiscreteSystem, tol: f64, max_iter: usize) -> Result<OcpSolution> {
    let inv = sys.k_rho_inverse()?;
    let mut sol = solve_coupled_gmres_with(sys, inv, tol, max_iter)?;
    sol.report.inner = Some(inv.label());
    Ok(sol)
}

/// As [`solve_coupled_gmres`] with a caller-supplied approximation of `K_rho^{-1}`.
pub fn solve_coupled_gmres_with(
    sys: &DiscreteSystem,
    k_rho_approx: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
) -> Result<OcpSolution> {
    let n = sys.dim();
    let a = CoupledOperator { sys };
    let prec = BlockDiagonal { first: k_rho_approx, second: &sys.lumped_inv };
    let mut b = vec![0.0; 2 * n];
    b[n..].copy_from_slice(&sys.f);
    let weight = BlockDiagonal { first: &sys.k_rho, second: &sys.lumped };
    let (x, mut report) = gmres_weighted(&a, &prec, &weight, &b, tol, max_iter);
    report.inner = Some("approximate");
    let (p, u) = x.split_at(n);
    finish(sys, u.to_vec(), p.to_vec(), report)
}

/// Bramble-Pasciak CG on `[[K_rho, K], [K, -M]] [p; u] = [0; -f]` with
/// `C = delta K_rho` and `S = lump[M]`.
pub fn solve_coupled_bpcg(sys: &DiscreteSystem, delta: f64, tol: f64, max_iter: usize) -> Result<OcpSolution> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("scaling delta = {delta} must lie in (0, 1)")));
    }
    let inv = sys.k_rho_inverse()?;
    let c_inv = ScaledOperator { alpha: 1.0 / delta, inner: inv };
    let mut sol = bpcg_with(sys, &c_inv, tol, max_iter)?;
    sol.report.inner = Some(inv.label());
    Ok(sol)
}

/// Bramble-Pasciak CG with an approximate `K_rho^{-1}` (for instance a
/// multigrid cycle). `C^{-1} = approx / delta` with
/// `delta = 0.9 lambda_min(approx K_rho)` from a short Lanczos run, so that
/// `C < K_rho` holds up to the accuracy of the estimate.
pub fn solve_coupled_bpcg_approx(
    sys: &DiscreteSystem,
    approx: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
) -> Result<OcpSolution> {
    let ritz = lanczos_extreme_ritz(&sys.k_rho, approx, BP_LANCZOS_STEPS);
    if !(ritz.min > 0.0) {
        return Err(Error::Solver {
            solver: "bpcg".into(),
            reason: "approximate inverse is not positive definite".into(),
        });
    }
    let delta = 0.9 * ritz.min;
    let c_inv = ScaledOperator { alpha: 1.0 / delta, inner: approx };
    let mut sol = bpcg_with(sys, &c_inv, tol, max_iter)?;
    sol.report.inner = Some("approximate");
    Ok(sol)
}

fn bpcg_with(sys: &DiscreteSystem, c_inv: &dyn LinearOperator, tol: f64, max_iter: usize) -> Result<OcpSolution> {
    let n = sys.dim();
    let blocks = BpBlocks { a: &sys.k_rho, b: &sys.k, bt: &sys.k, d: &sys.m };
    let f1 = vec![0.0; n];
    let f2: Vec<f64> = sys.f.iter().map(|v| -v).collect();
    let (p, u, report) = bp_cg(&blocks, c_inv, &sys.lumped_inv, &f1, &f2, tol, max_iter);
    finish(sys, u, p, report)
}

/// Control coefficients from `M z = K u`.
pub fn recover_control(sys: &DiscreteSystem, solution: &OcpSolution) -> Result<Vec<f64>> {
    if solution.revision != sys.revision {
        return Err(Error::RevisionMismatch { expected: sys.revision, got: solution.revision });
    }
    let rhs = sys.k.apply_vec(&solution.u);
    let (z, rep) = pcg(&sys.m, &sys.lumped_inv, &rhs, INNER_TOL, DEFAULT_MAX_ITER);
    if !rep.converged {
        return Err(Error::Solver { solver: "pcg".into(), reason: "mass matrix solve did not converge".into() });
    }
    Ok(z)
}

/// Dispatches on the solver kind: `cg` and `pcg` solve the Schur
/// complement equation, `gmres` and `bpcg` the coupled system.
pub fn solve(sys: &DiscreteSystem, kind: SolverKind, tol: f64) -> Result<OcpSolution> {
    match kind {
        SolverKind::Cg => solve_schur(sys, SchurMethod::Cg, tol, DEFAULT_MAX_ITER.max(10 * sys.dim())),
        SolverKind::Pcg => solve_schur(sys, SchurMethod::PcgLump, tol, DEFAULT_MAX_ITER),
        SolverKind::Gmres => solve_coupled_gmres(sys, tol, DEFAULT_MAX_ITER),
        SolverKind::BpCg => solve_coupled_bpcg(sys, DEFAULT_BP_DELTA, tol, DEFAULT_MAX_ITER),
    }
}

/// Regularization in `L2` with a constant `rho`: `K u + (1/rho) M p = 0`,
/// `K p - M u = -f`. Eliminating `p = -rho M^{-1} K u` gives
/// `(M + rho K M^{-1} K) u = f`, solved by PCG with `lump[M]`; the inner mass
/// solves use PCG with `lump[M]` as well. The control is `z = -p / rho`.
pub fn solve_l2_regularization_baseline(
    mesh: &SimplicialMesh,
    dofs: &DofMap,
    target: &TargetFunction,
    rho: f64,
    quadrature: &QuadratureSpec,
    tol: f64,
) -> Result<OcpSolution> {
    if !(rho > 0.0) {
        return Err(Error::NonPositiveRegularization { element: 0, value: rho });
    }
    let k = assemble_stiffness(mesh, dofs)?;
    let m = assemble_mass(mesh, dofs)?;
    let lump_inv = lump_mass(&m)?.inverse();
    let f = assemble_load(mesh, dofs, target, quadrature)?;
    let n = f.len();
    let mass_solve = |b: &[f64]| pcg(&m, &lump_inv, b, INNER_TOL, DEFAULT_MAX_ITER).0;
    let op = crate::linalg::FnOperator::new(n, true, |x: &[f64], y: &mut [f64]| {
        let w = mass_solve(&k.apply_vec(x));
        m.apply(x, y);
        vec::axpy(rho, &k.apply_vec(&w), y);
    });
    let (u, mut report) = pcg(&op, &lump_inv, &f, tol, DEFAULT_MAX_ITER);
    report.inner = Some("pcg-mass");
    let z = mass_solve(&k.apply_vec(&u));
    let p: Vec<f64> = z.iter().map(|v| -rho * v).collect();

    let mut r1 = k.apply_vec(&u);
    let scale1 = lump_norm(&lump_inv, &r1);
    vec::axpy(1.0 / rho, &m.apply_vec(&p), &mut r1);
    let mut r2 = k.apply_vec(&p);
    vec::axpy(-1.0, &m.apply_vec(&u), &mut r2);
    vec::axpy(1.0, &f, &mut r2);
    let rel = |r: &[f64], s: f64| if s > 0.0 { lump_norm(&lump_inv, r) / s } else { lump_norm(&lump_inv, r) };
    let residuals = [rel(&r1, scale1), rel(&r2, lump_norm(&lump_inv, &f))];
    Ok(OcpSolution { u, p, z: Some(z), report, residuals, revision: mesh.revision() })
}
