//! The discrete optimality system and its solvers.
//!
//! With state `u` and adjoint `p` on the interior dofs,
//!
//! ```text
//! K_rho p + K u = 0
//! M u - K p     = f
//! ```
//!
//! Eliminating `p = -K_rho^{-1} K u` gives the Schur complement equation
//! `(M + K K_rho^{-1} K) u = f`. The control satisfies `M z = K u`.

mod io;
mod system;

pub use io::{read_solution, write_solution, SolutionVectors};

pub use system::{
    build_system, recover_control, schur_operator, solve, solve_coupled_bpcg,
    solve_coupled_bpcg_approx, solve_coupled_gmres, solve_coupled_gmres_with,
    solve_l2_regularization_baseline, solve_schur, verify_residuals, DiscreteSystem, InnerSolve,
    KRhoInverse, OcpSolution, SchurMethod, SchurOperator, SystemOptions, DEFAULT_BP_DELTA,
    DEFAULT_MAX_ITER,
};

use crate::assembly::{DofMap, QuadratureSpec, RegularizationField, RegularizationMode, TargetFunction};
use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;

/// Per-element regularization for the given mode; see [`RegularizationField`].
pub fn build_regularization_field(mesh: &SimplicialMesh, mode: RegularizationMode) -> Result<RegularizationField> {
    match mode {
        RegularizationMode::Constant { rho } if !(rho > 0.0) => {
            Err(Error::NonPositiveRegularization { element: 0, value: rho })
        }
        RegularizationMode::ScaledLocal { epsilon } if !(epsilon > 0.0) => {
            Err(Error::NonPositiveRegularization { element: 0, value: epsilon })
        }
        _ => RegularizationField::build(mesh, mode),
    }
}

/// Mesh, dof numbering, target and regularization of one discrete problem.
#[derive(Debug, Clone)]
pub struct OcpProblem {
    pub mesh: SimplicialMesh,
    pub dofs: DofMap,
    pub target: TargetFunction,
    pub rho: RegularizationField,
    pub quadrature: QuadratureSpec,
}

impl OcpProblem {
    pub fn new(
        mesh: SimplicialMesh,
        target: TargetFunction,
        mode: RegularizationMode,
        quadrature: QuadratureSpec,
    ) -> Result<Self> {
        let rho = build_regularization_field(&mesh, mode)?;
        let dofs = DofMap::new(&mesh);
        Ok(Self { mesh, dofs, target, rho, quadrature })
    }

    /// Checks that dofs and regularization belong to the current mesh.
    pub fn check(&self) -> Result<()> {
        self.dofs.check(&self.mesh)?;
        if self.rho.revision() != self.mesh.revision() {
            return Err(Error::RevisionMismatch { expected: self.mesh.revision(), got: self.rho.revision() });
        }
        if self.rho.len() != self.mesh.num_elements() {
            return Err(Error::DimensionMismatch { expected: self.mesh.num_elements(), got: self.rho.len() });
        }
        Ok(())
    }
}
