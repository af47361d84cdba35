//! Sparse storage, a sparse Cholesky factorization, and the Krylov solvers
//! used on the discrete optimality system.

mod bpcg;
mod chain;
mod cholesky;
mod csr;
mod gmres;
mod krylov;
mod lanczos;
mod market;
mod operator;
mod report;
pub mod vec;

pub use bpcg::{bp_cg, BpBlocks};
pub use chain::ChainFactorization;
pub use cholesky::SpdFactorization;
pub use csr::{CsrMatrix, DiagonalMatrix};
pub use gmres::{gmres, gmres_weighted};
pub use krylov::{cg, pcg};
pub use lanczos::{lanczos_extreme_ritz, RitzBounds};
pub use market::{read_matrix_market, write_matrix_market};
pub use operator::{FnOperator, IdentityOperator, LinearOperator, ScaledOperator};
pub use report::{SolverKind, SolverReport};

/// Tolerance for the relative preconditioned residual used by every outer solve.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Tolerance used for iterative inner solves with `K_rho`.
pub const INNER_TOL: f64 = 1e-12;
