//! Adaptive P1 finite elements for distributed elliptic optimal control with
//! variable energy regularization.
//!
//! The regularization parameter is the piecewise constant function
//! `rho = h_l^2` on each simplex, which turns the energy regularization into a
//! diffusion problem with coefficient `1 / rho`. The discrete optimality system
//!
//! ```text
//! K_rho p + K u = 0,   M u - K p = f
//! ```
//!
//! is solved either through its Schur complement `(M + K K_rho^{-1} K) u = f`
//! with a lumped-mass preconditioned CG, with block-diagonally preconditioned
//! GMRES on the coupled system, or with Bramble-Pasciak CG on its symmetric
//! indefinite form. The adaptive loop marks elements by the maximum strategy
//! applied to the computable local errors `||u_h - target||_{L2(T)}`.

pub mod adaptivity;
pub mod assembly;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod ocp;

pub use error::{Error, Result};
