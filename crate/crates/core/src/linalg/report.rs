use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Cg,
    Pcg,
    Gmres,
    BpCg,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Cg => "cg",
            SolverKind::Pcg => "pcg",
            SolverKind::Gmres => "gmres",
            SolverKind::BpCg => "bpcg",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cg" => Ok(SolverKind::Cg),
            "pcg" => Ok(SolverKind::Pcg),
            "gmres" => Ok(SolverKind::Gmres),
            "bpcg" => Ok(SolverKind::BpCg),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub solver: SolverKind,
    pub dofs: usize,
    pub iterations: usize,
    /// Final relative (preconditioned) residual.
    pub residual: f64,
    pub converged: bool,
    /// A nonpositive curvature or inner product was met.
    pub breakdown: bool,
    /// GMRES made no progress over a window of iterations.
    pub stagnated: bool,
    /// How `K_rho^{-1}` was applied, when relevant.
    pub inner: Option<&'static str>,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

impl SolverReport {
    pub(crate) fn new(solver: SolverKind, dofs: usize) -> Self {
        Self {
            solver,
            dofs,
            iterations: 0,
            residual: 1.0,
            converged: false,
            breakdown: false,
            stagnated: false,
            inner: None,
            history: Vec::new(),
        }
    }

    pub const CSV_HEADER: &'static str = "solver,dofs,iterations,residual";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{:e}", self.solver, self.dofs, self.iterations, self.residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_row_format() {
        let mut r = SolverReport::new(SolverKind::Pcg, 27);
        r.iterations = 7;
        r.residual = 5e-7;
        assert_eq!(r.csv_row(), "pcg,27,7,5e-7");
        assert_eq!("bpcg".parse::<SolverKind>(), Ok(SolverKind::BpCg));
        assert!("minres".parse::<SolverKind>().is_err());
    }
}
