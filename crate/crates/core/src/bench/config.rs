//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::adaptivity::{kuhn_h_scale, MarkingRule, RegularizationKind};
use crate::error::{Error, Result};
use crate::linalg::{SolverKind, DEFAULT_TOL};
use crate::ocp::InnerSolve;

/// Target function of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Indicator of the box `(0.25, 0.75)^n`.
    Indicator,
    /// `prod_k sin(pi x_k)`.
    Sine,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Indicator => "indicator",
            Self::Sine => "sine",
        }
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(Self::Indicator),
            "sine" => Ok(Self::Sine),
            _ => Err(Error::Parse(format!("unknown target `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refinement {
    Adaptive { theta: f64 },
    Uniform,
}

/// How the local mesh size is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HConvention {
    /// Edge of the grid cell a Kuhn simplex of the same volume belongs to,
    /// `(n! |T|)^(1/n)`.
    #[default]
    Cell,
    /// `|T|^(1/n)`.
    Volume,
}

impl HConvention {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cell => "cell",
            Self::Volume => "volume",
        }
    }

    pub fn scale(self, dim: usize) -> f64 {
        match self {
            Self::Cell => kuhn_h_scale(dim),
            Self::Volume => 1.0,
        }
    }
}

impl FromStr for HConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell" => Ok(Self::Cell),
            "volume" => Ok(Self::Volume),
            _ => Err(Error::Parse(format!("unknown h convention `{s}`"))),
        }
    }
}

fn inner_name(inner: InnerSolve) -> &'static str {
    match inner {
        InnerSolve::Direct => "direct",
        InnerSolve::Pcg => "pcg",
    }
}

fn parse_inner(s: &str) -> Result<InnerSolve> {
    match s {
        "direct" => Ok(InnerSolve::Direct),
        "pcg" => Ok(InnerSolve::Pcg),
        _ => Err(Error::Parse(format!("unknown inner solve `{s}`"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub target: TargetKind,
    pub regularization: RegularizationKind,
    pub refinement: Refinement,
    pub solvers: Vec<SolverKind>,
    pub max_levels: usize,
    pub tol: f64,
    pub inner: InnerSolve,
    pub h_convention: HConvention,
    pub quadrature_depth: usize,
    pub dof_budget: usize,
    pub cg_budget: usize,
    /// Number of trailing levels used for the rate fit.
    pub rate_window: usize,
    /// Write a VTK snapshot per level.
    pub vtk: bool,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

pub const DEFAULT_DOF_BUDGET: usize = 2_000_000;

impl ExperimentConfig {
    /// Adaptive diffusion regularization on the indicator benchmark.
    pub fn for_dim(dim: usize) -> Self {
        let max_levels = match dim {
            1 => 30,
            2 => 14,
            _ => 10,
        };
        Self {
            dim,
            target: TargetKind::Indicator,
            regularization: RegularizationKind::Diffusion,
            refinement: Refinement::Adaptive { theta: 0.5 },
            solvers: vec![SolverKind::Pcg],
            max_levels,
            tol: DEFAULT_TOL,
            inner: InnerSolve::Direct,
            h_convention: HConvention::Cell,
            quadrature_depth: crate::assembly::QuadratureSpec::default().depth,
            dof_budget: DEFAULT_DOF_BUDGET,
            cg_budget: 200_000,
            rate_window: 5,
            vtk: false,
            out_dir: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidArgument(format!("dimension {} not in 1..=3", self.dim)));
        }
        if let Refinement::Adaptive { theta } = self.refinement {
            MarkingRule::new(theta)?;
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidArgument("empty solver list".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} not in (0, 1)", self.tol)));
        }
        if self.rate_window < 2 {
            return Err(Error::InvalidArgument("rate window below 2".into()));
        }
        crate::assembly::QuadratureSpec::with_depth(self.quadrature_depth).validate(self.dim)
    }

    /// Parses the `key = value` format written by `Display`. Blank lines and
    /// lines starting with `#` are skipped; keys not given keep the defaults
    /// of [`ExperimentConfig::for_dim`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", no + 1)))?;
            let k = k.trim();
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        let dim = match map.remove("dim") {
            Some(v) => parse_num::<usize>("dim", &v)?,
            None => 2,
        };
        let mut c = Self::for_dim(dim);
        let theta = map.remove("theta").map(|v| parse_num::<f64>("theta", &v)).transpose()?;
        for (k, v) in map {
            match k.as_str() {
                "target" => c.target = v.parse()?,
                "regularization" => c.regularization = v.parse()?,
                "refinement" => {
                    c.refinement = match v.as_str() {
                        "adaptive" => Refinement::Adaptive { theta: 0.5 },
                        "uniform" => Refinement::Uniform,
                        _ => return Err(Error::Parse(format!("unknown refinement `{v}`"))),
                    }
                }
                "solvers" => {
                    c.solvers = v
                        .split(',')
                        .map(|s| s.trim().parse::<SolverKind>().map_err(Error::Parse))
                        .collect::<Result<_>>()?
                }
                "levels" => c.max_levels = parse_num("levels", &v)?,
                "tol" => c.tol = parse_num("tol", &v)?,
                "inner" => c.inner = parse_inner(&v)?,
                "h_convention" => c.h_convention = v.parse()?,
                "quadrature_depth" => c.quadrature_depth = parse_num("quadrature_depth", &v)?,
                "dof_budget" => c.dof_budget = parse_num("dof_budget", &v)?,
                "cg_budget" => c.cg_budget = parse_num("cg_budget", &v)?,
                "rate_window" => c.rate_window = parse_num("rate_window", &v)?,
                "vtk" => c.vtk = parse_num("vtk", &v)?,
                "out" => c.out_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
                "seed" => c.seed = parse_num("seed", &v)?,
                _ => return Err(Error::Parse(format!("unknown key `{k}`"))),
            }
        }
        if let (Some(t), Refinement::Adaptive { theta }) = (theta, &mut c.refinement) {
            *theta = t;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("invalid value `{v}` for `{key}`")))
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim = {}", self.dim)?;
        writeln!(f, "target = {}", self.target.name())?;
        writeln!(f, "regularization = {}", self.regularization.name())?;
        match self.refinement {
            Refinement::Adaptive { theta } => {
                writeln!(f, "refinement = adaptive")?;
                writeln!(f, "theta = {theta}")?;
            }
            Refinement::Uniform => writeln!(f, "refinement = uniform")?,
        }
        let solvers: Vec<&str> = self.solvers.iter().map(|s| s.name()).collect();
        writeln!(f, "solvers = {}", solvers.join(","))?;
        writeln!(f, "levels = {}", self.max_levels)?;
        writeln!(f, "tol = {}", self.tol)?;
        writeln!(f, "inner = {}", inner_name(self.inner))?;
        writeln!(f, "h_convention = {}", self.h_convention.name())?;
        writeln!(f, "quadrature_depth = {}", self.quadrature_depth)?;
        writeln!(f, "dof_budget = {}", self.dof_budget)?;
        writeln!(f, "cg_budget = {}", self.cg_budget)?;
        writeln!(f, "rate_window = {}", self.rate_window)?;
        writeln!(f, "vtk = {}", self.vtk)?;
        writeln!(f, "out = {}", self.out_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default())?;
        writeln!(f, "seed = {}", self.seed)
    }
}
