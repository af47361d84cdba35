use std::io::{BufRead, Write};

use super::OcpSolution;
use crate::error::{Error, Result};

/// Coefficient vectors of a solution, tagged with the mesh revision they
/// belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionVectors {
    pub revision: u64,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub z: Option<Vec<f64>>,
}

impl From<&OcpSolution> for SolutionVectors {
    fn from(s: &OcpSolution) -> Self {
        Self { revision: s.revision, u: s.u.clone(), p: s.p.clone(), z: s.z.clone() }
    }
}

/// Text format: `revision R dofs N control yes|no`, then one line `u p [z]`
/// per dof. Values round-trip exactly.
pub fn write_solution<W: Write>(s: &SolutionVectors, mut out: W) -> Result<()> {
    let n = s.u.len();
    if s.p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.p.len() });
    }
    if let Some(z) = &s.z {
        if z.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: z.len() });
        }
    }
    let control = if s.z.is_some() { "yes" } else { "no" };
    writeln!(out, "revision {} dofs {n} control {control}", s.revision)?;
    for i in 0..n {
        match &s.z {
            Some(z) => writeln!(out, "{:?} {:?} {:?}", s.u[i], s.p[i], z[i])?,
            None => writeln!(out, "{:?} {:?}", s.u[i], s.p[i])?,
        }
    }
    Ok(())
}

pub fn read_solution<R: BufRead>(input: R) -> Result<SolutionVectors> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty solution file".into()))??;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (revision, n, control) = match words.as_slice() {
        ["revision", r, "dofs", n, "control", c] => (
            r.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?,
            n.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?,
            match *c {
                "yes" => true,
                "no" => false,
                other => return Err(Error::Parse(format!("control flag `{other}`"))),
            },
        ),
        _ => return Err(Error::Parse(format!("bad solution header `{header}`"))),
    };
    let width = if control { 3 } else { 2 };
    let mut cols = vec![Vec::with_capacity(n); width];
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated solution file".into()))??;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string())))
            .collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(Error::Parse(format!("line `{line}` has {} values, expected {width}", vals.len())));
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let z = if control { cols.pop() } else { None };
    let p = cols.pop().expect("two columns");
    let u = cols.pop().expect("two columns");
    Ok(SolutionVectors { revision, u, p, z })
}
