//! Mesh output: legacy ASCII VTK and a line-oriented text dump.

use std::io::{BufRead, Write};

use super::{DiagonalSplit, SimplicialMesh};
use crate::error::{Error, Result};

/// Named scalar fields attached to a VTK snapshot.
#[derive(Debug, Clone, Default)]
pub struct VtkData {
    pub cell_scalars: Vec<(String, Vec<f64>)>,
    pub point_scalars: Vec<(String, Vec<f64>)>,
}

impl VtkData {
    pub fn cell(mut self, name: &str, values: Vec<f64>) -> Self {
        self.cell_scalars.push((name.to_string(), values));
        self
    }

    pub fn point(mut self, name: &str, values: Vec<f64>) -> Self {
        self.point_scalars.push((name.to_string(), values));
        self
    }
}

/// Writes a legacy ASCII VTK unstructured grid.
pub fn write_vtk<W: Write>(mesh: &SimplicialMesh, data: &VtkData, mut out: W) -> Result<()> {
    let nv = mesh.dim() + 1;
    let cell_type = match mesh.dim() {
        1 => 3,
        2 => 5,
        _ => 10,
    };
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "varreg mesh revision {}", mesh.revision())?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_vertices())?;
    for x in mesh.vertices() {
        writeln!(out, "{:e} {:e} {:e}", x[0], x[1], x[2])?;
    }
    writeln!(out, "CELLS {} {}", mesh.num_elements(), mesh.num_elements() * (nv + 1))?;
    for e in mesh.elements() {
        write!(out, "{nv}")?;
        for v in e {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.num_elements())?;
    for _ in 0..mesh.num_elements() {
        writeln!(out, "{cell_type}")?;
    }
    write_scalars(&mut out, "CELL_DATA", mesh.num_elements(), &data.cell_scalars)?;
    write_scalars(&mut out, "POINT_DATA", mesh.num_vertices(), &data.point_scalars)?;
    Ok(())
}

fn write_scalars<W: Write>(
    out: &mut W,
    section: &str,
    len: usize,
    fields: &[(String, Vec<f64>)],
) -> Result<()> {
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(out, "{section} {len}")?;
    for (name, values) in fields {
        if values.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: values.len() });
        }
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(out, "{v:e}")?;
        }
    }
    Ok(())
}

/// Plain-text dump: a header line, one vertex per line, one element per line
/// (vertex indices followed by the bisection tag).
pub fn write_dump<W: Write>(mesh: &SimplicialMesh, mut out: W) -> Result<()> {
    let split = match mesh.diagonal_split() {
        DiagonalSplit::None => "none",
        DiagonalSplit::Kuhn => "kuhn",
    };
    writeln!(
        out,
        "dim {} vertices {} elements {} split {split}",
        mesh.dim(),
        mesh.num_vertices(),
        mesh.num_elements()
    )?;
    for x in mesh.vertices() {
        let coords: Vec<String> = x[..mesh.dim()].iter().map(|c| format!("{c:?}")).collect();
        writeln!(out, "{}", coords.join(" "))?;
    }
    for (l, e) in mesh.elements().enumerate() {
        let ids: Vec<String> = e.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", ids.join(" "), mesh.tag(l))?;
    }
    Ok(())
}

/// Reads a mesh written by [`write_dump`].
pub fn read_dump<R: BufRead>(input: R) -> Result<SimplicialMesh> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty mesh dump".into()))??;
    let words: Vec<&str> = header.split_whitespace().collect();
    let field = |key: &str| -> Result<&str> {
        words
            .iter()
            .position(|w| *w == key)
            .and_then(|i| words.get(i + 1).copied())
            .ok_or_else(|| Error::Parse(format!("missing `{key}` in header")))
    };
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
    let dim = parse_usize(field("dim")?)?;
    let nverts = parse_usize(field("vertices")?)?;
    let nels = parse_usize(field("elements")?)?;
    let split = match field("split")? {
        "kuhn" => DiagonalSplit::Kuhn,
        _ => DiagonalSplit::None,
    };

    let mut vertices = Vec::with_capacity(nverts);
    for _ in 0..nverts {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated vertex list".into()))??;
        let mut x = [0.0; 3];
        for (c, tok) in line.split_whitespace().enumerate().take(3) {
            x[c] = tok.parse().map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
        }
        vertices.push(x);
    }
    let mut elements = Vec::with_capacity(nels * (dim + 1));
    let mut tags = Vec::with_capacity(nels);
    for _ in 0..nels {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated element list".into()))??;
        let ids: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string())))
            .collect::<Result<_>>()?;
        if ids.len() != dim + 2 {
            return Err(Error::Parse(format!("element line `{line}` has wrong arity")));
        }
        elements.extend_from_slice(&ids[..=dim]);
        tags.push(ids[dim + 1] as u8);
    }
    SimplicialMesh::from_parts(dim, vertices, elements, tags, split)
}
