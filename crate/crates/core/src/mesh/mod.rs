//! Conforming simplicial meshes of the unit interval, square and cube.
//!
//! Elements are stored with an ordered vertex list and a bisection tag in the
//! convention of Maubach's algorithm: for a simplex `(x0, .., xn)` with tag
//! `k`, the refinement edge is `x0 -- xk`. The structured initial meshes use
//! the Kuhn (Freudenthal) split with tag `n`, so every refinement edge is the
//! cube diagonal and bisection stays conforming under closure.

mod io;
mod refine;

pub use io::{read_dump, write_dump, write_vtk, VtkData};
pub use refine::{refine, refine_times, uniform_refine};

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

pub(crate) fn next_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Direction of the diagonal used to split each grid cell.
///
/// Only the lower-left to upper-right (Kuhn) direction is produced; it is kept
/// as mesh metadata so dumps and snapshots state how the mesh was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalSplit {
    /// Not applicable (1D) or not produced by a structured builder.
    None,
    /// Every cell is split along the diagonal from its minimum to its maximum corner.
    Kuhn,
}

/// A conforming simplicial triangulation of `(0,1)^n`, `n in {1,2,3}`.
///
/// Vertex coordinates are stored padded to three components. On the
/// benchmark meshes all coordinates are dyadic rationals, which `f64`
/// represents exactly, and midpoints of dyadic rationals remain exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    elements: Vec<u32>,
    tags: Vec<u8>,
    boundary: Vec<bool>,
    split: DiagonalSplit,
    revision: u64,
}

/// Geometric data of a single element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub element_index: usize,
    /// Length, area or volume of the element.
    pub volume: f64,
    /// `volume^(1/n)`.
    pub local_mesh_size: f64,
    pub vertices: Vec<[f64; 3]>,
}

fn on_unit_boundary(x: &[f64; 3], dim: usize) -> bool {
    x[..dim].iter().any(|&c| c == 0.0 || c == 1.0)
}

impl SimplicialMesh {
    /// Assembles a mesh from raw parts. Boundary flags are derived from the
    /// coordinates (a vertex is on the boundary iff a coordinate is 0 or 1).
    pub fn from_parts(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        elements: Vec<u32>,
        tags: Vec<u8>,
        split: DiagonalSplit,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")));
        }
        let nv = dim + 1;
        if elements.len() % nv != 0 || elements.len() / nv != tags.len() {
            return Err(Error::InvalidArgument(
                "element connectivity and tag lengths disagree".into(),
            ));
        }
        if let Some(&bad) = elements.iter().find(|&&v| v as usize >= vertices.len()) {
            return Err(Error::InvalidArgument(format!("vertex index {bad} out of range")));
        }
        if let Some(&t) = tags.iter().find(|&&t| t == 0 || t as usize > dim) {
            return Err(Error::InvalidArgument(format!("bisection tag {t} not in 1..={dim}")));
        }
        let boundary = vertices.iter().map(|x| on_unit_boundary(x, dim)).collect();
        Ok(Self {
            dim,
            vertices,
            elements,
            tags,
            boundary,
            split,
            revision: next_revision(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.tags.len()
    }

    pub fn num_interior_vertices(&self) -> usize {
        self.boundary.iter().filter(|&&b| !b).count()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64; 3] {
        &self.vertices[i]
    }

    /// Ordered vertex indices of element `l`.
    pub fn element(&self, l: usize) -> &[u32] {
        let nv = self.dim + 1;
        &self.elements[l * nv..(l + 1) * nv]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.elements.chunks_exact(self.dim + 1)
    }

    pub fn tag(&self, l: usize) -> u8 {
        self.tags[l]
    }

    pub fn tags(&self) -> &[u8] {
        &self.tags
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary_vertex(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn diagonal_split(&self) -> DiagonalSplit {
        self.split
    }

    /// Identifier unique to this mesh within the process.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// The designated bisection edge of element `l`.
    pub fn refinement_edge(&self, l: usize) -> (u32, u32) {
        let e = self.element(l);
        (e[0], e[self.tags[l] as usize])
    }

    pub(crate) fn raw_elements(&self) -> &[u32] {
        &self.elements
    }

    /// Signed volume `det[x1-x0, .., xn-x0] / n!`.
    pub fn signed_volume(&self, l: usize) -> f64 {
        let e = self.element(l);
        let x0 = self.vertices[e[0] as usize];
        let d = |k: usize, c: usize| self.vertices[e[k] as usize][c] - x0[c];
        match self.dim {
            1 => d(1, 0),
            2 => (d(1, 0) * d(2, 1) - d(1, 1) * d(2, 0)) / 2.0,
            _ => {
                let det = d(1, 0) * (d(2, 1) * d(3, 2) - d(2, 2) * d(3, 1))
                    - d(1, 1) * (d(2, 0) * d(3, 2) - d(2, 2) * d(3, 0))
                    + d(1, 2) * (d(2, 0) * d(3, 1) - d(2, 1) * d(3, 0));
                det / 6.0
            }
        }
    }

    pub fn volume(&self, l: usize) -> f64 {
        self.signed_volume(l).abs()
    }

    /// `h_l = volume^(1/n)`.
    pub fn local_mesh_size(&self, l: usize) -> f64 {
        let v = self.volume(l);
        match self.dim {
            1 => v,
            2 => v.sqrt(),
            _ => v.cbrt(),
        }
    }

    pub fn element_geometry(&self, l: usize) -> Result<ElementGeometry> {
        if l >= self.num_elements() {
            return Err(Error::ElementOutOfRange { index: l, len: self.num_elements() });
        }
        Ok(ElementGeometry {
            element_index: l,
            volume: self.volume(l),
            local_mesh_size: self.local_mesh_size(l),
            vertices: self.element(l).iter().map(|&v| self.vertices[v as usize]).collect(),
        })
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_elements()).map(|l| self.volume(l)).sum()
    }

    /// `(h_min, h_max)` over all elements.
    pub fn mesh_size_range(&self) -> (f64, f64) {
        (0..self.num_elements())
            .map(|l| self.local_mesh_size(l))
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), h| (lo.min(h), hi.max(h)))
    }

    /// Checks that the mesh is a conforming triangulation of the unit cube:
    /// every facet is shared by at most two elements, facets owned by a single
    /// element lie on the boundary, every element has positive volume, and the
    /// volumes sum to one.
    pub fn check_conforming(&self) -> Result<()> {
        let n = self.dim;
        let mut facets: HashMap<[u32; 3], u32> = HashMap::with_capacity(self.num_elements() * 2);
        for e in self.elements() {
            for skip in 0..=n {
                let mut key = [u32::MAX; 3];
                let mut k = 0;
                for (i, &v) in e.iter().enumerate() {
                    if i != skip {
                        key[k] = v;
                        k += 1;
                    }
                }
                key[..n].sort_unstable();
                *facets.entry(key).or_insert(0) += 1;
            }
        }
        for (key, count) in &facets {
            if *count > 2 {
                return Err(Error::InvalidArgument(format!(
                    "facet {:?} shared by {count} elements",
                    &key[..n]
                )));
            }
            if *count == 1 {
                let on_boundary = (0..n).any(|c| {
                    let first = self.vertices[key[0] as usize][c];
                    (first == 0.0 || first == 1.0)
                        && key[..n].iter().all(|&v| self.vertices[v as usize][c] == first)
                });
                if !on_boundary {
                    return Err(Error::InvalidArgument(format!(
                        "interior facet {:?} has a single neighbour (hanging node)",
                        &key[..n]
                    )));
                }
            }
        }
        if let Some(l) = (0..self.num_elements()).find(|&l| self.volume(l) <= 0.0) {
            return Err(Error::InvalidArgument(format!("element {l} is degenerate")));
        }
        let total = self.total_volume();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("element volumes sum to {total}")));
        }
        Ok(())
    }

    /// Smallest interior angle of a triangle, in radians (2D only).
    pub fn min_angle(&self, l: usize) -> f64 {
        assert_eq!(self.dim, 2, "min_angle is defined for triangles");
        let e = self.element(l);
        let p: Vec<[f64; 3]> = e.iter().map(|&v| self.vertices[v as usize]).collect();
        (0..3)
            .map(|i| {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let w = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * w[0] + u[1] * w[1])
                    / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (w[0] * w[0] + w[1] * w[1]).sqrt());
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean-ratio quality in `(0, 1]`; equals 1 for the regular simplex.
    pub fn shape_quality(&self, l: usize) -> f64 {
        let n = self.dim;
        if n == 1 {
            return 1.0;
        }
        let e = self.element(l);
        let mut sum_sq = 0.0;
        for i in 0..=n {
            for j in i + 1..=n {
                let a = self.vertices[e[i] as usize];
                let b = self.vertices[e[j] as usize];
                sum_sq += (0..n).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
            }
        }
        let v = self.volume(l);
        if n == 2 {
            4.0 * 3f64.sqrt() * v / sum_sq
        } else {
            12.0 * (3.0 * v).powf(2.0 / 3.0) / sum_sq
        }
    }
}

/// Uniform partition of `(0,1)` into `num_elements` segments.
pub fn build_interval_mesh(num_elements: usize) -> Result<SimplicialMesh> {
    if num_elements == 0 {
        return Err(Error::InvalidArgument("interval mesh needs at least one element".into()));
    }
    let vertices = (0..=num_elements)
        .map(|i| {
            let x = if i == num_elements { 1.0 } else { i as f64 / num_elements as f64 };
            [x, 0.0, 0.0]
        })
        .collect();
    let elements = (0..num_elements as u32).flat_map(|i| [i, i + 1]).collect();
    SimplicialMesh::from_parts(1, vertices, elements, vec![1; num_elements], DiagonalSplit::None)
}

/// The 32-triangle initial mesh of the unit square: a 4x4 grid with every
/// square split along its lower-left to upper-right diagonal.
pub fn build_unit_square_mesh() -> SimplicialMesh {
    build_square_grid_mesh(4).expect("4x4 grid is valid")
}

/// `m x m` grid of squares, each split into two Kuhn triangles.
pub fn build_square_grid_mesh(m: usize) -> Result<SimplicialMesh> {
    if m == 0 {
        return Err(Error::InvalidArgument("grid needs at least one cell per direction".into()));
    }
    let coord = |i: usize| if i == m { 1.0 } else { i as f64 / m as f64 };
    let idx = |i: usize, j: usize| (j * (m + 1) + i) as u32;
    let mut vertices = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            vertices.push([coord(i), coord(j), 0.0]);
        }
    }
    let mut elements = Vec::with_capacity(6 * m * m);
    for j in 0..m {
        for i in 0..m {
            // x0 = min corner, x2 = max corner; x1 steps along x or along y.
            elements.extend([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            elements.extend([idx(i, j), idx(i, j + 1), idx(i + 1, j + 1)]);
        }
    }
    let n = elements.len() / 3;
    SimplicialMesh::from_parts(2, vertices, elements, vec![2; n], DiagonalSplit::Kuhn)
}

/// `m x m x m` grid of cubes, each split into the six Kuhn tetrahedra.
pub fn build_unit_cube_mesh(m: usize) -> Result<SimplicialMesh> {
    if m == 0 {
        return Err(Error::InvalidArgument("cube mesh needs m >= 1".into()));
    }
    let coord = |i: usize| if i == m { 1.0 } else { i as f64 / m as f64 };
    let idx = |i: usize, j: usize, k: usize| ((k * (m + 1) + j) * (m + 1) + i) as u32;
    let mut vertices = Vec::with_capacity((m + 1).pow(3));
    for k in 0..=m {
        for j in 0..=m {
            for i in 0..=m {
                vertices.push([coord(i), coord(j), coord(k)]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut elements = Vec::with_capacity(24 * m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    elements.push(idx(p[0], p[1], p[2]));
                    for axis in perm {
                        p[axis] += 1;
                        elements.push(idx(p[0], p[1], p[2]));
                    }
                }
            }
        }
    }
    let n = elements.len() / 4;
    SimplicialMesh::from_parts(3, vertices, elements, vec![3; n], DiagonalSplit::Kuhn)
}

/// The standard benchmark starting mesh for dimension `dim`: four intervals,
/// the 32-triangle square mesh, or the 4x4x4 Kuhn cube mesh.
pub fn initial_mesh(dim: usize) -> Result<SimplicialMesh> {
    match dim {
        1 => build_interval_mesh(4),
        2 => Ok(build_unit_square_mesh()),
        3 => build_unit_cube_mesh(4),
        _ => Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3"))),
    }
}
