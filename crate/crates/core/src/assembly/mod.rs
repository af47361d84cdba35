//! P1 finite element matrices and vectors on interior degrees of freedom.

mod quadrature;
mod target;

pub use quadrature::{grundmann_moeller, QuadratureSpec, DEFAULT_DEPTH};
pub use target::TargetFunction;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DiagonalMatrix};
use crate::mesh::SimplicialMesh;

/// Degree of the Grundmann-Moeller rule used for smooth targets is `2 * 3 + 1`.
const SMOOTH_RULE_S: usize = 3;

const NONE: u32 = u32::MAX;

/// Numbering of the P1 unknowns: interior vertices (homogeneous Dirichlet
/// data) or, for diagnostics, all vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    vertex_to_dof: Vec<u32>,
    dof_to_vertex: Vec<u32>,
    revision: u64,
}

impl DofMap {
    /// Interior vertices in increasing vertex order.
    pub fn new(mesh: &SimplicialMesh) -> Self {
        Self::build(mesh, |v| !mesh.is_boundary_vertex(v))
    }

    /// Every vertex is a dof; used for the full matrices `K^`, `M^`.
    pub fn all_vertices(mesh: &SimplicialMesh) -> Self {
        Self::build(mesh, |_| true)
    }

    fn build(mesh: &SimplicialMesh, keep: impl Fn(usize) -> bool) -> Self {
        let mut vertex_to_dof = vec![NONE; mesh.num_vertices()];
        let mut dof_to_vertex = Vec::new();
        for (v, slot) in vertex_to_dof.iter_mut().enumerate() {
            if keep(v) {
                *slot = dof_to_vertex.len() as u32;
                dof_to_vertex.push(v as u32);
            }
        }
        Self { vertex_to_dof, dof_to_vertex, revision: mesh.revision() }
    }

    pub fn len(&self) -> usize {
        self.dof_to_vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_vertex.is_empty()
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        match self.vertex_to_dof[vertex] {
            NONE => None,
            d => Some(d as usize),
        }
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.dof_to_vertex[dof] as usize
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn check(&self, mesh: &SimplicialMesh) -> Result<()> {
        if self.revision != mesh.revision() {
            return Err(Error::RevisionMismatch { expected: mesh.revision(), got: self.revision });
        }
        Ok(())
    }

    /// Nodal values on all vertices, zero where no dof lives.
    pub fn to_vertex_values(&self, coeffs: &[f64]) -> Vec<f64> {
        self.vertex_to_dof
            .iter()
            .map(|&d| if d == NONE { 0.0 } else { coeffs[d as usize] })
            .collect()
    }

    /// Restriction of vertex values to the dofs.
    pub fn from_vertex_values(&self, values: &[f64]) -> Vec<f64> {
        self.dof_to_vertex.iter().map(|&v| values[v as usize]).collect()
    }

    fn local_coeffs(&self, element: &[u32], coeffs: &[f64]) -> [f64; 4] {
        let mut u = [0.0; 4];
        for (a, &v) in element.iter().enumerate() {
            if let Some(d) = self.dof(v as usize) {
                u[a] = coeffs[d];
            }
        }
        u
    }
}

/// How the per-element regularization values were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizationMode {
    /// `rho_l = h_l^2`.
    VariableLocal,
    /// The same value on every element.
    Constant { rho: f64 },
    /// `rho_l = epsilon * h_l^2`.
    ScaledLocal { epsilon: f64 },
}

/// Piecewise constant regularization `rho`, one positive value per element.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationField {
    values: Vec<f64>,
    mode: RegularizationMode,
    revision: u64,
}

impl RegularizationField {
    pub fn build(mesh: &SimplicialMesh, mode: RegularizationMode) -> Result<Self> {
        let values: Vec<f64> = match mode {
            RegularizationMode::VariableLocal => {
                (0..mesh.num_elements()).map(|l| mesh.local_mesh_size(l).powi(2)).collect()
            }
            RegularizationMode::Constant { rho } => vec![rho; mesh.num_elements()],
            RegularizationMode::ScaledLocal { epsilon } => (0..mesh.num_elements())
                .map(|l| epsilon * mesh.local_mesh_size(l).powi(2))
                .collect(),
        };
        Self::from_values(mesh, values, mode)
    }

    pub fn from_values(mesh: &SimplicialMesh, values: Vec<f64>, mode: RegularizationMode) -> Result<Self> {
        if values.len() != mesh.num_elements() {
            return Err(Error::DimensionMismatch { expected: mesh.num_elements(), got: values.len() });
        }
        if let Some((element, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveRegularization { element, value });
        }
        Ok(Self { values, mode, revision: mesh.revision() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> RegularizationMode {
        self.mode
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(min, max)` of the values.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Vertex coordinates, signed determinant and barycentric gradients of an element.
pub(crate) struct LocalGeometry {
    pub x: [[f64; 3]; 4],
    pub volume: f64,
    pub grads: [[f64; 3]; 4],
}

pub(crate) fn local_geometry(mesh: &SimplicialMesh, l: usize) -> LocalGeometry {
    let n = mesh.dim();
    let el = mesh.element(l);
    let mut x = [[0.0; 3]; 4];
    for (a, &v) in el.iter().enumerate() {
        x[a] = *mesh.vertex(v as usize);
    }
    let e = |k: usize| -> [f64; 3] { [x[k][0] - x[0][0], x[k][1] - x[0][1], x[k][2] - x[0][2]] };
    let mut g = [[0.0; 3]; 4];
    let (det, volume) = match n {
        1 => {
            let d = e(1)[0];
            g[1] = [1.0 / d, 0.0, 0.0];
            (d, d.abs())
        }
        2 => {
            let (e1, e2) = (e(1), e(2));
            let d = e1[0] * e2[1] - e2[0] * e1[1];
            g[1] = [e2[1] / d, -e2[0] / d, 0.0];
            g[2] = [-e1[1] / d, e1[0] / d, 0.0];
            (d, 0.5 * d.abs())
        }
        _ => {
            let (e1, e2, e3) = (e(1), e(2), e(3));
            let c23 = cross(&e2, &e3);
            let d = e1[0] * c23[0] + e1[1] * c23[1] + e1[2] * c23[2];
            let c31 = cross(&e3, &e1);
            let c12 = cross(&e1, &e2);
            g[1] = c23.map(|c| c / d);
            g[2] = c31.map(|c| c / d);
            g[3] = c12.map(|c| c / d);
            (d, d.abs() / 6.0)
        }
    };
    debug_assert!(det != 0.0, "degenerate element {l}");
    for k in 0..3 {
        g[0][k] = -(1..=n).map(|a| g[a][k]).sum::<f64>();
    }
    LocalGeometry { x, volume, grads: g }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Sparsity pattern of the P1 matrices on `dofs`.
fn pattern(mesh: &SimplicialMesh, dofs: &DofMap) -> CsrMatrix {
    let m = dofs.len();
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); m];
    for el in mesh.elements() {
        for &a in el {
            if let Some(i) = dofs.dof(a as usize) {
                for &b in el {
                    if let Some(j) = dofs.dof(b as usize) {
                        rows[i].push(j as u32);
                    }
                }
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(m + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    for r in &mut rows {
        r.sort_unstable();
        r.dedup();
        col_idx.extend(r.iter().map(|&c| c as usize));
        row_ptr.push(col_idx.len());
        *r = Vec::new();
    }
    CsrMatrix::zeros_with_pattern(m, row_ptr, col_idx)
}

/// Adds element contributions in element order; `local(l, geom, a, b)` gives
/// the `(a, b)` entry of the element matrix and must be symmetric in `a, b`.
fn assemble_matrix<F>(mesh: &SimplicialMesh, dofs: &DofMap, mut local: F) -> Result<CsrMatrix>
where
    F: FnMut(usize, &LocalGeometry, usize, usize) -> f64,
{
    dofs.check(mesh)?;
    if dofs.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let mut a = pattern(mesh, dofs);
    let n = mesh.dim();
    let mut pos = [[0usize; 4]; 4];
    for l in 0..mesh.num_elements() {
        let geom = local_geometry(mesh, l);
        let el = mesh.element(l);
        let ids: Vec<Option<usize>> = el.iter().map(|&v| dofs.dof(v as usize)).collect();
        for p in 0..=n {
            for q in 0..=n {
                if let (Some(i), Some(j)) = (ids[p], ids[q]) {
                    pos[p][q] = a.position(i, j).expect("pattern covers element couplings");
                }
            }
        }
        let vals = a.values_mut();
        for p in 0..=n {
            let Some(_) = ids[p] else { continue };
            for q in 0..=n {
                if ids[q].is_some() {
                    vals[pos[p][q]] += local(l, &geom, p.min(q), p.max(q));
                }
            }
        }
    }
    a.prune_zeros();
    Ok(a)
}

/// `K[j,k] = int grad phi_k . grad phi_j`.
pub fn assemble_stiffness(mesh: &SimplicialMesh, dofs: &DofMap) -> Result<CsrMatrix> {
    assemble_matrix(mesh, dofs, |_, g, a, b| g.volume * dot3(&g.grads[a], &g.grads[b]))
}

/// `K_rho[j,k] = int (1/rho) grad phi_k . grad phi_j`.
pub fn assemble_weighted_stiffness(
    mesh: &SimplicialMesh,
    dofs: &DofMap,
    rho: &RegularizationField,
) -> Result<CsrMatrix> {
    if rho.revision() != mesh.revision() {
        return Err(Error::RevisionMismatch { expected: mesh.revision(), got: rho.revision() });
    }
    let vals = rho.values();
    assemble_matrix(mesh, dofs, |l, g, a, b| {
        g.volume * dot3(&g.grads[a], &g.grads[b]) / vals[l]
    })
}

/// `M[j,k] = int phi_k phi_j`.
pub fn assemble_mass(mesh: &SimplicialMesh, dofs: &DofMap) -> Result<CsrMatrix> {
    let n = mesh.dim() as f64;
    let c = 1.0 / ((n + 1.0) * (n + 2.0));
    assemble_matrix(mesh, dofs, |_, g, a, b| {
        if a == b {
            2.0 * c * g.volume
        } else {
            c * g.volume
        }
    })
}

/// Diagonal of row sums.
pub fn lump_mass(m: &CsrMatrix) -> Result<DiagonalMatrix> {
    let sums = m.row_sums();
    if let Some((row, &value)) = sums.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
        return Err(Error::NonPositiveRowSum { row, value });
    }
    Ok(DiagonalMatrix::new(sums))
}

/// Per-element integrals of the target against the local barycentric
/// coordinates, plus `int_T ubar^2`.
struct ElementTargetIntegrals {
    first: [f64; 4],
    square: f64,
}

fn target_integrals(
    mesh: &SimplicialMesh,
    geom: &LocalGeometry,
    target: &TargetFunction,
    q: &QuadratureSpec,
    rule: &[(f64, [f64; 4])],
) -> ElementTargetIntegrals {
    let n = mesh.dim();
    if let Some((c, bdim, lo, hi)) = target.as_box() {
        if c == 0.0 {
            return ElementTargetIntegrals { first: [0.0; 4], square: 0.0 };
        }
        let dim = bdim.min(n);
        let m = quadrature::box_moments(&geom.x, geom.volume, dim, &lo, &hi, q.depth);
        return ElementTargetIntegrals { first: m.first.map(|v| c * v), square: c * c * m.measure };
    }
    let mut first = [0.0; 4];
    let mut square = 0.0;
    for (w, lam) in rule {
        let x = point(geom, lam, n);
        let v = target.eval(&x);
        for a in 0..=n {
            first[a] += w * v * lam[a];
        }
        square += w * v * v;
    }
    ElementTargetIntegrals { first: first.map(|f| f * geom.volume), square: square * geom.volume }
}

fn point(geom: &LocalGeometry, lam: &[f64; 4], n: usize) -> [f64; 3] {
    let mut x = [0.0; 3];
    for a in 0..=n {
        for k in 0..3 {
            x[k] += lam[a] * geom.x[a][k];
        }
    }
    x
}

/// `f_j = int ubar phi_j`.
pub fn assemble_load(
    mesh: &SimplicialMesh,
    dofs: &DofMap,
    target: &TargetFunction,
    q: &QuadratureSpec,
) -> Result<Vec<f64>> {
    dofs.check(mesh)?;
    q.validate(mesh.dim())?;
    let rule = grundmann_moeller(mesh.dim(), SMOOTH_RULE_S);
    let mut f = vec![0.0; dofs.len()];
    for l in 0..mesh.num_elements() {
        let geom = local_geometry(mesh, l);
        let ints = target_integrals(mesh, &geom, target, q, &rule);
        for (a, &v) in mesh.element(l).iter().enumerate() {
            if let Some(j) = dofs.dof(v as usize) {
                f[j] += ints.first[a];
            }
        }
    }
    Ok(f)
}

/// `||u_h - ubar||^2_{L2(T_l)}` for the discrete function with the given dof
/// coefficients.
pub fn element_l2_error_sq(
    mesh: &SimplicialMesh,
    dofs: &DofMap,
    l: usize,
    coeffs: &[f64],
    target: &TargetFunction,
    q: &QuadratureSpec,
) -> f64 {
    let rule = grundmann_moeller(mesh.dim(), SMOOTH_RULE_S);
    element_error_sq(mesh, dofs, l, coeffs, target, q, &rule)
}

fn element_error_sq(
    mesh: &SimplicialMesh,
    dofs: &DofMap,
    l: usize,
    coeffs: &[f64],
    target: &TargetFunction,
    q: &QuadratureSpec,
    rule: &[(f64, [f64; 4])],
) -> f64 {
    let n = mesh.dim();
    let geom = local_geometry(mesh, l);
    let u = dofs.local_coeffs(mesh.element(l), coeffs);
    if target.as_box().is_some() {
        let ints = target_integrals(mesh, &geom, target, q, rule);
        let c = 1.0 / ((n + 1) * (n + 2)) as f64;
        let sum: f64 = u[..=n].iter().sum();
        let sq: f64 = u[..=n].iter().map(|v| v * v).sum();
        let uu = c * geom.volume * (sq + sum * sum);
        let ub: f64 = (0..=n).map(|a| u[a] * ints.first[a]).sum();
        return (uu - 2.0 * ub + ints.square).max(0.0);
    }
    let mut e = 0.0;
    for (w, lam) in rule {
        let uh: f64 = (0..=n).map(|a| u[a] * lam[a]).sum();
        let d = uh - target.eval(&point(&geom, lam, n));
        e += w * d * d;
    }
    e * geom.volume
}

/// Squared local errors of all elements.
pub fn element_l2_errors_sq(
    mesh: &SimplicialMesh,
    dofs: &DofMap,
    coeffs: &[f64],
    target: &TargetFunction,
    q: &QuadratureSpec,
) -> Result<Vec<f64>> {
    dofs.check(mesh)?;
    q.validate(mesh.dim())?;
    if coeffs.len() != dofs.len() {
        return Err(Error::DimensionMismatch { expected: dofs.len(), got: coeffs.len() });
    }
    let rule = grundmann_moeller(mesh.dim(), SMOOTH_RULE_S);
    Ok((0..mesh.num_elements())
        .map(|l| element_error_sq(mesh, dofs, l, coeffs, target, q, &rule))
        .collect())
}

/// `||u_h - ubar||_{L2(Omega)}`.
pub fn global_l2_error(
    mesh: &SimplicialMesh,
    dofs: &DofMap,
    coeffs: &[f64],
    target: &TargetFunction,
    q: &QuadratureSpec,
) -> Result<f64> {
    let e = element_l2_errors_sq(mesh, dofs, coeffs, target, q)?;
    Ok(crate::linalg::vec::pairwise_sum(0, e.len(), |i| e[i]).sqrt())
}
