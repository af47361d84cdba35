//! Bisection refinement with conforming closure.
//!
//! Each round bisects the flagged elements across their refinement edge
//! (Maubach's rule, which is newest-vertex bisection in 2D). Afterwards every
//! element that has a hanging node on one of its edges is flagged for the next
//! round. Kuhn-type initial meshes are compatibly tagged, so the closure
//! terminates with a conforming mesh.

use std::collections::HashMap;

use super::SimplicialMesh;
use crate::error::{Error, Result};

fn edge_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

/// Bisects every element in `marked` at least once and closes the mesh.
///
/// Elements keep their relative order; a bisected element is replaced in
/// place by its two children. The result is fully determined by the input.
pub fn refine(mesh: &SimplicialMesh, marked: &[usize]) -> Result<SimplicialMesh> {
    refine_times(mesh, marked, 1)
}

/// Bisects every marked element and its descendants `times` times (so
/// `times = n` halves the local mesh size), then closes the mesh.
pub fn refine_times(mesh: &SimplicialMesh, marked: &[usize], times: u8) -> Result<SimplicialMesh> {
    let n_el = mesh.num_elements();
    if let Some(&bad) = marked.iter().find(|&&l| l >= n_el) {
        return Err(Error::ElementOutOfRange { index: bad, len: n_el });
    }
    if marked.is_empty() || times == 0 {
        return Ok(mesh.clone());
    }

    let dim = mesh.dim();
    let nv = dim + 1;
    let mut vertices = mesh.vertices().to_vec();
    let mut elements = mesh.raw_elements().to_vec();
    let mut tags = mesh.tags().to_vec();
    let mut flags = vec![false; n_el];
    // Bisections still owed by each element.
    let mut pending = vec![0u8; n_el];
    for &l in marked {
        flags[l] = true;
        pending[l] = times;
    }

    let mut midpoints: HashMap<u64, u32> = HashMap::new();
    // Endpoints of bisected edges; only elements touching one can hang.
    let mut touched = vec![false; vertices.len()];

    while flags.iter().any(|&f| f) {
        let n_cur = tags.len();
        let n_new = n_cur + flags.iter().filter(|&&f| f).count();
        let mut next_el = Vec::with_capacity(n_new * nv);
        let mut next_tags = Vec::with_capacity(n_new);
        let mut next_pending = Vec::with_capacity(n_new);

        for l in 0..n_cur {
            let e = &elements[l * nv..(l + 1) * nv];
            let k = tags[l] as usize;
            if !flags[l] {
                next_el.extend_from_slice(e);
                next_tags.push(tags[l]);
                next_pending.push(pending[l]);
                continue;
            }
            let (a, b) = (e[0], e[k]);
            let z = *midpoints.entry(edge_key(a, b)).or_insert_with(|| {
                let pa = vertices[a as usize];
                let pb = vertices[b as usize];
                let id = vertices.len() as u32;
                vertices.push([
                    0.5 * (pa[0] + pb[0]),
                    0.5 * (pa[1] + pb[1]),
                    0.5 * (pa[2] + pb[2]),
                ]);
                touched.push(false);
                touched[a as usize] = true;
                touched[b as usize] = true;
                id
            });
            let child_tag = if k > 1 { (k - 1) as u8 } else { dim as u8 };
            // (x0, .., x_{k-1}, z, x_{k+1}, .., xn)
            for (i, &v) in e.iter().enumerate() {
                next_el.push(if i == k { z } else { v });
            }
            next_tags.push(child_tag);
            let owed = pending[l].saturating_sub(1);
            next_pending.extend([owed, owed]);
            // (x1, .., xk, z, x_{k+1}, .., xn)
            next_el.extend_from_slice(&e[1..=k]);
            next_el.push(z);
            next_el.extend_from_slice(&e[k + 1..]);
            next_tags.push(child_tag);
        }
        elements = next_el;
        tags = next_tags;
        pending = next_pending;

        flags = vec![false; tags.len()];
        for (l, flag) in flags.iter_mut().enumerate() {
            if pending[l] > 0 {
                *flag = true;
                continue;
            }
            let e = &elements[l * nv..(l + 1) * nv];
            if e.iter().filter(|&&v| touched[v as usize]).count() < 2 {
                continue;
            }
            'edges: for i in 0..nv {
                for j in i + 1..nv {
                    if midpoints.contains_key(&edge_key(e[i], e[j])) {
                        *flag = true;
                        break 'edges;
                    }
                }
            }
        }
    }

    SimplicialMesh::from_parts(dim, vertices, elements, tags, mesh.diagonal_split())
}

/// Bisects every element `n` times, halving the local mesh size.
pub fn uniform_refine(mesh: &SimplicialMesh) -> SimplicialMesh {
    let all: Vec<usize> = (0..mesh.num_elements()).collect();
    refine_times(mesh, &all, mesh.dim() as u8).expect("all indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_unit_cube_mesh, build_unit_square_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_interval_bisection() {
        let m = build_interval_mesh(2).unwrap();
        let r = refine(&m, &[0]).unwrap();
        assert_eq!(r.num_elements(), 3);
        assert_eq!(r.num_vertices(), 4);
        r.check_conforming().unwrap();
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = build_unit_square_mesh();
        let r = refine(&m, &[]).unwrap();
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.raw_elements(), m.raw_elements());
    }

    #[test]
    fn out_of_range_mark_is_rejected() {
        let m = build_unit_square_mesh();
        assert!(matches!(refine(&m, &[32]), Err(Error::ElementOutOfRange { index: 32, len: 32 })));
    }

    #[test]
    fn mark_all_square() {
        let m = build_unit_square_mesh();
        let all: Vec<usize> = (0..32).collect();
        let r = refine(&m, &all).unwrap();
        assert_eq!(r.num_elements(), 64);
        r.check_conforming().unwrap();
    }

    #[test]
    fn uniform_refinement_counts() {
        let m = uniform_refine(&build_unit_square_mesh());
        assert_eq!(m.num_elements(), 128);
        m.check_conforming().unwrap();

        let m1 = build_interval_mesh(4).unwrap();
        let m2 = uniform_refine(&m1);
        assert_eq!(m2.num_elements(), 8);
        assert_eq!(m2.mesh_size_range(), (0.125, 0.125));

        let c = uniform_refine(&build_unit_cube_mesh(1).unwrap());
        assert_eq!(c.num_elements(), 48);
        assert_eq!(c.num_vertices(), 27);
        c.check_conforming().unwrap();
        let (lo, hi) = c.mesh_size_range();
        let h0 = build_unit_cube_mesh(1).unwrap().local_mesh_size(0);
        assert!((lo - 0.5 * h0).abs() < 1e-15 && (hi - 0.5 * h0).abs() < 1e-15);
    }

    #[test]
    fn uniform_cube_refinement_reproduces_finer_kuhn_mesh() {
        let a = uniform_refine(&build_unit_cube_mesh(2).unwrap());
        let b = build_unit_cube_mesh(4).unwrap();
        assert_eq!(a.num_elements(), b.num_elements());
        assert_eq!(a.num_vertices(), b.num_vertices());
        assert_eq!(a.num_interior_vertices(), b.num_interior_vertices());
    }

    #[test]
    fn local_refinement_closes_conformingly_in_3d() {
        let m = build_unit_cube_mesh(2).unwrap();
        let r = refine(&m, &[0]).unwrap();
        r.check_conforming().unwrap();
        let r = refine(&r, &[r.num_elements() - 1, 3]).unwrap();
        r.check_conforming().unwrap();
    }

    #[test]
    fn repeated_bisection_halves_local_size() {
        for m in [build_unit_square_mesh(), build_unit_cube_mesh(2).unwrap()] {
            let n = m.dim();
            let (h0, _) = m.mesh_size_range();
            let r = refine_times(&m, &[1], n as u8).unwrap();
            r.check_conforming().unwrap();
            let (h1, h1max) = r.mesh_size_range();
            assert!((h1 - 0.5 * h0).abs() < 1e-14 && h1max == h0);
            assert!((r.total_volume() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn child_volumes_sum_to_parent() {
        let m = build_unit_cube_mesh(1).unwrap();
        let r = refine(&m, &[2]).unwrap();
        assert!((r.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn refinement_is_deterministic() {
        let m = build_unit_square_mesh();
        let a = refine(&m, &[3, 17, 30]).unwrap();
        let b = refine(&m, &[3, 17, 30]).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.raw_elements(), b.raw_elements());
        assert_eq!(a.tags(), b.tags());
    }

    #[test]
    fn random_refinement_keeps_angles_and_conformity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = build_unit_square_mesh();
        let min0 = (0..m.num_elements()).map(|l| m.min_angle(l)).fold(f64::INFINITY, f64::min);
        for _ in 0..10 {
            let marked: Vec<usize> =
                (0..m.num_elements()).filter(|_| rng.gen_bool(0.2)).collect();
            m = refine(&m, &marked).unwrap();
            m.check_conforming().unwrap();
            let min = (0..m.num_elements()).map(|l| m.min_angle(l)).fold(f64::INFINITY, f64::min);
            assert!(min >= 0.5 * min0, "min angle {min} dropped below half of {min0}");
        }
    }

    #[test]
    fn random_refinement_3d_quality_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = build_unit_cube_mesh(2).unwrap();
        let q0 = (0..m.num_elements()).map(|l| m.shape_quality(l)).fold(f64::INFINITY, f64::min);
        for _ in 0..8 {
            let marked: Vec<usize> =
                (0..m.num_elements()).filter(|_| rng.gen_bool(0.1)).collect();
            m = refine(&m, &marked).unwrap();
            m.check_conforming().unwrap();
        }
        let q = (0..m.num_elements()).map(|l| m.shape_quality(l)).fold(f64::INFINITY, f64::min);
        assert!(q >= 0.5 * q0, "quality {q} vs initial {q0}");
    }
}
