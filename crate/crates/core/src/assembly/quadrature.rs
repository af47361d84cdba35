//! Element quadrature: Grundmann-Moeller rules for smooth integrands and
//! recursive subdivision for box indicators.

use crate::error::{Error, Result};

/// Controls the integration of discontinuous targets on elements that
/// straddle a box face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    /// Levels of uniform (red) subdivision of a straddling element. Leaves
    /// cut by one box face are integrated exactly, the others by the
    /// barycenter rule.
    pub depth: usize,
    /// Upper bound on `2^(n * depth)`, the number of leaves per element.
    pub max_leaves: u64,
}

pub const DEFAULT_DEPTH: usize = 6;
pub const DEFAULT_MAX_LEAVES: u64 = 1 << 24;

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { depth: DEFAULT_DEPTH, max_leaves: DEFAULT_MAX_LEAVES }
    }
}

impl QuadratureSpec {
    pub fn with_depth(depth: usize) -> Self {
        Self { depth, ..Self::default() }
    }

    /// Checks the leaf cap for a mesh of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bits = dim * self.depth;
        if bits >= 63 || (1u64 << bits) > self.max_leaves {
            return Err(Error::InvalidArgument(format!(
                "quadrature depth {} gives more than {} leaves per element",
                self.depth, self.max_leaves
            )));
        }
        Ok(())
    }
}

/// Grundmann-Moeller rule of degree `2s + 1` on the `n`-simplex; points are
/// barycentric coordinates, weights sum to one.
pub fn grundmann_moeller(n: usize, s: usize) -> Vec<(f64, [f64; 4])> {
    let d = 2 * s + 1;
    let mut rule = Vec::new();
    for i in 0..=s {
        let denom = (d + n - 2 * i) as f64;
        let mut w = denom.powi(d as i32) / (factorial(i) * factorial(d + n - i));
        if i % 2 == 1 {
            w = -w;
        }
        let mut beta = vec![0usize; n + 1];
        compositions(s - i, 0, &mut beta, &mut |b| {
            let mut lam = [0.0; 4];
            for (k, &bk) in b.iter().enumerate() {
                lam[k] = (2 * bk + 1) as f64 / denom;
            }
            rule.push((w, lam));
        });
    }
    let total: f64 = rule.iter().map(|r| r.0).sum();
    for r in &mut rule {
        r.0 /= total;
    }
    rule
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Calls `f` on every `beta` with `sum(beta[pos..]) = remaining`.
fn compositions(remaining: usize, pos: usize, beta: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    if pos + 1 == beta.len() {
        beta[pos] = remaining;
        f(beta);
        return;
    }
    for k in (0..=remaining).rev() {
        beta[pos] = k;
        compositions(remaining - k, pos + 1, beta, f);
    }
}

#[derive(Clone, Copy)]
struct Node {
    x: [f64; 3],
    lam: [f64; 4],
}

fn mid(a: &Node, b: &Node) -> Node {
    let mut m = *a;
    for k in 0..3 {
        m.x[k] = 0.5 * (a.x[k] + b.x[k]);
    }
    for k in 0..4 {
        m.lam[k] = 0.5 * (a.lam[k] + b.lam[k]);
    }
    m
}

/// Integrals of the box indicator and of its products with the barycentric
/// coordinates over a simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BoxMoments {
    /// Measure of `T` intersected with the box.
    pub measure: f64,
    /// `int_T 1_box lambda_a`.
    pub first: [f64; 4],
}

#[derive(PartialEq)]
enum Position {
    Inside,
    Outside,
    Straddling,
}

fn classify(nodes: &[Node], dim: usize, lo: &[f64; 3], hi: &[f64; 3]) -> Position {
    let mut inside = true;
    for k in 0..dim {
        let mut below = true;
        let mut above = true;
        for v in nodes {
            let c = v.x[k];
            below &= c <= lo[k];
            above &= c >= hi[k];
            inside &= lo[k] <= c && c <= hi[k];
        }
        if below || above {
            return Position::Outside;
        }
    }
    if inside {
        Position::Inside
    } else {
        Position::Straddling
    }
}

/// Box moments over the simplex with vertices `x` (first `dim + 1` used).
pub(crate) fn box_moments(
    x: &[[f64; 3]],
    volume: f64,
    dim: usize,
    lo: &[f64; 3],
    hi: &[f64; 3],
    depth: usize,
) -> BoxMoments {
    let mut nodes = [Node { x: [0.0; 3], lam: [0.0; 4] }; 4];
    for a in 0..=dim {
        nodes[a].x = x[a];
        nodes[a].lam[a] = 1.0;
    }
    let mut out = BoxMoments { measure: 0.0, first: [0.0; 4] };
    recurse(&nodes[..=dim], volume, dim, lo, hi, depth, &mut out);
    out
}

fn recurse(
    nodes: &[Node],
    volume: f64,
    dim: usize,
    lo: &[f64; 3],
    hi: &[f64; 3],
    depth: usize,
    out: &mut BoxMoments,
) {
    let np = (dim + 1) as f64;
    let add_whole = |out: &mut BoxMoments| {
        out.measure += volume;
        for a in 0..=dim {
            let mean: f64 = nodes.iter().map(|v| v.lam[a]).sum::<f64>() / np;
            out.first[a] += volume * mean;
        }
    };
    match classify(nodes, dim, lo, hi) {
        Position::Outside => {}
        Position::Inside => add_whole(out),
        Position::Straddling if depth == 0 => match single_cut(nodes, dim, lo, hi) {
            Some((k, c, above)) => clip_integrate(nodes, dim, k, c, above, out),
            None => {
                let mut c = [0.0; 3];
                for v in nodes {
                    for k in 0..3 {
                        c[k] += v.x[k] / np;
                    }
                }
                if (0..dim).all(|k| lo[k] <= c[k] && c[k] <= hi[k]) {
                    add_whole(out);
                }
            }
        },
        Position::Straddling => {
            let child_volume = volume / (1 << dim) as f64;
            for child in red_children(nodes, dim) {
                recurse(&child[..=dim], child_volume, dim, lo, hi, depth - 1, out);
            }
        }
    }
}

/// The only box face plane `x_k = c` cutting the leaf, with the side kept.
fn single_cut(nodes: &[Node], dim: usize, lo: &[f64; 3], hi: &[f64; 3]) -> Option<(usize, f64, bool)> {
    let mut cut = None;
    for k in 0..dim {
        let min = nodes.iter().map(|v| v.x[k]).fold(f64::INFINITY, f64::min);
        let max = nodes.iter().map(|v| v.x[k]).fold(f64::NEG_INFINITY, f64::max);
        for (c, above) in [(lo[k], true), (hi[k], false)] {
            if min < c && c < max {
                if cut.is_some() {
                    return None;
                }
                cut = Some((k, c, above));
            }
        }
    }
    cut
}

fn simplex_volume(v: &[Node], dim: usize) -> f64 {
    let e = |i: usize, k: usize| v[i].x[k] - v[0].x[k];
    match dim {
        1 => e(1, 0).abs(),
        2 => (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0)).abs() / 2.0,
        _ => {
            let det = e(1, 0) * (e(2, 1) * e(3, 2) - e(2, 2) * e(3, 1)) - e(1, 1) * (e(2, 0) * e(3, 2) - e(2, 2) * e(3, 0))
                + e(1, 2) * (e(2, 0) * e(3, 1) - e(2, 1) * e(3, 0));
            det.abs() / 6.0
        }
    }
}

/// Exact integrals over the part of the leaf with `x_k >= c` (`above`) or
/// `x_k <= c`, split into simplices.
fn clip_integrate(nodes: &[Node], dim: usize, k: usize, c: f64, above: bool, out: &mut BoxMoments) {
    let s = |v: &Node| if above { v.x[k] - c } else { c - v.x[k] };
    let inside: Vec<Node> = nodes.iter().filter(|v| s(v) >= 0.0).copied().collect();
    let outside: Vec<Node> = nodes.iter().filter(|v| s(v) < 0.0).copied().collect();
    let cross = |a: &Node, b: &Node| {
        let t = s(a) / (s(a) - s(b));
        let mut p = *a;
        for j in 0..3 {
            p.x[j] = a.x[j] + t * (b.x[j] - a.x[j]);
        }
        for j in 0..4 {
            p.lam[j] = a.lam[j] + t * (b.lam[j] - a.lam[j]);
        }
        p
    };
    let pieces: Vec<Vec<Node>> = match (dim, inside.len()) {
        (_, 1) => {
            let a = inside[0];
            let mut piece = vec![a];
            piece.extend(outside.iter().map(|o| cross(&a, o)));
            vec![piece]
        }
        (2, 2) => {
            let (a, b, o) = (inside[0], inside[1], outside[0]);
            let (pa, pb) = (cross(&a, &o), cross(&b, &o));
            vec![vec![a, b, pb], vec![a, pb, pa]]
        }
        (3, 3) => {
            let o = outside[0];
            let [a, b, cc] = [inside[0], inside[1], inside[2]];
            prism([a, b, cc], [cross(&a, &o), cross(&b, &o), cross(&cc, &o)])
        }
        (3, 2) => {
            let (a, b, o1, o2) = (inside[0], inside[1], outside[0], outside[1]);
            prism([a, cross(&a, &o1), cross(&a, &o2)], [b, cross(&b, &o1), cross(&b, &o2)])
        }
        _ => unreachable!("a cut leaf has vertices on both sides"),
    };
    let np = (dim + 1) as f64;
    for piece in pieces {
        let vol = simplex_volume(&piece, dim);
        out.measure += vol;
        for a in 0..=dim {
            out.first[a] += vol * piece.iter().map(|v| v.lam[a]).sum::<f64>() / np;
        }
    }
}

/// Three tetrahedra filling the prism with end triangles `a` and `b`.
fn prism(a: [Node; 3], b: [Node; 3]) -> Vec<Vec<Node>> {
    vec![vec![a[0], a[1], a[2], b[0]], vec![a[1], a[2], b[0], b[1]], vec![a[2], b[0], b[1], b[2]]]
}

/// Uniform subdivision into `2^dim` congruent-volume children.
fn red_children(v: &[Node], dim: usize) -> Vec<[Node; 4]> {
    let z = v[0];
    match dim {
        1 => {
            let m = mid(&v[0], &v[1]);
            vec![[v[0], m, z, z], [m, v[1], z, z]]
        }
        2 => {
            let m01 = mid(&v[0], &v[1]);
            let m02 = mid(&v[0], &v[2]);
            let m12 = mid(&v[1], &v[2]);
            vec![
                [v[0], m01, m02, z],
                [m01, v[1], m12, z],
                [m02, m12, v[2], z],
                [m01, m12, m02, z],
            ]
        }
        _ => {
            let m01 = mid(&v[0], &v[1]);
            let m02 = mid(&v[0], &v[2]);
            let m03 = mid(&v[0], &v[3]);
            let m12 = mid(&v[1], &v[2]);
            let m13 = mid(&v[1], &v[3]);
            let m23 = mid(&v[2], &v[3]);
            vec![
                [v[0], m01, m02, m03],
                [m01, v[1], m12, m13],
                [m02, m12, v[2], m23],
                [m03, m13, m23, v[3]],
                [m01, m02, m03, m13],
                [m01, m02, m12, m13],
                [m02, m03, m13, m23],
                [m02, m12, m13, m23],
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `int over reference simplex of prod lambda_k^a_k` times `n!`.
    fn exact_monomial(a: &[usize]) -> f64 {
        let n = a.len() - 1;
        let num: f64 = a.iter().map(|&k| factorial(k)).product();
        num * factorial(n) / factorial(n + a.iter().sum::<usize>())
    }

    #[test]
    fn grundmann_moeller_is_exact_to_degree_seven() {
        for n in 1..=3 {
            let rule = grundmann_moeller(n, 3);
            let mut a = vec![0usize; n + 1];
            for deg in 0..=7 {
                compositions(deg, 0, &mut a, &mut |e| {
                    let q: f64 = rule
                        .iter()
                        .map(|(w, l)| w * e.iter().enumerate().map(|(k, &p)| l[k].powi(p as i32)).product::<f64>())
                        .sum();
                    let ex = exact_monomial(e);
                    assert!((q - ex).abs() < 1e-13 * ex.max(1.0), "n={n} e={e:?} {q} {ex}");
                });
            }
        }
    }

    #[test]
    fn red_children_partition_volume_and_barycentric_mass() {
        let x = [[0.1, 0.2, 0.0], [0.9, 0.3, 0.1], [0.2, 0.8, 0.2], [0.3, 0.4, 0.9]];
        for dim in 1..=3 {
            // Box containing everything: inside on the first test.
            let m = box_moments(&x, 2.0, dim, &[0.0; 3], &[1.0; 3], 3);
            assert_eq!(m.measure, 2.0);
            for a in 0..=dim {
                assert!((m.first[a] - 2.0 / (dim + 1) as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn straddling_interval_is_resolved_by_bisection() {
        // [0, 1] cut at 0.375: dyadic, so depth 3 is exact.
        let x = [[0.0; 3], [1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]];
        let m = box_moments(&x, 1.0, 1, &[0.375, 0.0, 0.0], &[1.0; 3], 3);
        assert_eq!(m.measure, 0.625);
        // int_{3/8}^1 (1 - t) dt and int t dt.
        assert!((m.first[0] - 0.625f64.powi(2) / 2.0).abs() < 1e-15);
        assert!((m.first[1] - (1.0 - 0.375f64.powi(2)) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_face_cut_is_exact_without_subdivision() {
        let c = 1.0 / 3.0;
        let far = [-5.0; 3];
        let big = [5.0; 3];
        // Triangle (0,0), (1,0), (0,1) with x >= 1/3: area (2/3)^2 / 2, int x = 10/81.
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]];
        let m = box_moments(&tri, 0.5, 2, &[c, -5.0, -5.0], &big, 0);
        assert!((m.measure - 2.0 / 9.0).abs() < 1e-15);
        assert!((m.first[1] - 10.0 / 81.0).abs() < 1e-15);
        let m = box_moments(&tri, 0.5, 2, &far, &[c, 5.0, 5.0], 0);
        assert!((m.measure - (0.5 - 2.0 / 9.0)).abs() < 1e-15);

        // Unit tetrahedron: x >= c keeps a corner tet, x <= c its complement.
        let tet = [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let corner = (1.0 - c).powi(3) / 6.0;
        let m = box_moments(&tet, 1.0 / 6.0, 3, &[c, -5.0, -5.0], &big, 0);
        assert!((m.measure - corner).abs() < 1e-15);
        let m = box_moments(&tet, 1.0 / 6.0, 3, &far, &[c, 5.0, 5.0], 0);
        assert!((m.measure - (1.0 / 6.0 - corner)).abs() < 1e-15);
        assert!((m.first.iter().sum::<f64>() - m.measure).abs() < 1e-15);

        // {z >= 0, y >= 0, z <= x, x + y <= 1} has two vertices on each side of
        // x = c: volume c^2/2 - c^3/3 and int x = c^3/3 - c^4/4 below the plane.
        let wedge = [[0.0; 3], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 1.0]];
        let m = box_moments(&wedge, 1.0 / 6.0, 3, &far, &[c, 5.0, 5.0], 0);
        assert!((m.measure - (c * c / 2.0 - c.powi(3) / 3.0)).abs() < 1e-15);
        assert!((m.first[2] + m.first[3] - (c.powi(3) / 3.0 - c.powi(4) / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(QuadratureSpec::with_depth(6).validate(3).is_ok());
        assert!(QuadratureSpec::with_depth(9).validate(3).is_err());
    }
}
