//! Bramble-Pasciak conjugate gradients for symmetric saddle point systems
//!
//! ```text
//! [ A   B^T ] [x1]   [f1]
//! [ B   -D  ] [x2] = [f2]
//! ```
//!
//! with `A`, `D` SPD and an SPD `C < A`. Multiplying by the transformation
//! `T = [[A C^-1 - I, 0], [B C^-1, -I]]` yields an SPD matrix `K`; CG is run
//! on `P^-1 K` in the inner product of `P = diag(A - C, S)`, where `S`
//! approximates the Schur complement `D + B A^-1 B^T`. Only the action of
//! `C^-1` and `S^-1` is needed: products with `C` are tracked through the
//! recurrences instead of being computed.

use super::operator::LinearOperator;
use super::report::{SolverKind, SolverReport};
use super::vec;

/// The three blocks of the saddle point matrix. All blocks are square.
pub struct BpBlocks<'a> {
    pub a: &'a dyn LinearOperator,
    pub b: &'a dyn LinearOperator,
    pub bt: &'a dyn LinearOperator,
    pub d: &'a dyn LinearOperator,
}

/// Returns `(x1, x2, report)`. `c_inv` applies `C^-1` and must satisfy
/// `C < A`; otherwise the inner product loses positivity and the report
/// carries the breakdown flag. Convergence is declared once the
/// `P`-norm of the preconditioned residual has been reduced by `tol`.
pub fn bp_cg(
    blocks: &BpBlocks<'_>,
    c_inv: &dyn LinearOperator,
    s_inv: &dyn LinearOperator,
    f1: &[f64],
    f2: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, Vec<f64>, SolverReport) {
    let n = f1.len();
    assert_eq!(f2.len(), n, "bp_cg expects square blocks of equal size");
    let BpBlocks { a, b, bt, d } = *blocks;
    let mut report = SolverReport::new(SolverKind::BpCg, 2 * n);
    let mut x1 = vec![0.0; n];
    let mut x2 = vec![0.0; n];

    // r1 = C^-1 (f1 - A x1 - B^T x2), rh1 = C r1, rho2 unpreconditioned, r2 = S^-1 rho2.
    let mut r1 = c_inv.apply_vec(f1);
    let mut rh1 = f1.to_vec();
    let mut rho2 = b.apply_vec(&r1);
    for (v, f) in rho2.iter_mut().zip(f2) {
        *v -= f;
    }
    let mut r2 = s_inv.apply_vec(&rho2);
    let mut ar1 = a.apply_vec(&r1);
    let energy = |r1: &[f64], ar1: &[f64], rh1: &[f64], r2: &[f64], rho2: &[f64]| {
        vec::dot(r1, ar1) - vec::dot(r1, rh1) + vec::dot(r2, rho2)
    };
    let mut rr = energy(&r1, &ar1, &rh1, &r2, &rho2);
    let rr0 = rr;
    if rr0 == 0.0 {
        report.residual = 0.0;
        report.converged = true;
        return (x1, x2, report);
    }
    if rr0 < 0.0 {
        report.breakdown = true;
        return (x1, x2, report);
    }

    let mut p1 = r1.clone();
    let mut p2 = r2.clone();
    let mut ph1 = rh1.clone();
    let mut ap1 = ar1.clone();
    let mut qh1 = vec![0.0; n];
    let mut q1 = vec![0.0; n];
    let mut q2 = vec![0.0; n];
    let mut qt2 = vec![0.0; n];
    let mut aq1 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut diff = vec![0.0; n];

    for k in 1..=max_iter {
        // q = P^-1 K p
        bt.apply(&p2, &mut tmp);
        for i in 0..n {
            qh1[i] = ap1[i] + tmp[i];
        }
        c_inv.apply(&qh1, &mut q1);
        for i in 0..n {
            diff[i] = q1[i] - p1[i];
        }
        b.apply(&diff, &mut qt2);
        d.apply(&p2, &mut tmp);
        vec::axpy(1.0, &tmp, &mut qt2);
        s_inv.apply(&qt2, &mut q2);

        let curvature = vec::dot(&q1, &ap1) - vec::dot(&q1, &ph1) + vec::dot(&qt2, &p2);
        if curvature <= 0.0 {
            report.breakdown = true;
            break;
        }
        let alpha = rr / curvature;
        vec::axpy(alpha, &p1, &mut x1);
        vec::axpy(alpha, &p2, &mut x2);
        a.apply(&q1, &mut aq1);
        vec::axpy(-alpha, &q1, &mut r1);
        vec::axpy(-alpha, &qh1, &mut rh1);
        vec::axpy(-alpha, &aq1, &mut ar1);
        vec::axpy(-alpha, &q2, &mut r2);
        vec::axpy(-alpha, &qt2, &mut rho2);

        let rr_new = energy(&r1, &ar1, &rh1, &r2, &rho2);
        report.iterations = k;
        if rr_new < 0.0 {
            report.breakdown = true;
            break;
        }
        report.residual = (rr_new / rr0).sqrt();
        report.history.push(report.residual);
        if report.residual <= tol {
            report.converged = true;
            break;
        }
        let beta = rr_new / rr;
        vec::xpby(&r1, beta, &mut p1);
        vec::xpby(&r2, beta, &mut p2);
        vec::xpby(&rh1, beta, &mut ph1);
        vec::xpby(&ar1, beta, &mut ap1);
        rr = rr_new;
    }
    (x1, x2, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CsrMatrix, DiagonalMatrix, ScaledOperator, SpdFactorization};

    fn tridiag(n: usize, d: f64, o: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, o));
                t.push((i + 1, i, o));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn residual(a: &CsrMatrix, bm: &CsrMatrix, dm: &CsrMatrix, x1: &[f64], x2: &[f64], f1: &[f64], f2: &[f64]) -> f64 {
        let r1: Vec<f64> = a
            .apply_vec(x1)
            .iter()
            .zip(bm.apply_vec(x2))
            .zip(f1)
            .map(|((u, v), f)| f - u - v)
            .collect();
        let r2: Vec<f64> = bm
            .apply_vec(x1)
            .iter()
            .zip(dm.apply_vec(x2))
            .zip(f2)
            .map(|((u, v), f)| f - u + v)
            .collect();
        vec::norm(&r1).max(vec::norm(&r2))
    }

    #[test]
    fn solves_small_saddle_point_system() {
        let n = 6;
        let a = tridiag(n, 4.0, -1.0);
        let bm = tridiag(n, 2.0, -1.0);
        let dm = tridiag(n, 1.0, 0.25);
        let fact = SpdFactorization::new(&a).unwrap();
        let c_inv = ScaledOperator { alpha: 1.0 / 0.5, inner: &fact };
        let s_inv = DiagonalMatrix::new(dm.row_sums()).inverse();
        let f1: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let f2: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 * 0.1).collect();
        let blocks = BpBlocks { a: &a, b: &bm, bt: &bm, d: &dm };
        let (x1, x2, rep) = bp_cg(&blocks, &c_inv, &s_inv, &f1, &f2, 1e-13, 100);
        assert!(rep.converged, "{rep:?}");
        assert!(residual(&a, &bm, &dm, &x1, &x2, &f1, &f2) < 1e-10);
    }

    #[test]
    fn scaling_above_a_is_detected() {
        // C = 2 A is not below A.
        let n = 5;
        let a = tridiag(n, 4.0, -1.0);
        let bm = tridiag(n, 2.0, -1.0);
        let dm = tridiag(n, 1.0, 0.25);
        let fact = SpdFactorization::new(&a).unwrap();
        let c_inv = ScaledOperator { alpha: 0.5, inner: &fact };
        let s_inv = DiagonalMatrix::new(dm.row_sums()).inverse();
        let f1 = vec![1.0; n];
        let f2 = vec![0.0; n];
        let blocks = BpBlocks { a: &a, b: &bm, bt: &bm, d: &dm };
        let (_, _, rep) = bp_cg(&blocks, &c_inv, &s_inv, &f1, &f2, 1e-10, 50);
        assert!(rep.breakdown || !rep.converged, "{rep:?}");
    }
}
