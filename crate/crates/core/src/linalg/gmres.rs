//! Left-preconditioned GMRES without restarts.

use super::operator::LinearOperator;
use super::report::{SolverKind, SolverReport};
use super::vec;

const REORTH_THRESHOLD: f64 = 1e-8;
const STAGNATION_WINDOW: usize = 50;

/// Solves `A x = b` by GMRES applied to `P A x = P b`, where `p` applies
/// the preconditioner inverse. Converged when `||P (b - A x)|| <= tol ||P b||`.
///
/// Arnoldi uses modified Gram-Schmidt with one extra pass whenever the new
/// direction keeps a component above `1e-8` along the existing basis. The
/// solve stops and flags stagnation when the residual has not decreased over
/// 50 iterations.
pub fn gmres<A: LinearOperator + ?Sized, P: LinearOperator + ?Sized>(
    a: &A,
    p: &P,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolverReport) {
    run(a, p, None, b, tol, max_iter)
}

/// [`gmres`] in the inner product `(x, y)_W = x^T W y` for a symmetric
/// positive definite `w`. With `W = P^{-1}` the minimized and tested residual
/// is `||P r||_W^2 = r^T P r`, the preconditioned residual norm of PCG.
pub fn gmres_weighted<A: LinearOperator + ?Sized, P: LinearOperator + ?Sized, W: LinearOperator>(
    a: &A,
    p: &P,
    w: &W,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolverReport) {
    run(a, p, Some(w as &dyn LinearOperator), b, tol, max_iter)
}

fn run<A: LinearOperator + ?Sized, P: LinearOperator + ?Sized>(
    a: &A,
    p: &P,
    weight: Option<&dyn LinearOperator>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolverReport) {
    let n = b.len();
    assert_eq!(a.dim(), n, "operator and right-hand side disagree");
    if let Some(wt) = weight {
        assert_eq!(wt.dim(), n, "inner product and right-hand side disagree");
    }
    let image = |v: &[f64]| -> Vec<f64> {
        match weight {
            Some(wt) => wt.apply_vec(v),
            None => v.to_vec(),
        }
    };
    let mut report = SolverReport::new(SolverKind::Gmres, n);
    let mut x = vec![0.0; n];

    let mut z = vec![0.0; n];
    p.apply(b, &mut z);
    let mut wz = image(&z);
    let beta = vec::dot(&z, &wz).max(0.0).sqrt();
    if beta == 0.0 {
        report.residual = 0.0;
        report.converged = true;
        return (x, report);
    }
    vec::scale(1.0 / beta, &mut z);
    vec::scale(1.0 / beta, &mut wz);
    let mut basis: Vec<Vec<f64>> = vec![z];
    // `W v` for every basis vector `v`.
    let mut images: Vec<Vec<f64>> = vec![wz];
    // Columns of the Hessenberg matrix after the Givens rotations (upper triangular).
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut ax = vec![0.0; n];
    let mut w = vec![0.0; n];

    for k in 0..max_iter {
        a.apply(&basis[k], &mut ax);
        p.apply(&ax, &mut w);

        let mut h = vec![0.0; k + 2];
        for (i, (v, wv)) in basis.iter().zip(&images).enumerate() {
            let hij = vec::dot(wv, &w);
            h[i] = hij;
            vec::axpy(-hij, v, &mut w);
        }
        let mut ww = image(&w);
        let mut wnorm = vec::dot(&w, &ww).max(0.0).sqrt();
        let loss = images.iter().map(|wv| vec::dot(wv, &w).abs()).fold(0.0, f64::max);
        if wnorm > 0.0 && loss > REORTH_THRESHOLD * wnorm {
            for (i, (v, wv)) in basis.iter().zip(&images).enumerate() {
                let c = vec::dot(wv, &w);
                h[i] += c;
                vec::axpy(-c, v, &mut w);
            }
            ww = image(&w);
            wnorm = vec::dot(&w, &ww).max(0.0).sqrt();
        }
        h[k + 1] = wnorm;

        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let denom = h[k].hypot(h[k + 1]);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
        h[k] = denom;
        h[k + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[k]);
        g[k] *= c;
        h.truncate(k + 1);
        r_cols.push(h);

        let res = g[k + 1].abs() / beta;
        report.iterations = k + 1;
        report.residual = res;
        report.history.push(res);
        if res <= tol || wnorm == 0.0 {
            report.converged = res <= tol || wnorm == 0.0;
            break;
        }
        if report.history.len() > STAGNATION_WINDOW {
            let earlier = report.history[report.history.len() - 1 - STAGNATION_WINDOW];
            if res >= earlier * (1.0 - 1e-12) {
                report.stagnated = true;
                break;
            }
        }
        vec::scale(1.0 / wnorm, &mut w);
        vec::scale(1.0 / wnorm, &mut ww);
        basis.push(w.clone());
        images.push(ww);
    }

    // Back substitution R y = g.
    let m = r_cols.len();
    let mut y = g[..m].to_vec();
    for i in (0..m).rev() {
        for j in i + 1..m {
            y[i] -= r_cols[j][i] * y[j];
        }
        y[i] /= r_cols[i][i];
    }
    for (yi, v) in y.iter().zip(&basis) {
        vec::axpy(*yi, v, &mut x);
    }
    (x, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CsrMatrix, IdentityOperator};

    #[test]
    fn identity_in_one_iteration() {
        let (x, rep) = gmres(&IdentityOperator(3), &IdentityOperator(3), &[1.0, 2.0, 3.0], 1e-12, 10);
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(vec::max_abs(&vec::sub(&x, &[1.0, 2.0, 3.0])) < 1e-15);
    }

    #[test]
    fn nonsymmetric_4x4_against_hand_solution() {
        // Upper bidiagonal plus one subdiagonal entry; x = (1, -1, 2, 0.5) is exact.
        let a = CsrMatrix::from_triplets(
            4,
            4,
            &[
                (0, 0, 3.0),
                (0, 1, 1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 0, 1.0),
                (2, 2, 4.0),
                (2, 3, 2.0),
                (3, 3, 1.0),
                (3, 1, 0.5),
            ],
        )
        .unwrap();
        let x_true = [1.0, -1.0, 2.0, 0.5];
        let b = a.apply_vec(&x_true);
        let (x, rep) = gmres(&a, &IdentityOperator(4), &b, 1e-12, 20);
        assert!(rep.converged && rep.iterations <= 4);
        assert!(vec::max_abs(&vec::sub(&x, &x_true)) < 1e-10);
        assert!(rep.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn weighted_residual_is_the_preconditioned_norm() {
        // A badly scaled diagonal preconditioner: the Euclidean test on `P r`
        // ignores the first row, the weighted one does not.
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 2.0)],
        )
        .unwrap();
        let pd = crate::linalg::DiagonalMatrix::new(vec![1e-8, 1.0, 1.0]);
        let w = pd.inverse();
        let b = [1.0, 2.0, 3.0];
        let (x, rep) = gmres_weighted(&a, &pd, &w, &b, 1e-10, 10);
        assert!(rep.converged);
        let mut r = a.apply_vec(&x);
        for i in 0..3 {
            r[i] = b[i] - r[i];
        }
        let pr = pd.apply_vec(&r);
        let pb = pd.apply_vec(&b);
        let rel = (vec::dot(&r, &pr) / vec::dot(&b, &pb)).sqrt();
        assert!(rel <= 1e-10 * (1.0 + 1e-9), "{rel}");
        let last = *rep.history.last().unwrap();
        assert!((rel - last).abs() <= 1e-3 * rel + 1e-15, "{rel} vs {last}");
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let (x, rep) = gmres(&IdentityOperator(2), &IdentityOperator(2), &[0.0, 0.0], 1e-8, 5);
        assert!(rep.converged && x == [0.0, 0.0]);
    }
}
