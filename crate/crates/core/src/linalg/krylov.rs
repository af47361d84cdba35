//! Conjugate gradients, with and without preconditioning.

use super::operator::{IdentityOperator, LinearOperator};
use super::report::{SolverKind, SolverReport};
use super::vec;

/// Unpreconditioned CG from a zero initial guess. Stops when
/// `||b - A x|| <= tol * ||b||`.
pub fn cg<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolverReport) {
    run(a, &IdentityOperator(b.len()), b, tol, max_iter, SolverKind::Cg)
}

/// Preconditioned CG from a zero initial guess. `p` applies the
/// preconditioner inverse. Stops when the preconditioned residual norm
/// `sqrt(r^T P r)` has been reduced by the factor `tol`.
pub fn pcg<A: LinearOperator + ?Sized, P: LinearOperator + ?Sized>(
    a: &A,
    p: &P,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolverReport) {
    run(a, p, b, tol, max_iter, SolverKind::Pcg)
}

fn run<A: LinearOperator + ?Sized, P: LinearOperator + ?Sized>(
    a: &A,
    prec: &P,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    kind: SolverKind,
) -> (Vec<f64>, SolverReport) {
    let n = b.len();
    assert_eq!(a.dim(), n, "operator and right-hand side disagree");
    let mut report = SolverReport::new(kind, n);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    prec.apply(&r, &mut z);
    let mut rz = vec::dot(&r, &z);
    let rz0 = rz;
    if rz0 == 0.0 {
        report.residual = 0.0;
        report.converged = true;
        return (x, report);
    }
    if rz0 < 0.0 {
        report.breakdown = true;
        return (x, report);
    }
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    for k in 1..=max_iter {
        a.apply(&p, &mut q);
        let pq = vec::dot(&p, &q);
        if pq <= 0.0 {
            report.breakdown = true;
            break;
        }
        let alpha = rz / pq;
        vec::axpy(alpha, &p, &mut x);
        vec::axpy(-alpha, &q, &mut r);
        prec.apply(&r, &mut z);
        let rz_new = vec::dot(&r, &z);
        report.iterations = k;
        if rz_new < 0.0 {
            report.breakdown = true;
            break;
        }
        report.residual = (rz_new / rz0).sqrt();
        report.history.push(report.residual);
        if report.residual <= tol {
            report.converged = true;
            break;
        }
        vec::xpby(&z, rz_new / rz, &mut p);
        rz = rz_new;
    }
    (x, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CsrMatrix, DiagonalMatrix, SpdFactorization};

    fn spd_3x3() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let (x, rep) = cg(&IdentityOperator(5), &[1.0, 2.0, 3.0, 4.0, 5.0], 1e-12, 10);
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert_eq!(x, [1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn small_spd_against_hand_solution() {
        // det = 18; solution of A x = (1,1,1) by elimination.
        let a = spd_3x3();
        let (x, rep) = cg(&a, &[1.0, 1.0, 1.0], 1e-12, 10);
        let expected = [2.0 / 18.0, 10.0 / 18.0, 14.0 / 18.0];
        assert!(rep.converged && rep.iterations <= 4);
        assert!(vec::max_abs(&vec::sub(&x, &expected)) < 1e-10);
    }

    #[test]
    fn exact_preconditioner_takes_one_step() {
        let a = spd_3x3();
        let f = SpdFactorization::new(&a).unwrap();
        let (_, rep) = pcg(&a, &f, &[1.0, -2.0, 0.5], 1e-10, 10);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn identity_preconditioner_reproduces_cg() {
        let a = spd_3x3();
        let b = [0.3, -1.0, 2.0];
        let (x1, r1) = cg(&a, &b, 1e-12, 10);
        let (x2, r2) = pcg(&a, &IdentityOperator(3), &b, 1e-12, 10);
        assert_eq!(r1.iterations, r2.iterations);
        assert!(vec::max_abs(&vec::sub(&x1, &x2)) <= 1e-14);
    }

    #[test]
    fn indefinite_operator_breaks_down() {
        let a = DiagonalMatrix::new(vec![1.0, -1.0]);
        let (_, rep) = cg(&a, &[0.0, 1.0], 1e-10, 10);
        assert!(rep.breakdown && !rep.converged);
    }

    #[test]
    fn zero_rhs() {
        let (x, rep) = cg(&spd_3x3(), &[0.0; 3], 1e-10, 10);
        assert!(rep.converged && rep.iterations == 0 && x == [0.0; 3]);
    }
}
