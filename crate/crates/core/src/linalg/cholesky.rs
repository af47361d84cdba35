//! Sparse Cholesky factorization backed by `faer` (supernodal, AMD ordering).

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LltError;
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};

use super::csr::CsrMatrix;
use super::operator::LinearOperator;
use crate::error::{Error, Result};

/// `A = L L^T` with a fill-reducing permutation, reused for many solves.
#[derive(Debug)]
pub struct SpdFactorization {
    dim: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdFactorization {
    /// Factorizes a symmetric positive definite matrix. Only the lower
    /// triangle is read.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
        }
        let mut triplets = Vec::with_capacity(a.nnz() / 2 + n);
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    triplets.push(Triplet::new(i, j, v));
                }
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let llt = mat.sp_cholesky(Side::Lower).map_err(|e| match e {
            LltError::Numeric(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot {
                index,
            }) => Error::NotPositiveDefinite { pivot: index },
            other => Error::Factorization(format!("{other:?}")),
        })?;
        Ok(Self { dim: n, llt })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.dim);
        let rhs = MatMut::from_column_major_slice_mut(b, self.dim, 1);
        self.llt.solve_in_place(rhs);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Applies `A^{-1}`.
impl LinearOperator for SpdFactorization {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}
