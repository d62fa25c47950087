//! Thin wrapper over the sparse LU of `faer`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{Error, Result};

pub struct SparseMatrix {
    pub n: usize,
    pub mat: SparseColMat<usize, f64>,
}

impl SparseMatrix {
    /// Square matrix from `(row, col, value)` entries; duplicates are summed.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<SparseMatrix> {
        let trips: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::LinearSolveFailure(format!("{e:?}")))?;
        Ok(SparseMatrix { n, mat })
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let xc = Col::<f64>::from_fn(self.n, |i| x[i]);
        let y = &self.mat * &xc;
        (0..self.n).map(|i| y[i]).collect()
    }

    #[allow(clippy::needless_range_loop)]
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        let m = self.mat.as_ref();
        for c in 0..self.n {
            for (r, v) in m.row_idx_of_col(c).zip(m.val_of_col(c)) {
                d[r][c] += *v;
            }
        }
        d
    }

    /// Solve `A x = b` by sparse LU with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let lu = self.mat.sp_lu().map_err(|_| Error::SingularSystem)?;
        let bc = Col::<f64>::from_fn(self.n, |i| b[i]);
        let mut x = lu.solve(&bc);
        let r = &bc - &self.mat * &x;
        let dx = lu.solve(&r);
        x += &dx;
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(out)
    }
}
