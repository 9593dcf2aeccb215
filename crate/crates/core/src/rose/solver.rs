//! Masked least-squares solve for the jointly re-estimated coefficients.
//!
//! The Gram matrix of the selected masked atoms grows by one row per
//! iteration. While it stays numerically positive definite a Cholesky
//! factor is extended in place; once a pivot falls below the relative rank
//! tolerance the solver switches to an eigen-decomposition pseudo-inverse,
//! which yields the minimum-norm least-squares solution.

use nalgebra::{DMatrix, DVector};

/// Relative threshold on Gram pivots / eigenvalues treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub(crate) struct JointSolver {
    gram: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Lower Cholesky factor, row-major by row; `None` once rank deficient.
    chol: Option<Vec<Vec<f64>>>,
    max_diag: f64,
}

impl JointSolver {
    pub fn new() -> Self {
        Self {
            chol: Some(Vec::new()),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    /// `cross[j]` is the masked inner product of the new atom with selected
    /// atom `j`; `diag` its own masked norm; `rhs` its product with the signal.
    pub fn push(&mut self, cross: &[f64], diag: f64, rhs: f64) {
        debug_assert_eq!(cross.len(), self.len());
        for (row, &c) in self.gram.iter_mut().zip(cross) {
            row.push(c);
        }
        let mut row = cross.to_vec();
        row.push(diag);
        self.gram.push(row);
        self.rhs.push(rhs);
        self.max_diag = self.max_diag.max(diag);

        if let Some(l) = &mut self.chol {
            let p = l.len();
            let mut new_row = vec![0.0; p + 1];
            for j in 0..p {
                let mut v = cross[j];
                for i in 0..j {
                    v -= new_row[i] * l[j][i];
                }
                new_row[j] = v / l[j][j];
            }
            let pivot = diag - new_row[..p].iter().map(|v| v * v).sum::<f64>();
            if pivot > RANK_TOLERANCE * self.max_diag {
                new_row[p] = pivot.sqrt();
                l.push(new_row);
            } else {
                self.chol = None;
            }
        }
    }

    #[cfg(test)]
    pub fn is_full_rank(&self) -> bool {
        self.chol.is_some()
    }

    /// Solves `G x = b` (or its minimum-norm least-squares version).
    pub fn solve_for(&self, b: &[f64]) -> Vec<f64> {
        match &self.chol {
            Some(l) => {
                let p = l.len();
                let mut y = vec![0.0; p];
                for i in 0..p {
                    let mut v = b[i];
                    for j in 0..i {
                        v -= l[i][j] * y[j];
                    }
                    y[i] = v / l[i][i];
                }
                let mut x = vec![0.0; p];
                for i in (0..p).rev() {
                    let mut v = y[i];
                    for j in i + 1..p {
                        v -= l[j][i] * x[j];
                    }
                    x[i] = v / l[i][i];
                }
                x
            }
            None => self.pseudo_solve(b),
        }
    }

    fn pseudo_solve(&self, b: &[f64]) -> Vec<f64> {
        let p = self.len();
        let g = DMatrix::from_fn(p, p, |r, c| self.gram[r][c]);
        let eig = g.symmetric_eigen();
        let max_ev = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let tol = RANK_TOLERANCE * max_ev;
        let bv = DVector::from_column_slice(b);
        let proj = eig.eigenvectors.transpose() * bv;
        let scaled = DVector::from_iterator(
            p,
            proj.iter()
                .zip(eig.eigenvalues.iter())
                .map(|(v, &ev)| if ev > tol { v / ev } else { 0.0 }),
        );
        (eig.eigenvectors * scaled).iter().copied().collect()
    }

    pub fn solve(&self) -> Vec<f64> {
        self.solve_for(&self.rhs)
    }
}
