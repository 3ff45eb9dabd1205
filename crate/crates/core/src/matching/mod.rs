//! Bipartite view-to-query matching.
//!
//! Matching cost is the *negated* cosine similarity, so the minimizing
//! assignment pairs each view with its most similar query.

mod hungarian;
mod loss;

pub use hungarian::{hungarian, Assignment};
pub use loss::{alignment_loss, AlignmentLoss};

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square matrix of finite costs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidCost(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCost(format!(
                "non-finite entry at ({}, {})",
                i / n.max(1),
                i % n.max(1)
            )));
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCost("cost matrix must be square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.n + col]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.n..(row + 1) * self.n]
    }

    /// `sum_i cost[i][sigma[i]]`, accumulated in row order.
    pub fn total(&self, sigma: &[usize]) -> T {
        sigma
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &j)| acc + self.get(i, j))
    }
}

pub(crate) fn row_norm<T: Scalar>(row: ArrayView1<T>) -> T {
    row.dot(&row).sqrt()
}

/// `cost[i][j] = -cos(view[i], query[j])`.
pub fn cosine_cost<T: Scalar>(
    views: ArrayView2<T>,
    queries: ArrayView2<T>,
) -> Result<CostMatrix<T>> {
    let n = views.nrows();
    if queries.nrows() != n {
        return Err(Error::InvalidCost(format!(
            "{n} views but {} queries",
            queries.nrows()
        )));
    }
    if views.ncols() != queries.ncols() {
        return Err(Error::InvalidCost(format!(
            "feature widths differ: {} vs {}",
            views.ncols(),
            queries.ncols()
        )));
    }
    let vn = nonzero_norms(views, "view")?;
    let qn = nonzero_norms(queries, "query")?;
    let mut values = Vec::with_capacity(n * n);
    for (i, v) in views.rows().into_iter().enumerate() {
        for (j, q) in queries.rows().into_iter().enumerate() {
            values.push(-(v.dot(&q) / (vn[i] * qn[j])));
        }
    }
    CostMatrix::new(n, values)
}

pub(crate) fn nonzero_norms<T: Scalar>(m: ArrayView2<T>, what: &str) -> Result<Vec<T>> {
    m.rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let n = row_norm(r);
            if n > T::zero() && n.is_finite() {
                Ok(n)
            } else {
                Err(Error::DegenerateFeature(format!(
                    "{what} row {i} has norm {n}"
                )))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn orthonormal_identity() {
        let eye: Array2<f64> = Array2::eye(3);
        let c = cosine_cost(eye.view(), eye.view()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c.get(i, j), if i == j { -1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn zero_row_is_degenerate() {
        let v = array![[1.0, 0.0], [0.0, 0.0]];
        let q = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            cosine_cost(v.view(), q.view()),
            Err(Error::DegenerateFeature(_))
        ));
    }

    #[test]
    fn shape_mismatch() {
        let v = array![[1.0, 0.0]];
        let q = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            cosine_cost(v.view(), q.view()),
            Err(Error::InvalidCost(_))
        ));
    }

    #[test]
    fn cost_matrix_validation() {
        assert!(CostMatrix::new(2, vec![0.0, 1.0, 2.0]).is_err());
        assert!(matches!(
            CostMatrix::new(1, vec![f64::NAN]),
            Err(Error::InvalidCost(_))
        ));
        assert!(CostMatrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
