use ndarray::{Array2, ArrayView2};

use super::nonzero_norms;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct AlignmentLoss<T> {
    /// `sum_i (1 - cos(view[i], query[sigma[i]]))`, in `[0, 2N]`.
    pub loss: T,
    /// d loss / d query, one row per query.
    pub grad_queries: Array2<T>,
}

/// Cosine alignment loss over matched pairs, with its exact gradient with
/// respect to the query features.
///
/// For `c = a.q / (|a| |q|)` the derivative is
/// `dc/dq = a / (|a| |q|) - c q / |q|^2`, and the loss contributes `-dc/dq`.
pub fn alignment_loss<T: Scalar>(
    views: ArrayView2<T>,
    queries: ArrayView2<T>,
    sigma: &[usize],
) -> Result<AlignmentLoss<T>> {
    let n = views.nrows();
    if queries.nrows() != n || sigma.len() != n || views.ncols() != queries.ncols() {
        return Err(Error::InvalidCount(format!(
            "views {:?}, queries {:?}, sigma of length {}",
            views.dim(),
            queries.dim(),
            sigma.len()
        )));
    }
    let mut seen = vec![false; n];
    for &j in sigma {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidCount("sigma is not a permutation".into()));
        }
    }
    let vn = nonzero_norms(views, "view")?;
    let qn = nonzero_norms(queries, "query")?;
    let mut loss = T::zero();
    let mut grad = Array2::zeros(queries.raw_dim());
    for (i, &j) in sigma.iter().enumerate() {
        let a = views.row(i);
        let q = queries.row(j);
        let cos = a.dot(&q) / (vn[i] * qn[j]);
        loss += T::one() - cos;
        let inv_aq = T::one() / (vn[i] * qn[j]);
        let c_over_q2 = cos / (qn[j] * qn[j]);
        for ((g, &av), &qv) in grad.row_mut(j).iter_mut().zip(a.iter()).zip(q.iter()) {
            *g = c_over_q2 * qv - av * inv_aq;
        }
    }
    Ok(AlignmentLoss {
        loss,
        grad_queries: grad,
    })
}
