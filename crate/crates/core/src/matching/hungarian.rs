//! Optimal assignment by the O(n^3) shortest-augmenting-path Hungarian method.

use super::CostMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// `sigma[i]` is the column assigned to row `i`.
    pub sigma: Vec<usize>,
    pub total_cost: T,
}

/// Minimum-cost perfect assignment.
///
/// Among all minimizers the lexicographically smallest permutation is
/// returned. Two totals are treated as tied when they differ by less than a
/// few ulps of the largest possible sum.
pub fn hungarian<T: Scalar>(cost: &CostMatrix<T>) -> Result<Assignment<T>> {
    let n = cost.n();
    if n == 0 {
        return Ok(Assignment {
            sigma: Vec::new(),
            total_cost: T::zero(),
        });
    }
    if cost.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidCost("non-finite entry".into()));
    }
    let max_abs = cost.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::epsilon() * T::from_usize(8 * n).unwrap() * max_abs.max(T::one());

    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..n).collect();
    let mut sigma = solve(cost, &rows, &cols);
    let optimum = cost.total(&sigma);

    // Walk the rows in order, moving each to the smallest column that still
    // admits an optimal completion.
    let mut fixed = T::zero();
    for i in 0..n {
        let mut free_cols: Vec<usize> = (0..n).filter(|c| !sigma[..i].contains(c)).collect();
        free_cols.sort_unstable();
        let rest_rows: Vec<usize> = (i + 1..n).collect();
        for &j in free_cols.iter().take_while(|&&j| j < sigma[i]) {
            let rest_cols: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            let sub = solve(cost, &rest_rows, &rest_cols);
            let sub_total = rest_rows
                .iter()
                .zip(&sub)
                .fold(T::zero(), |acc, (&r, &c)| acc + cost.get(r, c));
            if fixed + cost.get(i, j) + sub_total <= optimum + tol {
                sigma[i] = j;
                sigma[i + 1..].copy_from_slice(&sub);
                break;
            }
        }
        fixed += cost.get(i, sigma[i]);
    }
    Ok(Assignment {
        total_cost: cost.total(&sigma),
        sigma,
    })
}

/// Solves the square subproblem on `rows` x `cols`; returns the chosen
/// column (global index) for each entry of `rows`.
fn solve<T: Scalar>(cost: &CostMatrix<T>, rows: &[usize], cols: &[usize]) -> Vec<usize> {
    let n = rows.len();
    debug_assert_eq!(n, cols.len());
    if n == 0 {
        return Vec::new();
    }
    let c = |i: usize, j: usize| cost.get(rows[i - 1], cols[j - 1]);
    // 1-based potentials; column 0 is the virtual root.
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=n {
        out[owner[j] - 1] = cols[j - 1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> CostMatrix<f64> {
        CostMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn diagonal_optimum() {
        let a = hungarian(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(a.sigma, vec![0, 1]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn anti_diagonal() {
        let a = hungarian(&m(&[&[4.0, 1.0], &[2.0, 3.0]])).unwrap();
        assert_eq!(a.sigma, vec![1, 0]);
        assert_eq!(a.total_cost, 3.0);
    }

    #[test]
    fn all_ties_give_identity() {
        let a = hungarian(&m(&[&[1.0; 4], &[1.0; 4], &[1.0; 4], &[1.0; 4]])).unwrap();
        assert_eq!(a.sigma, vec![0, 1, 2, 3]);
    }

    #[test]
    fn tie_rule_prefers_lexicographic() {
        // (0,1,2) and (1,0,2) both cost 2
        let a = hungarian(&m(&[&[1.0, 1.0, 5.0], &[1.0, 1.0, 5.0], &[5.0, 5.0, 0.0]])).unwrap();
        assert_eq!(a.sigma, vec![0, 1, 2]);
        // (1,0,2) and (2,0,1) both cost 3
        let a = hungarian(&m(&[&[9.0, 1.0, 1.0], &[1.0, 9.0, 9.0], &[9.0, 1.0, 1.0]])).unwrap();
        assert_eq!(a.sigma, vec![1, 0, 2]);
    }

    #[test]
    fn empty_and_single() {
        let a = hungarian(&CostMatrix::<f64>::new(0, vec![]).unwrap()).unwrap();
        assert!(a.sigma.is_empty());
        let a = hungarian(&m(&[&[-3.5]])).unwrap();
        assert_eq!((a.sigma, a.total_cost), (vec![0], -3.5));
    }

    #[test]
    fn works_in_f32() {
        let c = CostMatrix::<f32>::new(2, vec![4.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(hungarian(&c).unwrap().sigma, vec![1, 0]);
    }
}
