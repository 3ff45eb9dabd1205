//! Farthest point sampling and k-nearest-neighbor grouping.
//!
//! Both are brute force. Distance ties always resolve to the lowest index so
//! results do not depend on platform or iteration order.

use super::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::{dist2, sub3, Scalar, Vec3};

/// Seed indices in selection order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    pub indices: Vec<usize>,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn coords<T: Scalar>(&self, cloud: &PointCloud<T>) -> Vec<Vec3<T>> {
        self.indices.iter().map(|&i| *cloud.point(i)).collect()
    }
}

/// A seed centroid and its `k` nearest points.
///
/// `relative[j]` is exactly `points[member_indices[j]] - points[centroid_index]`
/// as computed in the cloud's scalar type. The centroid is always
/// `member_indices[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood<T> {
    pub centroid_index: usize,
    pub member_indices: Vec<usize>,
    pub relative: Vec<Vec3<T>>,
}

impl<T> Neighborhood<T> {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

/// Greedy maximin subsampling starting from `start_index`.
pub fn fps<T: Scalar>(
    cloud: &PointCloud<T>,
    n_seeds: usize,
    start_index: usize,
) -> Result<SeedSet> {
    let n = cloud.len();
    if n_seeds == 0 || n_seeds > n {
        return Err(Error::InvalidCount(format!(
            "requested {n_seeds} seeds from {n} points"
        )));
    }
    if start_index >= n {
        return Err(Error::InvalidCount(format!(
            "start index {start_index} out of range for {n} points"
        )));
    }
    let pts = cloud.points();
    let mut selected = vec![false; n];
    let mut min_d = vec![T::infinity(); n];
    let mut indices = Vec::with_capacity(n_seeds);
    let mut current = start_index;
    loop {
        indices.push(current);
        selected[current] = true;
        if indices.len() == n_seeds {
            break;
        }
        let anchor = pts[current];
        let mut best: Option<(usize, T)> = None;
        for (i, p) in pts.iter().enumerate() {
            let d = dist2(p, &anchor);
            if d < min_d[i] {
                min_d[i] = d;
            }
            if selected[i] {
                continue;
            }
            match best {
                Some((_, bd)) if min_d[i] <= bd => {}
                _ => best = Some((i, min_d[i])),
            }
        }
        current = best.expect("unselected point remains").0;
    }
    Ok(SeedSet { indices })
}

/// Groups the `k` nearest points around every seed.
pub fn knn_group<T: Scalar>(
    cloud: &PointCloud<T>,
    seeds: &SeedSet,
    k: usize,
) -> Result<Vec<Neighborhood<T>>> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::InvalidCount(format!("k = {k} with {n} points")));
    }
    if let Some(&bad) = seeds.indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidCount(format!(
            "seed index {bad} out of range"
        )));
    }
    let pts = cloud.points();
    let mut order: Vec<(T, usize)> = Vec::with_capacity(n);
    let cmp = |a: &(T, usize), b: &(T, usize)| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then(a.1.cmp(&b.1))
    };
    Ok(seeds
        .indices
        .iter()
        .map(|&c| {
            let center = pts[c];
            order.clear();
            order.extend(
                pts.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != c)
                    .map(|(i, p)| (dist2(p, &center), i)),
            );
            let rest = k - 1;
            if rest > 0 && rest < order.len() {
                order.select_nth_unstable_by(rest - 1, cmp);
                order.truncate(rest);
            }
            order.sort_unstable_by(cmp);
            let member_indices: Vec<usize> = std::iter::once(c)
                .chain(order.iter().take(rest).map(|&(_, i)| i))
                .collect();
            let relative = member_indices
                .iter()
                .map(|&m| sub3(&pts[m], &center))
                .collect();
            Neighborhood {
                centroid_index: c,
                member_indices,
                relative,
            }
        })
        .collect())
}
