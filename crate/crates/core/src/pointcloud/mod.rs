//! Point-cloud containers and geometry kernels.

mod chamfer;
pub mod io;
mod sampling;

pub use chamfer::chamfer;
pub use sampling::{fps, knn_group, Neighborhood, SeedSet};

use crate::error::{Error, Result};
use crate::scalar::{norm3, Scalar, Vec3};

/// Ordered set of 3D points with optional per-point RGB in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<Vec3<T>>,
    colors: Option<Vec<Vec3<T>>>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Result<Self> {
        check_finite(&points, "point")?;
        Ok(Self {
            points,
            colors: None,
        })
    }

    pub fn with_colors(points: Vec<Vec3<T>>, colors: Vec<Vec3<T>>) -> Result<Self> {
        if colors.len() != points.len() {
            return Err(Error::InvalidCount(format!(
                "{} colors for {} points",
                colors.len(),
                points.len()
            )));
        }
        check_finite(&points, "point")?;
        check_finite(&colors, "color")?;
        Ok(Self {
            points,
            colors: Some(colors),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[Vec3<T>]> {
        self.colors.as_deref()
    }

    pub fn point(&self, i: usize) -> &Vec3<T> {
        &self.points[i]
    }

    /// Applies `f` to every coordinate triple; colors are carried over unchanged.
    pub fn map_points(&self, mut f: impl FnMut(&Vec3<T>) -> Vec3<T>) -> Self {
        Self {
            points: self.points.iter().map(&mut f).collect(),
            colors: self.colors.clone(),
        }
    }

    /// Points (and colors) at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    pub fn centroid(&self) -> Option<Vec3<T>> {
        if self.is_empty() {
            return None;
        }
        let n = T::from_usize(self.len()).unwrap();
        let mut acc = [T::zero(); 3];
        for p in &self.points {
            for d in 0..3 {
                acc[d] += p[d];
            }
        }
        Some([acc[0] / n, acc[1] / n, acc[2] / n])
    }

    /// Axis-aligned bounds as `(min, max)`.
    pub fn bounds(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        let first = *self.points.first()?;
        Some(
            self.points
                .iter()
                .fold((first, first), |(mut lo, mut hi), p| {
                    for d in 0..3 {
                        lo[d] = lo[d].min(p[d]);
                        hi[d] = hi[d].max(p[d]);
                    }
                    (lo, hi)
                }),
        )
    }

    pub fn cast<U: Scalar>(&self) -> PointCloud<U> {
        let conv = |v: &Vec3<T>| v.map(|x| U::lit(x.to_f64_lossy()));
        PointCloud {
            points: self.points.iter().map(conv).collect(),
            colors: self.colors.as_ref().map(|c| c.iter().map(conv).collect()),
        }
    }
}

fn check_finite<T: Scalar>(values: &[Vec3<T>], what: &str) -> Result<()> {
    match values.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
        Some(i) => Err(Error::NonFinite(format!("{what} {i}"))),
        None => Ok(()),
    }
}

/// Centers the cloud at the origin and scales it so the farthest point lies on
/// the unit sphere. A cloud whose points all coincide collapses to the origin.
pub fn normalize_unit_sphere<T: Scalar>(cloud: &PointCloud<T>) -> Result<PointCloud<T>> {
    let c = cloud
        .centroid()
        .ok_or_else(|| Error::EmptyInput("cannot normalize an empty cloud".into()))?;
    let centered = cloud.map_points(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]]);
    let radius = centered.points.iter().map(norm3).fold(T::zero(), T::max);
    if radius == T::zero() {
        return Ok(centered.map_points(|_| [T::zero(); 3]));
    }
    Ok(centered.map_points(|p| [p[0] / radius, p[1] / radius, p[2] / radius]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_single_point_collapses() {
        let cloud = PointCloud::new(vec![[5.0, 5.0, 5.0]]).unwrap();
        let out = normalize_unit_sphere(&cloud).unwrap();
        assert_eq!(out.points(), &[[0.0, 0.0, 0.0]]);
    }

    #[test]
    fn normalize_already_unit() {
        let cloud = PointCloud::new(vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let out = normalize_unit_sphere(&cloud).unwrap();
        assert_eq!(out.points(), cloud.points());
    }

    #[test]
    fn normalize_hand_computed() {
        // centroid (0,0,2), farthest point at distance 2
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [0.0, 0.0, 4.0]]).unwrap();
        let out = normalize_unit_sphere(&cloud).unwrap();
        assert_eq!(out.points(), &[[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn normalize_empty_is_error() {
        let cloud = PointCloud::<f64>::new(vec![]).unwrap();
        assert!(matches!(
            normalize_unit_sphere(&cloud),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn normalize_keeps_colors() {
        let cloud = PointCloud::with_colors(
            vec![[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]],
            vec![[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]],
        )
        .unwrap();
        let out = normalize_unit_sphere(&cloud).unwrap();
        assert_eq!(out.colors(), cloud.colors());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            PointCloud::new(vec![[f64::NAN, 0.0, 0.0]]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            PointCloud::with_colors(vec![[0.0f64; 3]], vec![]),
            Err(Error::InvalidCount(_))
        ));
    }
}
