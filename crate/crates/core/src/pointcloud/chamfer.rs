use super::PointCloud;
use crate::error::{Error, Result};
use crate::scalar::{dist2, Scalar, Vec3};

/// Symmetric Chamfer distance: mean squared nearest-neighbor distance from
/// `a` to `b` plus the same from `b` to `a`.
pub fn chamfer<T: Scalar>(a: &PointCloud<T>, b: &PointCloud<T>) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput(
            "chamfer needs two non-empty clouds".into(),
        ));
    }
    Ok(directed(a.points(), b.points()) + directed(b.points(), a.points()))
}

fn directed<T: Scalar>(from: &[Vec3<T>], to: &[Vec3<T>]) -> T {
    let total: T = from
        .iter()
        .map(|p| to.iter().map(|q| dist2(p, q)).fold(T::infinity(), T::min))
        .sum();
    total / T::from_usize(from.len()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_points() {
        let a = PointCloud::new(vec![[0.0, 0.0, 0.0]]).unwrap();
        let b = PointCloud::new(vec![[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(chamfer(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn self_distance_zero() {
        let a = PointCloud::new(vec![[0.1, 0.2, 0.3], [0.5, -0.5, 0.0]]).unwrap();
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn empty_rejected() {
        let a = PointCloud::new(vec![[0.0f64; 3]]).unwrap();
        let e = PointCloud::new(vec![]).unwrap();
        assert!(matches!(chamfer(&a, &e), Err(Error::EmptyInput(_))));
    }
}
