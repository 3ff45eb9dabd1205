//! Array-in, array-out entry points over `f64` buffers.
//!
//! Points are row-major `N x 3` slices, boxes row-major `8 x 3`. These wrap
//! the generic kernels without changing any arithmetic, so results match the
//! typed API and the command-line tool exactly. Failures carry the library
//! [`Error`], whose [`Error::name`] identifies the kind.

use crate::box6d;
use crate::corrupt::{self, CorruptionSpec};
use crate::error::{Error, Result};
use crate::pointcloud::{self, PointCloud, SeedSet};
use crate::scalar::Vec3;

fn rows(data: &[f64], what: &str) -> Result<Vec<Vec3<f64>>> {
    if !data.len().is_multiple_of(3) {
        return Err(Error::InvalidCount(format!(
            "{what} length {} is not a multiple of 3",
            data.len()
        )));
    }
    Ok(data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

fn flatten(points: &[Vec3<f64>]) -> Vec<f64> {
    points.iter().flatten().copied().collect()
}

fn cloud(points: &[f64]) -> Result<PointCloud<f64>> {
    PointCloud::new(rows(points, "points")?)
}

fn oriented_box(corners: &[f64]) -> Result<box6d::OrientedBox<f64>> {
    let c = rows(corners, "corners")?;
    let c: [Vec3<f64>; 8] = c
        .try_into()
        .map_err(|v: Vec<_>| Error::InvalidBox(format!("{} corners, expected 8", v.len())))?;
    box6d::OrientedBox::from_corners(c)
}

pub fn fps(points: &[f64], n_seeds: usize, start_index: usize) -> Result<Vec<usize>> {
    Ok(pointcloud::fps(&cloud(points)?, n_seeds, start_index)?.indices)
}

/// Returns member indices (`n_seeds x k`) and centered offsets
/// (`n_seeds x k x 3`), both row-major.
pub fn knn_group(points: &[f64], seeds: &[usize], k: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let cloud = cloud(points)?;
    let seeds = SeedSet {
        indices: seeds.to_vec(),
    };
    let groups = pointcloud::knn_group(&cloud, &seeds, k)?;
    let members = groups
        .iter()
        .flat_map(|g| g.member_indices.iter().copied())
        .collect();
    let relative = groups.iter().flat_map(|g| flatten(&g.relative)).collect();
    Ok((members, relative))
}

pub fn chamfer(a: &[f64], b: &[f64]) -> Result<f64> {
    pointcloud::chamfer(&cloud(a)?, &cloud(b)?)
}

pub fn iou(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(box6d::iou(&oriented_box(a)?, &oriented_box(b)?))
}

pub fn parse_box(text: &str) -> Result<Vec<f64>> {
    Ok(flatten(box6d::parse_box::<f64>(text)?.corners()))
}

pub fn format_box(corners: &[f64]) -> Result<String> {
    Ok(box6d::format_box(&oriented_box(corners)?))
}

pub fn jitter(points: &[f64], spec: &CorruptionSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(flatten(corrupt::jitter(&cloud(points)?, spec).points()))
}

pub fn rotate(points: &[f64], spec: &CorruptionSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(flatten(corrupt::rotate(&cloud(points)?, spec).points()))
}

pub fn augment(points: &[f64], spec: &CorruptionSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(flatten(corrupt::augment(&cloud(points)?, spec).points()))
}

/// Returns the kept points and their input indices.
pub fn single_view(points: &[f64], spec: &CorruptionSpec) -> Result<(Vec<f64>, Vec<usize>)> {
    spec.validate()?;
    let cloud = cloud(points)?;
    let kept = corrupt::single_view(&cloud, spec)?;
    Ok((flatten(cloud.subset(&kept).points()), kept))
}
