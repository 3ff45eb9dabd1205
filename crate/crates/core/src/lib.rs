//! Geometry, matching, encoder and evaluation kernels for point-cloud
//! language-model pipelines.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the precision for common uses.

#[cfg(feature = "blas")]
extern crate blas_src;

pub mod box6d;
pub mod corrupt;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod flat;
pub mod matching;
pub mod pointcloud;
pub mod rng;
pub mod scalar;
pub mod wb01;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PointCloud32 = pointcloud::PointCloud<f32>;
pub type PointCloud64 = pointcloud::PointCloud<f64>;
pub type Neighborhood64 = pointcloud::Neighborhood<f64>;
pub type CostMatrix64 = matching::CostMatrix<f64>;
pub type Assignment64 = matching::Assignment<f64>;
pub type OrientedBox64 = box6d::OrientedBox<f64>;
pub type Pose64 = box6d::Pose<f64>;
pub type WeightBank32 = encoder::WeightBank<f32>;
pub type Encoder32 = encoder::Encoder<f32>;
pub type Encoder64 = encoder::Encoder<f64>;
