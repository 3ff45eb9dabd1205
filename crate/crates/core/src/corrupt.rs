//! Seeded point-cloud corruptions and training-style augmentation.
//!
//! Every operation draws from its own [`SplitMix64`] stream seeded with
//! `spec.seed`, so results are pure functions of `(cloud, spec)`.

use std::f64::consts::{FRAC_PI_6, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::rng::SplitMix64;
use crate::scalar::{mat3_mul, mat3_mul_vec, rot_x, rot_y, rot_z, Mat3, Scalar, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    SingleView,
    Jitter,
    Rotate,
    Augment,
}

impl CorruptionKind {
    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::SingleView => "single_view",
            CorruptionKind::Jitter => "jitter",
            CorruptionKind::Rotate => "rotate",
            CorruptionKind::Augment => "augment",
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_view" => Ok(CorruptionKind::SingleView),
            "jitter" => Ok(CorruptionKind::Jitter),
            "rotate" => Ok(CorruptionKind::Rotate),
            "augment" => Ok(CorruptionKind::Augment),
            _ => Err(Error::InvalidConfig(format!("unknown corruption {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    /// Jitter standard deviation.
    pub sigma: f64,
    /// Euler angles are drawn from `(-theta, theta)`.
    pub theta: f64,
    /// Full opening angle of the single-view cone, degrees.
    pub fov_deg: f64,
    /// Depth-buffer resolution per angular axis.
    pub bins: usize,
    /// Camera distance from the origin for single-view.
    pub camera_distance: f64,
    /// Occlusion slack as a fraction of the cloud's bounding-box diagonal.
    pub depth_tolerance: f64,
    /// Isotropic scale range for augmentation.
    pub scale_range: [f64; 2],
    /// Per-axis translation half-range for augmentation.
    pub translate: f64,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            kind: CorruptionKind::Jitter,
            sigma: 0.01,
            theta: FRAC_PI_6,
            fov_deg: 60.0,
            bins: 128,
            camera_distance: 2.0,
            depth_tolerance: 0.01,
            scale_range: [2.0 / 3.0, 1.5],
            translate: 0.2,
            seed: 0,
        }
    }
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            ..Self::default()
        }
    }

    /// Augmentation parameters that leave every cloud unchanged.
    pub fn identity_augment(seed: u64) -> Self {
        Self {
            kind: CorruptionKind::Augment,
            theta: 0.0,
            scale_range: [1.0, 1.0],
            translate: 0.0,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be finite and non-negative");
        }
        let theta_ok = match self.kind {
            CorruptionKind::Augment => (0.0..=std::f64::consts::PI).contains(&self.theta),
            _ => self.theta > 0.0 && self.theta <= std::f64::consts::PI,
        };
        if !theta_ok {
            return bad("theta must lie in (0, pi]");
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return bad("fov_deg must lie in (0, 180)");
        }
        if self.bins == 0 {
            return bad("bins must be positive");
        }
        if !(self.camera_distance > 0.0 && self.camera_distance.is_finite()) {
            return bad("camera_distance must be positive");
        }
        if !(self.depth_tolerance >= 0.0 && self.depth_tolerance.is_finite()) {
            return bad("depth_tolerance must be non-negative");
        }
        let [lo, hi] = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("scale_range must be positive and ordered");
        }
        if !(self.translate >= 0.0 && self.translate.is_finite()) {
            return bad("translate must be non-negative");
        }
        Ok(())
    }
}

/// Result of a corruption; `indices` maps output points to input points when
/// the corruption selects a subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted<T> {
    pub cloud: PointCloud<T>,
    pub indices: Option<Vec<usize>>,
}

/// Runs the corruption selected by `spec.kind`.
pub fn apply<T: Scalar>(cloud: &PointCloud<T>, spec: &CorruptionSpec) -> Result<Corrupted<T>> {
    spec.validate()?;
    let whole = |cloud| {
        Ok(Corrupted {
            cloud,
            indices: None,
        })
    };
    match spec.kind {
        CorruptionKind::Jitter => whole(jitter(cloud, spec)),
        CorruptionKind::Rotate => whole(rotate(cloud, spec)),
        CorruptionKind::Augment => whole(augment(cloud, spec)),
        CorruptionKind::SingleView => {
            let indices = single_view(cloud, spec)?;
            Ok(Corrupted {
                cloud: cloud.subset(&indices),
                indices: Some(indices),
            })
        }
    }
}

/// Adds independent `N(0, sigma^2)` noise to every coordinate, drawn point by
/// point in x, y, z order.
pub fn jitter<T: Scalar>(cloud: &PointCloud<T>, spec: &CorruptionSpec) -> PointCloud<T> {
    let mut rng = SplitMix64::new(spec.seed);
    cloud.map_points(|p| p.map(|x| x + T::lit(spec.sigma * rng.standard_normal())))
}

/// `R = Rz(gamma) Ry(beta) Rx(alpha)` with angles drawn in alpha, beta,
/// gamma order from `(-theta, theta)`.
pub fn random_rotation<T: Scalar>(rng: &mut SplitMix64, theta: f64) -> Mat3<T> {
    let alpha = rng.uniform(-theta, theta);
    let beta = rng.uniform(-theta, theta);
    let gamma = rng.uniform(-theta, theta);
    let ry_rx = mat3_mul(&rot_y(T::lit(beta)), &rot_x(T::lit(alpha)));
    mat3_mul(&rot_z(T::lit(gamma)), &ry_rx)
}

/// Random rotation about the origin.
pub fn rotate<T: Scalar>(cloud: &PointCloud<T>, spec: &CorruptionSpec) -> PointCloud<T> {
    let r = random_rotation(&mut SplitMix64::new(spec.seed), spec.theta);
    cloud.map_points(|p| mat3_mul_vec(&r, p))
}

/// Rotation, then isotropic scale, then translation.
pub fn augment<T: Scalar>(cloud: &PointCloud<T>, spec: &CorruptionSpec) -> PointCloud<T> {
    let mut rng = SplitMix64::new(spec.seed);
    let r = random_rotation::<T>(&mut rng, spec.theta);
    let s = T::lit(rng.uniform(spec.scale_range[0], spec.scale_range[1]));
    let t: Vec3<T> = [0; 3].map(|_| T::lit(rng.uniform(-spec.translate, spec.translate)));
    cloud.map_points(|p| {
        let q = mat3_mul_vec(&r, p);
        [q[0] * s + t[0], q[1] * s + t[1], q[2] * s + t[2]]
    })
}

/// Indices of the points seen from a random viewpoint, in input order.
///
/// The camera sits at `camera_distance` along a uniformly drawn direction
/// and looks at the origin. Points outside the view cone are dropped. The
/// rest are binned on an azimuth by elevation grid of `bins x bins` cells
/// spanning the cone; within a cell, points farther than the cell's nearest
/// range plus `depth_tolerance * diagonal` are occluded.
pub fn single_view<T: Scalar>(cloud: &PointCloud<T>, spec: &CorruptionSpec) -> Result<Vec<usize>> {
    let mut rng = SplitMix64::new(spec.seed);
    let z = rng.uniform(-1.0, 1.0);
    let phi = rng.uniform(0.0, TAU);
    let ring = (1.0 - z * z).max(0.0).sqrt();
    let dir = [ring * phi.cos(), ring * phi.sin(), z];
    let camera = dir.map(|c| c * spec.camera_distance);
    let forward = dir.map(|c| -c);
    let (right, up) = orthonormal_frame(&forward);

    let half = (spec.fov_deg / 2.0).to_radians();
    let delta = match cloud.bounds() {
        Some((lo, hi)) => {
            let d: f64 = (0..3).map(|k| (hi[k] - lo[k]).to_f64_lossy().powi(2)).sum();
            spec.depth_tolerance * d.sqrt()
        }
        None => return Err(Error::EmptyView),
    };

    let bins = spec.bins;
    let cell_of =
        |angle: f64| (((angle + half) / (2.0 * half) * bins as f64).floor() as usize).min(bins - 1);
    let mut hits: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in cloud.points().iter().enumerate() {
        let w = [0, 1, 2].map(|k| p[k].to_f64_lossy() - camera[k]);
        let range = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let depth = dot(&w, &forward);
        if range == 0.0 || depth <= 0.0 || depth < range * half.cos() {
            continue;
        }
        let azimuth = dot(&w, &right).atan2(depth);
        let elevation = (dot(&w, &up) / range).asin();
        hits.push((i, cell_of(azimuth) * bins + cell_of(elevation), range));
    }

    let mut nearest = vec![f64::INFINITY; bins * bins];
    for &(_, cell, range) in &hits {
        nearest[cell] = nearest[cell].min(range);
    }
    let kept: Vec<usize> = hits
        .iter()
        .filter(|&&(_, cell, range)| range <= nearest[cell] + delta)
        .map(|&(i, _, _)| i)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyView);
    }
    Ok(kept)
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn orthonormal_frame(f: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if f[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let cross = |a: &[f64; 3], b: &[f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let r = cross(&helper, f);
    let n = dot(&r, &r).sqrt();
    let right = r.map(|c| c / n);
    (right, cross(f, &right))
}
