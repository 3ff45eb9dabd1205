use super::corner_sign;
use crate::error::{Error, Result};
use crate::scalar::{
    add3, cross3, dot3, mat3_col, mat3_det, mat3_mul_vec, mat3_transpose, norm3, scale3, sub3,
    Mat3, Scalar, Vec3,
};

/// Half-extents at or below this are rejected as degenerate.
pub const MIN_HALF_EXTENT: f64 = 1e-9;
/// Orthonormality tolerance for rotations and rectangularity tolerance for
/// corner sets. For corners the tolerance is scaled by the box diagonal when
/// that exceeds 1, and by the ratio of diagonal to shortest edge: rounding
/// each coordinate by `e` tilts the fitted axes by about `e / shortest edge`,
/// which moves far corners by that angle times the diagonal.
pub const SHAPE_TOL: f64 = 1e-6;

/// Center, half-extents along the box axes and the rotation whose columns
/// are those axes in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub center: Vec3<T>,
    pub half_extents: Vec3<T>,
    pub rotation: Mat3<T>,
}

impl<T: Scalar> Pose<T> {
    pub fn corner(&self, i: usize) -> Vec3<T> {
        let local: Vec3<T> = std::array::from_fn(|k| {
            let h = self.half_extents[k];
            if corner_sign(i, k) > 0 {
                h
            } else {
                -h
            }
        });
        add3(&self.center, &mat3_mul_vec(&self.rotation, &local))
    }

    pub fn corners(&self) -> [Vec3<T>; 8] {
        std::array::from_fn(|i| self.corner(i))
    }

    pub fn volume(&self) -> T {
        T::lit(8.0) * self.half_extents[0] * self.half_extents[1] * self.half_extents[2]
    }

    /// Coordinates of `p` in the box frame.
    pub fn to_local(&self, p: &Vec3<T>) -> Vec3<T> {
        mat3_mul_vec(&mat3_transpose(&self.rotation), &sub3(p, &self.center))
    }

    pub fn contains(&self, p: &Vec3<T>) -> bool {
        let l = self.to_local(p);
        (0..3).all(|k| l[k].abs() <= self.half_extents[k])
    }

    fn validate(&self) -> Result<()> {
        let vals = self
            .center
            .iter()
            .chain(self.half_extents.iter())
            .chain(self.rotation.iter().flatten());
        if vals.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite pose component".into()));
        }
        if self
            .half_extents
            .iter()
            .any(|&h| h <= T::lit(MIN_HALF_EXTENT))
        {
            return Err(Error::InvalidPose(format!(
                "half extents {:?} must exceed {MIN_HALF_EXTENT}",
                self.half_extents
            )));
        }
        let tol = T::lit(SHAPE_TOL);
        for i in 0..3 {
            for j in 0..3 {
                let ci = mat3_col(&self.rotation, i);
                let cj = mat3_col(&self.rotation, j);
                let target = if i == j { T::one() } else { T::zero() };
                if (dot3(&ci, &cj) - target).abs() > tol {
                    return Err(Error::InvalidPose("rotation is not orthonormal".into()));
                }
            }
        }
        if mat3_det(&self.rotation) <= T::zero() {
            return Err(Error::InvalidPose(
                "rotation has negative determinant".into(),
            ));
        }
        Ok(())
    }
}

/// An oriented box given by 8 corners, with its fitted pose.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox<T> {
    corners: [Vec3<T>; 8],
    pose: Pose<T>,
}

impl<T: Scalar> OrientedBox<T> {
    /// Validates `corners` (any order) and keeps them as given.
    pub fn from_corners(corners: [Vec3<T>; 8]) -> Result<Self> {
        let pose = fit_pose_from_corners(&corners)?;
        Ok(Self { corners, pose })
    }

    pub fn from_pose(pose: Pose<T>) -> Result<Self> {
        pose.validate()?;
        Ok(Self {
            corners: pose.corners(),
            pose,
        })
    }

    /// Corners as supplied.
    pub fn corners(&self) -> &[Vec3<T>; 8] {
        &self.corners
    }

    /// Corners regenerated from the pose in canonical sign order.
    pub fn canonical_corners(&self) -> [Vec3<T>; 8] {
        self.pose.corners()
    }

    pub fn pose(&self) -> &Pose<T> {
        &self.pose
    }

    pub fn center(&self) -> Vec3<T> {
        self.pose.center
    }

    pub fn half_extents(&self) -> Vec3<T> {
        self.pose.half_extents
    }

    pub fn rotation(&self) -> Mat3<T> {
        self.pose.rotation
    }

    pub fn volume(&self) -> T {
        self.pose.volume()
    }

    pub fn contains(&self, p: &Vec3<T>) -> bool {
        self.pose.contains(p)
    }

    /// Applies `x -> rotation * x + translation` to the box.
    pub fn transformed(&self, rotation: &Mat3<T>, translation: &Vec3<T>) -> Result<Self> {
        let map = |p: &Vec3<T>| add3(&mat3_mul_vec(rotation, p), translation);
        Self::from_corners(self.corners.map(|c| map(&c)))
    }

    /// Outward face planes `(normal, offset)` with `normal . x <= offset` inside.
    pub fn planes(&self) -> [(Vec3<T>, T); 6] {
        let p = &self.pose;
        std::array::from_fn(|f| {
            let axis = f / 2;
            let n = mat3_col(&p.rotation, axis);
            let n = if f % 2 == 0 { scale3(&n, -T::one()) } else { n };
            (n, dot3(&n, &p.center) + p.half_extents[axis])
        })
    }
}

/// Builds the canonical corner list for a pose.
pub fn corners_from_pose<T: Scalar>(
    center: Vec3<T>,
    half_extents: Vec3<T>,
    rotation: Mat3<T>,
) -> Result<OrientedBox<T>> {
    OrientedBox::from_pose(Pose {
        center,
        half_extents,
        rotation,
    })
}

/// Recovers a pose from 8 corners in any order.
///
/// Corners already in canonical order with a right-handed frame decode to
/// exactly that frame. Any other ordering is re-canonicalized: the frame is
/// taken as the proper signed permutation of the box axes closest to the
/// identity (largest trace).
pub fn fit_pose_from_corners<T: Scalar>(corners: &[Vec3<T>; 8]) -> Result<Pose<T>> {
    if corners.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidBox("non-finite corner".into()));
    }
    let p0 = corners[0];
    let offsets: Vec<Vec3<T>> = corners.iter().map(|c| sub3(c, &p0)).collect();
    let diag = offsets.iter().map(norm3).fold(T::zero(), T::max);
    if diag <= T::lit(2.0 * MIN_HALF_EXTENT) {
        return Err(Error::InvalidBox("degenerate extent".into()));
    }
    let tol = T::lit(SHAPE_TOL) * diag.max(T::one());
    let labels = label_corners(&offsets, tol).ok_or_else(|| {
        Error::InvalidBox("corners do not form a rectangular box with positive extents".into())
    })?;

    let eight = T::lit(8.0);
    let mut center = [T::zero(); 3];
    for c in corners {
        center = add3(&center, c);
    }
    center = scale3(&center, T::one() / eight);
    // Sum_i s_k(i) (c_i - center) / 8 = h_k * axis_k
    let mut axes = [[T::zero(); 3]; 3];
    for (i, c) in corners.iter().enumerate() {
        let d = sub3(c, &center);
        for (k, axis) in axes.iter_mut().enumerate() {
            let s = T::lit(corner_sign(labels[i], k) as f64);
            *axis = add3(axis, &scale3(&d, s / eight));
        }
    }
    let mut half = [T::zero(); 3];
    for k in 0..3 {
        half[k] = norm3(&axes[k]);
        if half[k] <= T::lit(MIN_HALF_EXTENT) {
            return Err(Error::InvalidBox("degenerate extent".into()));
        }
    }
    let m: Mat3<T> = std::array::from_fn(|r| std::array::from_fn(|k| axes[k][r] / half[k]));
    let frame = nearest_orthogonal(m)
        .ok_or_else(|| Error::InvalidBox("box axes are linearly dependent".into()))?;

    let canonical = mat3_det(&frame) > T::zero() && labels.iter().enumerate().all(|(i, &l)| i == l);
    let pose = if canonical {
        Pose {
            center,
            half_extents: half,
            rotation: frame,
        }
    } else {
        let (rotation, half_extents) = closest_proper_frame(&frame, &half);
        Pose {
            center,
            half_extents,
            rotation,
        }
    };

    let residual = (0..8)
        .map(|i| {
            let fitted = Pose {
                center,
                half_extents: half,
                rotation: frame,
            }
            .corner(labels[i]);
            (0..3).fold(T::zero(), |m, k| m.max((fitted[k] - corners[i][k]).abs()))
        })
        .fold(T::zero(), T::max);
    let shortest = T::lit(2.0) * half.iter().copied().fold(T::infinity(), T::min);
    if residual > tol * (diag / shortest).max(T::one()) {
        return Err(Error::InvalidBox(format!(
            "corners deviate from a rectangular box by {residual}"
        )));
    }
    Ok(pose)
}

/// Assigns each corner its sign-pattern index relative to corner 0, which is
/// labelled `---`. Returns `None` if no consistent labelling exists.
fn label_corners<T: Scalar>(offsets: &[Vec3<T>], tol: T) -> Option<[usize; 8]> {
    let min_edge = T::lit(2.0 * MIN_HALF_EXTENT);
    // loose angular screen; the residual check decides rectangularity
    let ortho = T::lit(1e-3);
    let is_ortho = |a: &Vec3<T>, b: &Vec3<T>| dot3(a, b).abs() <= ortho * norm3(a) * norm3(b);
    let candidates: Vec<usize> = (1..8).filter(|&k| norm3(&offsets[k]) > min_edge).collect();
    let mut triples = Vec::new();
    // canonical edge neighbours first so ordered input keeps its labelling
    triples.push([4usize, 2, 1]);
    for (ai, &a) in candidates.iter().enumerate() {
        for (bi, &b) in candidates.iter().enumerate().skip(ai + 1) {
            for &c in candidates.iter().skip(bi + 1) {
                triples.push([a, b, c]);
            }
        }
    }
    for [x, y, z] in triples {
        let (ex, ey, ez) = (offsets[x], offsets[y], offsets[z]);
        if [ex, ey, ez].iter().any(|e| norm3(e) <= min_edge) {
            continue;
        }
        if !(is_ortho(&ex, &ey) && is_ortho(&ex, &ez) && is_ortho(&ey, &ez)) {
            continue;
        }
        let predicted: [Vec3<T>; 8] = std::array::from_fn(|i| {
            let mut p = [T::zero(); 3];
            if i & 4 != 0 {
                p = add3(&p, &ex);
            }
            if i & 2 != 0 {
                p = add3(&p, &ey);
            }
            if i & 1 != 0 {
                p = add3(&p, &ez);
            }
            p
        });
        let mut labels = [usize::MAX; 8];
        let mut used = [false; 8];
        let mut ok = true;
        for (k, off) in offsets.iter().enumerate() {
            let best = (0..8)
                .filter(|&i| !used[i])
                .map(|i| (i, norm3(&sub3(off, &predicted[i]))))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            match best {
                Some((i, d)) if d <= tol * T::lit(4.0) => {
                    labels[k] = i;
                    used[i] = true;
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(labels);
        }
    }
    None
}

/// Orthogonal polar factor of `m` by Newton iteration `R <- (R + R^-T) / 2`.
fn nearest_orthogonal<T: Scalar>(m: Mat3<T>) -> Option<Mat3<T>> {
    let mut r = m;
    for _ in 0..50 {
        let det = mat3_det(&r);
        if det.abs() <= T::epsilon() {
            return None;
        }
        let inv_t = [
            scale3(&cross3(&r[1], &r[2]), T::one() / det),
            scale3(&cross3(&r[2], &r[0]), T::one() / det),
            scale3(&cross3(&r[0], &r[1]), T::one() / det),
        ];
        let half = T::lit(0.5);
        let next: Mat3<T> =
            std::array::from_fn(|i| std::array::from_fn(|j| half * (r[i][j] + inv_t[i][j])));
        let change = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .fold(T::zero(), |m, (i, j)| m.max((next[i][j] - r[i][j]).abs()));
        r = next;
        if change <= T::epsilon() * T::lit(4.0) {
            break;
        }
    }
    Some(r)
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Among the 24 proper relabellings of the box axes, the one whose frame has
/// the largest trace; the first in enumeration order wins ties.
fn closest_proper_frame<T: Scalar>(frame: &Mat3<T>, half: &Vec3<T>) -> (Mat3<T>, Vec3<T>) {
    let mut best: Option<(T, Mat3<T>, Vec3<T>)> = None;
    for perm in PERMUTATIONS {
        for signs in 0..8u8 {
            let sign = |j: usize| {
                if signs >> (2 - j) & 1 == 1 {
                    -T::one()
                } else {
                    T::one()
                }
            };
            let r: Mat3<T> =
                std::array::from_fn(|i| std::array::from_fn(|j| sign(j) * frame[i][perm[j]]));
            if mat3_det(&r) <= T::zero() {
                continue;
            }
            let trace = r[0][0] + r[1][1] + r[2][2];
            if best.as_ref().is_none_or(|(t, _, _)| trace > *t) {
                best = Some((trace, r, std::array::from_fn(|j| half[perm[j]])));
            }
        }
    }
    let (_, r, h) = best.expect("a proper relabelling always exists");
    (r, h)
}
