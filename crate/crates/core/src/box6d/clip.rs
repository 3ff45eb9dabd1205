//! Exact box-box intersection by convex polytope clipping.
//!
//! The polytope is a list of planar faces with outward (counter-clockwise)
//! vertex order. Clipping against a half-space clips every face
//! Sutherland-Hodgman style and closes the cut with a cap polygon built from
//! the points that landed on the plane. Volume comes from the divergence
//! theorem as a sum of signed tetrahedra over fan-triangulated faces.

use std::cmp::Ordering;

use super::OrientedBox;
use crate::scalar::{add3, cross3, dot3, norm3, scale3, sub3, Scalar, Vec3};

/// Faces of a canonical box, outward CCW.
const BOX_FACES: [[usize; 4]; 6] = [
    [0, 1, 3, 2],
    [4, 6, 7, 5],
    [0, 4, 5, 1],
    [2, 3, 7, 6],
    [0, 2, 6, 4],
    [1, 5, 7, 3],
];

type Face<T> = Vec<Vec3<T>>;

/// Volume of `a ∩ b`.
pub fn intersection_volume<T: Scalar>(a: &OrientedBox<T>, b: &OrientedBox<T>) -> T {
    // Work relative to a's center to keep magnitudes small.
    let origin = a.center();
    let corners = a.canonical_corners().map(|c| sub3(&c, &origin));
    let mut faces: Vec<Face<T>> = BOX_FACES
        .iter()
        .map(|f| f.iter().map(|&i| corners[i]).collect())
        .collect();
    let scale = T::one()
        + a.half_extents()
            .iter()
            .chain(b.half_extents().iter())
            .fold(T::zero(), |m, &h| m.max(h))
        + norm3(&sub3(&b.center(), &origin));
    let eps = T::lit(1e-12) * scale;
    for (n, d) in b.planes() {
        let d = d - dot3(&n, &origin);
        faces = clip(faces, &n, d, eps);
        if faces.len() < 4 {
            return T::zero();
        }
    }
    volume(&faces).max(T::zero())
}

/// Intersection over union, clamped to `[0, 1]`.
pub fn iou<T: Scalar>(a: &OrientedBox<T>, b: &OrientedBox<T>) -> T {
    let inter = intersection_volume(a, b);
    let union = a.volume() + b.volume() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).max(T::zero()).min(T::one())
}

/// Keeps the part of the polytope with `n . x <= d`.
fn clip<T: Scalar>(faces: Vec<Face<T>>, n: &Vec3<T>, d: T, eps: T) -> Vec<Face<T>> {
    let mut out = Vec::with_capacity(faces.len() + 1);
    let mut cap: Vec<Vec3<T>> = Vec::new();
    let mut coplanar_outward = false;
    for face in faces {
        let dist: Vec<T> = face.iter().map(|p| dot3(n, p) - d).collect();
        if dist.iter().all(|x| x.abs() <= eps) && dot3(&face_normal(&face), n) > T::zero() {
            // face already lies on the cutting plane, facing out
            coplanar_outward = true;
            out.push(face);
            continue;
        }
        let mut clipped = Vec::with_capacity(face.len() + 1);
        for i in 0..face.len() {
            let j = (i + 1) % face.len();
            let (p, q) = (face[i], face[j]);
            let (dp, dq) = (dist[i], dist[j]);
            if dp <= eps {
                clipped.push(p);
                if dp >= -eps {
                    cap.push(p);
                }
            }
            if (dp < -eps && dq > eps) || (dp > eps && dq < -eps) {
                let t = dp / (dp - dq);
                let x = add3(&p, &scale3(&sub3(&q, &p), t));
                clipped.push(x);
                cap.push(x);
            }
        }
        if clipped.len() >= 3 {
            out.push(clipped);
        }
    }
    if !coplanar_outward {
        if let Some(face) = cap_polygon(cap, n, eps) {
            out.push(face);
        }
    }
    out
}

/// Orders points on a plane counter-clockwise about `n`, merging duplicates.
fn cap_polygon<T: Scalar>(mut pts: Vec<Vec3<T>>, n: &Vec3<T>, eps: T) -> Option<Face<T>> {
    if pts.len() < 3 {
        return None;
    }
    let count = T::from_usize(pts.len()).unwrap();
    let center = scale3(
        &pts.iter().fold([T::zero(); 3], |acc, p| add3(&acc, p)),
        T::one() / count,
    );
    // in-plane basis with u x v = n
    let helper = if n[0].abs() < T::lit(0.9) {
        [T::one(), T::zero(), T::zero()]
    } else {
        [T::zero(), T::one(), T::zero()]
    };
    let u = cross3(&helper, n);
    let u = scale3(&u, T::one() / norm3(&u));
    let v = cross3(n, &u);
    let angle = |p: &Vec3<T>| {
        let r = sub3(p, &center);
        dot3(&r, &v).atan2(dot3(&r, &u))
    };
    pts.sort_by(|a, b| angle(a).partial_cmp(&angle(b)).unwrap_or(Ordering::Equal));
    let merge = eps * T::lit(16.0);
    let mut out: Face<T> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().is_none_or(|q| norm3(&sub3(&p, q)) > merge) {
            out.push(p);
        }
    }
    while out.len() > 1 && norm3(&sub3(&out[0], out.last().unwrap())) <= merge {
        out.pop();
    }
    (out.len() >= 3).then_some(out)
}

/// Newell normal (unnormalized).
fn face_normal<T: Scalar>(face: &[Vec3<T>]) -> Vec3<T> {
    let mut acc = [T::zero(); 3];
    for i in 0..face.len() {
        acc = add3(&acc, &cross3(&face[i], &face[(i + 1) % face.len()]));
    }
    acc
}

fn volume<T: Scalar>(faces: &[Face<T>]) -> T {
    let mut six_v = T::zero();
    for face in faces {
        let a = face[0];
        for w in face[1..].windows(2) {
            six_v += dot3(&a, &cross3(&w[0], &w[1]));
        }
    }
    six_v / T::lit(6.0)
}
