//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use shapekit::box6d::{corners_from_pose, OrientedBox};
use shapekit::rng::SplitMix64;
use shapekit::scalar::{Mat3, Vec3};

pub fn random_points(rng: &mut SplitMix64, n: usize) -> Vec<Vec3<f64>> {
    (0..n)
        .map(|_| [0; 3].map(|_| rng.uniform(-1.0, 1.0)))
        .collect()
}

fn sq(a: &Vec3<f64>, b: &Vec3<f64>) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Greedy maximin selection recomputed from scratch at every step.
pub fn fps_oracle(points: &[Vec3<f64>], n: usize, start: usize) -> Vec<usize> {
    let mut chosen = vec![start];
    while chosen.len() < n {
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let d = chosen
                .iter()
                .map(|&c| sq(p, &points[c]))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, i));
            }
        }
        chosen.push(best.unwrap().1);
    }
    chosen
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
    out
}

pub fn perm_cost(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

/// Minimum total cost and every permutation attaining it.
pub fn brute_force(cost: &[Vec<f64>], perms: &[Vec<usize>]) -> (f64, Vec<Vec<usize>>) {
    let best = perms
        .iter()
        .map(|p| perm_cost(cost, p))
        .fold(f64::INFINITY, f64::min);
    let argmin = perms
        .iter()
        .filter(|p| perm_cost(cost, p) == best)
        .cloned()
        .collect();
    (best, argmin)
}

/// Uniformly distributed rotation from a normalized Gaussian quaternion.
pub fn random_rotation(rng: &mut SplitMix64) -> Mat3<f64> {
    let mut q = [0.0; 4].map(|_| rng.standard_normal());
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= n);
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

pub fn random_box(rng: &mut SplitMix64, center_range: f64, half: (f64, f64)) -> OrientedBox<f64> {
    let center = [0; 3].map(|_| rng.uniform(-center_range, center_range));
    let h = [0; 3].map(|_| rng.uniform(half.0, half.1));
    corners_from_pose(center, h, random_rotation(rng)).unwrap()
}

/// Radical inverse of `i` in `base`.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn inside(planes: &[(Vec3<f64>, f64); 6], p: &Vec3<f64>) -> bool {
    planes
        .iter()
        .all(|(n, d)| n[0] * p[0] + n[1] * p[1] + n[2] * p[2] <= *d)
}

/// IoU estimated from a Halton point set over the union's bounding box.
pub fn monte_carlo_iou(a: &OrientedBox<f64>, b: &OrientedBox<f64>, samples: u64) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in a.corners().iter().chain(b.corners()) {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let (pa, pb) = (a.planes(), b.planes());
    let (mut na, mut nb, mut both) = (0u64, 0u64, 0u64);
    for i in 1..=samples {
        let u = [halton(i, 2), halton(i, 3), halton(i, 5)];
        let p = [0, 1, 2].map(|k| lo[k] + u[k] * (hi[k] - lo[k]));
        let (ia, ib) = (inside(&pa, &p), inside(&pb, &p));
        na += ia as u64;
        nb += ib as u64;
        both += (ia && ib) as u64;
    }
    both as f64 / (na + nb - both) as f64
}
