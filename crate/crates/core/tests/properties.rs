mod common;

use approx::assert_relative_eq;
use ndarray::Array2;
use proptest::prelude::*;
use shapekit::box6d::{format_box, iou, parse_box, OrientedBox};
use shapekit::corrupt::{self, CorruptionKind, CorruptionSpec};
use shapekit::eval::{aggregate, Capability, QARecord, RunMeta, ScoreRecord};
use shapekit::matching::{cosine_cost, hungarian, CostMatrix};
use shapekit::pointcloud::{chamfer, fps, knn_group, PointCloud, SeedSet};
use shapekit::rng::SplitMix64;
use shapekit::scalar::{dist2, sub3, Vec3};

use common::*;

fn cloud(seed: u64, n: usize) -> PointCloud<f64> {
    PointCloud::new(random_points(&mut SplitMix64::new(seed), n)).unwrap()
}

fn brute_chamfer(a: &[Vec3<f64>], b: &[Vec3<f64>]) -> f64 {
    let directed = |from: &[Vec3<f64>], to: &[Vec3<f64>]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / from.len() as f64
    };
    directed(a, b) + directed(b, a)
}

fn pairwise(points: &[Vec3<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(dist2(&points[i], &points[j]).sqrt());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fps_agrees_with_oracle(seed in any::<u64>(), n in 2usize..60, frac in 0.0f64..1.0, start_frac in 0.0f64..1.0) {
        let c = cloud(seed, n);
        let m = 1 + ((n - 1) as f64 * frac) as usize;
        let start = ((n - 1) as f64 * start_frac) as usize;
        let seeds = fps(&c, m, start).unwrap();
        prop_assert_eq!(&seeds.indices, &fps_oracle(c.points(), m, start));
        let mut sorted = seeds.indices.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), m);
    }

    #[test]
    fn knn_members_are_nearest(seed in any::<u64>(), n in 1usize..50, k_frac in 0.0f64..1.0) {
        let c = cloud(seed, n);
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let seeds = SeedSet { indices: (0..n).step_by(7).collect() };
        for g in knn_group(&c, &seeds, k).unwrap() {
            let centre = *c.point(g.centroid_index);
            prop_assert_eq!(g.member_indices[0], g.centroid_index);
            prop_assert_eq!(g.len(), k);
            let d: Vec<f64> = g.member_indices.iter().map(|&m| dist2(c.point(m), &centre)).collect();
            prop_assert!(d.windows(2).all(|w| w[0] <= w[1]));
            let outside = (0..n)
                .filter(|i| !g.member_indices.contains(i))
                .map(|i| dist2(c.point(i), &centre))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(d[k - 1] <= outside);
            for (m, r) in g.member_indices.iter().zip(&g.relative) {
                prop_assert_eq!(*r, sub3(c.point(*m), &centre));
            }
        }
    }

    #[test]
    fn chamfer_symmetric_and_matches_brute_force(sa in any::<u64>(), sb in any::<u64>(), na in 1usize..40, nb in 1usize..40) {
        let (a, b) = (cloud(sa, na), cloud(sb, nb));
        let ab = chamfer(&a, &b).unwrap();
        assert_relative_eq!(ab, chamfer(&b, &a).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(ab, brute_chamfer(a.points(), b.points()), max_relative = 1e-12);
        prop_assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn hungarian_is_optimal_with_lexicographic_ties(seed in any::<u64>(), n in 1usize..7, levels in 1u64..6) {
        let mut rng = SplitMix64::new(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.below(levels as usize) as f64).collect()).collect();
        let a = hungarian(&CostMatrix::from_rows(&rows).unwrap()).unwrap();
        let (best, argmin) = brute_force(&rows, &permutations(n));
        prop_assert_eq!(a.total_cost, best);
        prop_assert_eq!(&a.sigma, &argmin[0]);
    }

    #[test]
    fn hungarian_row_shift_keeps_optimum(seed in any::<u64>(), n in 1usize..7, row_frac in 0.0f64..1.0, shift in -20i32..20) {
        let mut rng = SplitMix64::new(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.below(9) as f64).collect()).collect();
        let mut shifted = rows.clone();
        let r = ((n - 1) as f64 * row_frac) as usize;
        shifted[r].iter_mut().for_each(|v| *v += shift as f64);
        let a = hungarian(&CostMatrix::from_rows(&rows).unwrap()).unwrap();
        let b = hungarian(&CostMatrix::from_rows(&shifted).unwrap()).unwrap();
        prop_assert_eq!(a.sigma, b.sigma);
        prop_assert_eq!(b.total_cost, a.total_cost + shift as f64);
    }

    #[test]
    fn cosine_cost_ignores_positive_row_scale(seed in any::<u64>(), n in 1usize..6, d in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let views = Array2::from_shape_fn((n, d), |_| rng.uniform(-1.0, 1.0) + 2.0);
        let queries = Array2::from_shape_fn((n, d), |_| rng.uniform(-1.0, 1.0));
        let scales: Vec<f64> = (0..n).map(|_| rng.uniform(0.01, 100.0)).collect();
        let scaled = Array2::from_shape_fn((n, d), |(i, j)| views[[i, j]] * scales[i]);
        let c0 = cosine_cost(views.view(), queries.view()).unwrap();
        let c1 = cosine_cost(scaled.view(), queries.view()).unwrap();
        for (x, y) in c0.values().iter().zip(c1.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(x));
        }
    }

    #[test]
    fn iou_symmetric_bounded_and_rigid_invariant(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let a = random_box(&mut rng, 0.5, (0.1, 0.8));
        let b = random_box(&mut rng, 0.5, (0.1, 0.8));
        let ab = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - iou(&b, &a)).abs() <= 1e-12);
        let r = random_rotation(&mut rng);
        let t = [0; 3].map(|_| rng.uniform(-5.0, 5.0));
        let moved = iou(&a.transformed(&r, &t).unwrap(), &b.transformed(&r, &t).unwrap());
        prop_assert!((ab - moved).abs() < 1e-9);
        prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_text_is_a_fixed_point_after_one_round(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let b = random_box(&mut rng, 3.0, (0.05, 2.0));
        let text = format_box(&b);
        let parsed: OrientedBox<f64> = parse_box(&text).unwrap();
        for (p, q) in parsed.corners().iter().zip(b.corners()) {
            for k in 0..3 {
                prop_assert!((p[k] - q[k]).abs() <= 5e-7);
            }
        }
        prop_assert_eq!(format_box(&parsed), text);
    }

    #[test]
    fn rotation_preserves_distances(seed in any::<u64>(), theta in 1e-6f64..std::f64::consts::PI) {
        let c = cloud(seed, 20);
        let mut spec = CorruptionSpec::new(CorruptionKind::Rotate, seed);
        spec.theta = theta;
        let r = corrupt::rotate(&c, &spec);
        for (x, y) in pairwise(c.points()).iter().zip(pairwise(r.points())) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn augment_is_a_similarity(seed in any::<u64>()) {
        let c = cloud(seed, 20);
        let out = corrupt::augment(&c, &CorruptionSpec::new(CorruptionKind::Augment, seed));
        let ratios: Vec<f64> = pairwise(c.points()).iter().zip(pairwise(out.points())).map(|(x, y)| y / x).collect();
        prop_assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-9));
        prop_assert!((2.0 / 3.0 - 1e-12..=1.5 + 1e-12).contains(&ratios[0]));
    }

    #[test]
    fn single_view_keeps_a_subset_in_order(seed in any::<u64>(), n in 1usize..200) {
        let c = cloud(seed, n);
        match corrupt::single_view(&c, &CorruptionSpec::new(CorruptionKind::SingleView, seed)) {
            Ok(kept) => {
                prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(kept.iter().all(|&i| i < n));
            }
            Err(e) => prop_assert_eq!(e.name(), "EmptyView"),
        }
    }

    #[test]
    fn total_is_the_count_weighted_mean_of_capabilities(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = SplitMix64::new(seed);
        let records: Vec<QARecord> = (0..n)
            .map(|i| QARecord {
                id: format!("q{i}"),
                capability: Capability::ALL[rng.below(5)],
                question: String::new(),
                ground_truth: String::new(),
                model_answer: None,
            })
            .collect();
        let mut scores = Vec::new();
        for r in &records {
            if rng.next_f64() < 0.8 {
                scores.push(ScoreRecord::from_rounds(r.id.clone(), vec![rng.next_f64(), rng.next_f64()]).unwrap());
            }
        }
        let meta = RunMeta { judge: "t".into(), k_rounds: 2, seed: 0 };
        let report = aggregate(&scores, &records, &meta).unwrap();
        prop_assert_eq!(report.answered, scores.len());
        prop_assert_eq!(report.total_records, n);
        let weighted: f64 = Capability::ALL
            .iter()
            .filter_map(|&c| report.per_capability.get(c).map(|s| s * *report.counts.get(c) as f64))
            .sum();
        match report.total {
            Some(t) => prop_assert!((t - weighted / scores.len() as f64).abs() < 1e-12),
            None => prop_assert!(scores.is_empty()),
        }
    }
}
