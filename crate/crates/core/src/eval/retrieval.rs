use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Top-k accuracy of cosine-similarity class ranking.
///
/// Classes are ranked per shape by decreasing cosine similarity, equal
/// similarities by lower class index. Returns `(k, accuracy)` for each
/// requested `k`; `k` larger than the class count behaves like the count.
pub fn zeroshot_topk<T: Scalar>(
    shape_embeds: ArrayView2<T>,
    class_embeds: ArrayView2<T>,
    labels: &[usize],
    ks: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let (m, c) = (shape_embeds.nrows(), class_embeds.nrows());
    if m == 0 || c == 0 {
        return Err(Error::EmptyInput(
            "need at least one shape and one class".into(),
        ));
    }
    if shape_embeds.ncols() != class_embeds.ncols() {
        return Err(Error::InvalidConfig(
            "shape and class embeddings differ in width".into(),
        ));
    }
    if labels.len() != m {
        return Err(Error::InvalidCount(format!(
            "{} labels for {m} shapes",
            labels.len()
        )));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::InvalidCount(format!(
            "label {l} but only {c} classes"
        )));
    }
    if ks.contains(&0) {
        return Err(Error::InvalidCount("k must be positive".into()));
    }
    let norms = |e: ArrayView2<T>, what: &str| -> Result<Vec<T>> {
        e.rows()
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let n = r.dot(&r).sqrt();
                if n > T::zero() {
                    Ok(n)
                } else {
                    Err(Error::DegenerateFeature(format!(
                        "{what} {i} has zero norm"
                    )))
                }
            })
            .collect()
    };
    let shape_norms = norms(shape_embeds, "shape embedding")?;
    let class_norms = norms(class_embeds, "class embedding")?;

    let mut hits = vec![0usize; ks.len()];
    for (i, (row, &label)) in shape_embeds.rows().into_iter().zip(labels).enumerate() {
        let sims: Vec<T> = class_embeds
            .rows()
            .into_iter()
            .zip(&class_norms)
            .map(|(cls, &cn)| row.dot(&cls) / (shape_norms[i] * cn))
            .collect();
        let target = sims[label];
        let rank = sims
            .iter()
            .enumerate()
            .filter(|&(j, &s)| s > target || (s == target && j < label))
            .count();
        for (h, &k) in hits.iter_mut().zip(ks) {
            if rank < k {
                *h += 1;
            }
        }
    }
    Ok(ks
        .iter()
        .zip(hits)
        .map(|(&k, h)| (k, h as f64 / m as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use ndarray::{array, Array2};

    #[test]
    fn basis_is_perfect() {
        let classes = Array2::<f64>::eye(4);
        let shapes = array![[0.0, 0.0, 2.0, 0.0], [1.0, 0.0, 0.0, 0.0]];
        let acc = zeroshot_topk(shapes.view(), classes.view(), &[2, 0], &[1, 3, 5]).unwrap();
        assert_eq!(acc, vec![(1, 1.0), (3, 1.0), (5, 1.0)]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let classes = array![[1.0, 0.0], [1.0, 0.0]];
        let shapes = array![[1.0, 0.0], [1.0, 0.0]];
        let acc = zeroshot_topk(shapes.view(), classes.view(), &[0, 1], &[1, 2]).unwrap();
        assert_eq!(acc, vec![(1, 0.5), (2, 1.0)]);
    }

    #[test]
    fn matches_full_sort() {
        let mut rng = SplitMix64::new(77);
        let shapes = Array2::from_shape_fn((20, 6), |_| rng.standard_normal());
        let classes = Array2::from_shape_fn((5, 6), |_| rng.standard_normal());
        let labels: Vec<usize> = (0..20).map(|_| rng.below(5)).collect();
        let acc = zeroshot_topk(shapes.view(), classes.view(), &labels, &[1, 3, 5]).unwrap();
        for (k, a) in acc {
            let mut hits = 0;
            for (i, &label) in labels.iter().enumerate() {
                let s = shapes.row(i);
                let mut order: Vec<(f64, usize)> = (0..5)
                    .map(|j| {
                        let c = classes.row(j);
                        (s.dot(&c) / (s.dot(&s).sqrt() * c.dot(&c).sqrt()), j)
                    })
                    .collect();
                order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
                if order[..k].iter().any(|&(_, j)| j == label) {
                    hits += 1;
                }
            }
            assert_eq!(a, hits as f64 / 20.0);
        }
    }

    #[test]
    fn errors() {
        let classes = array![[1.0, 0.0], [0.0, 0.0]];
        let shapes = array![[1.0, 0.0]];
        assert!(matches!(
            zeroshot_topk(shapes.view(), classes.view(), &[0], &[1]),
            Err(Error::DegenerateFeature(_))
        ));
        let classes = Array2::<f64>::eye(2);
        assert!(zeroshot_topk(shapes.view(), classes.view(), &[2], &[1]).is_err());
        assert!(zeroshot_topk(shapes.view(), classes.view(), &[0], &[0]).is_err());
    }
}
