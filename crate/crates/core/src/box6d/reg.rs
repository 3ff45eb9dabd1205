use super::{iou, OrientedBox};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default grounding hit threshold.
pub const REG_IOU_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingResult<T> {
    /// `None` when the prediction could not be parsed.
    pub predicted: Option<OrientedBox<T>>,
    pub ground_truth: OrientedBox<T>,
    pub iou: T,
    pub hit: bool,
}

pub fn evaluate_grounding<T: Scalar>(
    predicted: Option<OrientedBox<T>>,
    ground_truth: OrientedBox<T>,
    threshold: T,
) -> GroundingResult<T> {
    let iou = predicted
        .as_ref()
        .map_or(T::zero(), |p| iou(p, &ground_truth));
    GroundingResult {
        hit: predicted.is_some() && iou >= threshold,
        predicted,
        ground_truth,
        iou,
    }
}

#[derive(Debug, Clone)]
pub struct RegReport<T> {
    pub accuracy: f64,
    pub hits: usize,
    pub total: usize,
    pub unparsed: usize,
    pub threshold: T,
    pub results: Vec<GroundingResult<T>>,
}

/// Fraction of pairs whose IoU reaches `threshold`. Unparsable predictions
/// (`None`) count as misses.
pub fn reg_accuracy<T: Scalar>(
    pairs: Vec<(Option<OrientedBox<T>>, OrientedBox<T>)>,
    threshold: T,
) -> Result<RegReport<T>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no prediction/ground-truth pairs".into()));
    }
    let total = pairs.len();
    let unparsed = pairs.iter().filter(|(p, _)| p.is_none()).count();
    let results: Vec<_> = pairs
        .into_iter()
        .map(|(p, g)| evaluate_grounding(p, g, threshold))
        .collect();
    let hits = results.iter().filter(|r| r.hit).count();
    Ok(RegReport {
        accuracy: hits as f64 / total as f64,
        hits,
        total,
        unparsed,
        threshold,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box6d::corners_from_pose;
    use crate::scalar::mat3_identity;

    fn cube(x: f64) -> OrientedBox<f64> {
        corners_from_pose([x, 0.0, 0.0], [0.5; 3], mat3_identity()).unwrap()
    }

    #[test]
    fn all_hits_and_all_misses() {
        let r = reg_accuracy(vec![(Some(cube(0.0)), cube(0.0)); 3], 0.25).unwrap();
        assert_eq!(r.accuracy, 1.0);
        let r = reg_accuracy(vec![(Some(cube(5.0)), cube(0.0)); 3], 0.25).unwrap();
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn mixed_with_unparsed() {
        // hits: identical, offset 0.5 (IoU 1/3); misses: offset 0.9 (IoU ~0.05), unparsed
        let pairs = vec![
            (Some(cube(0.0)), cube(0.0)),
            (Some(cube(0.5)), cube(0.0)),
            (Some(cube(0.9)), cube(0.0)),
            (None, cube(0.0)),
        ];
        let r = reg_accuracy(pairs, 0.25).unwrap();
        assert_eq!((r.hits, r.total, r.unparsed), (2, 4, 1));
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn threshold_is_inclusive() {
        let r = evaluate_grounding(Some(cube(0.5)), cube(0.0), 1.0 / 3.0 - 1e-12);
        assert!(r.hit);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(
            reg_accuracy::<f64>(vec![], 0.25),
            Err(Error::EmptyInput(_))
        ));
    }
}
