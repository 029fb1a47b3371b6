//! Angular similarity and the distribution cross-entropy loss.

use core::f64::consts::PI;

use crate::grasp::{GraspDistribution, NUM_GRASPS};

/// Lower/upper clamp applied to predicted probabilities inside the loss.
pub const LOG_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("vector lengths differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("no samples to average over")]
    EmptyDataset,
    #[error("vector entry {0} is negative or not finite")]
    InvalidEntry(usize),
}

/// Angular similarity in `[0, 1]`: 1 for parallel vectors, 0 for orthogonal ones.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Similarity(f64);

impl Similarity {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Cross-entropy loss in nats; always finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Loss(f64);

impl Loss {
    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn new(v: f64) -> Self {
        debug_assert!(v.is_finite() && v >= 0.0);
        Self(v)
    }
}

/// `1 - 2·acos(cos θ)/π` between two non-negative vectors.
///
/// Inputs need not be normalized. The cosine is clamped to `[-1, 1]` before
/// `acos` so that roundoff on (anti)parallel vectors cannot produce NaN.
pub fn angular_similarity(u: &[f64], v: &[f64]) -> Result<Similarity, MetricError> {
    if u.len() != v.len() {
        return Err(MetricError::ShapeMismatch(u.len(), v.len()));
    }
    for (i, (&a, &b)) in u.iter().zip(v).enumerate() {
        if !(a >= 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
            return Err(MetricError::InvalidEntry(i));
        }
    }
    let (dot, uu, vv) =
        u.iter().zip(v).fold((0.0, 0.0, 0.0), |(d, a2, b2), (&a, &b)| (d + a * b, a2 + a * a, b2 + b * b));
    if uu == 0.0 || vv == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    let cos = (dot / (libm::sqrt(uu) * libm::sqrt(vv))).clamp(-1.0, 1.0);
    let sim = 1.0 - 2.0 * libm::acos(cos) / PI;
    Ok(Similarity(sim.clamp(0.0, 1.0)))
}

/// Mean pairwise angular similarity of predictions against ground truth.
pub fn mean_angular_similarity(
    preds: &[GraspDistribution],
    truths: &[GraspDistribution],
) -> Result<Similarity, MetricError> {
    if preds.len() != truths.len() {
        return Err(MetricError::ShapeMismatch(preds.len(), truths.len()));
    }
    if preds.is_empty() {
        return Err(MetricError::EmptyDataset);
    }
    let mut total = 0.0;
    for (p, t) in preds.iter().zip(truths) {
        total += angular_similarity(p.as_ref(), t.as_ref())?.0;
    }
    Ok(Similarity(total / preds.len() as f64))
}

/// Per-category binary cross-entropy averaged over the five categories.
///
/// `truth` plays the role of the target `y` and `pred` of the estimate `p`;
/// `p` is clamped to `[LOG_EPS, 1 - LOG_EPS]` so exact zeros and ones are allowed.
pub fn cross_entropy(pred: &GraspDistribution, truth: &GraspDistribution) -> Loss {
    Loss::new(cross_entropy_raw(pred.as_array(), truth.as_array()))
}

pub(crate) fn cross_entropy_raw(p: &[f64; NUM_GRASPS], y: &[f64; NUM_GRASPS]) -> f64 {
    let mut acc = 0.0;
    for (&pi, &yi) in p.iter().zip(y) {
        let pc = pi.clamp(LOG_EPS, 1.0 - LOG_EPS);
        acc += yi * libm::log(pc) + (1.0 - yi) * libm::log(1.0 - pc);
    }
    // Clamped logs keep this finite; tiny negative values come from roundoff.
    (-acc / NUM_GRASPS as f64).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::GraspType;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    const TRUTH: [f64; 5] = [1.0, 0.0, 0.0, 0.0, 0.0];

    fn sim(p: [f64; 5]) -> f64 {
        angular_similarity(&p, &TRUTH).unwrap().value()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(sim(TRUTH), 1.0);
        assert!((sim([0.87, 0.13, 0.0, 0.0, 0.0]) - 0.91).abs() <= 0.01);
        assert!((sim([0.5, 0.5, 0.0, 0.0, 0.0]) - 0.5).abs() < 1e-12);
        assert_eq!(sim([0.0, 1.0, 0.0, 0.0, 0.0]), 0.0);
        assert!((sim([0.2; 5]) - 0.30).abs() <= 0.01);
    }

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(angular_similarity(&[0.0; 5], &TRUTH), Err(MetricError::ZeroVector));
        assert_eq!(angular_similarity(&TRUTH, &[0.0; 5]), Err(MetricError::ZeroVector));
        assert!(matches!(angular_similarity(&[1.0], &TRUTH), Err(MetricError::ShapeMismatch(1, 5))));
        assert!(matches!(angular_similarity(&[-1.0, 0.0, 0.0, 0.0, 0.0], &TRUTH), Err(MetricError::InvalidEntry(0))));
    }

    #[test]
    fn cross_entropy_perfect_one_hot() {
        let y = GraspDistribution::one_hot(GraspType::OpenPalm);
        assert!(cross_entropy(&y, &y).value() <= 1e-10);
    }

    #[test]
    fn cross_entropy_uniform() {
        // -(0.2 ln 0.2 + 0.8 ln 0.8) = 0.500402...
        let u = GraspDistribution::uniform();
        let expected = -(0.2f64 * 0.2f64.ln() + 0.8 * 0.8f64.ln());
        assert!((expected - 0.5004).abs() < 1e-3);
        assert!((cross_entropy(&u, &u).value() - expected).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_half_split_term_by_term() {
        // y = (1,0,0,0,0), p = (0.5,0.5,0,0,0):
        //   i=0: 1·ln 0.5
        //   i=1: 1·ln(1 - 0.5)
        //   i=2..4: ln(1 - 1e-12) each
        let pred = GraspDistribution::new([0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        let truth = GraspDistribution::one_hot(GraspType::OpenPalm);
        let terms = [0.5f64.ln(), 0.5f64.ln(), (1.0f64 - 1e-12).ln(), (1.0f64 - 1e-12).ln(), (1.0f64 - 1e-12).ln()];
        let expected = -terms.iter().sum::<f64>() / 5.0;
        assert!((cross_entropy(&pred, &truth).value() - expected).abs() < 1e-15);
        assert!((expected - 0.2772588722).abs() < 1e-9);
    }

    #[test]
    fn mean_similarity_cases() {
        let a = GraspDistribution::one_hot(GraspType::OpenPalm);
        let b = GraspDistribution::one_hot(GraspType::MediumWrap);
        let list = [a, b, GraspDistribution::uniform()];
        assert!((mean_angular_similarity(&list, &list).unwrap().value() - 1.0).abs() < 1e-15);
        assert_eq!(mean_angular_similarity(&[a, a], &[a, b]).unwrap().value(), 0.5);
        assert_eq!(mean_angular_similarity(&[], &[]), Err(MetricError::EmptyDataset));
        assert_eq!(mean_angular_similarity(&[a], &[a, b]), Err(MetricError::ShapeMismatch(1, 2)));
    }

    fn dist() -> impl Strategy<Value = GraspDistribution> {
        prop::array::uniform5(0.0f64..1.0)
            .prop_filter("positive mass", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| GraspDistribution::from_weights(w).unwrap())
    }

    proptest! {
        #[test]
        fn mean_matches_loop(pairs in prop::collection::vec((dist(), dist()), 1..30)) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let mut acc = 0.0;
            for (a, b) in p.iter().zip(&t) {
                acc += angular_similarity(a.as_ref(), b.as_ref()).unwrap().value();
            }
            let m = mean_angular_similarity(&p, &t).unwrap().value();
            prop_assert!((m - acc / p.len() as f64).abs() <= 1e-12);
        }

        #[test]
        fn truth_minimizes_cross_entropy(p in dist(), y in dist()) {
            prop_assert!(cross_entropy(&p, &y).value() >= cross_entropy(&y, &y).value() - 1e-12);
        }

        #[test]
        fn similarity_in_unit_range(p in dist(), y in dist()) {
            let s = angular_similarity(p.as_ref(), y.as_ref()).unwrap().value();
            prop_assert!((0.0..=1.0).contains(&s));
            let s2 = angular_similarity(y.as_ref(), p.as_ref()).unwrap().value();
            prop_assert_eq!(s, s2);
        }
    }
}
