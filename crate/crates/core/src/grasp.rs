//! Grasp categories and probability distributions over them.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Number of grasp categories.
pub const NUM_GRASPS: usize = 5;

/// Tolerance on `|sum - 1|` accepted by [`GraspDistribution::new`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Entries down to this value are treated as roundoff and clamped to zero.
pub const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraspError {
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entries sum to {sum}, expected 1")]
    SumNotOne { sum: f64 },
    #[error("expected {NUM_GRASPS} entries, got {0}")]
    WrongArity(usize),
    #[error("unknown grasp type `{0}`")]
    UnknownGrasp(String),
}

/// One of the five grasp categories, with stable integer codes 0..4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum GraspType {
    OpenPalm = 0,
    MediumWrap = 1,
    PowerSphere = 2,
    ParallelExtension = 3,
    PalmarPinch = 4,
}

impl GraspType {
    pub const ALL: [GraspType; NUM_GRASPS] = [
        GraspType::OpenPalm,
        GraspType::MediumWrap,
        GraspType::PowerSphere,
        GraspType::ParallelExtension,
        GraspType::PalmarPinch,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    /// Canonical name, as accepted by [`FromStr`].
    pub fn name(self) -> &'static str {
        match self {
            GraspType::OpenPalm => "OpenPalm",
            GraspType::MediumWrap => "MediumWrap",
            GraspType::PowerSphere => "PowerSphere",
            GraspType::ParallelExtension => "ParallelExtension",
            GraspType::PalmarPinch => "PalmarPinch",
        }
    }
}

impl fmt::Display for GraspType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses either an integer code (`"2"`) or a canonical name. Names are
/// matched case-insensitively, ignoring spaces, `-` and `_`, so
/// `"power sphere"` and `"Power_Sphere"` both resolve.
impl FromStr for GraspType {
    type Err = GraspError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if let Ok(code) = trimmed.parse::<usize>() {
            return Self::from_code(code).ok_or_else(|| GraspError::UnknownGrasp(s.into()));
        }
        let key: String =
            trimmed.chars().filter(|c| !matches!(c, ' ' | '-' | '_')).flat_map(char::to_lowercase).collect();
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.name().eq_ignore_ascii_case(&key))
            .ok_or_else(|| GraspError::UnknownGrasp(s.into()))
    }
}

/// A probability vector over the five grasp types.
///
/// Entries are non-negative and sum to one within [`SUM_TOLERANCE`]; the
/// constructor is the only way in, so every value of this type is valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspDistribution([f64; NUM_GRASPS]);

impl GraspDistribution {
    /// Validates a fixed-size vector. Entries in `[-1e-12, 0)` are clamped to zero.
    pub fn new(p: [f64; NUM_GRASPS]) -> Result<Self, GraspError> {
        let mut out = p;
        for (index, v) in out.iter_mut().enumerate() {
            if !v.is_finite() || *v < -NEGATIVE_SLACK {
                return Err(GraspError::NegativeEntry { index, value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = out.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(GraspError::SumNotOne { sum });
        }
        Ok(Self(out))
    }

    /// Builds a distribution that puts all mass on `g`.
    pub fn one_hot(g: GraspType) -> Self {
        let mut p = [0.0; NUM_GRASPS];
        p[g.code()] = 1.0;
        Self(p)
    }

    pub fn uniform() -> Self {
        Self([1.0 / NUM_GRASPS as f64; NUM_GRASPS])
    }

    pub fn as_array(&self) -> &[f64; NUM_GRASPS] {
        &self.0
    }

    pub fn get(&self, g: GraspType) -> f64 {
        self.0[g.code()]
    }

    /// Renormalizes a non-negative vector with a positive sum.
    pub fn from_weights(w: [f64; NUM_GRASPS]) -> Result<Self, GraspError> {
        let sum: f64 = w.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(GraspError::SumNotOne { sum });
        }
        let mut p = w;
        for v in p.iter_mut() {
            *v /= sum;
        }
        Self::new(p)
    }

    /// Wraps a vector without validation. Callers guarantee the invariants
    /// hold by construction (softmax output, convex combinations).
    pub(crate) fn from_array_unchecked(p: [f64; NUM_GRASPS]) -> Self {
        debug_assert!(Self::new(p).is_ok(), "invalid distribution {p:?}");
        Self(p)
    }
}

impl AsRef<[f64]> for GraspDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Accepts a raw slice of any length and checks it is a valid distribution.
pub fn validate_distribution(p: &[f64]) -> Result<GraspDistribution, GraspError> {
    let arr: [f64; NUM_GRASPS] = p.try_into().map_err(|_| GraspError::WrongArity(p.len()))?;
    GraspDistribution::new(arr)
}

/// Returns the most probable grasp; ties go to the lowest code.
pub fn argmax_grasp(d: &GraspDistribution) -> GraspType {
    let mut best = 0;
    for (i, &v) in d.0.iter().enumerate().skip(1) {
        if v > d.0[best] {
            best = i;
        }
    }
    GraspType::ALL[best]
}

/// Top choices of every annotator for one object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    pub object_id: String,
    pub choices: Vec<GraspType>,
}

impl AnnotationSet {
    pub fn new(object_id: impl Into<String>, choices: Vec<GraspType>) -> Self {
        Self { object_id: object_id.into(), choices }
    }

    pub fn annotator_count(&self) -> usize {
        self.choices.len()
    }

    pub fn counts(&self) -> [usize; NUM_GRASPS] {
        let mut counts = [0usize; NUM_GRASPS];
        for g in &self.choices {
            counts[g.code()] += 1;
        }
        counts
    }
}

/// Turns annotator top choices into label probabilities `count_i / N`.
///
/// The division is done on integer counts, so the result is independent of
/// annotator order and its entries sum to one up to a single rounding per entry.
pub fn aggregate_annotations(a: &AnnotationSet) -> Result<GraspDistribution, GraspError> {
    let n = a.annotator_count();
    if n == 0 {
        return Err(GraspError::InvalidAnnotation(alloc::format!("object `{}` has no annotator choices", a.object_id)));
    }
    let counts = a.counts();
    let mut p = [0.0; NUM_GRASPS];
    for (dst, &c) in p.iter_mut().zip(counts.iter()) {
        *dst = c as f64 / n as f64;
    }
    GraspDistribution::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn from_counts(counts: [usize; NUM_GRASPS]) -> AnnotationSet {
        let choices =
            counts.iter().enumerate().flat_map(|(i, &c)| core::iter::repeat_n(GraspType::ALL[i], c)).collect();
        AnnotationSet::new("obj", choices)
    }

    #[test]
    fn codes_round_trip() {
        for (i, g) in GraspType::ALL.iter().enumerate() {
            assert_eq!(g.code(), i);
            assert_eq!(GraspType::from_code(i), Some(*g));
            assert_eq!(g.name().parse::<GraspType>().unwrap(), *g);
        }
        assert_eq!(GraspType::from_code(5), None);
        assert_eq!("power sphere".parse::<GraspType>().unwrap(), GraspType::PowerSphere);
        assert_eq!("4".parse::<GraspType>().unwrap(), GraspType::PalmarPinch);
        assert!("7".parse::<GraspType>().is_err());
        assert!("fist".parse::<GraspType>().is_err());
    }

    #[test]
    fn unanimous_eleven() {
        let d = aggregate_annotations(&from_counts([0, 11, 0, 0, 0])).unwrap();
        assert_eq!(d.as_array(), &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn split_vote() {
        let d = aggregate_annotations(&from_counts([2, 5, 4, 0, 0])).unwrap();
        assert_eq!(d.as_array(), &[2.0 / 11.0, 5.0 / 11.0, 4.0 / 11.0, 0.0, 0.0]);
    }

    #[test]
    fn unanimous_three() {
        let d = aggregate_annotations(&from_counts([0, 0, 0, 0, 3])).unwrap();
        assert_eq!(d.as_array(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_annotations_rejected() {
        let err = aggregate_annotations(&AnnotationSet::new("x", vec![])).unwrap_err();
        assert!(matches!(err, GraspError::InvalidAnnotation(_)));
    }

    #[test]
    fn argmax_examples() {
        let d = |p| GraspDistribution::new(p).unwrap();
        assert_eq!(argmax_grasp(&d([0.0, 1.0, 0.0, 0.0, 0.0])), GraspType::MediumWrap);
        assert_eq!(argmax_grasp(&d([0.5, 0.5, 0.0, 0.0, 0.0])), GraspType::OpenPalm);
        assert_eq!(argmax_grasp(&d([0.1, 0.2, 0.3, 0.25, 0.15])), GraspType::PowerSphere);
    }

    #[test]
    fn validation_errors() {
        assert!(validate_distribution(&[0.2; 5]).is_ok());
        assert!(matches!(validate_distribution(&[0.5, 0.6, 0.0, 0.0, 0.0]), Err(GraspError::SumNotOne { .. })));
        assert!(matches!(validate_distribution(&[1.0, 0.0, 0.0, 0.0]), Err(GraspError::WrongArity(4))));
        assert!(matches!(
            validate_distribution(&[1.1, -0.1, 0.0, 0.0, 0.0]),
            Err(GraspError::NegativeEntry { index: 1, .. })
        ));
        assert!(validate_distribution(&[f64::NAN, 1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn tiny_negative_is_clamped() {
        let d = validate_distribution(&[1.0 + 1e-13, -1e-13, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.as_array()[1], 0.0);
    }

    fn choices_strategy() -> impl Strategy<Value = Vec<GraspType>> {
        prop::collection::vec((0usize..NUM_GRASPS).prop_map(|c| GraspType::ALL[c]), 1..40)
    }

    proptest! {
        #[test]
        fn aggregate_is_valid_and_order_free(choices in choices_strategy(), seed in any::<u64>()) {
            let d = aggregate_annotations(&AnnotationSet::new("o", choices.clone())).unwrap();
            prop_assert!(validate_distribution(d.as_ref()).is_ok());

            // Deterministic shuffle driven by the seed.
            let mut shuffled = choices;
            let mut s = seed | 1;
            for i in (1..shuffled.len()).rev() {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                shuffled.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let d2 = aggregate_annotations(&AnnotationSet::new("o", shuffled)).unwrap();
            prop_assert_eq!(d, d2);
        }

        #[test]
        fn argmax_is_scale_invariant(w in prop::array::uniform5(0.0f64..1.0), scale in 1e-3f64..1e3) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let d = GraspDistribution::from_weights(w).unwrap();
            let scaled = w.map(|v| v * scale);
            let d2 = GraspDistribution::from_weights(scaled).unwrap();
            // Rescaling can create exact ties that rounding then breaks; only
            // compare when the top entry is clearly separated.
            let mut sorted = *d.as_array();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assume!(sorted[0] - sorted[1] > 1e-12);
            prop_assert_eq!(argmax_grasp(&d), argmax_grasp(&d2));
        }
    }
}
