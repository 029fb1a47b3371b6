//! Combining vision and EMG grasp estimates and smoothing decisions over time.

use alloc::collections::VecDeque;

use crate::grasp::{argmax_grasp, GraspDistribution, GraspType, NUM_GRASPS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("vision weight must be in [0, 1], got {0}")]
    InvalidWeight(f64),
    #[error("window capacity must be positive")]
    ZeroCapacity,
}

/// Convex weights of the two estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    w_vision: f64,
    w_emg: f64,
}

impl FusionWeights {
    pub fn new(w_vision: f64) -> Result<Self, FusionError> {
        if !(0.0..=1.0).contains(&w_vision) {
            return Err(FusionError::InvalidWeight(w_vision));
        }
        Ok(Self { w_vision, w_emg: 1.0 - w_vision })
    }

    pub fn vision(&self) -> f64 {
        self.w_vision
    }

    pub fn emg(&self) -> f64 {
        self.w_emg
    }

    /// Weights with the two roles swapped.
    pub fn mirrored(&self) -> Self {
        Self { w_vision: self.w_emg, w_emg: self.w_vision }
    }
}

/// Elementwise convex combination of the two distributions.
pub fn fuse(vision: &GraspDistribution, emg: &GraspDistribution, w: FusionWeights) -> GraspDistribution {
    let (a, b) = (vision.as_array(), emg.as_array());
    let p: [f64; NUM_GRASPS] = core::array::from_fn(|i| w.w_vision * a[i] + w.w_emg * b[i]);
    GraspDistribution::from_array_unchecked(p)
}

/// Averaged distribution and decision after a push.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub average: GraspDistribution,
    pub grasp: GraspType,
    /// False while fewer than `capacity` samples have been seen; the decision
    /// is provisional until then.
    pub window_full: bool,
}

/// FIFO of the most recent per-frame distributions.
#[derive(Debug, Clone)]
pub struct DecisionWindow {
    capacity: usize,
    buffer: VecDeque<GraspDistribution>,
    last: Option<Decision>,
}

impl DecisionWindow {
    pub const DEFAULT_FPS: usize = 30;
    pub const DEFAULT_SECONDS: f64 = 2.0;

    pub fn new(capacity: usize) -> Result<Self, FusionError> {
        if capacity == 0 {
            return Err(FusionError::ZeroCapacity);
        }
        Ok(Self { capacity, buffer: VecDeque::with_capacity(capacity), last: None })
    }

    /// Window spanning `seconds` of frames at `fps`, rounded to whole frames.
    pub fn from_rate(fps: usize, seconds: f64) -> Result<Self, FusionError> {
        Self::new(libm::round(fps as f64 * seconds) as usize)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// The decision returned by the most recent push.
    pub fn last_decision(&self) -> Option<Decision> {
        self.last
    }

    pub fn push_and_decide(&mut self, sample: GraspDistribution) -> Decision {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(sample);

        // Re-summed each time so the mean never accumulates drift.
        let mut sum = [0.0; NUM_GRASPS];
        for d in &self.buffer {
            for (s, v) in sum.iter_mut().zip(d.as_array()) {
                *s += v;
            }
        }
        let n = self.buffer.len() as f64;
        let average = GraspDistribution::from_array_unchecked(sum.map(|s| s / n));
        let decision =
            Decision { average, grasp: argmax_grasp(&average), window_full: self.buffer.len() == self.capacity };
        self.last = Some(decision);
        decision
    }
}

impl Default for DecisionWindow {
    fn default() -> Self {
        Self::from_rate(Self::DEFAULT_FPS, Self::DEFAULT_SECONDS).expect("default capacity is positive")
    }
}
