//! Grasp-type probability estimation for vision-guided prosthetic hands.
//!
//! Everything here is pure computation over owned values and runs without
//! `std` (only `alloc`). File formats and the command-line tool live in the
//! `grasp-kit` crate.
//!
//! - [`grasp`]: grasp categories, label distributions, annotation aggregation.
//! - [`metrics`]: angular similarity and the per-category cross-entropy loss.
//! - [`flops`]: operation counts for symbolic layer stacks.
//! - [`pareto`]: accuracy/FLOPs frontier and budgeted model choice.
//! - [`head`]: the dense prediction head, its gradients, Adam and training.
//! - [`augment`]: image augmentation ops and a synthetic feature dataset.
//! - [`fusion`]: vision/EMG combination and the decision window.

#![no_std]

extern crate alloc;

pub mod augment;
pub mod dataset;
pub mod flops;
pub mod fusion;
pub mod grasp;
pub mod head;
pub mod metrics;
pub mod pareto;

pub use dataset::{FeatureDataset, FeatureRow};
pub use grasp::{
    aggregate_annotations, argmax_grasp, validate_distribution, AnnotationSet, GraspDistribution, GraspType,
};
pub use metrics::{angular_similarity, cross_entropy, mean_angular_similarity, Loss, Similarity};
