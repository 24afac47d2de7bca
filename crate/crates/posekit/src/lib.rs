//! Toolkit for regressing 3D object pose from feature vectors.
//!
//! The pieces fit together in a pipeline: [`rotation`] defines the pose
//! representations and geodesic distances, [`loss`] the differentiable
//! objectives over them, [`network`] a small fully connected regressor
//! with constrained output heads, [`optim`] the two-stage training loop,
//! [`augment`] pose-jittering data augmentation, and [`eval`] the metric
//! suite used for reporting. [`data`] covers dataset files and synthetic
//! problem generation for end-to-end checks at desk scale.

pub mod augment;
pub mod data;
pub mod eval;
pub mod io;
pub mod loss;
pub mod network;
pub mod optim;
pub mod rotation;
pub mod seeding;
