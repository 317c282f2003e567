//! morphkit: a desk-scale regenerative 3D morphing engine.
//!
//! A two-stage flow-matching transformer generates colored point clouds
//! (geometry, then per-point color). Morphing between two objects
//! interpolates inverted noise, LoRA weight deltas, and condition embeddings,
//! with three attention-level mechanisms layered on top: Attention Fusion,
//! Token Reordering, and Low-Frequency Enhancement.

pub mod numerics;
pub mod ply;
pub mod calibration;
pub mod denoiser;
pub mod metrics;
pub mod morphing;
pub mod shapes;
