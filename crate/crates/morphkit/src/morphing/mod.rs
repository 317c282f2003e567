//! The morphing mechanisms and their orchestration: basic three-level
//! interpolation (noise, adapter deltas, conditions), attention fusion,
//! token reordering, and low-frequency enhancement.

mod assignment;
mod fusion;
mod lfe;
mod pipeline;
mod reorder;
mod schedule;

pub use assignment::{greedy_assignment, solve_assignment, TokenPermutation};
pub use fusion::fused_attention;
pub use lfe::low_freq_enhance;
pub use pipeline::{
    fnv1a64, interpolate_noise, morph, morph_with_artifacts, prepare_shape, shape_key,
    MechanismCounters, MorphConfig, MorphFrame, MorphModels, MorphSequence, MorphWindow,
    Provenance, ShapeArtifacts,
};
pub use reorder::{positional_cost, reorder_tokens, token_distance_matrix, ReorderedSide, Reordering};
pub use schedule::{alpha_schedule, AlphaSchedule};

use crate::denoiser::DenoiserError;
use crate::numerics::NumericsError;

#[derive(Debug, thiserror::Error)]
pub enum MorphError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Denoiser(#[from] DenoiserError),
    #[error("invalid morph config: {0}")]
    InvalidConfig(String),
    #[error("attention tap misaligned at block {block} ({who})")]
    TapMisaligned { block: usize, who: &'static str },
    #[error("morph stage '{stage}'{} failed: {message}", match alpha { Some(a) => format!(" at alpha={a}"), None => String::new() })]
    Stage { stage: String, alpha: Option<f64>, message: String },
}
