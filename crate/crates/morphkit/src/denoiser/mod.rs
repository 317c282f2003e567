//! The two-stage diffusion prior: a small DiT-style transformer per stage,
//! trained by flow matching, sampled and inverted with Euler integration,
//! fine-tunable with LoRA.

pub mod checkpoint;
mod config;
mod forward;
mod lora;
mod model;
mod params;
mod tap;
mod train;

pub use config::DenoiserConfig;
pub use forward::{t_index, AdapterVars, LN_EPS};
pub use lora::{lora_interpolate, LoraAdapter, LoraPair, TARGETS_PER_BLOCK};
pub use model::{cascade_generate, Model, NoHooks, NoisePair, SampleHooks};
pub use params::{AttnParams, BlockParams, ModelParams, ModelVars};
pub use tap::{AttentionTap, AttnKind, TapEntry};
pub use train::{lora_finetune, train, FinetuneHyper, StageKind, TrainHyper};

use crate::numerics::NumericsError;
use crate::shapes::ShapeError;

#[derive(Debug, thiserror::Error)]
pub enum DenoiserError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Shapes(#[from] ShapeError),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("steps mismatch: got {got}, model expects {expected}")]
    StepsMismatch { got: usize, expected: usize },
    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },
    #[error("training diverged at step {step} (non-finite loss)")]
    Diverged { step: usize },
    #[error("adapter mismatch: {0}")]
    AdapterMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}
