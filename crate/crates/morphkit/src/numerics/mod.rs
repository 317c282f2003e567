//! Deterministic tensor math: dense f64 tensors, reverse-mode autodiff over
//! a fixed op set, seeded Gaussian sampling, real FFT, and spherical
//! interpolation.

pub mod autodiff;
pub mod fft;
pub mod rng;
pub mod slerp;
pub mod tensor;

pub use autodiff::{grad_check, Tape, Var};
pub use fft::{irfft, rfft, Spectrum};
pub use rng::Rng;
pub use slerp::{lerp, slerp};
pub use tensor::Tensor;

/// Errors from the numeric substrate.
#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("shape mismatch in {context}: {detail}")]
    ShapeMismatch { context: &'static str, detail: String },
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("zero-norm input to {context}")]
    ZeroNorm { context: &'static str },
    #[error("invalid parameter in {context}: {detail}")]
    InvalidParameter { context: &'static str, detail: String },
}
