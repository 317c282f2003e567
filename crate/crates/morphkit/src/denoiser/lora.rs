//! Low-rank adapters on the attention projections.
//!
//! Each targeted matrix W gets an additive delta (alpha/rank) * B * A with
//! A: rank x d_in and B: d_out x rank. B starts at zero, so a fresh adapter
//! is an exact no-op. Interpolation acts on effective deltas, realized by
//! stacking scaled factors (rank doubles, alpha doubles, delta is the exact
//! convex combination).

use super::DenoiserError;
use crate::numerics::{NumericsError, Rng, Tensor};

/// Adapter targets: q, k, v, out of self- and cross-attention, per block.
pub const TARGETS_PER_BLOCK: usize = 8;

const TARGET_NAMES: [&str; TARGETS_PER_BLOCK] = [
    "self.q", "self.k", "self.v", "self.o", "cross.q", "cross.k", "cross.v", "cross.o",
];

/// One low-rank pair.
#[derive(Clone, Debug)]
pub struct LoraPair {
    /// rank x d_in
    pub a: Tensor,
    /// d_out x rank
    pub b: Tensor,
}

/// Low-rank deltas for every attention projection of a model.
#[derive(Clone, Debug)]
pub struct LoraAdapter {
    pub rank: usize,
    pub alpha: f64,
    pub n_blocks: usize,
    /// Indexed block * TARGETS_PER_BLOCK + target.
    pub pairs: Vec<LoraPair>,
}

impl LoraAdapter {
    /// Fresh adapter: A is small Gaussian, B is zero, so every delta is 0.
    pub fn init(n_blocks: usize, d_model: usize, rank: usize, alpha: f64, rng: &mut Rng) -> Self {
        let scale = 1.0 / rank as f64;
        let pairs = (0..n_blocks * TARGETS_PER_BLOCK)
            .map(|_| LoraPair {
                a: rng.gaussian(&[rank, d_model]).scale(scale),
                b: Tensor::zeros(&[d_model, rank]),
            })
            .collect();
        Self { rank, alpha, n_blocks, pairs }
    }

    pub fn scaling(&self) -> f64 {
        self.alpha / self.rank as f64
    }

    pub fn pair(&self, block: usize, target: usize) -> &LoraPair {
        &self.pairs[block * TARGETS_PER_BLOCK + target]
    }

    /// Effective delta (alpha/rank) * B * A for one target, d_out x d_in.
    pub fn delta(&self, block: usize, target: usize) -> Result<Tensor, NumericsError> {
        let p = self.pair(block, target);
        Ok(p.b.matmul(&p.a)?.scale(self.scaling()))
    }

    /// Stable names for checkpoint records, matched to pair indices.
    pub fn record_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for b in 0..self.n_blocks {
            for t in TARGET_NAMES {
                names.push(format!("block{b}.{t}.a"));
                names.push(format!("block{b}.{t}.b"));
            }
        }
        names
    }
}

/// Convex combination of two adapters acting on effective deltas:
/// delta(alpha) == (1-alpha) * delta_a + alpha * delta_b exactly.
pub fn lora_interpolate(
    a: &LoraAdapter,
    b: &LoraAdapter,
    alpha: f64,
) -> Result<LoraAdapter, DenoiserError> {
    if a.rank != b.rank || a.n_blocks != b.n_blocks || a.alpha != b.alpha {
        return Err(DenoiserError::AdapterMismatch(format!(
            "rank {}/{}, blocks {}/{}, alpha {}/{}",
            a.rank, b.rank, a.n_blocks, b.n_blocks, a.alpha, b.alpha
        )));
    }
    // Stack factors scaled by sqrt of weights: B' A' = (1-t) Ba Aa + t Bb Ab.
    // Doubling both rank and alpha keeps the (alpha/rank) scaling intact.
    let wa = (1.0 - alpha).sqrt();
    let wb = alpha.sqrt();
    let pairs = a
        .pairs
        .iter()
        .zip(&b.pairs)
        .map(|(pa, pb)| {
            let stacked_a = Tensor::concat_rows(&[&pa.a.scale(wa), &pb.a.scale(wb)])?;
            let stacked_b = Tensor::concat_cols(&[&pa.b.scale(wa), &pb.b.scale(wb)])?;
            Ok(LoraPair { a: stacked_a, b: stacked_b })
        })
        .collect::<Result<Vec<_>, NumericsError>>()?;
    Ok(LoraAdapter {
        rank: a.rank * 2,
        alpha: a.alpha * 2.0,
        n_blocks: a.n_blocks,
        pairs,
    })
}
