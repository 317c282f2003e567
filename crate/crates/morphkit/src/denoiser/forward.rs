//! The transformer forward pass, written once over the autodiff tape.
//! Inference runs the same code with frozen leaves.
//!
//! Block layout (pre-norm): self-attention over the tokens, cross-attention
//! to a two-token context [condition, timestep], then an MLP, each behind a
//! residual. Attention taps can capture Q/K/V or inject replacement K/V.

use super::config::DenoiserConfig;
use super::lora::LoraAdapter;
use super::params::{AttnVars, BlockVars, ModelVars};
use super::tap::{AttentionTap, AttnKind};
use crate::numerics::autodiff::{Tape, Var};
use crate::numerics::NumericsError;

pub const LN_EPS: f64 = 1e-5;

/// Tape handles for adapter factors, indexed like [`LoraAdapter::pairs`].
pub struct AdapterVars {
    pub scaling: f64,
    pub pairs: Vec<(Var, Var)>,
}

impl LoraAdapter {
    pub fn upload(&self, tape: &mut Tape, trainable: bool) -> AdapterVars {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                if trainable {
                    (tape.param(p.a.clone()), tape.param(p.b.clone()))
                } else {
                    (tape.leaf(p.a.clone()), tape.leaf(p.b.clone()))
                }
            })
            .collect();
        AdapterVars { scaling: self.scaling(), pairs }
    }
}

/// Linear projection with an optional low-rank delta:
/// y = x W + (alpha/r) (x A^T) B^T.
fn proj(
    tape: &mut Tape,
    x: Var,
    w: Var,
    lora: Option<(Var, Var, f64)>,
) -> Result<Var, NumericsError> {
    let y = tape.matmul(x, w)?;
    match lora {
        None => Ok(y),
        Some((a, b, scaling)) => {
            let at = tape.transpose(a)?;
            let bt = tape.transpose(b)?;
            let xa = tape.matmul(x, at)?;
            let xab = tape.matmul(xa, bt)?;
            let delta = tape.scale(xab, scaling);
            tape.add(y, delta)
        }
    }
}

fn lora_for(
    adapter: Option<&AdapterVars>,
    block: usize,
    target: usize,
) -> Option<(Var, Var, f64)> {
    adapter.map(|ad| {
        let (a, b) = ad.pairs[block * super::lora::TARGETS_PER_BLOCK + target];
        (a, b, ad.scaling)
    })
}

/// Multi-head attention. `queries_from` supplies Q; `kv_from` supplies K/V
/// unless the tap has a queued replacement, which may have any row count.
#[allow(clippy::too_many_arguments)]
fn attention(
    tape: &mut Tape,
    cfg: &DenoiserConfig,
    queries_from: Var,
    kv_from: Var,
    p: &AttnVars,
    adapter: Option<&AdapterVars>,
    block: usize,
    kind: AttnKind,
    tap: &mut Option<&mut AttentionTap>,
) -> Result<Var, NumericsError> {
    let base = if kind == AttnKind::SelfAttn { 0 } else { 4 };
    let q = proj(tape, queries_from, p.wq, lora_for(adapter, block, base))?;
    let (k, v) = match tap.as_deref_mut().and_then(|t| t.take_pending(block, kind)) {
        Some((k_repl, v_repl)) => (tape.leaf(k_repl), tape.leaf(v_repl)),
        None => (
            proj(tape, kv_from, p.wk, lora_for(adapter, block, base + 1))?,
            proj(tape, kv_from, p.wv, lora_for(adapter, block, base + 2))?,
        ),
    };
    if let Some(t) = tap.as_deref_mut() {
        t.record(
            block,
            kind,
            Some(tape.value(q).clone()),
            tape.value(k).clone(),
            tape.value(v).clone(),
        );
    }

    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut heads = Vec::with_capacity(cfg.n_heads);
    for h in 0..cfg.n_heads {
        let qh = tape.slice_cols(q, h * dh, dh)?;
        let kh = tape.slice_cols(k, h * dh, dh)?;
        let vh = tape.slice_cols(v, h * dh, dh)?;
        let kt = tape.transpose(kh)?;
        let scores = tape.matmul(qh, kt)?;
        let scaled = tape.scale(scores, scale);
        let weights = tape.softmax_rows(scaled)?;
        heads.push(tape.matmul(weights, vh)?);
    }
    let merged = tape.concat_cols(&heads)?;
    proj(tape, merged, p.wo, lora_for(adapter, block, base + 3))
}

/// One transformer block.
#[allow(clippy::too_many_arguments)]
pub fn block_forward_on_tape(
    tape: &mut Tape,
    cfg: &DenoiserConfig,
    b: &BlockVars,
    adapter: Option<&AdapterVars>,
    tokens: Var,
    ctx: Var,
    block: usize,
    mut tap: Option<&mut AttentionTap>,
) -> Result<Var, NumericsError> {
    let ln1 = tape.layer_norm(tokens, b.ln1_gain, b.ln1_bias, LN_EPS)?;
    let sa = attention(tape, cfg, ln1, ln1, &b.self_attn, adapter, block, AttnKind::SelfAttn, &mut tap)?;
    let h = tape.add(tokens, sa)?;

    let ln2 = tape.layer_norm(h, b.ln2_gain, b.ln2_bias, LN_EPS)?;
    let ca = attention(tape, cfg, ln2, ctx, &b.cross_attn, adapter, block, AttnKind::CrossAttn, &mut tap)?;
    let h = tape.add(h, ca)?;

    let ln3 = tape.layer_norm(h, b.ln3_gain, b.ln3_bias, LN_EPS)?;
    let m1 = tape.matmul(ln3, b.mlp_w1)?;
    let m1 = tape.add_row(m1, b.mlp_b1)?;
    let act = tape.gelu(m1);
    let m2 = tape.matmul(act, b.mlp_w2)?;
    let m2 = tape.add_row(m2, b.mlp_b2)?;
    tape.add(h, m2)
}

/// The K/V projections of a block's self-attention for given input tokens,
/// without running the block.
pub fn project_self_kv_on_tape(
    tape: &mut Tape,
    b: &BlockVars,
    adapter: Option<&AdapterVars>,
    tokens: Var,
    block: usize,
) -> Result<(Var, Var), NumericsError> {
    let ln1 = tape.layer_norm(tokens, b.ln1_gain, b.ln1_bias, LN_EPS)?;
    let k = proj(tape, ln1, b.self_attn.wk, lora_for(adapter, block, 1))?;
    let v = proj(tape, ln1, b.self_attn.wv, lora_for(adapter, block, 2))?;
    Ok((k, v))
}

/// The K/V projections of a block's cross-attention for a given context.
pub fn project_cross_kv_on_tape(
    tape: &mut Tape,
    b: &BlockVars,
    adapter: Option<&AdapterVars>,
    ctx: Var,
    block: usize,
) -> Result<(Var, Var), NumericsError> {
    let k = proj(tape, ctx, b.cross_attn.wk, lora_for(adapter, block, 5))?;
    let v = proj(tape, ctx, b.cross_attn.wv, lora_for(adapter, block, 6))?;
    Ok((k, v))
}

/// Timestep table row for a continuous t in [0, 1].
pub fn t_index(cfg: &DenoiserConfig, t: f64) -> usize {
    ((t.clamp(0.0, 1.0) * cfg.steps as f64).floor() as usize).min(cfg.steps - 1)
}

/// Piecewise-linear table read: row i at t = i/steps, blended toward the
/// next row in between, so the embedding is continuous in t. Sampling
/// timesteps (k-1)/steps land exactly on row k-1.
fn t_embed(
    tape: &mut Tape,
    vars: &ModelVars,
    cfg: &DenoiserConfig,
    t: f64,
) -> Result<Var, NumericsError> {
    let u = t.clamp(0.0, 1.0) * cfg.steps as f64;
    let i0 = (u.floor() as usize).min(cfg.steps - 1);
    let i1 = (i0 + 1).min(cfg.steps - 1);
    let frac = u - i0 as f64;
    let row0 = tape.embed_row(vars.t_table, i0)?;
    if frac == 0.0 || i0 == i1 {
        return Ok(row0);
    }
    let row1 = tape.embed_row(vars.t_table, i1)?;
    let a = tape.scale(row0, 1.0 - frac);
    let b = tape.scale(row1, frac);
    tape.add(a, b)
}

/// Two-token context [projected condition, timestep embedding].
pub fn context_on_tape(
    tape: &mut Tape,
    vars: &ModelVars,
    cond: Var,
    cfg: &DenoiserConfig,
    t: f64,
) -> Result<Var, NumericsError> {
    let cond_tok = tape.matmul(cond, vars.cond_proj)?;
    let t_tok = t_embed(tape, vars, cfg, t)?;
    tape.concat_rows(&[cond_tok, t_tok])
}

/// Input projection plus fixed sinusoidal position features.
pub fn embed_on_tape(tape: &mut Tape, vars: &ModelVars, z: Var) -> Result<Var, NumericsError> {
    let t = tape.matmul(z, vars.in_w)?;
    let t = tape.add_row(t, vars.in_b)?;
    tape.add(t, vars.pos)
}

/// Final layer norm plus linear head.
pub fn head_on_tape(tape: &mut Tape, vars: &ModelVars, tokens: Var) -> Result<Var, NumericsError> {
    // EXPERIMENT: no final LN
    let out = tape.matmul(tokens, vars.head_w)?;
    tape.add_row(out, vars.head_b)
}

/// Full forward: returns (velocity, tokens after the last block).
#[allow(clippy::too_many_arguments)]
pub fn velocity_on_tape(
    tape: &mut Tape,
    cfg: &DenoiserConfig,
    vars: &ModelVars,
    adapter: Option<&AdapterVars>,
    z: Var,
    ctx: Var,
    mut tap: Option<&mut AttentionTap>,
) -> Result<(Var, Var), NumericsError> {
    let mut tokens = embed_on_tape(tape, vars, z)?;
    for (i, b) in vars.blocks.iter().enumerate() {
        tokens = block_forward_on_tape(tape, cfg, b, adapter, tokens, ctx, i, tap.as_deref_mut())?;
    }
    let out = head_on_tape(tape, vars, tokens)?;
    Ok((out, tokens))
}
