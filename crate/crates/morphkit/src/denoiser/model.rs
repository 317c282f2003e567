//! A trained diffusion stage: parameters plus the sampling/inversion loops.

use super::config::DenoiserConfig;
use super::forward::{
    block_forward_on_tape, context_on_tape, embed_on_tape, head_on_tape,
    project_cross_kv_on_tape, project_self_kv_on_tape, velocity_on_tape,
};
use super::lora::LoraAdapter;
use super::params::ModelParams;
use super::tap::AttentionTap;
use super::DenoiserError;
use crate::numerics::{Tape, Tensor};
use crate::shapes::ConditionEmbedding;

/// Per-step callbacks used by sampling. The morphing mechanisms and the
/// diagnostic traces plug in here.
pub trait SampleHooks {
    /// Optionally replace the model input for step `k` (the integration
    /// state itself is not modified).
    fn model_input(&mut self, _step: usize, _z: &Tensor) -> Option<Tensor> {
        None
    }
    /// Observe the step after the velocity evaluation: the (possibly
    /// replaced) model input and the tokens leaving the last block.
    fn observe(&mut self, _step: usize, _z_in: &Tensor, _tokens: &Tensor) {}
}

/// No-op hooks.
pub struct NoHooks;
impl SampleHooks for NoHooks {}

/// Initial noise for the two-stage cascade.
#[derive(Clone, Debug)]
pub struct NoisePair {
    pub z_g: Tensor,
    pub z_t: Tensor,
}

/// One diffusion stage.
#[derive(Clone, Debug)]
pub struct Model {
    pub cfg: DenoiserConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn new(cfg: DenoiserConfig, params: ModelParams) -> Result<Self, DenoiserError> {
        cfg.validate()?;
        Ok(Self { cfg, params })
    }

    /// A copy with an adapter's effective deltas folded into the targeted
    /// projection matrices: sampling then runs at plain-model speed. The
    /// base model is untouched.
    pub fn with_adapter_merged(&self, adapter: &LoraAdapter) -> Result<Self, DenoiserError> {
        if adapter.n_blocks != self.cfg.n_blocks {
            return Err(DenoiserError::AdapterMismatch(format!(
                "adapter has {} blocks, model has {}",
                adapter.n_blocks, self.cfg.n_blocks
            )));
        }
        let mut params = self.params.clone();
        for (block, b) in params.blocks.iter_mut().enumerate() {
            let targets: [&mut Tensor; 8] = [
                &mut b.self_attn.wq,
                &mut b.self_attn.wk,
                &mut b.self_attn.wv,
                &mut b.self_attn.wo,
                &mut b.cross_attn.wq,
                &mut b.cross_attn.wk,
                &mut b.cross_attn.wv,
                &mut b.cross_attn.wo,
            ];
            for (t, w) in targets.into_iter().enumerate() {
                // Forward applies x W + s (x A^T) B^T, so the folded form is
                // W + s (B A)^T.
                let delta = adapter.delta(block, t)?.transpose()?;
                *w = w.add(&delta)?;
            }
        }
        Model::new(self.cfg.clone(), params)
    }

    /// Two-token context for (condition, timestep).
    pub fn context(&self, cond: &ConditionEmbedding, t: f64) -> Result<Tensor, DenoiserError> {
        let mut tape = Tape::new();
        let vars = self.params.upload(&mut tape, false);
        let vcond = tape.leaf(cond.vector.clone());
        let ctx = context_on_tape(&mut tape, &vars, vcond, &self.cfg, t)?;
        Ok(tape.value(ctx).clone())
    }

    /// Input projection of a latent.
    pub fn embed_input(&self, z: &Tensor) -> Result<Tensor, DenoiserError> {
        let mut tape = Tape::new();
        let vars = self.params.upload(&mut tape, false);
        let vz = tape.leaf(z.clone());
        let tokens = embed_on_tape(&mut tape, &vars, vz)?;
        Ok(tape.value(tokens).clone())
    }

    /// One transformer block over plain tensors.
    pub fn block_forward(
        &self,
        block: usize,
        tokens: &Tensor,
        ctx: &Tensor,
        adapter: Option<&LoraAdapter>,
        tap: Option<&mut AttentionTap>,
    ) -> Result<Tensor, DenoiserError> {
        if tokens.rows() != self.cfg.m || tokens.cols() != self.cfg.d_model {
            return Err(DenoiserError::BadConfig(format!(
                "block_forward tokens {:?}, expected {}x{}",
                tokens.shape(),
                self.cfg.m,
                self.cfg.d_model
            )));
        }
        let mut tape = Tape::new();
        let vars = self.params.upload(&mut tape, false);
        let advars = adapter.map(|a| a.upload(&mut tape, false));
        let vt = tape.leaf(tokens.clone());
        let vctx = tape.leaf(ctx.clone());
        let out = block_forward_on_tape(
            &mut tape,
            &self.cfg,
            &vars.blocks[block],
            advars.as_ref(),
            vt,
            vctx,
            block,
            tap,
        )?;
        Ok(tape.value(out).clone())
    }

    /// Final layer norm plus output head.
    pub fn output_head(&self, tokens: &Tensor) -> Result<Tensor, DenoiserError> {
        let mut tape = Tape::new();
        let vars = self.params.upload(&mut tape, false);
        let vt = tape.leaf(tokens.clone());
        let out = head_on_tape(&mut tape, &vars, vt)?;
        Ok(tape.value(out).clone())
    }

    /// Self-attention K/V of a block for given input tokens, without running
    /// the block.
    pub fn project_self_kv(
        &self,
        block: usize,
        tokens: &Tensor,
        adapter: Option<&LoraAdapter>,
    ) -> Result<(Tensor, Tensor), DenoiserError> {
        let mut tape = Tape::new();
        let vars = self.params.upload(&mut tape, false);
        let advars = adapter.map(|a| a.upload(&mut tape, false));
        let vt = tape.leaf(tokens.clone());
        let (k, v) =
            project_self_kv_on_tape(&mut tape, &vars.blocks[block], advars.as_ref(), vt, block)?;
        Ok((tape.value(k).clone(), tape.value(v).clone()))
    }

    /// Cross-attention K/V of a block for a given context.
    pub fn project_cross_kv(
        &self,
        block: usize,
        ctx: &Tensor,
        adapter: Option<&LoraAdapter>,
    ) -> Result<(Tensor, Tensor), DenoiserError> {
        let mut tape = Tape::new();
        let vars = self.params.upload(&mut tape, false);
        let advars = adapter.map(|a| a.upload(&mut tape, false));
        let vc = tape.leaf(ctx.clone());
        let (k, v) =
            project_cross_kv_on_tape(&mut tape, &vars.blocks[block], advars.as_ref(), vc, block)?;
        Ok((tape.value(k).clone(), tape.value(v).clone()))
    }

    /// Predicted velocity at (z, t).
    pub fn velocity(
        &self,
        z: &Tensor,
        t: f64,
        cond: &ConditionEmbedding,
        adapter: Option<&LoraAdapter>,
    ) -> Result<Tensor, DenoiserError> {
        Ok(self.velocity_with_tokens(z, t, cond, adapter)?.0)
    }

    /// Velocity plus the tokens leaving the last block.
    pub fn velocity_with_tokens(
        &self,
        z: &Tensor,
        t: f64,
        cond: &ConditionEmbedding,
        adapter: Option<&LoraAdapter>,
    ) -> Result<(Tensor, Tensor), DenoiserError> {
        let mut tape = Tape::new();
        let vars = self.params.upload(&mut tape, false);
        let advars = adapter.map(|a| a.upload(&mut tape, false));
        let vz = tape.leaf(z.clone());
        let vcond = tape.leaf(cond.vector.clone());
        let ctx = context_on_tape(&mut tape, &vars, vcond, &self.cfg, t)?;
        let (out, tokens) =
            velocity_on_tape(&mut tape, &self.cfg, &vars, advars.as_ref(), vz, ctx, None)?;
        let v = tape.value(out).clone();
        v.ensure_finite("velocity")?;
        Ok((v, tape.value(tokens).clone()))
    }

    /// Euler integration of dz/dt = v from t = 0 (noise) to t = 1. Step k
    /// runs 1..=steps with k = 1 the noise end; hooks see that coordinate.
    pub fn sample(
        &self,
        z0: &Tensor,
        cond: &ConditionEmbedding,
        steps: usize,
        adapter: Option<&LoraAdapter>,
        hooks: &mut dyn SampleHooks,
    ) -> Result<Tensor, DenoiserError> {
        if steps != self.cfg.steps {
            return Err(DenoiserError::StepsMismatch { got: steps, expected: self.cfg.steps });
        }
        let h = 1.0 / steps as f64;
        let mut z = z0.clone();
        for k in 1..=steps {
            let t = (k - 1) as f64 / steps as f64;
            let z_in = hooks.model_input(k, &z).unwrap_or_else(|| z.clone());
            let (v, tokens) = self.velocity_with_tokens(&z_in, t, cond, adapter)?;
            hooks.observe(k, &z_in, &tokens);
            z = z.add(&v.scale(h))?;
            z.ensure_finite("sample")
                .map_err(|_| DenoiserError::NonFiniteState { step: k })?;
        }
        Ok(z)
    }

    /// Reverse Euler from t = 1 (data) back to t = 0; recovers the latent
    /// that regenerates `x` under [`Model::sample`].
    pub fn invert(
        &self,
        x: &Tensor,
        cond: &ConditionEmbedding,
        steps: usize,
        adapter: Option<&LoraAdapter>,
    ) -> Result<Tensor, DenoiserError> {
        if steps != self.cfg.steps {
            return Err(DenoiserError::StepsMismatch { got: steps, expected: self.cfg.steps });
        }
        let h = 1.0 / steps as f64;
        let mut z = x.clone();
        for k in (1..=steps).rev() {
            let t = (k - 1) as f64 / steps as f64;
            let v = self.velocity(&z, t, cond, adapter)?;
            z = z.sub(&v.scale(h))?;
            z.ensure_finite("invert")
                .map_err(|_| DenoiserError::NonFiniteState { step: k })?;
        }
        Ok(z)
    }
}

/// Geometry then texture: points from z_g, colors from (points + z_t).
#[allow(clippy::too_many_arguments)]
pub fn cascade_generate(
    geom: &Model,
    tex: &Model,
    noise: &NoisePair,
    cond_g: &ConditionEmbedding,
    cond_t: &ConditionEmbedding,
    adapter_g: Option<&LoraAdapter>,
    adapter_t: Option<&LoraAdapter>,
    hooks_g: &mut dyn SampleHooks,
    hooks_t: &mut dyn SampleHooks,
) -> Result<(Tensor, Tensor), DenoiserError> {
    let points = geom.sample(&noise.z_g, cond_g, geom.cfg.steps, adapter_g, hooks_g)?;
    let tex_start = points.add(&noise.z_t)?;
    let colors = tex.sample(&tex_start, cond_t, tex.cfg.steps, adapter_t, hooks_t)?;
    Ok((points, colors))
}
