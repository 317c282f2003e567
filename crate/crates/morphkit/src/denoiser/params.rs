//! Model parameters: per-block attention/MLP weights, projections, the
//! timestep-embedding table, and the condition tables. A single named
//! traversal order drives checkpoints, optimizer state, and tape upload.

use super::config::DenoiserConfig;
use crate::numerics::autodiff::{Tape, Var};
use crate::numerics::{Rng, Tensor};
use crate::shapes::ConditionTable;

#[derive(Clone, Debug)]
pub struct AttnParams {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub wo: Tensor,
}

#[derive(Clone, Debug)]
pub struct BlockParams {
    pub ln1_gain: Tensor,
    pub ln1_bias: Tensor,
    pub self_attn: AttnParams,
    pub ln2_gain: Tensor,
    pub ln2_bias: Tensor,
    pub cross_attn: AttnParams,
    pub ln3_gain: Tensor,
    pub ln3_bias: Tensor,
    pub mlp_w1: Tensor,
    pub mlp_b1: Tensor,
    pub mlp_w2: Tensor,
    pub mlp_b2: Tensor,
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub blocks: Vec<BlockParams>,
    pub in_w: Tensor,
    pub in_b: Tensor,
    pub final_ln_gain: Tensor,
    pub final_ln_bias: Tensor,
    /// Zero-initialized so an untrained model predicts zero velocity.
    pub head_w: Tensor,
    pub head_b: Tensor,
    /// steps x d_model, looked up by quantized timestep.
    pub t_table: Tensor,
    pub cond: ConditionTable,
    /// d_cond x d_model projection of the condition embedding.
    pub cond_proj: Tensor,
    /// Fixed sinusoidal position features added after the input projection.
    /// Derived from the config, never trained or serialized.
    pub pos: Tensor,
}

/// Standard sinusoidal position table, m x d.
fn sinusoidal_positions(m: usize, d: usize) -> Tensor {
    Tensor::from_fn(&[m, d], |idx| {
        let (i, j) = (idx / d, idx % d);
        let pair = j / 2;
        let rate = (10_000.0f64).powf(-2.0 * pair as f64 / d as f64);
        let angle = i as f64 * rate;
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

fn linear_init(rng: &mut Rng, d_in: usize, d_out: usize) -> Tensor {
    let std = 1.0 / (d_in as f64).sqrt();
    rng.gaussian(&[d_in, d_out]).scale(std)
}

impl ModelParams {
    pub fn init(cfg: &DenoiserConfig, rng: &mut Rng) -> Self {
        let d = cfg.d_model;
        let blocks = (0..cfg.n_blocks)
            .map(|_| BlockParams {
                ln1_gain: Tensor::filled(&[d], 1.0),
                ln1_bias: Tensor::zeros(&[d]),
                self_attn: AttnParams {
                    wq: linear_init(rng, d, d),
                    wk: linear_init(rng, d, d),
                    wv: linear_init(rng, d, d),
                    wo: linear_init(rng, d, d),
                },
                ln2_gain: Tensor::filled(&[d], 1.0),
                ln2_bias: Tensor::zeros(&[d]),
                cross_attn: AttnParams {
                    wq: linear_init(rng, d, d),
                    wk: linear_init(rng, d, d),
                    wv: linear_init(rng, d, d),
                    wo: linear_init(rng, d, d),
                },
                ln3_gain: Tensor::filled(&[d], 1.0),
                ln3_bias: Tensor::zeros(&[d]),
                mlp_w1: linear_init(rng, d, cfg.mlp_dim()),
                mlp_b1: Tensor::zeros(&[cfg.mlp_dim()]),
                mlp_w2: linear_init(rng, cfg.mlp_dim(), d),
                mlp_b2: Tensor::zeros(&[d]),
            })
            .collect();
        Self {
            blocks,
            in_w: linear_init(rng, cfg.channels_in, d),
            in_b: Tensor::zeros(&[d]),
            final_ln_gain: Tensor::filled(&[d], 1.0),
            final_ln_bias: Tensor::zeros(&[d]),
            head_w: Tensor::zeros(&[d, cfg.channels_out]),
            head_b: Tensor::zeros(&[cfg.channels_out]),
            t_table: rng.gaussian(&[cfg.steps, d]).scale(0.3),
            cond: ConditionTable::init(cfg.d_cond, rng),
            cond_proj: linear_init(rng, cfg.d_cond, d),
            pos: sinusoidal_positions(cfg.m, d),
        }
    }

    /// Visit every tensor with its stable name, in a fixed order.
    pub fn visit(&self, mut f: impl FnMut(&str, &Tensor)) {
        for (i, b) in self.blocks.iter().enumerate() {
            let p = format!("block{i}");
            f(&format!("{p}.ln1.gain"), &b.ln1_gain);
            f(&format!("{p}.ln1.bias"), &b.ln1_bias);
            f(&format!("{p}.self.wq"), &b.self_attn.wq);
            f(&format!("{p}.self.wk"), &b.self_attn.wk);
            f(&format!("{p}.self.wv"), &b.self_attn.wv);
            f(&format!("{p}.self.wo"), &b.self_attn.wo);
            f(&format!("{p}.ln2.gain"), &b.ln2_gain);
            f(&format!("{p}.ln2.bias"), &b.ln2_bias);
            f(&format!("{p}.cross.wq"), &b.cross_attn.wq);
            f(&format!("{p}.cross.wk"), &b.cross_attn.wk);
            f(&format!("{p}.cross.wv"), &b.cross_attn.wv);
            f(&format!("{p}.cross.wo"), &b.cross_attn.wo);
            f(&format!("{p}.ln3.gain"), &b.ln3_gain);
            f(&format!("{p}.ln3.bias"), &b.ln3_bias);
            f(&format!("{p}.mlp.w1"), &b.mlp_w1);
            f(&format!("{p}.mlp.b1"), &b.mlp_b1);
            f(&format!("{p}.mlp.w2"), &b.mlp_w2);
            f(&format!("{p}.mlp.b2"), &b.mlp_b2);
        }
        f("in.w", &self.in_w);
        f("in.b", &self.in_b);
        f("final_ln.gain", &self.final_ln_gain);
        f("final_ln.bias", &self.final_ln_bias);
        f("head.w", &self.head_w);
        f("head.b", &self.head_b);
        f("t_table", &self.t_table);
        f("cond.family_table", &self.cond.family_table);
        f("cond.param_proj", &self.cond.param_proj);
        f("cond_proj.w", &self.cond_proj);
    }

    /// Mutable variant of [`visit`], same order.
    pub fn visit_mut(&mut self, mut f: impl FnMut(&str, &mut Tensor)) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            let p = format!("block{i}");
            f(&format!("{p}.ln1.gain"), &mut b.ln1_gain);
            f(&format!("{p}.ln1.bias"), &mut b.ln1_bias);
            f(&format!("{p}.self.wq"), &mut b.self_attn.wq);
            f(&format!("{p}.self.wk"), &mut b.self_attn.wk);
            f(&format!("{p}.self.wv"), &mut b.self_attn.wv);
            f(&format!("{p}.self.wo"), &mut b.self_attn.wo);
            f(&format!("{p}.ln2.gain"), &mut b.ln2_gain);
            f(&format!("{p}.ln2.bias"), &mut b.ln2_bias);
            f(&format!("{p}.cross.wq"), &mut b.cross_attn.wq);
            f(&format!("{p}.cross.wk"), &mut b.cross_attn.wk);
            f(&format!("{p}.cross.wv"), &mut b.cross_attn.wv);
            f(&format!("{p}.cross.wo"), &mut b.cross_attn.wo);
            f(&format!("{p}.ln3.gain"), &mut b.ln3_gain);
            f(&format!("{p}.ln3.bias"), &mut b.ln3_bias);
            f(&format!("{p}.mlp.w1"), &mut b.mlp_w1);
            f(&format!("{p}.mlp.b1"), &mut b.mlp_b1);
            f(&format!("{p}.mlp.w2"), &mut b.mlp_w2);
            f(&format!("{p}.mlp.b2"), &mut b.mlp_b2);
        }
        f("in.w", &mut self.in_w);
        f("in.b", &mut self.in_b);
        f("final_ln.gain", &mut self.final_ln_gain);
        f("final_ln.bias", &mut self.final_ln_bias);
        f("head.w", &mut self.head_w);
        f("head.b", &mut self.head_b);
        f("t_table", &mut self.t_table);
        f("cond.family_table", &mut self.cond.family_table);
        f("cond.param_proj", &mut self.cond.param_proj);
        f("cond_proj.w", &mut self.cond_proj);
    }

    pub fn n_tensors(&self) -> usize {
        let mut n = 0;
        self.visit(|_, _| n += 1);
        n
    }

    /// Upload all parameters onto a tape, trainable or frozen.
    pub fn upload(&self, tape: &mut Tape, trainable: bool) -> ModelVars {
        let pos = tape.leaf(self.pos.clone());
        let mut up = |t: &Tensor| if trainable { tape.param(t.clone()) } else { tape.leaf(t.clone()) };
        let blocks = self
            .blocks
            .iter()
            .map(|b| BlockVars {
                ln1_gain: up(&b.ln1_gain),
                ln1_bias: up(&b.ln1_bias),
                self_attn: AttnVars {
                    wq: up(&b.self_attn.wq),
                    wk: up(&b.self_attn.wk),
                    wv: up(&b.self_attn.wv),
                    wo: up(&b.self_attn.wo),
                },
                ln2_gain: up(&b.ln2_gain),
                ln2_bias: up(&b.ln2_bias),
                cross_attn: AttnVars {
                    wq: up(&b.cross_attn.wq),
                    wk: up(&b.cross_attn.wk),
                    wv: up(&b.cross_attn.wv),
                    wo: up(&b.cross_attn.wo),
                },
                ln3_gain: up(&b.ln3_gain),
                ln3_bias: up(&b.ln3_bias),
                mlp_w1: up(&b.mlp_w1),
                mlp_b1: up(&b.mlp_b1),
                mlp_w2: up(&b.mlp_w2),
                mlp_b2: up(&b.mlp_b2),
            })
            .collect();
        ModelVars {
            blocks,
            in_w: up(&self.in_w),
            in_b: up(&self.in_b),
            final_ln_gain: up(&self.final_ln_gain),
            final_ln_bias: up(&self.final_ln_bias),
            head_w: up(&self.head_w),
            head_b: up(&self.head_b),
            t_table: up(&self.t_table),
            cond_family: up(&self.cond.family_table),
            cond_param_proj: up(&self.cond.param_proj),
            cond_proj: up(&self.cond_proj),
            pos,
        }
    }
}

#[derive(Copy, Clone)]
pub struct AttnVars {
    pub wq: Var,
    pub wk: Var,
    pub wv: Var,
    pub wo: Var,
}

#[derive(Clone)]
pub struct BlockVars {
    pub ln1_gain: Var,
    pub ln1_bias: Var,
    pub self_attn: AttnVars,
    pub ln2_gain: Var,
    pub ln2_bias: Var,
    pub cross_attn: AttnVars,
    pub ln3_gain: Var,
    pub ln3_bias: Var,
    pub mlp_w1: Var,
    pub mlp_b1: Var,
    pub mlp_w2: Var,
    pub mlp_b2: Var,
}

/// Tape handles mirroring [`ModelParams`].
pub struct ModelVars {
    pub blocks: Vec<BlockVars>,
    pub in_w: Var,
    pub in_b: Var,
    pub final_ln_gain: Var,
    pub final_ln_bias: Var,
    pub head_w: Var,
    pub head_b: Var,
    pub t_table: Var,
    pub cond_family: Var,
    pub cond_param_proj: Var,
    pub cond_proj: Var,
    pub pos: Var,
}

impl ModelVars {
    /// Vars in the same order as [`ModelParams::visit`].
    pub fn flat(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend([b.ln1_gain, b.ln1_bias]);
            out.extend([b.self_attn.wq, b.self_attn.wk, b.self_attn.wv, b.self_attn.wo]);
            out.extend([b.ln2_gain, b.ln2_bias]);
            out.extend([b.cross_attn.wq, b.cross_attn.wk, b.cross_attn.wv, b.cross_attn.wo]);
            out.extend([b.ln3_gain, b.ln3_bias]);
            out.extend([b.mlp_w1, b.mlp_b1, b.mlp_w2, b.mlp_b2]);
        }
        out.extend([
            self.in_w,
            self.in_b,
            self.final_ln_gain,
            self.final_ln_bias,
            self.head_w,
            self.head_b,
            self.t_table,
            self.cond_family,
            self.cond_param_proj,
            self.cond_proj,
        ]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn visit_and_flat_orders_agree() {
        let cfg = DenoiserConfig { m: 16, d_model: 8, n_blocks: 2, n_heads: 2, d_cond: 4, steps: 4, channels_in: 3, channels_out: 3 };
        let params = ModelParams::init(&cfg, &mut Rng::new(1));
        let mut names = Vec::new();
        params.visit(|name, _| names.push(name.to_string()));
        let mut tape = Tape::new();
        let vars = params.upload(&mut tape, false);
        assert_eq!(names.len(), vars.flat().len());
        // Spot-check a few positions carry the right tensors.
        let flat = vars.flat();
        let mut i = 0;
        params.visit(|_, t| {
            assert_eq!(tape.value(flat[i]), t);
            i += 1;
        });
    }
}
