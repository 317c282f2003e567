//! Flow-matching training and LoRA fine-tuning.
//!
//! The objective is the rectified-flow regression: with x a datum, z
//! Gaussian noise and t ~ U(0,1), the model learns v(x_t, t, c) for
//! x_t = (1-t) start + t end, target v = end - start. For the geometry
//! stage (start, end) = (z, points); for the texture stage the latent rides
//! on the points: (points + z, colors).

use rayon::prelude::*;

use super::config::DenoiserConfig;
use super::forward::{context_on_tape, velocity_on_tape};
use super::lora::LoraAdapter;
use super::model::Model;
use super::params::ModelParams;
use super::DenoiserError;
use crate::numerics::autodiff::Tape;
use crate::numerics::{lerp, Rng, Tensor};
use crate::shapes::{Corpus, ShapeSample};

/// Which cascade stage a model is trained for.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StageKind {
    Geometry,
    Texture,
}

impl StageKind {
    pub fn name(self) -> &'static str {
        match self {
            StageKind::Geometry => "geometry",
            StageKind::Texture => "texture",
        }
    }

    /// Flow endpoints (start, end) for one datum and one noise draw.
    fn flow_pair(self, sample: &ShapeSample, z: &Tensor) -> Result<(Tensor, Tensor), DenoiserError> {
        Ok(match self {
            StageKind::Geometry => (z.clone(), sample.points.clone()),
            StageKind::Texture => (sample.points.add(z)?, sample.colors.clone()),
        })
    }
}

/// Training hyperparameters. Adam with cosine-decayed learning rate.
#[derive(Clone, Debug)]
pub struct TrainHyper {
    pub lr: f64,
    pub batches: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self { lr: 3e-4, batches: 3000, batch_size: 8, seed: 7 }
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: usize,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(sizes: &[usize]) -> Self {
        Self {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn begin_step(&mut self) {
        self.t += 1;
    }

    /// Update one parameter slot in place.
    fn update(&mut self, idx: usize, lr: f64, grad: &[f64], data: &mut [f64]) {
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        let m = &mut self.m[idx];
        let v = &mut self.v[idx];
        for i in 0..grad.len() {
            let g = grad[i];
            m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g;
            v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g * g;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            data[i] -= lr * mhat / (vhat.sqrt() + Self::EPS);
        }
    }
}

fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    base * 0.5 * (1.0 + (std::f64::consts::PI * step as f64 / total as f64).cos())
}

/// Per-sample loss and parameter gradients.
fn sample_grads(
    cfg: &DenoiserConfig,
    params: &ModelParams,
    sample: &ShapeSample,
    t: f64,
    z: &Tensor,
    kind: StageKind,
) -> Result<(f64, Vec<Vec<f64>>), DenoiserError> {
    let mut tape = Tape::new();
    let vars = params.upload(&mut tape, true);
    let cond = params.cond.embed_on_tape(
        &mut tape,
        vars.cond_family,
        vars.cond_param_proj,
        sample.family.id(),
        &sample.params,
    )?;
    let ctx = context_on_tape(&mut tape, &vars, cond, cfg, t)?;
    let (start, end) = kind.flow_pair(sample, z)?;
    let x_t = lerp(&start, &end, t)?;
    let target = end.sub(&start)?;
    let vz = tape.leaf(x_t);
    let vtarget = tape.leaf(target);
    let (v, _) = velocity_on_tape(&mut tape, cfg, &vars, None, vz, ctx, None)?;
    let loss = tape.mean_sq(v, vtarget)?;
    let loss_val = tape.value(loss).item();
    tape.backward(loss)?;
    let grads = vars
        .flat()
        .iter()
        .map(|&var| {
            tape.grad(var)
                .map(|g| g.to_vec())
                .unwrap_or_else(|| vec![0.0; tape.value(var).numel()])
        })
        .collect();
    Ok((loss_val, grads))
}

/// Train one stage from scratch. Deterministic for a fixed seed: all random
/// draws happen on one stream before the parallel gradient evaluation, and
/// gradient reduction is ordered.
pub fn train(
    cfg: &DenoiserConfig,
    corpus: &Corpus,
    kind: StageKind,
    hyper: &TrainHyper,
) -> Result<(Model, Vec<f64>), DenoiserError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(DenoiserError::BadConfig("empty corpus".into()));
    }
    let mut rng = Rng::new(hyper.seed ^ 0x5452_4149_4e00 ^ kind as u64);
    let mut params = ModelParams::init(cfg, &mut rng);
    let sizes: Vec<usize> = {
        let mut s = Vec::new();
        params.visit(|_, t| s.push(t.numel()));
        s
    };
    let mut adam = Adam::new(&sizes);
    let mut trace = Vec::with_capacity(hyper.batches);

    for step in 0..hyper.batches {
        let draws: Vec<(usize, f64, Tensor)> = (0..hyper.batch_size)
            .map(|_| {
                let idx = rng.range(corpus.len());
                let t = rng.uniform();
                let z = rng.gaussian(&[cfg.m, cfg.channels_in]);
                (idx, t, z)
            })
            .collect();

        let results: Vec<Result<(f64, Vec<Vec<f64>>), DenoiserError>> = draws
            .par_iter()
            .map(|(idx, t, z)| sample_grads(cfg, &params, &corpus.samples[*idx], *t, z, kind))
            .collect();

        let mut batch_loss = 0.0;
        let mut grads: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
        for r in results {
            let (loss, g) = r?;
            batch_loss += loss;
            for (acc, gi) in grads.iter_mut().zip(g) {
                for (a, b) in acc.iter_mut().zip(gi) {
                    *a += b;
                }
            }
        }
        batch_loss /= hyper.batch_size as f64;
        let inv_b = 1.0 / hyper.batch_size as f64;
        for g in &mut grads {
            for v in g.iter_mut() {
                *v *= inv_b;
            }
        }
        if !batch_loss.is_finite() {
            return Err(DenoiserError::Diverged { step });
        }
        trace.push(batch_loss);

        let lr = cosine_lr(hyper.lr, step, hyper.batches);
        adam.begin_step();
        let mut idx = 0;
        params.visit_mut(|_, tensor| {
            adam.update(idx, lr, &grads[idx], tensor.data_mut());
            idx += 1;
        });
    }

    Ok((Model::new(cfg.clone(), params)?, trace))
}

/// LoRA fine-tune hyperparameters.
#[derive(Clone, Debug)]
pub struct FinetuneHyper {
    pub steps: usize,
    pub rank: usize,
    pub alpha: f64,
    pub lr: f64,
    pub seed: u64,
}

impl Default for FinetuneHyper {
    fn default() -> Self {
        Self { steps: 500, rank: 16, alpha: 20.0, lr: 2e-3, seed: 11 }
    }
}

/// Fit a low-rank adapter to one datum; base weights stay frozen.
pub fn lora_finetune(
    model: &Model,
    sample: &ShapeSample,
    kind: StageKind,
    hyper: &FinetuneHyper,
) -> Result<LoraAdapter, DenoiserError> {
    let cfg = &model.cfg;
    let mut rng = Rng::new(hyper.seed ^ 0x4c4f_5241);
    let mut adapter =
        LoraAdapter::init(cfg.n_blocks, cfg.d_model, hyper.rank, hyper.alpha, &mut rng);
    let cond = model.params.cond.condition_of(sample)?;
    let sizes: Vec<usize> = adapter
        .pairs
        .iter()
        .flat_map(|p| [p.a.numel(), p.b.numel()])
        .collect();
    let mut adam = Adam::new(&sizes);

    for step in 0..hyper.steps {
        let t = rng.uniform();
        let z = rng.gaussian(&[cfg.m, cfg.channels_in]);
        let mut tape = Tape::new();
        let vars = model.params.upload(&mut tape, false);
        let advars = adapter.upload(&mut tape, true);
        let vcond = tape.leaf(cond.vector.clone());
        let ctx = context_on_tape(&mut tape, &vars, vcond, cfg, t)?;
        let (start, end) = kind.flow_pair(sample, &z)?;
        let x_t = lerp(&start, &end, t)?;
        let target = end.sub(&start)?;
        let vz = tape.leaf(x_t);
        let vtarget = tape.leaf(target);
        let (v, _) = velocity_on_tape(&mut tape, cfg, &vars, Some(&advars), vz, ctx, None)?;
        let loss = tape.mean_sq(v, vtarget)?;
        if !tape.value(loss).item().is_finite() {
            return Err(DenoiserError::Diverged { step });
        }
        tape.backward(loss)?;

        let grads: Vec<Vec<f64>> = advars
            .pairs
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .map(|var| {
                tape.grad(var)
                    .map(|g| g.to_vec())
                    .unwrap_or_else(|| vec![0.0; tape.value(var).numel()])
            })
            .collect();

        adam.begin_step();
        for (idx, grad) in grads.iter().enumerate() {
            let pair = &mut adapter.pairs[idx / 2];
            let data = if idx % 2 == 0 { pair.a.data_mut() } else { pair.b.data_mut() };
            adam.update(idx, hyper.lr, grad, data);
        }
    }
    Ok(adapter)
}
