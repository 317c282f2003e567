//! The full morph: LoRA fine-tuning of both endpoints, inversion, the alpha
//! schedule, and per-alpha regeneration through the interpolated model with
//! the three mechanisms applied in their timestep windows.
//!
//! Per alpha, three latent streams (source, target, interpolated) run
//! through the same interpolated model. Attention fusion rewrites the
//! interpolated stream's K/V from the side streams, token reordering keeps
//! the side streams row-aligned between blocks, and low-frequency
//! enhancement boosts the sub-omega0 band of the model input late in
//! sampling.

use rayon::prelude::*;

use super::fusion::fused_attention;
use super::lfe::low_freq_enhance;
use super::reorder::{reorder_tokens, ReorderedSide};
use super::schedule::{alpha_schedule, AlphaSchedule};
use super::MorphError;
use crate::denoiser::{
    lora_finetune, lora_interpolate, AttentionTap, AttnKind, FinetuneHyper, LoraAdapter, Model,
    NoisePair, SampleHooks, StageKind,
};
use crate::numerics::{lerp, slerp, Tensor};
use crate::shapes::{ConditionEmbedding, ShapeSample};

/// Inclusive timestep window over 1..=steps.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct MorphWindow {
    pub start: usize,
    pub end: usize,
}

impl MorphWindow {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, step: usize) -> bool {
        (self.start..=self.end).contains(&step)
    }
}

/// Morph configuration: schedule shape plus the three mechanism windows.
#[derive(Clone, Debug)]
pub struct MorphConfig {
    pub n_frames: usize,
    pub beta_a: f64,
    pub beta_b: f64,
    pub include_endpoints: bool,
    pub af_enabled: bool,
    pub af_geom_window: MorphWindow,
    pub af_tex_window: MorphWindow,
    pub tr_enabled: bool,
    pub tr_window: MorphWindow,
    pub lfe_enabled: bool,
    pub lfe_window: MorphWindow,
    pub lfe_scale: f64,
    pub lfe_omega0: f64,
    pub lora: FinetuneHyper,
}

impl Default for MorphConfig {
    fn default() -> Self {
        Self {
            n_frames: 10,
            beta_a: 2.0,
            beta_b: 2.0,
            include_endpoints: true,
            af_enabled: true,
            af_geom_window: MorphWindow::new(1, 150),
            af_tex_window: MorphWindow::new(1, 5),
            tr_enabled: true,
            tr_window: MorphWindow::new(80, 200),
            lfe_enabled: true,
            lfe_window: MorphWindow::new(200, 230),
            lfe_scale: 5.0,
            lfe_omega0: 0.1 * std::f64::consts::PI,
            lora: FinetuneHyper::default(),
        }
    }
}

impl MorphConfig {
    /// Basic interpolation: all mechanisms off.
    pub fn basic() -> Self {
        Self { af_enabled: false, tr_enabled: false, lfe_enabled: false, ..Self::default() }
    }

    pub fn validate(&self, steps: usize) -> Result<(), MorphError> {
        let check = |name: &str, w: &MorphWindow| {
            if w.start < 1 || w.end > steps || w.start > w.end {
                Err(MorphError::InvalidConfig(format!(
                    "{name} window [{}, {}] outside [1, {steps}]",
                    w.start, w.end
                )))
            } else {
                Ok(())
            }
        };
        if self.af_enabled {
            check("attention-fusion geometry", &self.af_geom_window)?;
            check("attention-fusion texture", &self.af_tex_window)?;
        }
        if self.tr_enabled {
            check("token-reordering", &self.tr_window)?;
        }
        if self.lfe_enabled {
            check("low-frequency-enhancement", &self.lfe_window)?;
            if !(self.lfe_scale >= 1.0) {
                return Err(MorphError::InvalidConfig(format!(
                    "lfe scale {} must be >= 1",
                    self.lfe_scale
                )));
            }
            if !(self.lfe_omega0 > 0.0 && self.lfe_omega0 < std::f64::consts::PI) {
                return Err(MorphError::InvalidConfig(format!(
                    "lfe omega0 {} outside (0, pi)",
                    self.lfe_omega0
                )));
            }
        }
        if self.n_frames < 2 {
            return Err(MorphError::InvalidConfig("n_frames must be >= 2".into()));
        }
        Ok(())
    }

    /// Canonical key=value form; the basis of the config hash.
    pub fn canonical_string(&self) -> String {
        format!(
            "af={}\naf_geom_window={}..{}\naf_tex_window={}..{}\nbeta_a={}\nbeta_b={}\n\
             include_endpoints={}\nlfe={}\nlfe_omega0={}\nlfe_scale={}\nlfe_window={}..{}\n\
             lora_alpha={}\nlora_lr={}\nlora_rank={}\nlora_steps={}\nn_frames={}\ntr={}\n\
             tr_window={}..{}\n",
            self.af_enabled,
            self.af_geom_window.start,
            self.af_geom_window.end,
            self.af_tex_window.start,
            self.af_tex_window.end,
            self.beta_a,
            self.beta_b,
            self.include_endpoints,
            self.lfe_enabled,
            self.lfe_omega0,
            self.lfe_scale,
            self.lfe_window.start,
            self.lfe_window.end,
            self.lora.alpha,
            self.lora.lr,
            self.lora.rank,
            self.lora.steps,
            self.n_frames,
            self.tr_enabled,
            self.tr_window.start,
            self.tr_window.end,
        )
    }

    pub fn config_hash(&self) -> u64 {
        fnv1a64(self.canonical_string().as_bytes())
    }
}

/// FNV-1a 64-bit hash; used for config hashes and derived seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1_0000_0000_01b3);
    }
    h
}

/// How often each mechanism actually fired during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MechanismCounters {
    pub fusion: usize,
    pub reorder: usize,
    pub lfe: usize,
}

impl MechanismCounters {
    fn add(&mut self, other: &MechanismCounters) {
        self.fusion += other.fusion;
        self.reorder += other.reorder;
        self.lfe += other.lfe;
    }
}

/// One generated frame.
#[derive(Clone, Debug)]
pub struct MorphFrame {
    pub alpha: f64,
    pub points: Tensor,
    pub colors: Tensor,
}

/// Reproducibility record attached to a sequence.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: u64,
    pub src_finetune_seeds: [u64; 2],
    pub tgt_finetune_seeds: [u64; 2],
}

/// Frames sorted by alpha plus counters and provenance.
#[derive(Clone, Debug)]
pub struct MorphSequence {
    pub frames: Vec<MorphFrame>,
    pub schedule: AlphaSchedule,
    pub counters: MechanismCounters,
    pub provenance: Provenance,
}

/// The two trained stages.
#[derive(Copy, Clone)]
pub struct MorphModels<'a> {
    pub geom: &'a Model,
    pub tex: &'a Model,
}

/// Per-shape preparation: LoRA adapters for both stages and the inverted
/// noise pair, all through the fine-tuned models.
#[derive(Clone, Debug)]
pub struct ShapeArtifacts {
    pub adapter_g: LoraAdapter,
    pub adapter_t: LoraAdapter,
    pub noise: NoisePair,
    pub finetune_seeds: [u64; 2],
}

/// Stable identity of a shape record, used to derive fine-tune seeds.
pub fn shape_key(s: &ShapeSample) -> u64 {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(s.family.id() as u64).to_le_bytes());
    for p in &s.params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    bytes.extend_from_slice(&s.seed.to_le_bytes());
    fnv1a64(&bytes)
}

fn stage_err<E: std::fmt::Display>(stage: &str, alpha: Option<f64>) -> impl FnOnce(E) -> MorphError + '_ {
    move |e| MorphError::Stage { stage: stage.to_string(), alpha, message: e.to_string() }
}

/// Fine-tune both stages on one shape and invert it to its noise pair.
pub fn prepare_shape(
    models: &MorphModels,
    shape: &ShapeSample,
    lora: &FinetuneHyper,
    base_seed: u64,
) -> Result<ShapeArtifacts, MorphError> {
    let key = shape_key(shape);
    let seed_g = fnv1a64(&[base_seed.to_le_bytes(), key.to_le_bytes(), [0u8; 8]].concat());
    let seed_t = fnv1a64(&[base_seed.to_le_bytes(), key.to_le_bytes(), [1u8; 8]].concat());

    let hyper_g = FinetuneHyper { seed: seed_g, ..lora.clone() };
    let adapter_g = lora_finetune(models.geom, shape, StageKind::Geometry, &hyper_g)
        .map_err(stage_err("lora_finetune geometry", None))?;
    let hyper_t = FinetuneHyper { seed: seed_t, ..lora.clone() };
    let adapter_t = lora_finetune(models.tex, shape, StageKind::Texture, &hyper_t)
        .map_err(stage_err("lora_finetune texture", None))?;

    let cond_g = models.geom.params.cond.condition_of(shape).map_err(stage_err("condition", None))?;
    let cond_t = models.tex.params.cond.condition_of(shape).map_err(stage_err("condition", None))?;
    let steps = models.geom.cfg.steps;
    let geom_tuned = models
        .geom
        .with_adapter_merged(&adapter_g)
        .map_err(stage_err("merge geometry adapter", None))?;
    let tex_tuned = models
        .tex
        .with_adapter_merged(&adapter_t)
        .map_err(stage_err("merge texture adapter", None))?;
    let z_g = geom_tuned
        .invert(&shape.points, &cond_g, steps, None)
        .map_err(stage_err("invert geometry", None))?;
    let tex_latent = tex_tuned
        .invert(&shape.colors, &cond_t, models.tex.cfg.steps, None)
        .map_err(stage_err("invert texture", None))?;
    let z_t = tex_latent.sub(&shape.points).map_err(stage_err("invert texture", None))?;

    Ok(ShapeArtifacts {
        adapter_g,
        adapter_t,
        noise: NoisePair { z_g, z_t },
        finetune_seeds: [seed_g, seed_t],
    })
}

/// Spherical interpolation of both noise tensors, each as one flat vector.
pub fn interpolate_noise(
    src: &NoisePair,
    tgt: &NoisePair,
    alpha: f64,
) -> Result<NoisePair, MorphError> {
    Ok(NoisePair {
        z_g: slerp(&src.z_g, &tgt.z_g, alpha)?,
        z_t: slerp(&src.z_t, &tgt.z_t, alpha)?,
    })
}

/// Low-frequency enhancement over the model input, window-gated.
struct LfeHook<'a> {
    enabled: bool,
    window: MorphWindow,
    omega0: f64,
    scale: f64,
    count: &'a mut usize,
}

impl SampleHooks for LfeHook<'_> {
    fn model_input(&mut self, step: usize, z: &Tensor) -> Option<Tensor> {
        // scale == 1 is the identity operator; skipping keeps the run
        // bit-identical to an LFE-disabled run.
        if !self.enabled || !self.window.contains(step) || self.scale == 1.0 {
            return None;
        }
        *self.count += 1;
        Some(low_freq_enhance(z, self.omega0, self.scale).expect("validated lfe params"))
    }
}

fn compose(old: &[usize], applied: &[usize]) -> Vec<usize> {
    applied.iter().map(|&j| old[j]).collect()
}

struct StageOutcome {
    z_src: Tensor,
    z_tgt: Tensor,
    z_alpha: Tensor,
    perm_src: Vec<usize>,
    perm_tgt: Vec<usize>,
    counters: MechanismCounters,
}

/// One cascade stage with three parallel streams through the interpolated
/// model. Side streams advance only while a mechanism window still needs
/// them; the interpolated stream always runs to the end.
#[allow(clippy::too_many_arguments)]
fn run_stage_three_stream(
    model: &Model,
    cfg: &MorphConfig,
    af_window: MorphWindow,
    z0: [&Tensor; 3],
    conds: [&ConditionEmbedding; 3],
    alpha: f64,
    stage: &'static str,
) -> Result<StageOutcome, MorphError> {
    let steps = model.cfg.steps;
    let n_blocks = model.cfg.n_blocks;
    let h = 1.0 / steps as f64;
    let err = |m: String| MorphError::Stage { stage: stage.to_string(), alpha: Some(alpha), message: m };

    let af_on = cfg.af_enabled;
    let tr_on = cfg.tr_enabled;
    let streams_until = match (af_on, tr_on) {
        (true, true) => af_window.end.max(cfg.tr_window.end),
        (true, false) => af_window.end,
        (false, true) => cfg.tr_window.end,
        (false, false) => 0,
    };

    let mut counters = MechanismCounters::default();
    let mut z_src = z0[0].clone();
    let mut z_tgt = z0[1].clone();
    let mut z_alpha = z0[2].clone();
    let mut perm_src: Vec<usize> = (0..model.cfg.m).collect();
    let mut perm_tgt: Vec<usize> = (0..model.cfg.m).collect();
    let mut tap_src = AttentionTap::new(n_blocks);
    let mut tap_tgt = AttentionTap::new(n_blocks);
    let mut tap_alpha = AttentionTap::new(n_blocks);

    for k in 1..=steps {
        let t = (k - 1) as f64 / steps as f64;
        let streams_active = k <= streams_until;
        let af_active = af_on && af_window.contains(k) && streams_active;
        let tr_active = tr_on && cfg.tr_window.contains(k) && streams_active;

        // Enhancement applies to the interpolated stream's model input only;
        // the integration state itself stays untouched.
        let z_alpha_in = if cfg.lfe_enabled && cfg.lfe_window.contains(k) && cfg.lfe_scale != 1.0 {
            counters.lfe += 1;
            low_freq_enhance(&z_alpha, cfg.lfe_omega0, cfg.lfe_scale)?
        } else {
            z_alpha.clone()
        };

        let ctx_alpha = model.context(conds[2], t).map_err(|e| err(e.to_string()))?;
        let mut tokens_alpha =
            model.embed_input(&z_alpha_in).map_err(|e| err(e.to_string()))?;

        let (mut tokens_src, mut tokens_tgt, ctx_src, ctx_tgt) = if streams_active {
            let cs = model.context(conds[0], t).map_err(|e| err(e.to_string()))?;
            let ct = model.context(conds[1], t).map_err(|e| err(e.to_string()))?;
            (
                Some(model.embed_input(&z_src).map_err(|e| err(e.to_string()))?),
                Some(model.embed_input(&z_tgt).map_err(|e| err(e.to_string()))?),
                Some(cs),
                Some(ct),
            )
        } else {
            (None, None, None, None)
        };

        let mut step_perm_src: Vec<usize> = (0..model.cfg.m).collect();
        let mut step_perm_tgt: Vec<usize> = (0..model.cfg.m).collect();

        for block in 0..n_blocks {
            if let (Some(ts), Some(tt)) = (tokens_src.as_mut(), tokens_tgt.as_mut()) {
                *ts = model
                    .block_forward(block, ts, ctx_src.as_ref().unwrap(), None, Some(&mut tap_src))
                    .map_err(|e| err(e.to_string()))?;
                *tt = model
                    .block_forward(block, tt, ctx_tgt.as_ref().unwrap(), None, Some(&mut tap_tgt))
                    .map_err(|e| err(e.to_string()))?;
            }

            if af_active {
                let (ks, vs) = model
                    .project_self_kv(block, &tokens_alpha, None)
                    .map_err(|e| err(e.to_string()))?;
                tap_alpha.record(block, AttnKind::SelfAttn, None, ks, vs);
                let (kc, vc) = model
                    .project_cross_kv(block, &ctx_alpha, None)
                    .map_err(|e| err(e.to_string()))?;
                tap_alpha.record(block, AttnKind::CrossAttn, None, kc, vc);
                for kind in [AttnKind::SelfAttn, AttnKind::CrossAttn] {
                    let (k_repl, v_repl) =
                        fused_attention(&tap_src, &tap_tgt, &tap_alpha, block, kind, alpha)?;
                    tap_alpha.write(block, kind, k_repl, v_repl);
                    counters.fusion += 1;
                }
            }

            tokens_alpha = model
                .block_forward(block, &tokens_alpha, &ctx_alpha, None, Some(&mut tap_alpha))
                .map_err(|e| err(e.to_string()))?;

            // Reorder side streams between consecutive blocks.
            if tr_active && block + 1 < n_blocks {
                let (ts, tt) = (tokens_src.as_mut().unwrap(), tokens_tgt.as_mut().unwrap());
                let r = reorder_tokens(ts, tt, alpha)?;
                match r.side {
                    ReorderedSide::Target => {
                        step_perm_tgt = compose(&step_perm_tgt, &r.perm.sigma);
                    }
                    ReorderedSide::Source => {
                        step_perm_src = compose(&step_perm_src, &r.perm.sigma);
                    }
                }
                *ts = r.src;
                *tt = r.tgt;
                counters.reorder += 1;
            }
        }

        // Euler update; side-stream latents are co-permuted so their rows
        // stay aligned with the reordered tokens.
        let v_alpha = model.output_head(&tokens_alpha).map_err(|e| err(e.to_string()))?;
        z_alpha = z_alpha.add(&v_alpha.scale(h))?;
        z_alpha
            .ensure_finite("morph stage")
            .map_err(|_| err(format!("non-finite interpolated latent at step {k}")))?;

        if let (Some(ts), Some(tt)) = (tokens_src.as_ref(), tokens_tgt.as_ref()) {
            let v_src = model.output_head(ts).map_err(|e| err(e.to_string()))?;
            let v_tgt = model.output_head(tt).map_err(|e| err(e.to_string()))?;
            z_src = z_src.permute_rows(&step_perm_src)?.add(&v_src.scale(h))?;
            z_tgt = z_tgt.permute_rows(&step_perm_tgt)?.add(&v_tgt.scale(h))?;
            perm_src = compose(&perm_src, &step_perm_src);
            perm_tgt = compose(&perm_tgt, &step_perm_tgt);
        }

        tap_src.clear();
        tap_tgt.clear();
        tap_alpha.clear();
    }

    Ok(StageOutcome { z_src, z_tgt, z_alpha, perm_src, perm_tgt, counters })
}

/// Generate one frame at `alpha`.
#[allow(clippy::too_many_arguments)]
fn generate_frame(
    models: &MorphModels,
    cfg: &MorphConfig,
    src: &ShapeSample,
    tgt: &ShapeSample,
    src_art: &ShapeArtifacts,
    tgt_art: &ShapeArtifacts,
    alpha: f64,
) -> Result<(MorphFrame, MechanismCounters), MorphError> {
    let mut counters = MechanismCounters::default();

    let adapter_g = lora_interpolate(&src_art.adapter_g, &tgt_art.adapter_g, alpha)
        .map_err(stage_err("lora_interpolate geometry", Some(alpha)))?;
    let adapter_t = lora_interpolate(&src_art.adapter_t, &tgt_art.adapter_t, alpha)
        .map_err(stage_err("lora_interpolate texture", Some(alpha)))?;
    // Sampling runs on copies with the interpolated deltas folded in.
    let geom_alpha = models
        .geom
        .with_adapter_merged(&adapter_g)
        .map_err(stage_err("merge geometry adapter", Some(alpha)))?;
    let tex_alpha = models
        .tex
        .with_adapter_merged(&adapter_t)
        .map_err(stage_err("merge texture adapter", Some(alpha)))?;
    let noise = interpolate_noise(&src_art.noise, &tgt_art.noise, alpha)?;

    let cond_pairs = |model: &Model| -> Result<[ConditionEmbedding; 3], MorphError> {
        let cs = model.params.cond.condition_of(src).map_err(stage_err("condition", Some(alpha)))?;
        let ct = model.params.cond.condition_of(tgt).map_err(stage_err("condition", Some(alpha)))?;
        let ca = ConditionEmbedding { vector: lerp(&cs.vector, &ct.vector, alpha)? };
        Ok([cs, ct, ca])
    };
    let conds_g = cond_pairs(models.geom)?;
    let conds_t = cond_pairs(models.tex)?;

    let three_stream = cfg.af_enabled || cfg.tr_enabled;
    let (points, colors) = if three_stream {
        let geo = run_stage_three_stream(
            &geom_alpha,
            cfg,
            cfg.af_geom_window,
            [&src_art.noise.z_g, &tgt_art.noise.z_g, &noise.z_g],
            [&conds_g[0], &conds_g[1], &conds_g[2]],
            alpha,
            "geometry",
        )?;
        counters.add(&geo.counters);

        // Texture latents ride on each stream's own geometry, with the
        // side-stream noise rows realigned to the relabeling their stream
        // accumulated during geometry.
        let start_src = geo
            .z_src
            .add(&src_art.noise.z_t.permute_rows(&geo.perm_src)?)?;
        let start_tgt = geo
            .z_tgt
            .add(&tgt_art.noise.z_t.permute_rows(&geo.perm_tgt)?)?;
        let start_alpha = geo.z_alpha.add(&noise.z_t)?;

        let tex = run_stage_three_stream(
            &tex_alpha,
            cfg,
            cfg.af_tex_window,
            [&start_src, &start_tgt, &start_alpha],
            [&conds_t[0], &conds_t[1], &conds_t[2]],
            alpha,
            "texture",
        )?;
        counters.add(&tex.counters);
        (geo.z_alpha, tex.z_alpha)
    } else {
        let steps = models.geom.cfg.steps;
        let mut lfe_count = 0usize;
        let mut hook = LfeHook {
            enabled: cfg.lfe_enabled,
            window: cfg.lfe_window,
            omega0: cfg.lfe_omega0,
            scale: cfg.lfe_scale,
            count: &mut lfe_count,
        };
        let points = geom_alpha
            .sample(&noise.z_g, &conds_g[2], steps, None, &mut hook)
            .map_err(stage_err("geometry", Some(alpha)))?;
        let start = points.add(&noise.z_t)?;
        let mut hook_t = LfeHook {
            enabled: cfg.lfe_enabled,
            window: cfg.lfe_window,
            omega0: cfg.lfe_omega0,
            scale: cfg.lfe_scale,
            count: &mut lfe_count,
        };
        let colors = tex_alpha
            .sample(&start, &conds_t[2], models.tex.cfg.steps, None, &mut hook_t)
            .map_err(stage_err("texture", Some(alpha)))?;
        counters.lfe += lfe_count;
        (points, colors)
    };

    Ok((MorphFrame { alpha, points, colors }, counters))
}

/// The full morph given precomputed per-shape artifacts. Frames for distinct
/// alphas are generated in parallel and collected in schedule order.
#[allow(clippy::too_many_arguments)]
pub fn morph_with_artifacts(
    src: &ShapeSample,
    tgt: &ShapeSample,
    src_art: &ShapeArtifacts,
    tgt_art: &ShapeArtifacts,
    cfg: &MorphConfig,
    models: &MorphModels,
    seed: u64,
) -> Result<MorphSequence, MorphError> {
    cfg.validate(models.geom.cfg.steps)?;
    let schedule = alpha_schedule(
        cfg.n_frames,
        cfg.beta_a,
        cfg.beta_b,
        cfg.include_endpoints,
        fnv1a64(&[seed.to_le_bytes(), *b"schedule"].concat()),
    )?;

    let results: Vec<Result<(MorphFrame, MechanismCounters), MorphError>> = schedule
        .alphas
        .par_iter()
        .map(|&alpha| generate_frame(models, cfg, src, tgt, src_art, tgt_art, alpha))
        .collect();

    let mut frames = Vec::with_capacity(results.len());
    let mut counters = MechanismCounters::default();
    for r in results {
        let (frame, c) = r?;
        counters.add(&c);
        frames.push(frame);
    }

    Ok(MorphSequence {
        frames,
        schedule,
        counters,
        provenance: Provenance {
            seed,
            config_hash: cfg.config_hash(),
            src_finetune_seeds: src_art.finetune_seeds,
            tgt_finetune_seeds: tgt_art.finetune_seeds,
        },
    })
}

/// Fine-tune, invert, schedule, and regenerate: the whole morph.
pub fn morph(
    src: &ShapeSample,
    tgt: &ShapeSample,
    cfg: &MorphConfig,
    models: &MorphModels,
    seed: u64,
) -> Result<MorphSequence, MorphError> {
    cfg.validate(models.geom.cfg.steps)?;
    let src_art = prepare_shape(models, src, &cfg.lora, seed)?;
    let tgt_art = prepare_shape(models, tgt, &cfg.lora, seed)?;
    morph_with_artifacts(src, tgt, &src_art, &tgt_art, cfg, models, seed)
}
