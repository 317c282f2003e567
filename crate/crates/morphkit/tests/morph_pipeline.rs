//! End-to-end morph runs on tiny models: mechanism counters, window gating,
//! determinism, and the mechanism-off identity.

use morphkit::denoiser::{train, DenoiserConfig, FinetuneHyper, StageKind, TrainHyper};
use morphkit::morphing::{
    interpolate_noise, morph, MorphConfig, MorphModels, MorphWindow,
};
use morphkit::denoiser::{Model, NoisePair};
use morphkit::numerics::Rng;
use morphkit::shapes::{Corpus, Family, ShapeRecord};

fn tiny_cfg() -> DenoiserConfig {
    DenoiserConfig {
        m: 16,
        d_model: 16,
        n_blocks: 2,
        n_heads: 2,
        d_cond: 4,
        steps: 16,
        channels_in: 3,
        channels_out: 3,
    }
}

fn tiny_models() -> (Model, Model, Corpus) {
    let cfg = tiny_cfg();
    let records = vec![
        ShapeRecord { family: Family::Sphere, params: vec![0.7, 0.3], seed: 11 },
        ShapeRecord { family: Family::Box, params: vec![0.5, 0.5, 0.5], seed: 22 },
    ];
    let corpus = Corpus::from_records(&records, cfg.m).unwrap();
    let hyper = TrainHyper { lr: 2e-3, batches: 120, batch_size: 4, seed: 5 };
    let (geom, _) = train(&cfg, &corpus, StageKind::Geometry, &hyper).unwrap();
    let (tex, _) = train(&cfg, &corpus, StageKind::Texture, &hyper).unwrap();
    (geom, tex, corpus)
}

fn tiny_morph_cfg() -> MorphConfig {
    MorphConfig {
        n_frames: 2,
        af_geom_window: MorphWindow::new(1, 8),
        af_tex_window: MorphWindow::new(1, 2),
        tr_window: MorphWindow::new(4, 12),
        lfe_window: MorphWindow::new(12, 14),
        lora: FinetuneHyper { steps: 20, rank: 2, alpha: 20.0, lr: 1e-3, seed: 1 },
        ..MorphConfig::default()
    }
}

#[test]
fn interpolate_noise_endpoints_and_norm_bounds() {
    let mut rng = Rng::new(3);
    let src = NoisePair { z_g: rng.gaussian(&[16, 3]), z_t: rng.gaussian(&[16, 3]) };
    let tgt = NoisePair { z_g: rng.gaussian(&[16, 3]), z_t: rng.gaussian(&[16, 3]) };
    let at0 = interpolate_noise(&src, &tgt, 0.0).unwrap();
    assert_eq!(at0.z_g, src.z_g);
    assert_eq!(at0.z_t, src.z_t);
    let at1 = interpolate_noise(&src, &tgt, 1.0).unwrap();
    assert_eq!(at1.z_g, tgt.z_g);
    assert_eq!(at1.z_t, tgt.z_t);

    let (lo, hi) = {
        let a = src.z_g.norm();
        let b = tgt.z_g.norm();
        (a.min(b), a.max(b))
    };
    for step in 0..=10 {
        let alpha = step as f64 / 10.0;
        let n = interpolate_noise(&src, &tgt, alpha).unwrap().z_g.norm();
        assert!(n >= lo - 1e-9 && n <= hi + 1e-9, "alpha {alpha}: norm {n} outside [{lo}, {hi}]");
    }
}

#[test]
fn all_mechanisms_off_means_zero_counters() {
    let (geom, tex, corpus) = tiny_models();
    let models = MorphModels { geom: &geom, tex: &tex };
    let cfg = MorphConfig {
        af_enabled: false,
        tr_enabled: false,
        lfe_enabled: false,
        ..tiny_morph_cfg()
    };
    let seq = morph(&corpus.samples[0], &corpus.samples[1], &cfg, &models, 77).unwrap();
    assert_eq!(seq.counters.fusion, 0);
    assert_eq!(seq.counters.reorder, 0);
    assert_eq!(seq.counters.lfe, 0);
    assert_eq!(seq.frames.len(), cfg.n_frames + 2);
    assert!(seq.frames.windows(2).all(|w| w[0].alpha <= w[1].alpha));
}

#[test]
fn counters_match_window_sizes() {
    let (geom, tex, corpus) = tiny_models();
    let models = MorphModels { geom: &geom, tex: &tex };
    let cfg = tiny_morph_cfg();
    let seq = morph(&corpus.samples[0], &corpus.samples[1], &cfg, &models, 88).unwrap();
    let frames = seq.frames.len();
    // Fusion: per frame, both stages, both attention kinds, every block in
    // the stage's window.
    let geom_af_steps = 8;
    let tex_af_steps = 2;
    let expected_fusion = frames * (geom_af_steps + tex_af_steps) * 2 * 2;
    assert_eq!(seq.counters.fusion, expected_fusion);
    // Reordering: window steps x interior boundaries x both stages.
    let tr_steps = 12 - 4 + 1;
    let expected_reorder = frames * tr_steps * (2 - 1) * 2;
    assert_eq!(seq.counters.reorder, expected_reorder);
    // Enhancement: window steps x both stages.
    let lfe_steps = 14 - 12 + 1;
    assert_eq!(seq.counters.lfe, frames * lfe_steps * 2);
}

#[test]
fn morph_is_deterministic_per_seed() {
    let (geom, tex, corpus) = tiny_models();
    let models = MorphModels { geom: &geom, tex: &tex };
    let cfg = tiny_morph_cfg();
    let a = morph(&corpus.samples[0], &corpus.samples[1], &cfg, &models, 4).unwrap();
    let b = morph(&corpus.samples[0], &corpus.samples[1], &cfg, &models, 4).unwrap();
    assert_eq!(a.frames.len(), b.frames.len());
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        assert_eq!(fa.points, fb.points);
        assert_eq!(fa.colors, fb.colors);
    }
    let c = morph(&corpus.samples[0], &corpus.samples[1], &cfg, &models, 5).unwrap();
    assert!(a.frames.iter().zip(&c.frames).any(|(fa, fc)| fa.points != fc.points));
}

#[test]
fn lfe_scale_one_matches_lfe_disabled_exactly() {
    let (geom, tex, corpus) = tiny_models();
    let models = MorphModels { geom: &geom, tex: &tex };
    let with_scale_one = MorphConfig { lfe_scale: 1.0, ..tiny_morph_cfg() };
    let without = MorphConfig { lfe_enabled: false, ..tiny_morph_cfg() };
    let a = morph(&corpus.samples[0], &corpus.samples[1], &with_scale_one, &models, 9).unwrap();
    let b = morph(&corpus.samples[0], &corpus.samples[1], &without, &models, 9).unwrap();
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        assert_eq!(fa.points, fb.points);
        assert_eq!(fa.colors, fb.colors);
    }
    assert_eq!(a.counters.lfe, 0);
}

#[test]
fn invalid_windows_are_rejected() {
    let (geom, tex, corpus) = tiny_models();
    let models = MorphModels { geom: &geom, tex: &tex };
    let cfg = MorphConfig {
        lfe_window: MorphWindow::new(1, 999),
        ..tiny_morph_cfg()
    };
    assert!(morph(&corpus.samples[0], &corpus.samples[1], &cfg, &models, 1).is_err());
}
