//! Placement experiment for low-frequency enhancement; ignored by default.

use morphkit::denoiser::{checkpoint, lora_finetune, FinetuneHyper, Model, NoHooks, StageKind};
use morphkit::morphing::low_freq_enhance;
use morphkit::numerics::Tensor;
use morphkit::shapes::{chamfer, generate, Family};
use std::path::Path;

fn reconstruct_with_lfe(
    model: &Model,
    z0: &Tensor,
    cond: &morphkit::shapes::ConditionEmbedding,
    adapter: &morphkit::denoiser::LoraAdapter,
    mode: &str,
    scale: f64,
) -> Tensor {
    let steps = model.cfg.steps;
    let h = 1.0 / steps as f64;
    let omega0 = 0.1 * std::f64::consts::PI;
    let window = 200..=230;
    let mut z = z0.clone();
    for k in 1..=steps {
        let t = (k - 1) as f64 / steps as f64;
        let active = window.contains(&k) && scale != 1.0;
        let z_in = if active && mode == "latent" {
            low_freq_enhance(&z, omega0, scale).unwrap()
        } else {
            z.clone()
        };
        let ctx = model.context(cond, t).unwrap();
        let mut tokens = model.embed_input(&z_in).unwrap();
        for block in 0..model.cfg.n_blocks {
            tokens = model.block_forward(block, &tokens, &ctx, Some(adapter), None).unwrap();
            let apply = match mode {
                "hidden_each" => active,
                "hidden_last" => active && block == model.cfg.n_blocks - 1,
                _ => false,
            };
            if apply {
                tokens = low_freq_enhance(&tokens, omega0, scale).unwrap();
            }
        }
        let mut v = model.output_head(&tokens).unwrap();
        if active && mode == "velocity" {
            v = low_freq_enhance(&v, omega0, scale).unwrap();
        }
        if mode == "latent_once" && k == 200 && scale != 1.0 {
            z = low_freq_enhance(&z, omega0, scale).unwrap();
        }
        z = z.add(&v.scale(h)).unwrap();
    }
    z
}

#[test]
#[ignore]
fn lfe_placement_probe() {
    let dir = Path::new("/root/scratch/run1");
    let geom = checkpoint::load_model(&dir.join("geom.mrph")).unwrap();
    let src = generate(Family::Torus, &[0.55, 0.22], geom.cfg.m, 9002).unwrap();
    let cond = geom.params.cond.condition_of(&src).unwrap();
    let hyper = FinetuneHyper { seed: 0xBEEF, ..FinetuneHyper::default() };
    let adapter = lora_finetune(&geom, &src, StageKind::Geometry, &hyper).unwrap();
    let z = geom.invert(&src.points, &cond, geom.cfg.steps, Some(&adapter)).unwrap();
    let base = geom
        .sample(&z, &cond, geom.cfg.steps, Some(&adapter), &mut NoHooks)
        .unwrap();
    println!("no-lfe recon chamfer = {:.5}", chamfer(&base, &src.points).unwrap());
    for mode in ["velocity", "latent_once"] {
        for scale in [2.0, 5.0] {
            let out = reconstruct_with_lfe(&geom, &z, &cond, &adapter, mode, scale);
            println!(
                "mode {mode:11} scale {scale}: endpoint chamfer = {:.5}",
                chamfer(&out, &src.points).unwrap()
            );
        }
    }
}
