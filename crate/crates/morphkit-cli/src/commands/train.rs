//! `morphkit train`: train both cascade stages from a corpus manifest.

use std::path::Path;

use morphkit::denoiser::{checkpoint, train, DenoiserConfig, StageKind, TrainHyper};
use morphkit::shapes::{parse_manifest, Corpus};

use crate::config::{bad_input, internal, key, CliError, KeySpec, RunConfig};

pub const KEYS: &[KeySpec] = &[
    key("manifest", None),
    key("out_dir", None),
    key("seed", Some("7")),
    key("batches", Some("2500")),
    key("lr", Some("0.0003")),
    key("batch_size", Some("8")),
    key("m", Some("128")),
    key("d_model", Some("64")),
    key("n_blocks", Some("4")),
    key("n_heads", Some("4")),
    key("d_cond", Some("16")),
    key("steps", Some("250")),
];

pub fn run(rc: &RunConfig) -> Result<(), CliError> {
    let manifest_path = rc.get_path("manifest");
    if !manifest_path.exists() {
        return Err(bad_input(format!("corpus manifest not found: {}", manifest_path.display())));
    }
    let out_dir = rc.get_path("out_dir");
    std::fs::create_dir_all(&out_dir).map_err(internal)?;

    let cfg = DenoiserConfig {
        m: rc.get_usize("m")?,
        d_model: rc.get_usize("d_model")?,
        n_blocks: rc.get_usize("n_blocks")?,
        n_heads: rc.get_usize("n_heads")?,
        d_cond: rc.get_usize("d_cond")?,
        steps: rc.get_usize("steps")?,
        channels_in: 3,
        channels_out: 3,
    };
    cfg.validate().map_err(bad_input)?;
    let hyper = TrainHyper {
        lr: rc.get_f64("lr")?,
        batches: rc.get_usize("batches")?,
        batch_size: rc.get_usize("batch_size")?,
        seed: rc.get_u64("seed")?,
    };

    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| bad_input(format!("cannot read {}: {e}", manifest_path.display())))?;
    let records = parse_manifest(&text).map_err(bad_input)?;
    let corpus = Corpus::from_records(&records, cfg.m).map_err(bad_input)?;
    println!("corpus: {} samples, M = {}", corpus.len(), cfg.m);

    for (kind, ckpt_name, loss_name) in [
        (StageKind::Geometry, "geom.mrph", "loss_geometry.csv"),
        (StageKind::Texture, "tex.mrph", "loss_texture.csv"),
    ] {
        let started = std::time::Instant::now();
        let (model, trace) = train(&cfg, &corpus, kind, &hyper).map_err(internal)?;
        checkpoint::save_model(&out_dir.join(ckpt_name), &model).map_err(internal)?;
        write_loss_csv(&out_dir.join(loss_name), &trace)?;
        let first: f64 = trace.iter().take(20).sum::<f64>() / trace.len().min(20) as f64;
        let last: f64 =
            trace.iter().rev().take(20).sum::<f64>() / trace.len().min(20) as f64;
        println!(
            "{}: {} batches in {:.0}s, loss {:.4} -> {:.4}, wrote {}",
            kind.name(),
            trace.len(),
            started.elapsed().as_secs_f64(),
            first,
            last,
            ckpt_name
        );
    }
    rc.write_resolved(&out_dir)?;
    Ok(())
}

fn write_loss_csv(path: &Path, trace: &[f64]) -> Result<(), CliError> {
    let mut out = String::from("step,loss\n");
    for (i, l) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    std::fs::write(path, out).map_err(internal)
}
