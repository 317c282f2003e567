//! Shared command plumbing: checkpoint loading, shape-triple parsing, the
//! mechanism-setting grid.

pub mod ablate;
pub mod analyze;
pub mod eval;
pub mod morph;
pub mod train;

use std::path::Path;

use morphkit::denoiser::{checkpoint, Model};
use morphkit::morphing::{MorphConfig, MorphWindow};
use morphkit::shapes::{generate, Family, ShapeSample};

use crate::config::{bad_input, CliError, RunConfig};

pub fn load_model(path: &Path) -> Result<Model, CliError> {
    checkpoint::load_model(path)
        .map_err(|e| bad_input(format!("checkpoint {}: {e}", path.display())))
}

/// Parse "family p0 p1 [p2] seed".
pub fn parse_shape_spec(spec: &str, m: usize) -> Result<ShapeSample, CliError> {
    let fields: Vec<&str> = spec.split_whitespace().collect();
    parse_shape_fields(&fields, &mut 0, m)
}

/// Parse one shape from a field cursor; used by pair files too.
pub fn parse_shape_fields(
    fields: &[&str],
    cursor: &mut usize,
    m: usize,
) -> Result<ShapeSample, CliError> {
    let need = |c: usize| {
        if c >= fields.len() {
            Err(CliError::BadInput("shape spec too short; want 'family params... seed'".into()))
        } else {
            Ok(fields[c])
        }
    };
    let family = Family::from_name(need(*cursor)?).map_err(bad_input)?;
    *cursor += 1;
    let mut params = Vec::with_capacity(family.param_count());
    for _ in 0..family.param_count() {
        let p: f64 = need(*cursor)?
            .parse()
            .map_err(|e| bad_input(format!("shape param: {e}")))?;
        params.push(p);
        *cursor += 1;
    }
    let seed: u64 = need(*cursor)?
        .parse()
        .map_err(|e| bad_input(format!("shape seed: {e}")))?;
    *cursor += 1;
    generate(family, &params, m, seed).map_err(bad_input)
}

/// Parse a pair file: each non-comment line holds two shape specs.
pub fn parse_pairs_file(path: &Path, m: usize) -> Result<Vec<(ShapeSample, ShapeSample)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad_input(format!("cannot read pair list {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let mut cursor = 0;
        let a = parse_shape_fields(&fields, &mut cursor, m)
            .map_err(|e| bad_input(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        let b = parse_shape_fields(&fields, &mut cursor, m)
            .map_err(|e| bad_input(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        if cursor != fields.len() {
            return Err(bad_input(format!("{}:{}: trailing fields", path.display(), idx + 1)));
        }
        pairs.push((a, b));
    }
    Ok(pairs)
}

/// Morph config from resolved keys (shared by morph/eval/ablate).
pub fn morph_config_from(rc: &RunConfig) -> Result<MorphConfig, CliError> {
    Ok(MorphConfig {
        n_frames: rc.get_usize("frames")?,
        beta_a: rc.get_f64("beta_a")?,
        beta_b: rc.get_f64("beta_b")?,
        include_endpoints: rc.get_bool("include_endpoints")?,
        af_enabled: rc.get_bool("af")?,
        af_geom_window: MorphWindow::new(rc.get_usize("af_geom_start")?, rc.get_usize("af_geom_end")?),
        af_tex_window: MorphWindow::new(rc.get_usize("af_tex_start")?, rc.get_usize("af_tex_end")?),
        tr_enabled: rc.get_bool("tr")?,
        tr_window: MorphWindow::new(rc.get_usize("tr_start")?, rc.get_usize("tr_end")?),
        lfe_enabled: rc.get_bool("lfe")?,
        lfe_window: MorphWindow::new(rc.get_usize("lfe_start")?, rc.get_usize("lfe_end")?),
        lfe_scale: rc.get_f64("scale")?,
        lfe_omega0: rc.get_f64("omega0")?,
        lora: morphkit::denoiser::FinetuneHyper {
            steps: rc.get_usize("lora_steps")?,
            rank: rc.get_usize("lora_rank")?,
            alpha: rc.get_f64("lora_alpha")?,
            lr: rc.get_f64("lora_lr")?,
            seed: 0, // overwritten per shape by prepare_shape
        },
    })
}

/// Shared morph keys with the published defaults.
pub const MORPH_KEYS: &[crate::config::KeySpec] = &[
    crate::config::key("frames", Some("10")),
    crate::config::key("beta_a", Some("2")),
    crate::config::key("beta_b", Some("2")),
    crate::config::key("include_endpoints", Some("true")),
    crate::config::key("af", Some("true")),
    crate::config::key("af_geom_start", Some("1")),
    crate::config::key("af_geom_end", Some("150")),
    crate::config::key("af_tex_start", Some("1")),
    crate::config::key("af_tex_end", Some("5")),
    crate::config::key("tr", Some("true")),
    crate::config::key("tr_start", Some("80")),
    crate::config::key("tr_end", Some("200")),
    crate::config::key("lfe", Some("true")),
    crate::config::key("lfe_start", Some("200")),
    crate::config::key("lfe_end", Some("230")),
    crate::config::key("scale", Some("5")),
    crate::config::key("omega0", Some("0.3141592653589793")),
    crate::config::key("lora_steps", Some("500")),
    crate::config::key("lora_rank", Some("16")),
    crate::config::key("lora_alpha", Some("20")),
    crate::config::key("lora_lr", Some("0.002")),
];

/// The four mechanism settings of the benchmark grid.
pub const SETTINGS: [&str; 4] = ["basic", "af", "af_tr", "full"];

/// Apply a named mechanism setting on top of a base config.
pub fn setting_config(base: &MorphConfig, setting: &str) -> MorphConfig {
    let mut cfg = base.clone();
    match setting {
        "basic" => {
            cfg.af_enabled = false;
            cfg.tr_enabled = false;
            cfg.lfe_enabled = false;
        }
        "af" => {
            cfg.af_enabled = true;
            cfg.tr_enabled = false;
            cfg.lfe_enabled = false;
        }
        "af_tr" => {
            cfg.af_enabled = true;
            cfg.tr_enabled = true;
            cfg.lfe_enabled = false;
        }
        _ => {
            cfg.af_enabled = true;
            cfg.tr_enabled = true;
            cfg.lfe_enabled = true;
        }
    }
    cfg
}
