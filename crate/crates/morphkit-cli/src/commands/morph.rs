//! `morphkit morph`: regenerate an interpolation sequence between two shapes.

use morphkit::metrics::evaluate_sequence;
use morphkit::morphing::{morph, MorphModels};
use morphkit::ply::write_ply;
use morphkit::shapes::{parse_manifest, Corpus};

use crate::config::{bad_input, internal, key, CliError, KeySpec, RunConfig};

pub fn keys() -> Vec<KeySpec> {
    let mut keys = vec![
        key("geom", None),
        key("tex", None),
        key("out_dir", None),
        key("src", None),
        key("tgt", None),
        key("seed", Some("7")),
        // Optional corpus for per-frame plausibility in the report.
        key("manifest", Some("")),
    ];
    keys.extend(super::MORPH_KEYS.iter().map(|k| KeySpec { key: k.key, default: k.default }));
    keys
}

pub fn run(rc: &RunConfig) -> Result<(), CliError> {
    let geom = super::load_model(&rc.get_path("geom"))?;
    let tex = super::load_model(&rc.get_path("tex"))?;
    if geom.cfg != tex.cfg {
        return Err(bad_input("geometry/texture checkpoints disagree on config"));
    }
    let out_dir = rc.get_path("out_dir");
    std::fs::create_dir_all(&out_dir).map_err(internal)?;

    let src = super::parse_shape_spec(rc.get("src"), geom.cfg.m)?;
    let tgt = super::parse_shape_spec(rc.get("tgt"), geom.cfg.m)?;
    let cfg = super::morph_config_from(rc)?;
    cfg.validate(geom.cfg.steps).map_err(bad_input)?;
    let seed = rc.get_u64("seed")?;

    let corpus = match rc.get("manifest") {
        "" => None,
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| bad_input(format!("cannot read {path}: {e}")))?;
            let records = parse_manifest(&text).map_err(bad_input)?;
            Some(Corpus::from_records(&records, geom.cfg.m).map_err(bad_input)?)
        }
    };

    let models = MorphModels { geom: &geom, tex: &tex };
    let started = std::time::Instant::now();
    let seq = morph(&src, &tgt, &cfg, &models, seed).map_err(internal)?;

    for (i, frame) in seq.frames.iter().enumerate() {
        let name = format!("frame_{i:02}_{:.6}.ply", frame.alpha);
        std::fs::write(out_dir.join(name), write_ply(&frame.points, &frame.colors))
            .map_err(internal)?;
    }
    let report = evaluate_sequence(&seq, &src, &tgt, corpus.as_ref()).map_err(internal)?;
    std::fs::write(out_dir.join("report.cfg"), report.to_key_value()).map_err(internal)?;
    rc.write_resolved(&out_dir)?;
    println!(
        "{} frames in {:.0}s: ppl {:.4}, pdv {:.6}, endpoints {:.4}/{:.4}, counters f={} r={} l={}",
        seq.frames.len(),
        started.elapsed().as_secs_f64(),
        report.ppl,
        report.pdv,
        report.endpoint_src_chamfer,
        report.endpoint_tgt_chamfer,
        seq.counters.fusion,
        seq.counters.reorder,
        seq.counters.lfe,
    );
    Ok(())
}
