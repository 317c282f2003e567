//! `morphkit ablate`: the mechanism table (basic / +AF / +AF+TR / full) and
//! the enhancement-scale sweep on one benchmark pair.

use morphkit::metrics::{evaluate_sequence, MetricReport};
use morphkit::morphing::{fnv1a64, morph_with_artifacts, prepare_shape, MorphModels};

use crate::config::{bad_input, internal, key, CliError, KeySpec, RunConfig};

pub fn keys() -> Vec<KeySpec> {
    let mut keys = vec![
        key("geom", None),
        key("tex", None),
        key("pairs", None),
        key("out_dir", None),
        key("seed", Some("7")),
        key("pair_index", Some("0")),
        key("scales", Some("1 2 5 10")),
    ];
    keys.extend(super::MORPH_KEYS.iter().map(|k| KeySpec { key: k.key, default: k.default }));
    keys.iter_mut().find(|k| k.key == "frames").unwrap().default = Some("4");
    keys
}

pub fn run(rc: &RunConfig) -> Result<(), CliError> {
    let geom = super::load_model(&rc.get_path("geom"))?;
    let tex = super::load_model(&rc.get_path("tex"))?;
    let out_dir = rc.get_path("out_dir");
    std::fs::create_dir_all(&out_dir).map_err(internal)?;
    let pairs = super::parse_pairs_file(&rc.get_path("pairs"), geom.cfg.m)?;
    let pair_index = rc.get_usize("pair_index")?;
    let (src, tgt) = pairs
        .get(pair_index)
        .ok_or_else(|| bad_input(format!("pair_index {pair_index} out of range")))?;
    let scales: Vec<f64> = rc
        .get("scales")
        .split_whitespace()
        .map(|s| s.parse().map_err(|e| bad_input(format!("scales: {e}"))))
        .collect::<Result<_, _>>()?;

    let base_cfg = super::morph_config_from(rc)?;
    base_cfg.validate(geom.cfg.steps).map_err(bad_input)?;
    let seed = rc.get_u64("seed")?;
    let models = MorphModels { geom: &geom, tex: &tex };
    let started = std::time::Instant::now();
    let src_art = prepare_shape(&models, src, &base_cfg.lora, seed).map_err(internal)?;
    let tgt_art = prepare_shape(&models, tgt, &base_cfg.lora, seed).map_err(internal)?;
    let pair_seed = fnv1a64(&[seed.to_le_bytes(), (pair_index as u64).to_le_bytes()].concat());

    let run_cfg = |cfg: &morphkit::morphing::MorphConfig| -> Result<MetricReport, CliError> {
        let seq = morph_with_artifacts(src, tgt, &src_art, &tgt_art, cfg, &models, pair_seed)
            .map_err(internal)?;
        evaluate_sequence(&seq, src, tgt, None).map_err(internal)
    };

    // Mechanism rows.
    let mut mech_csv =
        String::from("setting,ppl,pdv,endpoint_src_chamfer,endpoint_tgt_chamfer\n");
    let mut no_lfe: Option<MetricReport> = None;
    for setting in super::SETTINGS {
        let cfg = super::setting_config(&base_cfg, setting);
        let r = run_cfg(&cfg)?;
        println!("mechanisms {setting}: ppl {:.4} pdv {:.6}", r.ppl, r.pdv);
        mech_csv.push_str(&format!(
            "{setting},{},{},{},{}\n",
            r.ppl, r.pdv, r.endpoint_src_chamfer, r.endpoint_tgt_chamfer
        ));
        if setting == "af_tr" {
            no_lfe = Some(r);
        }
    }
    std::fs::write(out_dir.join("ablate_mechanisms.csv"), &mech_csv).map_err(internal)?;

    // Scale sweep; the af_tr row doubles as the no-enhancement reference.
    let no_lfe = no_lfe.expect("af_tr always runs");
    let mut scale_csv = String::from("setting,scale,ppl,pdv\n");
    scale_csv.push_str(&format!("no_lfe,,{},{}\n", no_lfe.ppl, no_lfe.pdv));
    let mut scale1: Option<MetricReport> = None;
    for &s in &scales {
        let cfg = morphkit::morphing::MorphConfig {
            lfe_scale: s,
            ..super::setting_config(&base_cfg, "full")
        };
        let r = run_cfg(&cfg)?;
        println!("scale {s}: ppl {:.4} pdv {:.6}", r.ppl, r.pdv);
        scale_csv.push_str(&format!("scale,{s},{},{}\n", r.ppl, r.pdv));
        if s == 1.0 {
            scale1 = Some(r);
        }
    }
    std::fs::write(out_dir.join("ablate_scale.csv"), &scale_csv).map_err(internal)?;

    let mut report = String::from("# ablation summary\n");
    report.push_str(&format!("pair={pair_index}\nseed={seed}\n"));
    if let Some(s1) = &scale1 {
        let diff = (s1.ppl - no_lfe.ppl).abs().max((s1.pdv - no_lfe.pdv).abs());
        report.push_str(&format!("scale1_vs_no_lfe_maxdiff={diff}\n"));
    }
    std::fs::write(out_dir.join("ablate_report.cfg"), report).map_err(internal)?;
    rc.write_resolved(&out_dir)?;
    println!("ablate done in {:.0}s", started.elapsed().as_secs_f64());
    Ok(())
}
