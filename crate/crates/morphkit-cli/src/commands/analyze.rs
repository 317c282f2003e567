//! `morphkit analyze`: per-step diagnostic traces of the trained cascade:
//! token distances between an aligned (scaled) generation pair, point
//! distances of nearest-token pairings across seeds, and the latent's
//! frequency-band magnitudes.

use morphkit::metrics::{cascade_token_distance_trace, frequency_trace, TraceSpec};
use morphkit::shapes::Family;

use crate::config::{bad_input, internal, key, CliError, KeySpec, RunConfig};

pub const KEYS: &[KeySpec] = &[
    key("geom", None),
    key("tex", None),
    key("out_dir", None),
    key("seed", Some("7")),
    key("family", Some("sphere")),
    key("params", Some("0.7 0.5")),
    key("scale", Some("1.2")),
    key("omega0", Some("0.3141592653589793")),
];

/// Geometric scaling of a family's parameter vector: size-like parameters
/// scale, purely stylistic ones stay.
fn scaled_params(family: Family, params: &[f64], s: f64) -> Vec<f64> {
    let mut out = params.to_vec();
    match family {
        Family::Sphere => out[0] *= s,
        Family::Torus | Family::Cone | Family::Box => {
            for p in &mut out {
                *p *= s;
            }
        }
        Family::StarPrism => {
            out[0] *= s;
            out[2] *= s;
        }
        Family::TwoLobe => {
            out[0] *= s;
            out[1] *= s;
        }
    }
    out
}

pub fn run(rc: &RunConfig) -> Result<(), CliError> {
    let geom = super::load_model(&rc.get_path("geom"))?;
    let tex = super::load_model(&rc.get_path("tex"))?;
    let out_dir = rc.get_path("out_dir");
    std::fs::create_dir_all(&out_dir).map_err(internal)?;
    let seed = rc.get_u64("seed")?;
    let omega0 = rc.get_f64("omega0")?;
    let family = Family::from_name(rc.get("family")).map_err(bad_input)?;
    let params: Vec<f64> = rc
        .get("params")
        .split_whitespace()
        .map(|p| p.parse().map_err(|e| bad_input(format!("params: {e}"))))
        .collect::<Result<_, _>>()?;
    let scale = rc.get_f64("scale")?;
    let params_b = scaled_params(family, &params, scale);

    let aligned_spec = TraceSpec {
        family,
        params_a: params.clone(),
        params_b: params_b.clone(),
        seed_a: seed,
        seed_b: seed,
    };
    morphkit::metrics::validate_trace_spec(&aligned_spec)
        .map_err(|e| bad_input(format!("trace params (after scaling): {e}")))?;
    let unaligned_spec = TraceSpec {
        family,
        params_a: params.clone(),
        params_b: params,
        seed_a: seed,
        seed_b: seed.wrapping_add(1),
    };

    let started = std::time::Instant::now();
    // Scaled copy, identical noise: how far tokens at the same position
    // drift apart over the denoising trajectory.
    let aligned = cascade_token_distance_trace(&geom, &tex, true, &aligned_spec).map_err(internal)?;
    std::fs::write(out_dir.join("analyze_token_distance_aligned.csv"), aligned.aligned_csv())
        .map_err(internal)?;
    // Fresh noise: 3-D distance between final points paired by nearest
    // hidden token, per step.
    let paired =
        cascade_token_distance_trace(&geom, &tex, false, &unaligned_spec).map_err(internal)?;
    std::fs::write(out_dir.join("analyze_token_distance_paired.csv"), paired.paired_csv())
        .map_err(internal)?;
    // Latent band magnitudes along one sampling run.
    let freq = frequency_trace(&geom, family, &unaligned_spec.params_a, seed, omega0)
        .map_err(internal)?;
    std::fs::write(out_dir.join("analyze_frequency.csv"), freq.to_csv()).map_err(internal)?;

    // Expected-direction fields: reported, not asserted.
    let g = &aligned.geometry.token_distance;
    let (first, last) = (g[0], *g.last().unwrap());
    let min_pos = |v: &[f64]| {
        v.iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
            .map(|(i, _)| i + 1)
            .unwrap_or(0)
    };
    let mut report = String::from("# trace summary\n");
    report.push_str(&format!("steps={}\n", geom.cfg.steps));
    report.push_str(&format!("seed={seed}\n"));
    report.push_str(&format!("aligned_token_distance_first={first}\n"));
    report.push_str(&format!("aligned_token_distance_last={last}\n"));
    report.push_str(&format!("aligned_token_distance_increases={}\n", last > first));
    report.push_str(&format!(
        "paired_point_distance_argmin_geometry={}\n",
        min_pos(&paired.geometry.paired_point_distance)
    ));
    report.push_str(&format!(
        "paired_point_distance_argmin_texture={}\n",
        min_pos(&paired.texture.paired_point_distance)
    ));
    report.push_str(&format!(
        "low_band_smoother_fraction={}\n",
        freq.low_band_smoother_fraction()
    ));
    report.push_str(&format!(
        "low_band_smoother_majority={}\n",
        freq.low_band_smoother_fraction() >= 0.6
    ));
    std::fs::write(out_dir.join("analyze_report.cfg"), report).map_err(internal)?;
    rc.write_resolved(&out_dir)?;
    println!("analyze done in {:.0}s", started.elapsed().as_secs_f64());
    Ok(())
}
