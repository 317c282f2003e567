//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime. Criteria 4-8 share one full-scale artifact build (training,
//! benchmark suite, ablation, analysis) through the real binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use morphkit::calibration::TAU_REC;
use morphkit::denoiser::{
    checkpoint, lora_finetune, AttentionTap, AttnKind, FinetuneHyper, Model, NoHooks, StageKind,
};
use morphkit::metrics::evaluate_sequence;
use morphkit::morphing::{
    fused_attention, low_freq_enhance, morph_with_artifacts, positional_cost, prepare_shape,
    reorder_tokens, solve_assignment, MorphConfig, MorphModels, MorphWindow,
};
use morphkit::numerics::{grad_check, irfft, rfft, slerp, Rng, Tensor};
use morphkit::shapes::{chamfer, parse_manifest, Corpus, ShapeSample};

fn pass(criterion: usize, started: Instant, detail: &str) {
    println!(
        "[PASS] criterion {criterion}: {detail} ({:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// Criterion 1: numerics suite.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_numerics() {
    let t0 = Instant::now();

    // Every differentiable op under grad_check, 20 seeds, < 1e-5.
    for seed in 0..20u64 {
        let mut rng = Rng::new(seed ^ 0xACC1);
        let x = rng.gaussian(&[3, 4]);
        let w = rng.gaussian(&[4, 4]);
        let gain = rng.gaussian(&[4]).map(|v| 1.0 + 0.1 * v);
        let bias = rng.gaussian(&[4]).scale(0.1);
        let table = rng.gaussian(&[5, 4]);
        let mask = Tensor::from_fn(&[4, 4], |i| mask_value(i));
        let err = grad_check(
            |tape, vx| {
                let vw = tape.leaf(w.clone());
                let vg = tape.leaf(gain.clone());
                let vb = tape.leaf(bias.clone());
                let vt = tape.leaf(table.clone());
                let vm = tape.leaf(mask.clone());
                let h = tape.matmul(vx, vw)?;
                let hn = tape.matmul_nt(h, vw)?;
                let h = tape.layer_norm(hn, vg, vb, 1e-5)?;
                let h = tape.gelu(h);
                let l = tape.slice_cols(h, 0, 2)?;
                let r = tape.slice_cols(h, 2, 2)?;
                let h = tape.concat_cols(&[l, r])?;
                let ht = tape.transpose(h)?;
                let h = tape.transpose(ht)?;
                let sm = tape.softmax_rows(h)?;
                let sc = tape.scale(sm, 1.3);
                let e2 = tape.embed_row(vt, 1)?;
                let stacked = tape.concat_rows(&[sc, e2])?;
                let row = tape.embed_row(vt, 0)?;
                let shifted = tape.add_row(stacked, row)?;
                let masked = tape.mul(shifted, vm)?;
                let zero = tape.leaf(Tensor::zeros(&[4, 4]));
                tape.mean_sq(masked, zero)
            },
            &x,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-5, "seed {seed}: grad err {err}");
    }

    // FFT: round trip < 1e-9, direct-DFT equivalence < 1e-10.
    let mut rng = Rng::new(0xFF7);
    for &n in &[16usize, 128] {
        let x = rng.gaussian(&[n]);
        let s = rfft(&x).unwrap();
        let back = irfft(&s).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        for k in 0..=n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in x.data().iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            assert!((s.re[k] - re).abs() < 1e-10, "n={n} bin {k}");
            assert!((s.im[k] - im).abs() < 1e-10, "n={n} bin {k}");
        }
    }

    // slerp: exact endpoints, unit-sphere invariant < 1e-9.
    for seed in 0..10u64 {
        let mut rng = Rng::new(seed ^ 0x51EE9);
        let u = rng.gaussian(&[24]);
        let v = rng.gaussian(&[24]);
        assert_eq!(slerp(&u, &v, 0.0).unwrap(), u);
        assert_eq!(slerp(&u, &v, 1.0).unwrap(), v);
        let un = u.scale(1.0 / u.norm());
        let vn = v.scale(1.0 / v.norm());
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let r = slerp(&un, &vn, t).unwrap();
            assert!((r.norm() - 1.0).abs() < 1e-9);
        }
    }

    pass(1, t0, "grad checks, FFT round-trip/DFT, slerp invariants");
}

fn mask_value(i: usize) -> f64 {
    if i % 3 == 0 {
        1.0
    } else {
        0.4
    }
}

// ---------------------------------------------------------------------------
// Criterion 2: assignment oracle.
// ---------------------------------------------------------------------------

fn exhaustive_min(cost: &Tensor) -> f64 {
    fn rec(cost: &Tensor, used: &mut Vec<bool>, row: usize, acc: f64, best: &mut f64) {
        let n = cost.rows();
        if row == n {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                rec(cost, used, row + 1, acc + cost.at2(row, j), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(cost, &mut vec![false; cost.rows()], 0, 0.0, &mut best);
    best
}

#[test]
fn acceptance_2_assignment_oracle() {
    let t0 = Instant::now();
    for seed in 0..100u64 {
        let mut rng = Rng::new(seed ^ 0xA551);
        let cost = rng.gaussian(&[5, 5]).map(|v| v.abs());
        let sol = solve_assignment(&cost).unwrap();
        let best = exhaustive_min(&cost);
        assert!((sol.cost - best).abs() < 1e-9, "5x5 seed {seed}");
    }
    for seed in 0..20u64 {
        let mut rng = Rng::new(seed ^ 0xA771);
        let cost = rng.gaussian(&[7, 7]).map(|v| v.abs());
        let sol = solve_assignment(&cost).unwrap();
        let best = exhaustive_min(&cost);
        assert!((sol.cost - best).abs() < 1e-9, "7x7 seed {seed}");
    }
    // Planted permutations recovered exactly.
    let mut rng = Rng::new(0x91AC);
    for trial in 0..20 {
        let n = 6;
        let mut sigma: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            sigma.swap(i, rng.range(i + 1));
        }
        let cost = Tensor::from_fn(&[n, n], |idx| {
            let (i, j) = (idx / n, idx % n);
            if sigma[i] == j {
                0.0
            } else {
                1.0 + 0.01 * (idx as f64)
            }
        });
        let sol = solve_assignment(&cost).unwrap();
        assert_eq!(sol.sigma, sigma, "trial {trial}");
    }
    pass(2, t0, "exhaustive 5x5/7x7 agreement, planted recovery");
}

// ---------------------------------------------------------------------------
// Criterion 3: mechanism identities.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_3_mechanism_identities() {
    let t0 = Instant::now();

    // Enhancement at scale 1 is the identity within 1e-9.
    let mut rng = Rng::new(0x1FE);
    let tokens = rng.gaussian(&[128, 3]);
    let out = low_freq_enhance(&tokens, 0.1 * std::f64::consts::PI, 1.0).unwrap();
    for (a, b) in out.data().iter().zip(tokens.data()) {
        assert!((a - b).abs() < 1e-9);
    }

    // Reordering recovers planted permutations and never increases cost.
    let src = rng.gaussian(&[32, 8]);
    let planted: Vec<usize> = {
        let mut p: Vec<usize> = (0..32).collect();
        for i in (1..32).rev() {
            p.swap(i, rng.range(i + 1));
        }
        p
    };
    let tgt = src.permute_rows(&planted).unwrap();
    let r = reorder_tokens(&src, &tgt, 0.2).unwrap();
    assert!(positional_cost(&r.src, &r.tgt) < 1e-9, "planted recovery");
    for trial in 0..10 {
        let a = rng.gaussian(&[24, 6]);
        let b = rng.gaussian(&[24, 6]);
        let before = positional_cost(&a, &b);
        let r = reorder_tokens(&a, &b, 0.3).unwrap();
        assert!(
            positional_cost(&r.src, &r.tgt) <= before + 1e-9,
            "trial {trial}: reorder increased cost"
        );
    }

    // Fused attention equals plain attention when the streams coincide.
    let cfg = morphkit::denoiser::DenoiserConfig {
        m: 16,
        d_model: 16,
        n_blocks: 2,
        n_heads: 2,
        d_cond: 4,
        steps: 4,
        channels_in: 3,
        channels_out: 3,
    };
    let model = Model::new(
        cfg.clone(),
        morphkit::denoiser::ModelParams::init(&cfg, &mut Rng::new(3)),
    )
    .unwrap();
    let tokens = rng.gaussian(&[cfg.m, cfg.d_model]);
    let cond = model.params.cond.embed(0, &[0.5, 0.5]).unwrap();
    let ctx = model.context(&cond, 0.25).unwrap();
    let plain = model.block_forward(0, &tokens, &ctx, None, None).unwrap();
    let mut taps: Vec<AttentionTap> = (0..3).map(|_| AttentionTap::new(cfg.n_blocks)).collect();
    for tap in &mut taps {
        model.block_forward(0, &tokens, &ctx, None, Some(tap)).unwrap();
    }
    let (ks, vs) = fused_attention(&taps[0], &taps[1], &taps[2], 0, AttnKind::SelfAttn, 0.4).unwrap();
    let (kc, vc) = fused_attention(&taps[0], &taps[1], &taps[2], 0, AttnKind::CrossAttn, 0.4).unwrap();
    let mut tap = taps.pop().unwrap();
    tap.write(0, AttnKind::SelfAttn, ks, vs);
    tap.write(0, AttnKind::CrossAttn, kc, vc);
    let fused = model.block_forward(0, &tokens, &ctx, None, Some(&mut tap)).unwrap();
    for (a, b) in fused.data().iter().zip(plain.data()) {
        assert!((a - b).abs() < 1e-12, "fused vs plain: {a} vs {b}");
    }

    pass(3, t0, "LFE identity, reorder optimality, fusion degeneracy");
}

// ---------------------------------------------------------------------------
// Shared full-scale artifacts for criteria 4-8.
// ---------------------------------------------------------------------------

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_morphkit")
}

fn benchmarks_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

fn run_bin(args: &[&str]) {
    let out = Command::new(bin()).args(args).output().expect("spawn morphkit");
    assert!(
        out.status.success(),
        "morphkit {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Train and run the whole benchmark pipeline into `root`.
fn build_pipeline(root: &Path) {
    let bench = benchmarks_dir();
    let manifest = bench.join("corpus.manifest");
    let pairs = bench.join("pairs.txt");
    let train = root.join("train");
    run_bin(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        train.to_str().unwrap(),
        "--seed",
        "7",
    ]);
    let geom = train.join("geom.mrph");
    let tex = train.join("tex.mrph");
    run_bin(&[
        "eval",
        "--geom",
        geom.to_str().unwrap(),
        "--tex",
        tex.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        root.join("eval").to_str().unwrap(),
        "--seed",
        "7",
    ]);
    run_bin(&[
        "ablate",
        "--geom",
        geom.to_str().unwrap(),
        "--tex",
        tex.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
        "--out-dir",
        root.join("ablate").to_str().unwrap(),
        "--seed",
        "7",
    ]);
    run_bin(&[
        "analyze",
        "--geom",
        geom.to_str().unwrap(),
        "--tex",
        tex.to_str().unwrap(),
        "--out-dir",
        root.join("analyze").to_str().unwrap(),
        "--seed",
        "7",
    ]);
}

struct Artifacts {
    root: PathBuf,
    geom: Model,
    tex: Model,
    corpus: Corpus,
    pairs: Vec<(ShapeSample, ShapeSample)>,
    eval_report: BTreeMap<String, String>,
    build_seconds: f64,
}

fn parse_kv(path: &Path) -> BTreeMap<String, String> {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#') && l.contains('='))
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn parse_pairs(m: usize) -> Vec<(ShapeSample, ShapeSample)> {
    let text = std::fs::read_to_string(benchmarks_dir().join("pairs.txt")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_one = |cursor: &mut usize| {
                let family = morphkit::shapes::Family::from_name(fields[*cursor]).unwrap();
                *cursor += 1;
                let params: Vec<f64> = (0..family.param_count())
                    .map(|_| {
                        let p = fields[*cursor].parse().unwrap();
                        *cursor += 1;
                        p
                    })
                    .collect();
                let seed: u64 = fields[*cursor].parse().unwrap();
                *cursor += 1;
                morphkit::shapes::generate(family, &params, m, seed).unwrap()
            };
            let mut cursor = 0;
            let a = parse_one(&mut cursor);
            let b = parse_one(&mut cursor);
            (a, b)
        })
        .collect()
}

static ARTIFACTS: OnceLock<Artifacts> = OnceLock::new();

fn artifacts() -> &'static Artifacts {
    ARTIFACTS.get_or_init(|| {
        let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_run1");
        let t0 = Instant::now();
        build_pipeline(&root);
        let geom = checkpoint::load_model(&root.join("train/geom.mrph")).unwrap();
        let tex = checkpoint::load_model(&root.join("train/tex.mrph")).unwrap();
        let manifest =
            std::fs::read_to_string(benchmarks_dir().join("corpus.manifest")).unwrap();
        let corpus = Corpus::from_records(&parse_manifest(&manifest).unwrap(), geom.cfg.m).unwrap();
        let pairs = parse_pairs(geom.cfg.m);
        let eval_report = parse_kv(&root.join("eval/eval_report.cfg"));
        Artifacts {
            root,
            geom,
            tex,
            corpus,
            pairs,
            eval_report,
            build_seconds: t0.elapsed().as_secs_f64(),
        }
    })
}

// ---------------------------------------------------------------------------
// Criterion 4: training and reconstruction quality.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_4_training_reconstruction() {
    let a = artifacts();
    let t0 = Instant::now();

    // tau_rec: measured in the eval run, frozen in the repo.
    let tau: f64 = a.eval_report["tau_rec"].parse().unwrap();
    assert!(tau < 0.08, "tau_rec {tau} fails the 0.08 bound");
    assert!(
        (tau - TAU_REC).abs() < 1e-9,
        "measured tau_rec {tau} drifted from frozen {TAU_REC}"
    );

    // Inversion round trip on held-out corpus shapes (offset stride, away
    // from the calibration set).
    for i in 0..8 {
        let idx = (i * a.corpus.len() / 8 + 7) % a.corpus.len();
        let s = &a.corpus.samples[idx];
        let cond = a.geom.params.cond.condition_of(s).unwrap();
        let z = a.geom.invert(&s.points, &cond, a.geom.cfg.steps, None).unwrap();
        let back = a.geom.sample(&z, &cond, a.geom.cfg.steps, None, &mut NoHooks).unwrap();
        let c = chamfer(&back, &s.points).unwrap();
        assert!(c <= 1.5 * TAU_REC, "round trip {c} > 1.5 tau_rec on corpus[{idx}]");
    }

    // LoRA reconstruction of a fine-tuned datum beats tau_rec and the base.
    let datum = &a.pairs[0].0;
    let hyper = FinetuneHyper { seed: 0xF17E, ..FinetuneHyper::default() };
    let adapter = lora_finetune(&a.geom, datum, StageKind::Geometry, &hyper).unwrap();
    let cond = a.geom.params.cond.condition_of(datum).unwrap();
    let steps = a.geom.cfg.steps;
    let z = a.geom.invert(&datum.points, &cond, steps, Some(&adapter)).unwrap();
    let back = a.geom.sample(&z, &cond, steps, Some(&adapter), &mut NoHooks).unwrap();
    let lora_recon = chamfer(&back, &datum.points).unwrap();
    assert!(lora_recon <= TAU_REC, "LoRA reconstruction {lora_recon} > tau_rec {TAU_REC}");

    let z0 = a.geom.invert(&datum.points, &cond, steps, None).unwrap();
    let base_back = a.geom.sample(&z0, &cond, steps, None, &mut NoHooks).unwrap();
    let base_recon = chamfer(&base_back, &datum.points).unwrap();
    assert!(
        lora_recon <= base_recon + 1e-12,
        "fine-tuned recon {lora_recon} worse than base {base_recon}"
    );

    pass(
        4,
        t0,
        &format!(
            "tau_rec {tau:.4} < 0.08, round trips <= 1.5 tau, LoRA recon {lora_recon:.4} (build {:.0}s)",
            a.build_seconds
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: endpoint fidelity over the 10-pair suite.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_5_endpoint_fidelity() {
    let a = artifacts();
    let t0 = Instant::now();
    let csv = std::fs::read_to_string(a.root.join("eval/eval.csv")).unwrap();
    let mut checked = 0;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] != "full" {
            continue;
        }
        let src: f64 = fields[4].parse().unwrap();
        let tgt: f64 = fields[5].parse().unwrap();
        assert!(src <= 2.0 * TAU_REC, "pair {}: alpha=0 chamfer {src} > 2 tau_rec", fields[1]);
        assert!(tgt <= 2.0 * TAU_REC, "pair {}: alpha=1 chamfer {tgt} > 2 tau_rec", fields[1]);
        checked += 1;
    }
    assert_eq!(checked, 10, "expected 10 full-setting rows");
    pass(5, t0, "alpha 0/1 frames within 2 tau_rec on all 10 pairs");
}

// ---------------------------------------------------------------------------
// Criterion 6: smoothness direction.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_6_smoothness_direction() {
    let a = artifacts();
    let t0 = Instant::now();
    let ppl_ok = &a.eval_report["ppl_full_le_basic"];
    assert_eq!(ppl_ok, "true", "mean PPL(full) must not exceed mean PPL(basic)");
    let wins: usize = a.eval_report["pdv_full_wins"].parse().unwrap();
    assert!(wins >= 7, "PDV(full) <= PDV(basic) in only {wins}/10 pairs");
    pass(
        6,
        t0,
        &format!(
            "mean PPL full {} <= basic {}, PDV wins {wins}/10",
            a.eval_report["mean_ppl_full"], a.eval_report["mean_ppl_basic"]
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: ablation and analysis structure.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_ablation_structure() {
    let a = artifacts();
    let t0 = Instant::now();

    let mech = std::fs::read_to_string(a.root.join("ablate/ablate_mechanisms.csv")).unwrap();
    let rows: Vec<&str> = mech.lines().skip(1).collect();
    assert_eq!(rows.len(), 4, "mechanism table must have 4 rows");
    for (row, setting) in rows.iter().zip(["basic", "af", "af_tr", "full"]) {
        assert!(row.starts_with(&format!("{setting},")), "row {row}");
    }

    let scale = std::fs::read_to_string(a.root.join("ablate/ablate_scale.csv")).unwrap();
    let rows: Vec<Vec<&str>> = scale.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let no_lfe = rows.iter().find(|r| r[0] == "no_lfe").expect("no_lfe row");
    let scale1 = rows.iter().find(|r| r[1] == "1").expect("scale 1 row");
    for col in 2..4 {
        let a_: f64 = no_lfe[col].parse().unwrap();
        let b_: f64 = scale1[col].parse().unwrap();
        assert!((a_ - b_).abs() < 1e-9, "scale=1 vs no_lfe col {col}: {a_} vs {b_}");
    }

    let steps = a.geom.cfg.steps;
    for name in [
        "analyze/analyze_token_distance_aligned.csv",
        "analyze/analyze_token_distance_paired.csv",
        "analyze/analyze_frequency.csv",
    ] {
        let text = std::fs::read_to_string(a.root.join(name)).unwrap();
        assert_eq!(text.lines().count(), steps + 1, "{name}: header + steps rows");
    }
    let report = parse_kv(&a.root.join("analyze/analyze_report.cfg"));
    for field in [
        "aligned_token_distance_increases",
        "paired_point_distance_argmin_geometry",
        "paired_point_distance_argmin_texture",
        "low_band_smoother_fraction",
        "low_band_smoother_majority",
    ] {
        assert!(report.contains_key(field), "analyze report missing {field}");
    }
    pass(7, t0, "scale=1 == no-LFE, 4-row table, trace CSVs with steps rows");
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism of criteria 4-7 reruns.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_8_determinism() {
    let a = artifacts();
    let t0 = Instant::now();
    let root2 = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_run2");
    build_pipeline(&root2);

    let mut compared = 0;
    for rel in [
        "train/geom.mrph",
        "train/tex.mrph",
        "train/loss_geometry.csv",
        "train/loss_texture.csv",
        "eval/eval.csv",
        "eval/eval_report.cfg",
        "ablate/ablate_mechanisms.csv",
        "ablate/ablate_scale.csv",
        "ablate/ablate_report.cfg",
        "analyze/analyze_token_distance_aligned.csv",
        "analyze/analyze_token_distance_paired.csv",
        "analyze/analyze_frequency.csv",
        "analyze/analyze_report.cfg",
    ] {
        let x = std::fs::read(a.root.join(rel)).unwrap();
        let y = std::fs::read(root2.join(rel)).unwrap();
        assert_eq!(x, y, "{rel} differs between identical-seed runs");
        compared += 1;
    }
    // Every per-pair report as well.
    for entry in std::fs::read_dir(a.root.join("eval/reports")).unwrap() {
        let name = entry.unwrap().file_name();
        let x = std::fs::read(a.root.join("eval/reports").join(&name)).unwrap();
        let y = std::fs::read(root2.join("eval/reports").join(&name)).unwrap();
        assert_eq!(x, y, "reports/{name:?} differs");
        compared += 1;
    }
    pass(8, t0, &format!("{compared} metric files byte-identical across reruns"));
}

// ---------------------------------------------------------------------------
// Trained-model op examples that need the full-scale artifacts.
// ---------------------------------------------------------------------------

/// From-scratch samples stay near the corpus (threshold frozen from the
/// calibration run).
#[test]
fn op_example_sample_lands_near_corpus() {
    let a = artifacts();
    let bound = morphkit::calibration::SAMPLE_NEAREST_CORPUS;
    let mut rng = Rng::new(0x5A3);
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let idx = rng.range(a.corpus.len());
        let s = &a.corpus.samples[idx];
        let cond = a.geom.params.cond.condition_of(s).unwrap();
        let z = rng.gaussian(&[a.geom.cfg.m, 3]);
        let out = a.geom.sample(&z, &cond, a.geom.cfg.steps, None, &mut NoHooks).unwrap();
        let near = morphkit::metrics::plausibility(&out, &a.corpus).unwrap();
        worst = worst.max(near);
    }
    assert!(worst <= bound, "nearest-corpus chamfer {worst} > frozen bound {bound}");
}

/// Nearest-embedding classification of held-out samples across families.
#[test]
fn op_example_condition_classification() {
    let a = artifacts();
    let table = &a.geom.params.cond;
    let mut rng = Rng::new(0xC1A55);
    let mut correct = 0;
    let mut total = 0;
    for family in morphkit::shapes::FAMILIES {
        for _ in 0..20 {
            let params: Vec<f64> = family
                .param_ranges()
                .iter()
                .map(|&(lo, hi)| rng.uniform_in(lo, hi))
                .collect();
            let e = table.embed(family.id(), &params).unwrap();
            let mut best = f64::INFINITY;
            let mut best_fam = 0;
            for other in morphkit::shapes::FAMILIES {
                let cand = table.embed(other.id(), &params).unwrap();
                let d = e.vector.sub(&cand.vector).unwrap().norm();
                if d < best {
                    best = d;
                    best_fam = other.id();
                }
            }
            if best_fam == family.id() {
                correct += 1;
            }
            total += 1;
        }
    }
    let acc = correct as f64 / total as f64;
    assert!(acc >= 0.95, "family classification accuracy {acc}");
}

/// Cascade round trip reproduces the family coloring within the frozen
/// tolerance.
#[test]
fn op_example_cascade_colors_track_family_coloring() {
    let a = artifacts();
    let bound = morphkit::calibration::CASCADE_COLOR_TOLERANCE;
    let models = MorphModels { geom: &a.geom, tex: &a.tex };
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let idx = i * a.corpus.len() / 4 + 3;
        let s = &a.corpus.samples[idx];
        let art = prepare_shape(&models, s, &FinetuneHyper::default(), 0xC0103).unwrap();
        let cond_g = a.geom.params.cond.condition_of(s).unwrap();
        let cond_t = a.tex.params.cond.condition_of(s).unwrap();
        let (points, colors) = morphkit::denoiser::cascade_generate(
            &a.geom,
            &a.tex,
            &art.noise,
            &cond_g,
            &cond_t,
            Some(&art.adapter_g),
            Some(&art.adapter_t),
            &mut NoHooks,
            &mut NoHooks,
        )
        .unwrap();
        // Mean color error against the sample's own coloring, position-paired
        // by nearest point.
        let mut err_sum = 0.0;
        for j in 0..points.rows() {
            let p = points.row(j);
            let mut best = f64::INFINITY;
            let mut best_k = 0;
            for k in 0..s.points.rows() {
                let q = s.points.row(k);
                let d: f64 = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum();
                if d < best {
                    best = d;
                    best_k = k;
                }
            }
            let c = colors.row(j);
            let cref = s.colors.row(best_k);
            err_sum += c
                .iter()
                .zip(cref)
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
                / 3.0;
        }
        worst = worst.max(err_sum / points.rows() as f64);
    }
    assert!(worst <= bound, "cascade color error {worst} > frozen bound {bound}");
}

/// A full-mechanism morph on the fixed torus-box pair is at least as smooth
/// as basic interpolation on the same seeds.
#[test]
fn op_example_full_morph_not_rougher_than_basic() {
    let a = artifacts();
    let (src, tgt) = &a.pairs[0];
    let models = MorphModels { geom: &a.geom, tex: &a.tex };
    let cfg_full = MorphConfig { n_frames: 4, ..MorphConfig::default() };
    let cfg_basic = MorphConfig { n_frames: 4, ..MorphConfig::basic() };
    let src_art = prepare_shape(&models, src, &cfg_full.lora, 7).unwrap();
    let tgt_art = prepare_shape(&models, tgt, &cfg_full.lora, 7).unwrap();
    let full = morph_with_artifacts(src, tgt, &src_art, &tgt_art, &cfg_full, &models, 7).unwrap();
    let basic = morph_with_artifacts(src, tgt, &src_art, &tgt_art, &cfg_basic, &models, 7).unwrap();
    let (ppl_full, _) = morphkit::metrics::ppl_pdv(&full).unwrap();
    let (ppl_basic, _) = morphkit::metrics::ppl_pdv(&basic).unwrap();
    assert!(
        ppl_full <= ppl_basic,
        "full-mechanism ppl {ppl_full} rougher than basic {ppl_basic}"
    );
    // Both endpoints reconstruct the inputs.
    let report = evaluate_sequence(&full, src, tgt, None).unwrap();
    assert!(report.endpoint_src_chamfer <= 2.0 * TAU_REC);
    assert!(report.endpoint_tgt_chamfer <= 2.0 * TAU_REC);
}

/// Random clouds score worse against the corpus than generated frames.
#[test]
fn op_example_plausibility_separates_noise_from_samples() {
    let a = artifacts();
    let mut rng = Rng::new(0x9A7);
    let noise = rng.gaussian(&[a.geom.cfg.m, 3]);
    let noise_score = morphkit::metrics::plausibility(&noise, &a.corpus).unwrap();
    let s = &a.corpus.samples[5];
    let cond = a.geom.params.cond.condition_of(s).unwrap();
    let z = rng.gaussian(&[a.geom.cfg.m, 3]);
    let out = a.geom.sample(&z, &cond, a.geom.cfg.steps, None, &mut NoHooks).unwrap();
    let sample_score = morphkit::metrics::plausibility(&out, &a.corpus).unwrap();
    assert!(
        noise_score > sample_score,
        "noise {noise_score} should score worse than a trained sample {sample_score}"
    );
}

/// Unused-window guard referenced by morph tests: windows validate against
/// the checkpoint's step count.
#[test]
fn op_example_window_validation_against_steps() {
    let a = artifacts();
    let cfg = MorphConfig {
        lfe_window: MorphWindow::new(1, a.geom.cfg.steps + 1),
        ..MorphConfig::default()
    };
    assert!(cfg.validate(a.geom.cfg.steps).is_err());
}
