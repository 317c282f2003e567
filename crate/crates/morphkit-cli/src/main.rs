//! morphkit: train the two-stage point-cloud prior, morph between shapes,
//! and reproduce the diagnostic analyses.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input or configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "morphkit", version, about = "Regenerative 3D morphing over colored point clouds")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train geometry and texture stages from a corpus manifest.
    Train(TrainArgs),
    /// Morph between two shapes and write PLY frames plus a metric report.
    Morph(MorphArgs),
    /// Emit per-step token-distance and frequency traces.
    Analyze(AnalyzeArgs),
    /// Run the fixed pair suite under the four mechanism settings.
    Eval(EvalArgs),
    /// Mechanism table and enhancement-scale sweep on one pair.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Optional key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; all artifacts land here.
    #[arg(long)]
    out_dir: Option<String>,
    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corpus manifest (family params... seed per line).
    #[arg(long)]
    manifest: Option<String>,
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Token count per cloud.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    n_blocks: Option<usize>,
    #[arg(long)]
    n_heads: Option<usize>,
    #[arg(long)]
    d_cond: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct ModelArgs {
    /// Geometry checkpoint (.mrph).
    #[arg(long)]
    geom: Option<String>,
    /// Texture checkpoint (.mrph).
    #[arg(long)]
    tex: Option<String>,
}

#[derive(Args)]
struct MechanismArgs {
    /// Enable attention fusion (default on).
    #[arg(long, overrides_with = "no_af")]
    af: bool,
    #[arg(long)]
    no_af: bool,
    /// Enable token reordering (default on).
    #[arg(long, overrides_with = "no_tr")]
    tr: bool,
    #[arg(long)]
    no_tr: bool,
    /// Enable low-frequency enhancement (default on).
    #[arg(long, overrides_with = "no_lfe")]
    lfe: bool,
    #[arg(long)]
    no_lfe: bool,
    /// Last attention-fusion step of the geometry stage.
    #[arg(long)]
    af_geom_end: Option<usize>,
    /// Enhancement factor for the low band.
    #[arg(long)]
    scale: Option<f64>,
    /// Low-band cutoff in radians per token.
    #[arg(long)]
    omega0: Option<f64>,
    /// Interior frame count of the alpha schedule.
    #[arg(long)]
    frames: Option<usize>,
}

impl MechanismArgs {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        let toggle = |on: bool, off: bool| {
            if on {
                Some("true".to_string())
            } else if off {
                Some("false".to_string())
            } else {
                None
            }
        };
        vec![
            ("af", toggle(self.af, self.no_af)),
            ("tr", toggle(self.tr, self.no_tr)),
            ("lfe", toggle(self.lfe, self.no_lfe)),
            ("af_geom_end", self.af_geom_end.map(|v| v.to_string())),
            ("scale", self.scale.map(|v| v.to_string())),
            ("omega0", self.omega0.map(|v| v.to_string())),
            ("frames", self.frames.map(|v| v.to_string())),
        ]
    }
}

#[derive(Args)]
struct MorphArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    models: ModelArgs,
    #[command(flatten)]
    mech: MechanismArgs,
    /// Source shape: "family params... seed".
    #[arg(long)]
    src: Option<String>,
    /// Target shape: "family params... seed".
    #[arg(long)]
    tgt: Option<String>,
    /// Optional corpus manifest for per-frame plausibility.
    #[arg(long)]
    manifest: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    models: ModelArgs,
    /// Family for the traced generations.
    #[arg(long)]
    family: Option<String>,
    /// Parameters for the traced generations, space-separated.
    #[arg(long)]
    params: Option<String>,
    /// Uniform geometric scale of the aligned copy.
    #[arg(long)]
    scale: Option<f64>,
    /// Low-band cutoff for the frequency trace.
    #[arg(long)]
    omega0: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    models: ModelArgs,
    #[command(flatten)]
    mech: MechanismArgs,
    /// Benchmark pair list (two shape specs per line).
    #[arg(long)]
    pairs: Option<String>,
    /// Corpus manifest for plausibility scoring.
    #[arg(long)]
    manifest: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    models: ModelArgs,
    #[command(flatten)]
    mech: MechanismArgs,
    /// Benchmark pair list; `pair_index` selects the ablation pair.
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    pair_index: Option<usize>,
    /// Enhancement scales to sweep, space-separated.
    #[arg(long)]
    scales: Option<String>,
}

fn common_overrides(c: &CommonArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("out_dir", c.out_dir.clone()),
        ("seed", c.seed.map(|v| v.to_string())),
    ]
}

fn model_overrides(m: &ModelArgs) -> Vec<(&'static str, Option<String>)> {
    vec![("geom", m.geom.clone()), ("tex", m.tex.clone())]
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Train(a) => {
            let mut ov = common_overrides(&a.common);
            ov.extend([
                ("manifest", a.manifest),
                ("batches", a.batches.map(|v| v.to_string())),
                ("lr", a.lr.map(|v| v.to_string())),
                ("batch_size", a.batch_size.map(|v| v.to_string())),
                ("m", a.m.map(|v| v.to_string())),
                ("d_model", a.d_model.map(|v| v.to_string())),
                ("n_blocks", a.n_blocks.map(|v| v.to_string())),
                ("n_heads", a.n_heads.map(|v| v.to_string())),
                ("d_cond", a.d_cond.map(|v| v.to_string())),
                ("steps", a.steps.map(|v| v.to_string())),
            ]);
            let rc = RunConfig::resolve("train", commands::train::KEYS, a.common.config.as_deref(), ov)?;
            commands::train::run(&rc)
        }
        Cmd::Morph(a) => {
            let mut ov = common_overrides(&a.common);
            ov.extend(model_overrides(&a.models));
            ov.extend(a.mech.overrides());
            ov.extend([
                ("src", a.src),
                ("tgt", a.tgt),
                ("manifest", a.manifest),
            ]);
            let keys = commands::morph::keys();
            let rc = RunConfig::resolve("morph", &keys, a.common.config.as_deref(), ov)?;
            commands::morph::run(&rc)
        }
        Cmd::Analyze(a) => {
            let mut ov = common_overrides(&a.common);
            ov.extend(model_overrides(&a.models));
            ov.extend([
                ("family", a.family),
                ("params", a.params),
                ("scale", a.scale.map(|v| v.to_string())),
                ("omega0", a.omega0.map(|v| v.to_string())),
            ]);
            let rc =
                RunConfig::resolve("analyze", commands::analyze::KEYS, a.common.config.as_deref(), ov)?;
            commands::analyze::run(&rc)
        }
        Cmd::Eval(a) => {
            let mut ov = common_overrides(&a.common);
            ov.extend(model_overrides(&a.models));
            ov.extend(a.mech.overrides());
            ov.extend([("pairs", a.pairs), ("manifest", a.manifest)]);
            let keys = commands::eval::keys();
            let rc = RunConfig::resolve("eval", &keys, a.common.config.as_deref(), ov)?;
            commands::eval::run(&rc)
        }
        Cmd::Ablate(a) => {
            let mut ov = common_overrides(&a.common);
            ov.extend(model_overrides(&a.models));
            ov.extend(a.mech.overrides());
            ov.extend([
                ("pairs", a.pairs),
                ("pair_index", a.pair_index.map(|v| v.to_string())),
                ("scales", a.scales),
            ]);
            let keys = commands::ablate::keys();
            let rc = RunConfig::resolve("ablate", &keys, a.common.config.as_deref(), ov)?;
            commands::ablate::run(&rc)
        }
    }
}

fn main() -> ExitCode {
    // MORPHKIT_THREADS caps worker parallelism for every command.
    if let Ok(threads) = std::env::var("MORPHKIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
