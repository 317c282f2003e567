//! Smoothness and plausibility metrics over morph sequences.
//!
//! Frame-to-frame distance is chamfer over colored points ([x, y, z,
//! lambda*r, lambda*g, lambda*b], lambda = 0.5), standing in for perceptual
//! loss on renders; every report header records that substitution.

mod traces;

pub use traces::{
    band_magnitudes, cascade_token_distance_trace, frequency_trace, token_distance_trace,
    validate_trace_spec, CascadeTrace, FrequencyTrace, TokenDistanceTrace, TraceSpec,
};

use crate::denoiser::DenoiserError;
use crate::morphing::{MechanismCounters, MorphSequence};
use crate::numerics::{NumericsError, Tensor};
use crate::shapes::{chamfer, chamfer_colored, Corpus, ShapeError, ShapeSample};

/// Color weight in the frame-distance metric.
pub const COLOR_LAMBDA: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Shapes(#[from] ShapeError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Denoiser(#[from] DenoiserError),
}

/// Consecutive-frame distances: the substrate of PPL and PDV.
pub fn consecutive_distances(seq: &MorphSequence) -> Result<Vec<f64>, MetricsError> {
    if seq.frames.len() < 2 {
        return Err(MetricsError::TooFewFrames(seq.frames.len()));
    }
    seq.frames
        .windows(2)
        .map(|w| {
            chamfer_colored(
                &w[0].points,
                &w[0].colors,
                &w[1].points,
                &w[1].colors,
                COLOR_LAMBDA,
            )
            .map_err(MetricsError::from)
        })
        .collect()
}

/// Path length (sum of consecutive distances) and its population variance.
pub fn ppl_pdv(seq: &MorphSequence) -> Result<(f64, f64), MetricsError> {
    let d = consecutive_distances(seq)?;
    Ok(summarize(&d))
}

fn summarize(d: &[f64]) -> (f64, f64) {
    let ppl: f64 = d.iter().sum();
    let mean = ppl / d.len() as f64;
    let pdv = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d.len() as f64;
    (ppl, pdv)
}

/// Reconstruction tolerance of a trained geometry stage: the 95th-percentile
/// chamfer between corpus shapes and their invert-then-sample round trips
/// through the base model, over `n` calibration shapes picked by a fixed
/// stride through the corpus.
pub fn calibrate_reconstruction_tolerance(
    geom: &crate::denoiser::Model,
    corpus: &Corpus,
    n: usize,
) -> Result<f64, MetricsError> {
    use rayon::prelude::*;
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let indices: Vec<usize> = (0..n).map(|i| i * corpus.len() / n).collect();
    let mut errs: Vec<f64> = indices
        .par_iter()
        .map(|&idx| {
            let s = &corpus.samples[idx];
            let cond = geom.params.cond.condition_of(s)?;
            let z = geom.invert(&s.points, &cond, geom.cfg.steps, None)?;
            let back = geom.sample(&z, &cond, geom.cfg.steps, None, &mut crate::denoiser::NoHooks)?;
            Ok(chamfer(&back, &s.points)?)
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    errs.sort_by(|a, b| a.partial_cmp(b).expect("finite chamfer"));
    let idx = ((0.95 * errs.len() as f64).ceil() as usize).saturating_sub(1);
    Ok(errs[idx.min(errs.len() - 1)])
}

/// Minimum chamfer from a frame's points to any corpus sample.
pub fn plausibility(points: &Tensor, corpus: &Corpus) -> Result<f64, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut best = f64::INFINITY;
    for s in &corpus.samples {
        let d = chamfer(points, &s.points)?;
        if d < best {
            best = d;
        }
    }
    Ok(best)
}

/// Full per-sequence report.
#[derive(Clone, Debug)]
pub struct MetricReport {
    pub ppl: f64,
    pub pdv: f64,
    pub endpoint_src_chamfer: f64,
    pub endpoint_tgt_chamfer: f64,
    pub consecutive: Vec<f64>,
    pub plausibility: Vec<f64>,
    pub frame_count: usize,
    pub config_hash: u64,
    pub seed: u64,
    pub counters: MechanismCounters,
}

/// Evaluate a finished sequence against its endpoints and, when a corpus is
/// supplied, per-frame plausibility.
pub fn evaluate_sequence(
    seq: &MorphSequence,
    src: &ShapeSample,
    tgt: &ShapeSample,
    corpus: Option<&Corpus>,
) -> Result<MetricReport, MetricsError> {
    let consecutive = consecutive_distances(seq)?;
    let (ppl, pdv) = summarize(&consecutive);
    let first = seq.frames.first().expect("checked above");
    let last = seq.frames.last().expect("checked above");
    let plaus = match corpus {
        Some(c) => seq
            .frames
            .iter()
            .map(|f| plausibility(&f.points, c))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    Ok(MetricReport {
        ppl,
        pdv,
        endpoint_src_chamfer: chamfer(&first.points, &src.points)?,
        endpoint_tgt_chamfer: chamfer(&last.points, &tgt.points)?,
        consecutive,
        plausibility: plaus,
        frame_count: seq.frames.len(),
        config_hash: seq.provenance.config_hash,
        seed: seq.provenance.seed,
        counters: seq.counters,
    })
}

impl MetricReport {
    /// Flat key=value form with a fixed header.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        out.push_str("# metric report\n");
        out.push_str("# frame distance: chamfer over [x,y,z,0.5r,0.5g,0.5b] (perceptual-loss substitute)\n");
        out.push_str(&format!("ppl={}\n", self.ppl));
        out.push_str(&format!("pdv={}\n", self.pdv));
        out.push_str(&format!("endpoint_src_chamfer={}\n", self.endpoint_src_chamfer));
        out.push_str(&format!("endpoint_tgt_chamfer={}\n", self.endpoint_tgt_chamfer));
        out.push_str(&format!("frame_count={}\n", self.frame_count));
        out.push_str(&format!("config_hash={:016x}\n", self.config_hash));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("counter_fusion={}\n", self.counters.fusion));
        out.push_str(&format!("counter_reorder={}\n", self.counters.reorder));
        out.push_str(&format!("counter_lfe={}\n", self.counters.lfe));
        for (i, d) in self.consecutive.iter().enumerate() {
            out.push_str(&format!("dist_{i}={d}\n"));
        }
        for (i, p) in self.plausibility.iter().enumerate() {
            out.push_str(&format!("plausibility_{i}={p}\n"));
        }
        out
    }
}
