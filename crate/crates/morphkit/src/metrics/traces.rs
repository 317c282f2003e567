//! Diagnostic traces over the sampling trajectory: per-step token distances
//! between two generations, and per-step low/high frequency-band magnitudes
//! of the latent.

use super::MetricsError;
use crate::denoiser::{Model, SampleHooks};
use crate::numerics::{rfft, Tensor};
use crate::shapes::{Family, ShapeError};

/// What to generate for a trace.
#[derive(Clone, Debug)]
pub struct TraceSpec {
    pub family: Family,
    pub params_a: Vec<f64>,
    /// Second condition; for the aligned protocol this is a scaled copy of
    /// `params_a`.
    pub params_b: Vec<f64>,
    pub seed_a: u64,
    pub seed_b: u64,
}

struct Recorder {
    tokens: Vec<Tensor>,
    latents: Vec<Tensor>,
}

impl SampleHooks for Recorder {
    fn observe(&mut self, _step: usize, z_in: &Tensor, tokens: &Tensor) {
        self.tokens.push(tokens.clone());
        self.latents.push(z_in.clone());
    }
}

/// Per-step curves comparing two generations.
#[derive(Clone, Debug)]
pub struct TokenDistanceTrace {
    /// Mean over positions of the hidden-token distance at each step.
    pub token_distance: Vec<f64>,
    /// Mean 3-D distance between final points paired by nearest hidden
    /// token at each step.
    pub paired_point_distance: Vec<f64>,
}

impl TokenDistanceTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,token_distance,paired_point_distance\n");
        for (i, (td, pd)) in self
            .token_distance
            .iter()
            .zip(&self.paired_point_distance)
            .enumerate()
        {
            out.push_str(&format!("{},{},{}\n", i + 1, td, pd));
        }
        out
    }
}

/// Generate twice (same noise when `aligned`, fresh noise otherwise) and
/// trace per-step token distances plus the nearest-token point pairing.
pub fn token_distance_trace(
    model_a: &Model,
    model_b: &Model,
    aligned: bool,
    spec: &TraceSpec,
) -> Result<TokenDistanceTrace, MetricsError> {
    if model_a.cfg != model_b.cfg {
        return Err(MetricsError::Denoiser(crate::denoiser::DenoiserError::BadConfig(
            "trace models must share a config".into(),
        )));
    }
    let cfg = &model_a.cfg;
    let mut rng = crate::numerics::Rng::new(spec.seed_a ^ 0x5452_4143_45);
    let z_a = rng.gaussian(&[cfg.m, cfg.channels_in]);
    let z_b = if aligned {
        z_a.clone()
    } else {
        crate::numerics::Rng::new(spec.seed_b ^ 0x5452_4143_45).gaussian(&[cfg.m, cfg.channels_in])
    };
    let cond_a = model_a
        .params
        .cond
        .embed(spec.family.id(), &spec.params_a)
        .map_err(MetricsError::Numerics)?;
    let cond_b = model_b
        .params
        .cond
        .embed(spec.family.id(), &spec.params_b)
        .map_err(MetricsError::Numerics)?;

    let mut rec_a = Recorder { tokens: Vec::new(), latents: Vec::new() };
    let mut rec_b = Recorder { tokens: Vec::new(), latents: Vec::new() };
    let out_a = model_a.sample(&z_a, &cond_a, cfg.steps, None, &mut rec_a)?;
    let out_b = model_b.sample(&z_b, &cond_b, cfg.steps, None, &mut rec_b)?;

    let m = cfg.m;
    let mut token_distance = Vec::with_capacity(cfg.steps);
    let mut paired = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let ha = &rec_a.tokens[step];
        let hb = &rec_b.tokens[step];
        let mut mean_td = 0.0;
        let mut mean_pd = 0.0;
        for j in 0..m {
            let row = ha.row(j);
            let mut best = f64::INFINITY;
            let mut best_j = 0usize;
            let mut same_pos = 0.0;
            for j2 in 0..m {
                let d2: f64 = row
                    .iter()
                    .zip(hb.row(j2))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                if j2 == j {
                    same_pos = d2.sqrt();
                }
                if d2 < best {
                    best = d2;
                    best_j = j2;
                }
            }
            mean_td += same_pos;
            let pd: f64 = out_a
                .row(j)
                .iter()
                .zip(out_b.row(best_j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            mean_pd += pd;
        }
        token_distance.push(mean_td / m as f64);
        paired.push(mean_pd / m as f64);
    }
    Ok(TokenDistanceTrace { token_distance, paired_point_distance: paired })
}

/// Per-step mean bin magnitude of the latent spectrum, split at omega0.
#[derive(Clone, Debug)]
pub struct FrequencyTrace {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    pub omega0: f64,
}

impl FrequencyTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,value_low,value_high\n");
        for (i, (lo, hi)) in self.low.iter().zip(&self.high).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, lo, hi));
        }
        out
    }

    /// Fraction of steps whose low band moved less (step to step) than the
    /// high band.
    pub fn low_band_smoother_fraction(&self) -> f64 {
        let n = self.low.len();
        if n < 2 {
            return 0.0;
        }
        let mut smoother = 0usize;
        for i in 1..n {
            if (self.low[i] - self.low[i - 1]).abs() < (self.high[i] - self.high[i - 1]).abs() {
                smoother += 1;
            }
        }
        smoother as f64 / (n - 1) as f64
    }
}

/// Mean |F_k| over bins below/above omega0, averaged over channels.
pub fn band_magnitudes(latent: &Tensor, omega0: f64) -> Result<(f64, f64), MetricsError> {
    let (m, d) = (latent.rows(), latent.cols());
    let mut low_sum = 0.0;
    let mut low_n = 0usize;
    let mut high_sum = 0.0;
    let mut high_n = 0usize;
    for ch in 0..d {
        let col = Tensor::from_fn(&[m], |i| latent.at2(i, ch));
        let spec = rfft(&col)?;
        for k in 0..spec.bins() {
            if spec.omega(k) < omega0 {
                low_sum += spec.magnitude(k);
                low_n += 1;
            } else {
                high_sum += spec.magnitude(k);
                high_n += 1;
            }
        }
    }
    Ok((low_sum / low_n.max(1) as f64, high_sum / high_n.max(1) as f64))
}

/// Trace band magnitudes of the latent along one sampling run.
pub fn frequency_trace(
    model: &Model,
    family: Family,
    params: &[f64],
    seed: u64,
    omega0: f64,
) -> Result<FrequencyTrace, MetricsError> {
    let cfg = &model.cfg;
    let mut rng = crate::numerics::Rng::new(seed ^ 0x4652_4551);
    let z = rng.gaussian(&[cfg.m, cfg.channels_in]);
    let cond = model
        .params
        .cond
        .embed(family.id(), params)
        .map_err(MetricsError::Numerics)?;
    let mut rec = Recorder { tokens: Vec::new(), latents: Vec::new() };
    model.sample(&z, &cond, cfg.steps, None, &mut rec)?;
    let mut low = Vec::with_capacity(cfg.steps);
    let mut high = Vec::with_capacity(cfg.steps);
    for latent in &rec.latents {
        let (lo, hi) = band_magnitudes(latent, omega0)?;
        low.push(lo);
        high.push(hi);
    }
    Ok(FrequencyTrace { low, high, omega0 })
}

/// Validate trace parameters against the family before running.
pub fn validate_trace_spec(spec: &TraceSpec) -> Result<(), ShapeError> {
    crate::shapes::generate(spec.family, &spec.params_a, 4, 0)?;
    crate::shapes::generate(spec.family, &spec.params_b, 4, 0)?;
    Ok(())
}

/// Per-step curves for both cascade stages.
#[derive(Clone, Debug)]
pub struct CascadeTrace {
    pub geometry: TokenDistanceTrace,
    pub texture: TokenDistanceTrace,
}

impl CascadeTrace {
    /// Same-position token distances per stage.
    pub fn aligned_csv(&self) -> String {
        let mut out = String::from("step,geometry,texture\n");
        for (i, (g, t)) in self
            .geometry
            .token_distance
            .iter()
            .zip(&self.texture.token_distance)
            .enumerate()
        {
            out.push_str(&format!("{},{},{}\n", i + 1, g, t));
        }
        out
    }

    /// Final 3-D distance of nearest-token pairs per stage.
    pub fn paired_csv(&self) -> String {
        let mut out = String::from("step,geometry,texture\n");
        for (i, (g, t)) in self
            .geometry
            .paired_point_distance
            .iter()
            .zip(&self.texture.paired_point_distance)
            .enumerate()
        {
            out.push_str(&format!("{},{},{}\n", i + 1, g, t));
        }
        out
    }
}

fn stage_curves(
    rec_a: &Recorder,
    rec_b: &Recorder,
    points_a: &Tensor,
    points_b: &Tensor,
    steps: usize,
    m: usize,
) -> TokenDistanceTrace {
    let mut token_distance = Vec::with_capacity(steps);
    let mut paired = Vec::with_capacity(steps);
    for step in 0..steps {
        let ha = &rec_a.tokens[step];
        let hb = &rec_b.tokens[step];
        let mut mean_td = 0.0;
        let mut mean_pd = 0.0;
        for j in 0..m {
            let row = ha.row(j);
            let mut best = f64::INFINITY;
            let mut best_j = 0usize;
            let mut same_pos = 0.0;
            for j2 in 0..m {
                let d2: f64 = row
                    .iter()
                    .zip(hb.row(j2))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                if j2 == j {
                    same_pos = d2.sqrt();
                }
                if d2 < best {
                    best = d2;
                    best_j = j2;
                }
            }
            mean_td += same_pos;
            let pd: f64 = points_a
                .row(j)
                .iter()
                .zip(points_b.row(best_j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            mean_pd += pd;
        }
        token_distance.push(mean_td / m as f64);
        paired.push(mean_pd / m as f64);
    }
    TokenDistanceTrace { token_distance, paired_point_distance: paired }
}

/// Run the full cascade twice (same geometry/texture noise when `aligned`)
/// and trace token distances for both stages. Point pairing always measures
/// 3-D distance between the two runs' final geometry outputs.
pub fn cascade_token_distance_trace(
    geom: &Model,
    tex: &Model,
    aligned: bool,
    spec: &TraceSpec,
) -> Result<CascadeTrace, MetricsError> {
    let cfg = &geom.cfg;
    let m = cfg.m;
    let mut rng_a = crate::numerics::Rng::new(spec.seed_a ^ 0x5452_4143_45);
    let z_g_a = rng_a.gaussian(&[m, cfg.channels_in]);
    let z_t_a = rng_a.gaussian(&[m, tex.cfg.channels_in]);
    let (z_g_b, z_t_b) = if aligned {
        (z_g_a.clone(), z_t_a.clone())
    } else {
        let mut rng_b = crate::numerics::Rng::new(spec.seed_b ^ 0x5452_4143_45);
        (rng_b.gaussian(&[m, cfg.channels_in]), rng_b.gaussian(&[m, tex.cfg.channels_in]))
    };

    let run = |params: &[f64], z_g: &Tensor, z_t: &Tensor| -> Result<(Recorder, Recorder, Tensor), MetricsError> {
        let cond_g = geom.params.cond.embed(spec.family.id(), params).map_err(MetricsError::Numerics)?;
        let cond_t = tex.params.cond.embed(spec.family.id(), params).map_err(MetricsError::Numerics)?;
        let mut rec_g = Recorder { tokens: Vec::new(), latents: Vec::new() };
        let points = geom.sample(z_g, &cond_g, cfg.steps, None, &mut rec_g)?;
        let mut rec_t = Recorder { tokens: Vec::new(), latents: Vec::new() };
        let start = points.add(z_t).map_err(MetricsError::Numerics)?;
        tex.sample(&start, &cond_t, tex.cfg.steps, None, &mut rec_t)?;
        Ok((rec_g, rec_t, points))
    };

    let (rec_g_a, rec_t_a, points_a) = run(&spec.params_a, &z_g_a, &z_t_a)?;
    let (rec_g_b, rec_t_b, points_b) = run(&spec.params_b, &z_g_b, &z_t_b)?;

    Ok(CascadeTrace {
        geometry: stage_curves(&rec_g_a, &rec_g_b, &points_a, &points_b, cfg.steps, m),
        texture: stage_curves(&rec_t_a, &rec_t_b, &points_a, &points_b, tex.cfg.steps, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::{DenoiserConfig, ModelParams};
    use crate::numerics::Rng;

    fn tiny_model(seed: u64) -> Model {
        let cfg = DenoiserConfig {
            m: 16,
            d_model: 16,
            n_blocks: 2,
            n_heads: 2,
            d_cond: 4,
            steps: 8,
            channels_in: 3,
            channels_out: 3,
        };
        Model::new(cfg.clone(), ModelParams::init(&cfg, &mut Rng::new(seed))).unwrap()
    }

    #[test]
    fn identical_runs_have_zero_distances() {
        let model = tiny_model(5);
        let spec = TraceSpec {
            family: Family::Sphere,
            params_a: vec![0.7, 0.4],
            params_b: vec![0.7, 0.4],
            seed_a: 3,
            seed_b: 3,
        };
        let trace = token_distance_trace(&model, &model, true, &spec).unwrap();
        assert_eq!(trace.token_distance.len(), model.cfg.steps);
        for v in &trace.token_distance {
            assert_eq!(*v, 0.0);
        }
        for v in &trace.paired_point_distance {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn csv_has_exactly_steps_rows() {
        let model = tiny_model(6);
        let spec = TraceSpec {
            family: Family::Sphere,
            params_a: vec![0.6, 0.2],
            params_b: vec![0.72, 0.2],
            seed_a: 1,
            seed_b: 2,
        };
        let trace = token_distance_trace(&model, &model, false, &spec).unwrap();
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), model.cfg.steps + 1);
        let freq = frequency_trace(&model, Family::Sphere, &[0.6, 0.2], 1, 0.1 * std::f64::consts::PI).unwrap();
        assert_eq!(freq.to_csv().lines().count(), model.cfg.steps + 1);
    }

    /// Zero-velocity model: the latent never moves, so both bands are flat.
    #[test]
    fn constant_latent_gives_flat_bands() {
        let model = tiny_model(7);
        let freq =
            frequency_trace(&model, Family::Sphere, &[0.6, 0.2], 9, 0.1 * std::f64::consts::PI)
                .unwrap();
        for i in 1..freq.low.len() {
            assert!((freq.low[i] - freq.low[0]).abs() < 1e-12);
            assert!((freq.high[i] - freq.high[0]).abs() < 1e-12);
        }
    }

    /// White noise: E|F_k| is sqrt(pi M / 4) for interior bins and
    /// sqrt(2 M / pi) for the real-valued DC/Nyquist bins. Both band means
    /// must match the analytic expectation.
    #[test]
    fn white_noise_band_magnitudes_match_analytic_expectation() {
        let m = 64usize;
        let omega0 = 0.1 * std::f64::consts::PI;
        let cut = |k: usize| 2.0 * std::f64::consts::PI * k as f64 / m as f64 >= omega0;
        let interior = (std::f64::consts::PI * m as f64 / 4.0).sqrt();
        let edge = (2.0 * m as f64 / std::f64::consts::PI).sqrt();
        let expect_bin = |k: usize| if k == 0 || k == m / 2 { edge } else { interior };
        let mut exp_low = (0.0, 0usize);
        let mut exp_high = (0.0, 0usize);
        for k in 0..=m / 2 {
            if cut(k) {
                exp_high = (exp_high.0 + expect_bin(k), exp_high.1 + 1);
            } else {
                exp_low = (exp_low.0 + expect_bin(k), exp_low.1 + 1);
            }
        }
        let expect_low = exp_low.0 / exp_low.1 as f64;
        let expect_high = exp_high.0 / exp_high.1 as f64;

        let mut rng = Rng::new(42);
        let trials = 400;
        let mut lo_acc = 0.0;
        let mut hi_acc = 0.0;
        for _ in 0..trials {
            let latent = rng.gaussian(&[m, 2]);
            let (lo, hi) = band_magnitudes(&latent, omega0).unwrap();
            lo_acc += lo;
            hi_acc += hi;
        }
        let lo_mean = lo_acc / trials as f64;
        let hi_mean = hi_acc / trials as f64;
        assert!((lo_mean - expect_low).abs() / expect_low < 0.05, "{lo_mean} vs {expect_low}");
        assert!((hi_mean - expect_high).abs() / expect_high < 0.05, "{hi_mean} vs {expect_high}");
    }
}
