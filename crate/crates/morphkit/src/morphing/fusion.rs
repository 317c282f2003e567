//! Attention fusion: the interpolated stream attends over the blended
//! source/target keys and values concatenated with its own.

use super::MorphError;
use crate::denoiser::{AttentionTap, AttnKind};
use crate::numerics::Tensor;

/// Replacement K/V for the interpolated stream at one (block, kind):
/// K' = [(1-alpha) K_src + alpha K_tgt, K_alpha], likewise for V. All three
/// taps must hold captures from the same interpolated model's forward pass.
pub fn fused_attention(
    tap_src: &AttentionTap,
    tap_tgt: &AttentionTap,
    tap_alpha: &AttentionTap,
    block: usize,
    kind: AttnKind,
    alpha: f64,
) -> Result<(Tensor, Tensor), MorphError> {
    let pick = |tap: &AttentionTap, who: &'static str| {
        tap.get(block, kind)
            .cloned()
            .ok_or(MorphError::TapMisaligned { block, who })
    };
    let src = pick(tap_src, "source")?;
    let tgt = pick(tap_tgt, "target")?;
    let own = pick(tap_alpha, "alpha")?;
    if src.k.shape() != tgt.k.shape() || src.k.shape() != own.k.shape() {
        return Err(MorphError::TapMisaligned { block, who: "shape" });
    }
    let k_mix = src.k.scale(1.0 - alpha).add(&tgt.k.scale(alpha))?;
    let v_mix = src.v.scale(1.0 - alpha).add(&tgt.v.scale(alpha))?;
    let k = Tensor::concat_rows(&[&k_mix, &own.k])?;
    let v = Tensor::concat_rows(&[&v_mix, &own.v])?;
    Ok((k, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::{DenoiserConfig, Model, ModelParams};
    use crate::numerics::Rng;

    fn model() -> Model {
        let cfg = DenoiserConfig {
            m: 8,
            d_model: 8,
            n_blocks: 2,
            n_heads: 2,
            d_cond: 4,
            steps: 4,
            channels_in: 3,
            channels_out: 3,
        };
        Model::new(cfg.clone(), ModelParams::init(&cfg, &mut Rng::new(7))).unwrap()
    }

    /// Identical streams: duplicated keys halve each attention weight but
    /// leave the value average unchanged, so fusion is a no-op.
    #[test]
    fn coinciding_streams_reproduce_plain_attention() {
        let model = model();
        let mut rng = Rng::new(8);
        let tokens = rng.gaussian(&[model.cfg.m, model.cfg.d_model]);
        let cond = model.params.cond.embed(0, &[0.3, 0.3]).unwrap();
        let ctx = model.context(&cond, 0.25).unwrap();

        let plain = model.block_forward(0, &tokens, &ctx, None, None).unwrap();

        // Capture the same forward in three taps.
        let mut taps: Vec<AttentionTap> = (0..3).map(|_| AttentionTap::new(2)).collect();
        for tap in &mut taps {
            model.block_forward(0, &tokens, &ctx, None, Some(tap)).unwrap();
        }
        let (ks, vs) =
            fused_attention(&taps[0], &taps[1], &taps[2], 0, AttnKind::SelfAttn, 0.37).unwrap();
        let (kc, vc) =
            fused_attention(&taps[0], &taps[1], &taps[2], 0, AttnKind::CrossAttn, 0.37).unwrap();
        let mut tap = taps.pop().unwrap();
        tap.write(0, AttnKind::SelfAttn, ks, vs);
        tap.write(0, AttnKind::CrossAttn, kc, vc);
        let fused = model.block_forward(0, &tokens, &ctx, None, Some(&mut tap)).unwrap();

        for (a, b) in fused.data().iter().zip(plain.data()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    /// Hand-checked single-token example: with M = 1, concatenating the
    /// interpolated and own K/V (here identical values v0) must return v0.
    #[test]
    fn hand_example_duplicate_key_average() {
        let k = Tensor::from_vec(&[1, 1], vec![0.4]).unwrap();
        let v = Tensor::from_vec(&[1, 1], vec![2.0]).unwrap();
        let mut src = AttentionTap::new(1);
        let mut tgt = AttentionTap::new(1);
        let mut own = AttentionTap::new(1);
        src.record(0, AttnKind::SelfAttn, None, k.clone(), v.clone());
        tgt.record(0, AttnKind::SelfAttn, None, k.clone(), v.clone());
        own.record(0, AttnKind::SelfAttn, None, k.clone(), v.clone());
        let (kf, vf) = fused_attention(&src, &tgt, &own, 0, AttnKind::SelfAttn, 0.25).unwrap();
        assert_eq!(kf.shape(), &[2, 1]);
        // Both keys equal 0.4 -> softmax weights 1/2 each -> value 2.0.
        let q = 1.3;
        let s0 = (q * kf.at2(0, 0)).exp();
        let s1 = (q * kf.at2(1, 0)).exp();
        let out = (s0 * vf.at2(0, 0) + s1 * vf.at2(1, 0)) / (s0 + s1);
        assert!((out - 2.0).abs() < 1e-15);
    }

    #[test]
    fn missing_tap_errors() {
        let model = model();
        let mut rng = Rng::new(9);
        let tokens = rng.gaussian(&[model.cfg.m, model.cfg.d_model]);
        let cond = model.params.cond.embed(0, &[0.3, 0.3]).unwrap();
        let ctx = model.context(&cond, 0.0).unwrap();
        let mut recorded = AttentionTap::new(2);
        model.block_forward(0, &tokens, &ctx, None, Some(&mut recorded)).unwrap();
        let empty = AttentionTap::new(2);
        assert!(
            fused_attention(&recorded, &empty, &recorded, 0, AttnKind::SelfAttn, 0.5).is_err()
        );
    }
}
