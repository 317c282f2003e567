//! Low-frequency enhancement: scale the sub-omega0 band of each channel's
//! spectrum along the token axis, DC included.

use super::MorphError;
use crate::numerics::{irfft, rfft, Tensor};

/// Per channel: FFT along tokens, multiply every bin with normalized angular
/// frequency 2*pi*k/M < omega0 by `scale`, inverse FFT.
pub fn low_freq_enhance(tokens: &Tensor, omega0: f64, scale: f64) -> Result<Tensor, MorphError> {
    if !(omega0 > 0.0 && omega0 < std::f64::consts::PI) {
        return Err(MorphError::InvalidConfig(format!("omega0 = {omega0} outside (0, pi)")));
    }
    if !(scale >= 1.0) || !scale.is_finite() {
        return Err(MorphError::InvalidConfig(format!("scale = {scale} must be >= 1")));
    }
    let (m, d) = (tokens.rows(), tokens.cols());
    let mut out = vec![0.0; m * d];
    for ch in 0..d {
        let column = Tensor::from_fn(&[m], |i| tokens.at2(i, ch));
        let mut spec = rfft(&column)?;
        for k in 0..spec.bins() {
            if spec.omega(k) < omega0 {
                spec.re[k] *= scale;
                spec.im[k] *= scale;
            }
        }
        let back = irfft(&spec)?;
        for i in 0..m {
            out[i * d + ch] = back.data()[i];
        }
    }
    Ok(Tensor::from_vec(&[m, d], out).expect("sized above"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use std::f64::consts::PI;

    #[test]
    fn scale_one_is_identity() {
        let mut rng = Rng::new(3);
        let tokens = rng.gaussian(&[32, 4]);
        let out = low_freq_enhance(&tokens, 0.1 * PI, 1.0).unwrap();
        for (a, b) in out.data().iter().zip(tokens.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_tokens_scale_by_dc() {
        let tokens = Tensor::filled(&[16, 3], 0.7);
        let out = low_freq_enhance(&tokens, 0.1 * PI, 5.0).unwrap();
        for v in out.data() {
            assert!((v - 3.5).abs() < 1e-9);
        }
    }

    #[test]
    fn high_frequency_tone_unchanged() {
        let m = 128;
        // Bin k with 2*pi*k/m >= omega0: pick k well above the cut.
        let k = 20;
        let omega0 = 0.1 * PI; // cut at k = 6.4
        let tokens = Tensor::from_fn(&[m, 2], |idx| {
            let (i, ch) = (idx / 2, idx % 2);
            ((2.0 * PI * k as f64 * i as f64 / m as f64) + ch as f64).cos()
        });
        let out = low_freq_enhance(&tokens, omega0, 5.0).unwrap();
        for (a, b) in out.data().iter().zip(tokens.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn low_bin_scales_h_high_band_energy_preserved() {
        let mut rng = Rng::new(5);
        let tokens = rng.gaussian(&[64, 3]);
        let omega0 = 0.1 * PI;
        let out = low_freq_enhance(&tokens, omega0, 5.0).unwrap();
        for ch in 0..3 {
            let col_in = Tensor::from_fn(&[64], |i| tokens.at2(i, ch));
            let col_out = Tensor::from_fn(&[64], |i| out.at2(i, ch));
            let si = rfft(&col_in).unwrap();
            let so = rfft(&col_out).unwrap();
            for k in 0..si.bins() {
                let factor = if si.omega(k) < omega0 { 5.0 } else { 1.0 };
                assert!((so.re[k] - factor * si.re[k]).abs() < 1e-9, "ch {ch} bin {k}");
                assert!((so.im[k] - factor * si.im[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn commutes_with_channel_permutation() {
        let mut rng = Rng::new(8);
        let tokens = rng.gaussian(&[32, 3]);
        let perm = [2usize, 0, 1];
        let permuted = Tensor::from_fn(&[32, 3], |idx| {
            let (i, ch) = (idx / 3, idx % 3);
            tokens.at2(i, perm[ch])
        });
        let a = low_freq_enhance(&permuted, 0.1 * PI, 3.0).unwrap();
        let b = low_freq_enhance(&tokens, 0.1 * PI, 3.0).unwrap();
        for i in 0..32 {
            for ch in 0..3 {
                assert!((a.at2(i, ch) - b.at2(i, perm[ch])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let t = Tensor::zeros(&[8, 2]);
        assert!(low_freq_enhance(&t, 0.0, 5.0).is_err());
        assert!(low_freq_enhance(&t, PI, 5.0).is_err());
        assert!(low_freq_enhance(&t, 0.1 * PI, 0.5).is_err());
    }
}
