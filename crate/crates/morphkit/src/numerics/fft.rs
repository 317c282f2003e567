//! Real-input FFT with the non-redundant half spectrum.
//!
//! Convention: unnormalized forward, 1/n inverse. Power-of-two lengths use
//! an iterative radix-2 transform; other lengths fall back to the direct
//! O(n^2) DFT.

use super::tensor::Tensor;
use super::NumericsError;

/// Half spectrum of a real signal of length `n`: bins 0..=n/2.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub n: usize,
}

impl Spectrum {
    /// Number of retained bins, floor(n/2)+1.
    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        (self.re[k] * self.re[k] + self.im[k] * self.im[k]).sqrt()
    }

    /// Normalized angular frequency of bin `k`, in radians per sample.
    pub fn omega(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.n as f64
    }
}

/// Forward transform of a real 1-D signal.
pub fn rfft(signal: &Tensor) -> Result<Spectrum, NumericsError> {
    let n = signal.numel();
    if n < 2 {
        return Err(NumericsError::InvalidParameter {
            context: "rfft",
            detail: format!("signal length {n} < 2"),
        });
    }
    let mut re: Vec<f64> = signal.data().to_vec();
    let mut im = vec![0.0; n];
    fft_inplace(&mut re, &mut im, false);
    let bins = n / 2 + 1;
    re.truncate(bins);
    im.truncate(bins);
    // DC (and Nyquist for even n) are exactly real for real input.
    im[0] = 0.0;
    if n % 2 == 0 {
        im[bins - 1] = 0.0;
    }
    Ok(Spectrum { re, im, n })
}

/// Inverse transform back to the real signal.
pub fn irfft(s: &Spectrum) -> Result<Tensor, NumericsError> {
    let n = s.n;
    if n < 2 || s.re.len() != n / 2 + 1 || s.im.len() != n / 2 + 1 {
        return Err(NumericsError::InvalidParameter {
            context: "irfft",
            detail: format!("inconsistent spectrum: n={n}, bins={}", s.re.len()),
        });
    }
    // Rebuild the full spectrum by conjugate symmetry.
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..s.re.len() {
        re[k] = s.re[k];
        im[k] = s.im[k];
    }
    for k in s.re.len()..n {
        re[k] = s.re[n - k];
        im[k] = -s.im[n - k];
    }
    fft_inplace(&mut re, &mut im, true);
    let inv = 1.0 / n as f64;
    Ok(Tensor::from_fn(&[n], |i| re[i] * inv))
}

fn fft_inplace(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    if n.is_power_of_two() {
        radix2(re, im, inverse);
    } else {
        direct_dft(re, im, inverse);
    }
}

fn radix2(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    // Bit-reversal permutation.
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = (i.reverse_bits() >> shift) & (n - 1);
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut m = 2;
    while m <= n {
        let step = sign * 2.0 * std::f64::consts::PI / m as f64;
        for start in (0..n).step_by(m) {
            for k in 0..m / 2 {
                let angle = step * k as f64;
                let (wr, wi) = (angle.cos(), angle.sin());
                let (er, ei) = (re[start + k], im[start + k]);
                let (or_, oi) = (re[start + k + m / 2], im[start + k + m / 2]);
                let tr = wr * or_ - wi * oi;
                let ti = wr * oi + wi * or_;
                re[start + k] = er + tr;
                im[start + k] = ei + ti;
                re[start + k + m / 2] = er - tr;
                im[start + k + m / 2] = ei - ti;
            }
        }
        m <<= 1;
    }
}

fn direct_dft(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for k in 0..n {
        let mut sr = 0.0;
        let mut si = 0.0;
        for j in 0..n {
            let angle = sign * 2.0 * std::f64::consts::PI * (k * j % n) as f64 / n as f64;
            let (c, s) = (angle.cos(), angle.sin());
            sr += re[j] * c - im[j] * s;
            si += re[j] * s + im[j] * c;
        }
        out_re[k] = sr;
        out_im[k] = si;
    }
    re.copy_from_slice(&out_re);
    im.copy_from_slice(&out_im);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::Rng;
    use std::f64::consts::PI;

    /// O(n^2) textbook DFT, kept independent of the transform under test.
    fn oracle_dft(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = x.len();
        let mut re = vec![0.0; n / 2 + 1];
        let mut im = vec![0.0; n / 2 + 1];
        for k in 0..=n / 2 {
            for (j, &v) in x.iter().enumerate() {
                let angle = -2.0 * PI * (k * j) as f64 / n as f64;
                re[k] += v * angle.cos();
                im[k] += v * angle.sin();
            }
        }
        (re, im)
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let c = 1.75;
        let s = rfft(&Tensor::filled(&[8], c)).unwrap();
        assert!((s.re[0] - 8.0 * c).abs() < 1e-12);
        for k in 1..s.bins() {
            assert!(s.magnitude(k) < 1e-12);
        }
    }

    #[test]
    fn pure_tone_hits_single_bin() {
        let n = 32;
        let k = 5;
        let x = Tensor::from_fn(&[n], |j| (2.0 * PI * k as f64 * j as f64 / n as f64).cos());
        let s = rfft(&x).unwrap();
        for bin in 0..s.bins() {
            let mag = s.magnitude(bin);
            if bin == k {
                assert!((mag - n as f64 / 2.0).abs() < 1e-9);
            } else {
                assert!(mag < 1e-9, "bin {bin} leaked {mag}");
            }
        }
    }

    #[test]
    fn matches_direct_dft_oracle() {
        let mut rng = Rng::new(11);
        let x = rng.gaussian(&[16]);
        let s = rfft(&x).unwrap();
        let (ore, oim) = oracle_dft(x.data());
        for k in 0..s.bins() {
            assert!((s.re[k] - ore[k]).abs() < 1e-10);
            assert!((s.im[k] - oim[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn round_trip_identity() {
        let mut rng = Rng::new(4);
        for &n in &[2usize, 8, 16, 128, 12] {
            let x = rng.gaussian(&[n]);
            let back = irfft(&rfft(&x).unwrap()).unwrap();
            for (a, b) in x.data().iter().zip(back.data()) {
                assert!((a - b).abs() < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn parseval_holds() {
        let mut rng = Rng::new(21);
        let n = 64;
        let x = rng.gaussian(&[n]);
        let s = rfft(&x).unwrap();
        let time_energy: f64 = x.data().iter().map(|v| v * v).sum();
        let mut freq_energy = s.magnitude(0).powi(2) + s.magnitude(n / 2).powi(2);
        for k in 1..n / 2 {
            freq_energy += 2.0 * s.magnitude(k).powi(2);
        }
        assert!((time_energy - freq_energy / n as f64).abs() < 1e-9);
    }

    #[test]
    fn rejects_short_signals() {
        assert!(rfft(&Tensor::filled(&[1], 1.0)).is_err());
    }
}
