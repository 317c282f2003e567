//! Seeded, counter-based random number generation.
//!
//! Every draw is a pure function of (seed, counter), so streams are
//! reproducible regardless of how many values were taken before a fork.

use super::tensor::Tensor;
use super::NumericsError;

/// Deterministic generator: splitmix64 over an incrementing counter,
/// Gaussians via Box-Muller.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    counter: u64,
    cached_gaussian: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0, cached_gaussian: None }
    }

    /// Independent child stream; `tag` separates substreams of one seed.
    pub fn fork(&self, tag: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))))
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = splitmix64(self.seed.wrapping_add(self.counter.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn range(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller; the paired value is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.cached_gaussian.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }

    /// I.i.d. standard-normal tensor.
    pub fn gaussian(&mut self, shape: &[usize]) -> Tensor {
        Tensor::from_fn(shape, |_| self.normal())
    }

    /// Gamma(shape) via Marsaglia-Tsang squeeze, boosted for shape < 1.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let u = self.uniform();
            return self.gamma(shape + 1.0) * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v3 = v * v * v;
            let u = self.uniform();
            if u < 1.0 - 0.0331 * x.powi(4) {
                return d * v3;
            }
            if u.ln() < 0.5 * x * x + d * (1.0 - v3 + v3.ln()) {
                return d * v3;
            }
        }
    }

    /// Beta(a, b) draw.
    pub fn beta(&mut self, a: f64, b: f64) -> Result<f64, NumericsError> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(NumericsError::InvalidParameter {
                context: "beta",
                detail: format!("a={a}, b={b}"),
            });
        }
        let x = self.gamma(a);
        let y = self.gamma(b);
        Ok(x / (x + y))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let a = Rng::new(123).gaussian(&[64]);
        let b = Rng::new(123).gaussian(&[64]);
        assert_eq!(a, b);
    }

    #[test]
    fn adjacent_seeds_differ() {
        let a = Rng::new(5).gaussian(&[16]);
        let b = Rng::new(6).gaussian(&[16]);
        assert_ne!(a, b);
    }

    #[test]
    fn gaussian_moments() {
        let n = 1_000_000;
        let mut rng = Rng::new(2024);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = rng.normal();
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn beta_rejects_bad_params() {
        let mut rng = Rng::new(1);
        assert!(rng.beta(0.0, 1.0).is_err());
        assert!(rng.beta(2.0, -1.0).is_err());
    }

    #[test]
    fn beta_stays_in_unit_interval() {
        let mut rng = Rng::new(77);
        for _ in 0..500 {
            let v = rng.beta(2.0, 2.0).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn fork_streams_are_independent_of_parent_position() {
        let parent = Rng::new(9);
        let mut a = parent.fork(1);
        let mut advanced = Rng::new(9);
        advanced.normal();
        let mut b = advanced.fork(1);
        assert_eq!(a.next_u64(), b.next_u64());
    }
}
