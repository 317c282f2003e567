//! Interpolation-weight schedules.

use super::MorphError;
use crate::numerics::Rng;

/// Sorted interpolation weights in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSchedule {
    pub alphas: Vec<f64>,
}

/// `n` i.i.d. Beta(a, b) draws, sorted ascending, with exact endpoints 0 and
/// 1 added when requested.
pub fn alpha_schedule(
    n: usize,
    beta_a: f64,
    beta_b: f64,
    include_endpoints: bool,
    seed: u64,
) -> Result<AlphaSchedule, MorphError> {
    if n < 2 {
        return Err(MorphError::InvalidConfig(format!("alpha schedule needs n >= 2, got {n}")));
    }
    let mut rng = Rng::new(seed ^ 0x414c_5048_41);
    let mut alphas = Vec::with_capacity(n + 2);
    for _ in 0..n {
        alphas.push(rng.beta(beta_a, beta_b).map_err(|e| MorphError::InvalidConfig(e.to_string()))?);
    }
    if include_endpoints {
        alphas.push(0.0);
        alphas.push(1.0);
    }
    alphas.sort_by(|a, b| a.partial_cmp(b).expect("finite alphas"));
    Ok(AlphaSchedule { alphas })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_present_and_sorted() {
        let s = alpha_schedule(10, 2.0, 2.0, true, 5).unwrap();
        assert_eq!(s.alphas.len(), 12);
        assert_eq!(s.alphas[0], 0.0);
        assert_eq!(*s.alphas.last().unwrap(), 1.0);
        assert!(s.alphas.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = alpha_schedule(10, 2.0, 2.0, true, 9).unwrap();
        let b = alpha_schedule(10, 2.0, 2.0, true, 9).unwrap();
        assert_eq!(a, b);
        let c = alpha_schedule(10, 2.0, 2.0, true, 10).unwrap();
        assert_ne!(a, c);
    }

    /// Beta(1, 1) is uniform: Kolmogorov-Smirnov against U(0,1) at the 1%
    /// level (critical value 1.628/sqrt(n) for large n).
    #[test]
    fn beta_1_1_passes_ks_against_uniform() {
        let n = 2000;
        let s = alpha_schedule(n, 1.0, 1.0, false, 42).unwrap();
        let mut d: f64 = 0.0;
        for (i, &x) in s.alphas.iter().enumerate() {
            let f_hi = (i + 1) as f64 / n as f64;
            let f_lo = i as f64 / n as f64;
            d = d.max((f_hi - x).abs()).max((x - f_lo).abs());
        }
        let critical = 1.628 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} vs critical {critical}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(alpha_schedule(1, 2.0, 2.0, true, 0).is_err());
        assert!(alpha_schedule(10, 0.0, 2.0, true, 0).is_err());
    }
}
