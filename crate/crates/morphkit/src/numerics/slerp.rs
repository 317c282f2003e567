//! Spherical linear interpolation over whole tensors.

use super::tensor::Tensor;
use super::NumericsError;

/// Plain linear interpolation.
pub fn lerp(u: &Tensor, v: &Tensor, t: f64) -> Result<Tensor, NumericsError> {
    u.scale(1.0 - t).add(&v.scale(t))
}

/// Great-circle interpolation between `u` and `v`, treating each tensor as
/// one flat vector. Falls back to lerp when the angle (or its complement)
/// is below 1e-6, where the sine ratio degenerates.
pub fn slerp(u: &Tensor, v: &Tensor, t: f64) -> Result<Tensor, NumericsError> {
    if u.shape() != v.shape() {
        return Err(NumericsError::ShapeMismatch {
            context: "slerp",
            detail: format!("{:?} vs {:?}", u.shape(), v.shape()),
        });
    }
    // Endpoints are returned exactly.
    if t == 0.0 {
        return Ok(u.clone());
    }
    if t == 1.0 {
        return Ok(v.clone());
    }
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(NumericsError::ZeroNorm { context: "slerp" });
    }
    let cos_theta = (u.dot(v)? / (nu * nv)).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    if theta < 1e-6 || theta.sin().abs() < 1e-6 {
        return lerp(u, v, t);
    }
    let s = theta.sin();
    let a = ((1.0 - t) * theta).sin() / s;
    let b = (t * theta).sin() / s;
    u.scale(a).add(&v.scale(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::Rng;

    #[test]
    fn endpoints_exact() {
        let mut rng = Rng::new(1);
        let u = rng.gaussian(&[12]);
        let v = rng.gaussian(&[12]);
        assert_eq!(slerp(&u, &v, 0.0).unwrap(), u);
        assert_eq!(slerp(&u, &v, 1.0).unwrap(), v);
    }

    #[test]
    fn quarter_great_circle() {
        let u = Tensor::from_vec(&[2], vec![1.0, 0.0]).unwrap();
        let v = Tensor::from_vec(&[2], vec![0.0, 1.0]).unwrap();
        let mid = slerp(&u, &v, 0.5).unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((mid.data()[0] - inv_sqrt2).abs() < 1e-12);
        assert!((mid.data()[1] - inv_sqrt2).abs() < 1e-12);
        assert!((mid.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_inputs_stay_on_sphere() {
        let mut rng = Rng::new(8);
        for _ in 0..10 {
            let u = rng.gaussian(&[32]);
            let v = rng.gaussian(&[32]);
            let u = u.scale(1.0 / u.norm());
            let v = v.scale(1.0 / v.norm());
            for step in 0..=10 {
                let t = step as f64 / 10.0;
                let r = slerp(&u, &v, t).unwrap();
                assert!((r.norm() - 1.0).abs() < 1e-9, "t={t}");
            }
        }
    }

    #[test]
    fn near_parallel_falls_back_to_lerp() {
        let u = Tensor::from_vec(&[3], vec![1.0, 0.0, 0.0]).unwrap();
        let v = Tensor::from_vec(&[3], vec![1.0 + 1e-9, 1e-9, 0.0]).unwrap();
        let r = slerp(&u, &v, 0.5).unwrap();
        assert!(r.is_finite());
        assert!((r.data()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_norm_errors() {
        let u = Tensor::zeros(&[3]);
        let v = Tensor::filled(&[3], 1.0);
        assert!(slerp(&u, &v, 0.5).is_err());
    }
}
