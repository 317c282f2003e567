//! Model hyperparameters.

use super::DenoiserError;

/// Architecture and sampling configuration for one diffusion stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenoiserConfig {
    /// Token count; power of two so the token axis can be FFT'd.
    pub m: usize,
    pub d_model: usize,
    pub n_blocks: usize,
    pub n_heads: usize,
    pub d_cond: usize,
    /// Euler integration steps; step 1 is the pure-noise end.
    pub steps: usize,
    pub channels_in: usize,
    pub channels_out: usize,
}

impl DenoiserConfig {
    /// Geometry stage defaults.
    pub fn geometry() -> Self {
        Self {
            m: 128,
            d_model: 64,
            n_blocks: 4,
            n_heads: 4,
            d_cond: 16,
            steps: 250,
            channels_in: 3,
            channels_out: 3,
        }
    }

    /// Texture stage defaults: same backbone, colors in and out.
    pub fn texture() -> Self {
        Self::geometry()
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn mlp_dim(&self) -> usize {
        4 * self.d_model
    }

    pub fn validate(&self) -> Result<(), DenoiserError> {
        if !self.m.is_power_of_two() {
            return Err(DenoiserError::BadConfig(format!("M = {} is not a power of two", self.m)));
        }
        if self.d_model == 0 || self.d_model % self.n_heads != 0 {
            return Err(DenoiserError::BadConfig(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.steps < 2 {
            return Err(DenoiserError::BadConfig(format!("steps = {} < 2", self.steps)));
        }
        if self.channels_in == 0 || self.channels_out == 0 || self.d_cond == 0 || self.n_blocks == 0
        {
            return Err(DenoiserError::BadConfig("zero-sized dimension".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        DenoiserConfig::geometry().validate().unwrap();
        DenoiserConfig::texture().validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = DenoiserConfig::geometry();
        c.m = 100;
        assert!(c.validate().is_err());
        let mut c = DenoiserConfig::geometry();
        c.n_heads = 5;
        assert!(c.validate().is_err());
        let mut c = DenoiserConfig::geometry();
        c.steps = 1;
        assert!(c.validate().is_err());
    }
}
