//! Learned condition embeddings: a family table plus a linear projection of
//! the continuous shape parameters, trained jointly with the denoiser.

use super::{ShapeSample, FAMILIES};
use crate::numerics::autodiff::{Tape, Var};
use crate::numerics::{NumericsError, Rng, Tensor};

/// Condition vector for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionEmbedding {
    pub vector: Tensor,
}

/// Trainable embedding parameters: one row per family plus a projection of
/// the (zero-padded) parameter vector.
#[derive(Clone, Debug)]
pub struct ConditionTable {
    /// families x d_cond
    pub family_table: Tensor,
    /// max_params x d_cond
    pub param_proj: Tensor,
}

/// Parameter vectors are padded to this length before projection.
pub const MAX_PARAMS: usize = 3;

impl ConditionTable {
    pub fn init(d_cond: usize, rng: &mut Rng) -> Self {
        Self {
            family_table: rng.gaussian(&[FAMILIES.len(), d_cond]).scale(0.5),
            param_proj: rng.gaussian(&[MAX_PARAMS, d_cond]).scale(0.5),
        }
    }

    pub fn d_cond(&self) -> usize {
        self.family_table.cols()
    }

    /// Embedding of (family, params): table row + projected params.
    pub fn condition_of(&self, sample: &ShapeSample) -> Result<ConditionEmbedding, NumericsError> {
        self.embed(sample.family.id(), &sample.params)
    }

    pub fn embed(&self, family_id: usize, params: &[f64]) -> Result<ConditionEmbedding, NumericsError> {
        if family_id >= self.family_table.rows() {
            return Err(NumericsError::InvalidParameter {
                context: "condition_of",
                detail: format!("unknown family id {family_id}"),
            });
        }
        let padded = pad_params(params);
        let proj = padded.matmul(&self.param_proj)?;
        let row = Tensor::from_vec(&[1, self.d_cond()], self.family_table.row(family_id).to_vec())?;
        Ok(ConditionEmbedding { vector: row.add(&proj)? })
    }

    /// Tape version used during training; gradients flow into both tables.
    pub fn embed_on_tape(
        &self,
        tape: &mut Tape,
        table_var: Var,
        proj_var: Var,
        family_id: usize,
        params: &[f64],
    ) -> Result<Var, NumericsError> {
        let row = tape.embed_row(table_var, family_id)?;
        let padded = tape.leaf(pad_params(params));
        let proj = tape.matmul(padded, proj_var)?;
        tape.add(row, proj)
    }
}

fn pad_params(params: &[f64]) -> Tensor {
    Tensor::from_fn(&[1, MAX_PARAMS], |i| params.get(i).copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{generate, Family};

    #[test]
    fn same_family_and_params_give_identical_embeddings() {
        let mut rng = Rng::new(5);
        let table = ConditionTable::init(16, &mut rng);
        let a = generate(Family::Cone, &[0.5, 1.0], 16, 1).unwrap();
        let b = generate(Family::Cone, &[0.5, 1.0], 16, 2).unwrap();
        assert_eq!(
            table.condition_of(&a).unwrap(),
            table.condition_of(&b).unwrap()
        );
    }

    #[test]
    fn embedding_dimension_matches() {
        let mut rng = Rng::new(6);
        let table = ConditionTable::init(16, &mut rng);
        let s = generate(Family::Sphere, &[0.8, 0.1], 16, 3).unwrap();
        assert_eq!(table.condition_of(&s).unwrap().vector.shape(), &[1, 16]);
    }

    #[test]
    fn unknown_family_errors() {
        let mut rng = Rng::new(7);
        let table = ConditionTable::init(8, &mut rng);
        assert!(table.embed(17, &[0.5]).is_err());
    }
}
