//! Token reordering: align one stream's token sequence to the other by
//! minimum-cost matching on L2 token distance.

use super::assignment::{solve_assignment, TokenPermutation};
use super::MorphError;
use crate::numerics::Tensor;

/// Which sequence was permuted.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ReorderedSide {
    Target,
    Source,
}

/// Result of one reordering: the (src, tgt) sequences after alignment, the
/// permutation applied, and which side it was applied to.
#[derive(Clone, Debug)]
pub struct Reordering {
    pub src: Tensor,
    pub tgt: Tensor,
    pub perm: TokenPermutation,
    pub side: ReorderedSide,
}

/// Pairwise L2 distances between rows of `a` and rows of `b`.
pub fn token_distance_matrix(a: &Tensor, b: &Tensor) -> Result<Tensor, MorphError> {
    if a.shape() != b.shape() || a.shape().len() != 2 {
        return Err(MorphError::InvalidConfig(format!(
            "token sequences must share shape, got {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let n = a.rows();
    // ||x - y||^2 = ||x||^2 + ||y||^2 - 2 x.y, clamped against rounding.
    let gram = a.matmul_nt(b).map_err(MorphError::from)?;
    let sq = |t: &Tensor, i: usize| t.row(i).iter().map(|v| v * v).sum::<f64>();
    let a_sq: Vec<f64> = (0..n).map(|i| sq(a, i)).collect();
    let b_sq: Vec<f64> = (0..n).map(|j| sq(b, j)).collect();
    Ok(Tensor::from_fn(&[n, n], |idx| {
        let (i, j) = (idx / n, idx % n);
        (a_sq[i] + b_sq[j] - 2.0 * gram.at2(i, j)).max(0.0).sqrt()
    }))
}

/// For alpha < 0.5 the target sequence is reordered to match the source
/// (`tgt'[j] = tgt[sigma(j)]` minimizing sum_j ||src_j - tgt_sigma(j)||);
/// for alpha >= 0.5 the roles swap. The untouched side is returned as-is.
pub fn reorder_tokens(
    seq_src: &Tensor,
    seq_tgt: &Tensor,
    alpha: f64,
) -> Result<Reordering, MorphError> {
    if alpha < 0.5 {
        let cost = token_distance_matrix(seq_src, seq_tgt)?;
        let perm = solve_assignment(&cost)?;
        let tgt = seq_tgt.permute_rows(&perm.sigma)?;
        Ok(Reordering { src: seq_src.clone(), tgt, perm, side: ReorderedSide::Target })
    } else {
        let cost = token_distance_matrix(seq_tgt, seq_src)?;
        let perm = solve_assignment(&cost)?;
        let src = seq_src.permute_rows(&perm.sigma)?;
        Ok(Reordering { src, tgt: seq_tgt.clone(), perm, side: ReorderedSide::Source })
    }
}

/// Alignment cost at matching positions.
pub fn positional_cost(a: &Tensor, b: &Tensor) -> f64 {
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(b.row(i))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn recovers_planted_permutation_with_zero_cost() {
        let mut rng = Rng::new(1);
        let src = rng.gaussian(&[8, 4]);
        let planted = [5usize, 2, 7, 0, 3, 6, 1, 4];
        // tgt[p] = src[planted[p]]? Construct tgt as a shuffle of src rows.
        let tgt = src.permute_rows(&planted).unwrap();
        let r = reorder_tokens(&src, &tgt, 0.2).unwrap();
        assert_eq!(r.side, ReorderedSide::Target);
        assert_eq!(r.src, src);
        assert_eq!(r.tgt, src, "reordering must realign the shuffled copy");
        assert!(r.perm.cost < 1e-12);
        assert!(positional_cost(&r.src, &r.tgt) < 1e-12);
    }

    #[test]
    fn identical_sequences_give_identity() {
        let mut rng = Rng::new(2);
        let seq = rng.gaussian(&[6, 3]);
        let r = reorder_tokens(&seq, &seq, 0.0).unwrap();
        let n = seq.rows();
        assert_eq!(r.perm.sigma, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn never_increases_positional_cost() {
        let mut rng = Rng::new(3);
        for trial in 0..20 {
            let src = rng.gaussian(&[12, 5]);
            let tgt = rng.gaussian(&[12, 5]);
            let before = positional_cost(&src, &tgt);
            let r = reorder_tokens(&src, &tgt, 0.3).unwrap();
            let after = positional_cost(&r.src, &r.tgt);
            assert!(after <= before + 1e-9, "trial {trial}: {after} > {before}");
        }
    }

    #[test]
    fn alpha_decides_which_side_moves() {
        let mut rng = Rng::new(4);
        let src = rng.gaussian(&[6, 3]);
        let tgt = rng.gaussian(&[6, 3]);
        let low = reorder_tokens(&src, &tgt, 0.49).unwrap();
        assert_eq!(low.side, ReorderedSide::Target);
        assert_eq!(low.src, src, "source must be untouched below 0.5");
        let high = reorder_tokens(&src, &tgt, 0.5).unwrap();
        assert_eq!(high.side, ReorderedSide::Source);
        assert_eq!(high.tgt, tgt, "target must be untouched at or above 0.5");
    }

    #[test]
    fn length_mismatch_errors() {
        let a = Tensor::zeros(&[4, 3]);
        let b = Tensor::zeros(&[5, 3]);
        assert!(reorder_tokens(&a, &b, 0.1).is_err());
    }
}
