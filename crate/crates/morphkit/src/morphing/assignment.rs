//! Exact minimum-cost assignment (Hungarian algorithm, shortest augmenting
//! path formulation, O(n^3)). Ties resolve to the lowest column index via
//! strict-improvement scans, so results are deterministic.

use super::MorphError;
use crate::numerics::Tensor;

/// A bijection j -> sigma(j) with its assignment cost.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenPermutation {
    pub sigma: Vec<usize>,
    pub cost: f64,
}

impl TokenPermutation {
    pub fn identity(n: usize) -> Self {
        Self { sigma: (0..n).collect(), cost: 0.0 }
    }
}

/// Exact solver: minimizes sum_i cost[i][sigma(i)] over permutations.
pub fn solve_assignment(cost: &Tensor) -> Result<TokenPermutation, MorphError> {
    let shape = cost.shape();
    if shape.len() != 2 || shape[0] != shape[1] {
        return Err(MorphError::InvalidConfig(format!(
            "assignment needs a square matrix, got {shape:?}"
        )));
    }
    if !cost.is_finite() {
        return Err(MorphError::InvalidConfig("non-finite assignment costs".into()));
    }
    let n = shape[0];
    let c = cost.data();

    // Potentials and matching over 1-based columns; column 0 is a sentinel.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut sigma = vec![0usize; n];
    for j in 1..=n {
        sigma[matched_row[j] - 1] = j - 1;
    }
    let total: f64 = (0..n).map(|i| c[i * n + sigma[i]]).sum();
    Ok(TokenPermutation { sigma, cost: total })
}

/// Greedy row-by-row matcher; profiling aid only, not the default path.
pub fn greedy_assignment(cost: &Tensor) -> Result<TokenPermutation, MorphError> {
    let shape = cost.shape();
    if shape.len() != 2 || shape[0] != shape[1] {
        return Err(MorphError::InvalidConfig(format!(
            "assignment needs a square matrix, got {shape:?}"
        )));
    }
    if !cost.is_finite() {
        return Err(MorphError::InvalidConfig("non-finite assignment costs".into()));
    }
    let n = shape[0];
    let mut taken = vec![false; n];
    let mut sigma = vec![0usize; n];
    let mut total = 0.0;
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut bj = usize::MAX;
        for j in 0..n {
            if !taken[j] && cost.at2(i, j) < best {
                best = cost.at2(i, j);
                bj = j;
            }
        }
        taken[bj] = true;
        sigma[i] = bj;
        total += best;
    }
    Ok(TokenPermutation { sigma, cost: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn exhaustive_min(cost: &Tensor) -> f64 {
        let n = cost.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = (0..n).map(|i| cost.at2(i, p[i])).sum();
            if c < best {
                best = c;
            }
        });
        best
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn recovers_planted_permutation() {
        let planted = [2usize, 0, 3, 1];
        let cost = Tensor::from_fn(&[4, 4], |idx| {
            let (i, j) = (idx / 4, idx % 4);
            if planted[i] == j {
                0.0
            } else {
                1.0
            }
        });
        let sol = solve_assignment(&cost).unwrap();
        assert_eq!(sol.sigma, planted);
        assert_eq!(sol.cost, 0.0);
    }

    #[test]
    fn diagonal_dominant_gives_identity() {
        let cost = Tensor::from_fn(&[5, 5], |idx| {
            let (i, j) = (idx / 5, idx % 5);
            if i == j {
                0.1
            } else {
                1.0 + (i * 5 + j) as f64 * 0.01
            }
        });
        let sol = solve_assignment(&cost).unwrap();
        assert_eq!(sol.sigma, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn all_equal_costs_tie_break_to_identity() {
        let cost = Tensor::filled(&[4, 4], 1.0);
        let sol = solve_assignment(&cost).unwrap();
        assert_eq!(sol.sigma, vec![0, 1, 2, 3]);
    }

    #[test]
    fn matches_exhaustive_on_random_5x5_and_7x7() {
        for seed in 0..100u64 {
            let mut rng = Rng::new(seed);
            let cost = rng.gaussian(&[5, 5]).map(|v| v.abs());
            let sol = solve_assignment(&cost).unwrap();
            let best = exhaustive_min(&cost);
            assert!((sol.cost - best).abs() < 1e-9, "seed {seed}: {} vs {best}", sol.cost);
        }
        for seed in 0..20u64 {
            let mut rng = Rng::new(seed + 1000);
            let cost = rng.gaussian(&[7, 7]).map(|v| v.abs());
            let sol = solve_assignment(&cost).unwrap();
            let best = exhaustive_min(&cost);
            assert!((sol.cost - best).abs() < 1e-9, "seed {seed}: {} vs {best}", sol.cost);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_assignment(&Tensor::zeros(&[3, 4])).is_err());
        let bad = Tensor::from_vec(&[2, 2], vec![0.0, f64::NAN, 1.0, 0.0]).unwrap();
        assert!(solve_assignment(&bad).is_err());
    }

    #[test]
    fn cost_invariant_under_simultaneous_permutation() {
        let mut rng = Rng::new(77);
        let cost = rng.gaussian(&[6, 6]).map(|v| v.abs());
        let base = solve_assignment(&cost).unwrap();
        // Relabel rows and columns by the same random permutation.
        let perm = [3usize, 0, 5, 1, 4, 2];
        let relabeled = Tensor::from_fn(&[6, 6], |idx| {
            let (i, j) = (idx / 6, idx % 6);
            cost.at2(perm[i], perm[j])
        });
        let sol = solve_assignment(&relabeled).unwrap();
        assert!((sol.cost - base.cost).abs() < 1e-9);
    }
}
