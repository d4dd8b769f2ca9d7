//! Assignment-based multi-target distance and cardinality bookkeeping.

use crate::gaussian::MeasVector;
use thiserror::Error;

/// Reported positions compared by the set metric.
pub type PointSet = Vec<MeasVector>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric order must be at least 1, got {0}")]
    BadOrder(f64),
    #[error("cutoff must be positive, got {0}")]
    BadCutoff(f64),
    #[error("series lengths differ: {truth} truth steps vs {estimated} estimate steps")]
    LengthMismatch { truth: usize, estimated: usize },
}

/// Order and cutoff of the optimal-subpattern-assignment distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaParams {
    p: f64,
    cutoff: f64,
}

impl OspaParams {
    pub fn new(p: f64, cutoff: f64) -> Result<Self, MetricError> {
        if !(p >= 1.0) {
            return Err(MetricError::BadOrder(p));
        }
        if !(cutoff > 0.0) {
            return Err(MetricError::BadCutoff(cutoff));
        }
        Ok(Self { p, cutoff })
    }

    pub fn order(&self) -> f64 {
        self.p
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

/// Minimum-cost assignment of the smaller side of `cost` into the larger.
///
/// Returns one `(row, col)` pair per element of the smaller dimension. Ties
/// between equal-cost assignments are broken deterministically.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    if rows == 0 || cost[0].is_empty() {
        return Vec::new();
    }
    let cols = cost[0].len();
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| cost[r][c]).collect())
            .collect();
        return hungarian(&transposed)
            .into_iter()
            .map(|(r, c)| (c, r))
            .collect();
    }

    // Shortest augmenting path formulation with row/column potentials,
    // 1-indexed with column 0 as the virtual start.
    let mut u = vec![0.0_f64; rows + 1];
    let mut v = vec![0.0_f64; cols + 1];
    let mut matched_row = vec![0_usize; cols + 1];
    for r in 1..=rows {
        let mut min_slack = vec![f64::INFINITY; cols + 1];
        let mut predecessor = vec![0_usize; cols + 1];
        let mut visited = vec![false; cols + 1];
        let mut col = 0_usize;
        matched_row[0] = r;
        loop {
            visited[col] = true;
            let row = matched_row[col];
            let mut delta = f64::INFINITY;
            let mut next_col = 0;
            for c in 1..=cols {
                if visited[c] {
                    continue;
                }
                let slack = cost[row - 1][c - 1] - u[row] - v[c];
                if slack < min_slack[c] {
                    min_slack[c] = slack;
                    predecessor[c] = col;
                }
                if min_slack[c] < delta {
                    delta = min_slack[c];
                    next_col = c;
                }
            }
            for c in 0..=cols {
                if visited[c] {
                    u[matched_row[c]] += delta;
                    v[c] -= delta;
                } else {
                    min_slack[c] -= delta;
                }
            }
            col = next_col;
            if matched_row[col] == 0 {
                break;
            }
        }
        while col != 0 {
            let prev = predecessor[col];
            matched_row[col] = matched_row[prev];
            col = prev;
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=cols)
        .filter(|&c| matched_row[c] != 0)
        .map(|c| (matched_row[c] - 1, c - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Optimal-subpattern-assignment distance between two position sets.
///
/// Per-pair distances are capped at the cutoff, the optimal matching of the
/// smaller set into the larger is charged, and each unmatched point in the
/// larger set is charged the full cutoff.
pub fn ospa(x: &[MeasVector], y: &[MeasVector], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    let m = small.len();
    let c_pow = params.cutoff.powf(params.p);
    if m == 0 {
        return params.cutoff;
    }

    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| {
            large
                .iter()
                .map(|b| (a - b).norm().min(params.cutoff).powf(params.p))
                .collect()
        })
        .collect();
    let matched: f64 = hungarian(&cost).iter().map(|&(r, c)| cost[r][c]).sum();
    ((matched + c_pow * (n - m) as f64) / n as f64).powf(1.0 / params.p)
}

/// Pairs per-step truth counts with estimated cardinalities.
pub fn cardinality_series(
    truth: &[usize],
    estimated: &[f64],
) -> Result<Vec<(usize, f64)>, MetricError> {
    if truth.len() != estimated.len() {
        return Err(MetricError::LengthMismatch {
            truth: truth.len(),
            estimated: estimated.len(),
        });
    }
    Ok(truth.iter().copied().zip(estimated.iter().copied()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::Vector2;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(p: f64, c: f64) -> OspaParams {
        OspaParams::new(p, c).unwrap()
    }

    /// Exhaustive minimum assignment cost over all injections of rows into
    /// columns, for cross-checking the polynomial solver.
    fn brute_force_cost(cost: &[Vec<f64>]) -> f64 {
        fn recurse(cost: &[Vec<f64>], row: usize, used: &mut [bool]) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    let total = cost[row][c] + recurse(cost, row + 1, used);
                    best = best.min(total);
                    used[c] = false;
                }
            }
            best
        }
        let cols = cost.first().map_or(0, Vec::len);
        recurse(cost, 0, &mut vec![false; cols])
    }

    #[test]
    fn hungarian_single_cell() {
        let pairs = hungarian(&[vec![7.0]]);
        assert_eq!(pairs, vec![(0, 0)]);
    }

    #[test]
    fn hungarian_prefers_cheap_diagonal() {
        let cost = vec![
            vec![1.0, 10.0, 10.0],
            vec![10.0, 1.0, 10.0],
            vec![10.0, 10.0, 1.0],
        ];
        assert_eq!(hungarian(&cost), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn hungarian_matches_brute_force_on_random_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let cost: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..5).map(|_| rng.random_range(0.0..100.0)).collect())
                .collect();
            let total: f64 = hungarian(&cost).iter().map(|&(r, c)| cost[r][c]).sum();
            assert_relative_eq!(total, brute_force_cost(&cost), max_relative = 1e-12);
        }
    }

    #[test]
    fn hungarian_handles_rectangles_both_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let rows = rng.random_range(1..5_usize);
            let cols = rng.random_range(1..5_usize);
            let cost: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(0.0..50.0)).collect())
                .collect();
            let pairs = hungarian(&cost);
            assert_eq!(pairs.len(), rows.min(cols));
            let total: f64 = pairs.iter().map(|&(r, c)| cost[r][c]).sum();
            let oracle = if rows <= cols {
                brute_force_cost(&cost)
            } else {
                let t: Vec<Vec<f64>> = (0..cols)
                    .map(|c| (0..rows).map(|r| cost[r][c]).collect())
                    .collect();
                brute_force_cost(&t)
            };
            assert_relative_eq!(total, oracle, max_relative = 1e-12);
        }
    }

    #[test]
    fn ospa_identical_sets_is_zero() {
        let x = vec![Vector2::new(1.0, 2.0), Vector2::new(-3.0, 4.0)];
        assert_abs_diff_eq!(ospa(&x, &x, &params(1.0, 100.0)), 0.0);
    }

    #[test]
    fn ospa_both_empty_is_zero() {
        assert_abs_diff_eq!(ospa(&[], &[], &params(1.0, 100.0)), 0.0);
    }

    #[test]
    fn ospa_single_point_vs_empty_is_cutoff() {
        let x = vec![Vector2::zeros()];
        assert_abs_diff_eq!(ospa(&x, &[], &params(1.0, 100.0)), 100.0);
        assert_abs_diff_eq!(ospa(&[], &x, &params(1.0, 100.0)), 100.0);
    }

    #[test]
    fn ospa_equal_cardinality_is_plain_distance() {
        let x = vec![Vector2::new(0.0, 0.0)];
        let y = vec![Vector2::new(3.0, 4.0)];
        assert_abs_diff_eq!(ospa(&x, &y, &params(1.0, 100.0)), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn ospa_cardinality_mismatch_charges_cutoff_share() {
        let x = vec![Vector2::zeros()];
        let y = vec![Vector2::zeros(), Vector2::new(1.0e6, 1.0e6)];
        assert_abs_diff_eq!(ospa(&x, &y, &params(1.0, 100.0)), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn ospa_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = params(1.0, 100.0);
        for _ in 0..50 {
            let x: Vec<Vector2<f64>> = (0..rng.random_range(0..6_usize))
                .map(|_| Vector2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)))
                .collect();
            let y: Vec<Vector2<f64>> = (0..rng.random_range(0..6_usize))
                .map(|_| Vector2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)))
                .collect();
            let d_xy = ospa(&x, &y, &p);
            let d_yx = ospa(&y, &x, &p);
            assert_abs_diff_eq!(d_xy, d_yx, epsilon = 1e-12);
            assert!((0.0..=100.0 + 1e-12).contains(&d_xy));
        }
    }

    #[test]
    fn ospa_satisfies_sampled_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let p = params(1.0, 100.0);
        let random_set = |rng: &mut ChaCha8Rng| -> Vec<Vector2<f64>> {
            (0..rng.random_range(0..5_usize))
                .map(|_| Vector2::new(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0)))
                .collect()
        };
        for _ in 0..100 {
            let x = random_set(&mut rng);
            let y = random_set(&mut rng);
            let z = random_set(&mut rng);
            assert!(ospa(&x, &z, &p) <= ospa(&x, &y, &p) + ospa(&y, &z, &p) + 1e-9);
        }
    }

    #[test]
    fn cardinality_series_zips_matching_lengths() {
        let out = cardinality_series(&[16, 16, 15], &[15.2, 16.1, 14.9]).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].0, 16);
        assert_abs_diff_eq!(out[2].1, 14.9);
    }

    #[test]
    fn cardinality_series_rejects_length_mismatch() {
        assert!(matches!(
            cardinality_series(&[16, 16], &[15.0]),
            Err(MetricError::LengthMismatch {
                truth: 2,
                estimated: 1
            })
        ));
    }

    #[test]
    fn ospa_params_validation() {
        assert!(matches!(OspaParams::new(0.5, 100.0), Err(MetricError::BadOrder(_))));
        assert!(matches!(OspaParams::new(1.0, 0.0), Err(MetricError::BadCutoff(_))));
    }
}
