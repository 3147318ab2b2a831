//! Exact covering and packing counts for finite point sets in dimension 1
//! and 2, by sweep and brute force. These are the set-side counting
//! primitives behind the covering/packing sandwich
//! N_16r <= M_4r <= N_4r <= M_r <= N_r.

use crate::{Error, Result};
use std::collections::HashMap;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn in_ball<'a>(points: &'a [Vec<f64>], x: &[f64], r: f64) -> Vec<&'a Vec<f64>> {
    points.iter().filter(|p| dist(p, x) <= r).collect()
}

const MAX_BRUTE_2D: usize = 12;

/// N_r(B(x,R) cap E): least number of sets of diameter at most r covering the
/// points of E within distance R of x. Exact: greedy sweep in 1D, subset
/// dynamic program in 2D (at most 12 points).
pub fn covering_count(points: &[Vec<f64>], x: &[f64], big_r: f64, small_r: f64) -> Result<usize> {
    if small_r < 0.0 || big_r < 0.0 {
        return Err(Error::InvalidParam("radii must be nonnegative".into()));
    }
    let dim = x.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParam("mixed point dimensions".into()));
    }
    let subset = in_ball(points, x, big_r);
    if subset.is_empty() {
        return Ok(0);
    }
    match dim {
        1 => {
            let mut xs: Vec<f64> = subset.iter().map(|p| p[0]).collect();
            xs.sort_by(f64::total_cmp);
            // Greedy: each group spans at most small_r from its first point;
            // optimal for intervals.
            let mut count = 1usize;
            let mut start = xs[0];
            for &v in &xs[1..] {
                if v - start > small_r {
                    count += 1;
                    start = v;
                }
            }
            Ok(count)
        }
        2 => {
            let n = subset.len();
            if n > MAX_BRUTE_2D {
                return Err(Error::Unsupported(format!(
                    "exact 2D covering is limited to {MAX_BRUTE_2D} points, got {n}"
                )));
            }
            // admissible[mask]: diameter of the subset at most small_r.
            let full = (1usize << n) - 1;
            let mut admissible = vec![true; full + 1];
            for i in 0..n {
                for j in i + 1..n {
                    if dist(subset[i], subset[j]) > small_r {
                        // Every mask containing both i and j is inadmissible.
                        let bad = (1 << i) | (1 << j);
                        let mut mask = bad;
                        loop {
                            admissible[mask] = false;
                            if mask == full {
                                break;
                            }
                            mask = (mask + 1) | bad;
                        }
                    }
                }
            }
            // min_cover[mask] over admissible submasks.
            let mut min_cover = vec![usize::MAX; full + 1];
            min_cover[0] = 0;
            for mask in 1..=full {
                let low = mask.trailing_zeros() as usize;
                // Enumerate submasks containing `low`.
                let rest = mask & !(1 << low);
                let mut sub = rest;
                loop {
                    let candidate = sub | (1 << low);
                    if admissible[candidate] && min_cover[mask & !candidate] != usize::MAX {
                        min_cover[mask] =
                            min_cover[mask].min(min_cover[mask & !candidate] + 1);
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
            }
            Ok(min_cover[full])
        }
        d => Err(Error::Unsupported(format!("covering counts support dimension 1 or 2, got {d}"))),
    }
}

/// M_r(B(x,R)): maximal number of pairwise disjoint closed balls of radius r
/// centred at points within distance R of x. Exact (max independent set) up
/// to 20 candidate centres, greedy lower bound beyond.
pub fn packing_count(points: &[Vec<f64>], x: &[f64], big_r: f64, small_r: f64) -> Result<usize> {
    if small_r < 0.0 || big_r < 0.0 {
        return Err(Error::InvalidParam("radii must be nonnegative".into()));
    }
    let subset = in_ball(points, x, big_r);
    let n = subset.len();
    if n == 0 {
        return Ok(0);
    }
    // Conflict: balls intersect iff centre distance <= 2r.
    let mut adj = vec![0u32; n];
    for i in 0..n {
        for j in i + 1..n {
            if dist(subset[i], subset[j]) <= 2.0 * small_r {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    if n <= 20 {
        let mut memo: HashMap<u32, usize> = HashMap::new();
        Ok(max_independent(((1u64 << n) - 1) as u32, &adj, &mut memo))
    } else {
        // Greedy packing: a valid lower bound.
        let mut taken: Vec<usize> = Vec::new();
        for i in 0..n {
            if taken.iter().all(|&j| adj[j] & (1 << i) == 0) {
                taken.push(i);
            }
        }
        Ok(taken.len())
    }
}

fn max_independent(mask: u32, adj: &[u32], memo: &mut HashMap<u32, usize>) -> usize {
    if mask == 0 {
        return 0;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let v = mask.trailing_zeros() as usize;
    let without = max_independent(mask & !(1 << v), adj, memo);
    let with = 1 + max_independent(mask & !(1 << v) & !adj[v], adj, memo);
    let best = without.max(with);
    memo.insert(mask, best);
    best
}

/// The covering/packing sandwich on one (x, R, r) instance.
pub fn chain_holds(points: &[Vec<f64>], x: &[f64], big_r: f64, r: f64) -> Result<bool> {
    let n16 = covering_count(points, x, big_r, 16.0 * r)?;
    let m4 = packing_count(points, x, big_r, 4.0 * r)?;
    let n4 = covering_count(points, x, big_r, 4.0 * r)?;
    let m1 = packing_count(points, x, big_r, r)?;
    let n1 = covering_count(points, x, big_r, r)?;
    Ok(n16 <= m4 && m4 <= n4 && n4 <= m1 && m1 <= n1)
}

/// Product lower bound for nested packings: M_r(B(x,R)) is at least
/// M_r1(B(x,R-r1)) times the worst-case packing count of each annulus step.
/// Returns (lhs, rhs).
pub fn packing_product_bound(
    points: &[Vec<f64>],
    x: &[f64],
    big_r: f64,
    radii: &[f64],
) -> Result<(usize, usize)> {
    if radii.is_empty() {
        return Err(Error::InvalidParam("need at least one radius".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParam("radii must be strictly decreasing".into()));
    }
    let r = *radii.last().unwrap();
    let lhs = packing_count(points, x, big_r, r)?;
    let mut rhs = packing_count(points, x, big_r - radii[0], radii[0])?;
    for k in 1..radii.len() {
        let inner_radius = radii[k - 1] - radii[k];
        let mut worst = usize::MAX;
        for p in points {
            worst = worst.min(packing_count(points, p, inner_radius, radii[k])?);
        }
        if worst == usize::MAX {
            worst = 0;
        }
        rhs = rhs.saturating_mul(worst);
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts1(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn frozen_three_point_example() {
        // {0, 0.5, 1} with r = 0.4: every pair has diameter >= 0.5, so the
        // cover needs three singletons (confirmed by the 2D brute force too).
        let p = pts1(&[0.0, 0.5, 1.0]);
        assert_eq!(covering_count(&p, &[0.5], 1.0, 0.4).unwrap(), 3);
        let p2: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]];
        assert_eq!(covering_count(&p2, &[0.5, 0.0], 1.0, 0.4).unwrap(), 3);
    }

    #[test]
    fn singletons_and_degenerate_radii() {
        let p = pts1(&[0.3]);
        assert_eq!(covering_count(&p, &[0.0], 1.0, 0.001).unwrap(), 1);
        // r at least the diameter covers with one set.
        let p = pts1(&[0.1, 0.2, 0.9]);
        assert_eq!(covering_count(&p, &[0.5], 1.0, 0.9).unwrap(), 1);
        // Empty intersection.
        assert_eq!(covering_count(&p, &[5.0], 0.5, 0.1).unwrap(), 0);
        assert_eq!(packing_count(&p, &[5.0], 0.5, 0.1).unwrap(), 0);
    }

    #[test]
    fn packing_matches_hand_counts() {
        let p = pts1(&[0.0, 0.1, 0.5, 1.0]);
        // Balls of radius 0.2: centres must be > 0.4 apart: {0, 0.5, 1}.
        assert_eq!(packing_count(&p, &[0.5], 1.0, 0.2).unwrap(), 3);
        // Radius 0.3: centres > 0.6 apart: {0, 1}.
        assert_eq!(packing_count(&p, &[0.5], 1.0, 0.3).unwrap(), 2);
    }

    #[test]
    fn chain_on_random_planar_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for trial in 0..100 {
            let n = rng.random_range(3..=10);
            let points: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
            let x = vec![0.5, 0.5];
            for _ in 0..3 {
                let r = rng.random_range(0.01..0.2);
                assert!(
                    chain_holds(&points, &x, 1.5, r).unwrap(),
                    "trial {trial} r {r}"
                );
            }
        }
    }

    #[test]
    fn packing_product_bound_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(4..=10);
            let points: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
            let x = vec![0.5, 0.5];
            let radii = [0.3, 0.1, 0.04];
            let (lhs, rhs) = packing_product_bound(&points, &x, 1.0, &radii).unwrap();
            assert!(lhs >= rhs, "{lhs} < {rhs}");
        }
    }

    #[test]
    fn dimension_three_is_unsupported() {
        let p = vec![vec![0.0, 0.0, 0.0]];
        assert!(matches!(
            covering_count(&p, &[0.0, 0.0, 0.0], 1.0, 0.5),
            Err(Error::Unsupported(_))
        ));
    }
}
