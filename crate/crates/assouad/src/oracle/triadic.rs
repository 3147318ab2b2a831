//! Triadic measure with coinciding upper and lower Assouad dimensions but no
//! s-regularity: mass 3^-k (3/2 + k) on the all-ones cylinder of depth k
//! (normalized by 3/2), uniform within every branch leaving the chain. The
//! k-dependent factor is unbounded relative to 3^-k, which kills regularity
//! while all dimension-relevant mass ratios stay within constants.

use super::{MassBounds, MeasureOracle};
use crate::rational::{parse_rational, pow_inv};
use crate::{Error, Result};
use num::{BigInt, BigRational, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct TriadicOracle {
    depth_cap: u32,
}

impl TriadicOracle {
    pub fn new(depth_cap: u32) -> Self {
        TriadicOracle { depth_cap: depth_cap.max(8) }
    }

    /// Pre-normalization mass of the all-ones cylinder of depth k:
    /// 3^-k (3/2 + k).
    pub fn raw_chain_mass(k: u32) -> BigRational {
        let three_halves = parse_rational("3/2").unwrap();
        pow_inv(3, k) * (three_halves + BigRational::from(BigInt::from(k)))
    }

    /// Pre-normalization mass of an arbitrary triadic cylinder.
    pub fn raw_cylinder_mass(word: &[u8]) -> BigRational {
        let k = word.iter().take_while(|&&d| d == 1).count() as u32;
        if k as usize == word.len() {
            return Self::raw_chain_mass(k);
        }
        // word = 1^(k) j v with j in {0,2}: mass (k+1) 3^-(k+1+l).
        let l = (word.len() - k as usize - 1) as u32;
        BigRational::from(BigInt::from(k + 1)) * pow_inv(3, k + 1 + l)
    }

    /// Normalized mass of [a, b] (clamped to [0,1]); exact unless the
    /// boundary cuts the all-ones chain below the depth cap.
    pub fn interval_mass(&self, a: &BigRational, b: &BigRational) -> MassBounds {
        let zero = BigRational::zero();
        let one = BigRational::one();
        let a = if *a < zero { zero.clone() } else { a.clone() };
        let b = if *b > one { one.clone() } else { b.clone() };
        if a >= b {
            return MassBounds::zero();
        }
        let raw = self.node_mass(0, &zero, &one, &a, &b);
        let norm = parse_rational("2/3").unwrap();
        MassBounds { lower: raw.lower * &norm, upper: raw.upper * &norm }
    }

    /// Raw mass of the chain node at `depth` intersected with [a, b].
    fn node_mass(
        &self,
        depth: u32,
        lo: &BigRational,
        width: &BigRational,
        a: &BigRational,
        b: &BigRational,
    ) -> MassBounds {
        let hi = lo + width;
        if *b <= *lo || *a >= hi {
            return MassBounds::zero();
        }
        let mass = Self::raw_chain_mass(depth);
        if *a <= *lo && hi <= *b {
            return MassBounds::exact(mass);
        }
        if depth == self.depth_cap {
            return MassBounds { lower: BigRational::zero(), upper: mass };
        }
        let third = width / BigRational::from(BigInt::from(3));
        let branch_mass = BigRational::from(BigInt::from(depth + 1)) * pow_inv(3, depth + 1);
        let mut total = MassBounds::zero();
        // Children: uniform, chain, uniform.
        for (idx, child_lo) in
            [lo.clone(), lo + &third, lo + &(&third + &third)].into_iter().enumerate()
        {
            if idx == 1 {
                total = total.add(&self.node_mass(depth + 1, &child_lo, &third, a, b));
            } else {
                total = total.add(&uniform_overlap(&child_lo, &third, &branch_mass, a, b));
            }
        }
        total
    }
}

fn uniform_overlap(
    lo: &BigRational,
    width: &BigRational,
    mass: &BigRational,
    a: &BigRational,
    b: &BigRational,
) -> MassBounds {
    let hi = lo + width;
    if *b <= *lo || *a >= hi {
        return MassBounds::zero();
    }
    let cut_lo = if a > lo { a.clone() } else { lo.clone() };
    let cut_hi = if *b < hi { b.clone() } else { hi };
    MassBounds::exact(&(mass * &(&cut_hi - &cut_lo)) / width)
}

impl MeasureOracle for TriadicOracle {
    fn name(&self) -> &'static str {
        "triadic"
    }

    fn ball_mass(&self, x: &BigRational, r: &BigRational) -> Result<MassBounds> {
        if !r.is_positive() {
            return Err(Error::InvalidParam("radius must be positive".into()));
        }
        if *r < self.natural_scale(self.depth_cap) {
            return Err(Error::BelowDepthCap { requested: self.depth_cap + 1, cap: self.depth_cap });
        }
        Ok(self.interval_mass(&(x - r), &(x + r)))
    }

    fn support_points(&self, seed: u64, count: usize) -> Vec<BigRational> {
        // Support is [0,1]; include the endpoints and the all-ones point 1/2,
        // then stratified triadic midpoints and seeded random triadics.
        let half = parse_rational("1/2").unwrap();
        let mut pts = vec![BigRational::zero(), BigRational::one(), half];
        let mut denom = BigInt::from(9);
        while pts.len() < count / 2 + 3 {
            let d: i64 = (&denom).try_into().unwrap_or(i64::MAX);
            for i in 0..d.min(32) {
                pts.push(BigRational::new(BigInt::from(2 * i + 1), 2 * denom.clone()));
                if pts.len() >= count / 2 + 3 {
                    break;
                }
            }
            denom *= 9;
            if denom > BigInt::from(1_000_000) {
                break;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = (self.depth_cap / 2).clamp(6, 24);
        let scale = BigInt::from(3).pow(depth);
        while pts.len() < count {
            let num_max: i64 = (&scale).try_into().unwrap_or(i64::MAX);
            let numer = rng.random_range(0..num_max.max(2));
            pts.push(BigRational::new(
                BigInt::from(2 * numer + 1),
                2 * scale.clone(),
            ));
        }
        pts.truncate(count.max(3));
        pts
    }

    fn natural_scale(&self, level: u32) -> BigRational {
        pow_inv(3, level)
    }

    fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    fn is_exact(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rational_to_f64;

    #[test]
    fn chain_mass_closed_form() {
        // k = 3: 3^-3 * (3/2 + 3) = 1/6.
        assert_eq!(TriadicOracle::raw_chain_mass(3), parse_rational("1/6").unwrap());
        // Recursion S_k = 2 (k+1) 3^-(k+1) + S_(k+1), exact for k <= 20.
        for k in 0..=20u32 {
            let lhs = TriadicOracle::raw_chain_mass(k);
            let branch = BigRational::from(BigInt::from(k + 1)) * pow_inv(3, k + 1);
            let rhs = &(&branch + &branch) + &TriadicOracle::raw_chain_mass(k + 1);
            assert_eq!(lhs, rhs, "k = {k}");
        }
    }

    #[test]
    fn normalization_gives_probability_measure() {
        let o = TriadicOracle::new(24);
        let m = o.interval_mass(&BigRational::zero(), &BigRational::one());
        assert_eq!(m, MassBounds::exact(BigRational::one()));
    }

    #[test]
    fn cylinder_sandwich_inequalities_exact() {
        // (ineq1): (k+1) 3^-(k+l) <= mu(M_(1^k w)) <= 3^-(k+l) (3/2 + k + l),
        // exhaustively over w of length l <= 4.
        for k in 0..=20u32 {
            for l in 1..=4u32 {
                let lo = BigRational::from(BigInt::from(k + 1)) * pow_inv(3, k + l);
                let hi = TriadicOracle::raw_chain_mass(k + l);
                let mut word = vec![1u8; k as usize];
                word.extend(vec![0u8; l as usize]);
                // Enumerate all suffixes of length l.
                let mut done = false;
                while !done {
                    let m = TriadicOracle::raw_cylinder_mass(&word);
                    assert!(m >= lo, "k={k} l={l} w={:?}", &word[k as usize..]);
                    assert!(m <= hi, "k={k} l={l} w={:?}", &word[k as usize..]);
                    // Increment the suffix as a base-3 counter.
                    done = true;
                    for d in word[k as usize..].iter_mut().rev() {
                        if *d < 2 {
                            *d += 1;
                            done = false;
                            break;
                        }
                        *d = 0;
                    }
                }
            }
        }
        // (ineq2): mu(M_(1^k)) / mu(M_(1^(k-1) j)) = (3/2 + k)/k <= 5/2.
        let five_halves = parse_rational("5/2").unwrap();
        for k in 1..=20u32 {
            let chain = TriadicOracle::raw_chain_mass(k);
            let sibling = TriadicOracle::raw_cylinder_mass(
                &[vec![1u8; (k - 1) as usize], vec![0u8]].concat(),
            );
            let ratio = &chain / &sibling;
            let expected = BigRational::new(BigInt::from(2 * k + 3), BigInt::from(2 * k));
            assert_eq!(ratio, expected);
            assert!(ratio <= five_halves);
        }
    }

    #[test]
    fn ball_at_half_is_unbounded_relative_to_scale() {
        // 3^k mu(B(1/2, 3^-k)) grows like k: no constant K with mu(B) <= K r.
        let o = TriadicOracle::new(40);
        let half = parse_rational("1/2").unwrap();
        let mut prev = 0.0f64;
        for k in [2u32, 5, 10, 15, 20] {
            let m = o.ball_mass(&half, &pow_inv(3, k)).unwrap();
            let three_k = BigRational::from(BigInt::from(3).pow(k));
            let scaled = rational_to_f64(&(&m.lower * &three_k));
            // At least the chain cylinder mass (normalized).
            let chain = rational_to_f64(
                &(&TriadicOracle::raw_chain_mass(k) * &parse_rational("2/3").unwrap() * &three_k),
            );
            assert!(scaled >= chain - 1e-9);
            assert!(scaled > prev, "k={k}: {scaled} vs {prev}");
            prev = scaled;
        }
        assert!(prev > 10.0);
    }

    #[test]
    fn monotone_and_unit_diameter() {
        let o = TriadicOracle::new(30);
        super::super::check_monotone_in_r(&o, 200, 13);
    }
}
