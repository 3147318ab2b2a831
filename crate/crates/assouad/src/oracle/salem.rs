//! Random Cantor constructions with scheduled dissection ratios and weights,
//! after Salem's construction of sets whose uniform measures have summable
//! Fourier transforms.
//!
//! Two modes:
//! * set-example: dissection ratios near 1/log k on sparse blocks, 1/3 + 1/log k
//!   elsewhere, uniform weights;
//! * measure-example: ratios near 1/4, weights p_k = 1/j on the blocks
//!   (n_j, 2 n_j], giving the exact step ratio (1 - 1/j)^-n_j between the
//!   block's entry and exit scales at the rightmost point.
//!
//! Ratios are sampled on a 2^-20 rational grid inside [a_k, b_k] so the whole
//! cylinder geometry stays exact rational; at desk-scale k the paper's bands
//! exceed 1/2 and are clamped to keep two children per interval.

use super::{MassBounds, MeasureOracle};
use crate::rational::ln_rational;
use crate::{Error, Result};
use num::{BigInt, BigRational, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SalemMode {
    SetExample,
    MeasureExample,
}

/// Sparse block schedule: blocks are indexed by j >= 2 (j = 1 would give the
/// degenerate weight p = 1), with n_(j+1) >= 4 n_j.
#[derive(Clone, Debug)]
pub struct SalemSchedule {
    pub blocks: Vec<(u32, u32)>, // (j, n_j)
}

impl SalemSchedule {
    pub fn new(blocks: Vec<(u32, u32)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParam("schedule must be non-empty".into()));
        }
        for w in blocks.windows(2) {
            if w[1].0 != w[0].0 + 1 || w[1].1 < 4 * w[0].1 {
                return Err(Error::InvalidParam(
                    "blocks must have consecutive j and n_(j+1) >= 4 n_j".into(),
                ));
            }
        }
        if blocks[0].0 < 2 {
            return Err(Error::InvalidParam("block index j must start at >= 2".into()));
        }
        Ok(SalemSchedule { blocks })
    }

    /// j = 2..4 with n_j = 4^j.
    pub fn shipped() -> Self {
        SalemSchedule::new(vec![(2, 16), (3, 64), (4, 256)]).unwrap()
    }
}

const RATIO_GRID_BITS: u32 = 20;
const RATIO_MIN: (i64, i64) = (1, 20); // 1/20
const RATIO_MAX: (i64, i64) = (49, 100); // 49/100 keeps a positive middle gap

pub struct SalemOracle {
    mode: SalemMode,
    schedule: SalemSchedule,
    seed: u64,
    depth_cap: u32,
    /// Dissection ratio per step (1-based level k).
    xi: Vec<BigRational>,
    /// Left-branch weight per step.
    probs: Vec<BigRational>,
    /// Cylinder length prefix products.
    lengths: Vec<BigRational>,
}

impl SalemOracle {
    pub fn new(seed: u64, mode: SalemMode, schedule: SalemSchedule) -> Result<Self> {
        let depth_cap = 2 * schedule.blocks.last().unwrap().1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let grid = BigInt::one() << RATIO_GRID_BITS;
        let lo_clamp = BigRational::new(BigInt::from(RATIO_MIN.0), BigInt::from(RATIO_MIN.1));
        let hi_clamp = BigRational::new(BigInt::from(RATIO_MAX.0), BigInt::from(RATIO_MAX.1));

        let mut xi = Vec::with_capacity(depth_cap as usize);
        let mut probs = Vec::with_capacity(depth_cap as usize);
        for k in 1..=depth_cap {
            let kf = k.max(2) as f64;
            let (a, b) = match mode {
                SalemMode::SetExample => {
                    if schedule.blocks.iter().any(|&(_, nj)| {
                        // Block width m_j ~ n_j log 3 / log log n_j.
                        let m = ((nj as f64) * 3f64.ln() / (nj as f64).ln().ln().max(1.0)).round()
                            as u32;
                        k >= nj && k <= nj + m
                    }) {
                        (1.0 / kf.ln(), 2.0 / kf.ln())
                    } else {
                        (1.0 / 3.0 + 1.0 / kf.ln(), 1.0 / 3.0 + 2.0 / kf.ln())
                    }
                }
                SalemMode::MeasureExample => (0.25, 0.25 + 1.0 / kf.ln()),
            };
            // Snap the band to the rational grid and clamp into (0, 1/2).
            let snap = |v: f64| -> BigRational {
                let n = (v * (1u64 << RATIO_GRID_BITS) as f64).round() as i64;
                BigRational::new(BigInt::from(n.max(1)), grid.clone())
            };
            let mut a_q = snap(a);
            let mut b_q = snap(b);
            if a_q < lo_clamp {
                a_q = lo_clamp.clone();
            }
            if b_q > hi_clamp {
                b_q = hi_clamp.clone();
            }
            if b_q < a_q {
                b_q = a_q.clone();
            }
            let u = BigRational::new(
                BigInt::from(rng.random_range(0..=(1u64 << RATIO_GRID_BITS))),
                grid.clone(),
            );
            let xi_k = &a_q + &(&u * &(&b_q - &a_q));
            xi.push(xi_k);

            let p = match mode {
                SalemMode::SetExample => half.clone(),
                SalemMode::MeasureExample => {
                    match schedule.blocks.iter().find(|&&(_, nj)| k > nj && k <= 2 * nj) {
                        Some(&(j, _)) => BigRational::new(BigInt::one(), BigInt::from(j)),
                        None => half.clone(),
                    }
                }
            };
            probs.push(p);
        }
        let mut lengths = Vec::with_capacity(depth_cap as usize + 1);
        lengths.push(BigRational::one());
        for k in 0..depth_cap as usize {
            let next = &lengths[k] * &xi[k];
            lengths.push(next);
        }
        Ok(SalemOracle { mode, schedule, seed, depth_cap, xi, probs, lengths })
    }

    /// Deterministic degenerate instance: xi = 1/3, p = 1/2 everywhere, i.e.
    /// the classical Cantor measure.
    pub fn degenerate_cantor(depth_cap: u32) -> Self {
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let xi = vec![third; depth_cap as usize];
        let probs = vec![half; depth_cap as usize];
        let mut lengths = Vec::with_capacity(depth_cap as usize + 1);
        lengths.push(BigRational::one());
        for k in 0..depth_cap as usize {
            let next = &lengths[k] * &xi[k];
            lengths.push(next);
        }
        SalemOracle {
            mode: SalemMode::SetExample,
            schedule: SalemSchedule { blocks: vec![(2, depth_cap + 1)] },
            seed: 0,
            depth_cap,
            xi,
            probs,
            lengths,
        }
    }

    pub fn mode(&self) -> SalemMode {
        self.mode
    }

    pub fn schedule(&self) -> &SalemSchedule {
        &self.schedule
    }

    /// Cylinder length at step k.
    pub fn step_length(&self, k: u32) -> BigRational {
        self.lengths[k as usize].clone()
    }

    /// Exact mass of [a, b].
    pub fn interval_mass(&self, a: &BigRational, b: &BigRational) -> MassBounds {
        if a >= b {
            return MassBounds::zero();
        }
        let mut total = MassBounds::zero();
        // Stack of (depth, lo, mass); lengths come from the shared table.
        let mut stack: Vec<(u32, BigRational, BigRational)> =
            vec![(0, BigRational::zero(), BigRational::one())];
        while let Some((depth, lo, mass)) = stack.pop() {
            let len = &self.lengths[depth as usize];
            let hi = &lo + len;
            if *b <= lo || *a >= hi {
                continue;
            }
            if *a <= lo && hi <= *b {
                total = total.add(&MassBounds::exact(mass));
                continue;
            }
            if depth == self.depth_cap {
                total = total.add_upper_only(&mass);
                continue;
            }
            let xi = &self.xi[depth as usize];
            let p = &self.probs[depth as usize];
            let child_len = &self.lengths[depth as usize + 1];
            let left_mass = &mass * p;
            let right_mass = &mass - &left_mass;
            let right_lo = &hi - child_len;
            let _ = xi;
            stack.push((depth + 1, lo, left_mass));
            stack.push((depth + 1, right_lo, right_mass));
        }
        total
    }

    /// |mu_hat(n)| via the convolution product formula, truncated once the
    /// remaining factors are indistinguishable from 1.
    pub fn fourier_modulus(&self, n: i64) -> f64 {
        let mut product = 1.0f64;
        let mut len = 1.0f64;
        for k in 0..self.depth_cap as usize {
            let xi = crate::rational::rational_to_f64(&self.xi[k]);
            let p = crate::rational::rational_to_f64(&self.probs[k]);
            let c = len * (1.0 - xi); // offset of the right atom at this step
            let theta = std::f64::consts::TAU * (n as f64) * c;
            let factor =
                (p * p + (1.0 - p) * (1.0 - p) + 2.0 * p * (1.0 - p) * theta.cos()).sqrt();
            product *= factor;
            len *= xi;
            if (n as f64).abs() * len < 1e-9 {
                break; // remaining factors are 1 - O((n len)^2)
            }
        }
        product
    }

    /// Partial sums of |mu_hat(n)|^s for |n| <= each checkpoint.
    pub fn fourier_partial_sums(&self, s: f64, checkpoints: &[i64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut sum = 1.0; // n = 0 term: total mass 1
        let mut n = 1i64;
        for &cp in checkpoints {
            while n <= cp {
                sum += 2.0 * self.fourier_modulus(n).powf(s);
                n += 1;
            }
            out.push(sum);
        }
        out
    }

    /// The paired-scale exponents of the measure example: for each block j,
    /// e_j = log((1 - 1/j)^-n_j) / log(R_j / r_j) at the rightmost point with
    /// R_j, r_j the step-n_j and step-2n_j lengths. The ratio is exact.
    pub fn paired_scale_exponents(&self) -> Result<Vec<(u32, f64)>> {
        if self.mode != SalemMode::MeasureExample {
            return Err(Error::InvalidParam("paired scales apply to the measure example".into()));
        }
        let one = BigRational::one();
        let mut out = Vec::new();
        for &(j, nj) in &self.schedule.blocks {
            let big_r = self.step_length(nj);
            let small_r = self.step_length(2 * nj);
            let m_big = self.ball_mass(&one, &big_r)?;
            let m_small = self.ball_mass(&one, &small_r)?;
            let ratio = &m_big.upper / &m_small.upper;
            let e = ln_rational(&ratio) / ln_rational(&(&big_r / &small_r));
            let _ = j;
            out.push((j, e));
        }
        Ok(out)
    }

    /// Exact block ratio mu(B(1,R_j)) / mu(B(1,r_j)); equals (1-1/j)^-n_j.
    pub fn block_ratio(&self, block_idx: usize) -> Result<BigRational> {
        let (_, nj) = self.schedule.blocks[block_idx];
        let one = BigRational::one();
        let m_big = self.ball_mass(&one, &self.step_length(nj))?;
        let m_small = self.ball_mass(&one, &self.step_length(2 * nj))?;
        if !(m_big.is_exact() && m_small.is_exact()) {
            return Err(Error::InvalidParam("block ratio did not resolve exactly".into()));
        }
        Ok(&m_big.upper / &m_small.upper)
    }
}

impl MeasureOracle for SalemOracle {
    fn name(&self) -> &'static str {
        "salem"
    }

    fn ball_mass(&self, x: &BigRational, r: &BigRational) -> Result<MassBounds> {
        if !r.is_positive() {
            return Err(Error::InvalidParam("radius must be positive".into()));
        }
        if *r < self.lengths[self.depth_cap as usize] {
            return Err(Error::BelowDepthCap { requested: self.depth_cap + 1, cap: self.depth_cap });
        }
        Ok(self.interval_mass(&(x - r), &(x + r)))
    }

    fn support_points(&self, seed: u64, count: usize) -> Vec<BigRational> {
        // Cylinder midpoints along stratified then seeded random branches.
        let mut pts = vec![BigRational::zero(), BigRational::one()];
        let depth = self.depth_cap.min(24);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ self.seed);
        let mut pattern = 0u64;
        while pts.len() < count {
            let mut lo = BigRational::zero();
            for d in 0..depth {
                let bit = if pattern < (1 << depth.min(16)) {
                    (pattern >> (d % 16)) & 1 == 1
                } else {
                    rng.random_bool(0.5)
                };
                let child_len = &self.lengths[d as usize + 1];
                if bit {
                    let parent_len = &self.lengths[d as usize];
                    lo = &(&lo + parent_len) - child_len;
                }
            }
            let half_len = &self.lengths[depth as usize] / BigRational::from(BigInt::from(2));
            pts.push(&lo + &half_len);
            pattern = pattern.wrapping_add(0x9e3779b97f4a7c15).rotate_left(7);
        }
        pts.truncate(count.max(2));
        pts
    }

    fn natural_scale(&self, level: u32) -> BigRational {
        self.lengths[level.min(self.depth_cap) as usize].clone()
    }

    fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    fn interesting_levels(&self) -> Vec<u32> {
        let mut v = Vec::new();
        for &(_, nj) in &self.schedule.blocks {
            v.push(nj);
            v.push(2 * nj);
        }
        v
    }

    fn is_exact(&self) -> bool {
        true // rational geometry and masses are exact by construction
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    #[test]
    fn degenerate_instance_is_classical_cantor() {
        let o = SalemOracle::degenerate_cantor(12);
        // Cylinder masses 2^-depth: ball of radius 3^-k at 0 sees exactly the
        // leftmost step-k cylinder.
        for k in 1..=8u32 {
            let m = o.ball_mass(&BigRational::zero(), &o.step_length(k)).unwrap();
            assert!(m.is_exact());
            assert_eq!(m.upper, crate::rational::pow2_inv(k));
        }
    }

    #[test]
    fn measure_example_block_ratio_is_exact() {
        let o = SalemOracle::new(5, SalemMode::MeasureExample, SalemSchedule::shipped()).unwrap();
        for (idx, &(j, nj)) in o.schedule().blocks.iter().enumerate().take(2) {
            let ratio = o.block_ratio(idx).unwrap();
            let base = &BigRational::one()
                - &BigRational::new(BigInt::one(), BigInt::from(j));
            let expected = BigRational::one() / num::pow::pow(base, nj as usize);
            assert_eq!(ratio, expected, "block j={j}");
        }
    }

    #[test]
    fn ratios_stay_in_band() {
        let o = SalemOracle::new(9, SalemMode::MeasureExample, SalemSchedule::shipped()).unwrap();
        let lo = parse_rational("1/20").unwrap();
        let hi = parse_rational("49/100").unwrap();
        assert!(o.xi.iter().all(|x| *x >= lo && *x <= hi));
        let o = SalemOracle::new(9, SalemMode::SetExample, SalemSchedule::shipped()).unwrap();
        assert!(o.xi.iter().all(|x| *x >= lo && *x <= hi));
    }

    #[test]
    fn fourier_partial_sums_do_not_explode() {
        // Trend check over 32 seeds: partial sums at growing checkpoints grow
        // sublinearly in the number of terms for a moderate exponent.
        let checkpoints = [64i64, 128, 256];
        let mut worst_ratio = 0.0f64;
        for seed in 0..32u64 {
            let o =
                SalemOracle::new(seed, SalemMode::MeasureExample, SalemSchedule::shipped()).unwrap();
            let sums = o.fourier_partial_sums(4.0, &checkpoints);
            assert!(sums.windows(2).all(|w| w[1] >= w[0]));
            // Increment per extra term shrinks as N grows.
            let inc1 = (sums[1] - sums[0]) / 64.0;
            let inc2 = (sums[2] - sums[1]) / 128.0;
            worst_ratio = worst_ratio.max(inc2 / inc1.max(1e-30));
        }
        assert!(worst_ratio < 1.5, "late increments should not grow: {worst_ratio}");
    }

    #[test]
    fn monotone_and_unit_diameter() {
        let o = SalemOracle::new(3, SalemMode::MeasureExample, SalemSchedule::shipped()).unwrap();
        super::super::check_monotone_in_r(&o, 100, 17);
    }
}
