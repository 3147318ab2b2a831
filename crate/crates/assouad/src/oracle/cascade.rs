//! Iterated dyadic cascade with a scheduled pinch along the leftmost chain.
//!
//! On a schedule n_1 < n_2 < ... the leftmost dyadic interval splits with a
//! tiny factor t_j at step n_j, then with q_j (close to 1) for the next n_j
//! steps; everywhere else mass halves. The q-runs make the mass ratio between
//! scales 2^-n_j and 2^-2n_j equal q_j^-n_j exactly, so the lower dimension
//! function at separated scales collapses while every local dimension stays
//! near 1.

use super::{MassBounds, MeasureOracle};
use crate::rational::{parse_rational, pow2_inv};
use crate::{Error, Result};
use num::{BigInt, BigRational, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Schedule of pinch levels n_j and run factors q_j.
#[derive(Clone, Debug)]
pub struct CascadeParams {
    pub n_j: Vec<u32>,
    pub q_j: Vec<BigRational>,
}

impl CascadeParams {
    pub fn new(n_j: Vec<u32>, q_j: Vec<BigRational>) -> Result<Self> {
        if n_j.is_empty() || n_j.len() != q_j.len() {
            return Err(Error::InvalidParam("schedules must be non-empty and equal length".into()));
        }
        if n_j[0] == 0 {
            return Err(Error::InvalidParam("n_1 must be positive".into()));
        }
        for w in n_j.windows(2) {
            if w[1] < 3 * w[0] {
                return Err(Error::InvalidParam("need n_(j+1) >= 3 n_j".into()));
            }
        }
        let half = parse_rational("1/2").unwrap();
        let one = BigRational::one();
        for w in q_j.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidParam("q_j must be non-decreasing".into()));
            }
        }
        for q in &q_j {
            if *q < half || *q >= one {
                return Err(Error::InvalidParam("need 1/2 <= q_j < 1".into()));
            }
        }
        let params = CascadeParams { n_j, q_j };
        for j in 0..params.n_j.len() {
            let t = params.t_j(j);
            if !(t.is_positive() && t < one) {
                return Err(Error::InvalidParam(format!("t_{} escapes (0,1)", j + 1)));
            }
        }
        Ok(params)
    }

    /// Default schedule: n_j = 3^j and q_j = 1 - 2^-(j+1) for j = 1..4, deep
    /// enough that the q-run exponent -log q_4/log 2 drops below 0.05 within
    /// the depth cap.
    pub fn shipped() -> Self {
        let n_j = vec![3, 9, 27, 81];
        let q_j = (1..=4u32)
            .map(|j| &BigRational::one() - &pow2_inv(j + 1))
            .collect();
        CascadeParams::new(n_j, q_j).unwrap()
    }

    /// t_j = q_j^-n_j * 2^-(1+n_j).
    pub fn t_j(&self, idx: usize) -> BigRational {
        let n = self.n_j[idx];
        let q = &self.q_j[idx];
        let q_pow = num::pow::pow(q.clone(), n as usize);
        pow2_inv(1 + n) / q_pow
    }
}

/// The cascade measure as an oracle, exact on all dyadic-interval queries.
pub struct CascadeOracle {
    params: CascadeParams,
    depth_cap: u32,
    /// Split factor given to the left child at each step (1-based level).
    split: Vec<BigRational>,
}

impl CascadeOracle {
    pub fn new(params: CascadeParams, depth_cap: u32) -> Result<Self> {
        let needed = 2 * *params.n_j.last().unwrap();
        if depth_cap < needed {
            return Err(Error::InvalidParam(format!(
                "depth cap {depth_cap} too small for the schedule (need >= {needed})"
            )));
        }
        let half = parse_rational("1/2").unwrap();
        let mut split = Vec::with_capacity(depth_cap as usize);
        for k in 1..=depth_cap {
            let mut f = half.clone();
            for (idx, &nj) in params.n_j.iter().enumerate() {
                if k == nj {
                    f = params.t_j(idx);
                    break;
                }
                if k > nj && k <= 2 * nj {
                    f = params.q_j[idx].clone();
                    break;
                }
            }
            split.push(f);
        }
        Ok(CascadeOracle { params, depth_cap, split })
    }

    pub fn shipped() -> Self {
        let params = CascadeParams::shipped();
        let cap = 3 * *params.n_j.last().unwrap();
        CascadeOracle::new(params, cap).unwrap()
    }

    pub fn params(&self) -> &CascadeParams {
        &self.params
    }

    /// Mass of the leftmost dyadic interval at level k (exact).
    pub fn chain_mass(&self, k: u32) -> BigRational {
        self.split[..k as usize].iter().product()
    }

    /// Exact mass of a closed interval [a, b] intersected with [0,1]; bounds
    /// are exact unless the interval boundary cuts the leftmost chain below
    /// the depth cap.
    pub fn interval_mass(&self, a: &BigRational, b: &BigRational) -> MassBounds {
        let zero = BigRational::zero();
        let one = BigRational::one();
        let a = if *a < zero { zero.clone() } else { a.clone() };
        let b = if *b > one { one.clone() } else { b.clone() };
        if a >= b {
            return MassBounds::zero();
        }
        self.node_mass(0, &zero, &one, &one, true, &a, &b)
    }

    #[allow(clippy::too_many_arguments)]
    fn node_mass(
        &self,
        depth: u32,
        lo: &BigRational,
        width: &BigRational,
        mass: &BigRational,
        on_chain: bool,
        a: &BigRational,
        b: &BigRational,
    ) -> MassBounds {
        let hi = lo + width;
        // Overlap of measure zero (boundary touch) contributes nothing:
        // the cascade is non-atomic.
        if *b <= *lo || *a >= hi {
            return MassBounds::zero();
        }
        if *a <= *lo && hi <= *b {
            return MassBounds::exact(mass.clone());
        }
        if !on_chain {
            // Off the leftmost chain every split is a half: the measure is
            // uniform on this interval.
            let cut_lo = if a > lo { a.clone() } else { lo.clone() };
            let cut_hi = if *b < hi { b.clone() } else { hi };
            let overlap = &cut_hi - &cut_lo;
            return MassBounds::exact(&(mass * &overlap) / width);
        }
        if depth == self.depth_cap {
            return MassBounds { lower: BigRational::zero(), upper: mass.clone() };
        }
        let f = &self.split[depth as usize];
        let half_width = width / BigRational::from(BigInt::from(2));
        let left_mass = mass * f;
        let right_mass = mass - &left_mass;
        let mid = lo + &half_width;
        let left = self.node_mass(depth + 1, lo, &half_width, &left_mass, true, a, b);
        let right = self.node_mass(depth + 1, &mid, &half_width, &right_mass, false, a, b);
        left.add(&right)
    }
}

impl MeasureOracle for CascadeOracle {
    fn name(&self) -> &'static str {
        "cascade"
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
        dyadic_support_points(seed, count, self.depth_cap)
    }

    fn natural_scale(&self, level: u32) -> BigRational {
        pow2_inv(level)
    }

    fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    fn interesting_levels(&self) -> Vec<u32> {
        let mut v = Vec::new();
        for &n in &self.params.n_j {
            v.push(n);
            v.push(2 * n);
        }
        v
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Support points for full-support measures on [0,1]: the endpoints,
/// stratified dyadic midpoints, and seeded random dyadics.
pub(crate) fn dyadic_support_points(seed: u64, count: usize, cap: u32) -> Vec<BigRational> {
    let mut pts = vec![BigRational::zero(), BigRational::one()];
    let mut level = 2u32;
    while pts.len() < count / 2 + 2 && level < 8 {
        for i in 0..(1u64 << level.min(6)) {
            pts.push(BigRational::new(BigInt::from(2 * i + 1), BigInt::from(1u64) << (level + 1)));
            if pts.len() >= count / 2 + 2 {
                break;
            }
        }
        level += 2;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = (cap / 2).clamp(8, 48);
    while pts.len() < count {
        let numer: u64 = rng.random_range(0..(1u64 << depth.min(60)));
        pts.push(BigRational::new(BigInt::from(2 * numer + 1), BigInt::from(1u128 << (depth.min(60) + 1))));
    }
    pts.truncate(count.max(2));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rational_to_f64;

    #[test]
    fn shipped_schedule_is_valid() {
        let p = CascadeParams::shipped();
        assert_eq!(p.n_j, vec![3, 9, 27, 81]);
        assert_eq!(p.q_j[0], parse_rational("3/4").unwrap());
        assert_eq!(p.q_j[3], parse_rational("31/32").unwrap());
    }

    #[test]
    fn schedule_constraints_are_enforced() {
        assert!(CascadeParams::new(vec![3, 8], vec![parse_rational("3/4").unwrap(); 2]).is_err());
        assert!(CascadeParams::new(vec![3], vec![parse_rational("1/4").unwrap()]).is_err());
        assert!(CascadeParams::new(
            vec![3, 9],
            vec![parse_rational("7/8").unwrap(), parse_rational("3/4").unwrap()]
        )
        .is_err());
    }

    #[test]
    fn unit_total_mass_and_chain_identity() {
        let oracle = CascadeOracle::shipped();
        let m = oracle.interval_mass(&BigRational::zero(), &BigRational::one());
        assert_eq!(m, MassBounds::exact(BigRational::one()));

        // Exact ratio mu(B(0, 2^-n_j)) / mu(B(0, 2^-2n_j)) = q_j^-n_j.
        for (idx, &nj) in oracle.params().n_j.iter().enumerate() {
            let m1 = oracle.ball_mass(&BigRational::zero(), &pow2_inv(nj)).unwrap();
            let m2 = oracle.ball_mass(&BigRational::zero(), &pow2_inv(2 * nj)).unwrap();
            assert!(m1.is_exact() && m2.is_exact());
            let ratio = &m1.upper / &m2.upper;
            let expected = BigRational::one()
                / num::pow::pow(oracle.params().q_j[idx].clone(), nj as usize);
            assert_eq!(ratio, expected);
        }
    }

    #[test]
    fn exponent_recovers_log_q() {
        // t = -log q_j / log 2 from the exact ratio, to 1e-12.
        let oracle = CascadeOracle::shipped();
        let nj = oracle.params().n_j[2];
        let q = rational_to_f64(&oracle.params().q_j[2]);
        let m1 = oracle.ball_mass(&BigRational::zero(), &pow2_inv(nj)).unwrap();
        let m2 = oracle.ball_mass(&BigRational::zero(), &pow2_inv(2 * nj)).unwrap();
        let ratio = rational_to_f64(&(&m1.upper / &m2.upper));
        let t = ratio.ln() / ((nj as f64) * 2f64.ln());
        assert!((t - (-(q.ln()) / 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn chain_masses_stay_below_dyadic() {
        // The t_j pinches keep mu([0, 2^-n]) <= 2^-n at every level.
        let oracle = CascadeOracle::shipped();
        for k in 1..=oracle.depth_cap() {
            assert!(oracle.chain_mass(k) <= pow2_inv(k), "level {k}");
        }
    }

    #[test]
    fn off_chain_is_uniform() {
        let oracle = CascadeOracle::shipped();
        // The right half carries 1 - t_1-adjusted mass uniformly within
        // sub-intervals of [1/2, 1]: two equal quarters match.
        let a = parse_rational("1/2").unwrap();
        let m_half = oracle.interval_mass(&a, &parse_rational("3/4").unwrap());
        let m_other = oracle.interval_mass(&parse_rational("3/4").unwrap(), &BigRational::one());
        assert_eq!(m_half, m_other);
    }

    #[test]
    fn monotone_and_unit_diameter() {
        let oracle = CascadeOracle::shipped();
        super::super::check_monotone_in_r(&oracle, 200, 11);
    }

    #[test]
    fn below_cap_queries_error() {
        let oracle = CascadeOracle::shipped();
        let tiny = pow2_inv(oracle.depth_cap() + 5);
        assert!(matches!(
            oracle.ball_mass(&BigRational::zero(), &tiny),
            Err(Error::BelowDepthCap { .. })
        ));
    }
}
