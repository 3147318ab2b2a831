//! Black-box measure oracles: a queryable mu(B(x,r)) with a support sampler.
//!
//! Oracles answer ball-mass queries with exact rational lower/upper bounds
//! (equal when the query resolves exactly) and expose the natural scale
//! ladder their cylinder structure lives on. Estimators treat them uniformly.

pub mod cascade;
pub mod finite_type;
pub mod salem;
pub mod triadic;

use crate::Result;
use num::BigRational;

pub use cascade::{CascadeOracle, CascadeParams};
pub use finite_type::NetIntervalOracle;
pub use salem::{SalemMode, SalemOracle, SalemSchedule};
pub use triadic::TriadicOracle;

/// Exact rational bracket for a ball mass; `lower == upper` when the query
/// resolved exactly at the oracle's depth cap.
#[derive(Clone, Debug, PartialEq)]
pub struct MassBounds {
    pub lower: BigRational,
    pub upper: BigRational,
}

impl MassBounds {
    pub fn exact(v: BigRational) -> Self {
        MassBounds { lower: v.clone(), upper: v }
    }

    pub fn zero() -> Self {
        use num::Zero;
        MassBounds { lower: BigRational::zero(), upper: BigRational::zero() }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn add(&self, other: &MassBounds) -> MassBounds {
        MassBounds { lower: &self.lower + &other.lower, upper: &self.upper + &other.upper }
    }

    pub fn add_upper_only(&self, mass: &BigRational) -> MassBounds {
        MassBounds { lower: self.lower.clone(), upper: &self.upper + mass }
    }
}

/// A queryable measure: ball masses, a deterministic support sampler, and the
/// scale ladder of the underlying construction.
pub trait MeasureOracle: Send + Sync {
    fn name(&self) -> &'static str;

    /// mu(B(x, r)) with exact rational bounds. Errors when the query needs
    /// resolution beyond the depth cap.
    fn ball_mass(&self, x: &BigRational, r: &BigRational) -> Result<MassBounds>;

    /// Deterministic stratified support points (cylinder midpoints and the
    /// support extremes) plus seeded random refinements.
    fn support_points(&self, seed: u64, count: usize) -> Vec<BigRational>;

    /// The k-th canonical scale of the construction (cylinder size at step k).
    fn natural_scale(&self, level: u32) -> BigRational;

    /// Finest resolvable level.
    fn depth_cap(&self) -> u32;

    /// Levels the construction makes special (schedule positions); estimator
    /// ladders always include them.
    fn interesting_levels(&self) -> Vec<u32> {
        Vec::new()
    }

    /// Whether ball masses are exact measures rather than norm stand-ins.
    fn is_exact(&self) -> bool;
}

#[cfg(test)]
pub(crate) fn check_monotone_in_r(
    oracle: &dyn MeasureOracle,
    queries: usize,
    seed: u64,
) {
    use num::Zero;
    use rand::{Rng, SeedableRng};
    let points = oracle.support_points(seed, 8);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cap = oracle.depth_cap().min(40);
    for q in 0..queries {
        let x = &points[q % points.len()];
        let k1 = rng.random_range(1..cap);
        let k2 = rng.random_range(1..cap);
        let (ka, kb) = (k1.min(k2), k1.max(k2));
        // Larger level = smaller radius.
        let r_small = oracle.natural_scale(kb);
        let r_big = oracle.natural_scale(ka);
        let m_small = oracle.ball_mass(x, &r_small).unwrap();
        let m_big = oracle.ball_mass(x, &r_big).unwrap();
        assert!(m_small.upper <= m_big.upper || m_big.upper.is_zero());
        assert!(m_small.lower <= m_big.lower || m_big.lower.is_zero());
    }
    // Unit mass at the support diameter.
    let one = BigRational::from_integer(1.into());
    let m = oracle.ball_mass(&points[0], &one).unwrap();
    assert_eq!(m.upper, one);
}
