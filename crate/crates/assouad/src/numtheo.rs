//! Lattice approximation on {m log beta + n log theta}: given a target small
//! scale theta_i, find positive integers (m, n) placing theta^n beta^m just
//! above theta_i in the precise window eta/(2 theta_i) <= 1/theta_i -
//! 1/(theta^n beta^m) <= 4 eta/theta_i. The sorted lattice values have gaps
//! tending to zero when log theta / log beta is irrational, which is what
//! makes the window reachable for all small enough theta_i.

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct NumTheoResult {
    pub m: u32,
    pub n: u32,
    /// 1/theta_i - 1/(theta^n beta^m).
    pub value: f64,
    /// Margins by which the two window inequalities hold (nonnegative means
    /// satisfied).
    pub slack_lo: f64,
    pub slack_hi: f64,
    /// Set when log theta / log beta is within 1e-12 of a rational with
    /// denominator at most 1e6 (the irrationality precondition is suspect).
    pub rationality_warning: bool,
}

const LATTICE_BOUND: usize = 1_000_000;

/// Detect near-rationality of `x` via continued-fraction convergents.
fn near_rational(x: f64, max_denom: u64, tol: f64) -> bool {
    let mut a = x;
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, a.floor() as i64, 1i64);
    for _ in 0..64 {
        let approx = p1 as f64 / q1 as f64;
        if (x - approx).abs() < tol {
            return (q1 as u64) <= max_denom;
        }
        let frac = a - a.floor();
        if frac.abs() < 1e-15 {
            break;
        }
        a = 1.0 / frac;
        let ai = a.floor() as i64;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if q1 as u64 > max_denom {
            break;
        }
    }
    false
}

/// Search for (m, n) satisfying the window inequalities with slack `tol`.
pub fn find_mn(theta: f64, beta: f64, theta_i: f64, eta: f64) -> Result<NumTheoResult> {
    find_mn_with_tol(theta, beta, theta_i, eta, 1e-12)
}

pub fn find_mn_with_tol(
    theta: f64,
    beta: f64,
    theta_i: f64,
    eta: f64,
    tol: f64,
) -> Result<NumTheoResult> {
    if !(0.0 < beta && beta < theta && theta < 1.0) {
        return Err(Error::InvalidParam("need 0 < beta < theta < 1".into()));
    }
    if !(0.0 < eta && eta < 0.5) {
        return Err(Error::InvalidParam("need small eta in (0, 1/2)".into()));
    }
    if !(0.0 < theta_i && theta_i < 1.0) {
        return Err(Error::InvalidParam("need theta_i in (0,1)".into()));
    }
    let rationality_warning = near_rational(theta.ln() / beta.ln(), 1_000_000, 1e-12);

    let inv = 1.0 / theta_i;
    let lo = eta / (2.0 * theta_i);
    let hi = 4.0 * eta / theta_i;
    let l = inv.ln();
    let ln_bi = (1.0 / beta).ln();
    let ln_ti = (1.0 / theta).ln();

    let m_max = ((l / ln_bi).ceil() as usize + 2).min(LATTICE_BOUND);
    let mut inspected = 0usize;
    for m in 1..=m_max as u32 {
        let rem = l - (m as f64) * ln_bi;
        let n_star = rem / ln_ti;
        let n_lo = (n_star.floor() as i64 - 2).max(1);
        for n in n_lo..=(n_star.ceil() as i64 + 2) {
            inspected += 1;
            if inspected > LATTICE_BOUND {
                return Err(Error::LatticeSearchFailed);
            }
            let n = n as u32;
            let scale = theta.powi(n as i32) * beta.powi(m as i32);
            let value = inv - 1.0 / scale;
            let slack_lo = value - lo;
            let slack_hi = hi - value;
            if slack_lo >= -tol && slack_hi >= -tol {
                return Ok(NumTheoResult {
                    m,
                    n,
                    value,
                    slack_lo,
                    slack_hi,
                    rationality_warning,
                });
            }
        }
    }
    Err(Error::LatticeSearchFailed)
}

/// Consecutive gaps of the decreasingly sorted lattice values
/// {m log beta + n log theta : m, n >= 1}, for the first `count` values.
pub fn lattice_gaps(theta: f64, beta: f64, count: usize) -> Vec<f64> {
    let a = (1.0 / theta).ln();
    let b = (1.0 / beta).ln();
    // Values v = -(m b + n a); collect everything above a threshold chosen so
    // at least `count` lattice points fit, with margin.
    let mut t = (2.0 * a * b * (count as f64)).sqrt() + a + b;
    loop {
        let mut vals = Vec::new();
        let m_max = (t / b).floor() as u32;
        for m in 1..=m_max.max(1) {
            let rem = t - (m as f64) * b;
            let n_max = (rem / a).floor() as u32;
            for n in 1..=n_max.max(0) {
                vals.push(-((m as f64) * b + (n as f64) * a));
            }
        }
        if vals.len() >= count {
            vals.sort_by(|x, y| y.total_cmp(x)); // decreasing (toward -inf)
            vals.truncate(count);
            return vals.windows(2).map(|w| w[0] - w[1]).collect();
        }
        t *= 1.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_is_hit_for_small_scales() {
        // theta = 1/2, beta = 1/3 (log 2 / log 3 irrational), eta = 0.05.
        for i in 15..=25u32 {
            let theta_i = 2f64.powi(-(i as i32));
            let r = find_mn(0.5, 1.0 / 3.0, theta_i, 0.05).unwrap();
            assert!(r.slack_lo >= -1e-12 && r.slack_hi >= -1e-12, "i={i}: {r:?}");
            assert!(r.m >= 1 && r.n >= 1);
            assert!(!r.rationality_warning);
        }
    }

    #[test]
    fn large_theta_i_fails() {
        let r = find_mn(0.5, 1.0 / 3.0, 0.3, 0.05);
        assert!(matches!(r, Err(Error::LatticeSearchFailed)));
    }

    #[test]
    fn gaps_trend_to_zero() {
        let gaps = lattice_gaps(0.5, 1.0 / 3.0, 10_000);
        assert_eq!(gaps.len(), 9_999);
        assert!(gaps.iter().all(|&g| g >= -1e-12));
        let block = 1000;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let first = mean(&gaps[..block]);
        let last = mean(&gaps[gaps.len() - block..]);
        assert!(last < first / 2.0, "first {first}, last {last}");
    }

    #[test]
    fn rationality_warning_fires_for_rational_ratio() {
        // log(1/4)/log(1/2) = 2 exactly.
        let r = find_mn(0.5, 0.25, 2f64.powi(-20), 0.05);
        if let Ok(res) = r {
            assert!(res.rationality_warning);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(find_mn(0.3, 0.5, 0.01, 0.05).is_err()); // beta >= theta
        assert!(find_mn(0.5, 0.3, 0.01, 0.9).is_err()); // eta too large
    }
}
