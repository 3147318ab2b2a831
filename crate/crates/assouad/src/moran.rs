//! Moran constructions: finite-depth condition verification, the section
//! outer measure, and the uniform-perfectness lower bounds.

use crate::ifs::SimilarityIfs;
use crate::parallel::map_range_maybe_par;
use crate::{Error, Result};
use num::{BigRational, One, Zero};

/// Closed-form bound from uniform perfectness: a measure whose annuli
/// B(x,R) \ B(x,cR) carry a gamma-fraction of the ball mass has lower
/// dimension at least log(1-gamma)/log(c).
pub fn uniformly_perfect_bound(c: f64, gamma: f64) -> Result<f64> {
    if !(0.0 < c && c < 1.0) || !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::InvalidParam("need c, gamma in (0,1)".into()));
    }
    Ok((1.0 - gamma).ln() / c.ln())
}

/// Lower bound for a Moran construction with diameter constant C1 and mass
/// splitting constant C3. Not sharp in general.
pub fn moran_lower_bound(c1: f64, c3: f64) -> Result<f64> {
    if !(0.0 < c1 && c1 < 1.0) || !(0.0 < c3 && c3 < 1.0) {
        return Err(Error::InvalidParam("need C1, C3 in (0,1)".into()));
    }
    Ok((1.0 - c3).ln() / c1.ln())
}

/// Axis-aligned box proxy for a Moran node; distances between boxes are valid
/// lower bounds for true set distances, and a box of a subset always nests
/// inside a box of the superset, so the checks below are one-sided but sound.
#[derive(Clone, Debug)]
pub struct MoranNode {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub diameter: f64,
}

impl MoranNode {
    pub fn interval(lo: f64, hi: f64) -> Self {
        MoranNode { lo: vec![lo], hi: vec![hi], diameter: hi - lo }
    }

    fn contains(&self, other: &MoranNode, tol: f64) -> bool {
        self.lo.iter().zip(other.lo.iter()).all(|(a, b)| *b >= *a - tol)
            && self.hi.iter().zip(other.hi.iter()).all(|(a, b)| *b <= *a + tol)
    }

    fn distance(&self, other: &MoranNode) -> f64 {
        let mut sq = 0.0;
        for i in 0..self.lo.len() {
            let gap = (other.lo[i] - self.hi[i]).max(self.lo[i] - other.hi[i]).max(0.0);
            sq += gap * gap;
        }
        sq.sqrt()
    }
}

type NodeFn = Box<dyn Fn(&[usize]) -> MoranNode + Send + Sync>;
type MassFn = Box<dyn Fn(&[usize]) -> BigRational + Send + Sync>;

/// A Moran construction: node geometry and a compatible mass function over
/// words on {0..alphabet-1}, with declared constants C1 (diameter decay),
/// C2 (separation) and C3 (mass splitting).
pub struct MoranStructure {
    pub alphabet: usize,
    pub dim: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    node_fn: NodeFn,
    mass_fn: MassFn,
}

impl MoranStructure {
    pub fn new(
        alphabet: usize,
        dim: usize,
        c1: f64,
        c2: f64,
        c3: f64,
        node_fn: NodeFn,
        mass_fn: MassFn,
    ) -> Self {
        MoranStructure { alphabet, dim, c1, c2, c3, node_fn, mass_fn }
    }

    pub fn node(&self, word: &[usize]) -> MoranNode {
        (self.node_fn)(word)
    }

    pub fn mass(&self, word: &[usize]) -> BigRational {
        (self.mass_fn)(word)
    }

    /// The standard structure of a similarity IFS: nodes are word images of
    /// [0,1], masses are word probabilities.
    pub fn from_similarity_ifs(ifs: &SimilarityIfs) -> Self {
        let ifs_nodes = ifs.clone();
        let ifs_mass = ifs.clone();
        let to_word = |w: &[usize]| w.iter().map(|&j| j as u8).collect::<Vec<u8>>();
        let c1 = ifs
            .maps
            .iter()
            .map(|m| m.ratio.abs().to_f64())
            .fold(f64::INFINITY, f64::min);
        let c3 = ifs
            .probs
            .iter()
            .map(crate::rational::rational_to_f64)
            .fold(f64::NEG_INFINITY, f64::max);
        // Separation constant: the best first-generation gap (0 for
        // overlapping systems; verify_moran reports the empirical value).
        let hull = |m: &crate::ifs::SimilarityMap| -> (f64, f64) {
            let a = m.offset.to_f64();
            let b = m.offset.to_f64() + m.ratio.to_f64();
            (a.min(b), a.max(b))
        };
        let mut c2 = 0.0f64;
        for (i, mi) in ifs.maps.iter().enumerate() {
            for mj in ifs.maps.iter().skip(i + 1) {
                let (l1, h1) = hull(mi);
                let (l2, h2) = hull(mj);
                let gap = (l2 - h1).max(l1 - h2).max(0.0);
                c2 = c2.max(gap);
            }
        }
        MoranStructure::new(
            ifs.len(),
            1,
            c1,
            c2,
            c3,
            Box::new(move |w| {
                let map = ifs_nodes.compose(&to_word(w));
                let a = map.offset.to_f64();
                let b = map.offset.to_f64() + map.ratio.to_f64();
                MoranNode::interval(a.min(b), a.max(b))
            }),
            Box::new(move |w| ifs_mass.word_prob(&to_word(w))),
        )
    }
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<Vec<usize>>,
    pub detail: String,
}

/// Verification report: per-condition pass/fail with witnesses, plus the
/// tightest constants observed at the checked depth. Finite-depth only; a
/// pass never claims the conditions for all depths.
#[derive(Clone, Debug)]
pub struct MoranReport {
    pub conditions: Vec<ConditionReport>,
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub c3_hat: f64,
    pub depth: usize,
}

impl MoranReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

const GEOM_TOL: f64 = 1e-9;

/// Check the nesting/decay/diameter/separation conditions (a)-(d) and the
/// mass conditions (A)-(C) on all words up to `depth`.
pub fn verify_moran(s: &MoranStructure, depth: usize) -> MoranReport {
    verify_moran_with(s, depth, true)
}

pub fn verify_moran_with(s: &MoranStructure, depth: usize, parallel: bool) -> MoranReport {
    let mut conditions = Vec::new();

    // Enumerate words by level.
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
    for d in 0..depth {
        let mut next = Vec::new();
        for w in &levels[d] {
            for j in 0..s.alphabet {
                let mut v = w.clone();
                v.push(j);
                next.push(v);
            }
        }
        levels.push(next);
    }

    struct WordCheck {
        nest_fail: Option<Vec<usize>>,
        c1_min: f64,
        c1_fail: Option<Vec<usize>>,
        c2_min: f64,
        c2_fail: Option<Vec<usize>>,
        additivity_fail: Option<Vec<usize>>,
        c3_max: f64,
        c3_fail: Option<Vec<usize>>,
    }
    let parents: Vec<Vec<usize>> = levels[..depth].iter().flatten().cloned().collect();
    let checks: Vec<WordCheck> = map_range_maybe_par(parallel, parents.len(), |idx| {
        let w = &parents[idx];
        let node = s.node(w);
        let mass = s.mass(w);
        let mut ck = WordCheck {
            nest_fail: None,
            c1_min: f64::INFINITY,
            c1_fail: None,
            c2_min: f64::INFINITY,
            c2_fail: None,
            additivity_fail: None,
            c3_max: f64::NEG_INFINITY,
            c3_fail: None,
        };
        let mut child_nodes = Vec::with_capacity(s.alphabet);
        let mut mass_sum = BigRational::zero();
        for j in 0..s.alphabet {
            let mut v = w.clone();
            v.push(j);
            let cn = s.node(&v);
            let cm = s.mass(&v);
            if !node.contains(&cn, GEOM_TOL) && ck.nest_fail.is_none() {
                ck.nest_fail = Some(v.clone());
            }
            if node.diameter > 0.0 {
                let ratio = cn.diameter / node.diameter;
                if ratio < ck.c1_min {
                    ck.c1_min = ratio;
                }
                if ratio < s.c1 - GEOM_TOL && ck.c1_fail.is_none() {
                    ck.c1_fail = Some(v.clone());
                }
            }
            if !mass.is_zero() {
                let ratio = crate::rational::rational_to_f64(&(&cm / &mass));
                if ratio > ck.c3_max {
                    ck.c3_max = ratio;
                }
                if ratio > s.c3 + GEOM_TOL && ck.c3_fail.is_none() {
                    ck.c3_fail = Some(v.clone());
                }
            }
            mass_sum = &mass_sum + &cm;
            child_nodes.push(cn);
        }
        if mass_sum != mass {
            ck.additivity_fail = Some(w.clone());
        }
        // (d): some pair of children at distance >= C2 * diam.
        let mut best_gap = 0.0f64;
        for i in 0..child_nodes.len() {
            for j in i + 1..child_nodes.len() {
                best_gap = best_gap.max(child_nodes[i].distance(&child_nodes[j]));
            }
        }
        if node.diameter > 0.0 {
            let ratio = best_gap / node.diameter;
            ck.c2_min = ratio;
            if ratio < s.c2 - GEOM_TOL {
                ck.c2_fail = Some(w.clone());
            }
        }
        ck
    });

    let mut c1_hat = f64::INFINITY;
    let mut c2_hat = f64::INFINITY;
    let mut c3_hat = f64::NEG_INFINITY;
    let mut nest_fail = None;
    let mut c1_fail = None;
    let mut c2_fail = None;
    let mut c3_fail = None;
    let mut add_fail = None;
    for ck in checks {
        c1_hat = c1_hat.min(ck.c1_min);
        c2_hat = c2_hat.min(ck.c2_min);
        c3_hat = c3_hat.max(ck.c3_max);
        nest_fail = nest_fail.or(ck.nest_fail);
        c1_fail = c1_fail.or(ck.c1_fail);
        c2_fail = c2_fail.or(ck.c2_fail);
        c3_fail = c3_fail.or(ck.c3_fail);
        add_fail = add_fail.or(ck.additivity_fail);
    }

    conditions.push(ConditionReport {
        name: "(a) nesting",
        passed: nest_fail.is_none(),
        witness: nest_fail,
        detail: "child boxes contained in parent boxes".into(),
    });
    // (b): max diameter decreasing in depth.
    let max_diams: Vec<f64> = levels
        .iter()
        .map(|ws| ws.iter().map(|w| s.node(w).diameter).fold(0.0, f64::max))
        .collect();
    let decay_ok = max_diams.windows(2).all(|w| w[1] <= w[0] + GEOM_TOL)
        && max_diams.last().unwrap() < max_diams.first().unwrap();
    conditions.push(ConditionReport {
        name: "(b) diameter decay",
        passed: decay_ok,
        witness: None,
        detail: format!("max diameters per level: {max_diams:?}"),
    });
    conditions.push(ConditionReport {
        name: "(c) child diameter lower bound",
        passed: c1_fail.is_none(),
        witness: c1_fail,
        detail: format!("empirical C1 = {c1_hat}"),
    });
    conditions.push(ConditionReport {
        name: "(d) separated pair of children",
        passed: c2_fail.is_none(),
        witness: c2_fail,
        detail: format!("empirical C2 = {c2_hat}"),
    });
    let root_mass = s.mass(&[]);
    conditions.push(ConditionReport {
        name: "(A) unit root mass",
        passed: root_mass.is_one(),
        witness: None,
        detail: format!("m(root) = {}", crate::rational::rational_to_string(&root_mass)),
    });
    conditions.push(ConditionReport {
        name: "(B) mass additivity",
        passed: add_fail.is_none(),
        witness: add_fail,
        detail: "m(M_v) equals the sum over children".into(),
    });
    conditions.push(ConditionReport {
        name: "(C) mass splitting upper bound",
        passed: c3_fail.is_none(),
        witness: c3_fail,
        detail: format!("empirical C3 = {c3_hat}"),
    });

    MoranReport { conditions, c1_hat, c2_hat, c3_hat, depth }
}

/// Bracket mu(E) for a finite union of closed intervals E by minimizing the
/// section sum over depth-bounded cuts. `upper` is the best section found;
/// `lower` subtracts the mass of section nodes that straddle the boundary of
/// E (they may carry mass outside E).
pub fn section_outer_measure(
    s: &MoranStructure,
    targets: &[(f64, f64)],
    depth: usize,
) -> Result<(BigRational, BigRational)> {
    if s.dim != 1 {
        return Err(Error::Unsupported("section outer measure is implemented for dim 1".into()));
    }
    if depth < 1 {
        return Err(Error::InvalidParam("depth must be at least 1".into()));
    }
    fn intersects(node: &MoranNode, targets: &[(f64, f64)]) -> bool {
        targets.iter().any(|&(a, b)| node.hi[0] >= a && node.lo[0] <= b)
    }
    fn contained(node: &MoranNode, targets: &[(f64, f64)]) -> bool {
        targets.iter().any(|&(a, b)| node.lo[0] >= a && node.hi[0] <= b)
    }
    // Returns (section sum, straddling mass at the chosen section).
    fn rec(
        s: &MoranStructure,
        word: &mut Vec<usize>,
        depth_left: usize,
        targets: &[(f64, f64)],
    ) -> (BigRational, BigRational) {
        let node = s.node(word);
        if !intersects(&node, targets) {
            return (BigRational::zero(), BigRational::zero());
        }
        let mass = s.mass(word);
        let straddle_here =
            if contained(&node, targets) { BigRational::zero() } else { mass.clone() };
        if depth_left == 0 {
            return (mass, straddle_here);
        }
        let mut child_sum = BigRational::zero();
        let mut child_straddle = BigRational::zero();
        for j in 0..s.alphabet {
            word.push(j);
            let (cs, cstr) = rec(s, word, depth_left - 1, targets);
            word.pop();
            child_sum = &child_sum + &cs;
            child_straddle = &child_straddle + &cstr;
        }
        // Cut here when it is no worse: shallower sections straddle less.
        if mass <= child_sum {
            (mass, straddle_here)
        } else {
            (child_sum, child_straddle)
        }
    }
    let mut w = Vec::new();
    let (upper, straddle) = rec(s, &mut w, depth, targets);
    let lower = if straddle > upper { BigRational::zero() } else { &upper - &straddle };
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::fixtures::cantor_ifs;
    use crate::rational::parse_rational;

    #[test]
    fn closed_form_bounds() {
        let b = uniformly_perfect_bound(1.0 / 3.0, 0.5).unwrap();
        assert!((b - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        assert!((uniformly_perfect_bound(0.5, 0.5).unwrap() - 1.0).abs() < 1e-12);
        // gamma -> 0+ drives the bound to 0.
        assert!(uniformly_perfect_bound(0.5, 1e-12).unwrap() < 1e-10);
        assert!(uniformly_perfect_bound(1.5, 0.5).is_err());
        let m = moran_lower_bound(1.0 / 3.0, 0.5).unwrap();
        assert!((m - 0.6309297535714574).abs() < 1e-12);
        assert!((moran_lower_bound(0.5, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(moran_lower_bound(0.0, 0.5).is_err());
    }

    #[test]
    fn bounds_are_monotone() {
        let b1 = uniformly_perfect_bound(0.3, 0.4).unwrap();
        let b2 = uniformly_perfect_bound(0.3, 0.5).unwrap();
        assert!(b2 > b1); // larger annulus fraction, larger bound
        let b3 = uniformly_perfect_bound(0.4, 0.4).unwrap();
        assert!(b3 > b1); // larger c, larger bound
        let m1 = moran_lower_bound(0.3, 0.4).unwrap();
        assert!(moran_lower_bound(0.3, 0.5).unwrap() > m1);
        assert!(moran_lower_bound(0.4, 0.4).unwrap() > m1);
    }

    #[test]
    fn cantor_structure_passes_with_tight_constants() {
        let ifs = cantor_ifs("1/2", "1/2");
        let s = MoranStructure::from_similarity_ifs(&ifs);
        let report = verify_moran(&s, 5);
        assert!(report.all_passed(), "{:#?}", report.conditions);
        assert!((report.c1_hat - 1.0 / 3.0).abs() < 1e-9);
        assert!((report.c3_hat - 0.5).abs() < 1e-12);
        assert!((report.c2_hat - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn moran_bound_does_not_exceed_exact_cantor_dimension() {
        let exact = 2f64.ln() / 3f64.ln();
        let bound = moran_lower_bound(1.0 / 3.0, 0.5).unwrap();
        assert!(bound <= exact + 1e-12);
    }

    #[test]
    fn mass_violation_is_witnessed() {
        // A child carrying the full parent mass violates (C).
        let s = MoranStructure::new(
            2,
            1,
            0.4,
            0.1,
            0.9,
            Box::new(|w| {
                let mut lo = 0.0;
                let mut len = 1.0;
                for &j in w {
                    len /= 2.0;
                    if j == 1 {
                        lo += len;
                    }
                }
                MoranNode::interval(lo, lo + len)
            }),
            Box::new(|w| {
                if w.iter().all(|&j| j == 0) {
                    BigRational::from_integer(1.into())
                } else {
                    BigRational::zero()
                }
            }),
        );
        let report = verify_moran(&s, 3);
        let c3 = report.conditions.iter().find(|c| c.name.starts_with("(C)")).unwrap();
        assert!(!c3.passed);
        assert!(c3.witness.is_some());
        assert!((report.c3_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cantor_section_measure() {
        let ifs = cantor_ifs("1/2", "1/2");
        let s = MoranStructure::from_similarity_ifs(&ifs);
        // Full attractor.
        let (lo, up) = section_outer_measure(&s, &[(0.0, 1.0)], 3).unwrap();
        assert_eq!(lo, parse_rational("1").unwrap());
        assert_eq!(up, parse_rational("1").unwrap());
        // Left third: section {0,1} with only the left word intersecting.
        let third = 1.0f64 / 3.0;
        let (lo, up) = section_outer_measure(&s, &[(0.0, third)], 1).unwrap();
        assert_eq!(up, parse_rational("1/2").unwrap());
        assert_eq!(lo, parse_rational("1/2").unwrap());
        let (lo4, up4) = section_outer_measure(&s, &[(0.0, third)], 4).unwrap();
        assert_eq!(up4, parse_rational("1/2").unwrap());
        assert_eq!(lo4, parse_rational("1/2").unwrap());
        // Single point: the leftmost cylinder chain.
        let (_, up) = section_outer_measure(&s, &[(0.0, 0.0)], 6).unwrap();
        assert_eq!(up, parse_rational("1/64").unwrap());
    }

    #[test]
    fn section_upper_is_monotone_in_depth_and_subadditive() {
        let ifs = cantor_ifs("1/4", "3/4");
        let s = MoranStructure::from_similarity_ifs(&ifs);
        let t = (0.0, 0.4);
        let mut prev: Option<BigRational> = None;
        for depth in 1..=6 {
            let (_, up) = section_outer_measure(&s, &[t], depth).unwrap();
            if let Some(p) = prev {
                assert!(up <= p);
            }
            prev = Some(up);
        }
        // Subadditivity smoke test on disjoint pieces.
        let e1 = (0.0, 0.26);
        let e2 = (0.7, 1.0);
        let (l1, u1) = section_outer_measure(&s, &[e1], 5).unwrap();
        let (l2, u2) = section_outer_measure(&s, &[e2], 5).unwrap();
        let (_, u12) = section_outer_measure(&s, &[e1, e2], 5).unwrap();
        let slack = &(&u1 - &l1) + &(&u2 - &l2);
        assert!(u12 <= &(&u1 + &u2) + &slack);
    }
}
