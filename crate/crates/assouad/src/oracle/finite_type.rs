//! Ball masses for finite-type self-similar measures, assembled from
//! net-interval matrix norms at the finest level above the query radius.
//! Exact under strong separation (net intervals are cylinder images and the
//! norms are cylinder masses); otherwise the values are norm stand-ins,
//! comparable to the measure only up to uniform constants, and the oracle
//! reports itself inexact.

use super::{MassBounds, MeasureOracle};
use crate::field::FieldElement;
use crate::graph::{build_transition_graph, GraphBudget, TransitionMatrix};
use crate::ifs::SimilarityIfs;
use crate::net::{children_of, Child, CharacteristicVector, CvGeometry};
use crate::{Error, Result};
use num::{BigRational, One, Signed, Zero};
use std::collections::HashMap;

pub struct NetIntervalOracle {
    ifs: SimilarityIfs,
    ssc: bool,
    depth_cap: u32,
    templates: HashMap<CvGeometry, Vec<Child>>,
    lambda_f64: f64,
    /// Exact lambda as a rational when the field is degree 1.
    lambda_exact: Option<BigRational>,
}

impl NetIntervalOracle {
    pub fn new(ifs: &SimilarityIfs, budget: GraphBudget, depth_cap: u32) -> Result<Self> {
        // Require closure so the template set is finite and complete.
        let graph = build_transition_graph(ifs, budget)?;
        let mut templates = HashMap::new();
        for node in &graph.nodes {
            let geom = node.geometry();
            if !templates.contains_key(&geom) {
                let kids = children_of(&geom, ifs)?;
                templates.insert(geom, kids);
            }
        }
        let lambda_abs = ifs.lambda.abs();
        Ok(NetIntervalOracle {
            ifs: ifs.clone(),
            ssc: ifs.strong_separation(),
            depth_cap,
            templates,
            lambda_f64: lambda_abs.to_f64(),
            lambda_exact: lambda_abs.as_rational(),
        })
    }

    pub fn strong_separation(&self) -> bool {
        self.ssc
    }

    fn level_for_radius(&self, r: &BigRational) -> u32 {
        // Smallest n with lambda^n <= r, then a few extra levels so partial
        // overlaps at the boundary contribute little.
        let r_f = crate::rational::rational_to_f64(r).max(1e-300);
        let n = (r_f.ln() / self.lambda_f64.ln()).ceil().max(0.0) as u32;
        (n + 12).min(self.depth_cap)
    }

    /// Sum of ||T(path)|| over net intervals at `level` classified against
    /// [a, b]: fully inside contribute to both bounds, partially overlapping
    /// to the upper bound only.
    fn interval_mass_at_level(
        &self,
        a: &FieldElement,
        b: &FieldElement,
        level: u32,
    ) -> MassBounds {
        use std::cmp::Ordering::*;
        let field = &self.ifs.field;
        let root_cv = CharacteristicVector::root(&self.ifs);
        struct Node {
            level: u32,
            lo: FieldElement,
            geometry: CvGeometry,
            norm: BigRational,
        }
        let mut total = MassBounds::zero();
        let mut stack = vec![Node {
            level: 0,
            lo: field.zero(),
            geometry: root_cv.geometry(),
            norm: BigRational::one(),
        }];
        // Row vector of per-neighbour mass contributions: start as the root's
        // 1x1 "matrix" norm; we track full matrix products per branch.
        let mut matrices: Vec<Option<TransitionMatrix>> = vec![None];
        while let Some(node) = stack.pop() {
            let matrix = matrices.pop().unwrap();
            let scale = self.ifs.lambda.pow(node.level);
            let width = &node.geometry.norm_length * &scale;
            let hi = &node.lo + &width;
            // Prune on exact comparisons; boundary touching carries no mass
            // for a non-atomic self-similar measure.
            if b.cmp_exact(&node.lo) != Greater || a.cmp_exact(&hi) != Less {
                continue;
            }
            if node.level == level {
                let inside =
                    a.cmp_exact(&node.lo) != Greater && b.cmp_exact(&hi) != Less;
                let m = MassBounds {
                    lower: if inside { node.norm.clone() } else { BigRational::zero() },
                    upper: node.norm.clone(),
                };
                total = total.add(&m);
                continue;
            }
            let kids = self
                .templates
                .get(&node.geometry)
                .expect("closed template set covers all reachable geometries");
            for child in kids {
                let child_matrix = match &matrix {
                    None => child.matrix.clone(),
                    Some(m) => m.matmul(&child.matrix).expect("chained neighbour sets"),
                };
                let norm = child_matrix.norm();
                let lo = &node.lo + &(&child.offset * &scale);
                stack.push(Node {
                    level: node.level + 1,
                    lo,
                    geometry: child.cv.geometry(),
                    norm,
                });
                matrices.push(Some(child_matrix));
            }
        }
        total
    }
}

impl MeasureOracle for NetIntervalOracle {
    fn name(&self) -> &'static str {
        "finite-type"
    }

    fn ball_mass(&self, x: &BigRational, r: &BigRational) -> Result<MassBounds> {
        if !r.is_positive() {
            return Err(Error::InvalidParam("radius must be positive".into()));
        }
        if *r < self.natural_scale(self.depth_cap) {
            return Err(Error::BelowDepthCap { requested: self.depth_cap + 1, cap: self.depth_cap });
        }
        let field = &self.ifs.field;
        let a = field.from_rational(x - r);
        let b = field.from_rational(x + r);
        let level = self.level_for_radius(r);
        Ok(self.interval_mass_at_level(&a, &b, level))
    }

    fn support_points(&self, seed: u64, count: usize) -> Vec<BigRational> {
        use rand::{Rng, SeedableRng};
        let mut pts = vec![BigRational::zero(), BigRational::one()];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let depth = 24u32.min(self.depth_cap);
        let mut pattern = 0u64;
        while pts.len() < count {
            // Walk cylinder words; midpoint of the final image interval.
            let mut word = Vec::new();
            for d in 0..depth {
                let n = self.ifs.len() as u64;
                let j = if pattern < (1 << 16) {
                    ((pattern >> (d % 16)) % n) as u8
                } else {
                    rng.random_range(0..n) as u8
                };
                word.push(j);
            }
            let map = self.ifs.compose(&word);
            let mid_f = map.offset.to_f64() + map.ratio.to_f64() / 2.0;
            let x = match (map.offset.as_rational(), map.ratio.as_rational()) {
                (Some(o), Some(rr)) => o + rr / BigRational::from_integer(2.into()),
                _ => BigRational::from_float(mid_f.clamp(0.0, 1.0)).unwrap_or_default(),
            };
            pts.push(x);
            pattern = pattern.wrapping_add(0x9e3779b97f4a7c15).rotate_left(9);
        }
        pts.truncate(count.max(2));
        pts
    }

    fn natural_scale(&self, level: u32) -> BigRational {
        match &self.lambda_exact {
            Some(l) => num::pow::pow(l.clone(), level as usize),
            None => BigRational::from_float(self.lambda_f64.powi(level as i32))
                .unwrap_or_else(|| BigRational::new(1.into(), num::BigInt::from(u64::MAX))),
        }
    }

    fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    fn is_exact(&self) -> bool {
        self.ssc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::fixtures::{cantor_ifs, golden_ifs};
    use crate::rational::{parse_rational, pow_inv};

    fn cantor_oracle() -> NetIntervalOracle {
        NetIntervalOracle::new(&cantor_ifs("1/2", "1/2"), GraphBudget::default(), 64).unwrap()
    }

    #[test]
    fn ssc_ball_masses_are_exact_cylinder_masses() {
        let o = cantor_oracle();
        assert!(o.is_exact());
        // B(0, 3^-k) covers exactly the leftmost level-k cylinder.
        for k in 1..=6u32 {
            let m = o.ball_mass(&BigRational::zero(), &pow_inv(3, k)).unwrap();
            assert_eq!(m.upper, crate::rational::pow2_inv(k));
            // Bounds are tight up to the refinement buffer.
            let gap = &m.upper - &m.lower;
            assert!(gap < parse_rational("1/1000").unwrap());
        }
    }

    #[test]
    fn root_ball_has_unit_mass() {
        let o = cantor_oracle();
        let m = o
            .ball_mass(&parse_rational("1/2").unwrap(), &BigRational::one())
            .unwrap();
        assert_eq!(m.upper, BigRational::one());
        assert_eq!(m.lower, BigRational::one());
    }

    #[test]
    fn golden_oracle_is_flagged_inexact() {
        let o = NetIntervalOracle::new(&golden_ifs(), GraphBudget::default(), 48).unwrap();
        assert!(!o.is_exact());
        let m = o
            .ball_mass(&parse_rational("1/2").unwrap(), &parse_rational("1/10").unwrap())
            .unwrap();
        use num::Signed;
        assert!(m.upper.is_positive());
    }

    #[test]
    fn monotone_and_unit_diameter() {
        let o = cantor_oracle();
        super::super::check_monotone_in_r(&o, 60, 19);
    }
}
