//! Similarity IFS on the line with exact algebraic coefficients, generation
//! words and net intervals.

use crate::field::{FieldElement, NumberField};
use crate::{Error, Result};
use num::{BigRational, One, Signed};
use std::sync::Arc;

/// One similarity S(x) = r x + d with 0 < |r| < 1.
#[derive(Clone, Debug)]
pub struct SimilarityMap {
    pub ratio: FieldElement,
    pub offset: FieldElement,
}

impl SimilarityMap {
    pub fn apply(&self, x: &FieldElement) -> FieldElement {
        &(&self.ratio * x) + &self.offset
    }
}

/// An IFS of similarities with probability weights, normalized so the convex
/// hull of the attractor is [0, 1] (verified at construction, not enforced).
#[derive(Clone)]
pub struct SimilarityIfs {
    pub field: Arc<NumberField>,
    pub maps: Vec<SimilarityMap>,
    pub probs: Vec<BigRational>,
    /// lambda = min_j |r_j|.
    pub lambda: FieldElement,
}

impl SimilarityIfs {
    pub fn new(
        field: Arc<NumberField>,
        maps: Vec<SimilarityMap>,
        probs: Vec<BigRational>,
    ) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidIfs("need at least 2 maps".into()));
        }
        if probs.len() != maps.len() {
            return Err(Error::InvalidIfs("probs and maps must have equal length".into()));
        }
        if probs.iter().any(|p| !p.is_positive()) {
            return Err(Error::InvalidIfs("probabilities must be positive".into()));
        }
        let total: BigRational = probs.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::InvalidIfs("probabilities must sum to 1".into()));
        }
        let one = field.one();
        for (j, m) in maps.iter().enumerate() {
            let a = m.ratio.abs();
            if a.sign() <= 0 || a.cmp_exact(&one) != std::cmp::Ordering::Less {
                return Err(Error::InvalidIfs(format!("map {j}: |r| must lie in (0,1)")));
            }
        }
        // Convex hull of the attractor is [0,1]: images of [0,1] stay inside,
        // the minimum endpoint is 0 and the maximum is 1.
        let zero = field.zero();
        let mut min_end: Option<FieldElement> = None;
        let mut max_end: Option<FieldElement> = None;
        for (j, m) in maps.iter().enumerate() {
            let e0 = m.apply(&zero);
            let e1 = m.apply(&one);
            let (lo, hi) = if e0.cmp_exact(&e1) == std::cmp::Ordering::Less {
                (e0, e1)
            } else {
                (e1, e0)
            };
            if lo.sign() < 0 || hi.cmp_exact(&one) == std::cmp::Ordering::Greater {
                return Err(Error::InvalidIfs(format!("map {j}: image of [0,1] leaves [0,1]")));
            }
            min_end = Some(match min_end {
                Some(cur) if cur.cmp_exact(&lo) != std::cmp::Ordering::Greater => cur,
                _ => lo,
            });
            max_end = Some(match max_end {
                Some(cur) if cur.cmp_exact(&hi) != std::cmp::Ordering::Less => cur,
                _ => hi,
            });
        }
        if !min_end.unwrap().is_zero() || max_end.unwrap() != one {
            return Err(Error::InvalidIfs(
                "attractor hull is not [0,1]: rescale the system first".into(),
            ));
        }
        let lambda = maps
            .iter()
            .map(|m| m.ratio.abs())
            .min_by(|a, b| a.cmp_exact(b))
            .unwrap();
        Ok(SimilarityIfs { field, maps, probs, lambda })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Strong separation: the closed images S_j([0,1]) are pairwise disjoint.
    pub fn strong_separation(&self) -> bool {
        let zero = self.field.zero();
        let one = self.field.one();
        let mut hulls: Vec<(FieldElement, FieldElement)> = self
            .maps
            .iter()
            .map(|m| {
                let e0 = m.apply(&zero);
                let e1 = m.apply(&one);
                if e0.cmp_exact(&e1) == std::cmp::Ordering::Less {
                    (e0, e1)
                } else {
                    (e1, e0)
                }
            })
            .collect();
        hulls.sort_by(|a, b| a.0.cmp_exact(&b.0));
        hulls.windows(2).all(|w| w[0].1.cmp_exact(&w[1].0) == std::cmp::Ordering::Less)
    }

    /// Composite map S_v for a word over the alphabet.
    pub fn compose(&self, word: &[u8]) -> SimilarityMap {
        let mut ratio = self.field.one();
        let mut offset = self.field.zero();
        for &j in word {
            let m = &self.maps[j as usize];
            // S_v o S_j: x -> r_v (r_j x + d_j) + d_v
            offset = &(&ratio * &m.offset) + &offset;
            ratio = &ratio * &m.ratio;
        }
        SimilarityMap { ratio, offset }
    }

    pub fn word_prob(&self, word: &[u8]) -> BigRational {
        word.iter().map(|&j| &self.probs[j as usize]).product()
    }
}

/// A word of a generation set Lambda_n together with its contraction and mass.
#[derive(Clone, Debug)]
pub struct GenerationWord {
    pub letters: Vec<u8>,
    pub ratio: FieldElement,
    pub offset: FieldElement,
    pub prob: BigRational,
}

/// The generation set Lambda_n: words whose contraction first drops to
/// lambda^n. By convention Lambda_0 is the set of single letters.
pub fn generate_lambda_n(ifs: &SimilarityIfs, n: u32) -> Vec<GenerationWord> {
    if n == 0 {
        return (0..ifs.len() as u8)
            .map(|j| {
                let m = &ifs.maps[j as usize];
                GenerationWord {
                    letters: vec![j],
                    ratio: m.ratio.clone(),
                    offset: m.offset.clone(),
                    prob: ifs.probs[j as usize].clone(),
                }
            })
            .collect();
    }
    let threshold = ifs.lambda.pow(n);
    let mut out = Vec::new();
    // DFS: extend while |r_v| > lambda^n, emit at the first drop below.
    let mut stack: Vec<GenerationWord> = (0..ifs.len() as u8)
        .rev()
        .map(|j| {
            let m = &ifs.maps[j as usize];
            GenerationWord {
                letters: vec![j],
                ratio: m.ratio.clone(),
                offset: m.offset.clone(),
                prob: ifs.probs[j as usize].clone(),
            }
        })
        .collect();
    while let Some(w) = stack.pop() {
        if w.ratio.abs().cmp_exact(&threshold) != std::cmp::Ordering::Greater {
            out.push(w);
            continue;
        }
        for j in (0..ifs.len() as u8).rev() {
            let m = &ifs.maps[j as usize];
            let mut letters = w.letters.clone();
            letters.push(j);
            stack.push(GenerationWord {
                letters,
                ratio: &w.ratio * &m.ratio,
                offset: &(&w.ratio * &m.offset) + &w.offset,
                prob: &w.prob * &ifs.probs[j as usize],
            });
        }
    }
    out
}

/// A net interval of level n: endpoints are consecutive images of {0,1} under
/// Lambda_n words, and the open interval meets the attractor.
#[derive(Clone, Debug)]
pub struct NetInterval {
    pub level: u32,
    pub lo: FieldElement,
    pub hi: FieldElement,
    /// lambda^-n (hi - lo).
    pub norm_length: FieldElement,
    /// Normalized neighbour pairs (a_i, L_i), sorted lexicographically.
    pub neighbours: Vec<(FieldElement, FieldElement)>,
}

/// Global net-interval computation at level n by enumerating Lambda_n,
/// sorting endpoints exactly and keeping intervals covered by some word image.
/// Exponential in n; intended for small levels and as a cross-check of the
/// local transition-graph construction.
pub fn net_intervals(ifs: &SimilarityIfs, n: u32) -> Vec<NetInterval> {
    let field = &ifs.field;
    let zero = field.zero();
    let one = field.one();
    if n == 0 {
        return vec![NetInterval {
            level: 0,
            lo: zero,
            hi: one.clone(),
            norm_length: one.clone(),
            neighbours: vec![(field.zero(), one)],
        }];
    }
    let words = lambda_n_internal(ifs, n);
    // Image hulls and the sorted endpoint list.
    let mut hulls: Vec<(FieldElement, FieldElement, FieldElement)> = Vec::new(); // lo, hi, S_v(0)
    let mut endpoints: Vec<FieldElement> = Vec::new();
    for w in &words {
        let e0 = &w.offset; // S_v(0)
        let e1 = &(&w.ratio * &one) + &w.offset;
        let (lo, hi) = if e0.cmp_exact(&e1) == std::cmp::Ordering::Less {
            (e0.clone(), e1.clone())
        } else {
            (e1.clone(), e0.clone())
        };
        endpoints.push(lo.clone());
        endpoints.push(hi.clone());
        hulls.push((lo, hi, w.offset.clone()));
    }
    endpoints.sort_by(|a, b| a.cmp_exact(b));
    endpoints.dedup();

    let lambda_inv_n = one.div(&ifs.lambda.pow(n)).expect("lambda is nonzero");
    let mut out = Vec::new();
    for pair in endpoints.windows(2) {
        let (h0, h1) = (&pair[0], &pair[1]);
        // Keep [h0,h1] iff some word image covers it; words whose hull merely
        // touches at an endpoint do not witness attractor points inside.
        let mut neigh: Vec<(FieldElement, FieldElement)> = Vec::new();
        for (w, (lo, hi, sv0)) in words.iter().zip(hulls.iter()) {
            if lo.cmp_exact(h0) != std::cmp::Ordering::Greater
                && hi.cmp_exact(h1) != std::cmp::Ordering::Less
            {
                // a_i = lambda^-n (h0 - S_v(0)), L_i = lambda^-n r_v
                let a = &(h0 - sv0) * &lambda_inv_n;
                let l = &w.ratio * &lambda_inv_n;
                if !neigh.contains(&(a.clone(), l.clone())) {
                    neigh.push((a, l));
                }
            }
        }
        if neigh.is_empty() {
            continue;
        }
        neigh.sort_by(|x, y| x.0.cmp_exact(&y.0).then_with(|| x.1.cmp_exact(&y.1)));
        out.push(NetInterval {
            level: n,
            lo: h0.clone(),
            hi: h1.clone(),
            norm_length: &(h1 - h0) * &lambda_inv_n,
            neighbours: neigh,
        });
    }
    out
}

/// Lambda_n for n >= 1 per the defining inequalities (the empty word stands in
/// at level 0 for the net-interval machinery).
pub(crate) fn lambda_n_internal(ifs: &SimilarityIfs, n: u32) -> Vec<GenerationWord> {
    assert!(n >= 1);
    generate_lambda_n(ifs, n)
}

#[cfg(test)]
pub mod fixtures {
    use super::*;
    use crate::field::NumberField;
    use crate::rational::parse_rational;
    use num::BigInt;

    pub fn rational_field() -> Arc<NumberField> {
        NumberField::new(
            &[-3, 1],
            BigRational::from(BigInt::from(2)),
            BigRational::from(BigInt::from(4)),
        )
        .unwrap()
    }

    /// Middle-third Cantor measure with probabilities (p1, p2).
    pub fn cantor_ifs(p1: &str, p2: &str) -> SimilarityIfs {
        let f = rational_field();
        let third = f.from_rational(parse_rational("1/3").unwrap());
        let maps = vec![
            SimilarityMap { ratio: third.clone(), offset: f.zero() },
            SimilarityMap {
                ratio: third,
                offset: f.from_rational(parse_rational("2/3").unwrap()),
            },
        ];
        SimilarityIfs::new(
            f,
            maps,
            vec![parse_rational(p1).unwrap(), parse_rational(p2).unwrap()],
        )
        .unwrap()
    }

    /// Golden-mean Bernoulli convolution: r = 1/rho for rho^2 = rho + 1.
    pub fn golden_ifs() -> SimilarityIfs {
        let f = NumberField::new(
            &[-1, -1, 1],
            BigRational::from(BigInt::from(1)),
            BigRational::from(BigInt::from(2)),
        )
        .unwrap();
        let rho = f.generator();
        let rho_inv = f.one().div(&rho).unwrap(); // = rho - 1
        let d2 = &f.one() - &rho_inv; // 1 - 1/rho = 2 - rho
        let maps = vec![
            SimilarityMap { ratio: rho_inv.clone(), offset: f.zero() },
            SimilarityMap { ratio: rho_inv, offset: d2 },
        ];
        SimilarityIfs::new(
            f,
            maps,
            vec![parse_rational("1/2").unwrap(), parse_rational("1/2").unwrap()],
        )
        .unwrap()
    }

    /// Two-ratio OSC system r = (1/2, 1/3): multiplicatively incommensurable,
    /// so the characteristic-vector count grows without bound.
    pub fn incommensurable_ifs() -> SimilarityIfs {
        let f = rational_field();
        let maps = vec![
            SimilarityMap {
                ratio: f.from_rational(parse_rational("1/2").unwrap()),
                offset: f.zero(),
            },
            SimilarityMap {
                ratio: f.from_rational(parse_rational("1/3").unwrap()),
                offset: f.from_rational(parse_rational("2/3").unwrap()),
            },
        ];
        SimilarityIfs::new(
            f,
            maps,
            vec![parse_rational("1/2").unwrap(), parse_rational("1/2").unwrap()],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::field::NumberField;
    use crate::rational::parse_rational;
    use num::BigInt;

    #[test]
    fn lambda_n_equicontractive_is_full_shift() {
        let ifs = cantor_ifs("1/2", "1/2");
        let words = generate_lambda_n(&ifs, 2);
        assert_eq!(words.len(), 4);
        assert!(words.iter().all(|w| w.letters.len() == 2));
    }

    #[test]
    fn lambda_n_mixed_ratios() {
        // r = (1/2, 1/4), lambda = 1/4; Lambda_1 = {2, 11, 12}.
        let f = rational_field();
        let maps = vec![
            SimilarityMap {
                ratio: f.from_rational(parse_rational("1/2").unwrap()),
                offset: f.zero(),
            },
            SimilarityMap {
                ratio: f.from_rational(parse_rational("1/4").unwrap()),
                offset: f.from_rational(parse_rational("3/4").unwrap()),
            },
        ];
        let ifs = SimilarityIfs::new(
            f,
            maps,
            vec![parse_rational("1/2").unwrap(), parse_rational("1/2").unwrap()],
        )
        .unwrap();
        let mut words: Vec<Vec<u8>> =
            generate_lambda_n(&ifs, 1).into_iter().map(|w| w.letters).collect();
        words.sort();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn lambda_0_is_single_letters() {
        let ifs = golden_ifs();
        let words = generate_lambda_n(&ifs, 0);
        assert_eq!(words.len(), 2);
        assert!(words.iter().all(|w| w.letters.len() == 1));
    }

    #[test]
    fn section_property_to_depth_6() {
        for ifs in [cantor_ifs("1/2", "1/2"), golden_ifs(), incommensurable_ifs()] {
            for n in 1..=6u32 {
                let lambda_words: Vec<Vec<u8>> =
                    generate_lambda_n(&ifs, n).into_iter().map(|w| w.letters).collect();
                // Long words: length safely past any Lambda_n member.
                let max_len = lambda_words.iter().map(|w| w.len()).max().unwrap() + 1;
                let mut stack: Vec<Vec<u8>> = vec![vec![]];
                let mut checked = 0usize;
                while let Some(w) = stack.pop() {
                    if w.len() == max_len {
                        let prefixes = lambda_words
                            .iter()
                            .filter(|lw| w.starts_with(lw))
                            .count();
                        assert_eq!(prefixes, 1, "word {w:?} at level {n}");
                        checked += 1;
                        continue;
                    }
                    for j in 0..ifs.len() as u8 {
                        let mut v = w.clone();
                        v.push(j);
                        stack.push(v);
                    }
                }
                assert!(checked > 0);
            }
        }
    }

    #[test]
    fn cantor_net_intervals_level_1() {
        let ifs = cantor_ifs("1/2", "1/2");
        let nets = net_intervals(&ifs, 1);
        assert_eq!(nets.len(), 2);
        let third = parse_rational("1/3").unwrap();
        assert_eq!(nets[0].lo.as_rational().unwrap(), BigRational::from(BigInt::from(0)));
        assert_eq!(nets[0].hi.as_rational().unwrap(), third);
        assert_eq!(nets[1].lo.as_rational().unwrap(), parse_rational("2/3").unwrap());
        // Normalized length 1, single neighbour (0, 1).
        assert!(nets[0].norm_length == ifs.field.one());
        assert_eq!(nets[0].neighbours.len(), 1);
        assert!(nets[0].neighbours[0].0.is_zero());
        assert!(nets[0].neighbours[0].1 == ifs.field.one());
    }

    #[test]
    fn level_0_net_interval_is_root() {
        let ifs = cantor_ifs("1/2", "1/2");
        let nets = net_intervals(&ifs, 0);
        assert_eq!(nets.len(), 1);
        assert!(nets[0].lo.is_zero());
        assert!(nets[0].hi == ifs.field.one());
    }

    #[test]
    fn golden_level_1_has_overlap_interval() {
        let ifs = golden_ifs();
        let nets = net_intervals(&ifs, 1);
        assert_eq!(nets.len(), 3);
        // Middle interval is covered by both maps.
        assert_eq!(nets[1].neighbours.len(), 2);
        // Endpoints: 0 < 2-rho < rho-1 < 1.
        assert!(nets[0].lo.is_zero());
        assert!(nets[2].hi == ifs.field.one());
        assert!(nets[0].hi == nets[1].lo);
        assert!(nets[1].hi == nets[2].lo);
    }

    #[test]
    fn net_intervals_cover_word_hulls() {
        for ifs in [cantor_ifs("1/4", "3/4"), golden_ifs()] {
            for n in 1..=4u32 {
                let nets = net_intervals(&ifs, n);
                let one = ifs.field.one();
                for w in generate_lambda_n(&ifs, n) {
                    let e0 = w.offset.clone();
                    let e1 = &(&w.ratio * &one) + &w.offset;
                    let (lo, hi) = if e0.cmp_exact(&e1) == std::cmp::Ordering::Less {
                        (e0, e1)
                    } else {
                        (e1, e0)
                    };
                    // Each hull is tiled by net intervals.
                    let mut covered = ifs.field.zero();
                    for net in &nets {
                        let s = if net.lo.cmp_exact(&lo) == std::cmp::Ordering::Less {
                            lo.clone()
                        } else {
                            net.lo.clone()
                        };
                        let e = if net.hi.cmp_exact(&hi) == std::cmp::Ordering::Greater {
                            hi.clone()
                        } else {
                            net.hi.clone()
                        };
                        if s.cmp_exact(&e) == std::cmp::Ordering::Less {
                            covered = &covered + &(&e - &s);
                        }
                    }
                    assert!(covered == &hi - &lo, "hull not tiled at level {n}");
                }
            }
        }
    }

    #[test]
    fn hull_normalization_is_verified() {
        let f = rational_field();
        let maps = vec![
            SimilarityMap {
                ratio: f.from_rational(parse_rational("1/3").unwrap()),
                offset: f.zero(),
            },
            SimilarityMap {
                ratio: f.from_rational(parse_rational("1/3").unwrap()),
                offset: f.from_rational(parse_rational("1/3").unwrap()),
            },
        ];
        let r = SimilarityIfs::new(
            f,
            maps,
            vec![parse_rational("1/2").unwrap(), parse_rational("1/2").unwrap()],
        );
        assert!(r.is_err()); // hull is [0, 2/3]
    }

    #[test]
    fn negative_ratios_are_supported() {
        // S_1(x) = -x/3 + 1/3 maps [0,1] to [0,1/3]; S_2 as usual.
        let f = rational_field();
        let maps = vec![
            SimilarityMap {
                ratio: f.from_rational(parse_rational("-1/3").unwrap()),
                offset: f.from_rational(parse_rational("1/3").unwrap()),
            },
            SimilarityMap {
                ratio: f.from_rational(parse_rational("1/3").unwrap()),
                offset: f.from_rational(parse_rational("2/3").unwrap()),
            },
        ];
        let ifs = SimilarityIfs::new(
            f,
            maps,
            vec![parse_rational("1/2").unwrap(), parse_rational("1/2").unwrap()],
        )
        .unwrap();
        let nets = net_intervals(&ifs, 1);
        assert_eq!(nets.len(), 2);
        // The reflected neighbour carries a negative L.
        assert!(nets[0].neighbours[0].1.is_negative());
    }
}
