//! Characteristic vectors and the local child construction.
//!
//! A net interval's local geometry is the triple (normalized length,
//! neighbour set, sibling index). The neighbour set encodes, up to the level
//! scaling, every generation map whose image covers the interval, which is
//! enough to construct the children of a net interval *locally*: extend each
//! neighbour word until its contraction drops below lambda, cut the interval
//! at the new endpoints, and keep the pieces covered by some extension. This
//! is what makes finite-type systems computable without enumerating Lambda_n.

use crate::field::FieldElement;
use crate::graph::TransitionMatrix;
use crate::ifs::{NetInterval, SimilarityIfs};
use crate::{Error, Result};
use num::{BigRational, One};
use std::cmp::Ordering;

/// The triple identifying a net interval's local geometry. Equality and
/// hashing are exact (coefficient-level) on all three components.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CharacteristicVector {
    pub norm_length: FieldElement,
    /// Ordered pairs (a_i, L_i), sorted lexicographically by exact comparison.
    pub neighbours: Vec<(FieldElement, FieldElement)>,
    /// 1-based position among the parent's children sharing (length, neighbours).
    pub sibling_index: u32,
}

impl CharacteristicVector {
    pub fn geometry(&self) -> CvGeometry {
        CvGeometry {
            norm_length: self.norm_length.clone(),
            neighbours: self.neighbours.clone(),
        }
    }

    /// The level-0 characteristic vector of [0,1].
    pub fn root(ifs: &SimilarityIfs) -> Self {
        CharacteristicVector {
            norm_length: ifs.field.one(),
            neighbours: vec![(ifs.field.zero(), ifs.field.one())],
            sibling_index: 1,
        }
    }
}

/// The (length, neighbour set) part of a characteristic vector; children and
/// transition matrices depend only on this.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CvGeometry {
    pub norm_length: FieldElement,
    pub neighbours: Vec<(FieldElement, FieldElement)>,
}

/// A child of a net interval: its characteristic vector, the primitive
/// transition matrix from the parent, and the child's left endpoint in
/// parent-normalized coordinates.
#[derive(Clone, Debug)]
pub struct Child {
    pub cv: CharacteristicVector,
    pub matrix: TransitionMatrix,
    pub offset: FieldElement,
}

/// One admissible extension of a parent neighbour to the next level: the word
/// omega with |L_i r_omega| <= lambda < |L_i r_(omega minus last)|.
struct Extension {
    parent_idx: usize,
    prob: BigRational,
    /// Scale of the extended map in level-n units: L_i * r_omega.
    scale: FieldElement,
    /// Image of 0 under the extended map in parent-normalized coordinates.
    offset: FieldElement,
    img_lo: FieldElement,
    img_hi: FieldElement,
}

/// Children of a net interval with the given geometry, left to right.
///
/// Matrix orientation: rows follow the parent's neighbour set, columns the
/// child's, so matrices along a root-to-leaf path multiply left to right.
/// An entry sums the probabilities of every extension word realizing that
/// (parent neighbour, child neighbour) pair; with no exact overlaps inside a
/// single parent word this is a single product of map probabilities.
pub fn children_of(geom: &CvGeometry, ifs: &SimilarityIfs) -> Result<Vec<Child>> {
    let field = &ifs.field;
    let lambda = &ifs.lambda;
    let ell = &geom.norm_length;

    // Admissible extensions of every neighbour. Any Lambda_(n+1) word whose
    // image meets the open interval extends one of the parent's neighbours,
    // so these extensions see every cut point and every covering map.
    let mut extensions: Vec<Extension> = Vec::new();
    for (i, (a_i, l_i)) in geom.neighbours.iter().enumerate() {
        let mut stack = vec![(l_i.clone(), -a_i, BigRational::one())];
        while let Some((scale, offset, prob)) = stack.pop() {
            if scale.abs().cmp_exact(lambda) != Ordering::Greater {
                let end = &scale + &offset;
                let (img_lo, img_hi) = if offset.cmp_exact(&end) == Ordering::Less {
                    (offset.clone(), end)
                } else {
                    (end, offset.clone())
                };
                extensions.push(Extension { parent_idx: i, prob, scale, offset, img_lo, img_hi });
                continue;
            }
            for (j, m) in ifs.maps.iter().enumerate() {
                stack.push((
                    &scale * &m.ratio,
                    &(&scale * &m.offset) + &offset,
                    &prob * &ifs.probs[j],
                ));
            }
        }
    }

    // Cut points inside (0, ell) from extension image endpoints.
    let mut cuts: Vec<FieldElement> = vec![field.zero(), ell.clone()];
    for e in &extensions {
        for v in [&e.img_lo, &e.img_hi] {
            if v.sign() > 0 && v.cmp_exact(ell) == Ordering::Less {
                cuts.push(v.clone());
            }
        }
    }
    cuts.sort_by(|a, b| a.cmp_exact(b));
    cuts.dedup();

    let lambda_inv = field.one().div(lambda).expect("lambda nonzero");

    struct RawChild {
        geometry: CvGeometry,
        matrix: TransitionMatrix,
        offset: FieldElement,
    }
    let mut raw: Vec<RawChild> = Vec::new();
    for pair in cuts.windows(2) {
        let (h0, h1) = (&pair[0], &pair[1]);
        let covering: Vec<&Extension> = extensions
            .iter()
            .filter(|e| {
                e.img_lo.cmp_exact(h0) != Ordering::Greater
                    && e.img_hi.cmp_exact(h1) != Ordering::Less
            })
            .collect();
        if covering.is_empty() {
            continue; // gap: no attractor points inside
        }
        // Child neighbour set: deduplicated normalized maps, sorted.
        let mut neighbours: Vec<(FieldElement, FieldElement)> = Vec::new();
        for e in &covering {
            let a = &(h0 - &e.offset) * &lambda_inv;
            let l = &e.scale * &lambda_inv;
            if !neighbours.iter().any(|(x, y)| x == &a && y == &l) {
                neighbours.push((a, l));
            }
        }
        neighbours.sort_by(|x, y| x.0.cmp_exact(&y.0).then_with(|| x.1.cmp_exact(&y.1)));
        let mut matrix = TransitionMatrix::zero(geom.neighbours.len(), neighbours.len());
        for e in &covering {
            let a = &(h0 - &e.offset) * &lambda_inv;
            let l = &e.scale * &lambda_inv;
            let col = neighbours
                .iter()
                .position(|(x, y)| x == &a && y == &l)
                .ok_or(Error::NeighbourMismatch)?;
            matrix.add_entry(e.parent_idx, col, &e.prob);
        }
        if !matrix.columns_nonzero() {
            return Err(Error::NeighbourMismatch);
        }
        raw.push(RawChild {
            geometry: CvGeometry { norm_length: &(h1 - h0) * &lambda_inv, neighbours },
            matrix,
            offset: h0.clone(),
        });
    }

    // Sibling indices among identical geometries, left to right.
    let mut out = Vec::with_capacity(raw.len());
    for (k, child) in raw.iter().enumerate() {
        let t = raw[..k].iter().filter(|c| c.geometry == child.geometry).count() as u32 + 1;
        out.push(Child {
            cv: CharacteristicVector {
                norm_length: child.geometry.norm_length.clone(),
                neighbours: child.geometry.neighbours.clone(),
                sibling_index: t,
            },
            matrix: child.matrix.clone(),
            offset: child.offset.clone(),
        });
    }
    Ok(out)
}

/// Characteristic vector of a net interval given its parent, per the global
/// net-interval picture. The root is its own parent by convention.
pub fn characteristic_vector(
    delta: &NetInterval,
    parent: &NetInterval,
    ifs: &SimilarityIfs,
) -> Result<CharacteristicVector> {
    if delta.level == 0 {
        return Ok(CharacteristicVector::root(ifs));
    }
    if parent.level + 1 != delta.level {
        return Err(Error::InvalidParam("parent must be one level above the child".into()));
    }
    if parent.lo.cmp_exact(&delta.lo) == Ordering::Greater
        || parent.hi.cmp_exact(&delta.hi) == Ordering::Less
    {
        return Err(Error::InvalidParam("interval is not contained in the stated parent".into()));
    }
    let geom =
        CvGeometry { norm_length: parent.norm_length.clone(), neighbours: parent.neighbours.clone() };
    let children = children_of(&geom, ifs)?;
    // Locate delta among the children by its offset inside the parent.
    let scale = ifs.lambda.pow(parent.level); // lambda^(n-1)
    let inv = ifs.field.one().div(&scale).expect("scale nonzero");
    let h0 = &(&delta.lo - &parent.lo) * &inv;
    let target =
        CvGeometry { norm_length: delta.norm_length.clone(), neighbours: delta.neighbours.clone() };
    for child in &children {
        if child.offset == h0 {
            if child.cv.geometry() != target {
                return Err(Error::NeighbourMismatch);
            }
            return Ok(child.cv.clone());
        }
    }
    Err(Error::InvalidParam("interval is not a child of the stated parent".into()))
}
