//! Self-affine systems embedded as Moran constructions.
//!
//! The embedding rests on a linear-algebra bound: for invertible A, the image
//! of an orthonormal basis under BA cannot be uniformly small relative to
//! ||B||, with constant alpha_A = 1/(d ||A^-1||). Applied to a basis of
//! attractor points it produces the separation constant of the construction.

use crate::moran::{MoranNode, MoranStructure};
use crate::parallel::map_range_maybe_par;
use crate::{Error, Result};
use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major d x d matrix of f64.
pub type Matrix = Vec<f64>;

/// Operator norm (largest singular value) via power iteration on A^T A,
/// relative tolerance 1e-12, capped iterations.
pub fn op_norm(a: &[f64], d: usize) -> f64 {
    debug_assert_eq!(a.len(), d * d);
    if d == 1 {
        return a[0].abs();
    }
    // Gram matrix G = A^T A.
    let mut g = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += a[k * d + i] * a[k * d + j];
            }
            g[i * d + j] = s;
        }
    }
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm0;
    }
    let mut prev = 0.0;
    for _ in 0..10_000 {
        let mut w = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                w[i] += g[i * d + j] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        v = w;
        if (norm - prev).abs() <= 1e-12 * norm.max(1e-300) {
            return norm.sqrt();
        }
        prev = norm;
    }
    prev.sqrt()
}

/// Gauss-Jordan inverse with partial pivoting; errors on tiny pivots.
pub fn invert(a: &[f64], d: usize) -> Result<Matrix> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        inv[i * d + i] = 1.0;
    }
    let scale = a.iter().map(|x| x.abs()).fold(0.0f64, f64::max).max(1e-300);
    for col in 0..d {
        let mut piv = col;
        for r in col + 1..d {
            if m[r * d + col].abs() > m[piv * d + col].abs() {
                piv = r;
            }
        }
        if m[piv * d + col].abs() < 1e-14 * scale {
            return Err(Error::NumericallySingular);
        }
        if piv != col {
            for k in 0..d {
                m.swap(col * d + k, piv * d + k);
                inv.swap(col * d + k, piv * d + k);
            }
        }
        let p = m[col * d + col];
        for k in 0..d {
            m[col * d + k] /= p;
            inv[col * d + k] /= p;
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = m[r * d + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..d {
                m[r * d + k] -= f * m[col * d + k];
                inv[r * d + k] -= f * inv[col * d + k];
            }
        }
    }
    Ok(inv)
}

/// alpha_A = (d ||A^-1||)^-1 for invertible A: for any B and orthonormal
/// basis E, max over e in E of |B A e| >= alpha_A ||B||.
pub fn matrix_alpha(a: &[f64], d: usize) -> Result<f64> {
    let inv = invert(a, d)?;
    let n_inv = op_norm(&inv, d);
    let cond = op_norm(a, d) * n_inv;
    if !cond.is_finite() || cond >= 1e12 {
        return Err(Error::NumericallySingular);
    }
    Ok(1.0 / (d as f64 * n_inv))
}

fn mat_vec(a: &[f64], d: usize, v: &[f64]) -> Vec<f64> {
    (0..d).map(|i| (0..d).map(|j| a[i * d + j] * v[j]).sum()).collect()
}

fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Matrix {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let x = a[i * d + k];
            if x == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += x * b[k * d + j];
            }
        }
    }
    out
}

/// One affine map x -> A x + t.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub a: Matrix,
    pub t: Vec<f64>,
}

/// An affine IFS with probability weights.
#[derive(Clone, Debug)]
pub struct AffineIfs {
    pub dim: usize,
    pub maps: Vec<AffineMap>,
    pub probs: Vec<BigRational>,
}

impl AffineIfs {
    pub fn new(dim: usize, maps: Vec<AffineMap>, probs: Vec<BigRational>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidIfs("need at least 2 maps".into()));
        }
        if probs.len() != maps.len() {
            return Err(Error::InvalidIfs("probs and maps must have equal length".into()));
        }
        use num::{One, Signed};
        if probs.iter().any(|p| !p.is_positive()) {
            return Err(Error::InvalidIfs("probabilities must be positive".into()));
        }
        let total: BigRational = probs.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::InvalidIfs("probabilities must sum to 1".into()));
        }
        for (j, m) in maps.iter().enumerate() {
            if m.a.len() != dim * dim || m.t.len() != dim {
                return Err(Error::InvalidIfs(format!("map {j}: wrong dimensions")));
            }
            let n = op_norm(&m.a, dim);
            if !(n < 1.0) {
                return Err(Error::InvalidIfs(format!("map {j}: ||A|| must be < 1, got {n}")));
            }
            invert(&m.a, dim).map_err(|_| {
                Error::InvalidIfs(format!("map {j}: linear part is numerically singular"))
            })?;
        }
        Ok(AffineIfs { dim, maps, probs })
    }

    fn fixed_point(&self, j: usize) -> Result<Vec<f64>> {
        // (I - A)^-1 t
        let d = self.dim;
        let m = &self.maps[j];
        let mut ia = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                ia[i * d + k] = if i == k { 1.0 - m.a[i * d + k] } else { -m.a[i * d + k] };
            }
        }
        let inv = invert(&ia, d)?;
        Ok(mat_vec(&inv, d, &m.t))
    }

    fn apply_word(&self, word: &[usize], x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for &j in word.iter().rev() {
            let m = &self.maps[j];
            let az = mat_vec(&m.a, self.dim, &y);
            y = az.iter().zip(m.t.iter()).map(|(a, t)| a + t).collect();
        }
        y
    }
}

/// Derived data of the self-affine Moran embedding.
pub struct Affinization {
    pub structure: MoranStructure,
    pub block_len: u32,
    pub anchor_radius: f64,
    pub alpha_y: f64,
    pub basis_points: Vec<Vec<f64>>,
}

const MAX_BLOCK_LEN: u32 = 64;
const MAX_C1_ENUM: usize = 1_000_000;

/// Embed an affine IFS as a Moran construction over blocks of length K:
/// nodes are f_v(B_R) for an anchor ball B_R with f_i(B_R) inside B_R, with
/// K minimal such that (max ||A_i||)^K < alpha_Y / (6R).
pub fn affinize(ifs: &AffineIfs) -> Result<Affinization> {
    let d = ifs.dim;
    if d > 3 {
        return Err(Error::Unsupported("affinize supports dimension <= 3".into()));
    }
    // Singleton check: two maps with distinct fixed points.
    let fixed: Vec<Vec<f64>> =
        (0..ifs.maps.len()).map(|j| ifs.fixed_point(j)).collect::<Result<_>>()?;
    let distinct =
        fixed.iter().any(|p| p.iter().zip(fixed[0].iter()).any(|(a, b)| (a - b).abs() > 1e-12));
    if !distinct {
        return Err(Error::InvalidIfs("attractor is a singleton".into()));
    }

    // Anchor radius: smallest power of 2 with ||A_i|| R + |t_i| <= R for all i.
    let mut r_min = 0.0f64;
    for m in &ifs.maps {
        let n = op_norm(&m.a, d);
        let t = m.t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if t > 0.0 {
            r_min = r_min.max(t / (1.0 - n));
        }
    }
    let radius = if r_min == 0.0 { 1.0 } else { 2f64.powi(r_min.log2().ceil() as i32) };

    // Basis of attractor points by greedy rank growth over cylinder images of
    // a fixed point; the linear map Y sends e_i to these points.
    let basis_points = greedy_attractor_basis(ifs, &fixed[0])?;
    let mut y = vec![0.0; d * d];
    for (col, p) in basis_points.iter().enumerate() {
        for row in 0..d {
            y[row * d + col] = p[row];
        }
    }
    let alpha_y = matrix_alpha(&y, d)?;

    let max_norm = ifs.maps.iter().map(|m| op_norm(&m.a, d)).fold(0.0f64, f64::max);
    let target = alpha_y / (6.0 * radius);
    let mut k = 1u32;
    while max_norm.powi(k as i32) >= target {
        k += 1;
        if k > MAX_BLOCK_LEN {
            return Err(Error::InvalidParam(format!(
                "block length exceeds {MAX_BLOCK_LEN}: contractions too weak for this anchor"
            )));
        }
    }

    let n = ifs.maps.len();
    let alphabet = n.pow(k);
    // C1 = min over blocks of ||(A_v1 ... A_vK)^-1||^-1, or the per-letter
    // product bound when enumeration would be too large.
    let c1 = if alphabet <= MAX_C1_ENUM {
        let vals = map_range_maybe_par(true, alphabet, |code| {
            let word = decode_block(code, n, k);
            let mut prod: Option<Matrix> = None;
            for &j in &word {
                prod = Some(match prod {
                    None => ifs.maps[j].a.clone(),
                    Some(p) => mat_mul(&p, &ifs.maps[j].a, d),
                });
            }
            let inv = invert(&prod.unwrap(), d)?;
            Ok::<f64, Error>(1.0 / op_norm(&inv, d))
        });
        let mut c1 = f64::INFINITY;
        for v in vals {
            c1 = c1.min(v?);
        }
        c1
    } else {
        let per_letter = ifs
            .maps
            .iter()
            .map(|m| Ok::<f64, Error>(1.0 / op_norm(&invert(&m.a, d)?, d)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        per_letter.powi(k as i32)
    };
    let c2 = alpha_y / (3.0 * radius);
    let c3 = {
        let pmax = ifs
            .probs
            .iter()
            .map(crate::rational::rational_to_f64)
            .fold(f64::NEG_INFINITY, f64::max);
        pmax.powi(k as i32)
    };

    let ifs_node = ifs.clone();
    let ifs_mass = ifs.clone();
    let n_letters = n;
    let kk = k;
    let rad = radius;
    let node_fn = Box::new(move |w: &[usize]| -> MoranNode {
        let word = expand_blocks(w, n_letters, kk);
        let d = ifs_node.dim;
        // Image of B_R: center f_v(0), circumscribed box from row norms of A_v.
        let mut a_prod: Option<Matrix> = None;
        for &j in &word {
            a_prod = Some(match a_prod {
                None => ifs_node.maps[j].a.clone(),
                Some(p) => mat_mul(&p, &ifs_node.maps[j].a, d),
            });
        }
        let center = ifs_node.apply_word(&word, &vec![0.0; d]);
        match a_prod {
            None => MoranNode { lo: vec![-rad; d], hi: vec![rad; d], diameter: 2.0 * rad },
            Some(a) => {
                let mut lo = Vec::with_capacity(d);
                let mut hi = Vec::with_capacity(d);
                for row in 0..d {
                    let rn: f64 =
                        (0..d).map(|j| a[row * d + j] * a[row * d + j]).sum::<f64>().sqrt();
                    lo.push(center[row] - rad * rn);
                    hi.push(center[row] + rad * rn);
                }
                MoranNode { lo, hi, diameter: 2.0 * rad * op_norm(&a, d) }
            }
        }
    });
    let mass_fn = Box::new(move |w: &[usize]| -> BigRational {
        let word = expand_blocks(w, n_letters, kk);
        word.iter().map(|&j| &ifs_mass.probs[j]).product()
    });

    Ok(Affinization {
        structure: MoranStructure::new(alphabet, d, c1, c2, c3, node_fn, mass_fn),
        block_len: k,
        anchor_radius: radius,
        alpha_y,
        basis_points,
    })
}

fn decode_block(code: usize, n: usize, k: u32) -> Vec<usize> {
    let mut w = Vec::with_capacity(k as usize);
    let mut c = code;
    for _ in 0..k {
        w.push(c % n);
        c /= n;
    }
    w
}

fn expand_blocks(blocks: &[usize], n: usize, k: u32) -> Vec<usize> {
    let mut out = Vec::with_capacity(blocks.len() * k as usize);
    for &b in blocks {
        out.extend(decode_block(b, n, k));
    }
    out
}

fn greedy_attractor_basis(ifs: &AffineIfs, seed_point: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = ifs.dim;
    // Candidate attractor points: images of a fixed point under words up to
    // depth 8 (breadth-first, capped).
    let mut candidates: Vec<Vec<f64>> = vec![seed_point.to_vec()];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    'outer: for _ in 0..8 {
        let mut next = Vec::new();
        for w in &frontier {
            for j in 0..ifs.maps.len() {
                let mut v = w.clone();
                v.push(j);
                candidates.push(ifs.apply_word(&v, seed_point));
                next.push(v);
                if candidates.len() >= 4096 {
                    break 'outer;
                }
            }
        }
        frontier = next;
    }
    // Greedy rank growth by Gram-Schmidt residuals.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for c in candidates {
        let mut r = c.clone();
        for q in &ortho {
            let dot: f64 = r.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
            for (x, qv) in r.iter_mut().zip(q.iter()) {
                *x -= dot * qv;
            }
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for x in r.iter_mut() {
                *x /= norm;
            }
            ortho.push(r);
            basis.push(c);
            if basis.len() == d {
                return Ok(basis);
            }
        }
    }
    Err(Error::InvalidIfs(
        "attractor spans a proper subspace: no basis of attractor points found".into(),
    ))
}

/// Property report for the basis bound max_e |B A e| >= alpha_A ||B||.
#[derive(Debug, Clone)]
pub struct MatrixBoundReport {
    pub trials: usize,
    pub violations: usize,
    pub min_slack: f64,
}

/// Randomized verification of the matrix bound over `trials` pairs (A, B)
/// per dimension, with tolerance `tol` (violation means the inequality fails
/// by more than `tol`).
pub fn matrix_bound_suite(
    trials: usize,
    dims: &[usize],
    seed: u64,
    tol: f64,
    parallel: bool,
) -> MatrixBoundReport {
    let mut total = 0usize;
    let mut violations = 0usize;
    let mut min_slack = f64::INFINITY;
    for &d in dims {
        let results = map_range_maybe_par(parallel, trials, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((d as u64) << 32) ^ t as u64);
            let a = loop {
                let a: Matrix = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
                if matrix_alpha(&a, d).is_ok() {
                    break a;
                }
            };
            let b: Matrix = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let alpha = matrix_alpha(&a, d).unwrap();
            let ba = mat_mul(&b, &a, d);
            let mut max_be = 0.0f64;
            for e in 0..d {
                let col: Vec<f64> = (0..d).map(|r| ba[r * d + e]).collect();
                let len = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                max_be = max_be.max(len);
            }
            max_be - alpha * op_norm(&b, d)
        });
        for slack in results {
            total += 1;
            min_slack = min_slack.min(slack);
            if slack < -tol {
                violations += 1;
            }
        }
    }
    MatrixBoundReport { trials: total, violations, min_slack }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moran::verify_moran;
    use crate::rational::parse_rational;

    #[test]
    fn alpha_of_identity_and_diagonal() {
        let eye = vec![1.0, 0.0, 0.0, 1.0];
        assert!((matrix_alpha(&eye, 2).unwrap() - 0.5).abs() < 1e-12);
        let diag = vec![0.5, 0.0, 0.0, 1.0 / 3.0];
        // ||A^-1|| = 3, so alpha = 1/6.
        assert!((matrix_alpha(&diag, 2).unwrap() - 1.0 / 6.0).abs() < 1e-10);
        let singular = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matrix_alpha(&singular, 2).is_err());
    }

    #[test]
    fn op_norm_matches_hand_values() {
        let a = vec![3.0, 0.0, 0.0, 2.0];
        assert!((op_norm(&a, 2) - 3.0).abs() < 1e-10);
        let rot = vec![0.0, -1.0, 1.0, 0.0];
        assert!((op_norm(&rot, 2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn matrix_bound_holds_on_random_pairs() {
        let report = matrix_bound_suite(500, &[2, 3, 4], 42, 1e-9, true);
        assert_eq!(report.violations, 0, "min slack {}", report.min_slack);
        assert!(report.min_slack > -1e-9);
    }

    fn half_probs(n: usize) -> Vec<BigRational> {
        let p = parse_rational(&format!("1/{n}")).unwrap();
        vec![p; n]
    }

    #[test]
    fn similarity_special_case_reduces_to_moran() {
        // Two similarity maps with ratio 1/3 in the plane.
        let a = vec![1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0];
        let maps = vec![
            AffineMap { a: a.clone(), t: vec![0.0, 0.0] },
            AffineMap { a, t: vec![2.0 / 3.0, 2.0 / 3.0] },
        ];
        let ifs = AffineIfs::new(2, maps, half_probs(2)).unwrap();
        let aff = affinize(&ifs).unwrap();
        let report = verify_moran(&aff.structure, 2);
        assert!(report.all_passed(), "{:#?}", report.conditions);
    }

    #[test]
    fn diagonal_generator_passes_with_computed_block() {
        // Carpet-style generator diag(1/2, 1/3), two translations.
        let a = vec![0.5, 0.0, 0.0, 1.0 / 3.0];
        let maps = vec![
            AffineMap { a: a.clone(), t: vec![0.0, 0.0] },
            AffineMap { a, t: vec![0.5, 2.0 / 3.0] },
        ];
        let ifs = AffineIfs::new(2, maps, half_probs(2)).unwrap();
        let aff = affinize(&ifs).unwrap();
        assert!(aff.block_len >= 1 && aff.block_len <= MAX_BLOCK_LEN);
        let report = verify_moran(&aff.structure, 2);
        assert!(report.all_passed(), "K={} {:#?}", aff.block_len, report.conditions);
    }

    #[test]
    fn singleton_attractor_is_rejected() {
        let a = vec![0.5, 0.0, 0.0, 0.5];
        let maps = vec![
            AffineMap { a: a.clone(), t: vec![0.0, 0.0] },
            AffineMap { a, t: vec![0.0, 0.0] },
        ];
        let ifs = AffineIfs::new(2, maps, half_probs(2)).unwrap();
        assert!(affinize(&ifs).is_err());
    }

    #[test]
    fn basis_points_are_attractor_points_and_independent() {
        let a = vec![0.5, 0.0, 0.0, 1.0 / 3.0];
        let maps = vec![
            AffineMap { a: a.clone(), t: vec![0.0, 0.0] },
            AffineMap { a, t: vec![0.5, 2.0 / 3.0] },
        ];
        let ifs = AffineIfs::new(2, maps, half_probs(2)).unwrap();
        let aff = affinize(&ifs).unwrap();
        assert_eq!(aff.basis_points.len(), 2);
        let y = [
            aff.basis_points[0][0],
            aff.basis_points[1][0],
            aff.basis_points[0][1],
            aff.basis_points[1][1],
        ];
        assert!(matrix_alpha(&y, 2).is_ok());
    }
}
