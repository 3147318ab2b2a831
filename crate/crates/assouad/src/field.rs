//! Exact arithmetic in Q[rho] for a fixed real algebraic rho.
//!
//! `NumberField` fixes a monic integer polynomial together with an isolating
//! interval for one of its real roots. `FieldElement` is a residue modulo the
//! polynomial with rational coefficients; equality of canonical forms is exact,
//! and the sign of the real value at rho is decidable, so net-interval
//! endpoints can be sorted without any rounding.

use crate::rational::{rational_to_f64, sign};
use crate::{Error, Result};
use num::{BigInt, BigRational, One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

type Poly = Vec<BigRational>;

fn poly_trim(p: &mut Poly) {
    while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
}

fn poly_deg(p: &Poly) -> usize {
    p.len() - 1
}

fn poly_is_zero(p: &Poly) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn poly_eval(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn poly_derivative(p: &[BigRational]) -> Poly {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from(BigInt::from(i)))
        .collect()
}

/// Remainder of a modulo b; b must be nonzero.
fn poly_rem(a: &Poly, b: &Poly) -> Poly {
    let mut r = a.clone();
    poly_trim(&mut r);
    let db = poly_deg(b);
    let lead = b[db].clone();
    while !poly_is_zero(&r) && poly_deg(&r) >= db {
        let dr = poly_deg(&r);
        let coef = &r[dr] / &lead;
        let shift = dr - db;
        for i in 0..=db {
            let t = &coef * &b[i];
            r[i + shift] = &r[i + shift] - t;
        }
        poly_trim(&mut r);
        if dr == 0 {
            break;
        }
    }
    r
}

fn poly_monic(mut p: Poly) -> Poly {
    poly_trim(&mut p);
    let lead = p[poly_deg(&p)].clone();
    if !lead.is_zero() && !lead.is_one() {
        for c in p.iter_mut() {
            *c = &*c / &lead;
        }
    }
    p
}

fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let mut x = a.clone();
    let mut y = b.clone();
    poly_trim(&mut x);
    poly_trim(&mut y);
    while !poly_is_zero(&y) {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
        poly_trim(&mut y);
    }
    poly_monic(x)
}

/// Evaluate p on the interval [lo, hi] with interval Horner; returns an
/// enclosing interval of the range.
fn poly_eval_interval(
    p: &[BigRational],
    lo: &BigRational,
    hi: &BigRational,
) -> (BigRational, BigRational) {
    let mut alo = BigRational::zero();
    let mut ahi = BigRational::zero();
    for c in p.iter().rev() {
        // [alo,ahi] * [lo,hi] + c
        let c1 = &alo * lo;
        let c2 = &alo * hi;
        let c3 = &ahi * lo;
        let c4 = &ahi * hi;
        let mut mn = c1.clone();
        let mut mx = c1;
        for v in [c2, c3, c4] {
            if v < mn {
                mn = v.clone();
            }
            if v > mx {
                mx = v;
            }
        }
        alo = mn + c;
        ahi = mx + c;
    }
    (alo, ahi)
}

/// A real algebraic number field Q[rho].
///
/// The minimal polynomial is caller-supplied and is verified to be squarefree
/// (gcd with its derivative is constant) but not irreducible. The isolating
/// interval must contain exactly one real root, witnessed by a strict sign
/// change at its endpoints.
pub struct NumberField {
    min_poly: Poly,
    degree: usize,
    iso_lo: BigRational,
    iso_hi: BigRational,
    sign_at_lo: i8,
    /// x^d reduced modulo min_poly.
    reduction0: Vec<BigRational>,
    approx_root: f64,
}

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NumberField(degree {}, root ~ {})", self.degree, self.approx_root)
    }
}

impl NumberField {
    /// Build a field from integer minimal-polynomial coefficients (constant
    /// first, monic) and a root-isolating interval.
    pub fn new(min_poly: &[i64], iso_lo: BigRational, iso_hi: BigRational) -> Result<Arc<Self>> {
        if min_poly.len() < 2 {
            return Err(Error::InvalidField("minimal polynomial must have degree >= 1".into()));
        }
        if *min_poly.last().unwrap() != 1 {
            return Err(Error::InvalidField("minimal polynomial must be monic".into()));
        }
        let poly: Poly = min_poly.iter().map(|&c| BigRational::from(BigInt::from(c))).collect();
        let degree = poly.len() - 1;
        let deriv = poly_derivative(&poly);
        let g = poly_gcd(&poly, &deriv);
        if poly_deg(&g) != 0 {
            return Err(Error::InvalidField("minimal polynomial is not squarefree".into()));
        }
        if iso_lo >= iso_hi {
            return Err(Error::InvalidField("isolating interval is empty".into()));
        }
        let vlo = poly_eval(&poly, &iso_lo);
        let vhi = poly_eval(&poly, &iso_hi);
        if vlo.is_zero() || vhi.is_zero() || (vlo.is_positive() == vhi.is_positive()) {
            return Err(Error::InvalidField(
                "minimal polynomial must change sign exactly once across the isolating interval"
                    .into(),
            ));
        }
        let sign_at_lo = sign(&vlo);

        // x^d mod p = -(c_0 + c_1 x + ... + c_{d-1} x^{d-1})
        let reduction0: Vec<BigRational> = poly[..degree].iter().map(|c| -c).collect();

        let mut field = NumberField {
            min_poly: poly,
            degree,
            iso_lo,
            iso_hi,
            sign_at_lo,
            reduction0,
            approx_root: 0.0,
        };
        // Refine once at construction so element sign checks usually resolve in
        // a single interval evaluation. The field is immutable afterwards.
        field.refine_isolating_interval(128);
        field.approx_root =
            rational_to_f64(&((&field.iso_lo + &field.iso_hi) / BigRational::from(BigInt::from(2))));
        Ok(Arc::new(field))
    }

    fn refine_isolating_interval(&mut self, steps: u32) {
        let two = BigRational::from(BigInt::from(2));
        for _ in 0..steps {
            let mid = (&self.iso_lo + &self.iso_hi) / &two;
            let v = poly_eval(&self.min_poly, &mid);
            if v.is_zero() {
                // Rational root: collapse to a degenerate-width interval around it.
                let eps = (&self.iso_hi - &self.iso_lo) / BigRational::from(BigInt::from(1u64 << 32));
                self.iso_lo = &mid - &eps;
                self.iso_hi = &mid + &eps;
                return;
            }
            if sign(&v) == self.sign_at_lo {
                self.iso_lo = mid;
            } else {
                self.iso_hi = mid;
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn min_poly(&self) -> Vec<BigRational> {
        self.min_poly.clone()
    }

    /// f64 approximation of rho.
    pub fn approx_root(&self) -> f64 {
        self.approx_root
    }

    pub fn zero(self: &Arc<Self>) -> FieldElement {
        self.from_rational(BigRational::zero())
    }

    pub fn one(self: &Arc<Self>) -> FieldElement {
        self.from_rational(BigRational::one())
    }

    pub fn from_rational(self: &Arc<Self>, q: BigRational) -> FieldElement {
        let mut coeffs = vec![BigRational::zero(); self.degree];
        coeffs[0] = q;
        FieldElement { field: Arc::clone(self), coeffs }
    }

    pub fn from_integer(self: &Arc<Self>, n: i64) -> FieldElement {
        self.from_rational(BigRational::from(BigInt::from(n)))
    }

    /// The generator rho itself.
    pub fn generator(self: &Arc<Self>) -> FieldElement {
        if self.degree == 1 {
            // rho is the rational root -c0.
            return self.from_rational(-self.min_poly[0].clone());
        }
        let mut coeffs = vec![BigRational::zero(); self.degree];
        coeffs[1] = BigRational::one();
        FieldElement { field: Arc::clone(self), coeffs }
    }

    /// Element from rational coefficients (low degree first); shorter vectors
    /// are zero-padded, longer ones are reduced modulo the minimal polynomial.
    pub fn element(self: &Arc<Self>, mut coeffs: Vec<BigRational>) -> FieldElement {
        while coeffs.len() > self.degree {
            let c = coeffs.pop().unwrap();
            if c.is_zero() {
                continue;
            }
            let base = coeffs.len() - self.degree;
            for (i, r) in self.reduction0.iter().enumerate() {
                coeffs[base + i] = &coeffs[base + i] + &c * r;
            }
        }
        coeffs.resize(self.degree, BigRational::zero());
        FieldElement { field: Arc::clone(self), coeffs }
    }
}

/// An element of Q[rho] in canonical form (residue modulo the minimal
/// polynomial). Hash and equality use the coefficient list only; elements of
/// distinct fields must not be mixed.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<NumberField>,
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement({:?} ~ {})", self.coeffs, self.to_f64())
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}
impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl FieldElement {
    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The element as a rational, when it has no generator component.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.field.degree == 1 {
            // Value is c0 + c... single coefficient; rho itself is rational but
            // canonical forms here are constants only.
            return Some(self.coeffs[0].clone());
        }
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        let rho = self.field.approx_root;
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * rho + rational_to_f64(c);
        }
        acc
    }

    fn binop(&self, other: &FieldElement, f: impl Fn(&BigRational, &BigRational) -> BigRational) -> FieldElement {
        debug_assert!(Arc::ptr_eq(&self.field, &other.field), "elements of different fields");
        let coeffs = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| f(a, b))
            .collect();
        FieldElement { field: Arc::clone(&self.field), coeffs }
    }

    pub fn mul_rational(&self, q: &BigRational) -> FieldElement {
        FieldElement {
            field: Arc::clone(&self.field),
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        }
    }

    pub fn inverse(&self) -> Result<FieldElement> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // Extended Euclid over Q[x]: u * self + v * min_poly = gcd.
        let p = &self.field.min_poly;
        let mut r0 = p.clone();
        let mut r1 = self.coeffs.clone();
        poly_trim(&mut r1);
        let mut u0: Poly = vec![BigRational::zero()];
        let mut u1: Poly = vec![BigRational::one()];
        while !poly_is_zero(&r1) && poly_deg(&r1) > 0 {
            let (q, r) = poly_divmod(&r0, &r1);
            let uq = poly_mul_raw(&q, &u1);
            let mut unew = poly_sub(&u0, &uq);
            poly_trim(&mut unew);
            r0 = r1;
            r1 = r;
            poly_trim(&mut r1);
            u0 = u1;
            u1 = unew;
        }
        if poly_is_zero(&r1) {
            // gcd(self, p) is non-constant: zero divisor in a reducible quotient.
            return Err(Error::NotInvertible);
        }
        let c = r1[0].clone(); // nonzero constant gcd
        let inv_coeffs: Vec<BigRational> = u1.iter().map(|x| x / &c).collect();
        Ok(self.field.element(inv_coeffs))
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement> {
        let inv = other.inverse()?;
        Ok(self * &inv)
    }

    pub fn pow(&self, mut n: u32) -> FieldElement {
        let mut base = self.clone();
        let mut acc = self.field.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        acc
    }

    /// Exact sign of the real value at rho: 0 iff the canonical form is zero.
    ///
    /// Fast path is interval evaluation on the field's refined isolating
    /// interval; if that fails to separate after a few bisections, a gcd with
    /// the minimal polynomial decides whether the value is genuinely zero
    /// (possible only when the supplied polynomial is reducible).
    pub fn sign(&self) -> i8 {
        if self.is_zero() {
            return 0;
        }
        if self.field.degree == 1 {
            return sign(&self.coeffs[0]);
        }
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            return sign(&self.coeffs[0]);
        }
        let mut lo = self.field.iso_lo.clone();
        let mut hi = self.field.iso_hi.clone();
        let sign_lo = self.field.sign_at_lo;
        let two = BigRational::from(BigInt::from(2));

        let mut gcd_checked = false;
        for iter in 0..4096 {
            let (vlo, vhi) = poly_eval_interval(&self.coeffs, &lo, &hi);
            if vlo.is_positive() {
                return 1;
            }
            if vhi.is_negative() {
                return -1;
            }
            if iter == 24 && !gcd_checked {
                gcd_checked = true;
                let mut a = self.coeffs.clone();
                poly_trim(&mut a);
                let g = poly_gcd(&a, &self.field.min_poly);
                if poly_deg(&g) >= 1 {
                    let glo = poly_eval(&g, &lo);
                    let ghi = poly_eval(&g, &hi);
                    if glo.is_zero() || ghi.is_zero() || (glo.is_positive() != ghi.is_positive()) {
                        // rho is a root of the gcd, hence of this element.
                        return 0;
                    }
                }
            }
            let mid = (&lo + &hi) / &two;
            let pm = poly_eval(&self.field.min_poly, &mid);
            if pm.is_zero() {
                // rho equals the rational midpoint exactly.
                return sign(&poly_eval(&self.coeffs, &mid));
            }
            if sign(&pm) == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        panic!("sign determination did not terminate; is the minimal polynomial irreducible?");
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign() < 0
    }

    pub fn abs(&self) -> FieldElement {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Total order by real value at rho, decided exactly.
    pub fn cmp_exact(&self, other: &FieldElement) -> Ordering {
        match (self - other).sign() {
            1 => Ordering::Greater,
            -1 => Ordering::Less,
            _ => Ordering::Equal,
        }
    }
}

fn poly_sub(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let zero = BigRational::zero();
    (0..n)
        .map(|i| a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero))
        .collect()
}

fn poly_mul_raw(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + x * y;
        }
    }
    out
}

fn poly_divmod(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    poly_trim(&mut r);
    let db = poly_deg(b);
    let lead = b[db].clone();
    let da = poly_deg(&r);
    if poly_is_zero(&r) || da < db {
        return (vec![BigRational::zero()], r);
    }
    let mut q = vec![BigRational::zero(); da - db + 1];
    while !poly_is_zero(&r) && poly_deg(&r) >= db {
        let dr = poly_deg(&r);
        let coef = &r[dr] / &lead;
        let shift = dr - db;
        q[shift] = coef.clone();
        for i in 0..=db {
            let t = &coef * &b[i];
            r[i + shift] = &r[i + shift] - t;
        }
        poly_trim(&mut r);
        if dr == 0 {
            break;
        }
    }
    (q, r)
}

impl<'a> Add for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: Self) -> FieldElement {
        self.binop(rhs, |a, b| a + b)
    }
}

impl<'a> Sub for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: Self) -> FieldElement {
        self.binop(rhs, |a, b| a - b)
    }
}

impl<'a> Neg for &'a FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            field: Arc::clone(&self.field),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl<'a> Mul for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: Self) -> FieldElement {
        debug_assert!(Arc::ptr_eq(&self.field, &rhs.field), "elements of different fields");
        let raw = poly_mul_raw(&self.coeffs, &rhs.coeffs);
        self.field.element(raw)
    }
}


#[cfg(test)]
mod prop_tests {
    use super::tests::golden_field;
    use num::{BigInt, BigRational};
    use proptest::prelude::*;

    fn small_rational() -> impl Strategy<Value = BigRational> {
        (-40i64..40, 1i64..12)
            .prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    proptest! {
        #[test]
        fn add_sub_round_trip(a0 in small_rational(), a1 in small_rational(),
                              b0 in small_rational(), b1 in small_rational()) {
            let f = golden_field();
            let a = f.element(vec![a0, a1]);
            let b = f.element(vec![b0, b1]);
            prop_assert_eq!(&(&(&a + &b) - &b), &a);
        }

        #[test]
        fn mul_div_round_trip(a0 in small_rational(), a1 in small_rational(),
                              b0 in small_rational(), b1 in small_rational()) {
            let f = golden_field();
            let a = f.element(vec![a0, a1]);
            let b = f.element(vec![b0, b1]);
            prop_assume!(!b.is_zero());
            let prod = &a * &b;
            prop_assert_eq!(&prod.div(&b).unwrap(), &a);
        }

        #[test]
        fn sign_zero_iff_zero_form(a0 in small_rational(), a1 in small_rational()) {
            let f = golden_field();
            let a = f.element(vec![a0, a1]);
            // Irreducible minimal polynomial: sign is 0 exactly on the zero form.
            prop_assert_eq!(a.sign() == 0, a.is_zero());
        }
    }
}
