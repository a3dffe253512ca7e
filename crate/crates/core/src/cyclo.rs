//! Exact arithmetic in Q(zeta_p), additive characters, and a fast
//! integer-coefficient variant for hot loops.
//!
//! Values are stored in the power basis {1, zeta, ..., zeta^(p-2)} modulo the
//! p-th cyclotomic polynomial; the missing power satisfies
//! zeta^(p-1) = -(1 + zeta + ... + zeta^(p-2)).

use crate::error::{Error, Result};
use crate::fp::FpScalar;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// An element of Q(zeta_p) with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycloValue {
    pub p: u32,
    /// Length p-1, coefficient of zeta^i at index i.
    pub coeffs: Vec<BigRational>,
}

impl CycloValue {
    pub fn zero(p: u32) -> Self {
        CycloValue {
            p,
            coeffs: vec![BigRational::zero(); (p - 1) as usize],
        }
    }

    pub fn one(p: u32) -> Self {
        Self::from_rational(p, BigRational::one())
    }

    pub fn from_rational(p: u32, q: BigRational) -> Self {
        let mut v = Self::zero(p);
        v.coeffs[0] = q;
        v
    }

    pub fn from_integer(p: u32, n: i64) -> Self {
        Self::from_rational(p, BigRational::from_integer(BigInt::from(n)))
    }

    /// zeta_p^e (exponent taken mod p).
    pub fn root(p: u32, e: i64) -> Self {
        let e = e.rem_euclid(p as i64) as u32;
        let mut v = Self::zero(p);
        if e == p - 1 {
            for c in v.coeffs.iter_mut() {
                *c = -BigRational::one();
            }
        } else {
            v.coeffs[e as usize] = BigRational::one();
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &CycloValue) -> CycloValue {
        debug_assert_eq!(self.p, other.p);
        CycloValue {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CycloValue) -> CycloValue {
        debug_assert_eq!(self.p, other.p);
        CycloValue {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> CycloValue {
        CycloValue {
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, q: &BigRational) -> CycloValue {
        CycloValue {
            p: self.p,
            coeffs: self.coeffs.iter().map(|a| a * q).collect(),
        }
    }

    pub fn mul(&self, other: &CycloValue) -> CycloValue {
        debug_assert_eq!(self.p, other.p);
        let p = self.p as usize;
        // Convolve exponents mod p, then reduce the zeta^(p-1) slot.
        let mut acc = vec![BigRational::zero(); p];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                acc[(i + j) % p] += a * b;
            }
        }
        reduce_mod_phi(self.p, acc)
    }

    /// Complex conjugation: zeta^i -> zeta^(p-i).
    pub fn conj(&self) -> CycloValue {
        let p = self.p as usize;
        let mut acc = vec![BigRational::zero(); p];
        for (i, a) in self.coeffs.iter().enumerate() {
            acc[(p - i) % p] += a;
        }
        reduce_mod_phi(self.p, acc)
    }

    pub fn abs_squared(&self) -> CycloValue {
        self.mul(&self.conj())
    }

    /// Twice the real part stays in the field; real part itself needs /2.
    pub fn real_part(&self) -> CycloValue {
        self.add(&self.conj())
            .scale(&BigRational::new(BigInt::one(), BigInt::from(2)))
    }

    /// The rational coefficient at zeta^0 when all other coefficients vanish.
    pub fn rational_part(&self) -> Option<BigRational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Floating complex embedding via zeta = e^(2 pi i / p); reporting only.
    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let x = a.to_f64().unwrap_or(f64::NAN);
            let ang = 2.0 * PI * i as f64 / self.p as f64;
            re += x * ang.cos();
            im += x * ang.sin();
        }
        (re, im)
    }

    /// |value| as a float, computed from the exact |.|^2 when it is rational.
    pub fn abs_f64(&self) -> f64 {
        let sq = self.abs_squared();
        match sq.rational_part() {
            Some(q) => q.to_f64().map(|x| x.max(0.0).sqrt()).unwrap_or(f64::NAN),
            None => {
                let (re, im) = self.to_complex();
                (re * re + im * im).sqrt()
            }
        }
    }
}

fn reduce_mod_phi(p: u32, mut acc: Vec<BigRational>) -> CycloValue {
    // zeta^(p-1) = -(1 + zeta + ... + zeta^(p-2))
    let top = acc.pop().expect("length p vector");
    if !top.is_zero() {
        for c in acc.iter_mut() {
            *c -= &top;
        }
    }
    CycloValue { p, coeffs: acc }
}

/// Converts an exponent histogram (counts of zeta^e for e = 0..p-1) into the
/// exact mean value sum_e counts[e] zeta^e / total.
pub fn histogram_mean(p: u32, counts: &[u64], total: u64) -> CycloValue {
    debug_assert_eq!(counts.len(), p as usize);
    let mut acc: Vec<BigRational> = counts
        .iter()
        .map(|&c| BigRational::from_integer(BigInt::from(c)))
        .collect();
    let t = BigRational::from_integer(BigInt::from(total));
    for c in acc.iter_mut() {
        *c /= &t;
    }
    reduce_mod_phi(p, acc)
}

/// Integer-coefficient element of Z[zeta_p], for hot loops.  Same basis and
/// reduction convention as `CycloValue`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZCyclo {
    pub p: u32,
    pub coeffs: Vec<i64>,
}

impl ZCyclo {
    pub fn zero(p: u32) -> Self {
        ZCyclo {
            p,
            coeffs: vec![0; (p - 1) as usize],
        }
    }

    pub fn from_integer(p: u32, n: i64) -> Self {
        let mut v = Self::zero(p);
        v.coeffs[0] = n;
        v
    }

    pub fn root(p: u32, e: i64) -> Self {
        let e = e.rem_euclid(p as i64) as usize;
        let mut v = Self::zero(p);
        if e == (p - 1) as usize {
            for c in v.coeffs.iter_mut() {
                *c = -1;
            }
        } else {
            v.coeffs[e] = 1;
        }
        v
    }

    pub fn add_assign(&mut self, other: &ZCyclo) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &ZCyclo) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
    }

    pub fn mul(&self, other: &ZCyclo) -> ZCyclo {
        let p = self.p as usize;
        let mut acc = vec![0i64; p];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                acc[(i + j) % p] += a * b;
            }
        }
        let top = acc.pop().unwrap();
        if top != 0 {
            for c in acc.iter_mut() {
                *c -= top;
            }
        }
        ZCyclo {
            p: self.p,
            coeffs: acc,
        }
    }

    /// Exact value of self / denom as a CycloValue.
    pub fn to_cyclo(&self, denom: &BigInt) -> CycloValue {
        CycloValue {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .map(|&c| BigRational::new(BigInt::from(c), denom.clone()))
                .collect(),
        }
    }
}

/// An additive character u -> (dual . u)/p on U = F_p^m, valued in R/Z.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdditiveCharacter {
    pub p: u32,
    pub dual: Vec<u32>,
}

impl AdditiveCharacter {
    pub fn new(p: u32, dual: Vec<u32>) -> Self {
        AdditiveCharacter {
            p,
            dual: dual.into_iter().map(|d| d % p).collect(),
        }
    }

    pub fn zero(p: u32, m: usize) -> Self {
        AdditiveCharacter {
            p,
            dual: vec![0; m],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.dual.iter().all(|&d| d == 0)
    }

    /// The exponent dual . u mod p.
    pub fn pairing(&self, u: &[u32]) -> Result<u32> {
        if u.len() != self.dual.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dual.len(),
                got: u.len(),
            });
        }
        let mut acc = 0u64;
        for (&d, &x) in self.dual.iter().zip(u) {
            acc += d as u64 * x as u64;
        }
        Ok((acc % self.p as u64) as u32)
    }

    pub fn scale(&self, s: FpScalar) -> AdditiveCharacter {
        debug_assert_eq!(self.p, s.p);
        AdditiveCharacter {
            p: self.p,
            dual: self
                .dual
                .iter()
                .map(|&d| (d as u64 * s.value as u64 % self.p as u64) as u32)
                .collect(),
        }
    }
}

/// e(phi(u)) = zeta_p^(dual . u).
pub fn char_eval(phi: &AdditiveCharacter, u: &[u32]) -> Result<CycloValue> {
    Ok(CycloValue::root(phi.p, phi.pairing(u)? as i64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_multiply_by_adding_exponents() {
        let p = 7;
        for a in 0..p as i64 {
            for b in 0..p as i64 {
                assert_eq!(
                    CycloValue::root(p, a).mul(&CycloValue::root(p, b)),
                    CycloValue::root(p, a + b)
                );
            }
        }
    }

    #[test]
    fn full_root_sum_vanishes() {
        let p = 5;
        let mut acc = CycloValue::zero(p);
        for e in 0..p as i64 {
            acc = acc.add(&CycloValue::root(p, e));
        }
        assert!(acc.is_zero());
    }

    #[test]
    fn conjugation_is_multiplicative() {
        let p = 5;
        let x = CycloValue::root(p, 1).add(&CycloValue::from_integer(p, 3));
        let y = CycloValue::root(p, 3).sub(&CycloValue::root(p, 2));
        assert_eq!(x.mul(&y).conj(), x.conj().mul(&y.conj()));
    }

    #[test]
    fn abs_squared_of_root_is_one() {
        let p = 11;
        for e in 0..p as i64 {
            assert_eq!(
                CycloValue::root(p, e).abs_squared(),
                CycloValue::one(p)
            );
        }
    }

    #[test]
    fn rational_extraction() {
        let p = 5;
        let v = CycloValue::from_integer(p, 42);
        assert_eq!(
            v.rational_part(),
            Some(BigRational::from_integer(BigInt::from(42)))
        );
        assert_eq!(CycloValue::root(p, 1).rational_part(), None);
        // zeta + zeta^2 + zeta^3 + zeta^4 = -1 is rational in canonical form.
        let mut acc = CycloValue::zero(p);
        for e in 1..5 {
            acc = acc.add(&CycloValue::root(p, e));
        }
        assert_eq!(
            acc.rational_part(),
            Some(BigRational::from_integer(BigInt::from(-1)))
        );
    }

    #[test]
    fn complex_embedding_of_root() {
        let p = 5;
        let (re, im) = CycloValue::root(p, 1).to_complex();
        let ang = 2.0 * PI / 5.0;
        assert!((re - ang.cos()).abs() < 1e-12);
        assert!((im - ang.sin()).abs() < 1e-12);
    }

    #[test]
    fn zcyclo_agrees_with_cyclo() {
        let p = 7;
        let a = {
            let mut v = ZCyclo::root(p, 2);
            v.add_assign(&ZCyclo::from_integer(p, 3));
            v
        };
        let b = {
            let mut v = ZCyclo::root(p, 6);
            v.sub_assign(&ZCyclo::root(p, 4));
            v
        };
        let prod = a.mul(&b).to_cyclo(&BigInt::one());
        let ca = CycloValue::root(p, 2).add(&CycloValue::from_integer(p, 3));
        let cb = CycloValue::root(p, 6).sub(&CycloValue::root(p, 4));
        assert_eq!(prod, ca.mul(&cb));
    }

    #[test]
    fn character_orthogonality() {
        let p = 5;
        let phi = AdditiveCharacter::new(p, vec![1]);
        let mut acc = CycloValue::zero(p);
        for u in 0..p {
            acc = acc.add(&char_eval(&phi, &[u]).unwrap());
        }
        assert!(acc.is_zero());
        let zero = AdditiveCharacter::zero(p, 1);
        let mut acc = CycloValue::zero(p);
        for u in 0..p {
            acc = acc.add(&char_eval(&zero, &[u]).unwrap());
        }
        assert_eq!(acc, CycloValue::from_integer(p, 5));
    }

    #[test]
    fn histogram_mean_matches_direct_sum() {
        let p = 5;
        let counts = [3u64, 0, 1, 4, 4];
        let total = 12u64;
        let mut direct = CycloValue::zero(p);
        for (e, &c) in counts.iter().enumerate() {
            direct = direct.add(
                &CycloValue::root(p, e as i64)
                    .scale(&BigRational::new(BigInt::from(c), BigInt::from(total))),
            );
        }
        assert_eq!(histogram_mean(p, &counts, total), direct);
    }
}
