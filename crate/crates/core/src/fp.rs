//! Arithmetic over F_p, the acting group G_N = F_p^N, binomial coefficients
//! and the Lagrange interpolation identities used throughout.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest prime the library accepts.  Every paper statement assumes k < p and
/// the enumeration cost grows like p^N, so desk scale means small primes.
pub const MAX_PRIME: u32 = 61;

/// Checks that `p` is an odd prime with `p <= 61`.
pub fn validate_prime(p: u32) -> Result<()> {
    if p < 3 || p > MAX_PRIME || p % 2 == 0 {
        return Err(Error::InvalidPrime(p));
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return Err(Error::InvalidPrime(p));
        }
        d += 2;
    }
    Ok(())
}

/// A residue mod p.  All arithmetic stays in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FpScalar {
    pub value: u32,
    pub p: u32,
}

impl FpScalar {
    pub fn new(value: i64, p: u32) -> Self {
        let m = p as i64;
        FpScalar {
            value: (value.rem_euclid(m)) as u32,
            p,
        }
    }

    pub fn zero(p: u32) -> Self {
        FpScalar { value: 0, p }
    }

    pub fn one(p: u32) -> Self {
        FpScalar { value: 1, p }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn add(&self, other: FpScalar) -> FpScalar {
        debug_assert_eq!(self.p, other.p);
        FpScalar {
            value: (self.value + other.value) % self.p,
            p: self.p,
        }
    }

    pub fn sub(&self, other: FpScalar) -> FpScalar {
        debug_assert_eq!(self.p, other.p);
        FpScalar {
            value: (self.value + self.p - other.value) % self.p,
            p: self.p,
        }
    }

    pub fn mul(&self, other: FpScalar) -> FpScalar {
        debug_assert_eq!(self.p, other.p);
        FpScalar {
            value: (self.value as u64 * other.value as u64 % self.p as u64) as u32,
            p: self.p,
        }
    }

    pub fn neg(&self) -> FpScalar {
        FpScalar {
            value: (self.p - self.value) % self.p,
            p: self.p,
        }
    }

    pub fn pow(&self, mut e: u32) -> FpScalar {
        let mut base = *self;
        let mut acc = FpScalar::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.  Panics on zero.
    pub fn inv(&self) -> FpScalar {
        assert!(self.value != 0, "division by zero in F_p");
        self.pow(self.p - 2)
    }
}

/// An element of the acting group G_N = F_p^N.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub p: u32,
    pub coords: Vec<u32>,
}

impl GroupElement {
    pub fn zero(p: u32, n: usize) -> Self {
        GroupElement {
            p,
            coords: vec![0; n],
        }
    }

    pub fn basis(p: u32, n: usize, i: usize) -> Self {
        let mut coords = vec![0; n];
        coords[i] = 1;
        GroupElement { p, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.p, other.p);
        debug_assert_eq!(self.coords.len(), other.coords.len());
        GroupElement {
            p: self.p,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| (a + b) % self.p)
                .collect(),
        }
    }

    pub fn neg(&self) -> GroupElement {
        GroupElement {
            p: self.p,
            coords: self.coords.iter().map(|&a| (self.p - a) % self.p).collect(),
        }
    }

    pub fn scale(&self, s: FpScalar) -> GroupElement {
        debug_assert_eq!(self.p, s.p);
        GroupElement {
            p: self.p,
            coords: self
                .coords
                .iter()
                .map(|&a| (a as u64 * s.value as u64 % self.p as u64) as u32)
                .collect(),
        }
    }

    /// Mixed-radix index of this element in the canonical enumeration
    /// (first coordinate least significant).
    pub fn index(&self) -> usize {
        let mut idx = 0usize;
        for &c in self.coords.iter().rev() {
            idx = idx * self.p as usize + c as usize;
        }
        idx
    }

    pub fn from_index(p: u32, n: usize, mut idx: usize) -> Self {
        let mut coords = vec![0; n];
        for slot in coords.iter_mut() {
            *slot = (idx % p as usize) as u32;
            idx /= p as usize;
        }
        GroupElement { p, coords }
    }

    /// Canonical enumeration of all of G_N.
    pub fn enumerate(p: u32, n: usize) -> impl Iterator<Item = GroupElement> {
        let count = (p as usize).pow(n as u32);
        (0..count).map(move |idx| GroupElement::from_index(p, n, idx))
    }
}

/// Binomial coefficient C(c, l) mod p, with the canonical integer lift of `c`.
///
/// The lift convention matters: the paper evaluates polynomials at integer
/// points c_i, and any two lifts agree mod p precisely because l < p.
pub fn fp_binomial(c: FpScalar, l: u32) -> Result<FpScalar> {
    if l >= c.p {
        return Err(Error::BinomialIndexTooLarge { index: l, p: c.p });
    }
    // C(c, l) = c (c-1) ... (c-l+1) / l!
    let mut num = FpScalar::one(c.p);
    let mut den = FpScalar::one(c.p);
    for i in 0..l {
        num = num.mul(c.sub(FpScalar::new(i as i64, c.p)));
        den = den.mul(FpScalar::new(i as i64 + 1, c.p));
    }
    Ok(num.mul(den.inv()))
}

pub fn check_nodes(cs: &[FpScalar]) -> Result<u32> {
    let p = cs[0].p;
    for (i, a) in cs.iter().enumerate() {
        if a.p != p {
            return Err(Error::PrimeMismatch(a.p, p));
        }
        for b in &cs[..i] {
            if a.value == b.value {
                return Err(Error::RepeatedNodes);
            }
        }
    }
    if cs.len() as u32 > p {
        return Err(Error::DegreeTooLarge {
            degree: cs.len() as u32 - 1,
            p,
        });
    }
    Ok(p)
}

/// Coefficients b_i with P(n) = sum_i b_i P(c_i) for every polynomial P of
/// degree < cs.len() into any p-torsion group.
pub fn lagrange_coeffs(cs: &[FpScalar], n: FpScalar) -> Result<Vec<FpScalar>> {
    let p = check_nodes(cs)?;
    debug_assert_eq!(n.p, p);
    let mut out = Vec::with_capacity(cs.len());
    for (i, &ci) in cs.iter().enumerate() {
        let mut b = FpScalar::one(p);
        for (j, &cj) in cs.iter().enumerate() {
            if j != i {
                b = b.mul(n.sub(cj)).mul(ci.sub(cj).inv());
            }
        }
        out.push(b);
    }
    Ok(out)
}

/// Constrained variant: for a polynomial P of degree < j+1 with known leading
/// coefficient theta = Delta_1^j P, returns (b', a') with
/// P(n) = sum_i b'_i P(c_i) + a' * theta, where j = cs.len().
///
/// Follows from writing P(x) = Q(x) + C(x, j) * theta with deg Q < j and
/// interpolating Q through the j nodes.
pub fn constrained_lagrange_coeffs(
    cs: &[FpScalar],
    n: FpScalar,
) -> Result<(Vec<FpScalar>, FpScalar)> {
    let p = check_nodes(cs)?;
    let j = cs.len() as u32;
    if j >= p {
        return Err(Error::DegreeTooLarge { degree: j, p });
    }
    let b = lagrange_coeffs(cs, n)?;
    // a' = C(n, j) - sum_i b'_i C(c_i, j)
    let mut a = fp_binomial(n, j)?;
    for (bi, &ci) in b.iter().zip(cs) {
        a = a.sub(bi.mul(fp_binomial(ci, j)?));
    }
    Ok((b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: i64, p: u32) -> FpScalar {
        FpScalar::new(v, p)
    }

    #[test]
    fn prime_validation() {
        for p in [3, 5, 7, 13, 61] {
            assert!(validate_prime(p).is_ok());
        }
        for p in [0, 1, 2, 4, 9, 15, 63, 67] {
            assert!(validate_prime(p).is_err());
        }
    }

    #[test]
    fn binomial_small_cases() {
        assert_eq!(fp_binomial(s(2, 5), 2).unwrap(), s(1, 5));
        assert_eq!(fp_binomial(s(4, 5), 0).unwrap(), s(1, 5));
        assert_eq!(fp_binomial(s(3, 5), 2).unwrap(), s(3, 5));
        assert!(fp_binomial(s(3, 5), 5).is_err());
    }

    #[test]
    fn binomial_matches_integer_lift() {
        // Against integer binomials of the canonical lift, for every residue.
        let p = 7u32;
        for c in 0..p {
            for l in 0..p {
                let mut num: i64 = 1;
                let mut den: i64 = 1;
                for i in 0..l {
                    num *= c as i64 - i as i64;
                    den *= i as i64 + 1;
                }
                let expect = (num / den).rem_euclid(p as i64);
                assert_eq!(fp_binomial(s(c as i64, p), l).unwrap().value, expect as u32);
            }
        }
    }

    #[test]
    fn lagrange_paper_example() {
        // u_2(T_{3g} x) = u_2(x) - 3 u_2(T_g x) + 3 u_2(T_{2g} x)
        let p = 5;
        let cs = [s(0, p), s(1, p), s(2, p)];
        let b = lagrange_coeffs(&cs, s(3, p)).unwrap();
        assert_eq!(b, vec![s(1, p), s(-3, p), s(3, p)]);
    }

    #[test]
    fn lagrange_at_node_is_indicator() {
        let p = 7;
        let cs = [s(0, p), s(1, p), s(2, p), s(4, p)];
        for (i, &ci) in cs.iter().enumerate() {
            let b = lagrange_coeffs(&cs, ci).unwrap();
            for (j, bj) in b.iter().enumerate() {
                assert_eq!(bj.value, u32::from(i == j));
            }
        }
    }

    #[test]
    fn lagrange_rejects_repeats() {
        let p = 5;
        assert!(lagrange_coeffs(&[s(1, p), s(1, p)], s(0, p)).is_err());
    }

    #[test]
    fn constrained_paper_example() {
        // psi(2) = -psi(0) + 2 psi(1) + Delta^2 psi
        let p = 5;
        let (b, a) = constrained_lagrange_coeffs(&[s(0, p), s(1, p)], s(2, p)).unwrap();
        assert_eq!(b, vec![s(-1, p), s(2, p)]);
        assert_eq!(a, s(1, p));
    }

    #[test]
    fn constrained_at_node() {
        let p = 7;
        let cs = [s(0, p), s(1, p), s(2, p)];
        for (i, &ci) in cs.iter().enumerate() {
            let (b, a) = constrained_lagrange_coeffs(&cs, ci).unwrap();
            assert!(a.is_zero());
            for (j, bj) in b.iter().enumerate() {
                assert_eq!(bj.value, u32::from(i == j));
            }
        }
    }

    /// Evaluates P(n) = sum_l C(n, l) a_l mod p for coefficient vector a.
    fn poly_eval(coeffs: &[FpScalar], n: FpScalar) -> FpScalar {
        let mut acc = FpScalar::zero(n.p);
        for (l, &a) in coeffs.iter().enumerate() {
            acc = acc.add(a.mul(fp_binomial(n, l as u32).unwrap()));
        }
        acc
    }

    #[test]
    fn lagrange_identity_brute_force() {
        // (cs=(0,1,2,4), n=3, p=7): check on cubic polynomials into F_7
        // by exhausting all coefficient vectors.
        let p = 7;
        let cs = [s(0, p), s(1, p), s(2, p), s(4, p)];
        let n = s(3, p);
        let b = lagrange_coeffs(&cs, n).unwrap();
        for idx in 0..7u32.pow(4) {
            let mut v = idx;
            let mut coeffs = Vec::new();
            for _ in 0..4 {
                coeffs.push(s((v % 7) as i64, p));
                v /= 7;
            }
            let lhs = poly_eval(&coeffs, n);
            let mut rhs = FpScalar::zero(p);
            for (bi, &ci) in b.iter().zip(&cs) {
                rhs = rhs.add(bi.mul(poly_eval(&coeffs, ci)));
            }
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn constrained_identity_brute_force() {
        // (cs=(0,1,2), n=4, p=7): constrained cubics, leading coeff known.
        let p = 7;
        let cs = [s(0, p), s(1, p), s(2, p)];
        let n = s(4, p);
        let (b, a) = constrained_lagrange_coeffs(&cs, n).unwrap();
        for idx in 0..7u32.pow(4) {
            let mut v = idx;
            let mut coeffs = Vec::new();
            for _ in 0..4 {
                coeffs.push(s((v % 7) as i64, p));
                v /= 7;
            }
            let theta = coeffs[3]; // Delta_1^3 P in the binomial basis
            let lhs = poly_eval(&coeffs, n);
            let mut rhs = a.mul(theta);
            for (bi, &ci) in b.iter().zip(&cs) {
                rhs = rhs.add(bi.mul(poly_eval(&coeffs, ci)));
            }
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn group_element_roundtrip() {
        let p = 5;
        for idx in 0..125 {
            let g = GroupElement::from_index(p, 3, idx);
            assert_eq!(g.index(), idx);
        }
        let g = GroupElement::from_index(p, 3, 7);
        let h = GroupElement::from_index(p, 3, 93);
        assert_eq!(g.add(&h).add(&g.neg()), h);
        assert!(g.add(&g.neg()).is_zero());
    }
}
