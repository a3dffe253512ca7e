//! Skew-shift model over the Laurent torus.
//!
//! The acting group F_p^omega is identified with the polynomial ring F_p[t]
//! (generator e_n <-> t^{n-1}), embedded in the local field F_p((1/t)), and
//! the quotient T = F_p((1/t)) / F_p[t] is a compact abelian group whose
//! elements are half-infinite strings of fractional digits.  The skew shift
//! on T^m acts by the upper-triangular binomial matrix of the addition law
//! C(h+g, i) = sum_j C(g, i-j) C(h, j), with the constant slot x_0 pinned to
//! a fixed irrational alpha.  This module provides exact digit arithmetic at
//! a finite truncation depth (with explicit sufficiency accounting),
//! ergodicity diagnostics against bounded-degree character families, and the
//! I(g)-vs-J(g) limit comparison for Hall-Petresco parallelepiped integrals
//! with theta_i(g) = C(g, i) alpha.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::cyclo::CycloValue;
use crate::error::{Error, Result};
use crate::fp::{check_nodes, validate_prime, FpScalar};

/// A polynomial over F_p in one variable t, with canonical trailing-zero
/// trimming (`coeffs[i]` is the coefficient of t^i; the zero polynomial has
/// an empty coefficient vector).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FpPoly {
    pub p: u32,
    pub coeffs: Vec<u32>,
}

impl FpPoly {
    pub fn new(p: u32, mut coeffs: Vec<u32>) -> Self {
        for c in coeffs.iter_mut() {
            *c %= p;
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPoly { p, coeffs }
    }

    pub fn zero(p: u32) -> Self {
        FpPoly { p, coeffs: vec![] }
    }

    pub fn one(p: u32) -> Self {
        FpPoly::constant(p, 1)
    }

    pub fn constant(p: u32, c: u32) -> Self {
        FpPoly::new(p, vec![c])
    }

    /// The monomial t^d.
    pub fn monomial(p: u32, d: usize) -> Self {
        let mut coeffs = vec![0; d + 1];
        coeffs[d] = 1;
        FpPoly { p, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &FpPoly) -> FpPoly {
        debug_assert_eq!(self.p, other.p);
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| (self.coeff(i) + other.coeff(i)) % self.p)
            .collect();
        FpPoly::new(self.p, coeffs)
    }

    pub fn sub(&self, other: &FpPoly) -> FpPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FpPoly {
        let coeffs = self.coeffs.iter().map(|&c| (self.p - c) % self.p).collect();
        FpPoly::new(self.p, coeffs)
    }

    pub fn scale(&self, s: FpScalar) -> FpPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| ((c as u64 * s.value as u64) % self.p as u64) as u32)
            .collect();
        FpPoly::new(self.p, coeffs)
    }

    pub fn mul(&self, other: &FpPoly) -> FpPoly {
        debug_assert_eq!(self.p, other.p);
        if self.is_zero() || other.is_zero() {
            return FpPoly::zero(self.p);
        }
        let mut coeffs = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = (coeffs[i + j] + a as u64 * b as u64) % self.p as u64;
            }
        }
        FpPoly::new(self.p, coeffs.into_iter().map(|c| c as u32).collect())
    }

    /// Euclidean division: returns (quotient, remainder) with
    /// deg(remainder) < deg(divisor).
    pub fn divmod(&self, den: &FpPoly) -> Result<(FpPoly, FpPoly)> {
        debug_assert_eq!(self.p, den.p);
        if den.is_zero() {
            return Err(Error::BadSystemDescription(
                "division by the zero polynomial".into(),
            ));
        }
        let d = den.degree().unwrap();
        let lead_inv = FpScalar::new(den.coeffs[d] as i64, self.p).inv();
        let mut rem = self.clone();
        let mut quot = vec![0u32; self.coeffs.len().saturating_sub(d)];
        while let Some(rd) = rem.degree() {
            if rd < d {
                break;
            }
            let q = FpScalar::new(rem.coeffs[rd] as i64, self.p).mul(lead_inv);
            quot[rd - d] = q.value as u32;
            let shifted = FpPoly::monomial(self.p, rd - d).mul(den).scale(q);
            rem = rem.sub(&shifted);
        }
        Ok((FpPoly::new(self.p, quot), rem))
    }

    /// Decodes the polynomial of index `idx` among the p^n polynomials of
    /// degree < n, first coordinate (constant term) least significant.
    pub fn from_index(p: u32, n: usize, mut idx: usize) -> Self {
        let mut coeffs = vec![0u32; n];
        for c in coeffs.iter_mut() {
            *c = (idx % p as usize) as u32;
            idx /= p as usize;
        }
        FpPoly::new(p, coeffs)
    }
}

impl std::fmt::Display for FpPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (c, i) {
                (_, 0) => write!(f, "{c}")?,
                (1, 1) => write!(f, "t")?,
                (1, _) => write!(f, "t^{i}")?,
                (_, 1) => write!(f, "{c}t")?,
                (_, _) => write!(f, "{c}t^{i}")?,
            }
        }
        Ok(())
    }
}

/// The polynomial binomial coefficient C(g, i) = g(g-1)...(g-i+1)/i!,
/// an element of F_p[t] (well defined for i < p, where i! is a unit).
pub fn poly_binomial(g: &FpPoly, i: u32) -> Result<FpPoly> {
    let p = g.p;
    if i >= p {
        return Err(Error::BinomialIndexTooLarge { index: i, p });
    }
    let mut num = FpPoly::one(p);
    let mut fact = FpScalar::one(p);
    for l in 0..i {
        num = num.mul(&g.sub(&FpPoly::constant(p, l)));
        fact = fact.mul(FpScalar::new(l as i64 + 1, p));
    }
    Ok(num.scale(fact.inv()))
}

/// An element of the Laurent torus T = F_p((1/t)) / F_p[t], truncated to a
/// finite depth: `digits[k]` is the coefficient of t^{-(k+1)}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusDigit {
    pub p: u32,
    pub digits: Vec<u32>,
}

impl TorusDigit {
    pub fn new(p: u32, digits: Vec<u32>) -> Self {
        let digits = digits.into_iter().map(|d| d % p).collect();
        TorusDigit { p, digits }
    }

    pub fn zero(p: u32, depth: usize) -> Self {
        TorusDigit {
            p,
            digits: vec![0; depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.digits.len()
    }

    /// The digit c_{-k} (1-based: `digit(1)` is the most significant
    /// fractional digit).
    pub fn digit(&self, k: usize) -> u32 {
        self.digits[k - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Componentwise (carry-free) addition; the result is truncated to the
    /// shallower of the two depths, where both summands are known.
    pub fn add(&self, other: &TorusDigit) -> TorusDigit {
        debug_assert_eq!(self.p, other.p);
        let depth = self.depth().min(other.depth());
        let digits = (0..depth)
            .map(|k| (self.digits[k] + other.digits[k]) % self.p)
            .collect();
        TorusDigit { p: self.p, digits }
    }

    pub fn neg(&self) -> TorusDigit {
        let digits = self.digits.iter().map(|&d| (self.p - d) % self.p).collect();
        TorusDigit { p: self.p, digits }
    }

    pub fn sub(&self, other: &TorusDigit) -> TorusDigit {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: FpScalar) -> TorusDigit {
        let digits = self
            .digits
            .iter()
            .map(|&d| ((d as u64 * s.value as u64) % self.p as u64) as u32)
            .collect();
        TorusDigit { p: self.p, digits }
    }

    /// Multiplication by a polynomial, discarding the integer part mod
    /// F_p[t].  The digit at position -k of the product needs input digits
    /// down to -(k + deg g), so the result depth shrinks by deg(g); the
    /// operation is rejected if no exact output digit would remain.
    pub fn mul_poly(&self, g: &FpPoly) -> Result<TorusDigit> {
        debug_assert_eq!(self.p, g.p);
        if g.is_zero() {
            return Ok(TorusDigit::zero(self.p, self.depth()));
        }
        let d = g.degree().unwrap();
        if self.depth() <= d {
            return Err(Error::DepthExhausted {
                need: d + 1,
                have: self.depth(),
            });
        }
        let out_depth = self.depth() - d;
        let digits = (0..out_depth)
            .map(|k| {
                let mut acc = 0u64;
                for (j, &gj) in g.coeffs.iter().enumerate() {
                    acc += gj as u64 * self.digits[k + j] as u64;
                }
                (acc % self.p as u64) as u32
            })
            .collect();
        Ok(TorusDigit { p: self.p, digits })
    }

    pub fn truncate(&self, depth: usize) -> TorusDigit {
        TorusDigit {
            p: self.p,
            digits: self.digits[..depth.min(self.depth())].to_vec(),
        }
    }

    /// Base-p string, most significant fractional digit (c_{-1}) first.
    /// Digits use 0-9, a-z, A-Z, covering every supported prime.
    pub fn to_base_p_string(&self) -> String {
        self.digits.iter().map(|&d| digit_char(d)).collect()
    }

    pub fn from_base_p_string(p: u32, s: &str) -> Result<TorusDigit> {
        let mut digits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let d = char_digit(ch).ok_or_else(|| {
                Error::BadSystemDescription(format!("invalid digit character '{ch}'"))
            })?;
            if d >= p {
                return Err(Error::BadSystemDescription(format!(
                    "digit {d} out of range for p = {p}"
                )));
            }
            digits.push(d);
        }
        Ok(TorusDigit { p, digits })
    }
}

fn digit_char(d: u32) -> char {
    match d {
        0..=9 => (b'0' + d as u8) as char,
        10..=35 => (b'a' + (d - 10) as u8) as char,
        _ => (b'A' + (d - 36) as u8) as char,
    }
}

fn char_digit(ch: char) -> Option<u32> {
    match ch {
        '0'..='9' => Some(ch as u32 - '0' as u32),
        'a'..='z' => Some(ch as u32 - 'a' as u32 + 10),
        'A'..='Z' => Some(ch as u32 - 'A' as u32 + 36),
        _ => None,
    }
}

/// The standard character e_p on the torus: reads the digit c_{-1} only.
pub fn e_p_torus(x: &TorusDigit) -> Result<CycloValue> {
    if x.depth() == 0 {
        return Err(Error::DepthExhausted { need: 1, have: 0 });
    }
    Ok(CycloValue::root(x.p, x.digits[0] as i64))
}

/// The default irrational: digit 1 at the triangular positions -j(j+1)/2 for
/// j >= 1, zero elsewhere.  The gaps between successive 1's grow without
/// bound, so the digit string is not eventually periodic, hence the element
/// is not a ratio of polynomials.
pub fn default_alpha(p: u32, depth: usize) -> Result<TorusDigit> {
    validate_prime(p)?;
    if depth < 3 {
        return Err(Error::DepthExhausted {
            need: 3,
            have: depth,
        });
    }
    let mut digits = vec![0u32; depth];
    let mut j = 1usize;
    loop {
        let pos = j * (j + 1) / 2;
        if pos > depth {
            break;
        }
        digits[pos - 1] = 1;
        j += 1;
    }
    Ok(TorusDigit { p, digits })
}

/// The fractional digits of num/den in F_p((1/t)), computed by polynomial
/// long division (the quotient of num * t^depth by den carries the digits
/// c_{-1}, ..., c_{-depth} in its coefficients of t^{depth-1}, ..., t^0).
pub fn rational_digits(num: &FpPoly, den: &FpPoly, depth: usize) -> Result<TorusDigit> {
    let shifted = num.mul(&FpPoly::monomial(num.p, depth));
    let (q, _) = shifted.divmod(den)?;
    let digits = (1..=depth).map(|k| q.coeff(depth - k)).collect();
    Ok(TorusDigit::new(num.p, digits))
}

/// Scans a digit window for eventual periodicity.  Returns the smallest
/// (preperiod, period) such that the window is periodic from the preperiod
/// on and the periodic tail covers at least three full periods (so that the
/// claim has real evidence), or `None` if no such pattern fits.  The
/// preperiod is capped at a quarter of the window: a rational f/g becomes
/// periodic within deg(f) digits, while an arbitrary sparse sequence always
/// has a trivially periodic suffix if the preperiod may grow with the
/// window.
pub fn detect_eventual_period(digits: &[u32]) -> Option<(usize, usize)> {
    let n = digits.len();
    for pre in 0..=n / 4 {
        for period in 1..=n.saturating_sub(pre) / 3 {
            if (pre..n - period).all(|i| digits[i] == digits[i + period]) {
                return Some((pre, period));
            }
        }
    }
    None
}

/// One step of the skew shift (shifty): new x_i = sum_{j<=i} C(g, i-j) x_j
/// with the convention x_0 = alpha.  `state[i-1]` holds x_i.  The output
/// depth shrinks by m * deg(g) (the deepest binomial product involved); the
/// shift is rejected when no exact digit would remain.
pub fn skew_shift(state: &[TorusDigit], g: &FpPoly, alpha: &TorusDigit) -> Result<Vec<TorusDigit>> {
    let p = g.p;
    validate_prime(p)?;
    let m = state.len();
    let depth = state
        .iter()
        .map(|x| x.depth())
        .chain(std::iter::once(alpha.depth()))
        .min()
        .unwrap_or(alpha.depth());
    let gdeg = g.degree().unwrap_or(0);
    let need = m * gdeg + 1;
    if depth < need {
        return Err(Error::DepthExhausted { need, have: depth });
    }
    let out_depth = depth - m * gdeg;
    let binoms: Vec<FpPoly> = (0..=m as u32)
        .map(|i| poly_binomial(g, i))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(m);
    for i in 1..=m {
        // j = 0 slot: C(g, i) * alpha.
        let mut acc = alpha.mul_poly(&binoms[i])?.truncate(out_depth);
        for j in 1..=i {
            acc = acc.add(&state[j - 1].mul_poly(&binoms[i - j])?.truncate(out_depth));
        }
        out.push(acc);
    }
    Ok(out)
}

/// One row of the ergodicity diagnostic: for the Folner set Phi_n =
/// {polynomials of degree < n}, the squared L^2 distance of the empirical
/// average E_{g in Phi_n} T_g f from the space mean, aggregated over the
/// nonzero characters f = e_p(a_1 x_1 + ... + a_m x_m) with deg a_i <
/// `char_degree_bound`.
#[derive(Debug, Clone)]
pub struct ErgodicityRow {
    pub n: u32,
    pub mean_distance_sq: BigRational,
    pub max_distance_sq: BigRational,
}

/// Squared L^2 distance of E_{g in Phi_n} T_g f from the mean of f, for a
/// single character f = e_p(sum_i a_i x_i) on T^m.  Writing T_g f =
/// e_p(phi(g)) e_p(sum_j b_j(g) x_j) with phi(g) = sum_i a_i C(g,i) alpha
/// and b_j(g) = sum_{i>=j} a_i C(g, i-j), orthogonality of torus characters
/// gives distance^2 = sum_b |E_g 1_{b(g)=b} e_p(phi(g))|^2 (minus the mean
/// for the trivial character, which only arises when all a_i vanish).
pub fn character_distance_sq(alpha: &TorusDigit, a: &[FpPoly], n: u32) -> Result<BigRational> {
    let p = alpha.p;
    validate_prime(p)?;
    let m = a.len();
    if m as u32 >= p {
        return Err(Error::BinomialIndexTooLarge {
            index: m as u32,
            p,
        });
    }
    if a.iter().all(|ai| ai.is_zero()) {
        return Ok(BigRational::zero());
    }
    // beta_i = a_i * alpha; phi(g) pairs the coefficients of C(g, i) with
    // the fractional digits of beta_i, so alpha must reach depth
    // 1 + deg C(g,i) + deg a_i.
    let max_bin_deg = m * (n as usize).saturating_sub(1);
    let mut betas = Vec::with_capacity(m);
    for ai in a {
        if ai.is_zero() {
            betas.push(TorusDigit::zero(p, max_bin_deg + 1));
            continue;
        }
        let need = max_bin_deg + 1 + ai.degree().unwrap();
        if alpha.depth() < need {
            return Err(Error::DepthExhausted {
                need,
                have: alpha.depth(),
            });
        }
        betas.push(alpha.mul_poly(ai)?);
    }
    let count = (p as usize).pow(n);
    // Bucket by the polynomial tuple b(g); within a bucket, histogram the
    // digit c_{-1} of phi(g).
    let mut buckets: HashMap<Vec<FpPoly>, Vec<u64>> = HashMap::new();
    for idx in 0..count {
        let g = FpPoly::from_index(p, n as usize, idx);
        let binoms: Vec<FpPoly> = (0..=m as u32)
            .map(|i| poly_binomial(&g, i))
            .collect::<Result<_>>()?;
        let mut phase = 0u64;
        for (i, beta) in betas.iter().enumerate() {
            for (j, &bj) in binoms[i + 1].coeffs.iter().enumerate() {
                phase += bj as u64 * beta.digits[j] as u64;
            }
        }
        let key: Vec<FpPoly> = (1..=m)
            .map(|j| {
                let mut acc = FpPoly::zero(p);
                for (i, ai) in a.iter().enumerate().skip(j - 1) {
                    acc = acc.add(&ai.mul(&binoms[i + 1 - j]));
                }
                acc
            })
            .collect();
        let hist = buckets.entry(key).or_insert_with(|| vec![0u64; p as usize]);
        hist[(phase % p as u64) as usize] += 1;
    }
    let mut total = CycloValue::zero(p);
    for hist in buckets.values() {
        let mut s = CycloValue::zero(p);
        for (e, &cnt) in hist.iter().enumerate() {
            if cnt > 0 {
                s = s.add(&CycloValue::root(p, e as i64).scale(&BigRational::from(
                    BigInt::from(cnt),
                )));
            }
        }
        total = total.add(&s.abs_squared());
    }
    let count = BigRational::from(BigInt::from(count as u64));
    let denom = &count * &count;
    let total = total
        .rational_part()
        .expect("a sum of |.|^2 of cyclotomic integers is rational");
    Ok(total / denom)
}

/// Ergodicity diagnostic for the skew shift on T^m with parameter `alpha`:
/// for each n in `n_range`, the mean and max of `character_distance_sq`
/// over all nonzero character tuples with component degrees below
/// `char_degree_bound`.  For irrational alpha the mean decreases to zero as
/// the Folner sets engage ever deeper digits of alpha; for rational alpha
/// some characters stay correlated forever and the mean stalls.
pub fn ergodicity_diagnostic(
    m: usize,
    alpha: &TorusDigit,
    n_range: std::ops::RangeInclusive<u32>,
    char_degree_bound: usize,
) -> Result<Vec<ErgodicityRow>> {
    let p = alpha.p;
    validate_prime(p)?;
    let per_comp = (p as usize).pow(char_degree_bound as u32);
    let num_chars = per_comp.pow(m as u32);
    let mut rows = Vec::new();
    for n in n_range {
        let mut sum = BigRational::zero();
        let mut max = BigRational::zero();
        for code in 1..num_chars {
            let mut c = code;
            let a: Vec<FpPoly> = (0..m)
                .map(|_| {
                    let poly = FpPoly::from_index(p, char_degree_bound, c % per_comp);
                    c /= per_comp;
                    poly
                })
                .collect();
            let d = character_distance_sq(alpha, &a, n)?;
            if d > max {
                max = d.clone();
            }
            sum += d;
        }
        rows.push(ErgodicityRow {
            n,
            mean_distance_sq: sum / BigRational::from(BigInt::from(num_chars as u64 - 1)),
            max_distance_sq: max,
        });
    }
    Ok(rows)
}

/// One comparison row of the skew limit report.
#[derive(Debug, Clone)]
pub struct SkewLimitRow {
    pub g: FpPoly,
    pub g_degree: Option<usize>,
    pub i_value: CycloValue,
    pub j_value: CycloValue,
    pub diff_abs: f64,
}

/// Report comparing the correlation integral I(g) of the skew system with
/// the Hall-Petresco integral J(g) at theta_i(g) = C(g, i) alpha.
#[derive(Debug, Clone)]
pub struct SkewLimitReport {
    pub p: u32,
    pub m: usize,
    pub cs: Vec<u32>,
    /// Per l = 1..m, whether the linear form (lsum) vanishes identically as
    /// a polynomial in g.  When some form is not identically zero it has
    /// finitely many roots, so I(g) = 0 for all but finitely many g.
    pub lsum_identically_zero: Vec<bool>,
    /// Whether J vanishes for every g (some free Hall-Petresco slot carries
    /// a nonzero combined character).
    pub j_identically_zero: bool,
    pub rows: Vec<SkewLimitRow>,
}

/// B_l(g) = sum_i sum_{j>=l} a_{ij} C(c_i g, j-l) as a concrete polynomial
/// in t, for a given g.  `chars[i][j-1]` is the coefficient a_{ij}.
fn lsum_at(cs: &[u32], chars: &[Vec<FpPoly>], g: &FpPoly, l: usize) -> Result<FpPoly> {
    let p = g.p;
    let m = chars[0].len();
    let mut acc = FpPoly::zero(p);
    for (i, row) in chars.iter().enumerate() {
        let cg = g.scale(FpScalar::new(cs[i] as i64, p));
        for j in l..=m {
            if row[j - 1].is_zero() {
                continue;
            }
            acc = acc.add(&row[j - 1].mul(&poly_binomial(&cg, (j - l) as u32)?));
        }
    }
    Ok(acc)
}

/// B_l as a polynomial in an indeterminate g: returns the coefficient of
/// g^r (an element of F_p[t]) for r = 0..m-l.  C(c_i g, r) expands as a
/// degree-r polynomial in g with scalar coefficients, obtained from the
/// product formula.
fn lsum_symbolic(p: u32, cs: &[u32], chars: &[Vec<FpPoly>], l: usize) -> Result<Vec<FpPoly>> {
    let m = chars[0].len();
    let mut acc = vec![FpPoly::zero(p); m - l + 1];
    for (i, row) in chars.iter().enumerate() {
        let ci = FpScalar::new(cs[i] as i64, p);
        for j in l..=m {
            if row[j - 1].is_zero() {
                continue;
            }
            // C(c_i g, r) = prod_{s<r} (c_i g - s) / r! as a polynomial in g.
            let r = j - l;
            let mut poly_in_g = vec![FpScalar::one(p)];
            let mut fact = FpScalar::one(p);
            for s in 0..r {
                let mut next = vec![FpScalar::zero(p); poly_in_g.len() + 1];
                for (d, &coef) in poly_in_g.iter().enumerate() {
                    next[d + 1] = next[d + 1].add(coef.mul(ci));
                    next[d] = next[d].sub(coef.mul(FpScalar::new(s as i64, p)));
                }
                poly_in_g = next;
                fact = fact.mul(FpScalar::new(s as i64 + 1, p));
            }
            let inv = fact.inv();
            for (d, &coef) in poly_in_g.iter().enumerate() {
                acc[d] = acc[d].add(&row[j - 1].scale(coef.mul(inv)));
            }
        }
    }
    Ok(acc)
}

/// The correlation integral I(g) = int prod_i T_{c_i g} f_i for the
/// character tuple f_i = e_p(sum_j a_{ij} x_j): zero unless B_l(g) = 0 for
/// every l = 1..m, in which case it is the unit phase e_p(A(g) alpha) with
/// A(g) = sum_{i,j} a_{ij} C(c_i g, j).
pub fn skew_i_value(
    cs: &[u32],
    chars: &[Vec<FpPoly>],
    alpha: &TorusDigit,
    g: &FpPoly,
) -> Result<CycloValue> {
    let p = alpha.p;
    let m = chars[0].len();
    for l in 1..=m {
        if !lsum_at(cs, chars, g, l)?.is_zero() {
            return Ok(CycloValue::zero(p));
        }
    }
    let mut a_of_g = FpPoly::zero(p);
    for (i, row) in chars.iter().enumerate() {
        let cg = g.scale(FpScalar::new(cs[i] as i64, p));
        for (jm1, aij) in row.iter().enumerate() {
            if !aij.is_zero() {
                a_of_g = a_of_g.add(&aij.mul(&poly_binomial(&cg, jm1 as u32 + 1)?));
            }
        }
    }
    if a_of_g.is_zero() {
        return Ok(CycloValue::one(p));
    }
    e_p_torus(&alpha.mul_poly(&a_of_g)?)
}

/// The Hall-Petresco integral J(g) at theta_j(g) = C(g, j) alpha for the
/// same character tuple.  Parametrizing the Hall-Petresco fiber by Mahler
/// coefficients u_{jl} (free for l < j, pinned to theta_j at l = j), J
/// vanishes unless the combined character sum_i C(c_i, l) a_{ij} is zero
/// for every level j and free slot l < j, and otherwise equals the phase
/// e_p(sum_j (sum_i C(c_i, j) a_{ij}) C(g, j) alpha).
pub fn skew_j_value(
    cs: &[u32],
    chars: &[Vec<FpPoly>],
    alpha: &TorusDigit,
    g: &FpPoly,
) -> Result<CycloValue> {
    let p = alpha.p;
    let m = chars[0].len();
    let mut exponent = FpPoly::zero(p);
    for j in 1..=m {
        for l in 0..j {
            let mut combined = FpPoly::zero(p);
            for (i, row) in chars.iter().enumerate() {
                let w = crate::fp::fp_binomial(FpScalar::new(cs[i] as i64, p), l as u32)?;
                combined = combined.add(&row[j - 1].scale(w));
            }
            if !combined.is_zero() {
                return Ok(CycloValue::zero(p));
            }
        }
        let mut pinned = FpPoly::zero(p);
        for (i, row) in chars.iter().enumerate() {
            let w = crate::fp::fp_binomial(FpScalar::new(cs[i] as i64, p), j as u32)?;
            pinned = pinned.add(&row[j - 1].scale(w));
        }
        exponent = exponent.add(&pinned.mul(&poly_binomial(g, j as u32)?));
    }
    if exponent.is_zero() {
        return Ok(CycloValue::one(p));
    }
    e_p_torus(&alpha.mul_poly(&exponent)?)
}

/// Whether J(g) is zero for every g: some free slot carries a nonzero
/// combined character.
fn j_identically_zero(p: u32, cs: &[u32], chars: &[Vec<FpPoly>]) -> Result<bool> {
    let m = chars[0].len();
    for j in 1..=m {
        for l in 0..j {
            let mut combined = FpPoly::zero(p);
            for (i, row) in chars.iter().enumerate() {
                let w = crate::fp::fp_binomial(FpScalar::new(cs[i] as i64, p), l as u32)?;
                combined = combined.add(&row[j - 1].scale(w));
            }
            if !combined.is_zero() {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Compares I(g) with J(g) over `g_list`.  `chars[i][j-1]` is the
/// polynomial coefficient a_{ij} of the character f_i = e_p(sum_j a_{ij}
/// x_j); `cs` are the distinct node coefficients c_0, ..., c_k.
pub fn skew_limit_report(
    m: usize,
    cs: &[u32],
    chars: &[Vec<FpPoly>],
    alpha: &TorusDigit,
    g_list: &[FpPoly],
) -> Result<SkewLimitReport> {
    let p = alpha.p;
    validate_prime(p)?;
    if m as u32 >= p {
        return Err(Error::BinomialIndexTooLarge {
            index: m as u32,
            p,
        });
    }
    let nodes: Vec<FpScalar> = cs.iter().map(|&c| FpScalar::new(c as i64, p)).collect();
    check_nodes(&nodes)?;
    if chars.len() != cs.len() {
        return Err(Error::DimensionMismatch {
            expected: cs.len(),
            got: chars.len(),
        });
    }
    for row in chars {
        if row.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: row.len(),
            });
        }
    }
    let lsum_identically_zero = (1..=m)
        .map(|l| Ok(lsum_symbolic(p, cs, chars, l)?.iter().all(|c| c.is_zero())))
        .collect::<Result<Vec<bool>>>()?;
    let j_zero = j_identically_zero(p, cs, chars)?;
    let mut rows = Vec::with_capacity(g_list.len());
    for g in g_list {
        let i_value = skew_i_value(cs, chars, alpha, g)?;
        let j_value = skew_j_value(cs, chars, alpha, g)?;
        let diff_abs = i_value.sub(&j_value).abs_f64();
        rows.push(SkewLimitRow {
            g: g.clone(),
            g_degree: g.degree(),
            i_value,
            j_value,
            diff_abs,
        });
    }
    Ok(SkewLimitReport {
        p,
        m,
        cs: cs.to_vec(),
        lsum_identically_zero,
        j_identically_zero: j_zero,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rand_poly(rng: &mut StdRng, p: u32, max_deg: usize) -> FpPoly {
        let len = rng.gen_range(0..=max_deg + 1);
        FpPoly::new(p, (0..len).map(|_| rng.gen_range(0..p)).collect())
    }

    fn rand_torus(rng: &mut StdRng, p: u32, depth: usize) -> TorusDigit {
        TorusDigit::new(p, (0..depth).map(|_| rng.gen_range(0..p)).collect())
    }

    #[test]
    fn poly_binomial_examples() {
        let p = 5;
        let g = FpPoly::monomial(p, 1);
        assert_eq!(poly_binomial(&g, 0).unwrap(), FpPoly::one(p));
        assert_eq!(poly_binomial(&g, 1).unwrap(), g);
        // t(t-1)/2 = 3t^2 + 2t since 2^{-1} = 3 mod 5.
        assert_eq!(
            poly_binomial(&g, 2).unwrap(),
            FpPoly::new(p, vec![0, 2, 3])
        );
        assert!(matches!(
            poly_binomial(&g, 5),
            Err(Error::BinomialIndexTooLarge { .. })
        ));
    }

    #[test]
    fn poly_binomial_pascal_identity() {
        let mut rng = StdRng::seed_from_u64(7);
        for p in [3u32, 5, 7, 13] {
            for _ in 0..50 {
                let g = rand_poly(&mut rng, p, 4);
                let g1 = g.add(&FpPoly::one(p));
                for i in 1..p.min(6) {
                    let lhs = poly_binomial(&g1, i).unwrap();
                    let rhs =
                        poly_binomial(&g, i).unwrap().add(&poly_binomial(&g, i - 1).unwrap());
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn divmod_roundtrip() {
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..200 {
            let p = 7;
            let num = rand_poly(&mut rng, p, 6);
            let mut den = rand_poly(&mut rng, p, 3);
            if den.is_zero() {
                den = FpPoly::one(p);
            }
            let (q, r) = num.divmod(&den).unwrap();
            assert_eq!(q.mul(&den).add(&r), num);
            if let Some(rd) = r.degree() {
                assert!(rd < den.degree().unwrap());
            }
        }
        assert!(FpPoly::one(7).divmod(&FpPoly::zero(7)).is_err());
    }

    #[test]
    fn torus_mul_poly_shifts_digits() {
        let p = 5;
        // x = t^{-1} + 2 t^{-3}; t * x = 1 + 2 t^{-2}, fractional part 2 t^{-2}.
        let x = TorusDigit::new(p, vec![1, 0, 2, 0]);
        let tx = x.mul_poly(&FpPoly::monomial(p, 1)).unwrap();
        assert_eq!(tx.digits, vec![0, 2, 0]);
        // Depth exhaustion: multiplying a depth-1 element by a degree-2 poly.
        let shallow = TorusDigit::new(p, vec![1]);
        assert!(matches!(
            shallow.mul_poly(&FpPoly::monomial(p, 2)),
            Err(Error::DepthExhausted { need: 3, have: 1 })
        ));
    }

    #[test]
    fn truncation_soundness() {
        // Deepening the inputs never changes the digits a shallower run
        // reported, for multiplication and for the skew shift.
        let mut rng = StdRng::seed_from_u64(9);
        let p = 5;
        for _ in 0..100 {
            let deep = rand_torus(&mut rng, p, 20);
            let shallow = deep.truncate(12);
            let g = rand_poly(&mut rng, p, 3);
            if g.is_zero() {
                continue;
            }
            let a = deep.mul_poly(&g).unwrap();
            let b = shallow.mul_poly(&g).unwrap();
            assert_eq!(a.truncate(b.depth()), b);
        }
        let alpha_deep = default_alpha(p, 30).unwrap();
        let alpha_shallow = alpha_deep.truncate(15);
        let state_deep = vec![rand_torus(&mut rng, p, 30), rand_torus(&mut rng, p, 30)];
        let state_shallow: Vec<TorusDigit> =
            state_deep.iter().map(|x| x.truncate(15)).collect();
        let g = FpPoly::new(p, vec![2, 0, 1, 3]);
        let out_deep = skew_shift(&state_deep, &g, &alpha_deep).unwrap();
        let out_shallow = skew_shift(&state_shallow, &g, &alpha_shallow).unwrap();
        for (a, b) in out_deep.iter().zip(&out_shallow) {
            assert_eq!(a.truncate(b.depth()), *b);
        }
    }

    #[test]
    fn skew_shift_identity_and_rotation() {
        let p = 5;
        let alpha = default_alpha(p, 10).unwrap();
        let state = vec![
            TorusDigit::new(p, vec![1, 2, 3, 4, 0, 1, 2, 3, 4, 0]),
            TorusDigit::new(p, vec![4, 3, 2, 1, 0, 4, 3, 2, 1, 0]),
        ];
        // g = 0 is the identity (no depth loss).
        let out = skew_shift(&state, &FpPoly::zero(p), &alpha).unwrap();
        assert_eq!(out, state);
        // m = 1 is the rotation x_1 -> x_1 + g alpha.
        let g = FpPoly::new(p, vec![3, 1]);
        let one_level = vec![state[0].clone()];
        let out = skew_shift(&one_level, &g, &alpha).unwrap();
        let expected = state[0].add(&alpha.mul_poly(&g).unwrap()).truncate(9);
        assert_eq!(out[0], expected);
    }

    #[test]
    fn skew_shift_action_law() {
        // shift(g) after shift(h) equals shift(g + h), on 10^4 random
        // (g, h, state) triples, compared at the common exact depth.
        let mut rng = StdRng::seed_from_u64(10);
        let p = 5;
        let m = 2;
        let depth = 24;
        let alpha = default_alpha(p, depth).unwrap();
        for _ in 0..10_000 {
            let g = rand_poly(&mut rng, p, 2);
            let h = rand_poly(&mut rng, p, 2);
            let state: Vec<TorusDigit> =
                (0..m).map(|_| rand_torus(&mut rng, p, depth)).collect();
            let two_step = skew_shift(&skew_shift(&state, &h, &alpha).unwrap(), &g, &alpha).unwrap();
            let one_step = skew_shift(&state, &g.add(&h), &alpha).unwrap();
            for (a, b) in two_step.iter().zip(&one_step) {
                let d = a.depth().min(b.depth());
                assert_eq!(a.truncate(d), b.truncate(d));
            }
        }
    }

    #[test]
    fn e_p_is_a_character() {
        let p = 5;
        assert_eq!(
            e_p_torus(&TorusDigit::zero(p, 3)).unwrap(),
            CycloValue::one(p)
        );
        assert_eq!(
            e_p_torus(&TorusDigit::new(p, vec![1, 0, 0])).unwrap(),
            CycloValue::root(p, 1)
        );
        assert!(e_p_torus(&TorusDigit::zero(p, 0)).is_err());
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let x = rand_torus(&mut rng, p, 4);
            let y = rand_torus(&mut rng, p, 4);
            assert_eq!(
                e_p_torus(&x.add(&y)).unwrap(),
                e_p_torus(&x).unwrap().mul(&e_p_torus(&y).unwrap())
            );
            // p-th power of the character value is 1.
            let mut pw = CycloValue::one(p);
            let v = e_p_torus(&x).unwrap();
            for _ in 0..p {
                pw = pw.mul(&v);
            }
            assert_eq!(pw, CycloValue::one(p));
        }
    }

    #[test]
    fn default_alpha_digits_and_periodicity() {
        let alpha = default_alpha(5, 7).unwrap();
        assert_eq!(alpha.digits, vec![1, 0, 1, 0, 0, 1, 0]);
        assert!(matches!(
            default_alpha(5, 2),
            Err(Error::DepthExhausted { need: 3, have: 2 })
        ));
        // Triangular gaps grow, so no eventual period fits any tested window.
        let deep = default_alpha(5, 60).unwrap();
        assert!(detect_eventual_period(&deep.digits).is_none());
        // Rational contrast via the long-division oracle: 1/(t-1) has all
        // fractional digits equal to 1, which the same scan flags.
        let r = rational_digits(&FpPoly::one(5), &FpPoly::new(5, vec![4, 1]), 12).unwrap();
        assert_eq!(r.digits, vec![1; 12]);
        assert_eq!(detect_eventual_period(&r.digits), Some((0, 1)));
        // Cross-check the oracle: (t - 1) * (1/(t-1)) has fractional part 0.
        let back = r.mul_poly(&FpPoly::new(5, vec![4, 1])).unwrap();
        assert!(back.is_zero());
    }

    #[test]
    fn digit_serialization_roundtrip() {
        let x = TorusDigit::new(61, vec![0, 9, 10, 35, 36, 60]);
        let s = x.to_base_p_string();
        assert_eq!(s, "09azAY");
        assert_eq!(TorusDigit::from_base_p_string(61, &s).unwrap(), x);
        assert!(TorusDigit::from_base_p_string(5, "09").is_err());
        assert!(TorusDigit::from_base_p_string(5, "0 1").is_err());
    }

    #[test]
    fn zero_character_has_zero_distance() {
        let alpha = default_alpha(5, 20).unwrap();
        for n in 1..=4 {
            let d = character_distance_sq(&alpha, &[FpPoly::zero(5)], n).unwrap();
            assert!(d.is_zero());
        }
    }

    #[test]
    fn ergodicity_diagnostic_irrational_vs_rational() {
        let p = 5;
        let depth = 16;
        let alpha = default_alpha(p, depth).unwrap();
        let rows = ergodicity_diagnostic(1, &alpha, 1..=5, 3).unwrap();
        // Nonincreasing, strictly decreasing at the start, and exactly zero
        // once the Folner sets see all three leading digit positions of the
        // products a * alpha.
        for w in rows.windows(2) {
            assert!(w[1].mean_distance_sq <= w[0].mean_distance_sq);
        }
        assert!(rows[1].mean_distance_sq < rows[0].mean_distance_sq);
        assert!(rows[2].mean_distance_sq.is_zero());
        assert!(rows[4].mean_distance_sq.is_zero());
        // Rational alpha = 1/(t-1): the combination a(1) = 0 keeps a fixed
        // fraction of characters fully correlated at every n, so the mean
        // stalls instead of tending to zero.
        let rational = rational_digits(&FpPoly::one(p), &FpPoly::new(p, vec![4, 1]), depth).unwrap();
        let rows = ergodicity_diagnostic(1, &rational, 1..=5, 3).unwrap();
        let stall = BigRational::new(BigInt::from(24), BigInt::from(124));
        for row in &rows {
            assert_eq!(row.mean_distance_sq, stall);
            assert!(row.max_distance_sq.is_one());
        }
    }

    #[test]
    fn ergodicity_diagnostic_two_levels_smoke() {
        let p = 3;
        let alpha = default_alpha(p, 12).unwrap();
        let rows = ergodicity_diagnostic(2, &alpha, 1..=3, 2).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].mean_distance_sq <= w[0].mean_distance_sq);
        }
        assert!(rows[2].mean_distance_sq < rows[0].mean_distance_sq);
    }

    #[test]
    fn skew_limit_zero_characters_agree() {
        let p = 5;
        let alpha = default_alpha(p, 20).unwrap();
        let chars = vec![vec![FpPoly::zero(p); 2]; 3];
        let gs: Vec<FpPoly> = (0..25).map(|i| FpPoly::from_index(p, 2, i)).collect();
        let report = skew_limit_report(2, &[0, 1, 2], &chars, &alpha, &gs).unwrap();
        assert_eq!(report.lsum_identically_zero, vec![true, true]);
        assert!(!report.j_identically_zero);
        for row in &report.rows {
            assert_eq!(row.i_value, CycloValue::one(p));
            assert_eq!(row.j_value, CycloValue::one(p));
            assert_eq!(row.diff_abs, 0.0);
        }
    }

    #[test]
    fn skew_limit_generic_character_vandermonde() {
        // A single nonzero top-level coefficient a_{0,2}: the symbolic
        // (lsum) forms cannot all vanish (Vandermonde), so I(g) = 0 away
        // from finitely many g, and J vanishes identically.
        let p = 5;
        let alpha = default_alpha(p, 30).unwrap();
        let mut chars = vec![vec![FpPoly::zero(p); 2]; 3];
        chars[0][1] = FpPoly::one(p);
        let gs: Vec<FpPoly> = (0..125).map(|i| FpPoly::from_index(p, 3, i)).collect();
        let report = skew_limit_report(2, &[0, 1, 2], &chars, &alpha, &gs).unwrap();
        assert!(report.lsum_identically_zero.iter().any(|z| !z));
        assert!(report.j_identically_zero);
        // The l = 2 form is the nonzero constant a_{02}, so I(g) = 0 for
        // every g and the report agrees with J identically.
        assert!(report.rows.iter().all(|r| r.diff_abs < 1e-12));
    }

    #[test]
    fn skew_limit_regression_fixture() {
        // p = 5, m = 2, c = (0, 1, 2), a_{01} = -t^2, a_{02} = -1,
        // a_{12} = 1: B_2 vanishes identically, B_1(g) = g - t^2, and a free
        // slot kills J.  So |I - J| = 1 exactly at g = t^2 (one of the 100
        // degree-2 polynomials) and 0 for every g of degree 5.
        let p = 5;
        let alpha = default_alpha(p, 40).unwrap();
        let mut chars = vec![vec![FpPoly::zero(p); 2]; 3];
        chars[0][0] = FpPoly::new(p, vec![0, 0, 4]); // -t^2
        chars[0][1] = FpPoly::constant(p, 4); // -1
        chars[1][1] = FpPoly::one(p);
        let degree_exact = |d: usize| -> Vec<FpPoly> {
            (0..(p as usize).pow(d as u32 + 1))
                .map(|i| FpPoly::from_index(p, d + 1, i))
                .filter(|g| g.degree() == Some(d))
                .collect()
        };
        let deg2 = degree_exact(2);
        assert_eq!(deg2.len(), 100);
        let report = skew_limit_report(2, &[0, 1, 2], &chars, &alpha, &deg2).unwrap();
        assert_eq!(report.lsum_identically_zero, vec![false, true]);
        assert!(report.j_identically_zero);
        let hits: Vec<&SkewLimitRow> = report
            .rows
            .iter()
            .filter(|r| r.diff_abs > 1e-12)
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].g, FpPoly::monomial(p, 2));
        assert!((hits[0].diff_abs - 1.0).abs() < 1e-12);
        let mean2: f64 =
            report.rows.iter().map(|r| r.diff_abs).sum::<f64>() / report.rows.len() as f64;
        let deg5 = degree_exact(5);
        let report5 = skew_limit_report(2, &[0, 1, 2], &chars, &alpha, &deg5).unwrap();
        assert!(report5.rows.iter().all(|r| r.diff_abs < 1e-12));
        let mean5: f64 =
            report5.rows.iter().map(|r| r.diff_abs).sum::<f64>() / report5.rows.len() as f64;
        assert!((mean2 - 0.01).abs() < 1e-12);
        assert!(mean5 < mean2);
    }

    #[test]
    fn skew_limit_validates_input() {
        let p = 5;
        let alpha = default_alpha(p, 10).unwrap();
        let chars = vec![vec![FpPoly::zero(p); 2]; 3];
        assert!(matches!(
            skew_limit_report(2, &[0, 1, 1], &chars, &alpha, &[]),
            Err(Error::RepeatedNodes)
        ));
        assert!(matches!(
            skew_limit_report(2, &[0, 1], &chars, &alpha, &[]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            skew_limit_report(5, &[0, 1, 2], &[vec![], vec![], vec![]], &alpha, &[]),
            Err(Error::BinomialIndexTooLarge { .. })
        ));
    }

    #[test]
    fn display_polynomials() {
        let p = 5;
        assert_eq!(FpPoly::zero(p).to_string(), "0");
        assert_eq!(FpPoly::new(p, vec![2, 1, 3]).to_string(), "3t^2 + t + 2");
    }
}
