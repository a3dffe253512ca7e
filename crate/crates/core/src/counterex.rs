//! The §9-style counterexample machinery: Lagrange alpha-coefficients, the
//! symmetric frequency set A, weight selection, constraint-tuple
//! enumeration, exact verification of the recurrence-defeating integral,
//! and genericity scans.

use crate::cyclo::{CycloValue, ZCyclo};
use crate::error::{Error, Result};
use crate::fp::{fp_binomial, FpScalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The symmetric frequency set A = { sigma (alpha_i c_i, alpha_i) }.
#[derive(Debug, Clone)]
pub struct FrequencySet {
    pub p: u32,
    pub elements: Vec<(u32, u32)>,
    /// True when the eight formal elements collide (non-generic tuple).
    pub degenerate: bool,
}

/// Hermitian-symmetric weights epsilon_{a_1,a_2}; here all real, so the
/// symmetry epsilon_{-a} = conj(epsilon_a) forces equal values on +/- pairs.
#[derive(Debug, Clone)]
pub struct WeightAssignment {
    pub p: u32,
    pub entries: Vec<((u32, u32), BigRational)>,
}

impl WeightAssignment {
    pub fn value(&self, a: (u32, u32)) -> BigRational {
        self.entries
            .iter()
            .find(|(key, _)| *key == a)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn zero_weights(p: u32, a: &FrequencySet) -> Self {
        WeightAssignment {
            p,
            entries: a
                .elements
                .iter()
                .map(|&e| (e, BigRational::zero()))
                .collect(),
        }
    }
}

/// alpha_i = prod_{j != i} (c_i - c_j)^{-1} for four distinct nodes;
/// the Lagrange choice annihilating 1, x, x^2.
pub fn alpha_coeffs(c: &[FpScalar]) -> Result<Vec<FpScalar>> {
    if c.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: c.len(),
        });
    }
    let p = c[0].p;
    crate::fp::check_nodes(c)?;
    let mut alphas = Vec::with_capacity(4);
    for i in 0..4 {
        let mut prod = FpScalar::new(1, p);
        for j in 0..4 {
            if j != i {
                prod = prod.mul(c[i].sub(c[j]).inv());
            }
        }
        alphas.push(prod);
    }
    Ok(alphas)
}

/// Builds A from the first four nodes of c.  Collisions among the eight
/// formal elements are flagged, not fatal.
pub fn build_a(c: &[FpScalar]) -> Result<FrequencySet> {
    let p = c[0].p;
    let alphas = alpha_coeffs(&c[..4])?;
    let mut elements = Vec::with_capacity(8);
    for i in 0..4 {
        let a1 = alphas[i].mul(c[i]).value;
        let a2 = alphas[i].value;
        elements.push((a1, a2));
    }
    for i in 0..4 {
        let (a1, a2) = elements[i];
        elements.push(((p - a1) % p, (p - a2) % p));
    }
    let mut distinct = elements.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let degenerate = distinct.len() != 8 || elements.contains(&(0, 0));
    Ok(FrequencySet {
        p,
        elements,
        degenerate,
    })
}

/// One qualifying tuple of the constraint enumeration, with the two extra
/// identities evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintTuple {
    /// (a_{1,i}, a_{2,i}) per node, (0,0) meaning "no frequency".
    pub entries: Vec<(u32, u32)>,
    /// sum_i a_{1,i} c_i = 0.
    pub sand: bool,
    /// sum_i a_{2,i} C(c_i, 2) = 0: the identity that removes the residual
    /// theta_2-dependence of the integral.
    pub sand2: bool,
}

impl ConstraintTuple {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == (0, 0))
    }
}

/// Enumerates all tuples in (A u {(0,0)})^{k+1} satisfying the vanishing
/// identities sum a_{1,i} = sum a_{2,i} = sum a_{2,i} c_i = 0, recording
/// for each whether the two additional identities hold.
pub fn enumerate_constraint_tuples(
    a: &FrequencySet,
    c: &[FpScalar],
) -> Result<Vec<ConstraintTuple>> {
    if c.len() < 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: c.len(),
        });
    }
    crate::fp::check_nodes(c)?;
    let p = a.p as u64;
    let nodes = c.len();
    let mut pool: Vec<(u32, u32)> = vec![(0, 0)];
    pool.extend(a.elements.iter().copied());
    let binom2: Vec<u64> = c
        .iter()
        .map(|&ci| fp_binomial(ci, 2).map(|b| b.value as u64))
        .collect::<Result<Vec<u64>>>()?;
    let mut out = Vec::new();
    let total = (pool.len() as u64).pow(nodes as u32);
    for code in 0..total {
        let mut idx = code;
        let mut s1 = 0u64;
        let mut s2 = 0u64;
        let mut s2c = 0u64;
        let mut s1c = 0u64;
        let mut s2b = 0u64;
        let mut entries = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let (a1, a2) = pool[(idx % pool.len() as u64) as usize];
            idx /= pool.len() as u64;
            entries.push((a1, a2));
            s1 += a1 as u64;
            s2 += a2 as u64;
            s2c += a2 as u64 * c[i].value as u64 % p;
            s1c += a1 as u64 * c[i].value as u64 % p;
            s2b += a2 as u64 * binom2[i] % p;
        }
        if s1 % p == 0 && s2 % p == 0 && s2c % p == 0 {
            out.push(ConstraintTuple {
                entries,
                sand: s1c % p == 0,
                sand2: s2b % p == 0,
            });
        }
    }
    Ok(out)
}

/// The two designated tuples sigma (alpha_i c_i, alpha_i)_{i<=3}, padded
/// with (0,0) at the remaining nodes.
pub fn designated_tuples(a: &FrequencySet, nodes: usize) -> Vec<Vec<(u32, u32)>> {
    let plus: Vec<(u32, u32)> = (0..nodes)
        .map(|i| if i < 4 { a.elements[i] } else { (0, 0) })
        .collect();
    let minus: Vec<(u32, u32)> = (0..nodes)
        .map(|i| if i < 4 { a.elements[4 + i] } else { (0, 0) })
        .collect();
    vec![plus, minus]
}

/// Picks real weights of common magnitude r = 1/(2|A|) with
/// Re prod_{i<=3} epsilon_{alpha_i c_i, alpha_i} < 0 and f >= 0 pointwise:
/// start from all-negative values, and since a product of four negative
/// reals is positive, flip the sign at one designated element.
pub fn choose_weights(a: &FrequencySet) -> Result<WeightAssignment> {
    if a.degenerate {
        return Err(Error::RepeatedCoefficients);
    }
    let r = BigRational::new(BigInt::from(1), BigInt::from(2 * a.elements.len() as u64));
    let mut entries: Vec<((u32, u32), BigRational)> = a
        .elements
        .iter()
        .map(|&e| (e, -r.clone()))
        .collect();
    let designated: Vec<(u32, u32)> = a.elements[..4].to_vec();
    let product_sign = |entries: &[((u32, u32), BigRational)]| -> BigRational {
        designated
            .iter()
            .map(|d| {
                entries
                    .iter()
                    .find(|(key, _)| key == d)
                    .map(|(_, v)| v.clone())
                    .unwrap()
            })
            .product()
    };
    if !product_sign(&entries).is_negative() {
        // Flip the first designated element and (Hermitian symmetry with
        // real values) its negation partner.
        let flip = designated[0];
        let partner = ((a.p - flip.0) % a.p, (a.p - flip.1) % a.p);
        for (key, v) in entries.iter_mut() {
            if *key == flip || *key == partner {
                *v = -v.clone();
            }
        }
    }
    debug_assert!(product_sign(&entries).is_negative());
    Ok(WeightAssignment { p: a.p, entries })
}

/// f = 1 + sum_a epsilon_a e_p(a_1 x_1 + a_2 x_2), tabulated on the digit
/// square F_p x F_p and scaled by the common denominator of the weights so
/// the entries live in Z[zeta_p].  Returns (table, denominator).
fn f_table_scaled(w: &WeightAssignment) -> (Vec<ZCyclo>, BigInt) {
    let p = w.p;
    let mut denom = BigInt::one();
    for (_, v) in &w.entries {
        denom = num_integer::lcm(denom, v.denom().clone());
    }
    let nums: Vec<i64> = w
        .entries
        .iter()
        .map(|(_, v)| {
            (v.numer() * (&denom / v.denom()))
                .to_i64()
                .expect("weight numerator fits i64")
        })
        .collect();
    let d = denom.to_i64().expect("weight denominator fits i64");
    let mut table = Vec::with_capacity((p * p) as usize);
    for x2 in 0..p {
        for x1 in 0..p {
            let mut v = ZCyclo::from_integer(p, d);
            for (((a1, a2), _), &n) in w.entries.iter().zip(&nums) {
                if n == 0 {
                    continue;
                }
                let e = (*a1 as u64 * x1 as u64 + *a2 as u64 * x2 as u64) % p as u64;
                let mut term = ZCyclo::root(p, e as i64);
                if n >= 0 {
                    for _ in 0..n {
                        v.add_assign(&term);
                    }
                } else {
                    for _ in 0..(-n) {
                        v.sub_assign(&term);
                    }
                }
                let _ = &mut term;
            }
            table.push(v);
        }
    }
    (table, denom)
}

/// Result of scanning the recurrence integral over every theta.
#[derive(Debug, Clone)]
pub struct TooReport {
    /// Exact per-theta values when rational; None for any non-rational value
    /// (possible only for degenerate tuples).
    pub max_exact: Option<BigRational>,
    pub max_float: f64,
    pub all_rational: bool,
    pub theta_count: usize,
    /// Strict inequality "< 1" at every theta.
    pub pass: bool,
}

fn real_f64(v: &CycloValue) -> f64 {
    v.to_complex().0
}

/// Prepared state for direct (non-expanded) evaluation of the integral.
struct DirectEvaluator {
    p: u32,
    table: Vec<ZCyclo>,
    cs: Vec<u32>,
    binom2: Vec<u32>,
    full_denom: BigInt,
}

impl DirectEvaluator {
    fn new(c: &[FpScalar], w: &WeightAssignment) -> Result<Self> {
        crate::fp::check_nodes(c)?;
        let p = w.p;
        let (table, denom) = f_table_scaled(w);
        let binom2: Vec<u32> = c
            .iter()
            .map(|&ci| fp_binomial(ci, 2).map(|b| b.value))
            .collect::<Result<Vec<u32>>>()?;
        let cs: Vec<u32> = c.iter().map(|ci| ci.value).collect();
        let mut full_denom = denom.clone();
        for _ in 1..c.len() {
            full_denom *= &denom;
        }
        full_denom *= BigInt::from((p as u64).pow(3));
        Ok(DirectEvaluator {
            p,
            table,
            cs,
            binom2,
            full_denom,
        })
    }

    fn value(&self, theta1: u32, theta2: u32) -> CycloValue {
        let p = self.p;
        let pu = p as usize;
        let nodes = self.cs.len();
        let mut acc = ZCyclo::zero(p);
        for x1 in 0..p {
            for x2 in 0..p {
                for t2 in 0..p {
                    let mut prod: Option<ZCyclo> = None;
                    for i in 0..nodes {
                        let y1 = (x1 as u64 + self.cs[i] as u64 * theta1 as u64) % p as u64;
                        let y2 = (x2 as u64
                            + self.cs[i] as u64 * t2 as u64
                            + self.binom2[i] as u64 * theta2 as u64)
                            % p as u64;
                        let cell = &self.table[y2 as usize * pu + y1 as usize];
                        prod = Some(match prod {
                            None => cell.clone(),
                            Some(q) => q.mul(cell),
                        });
                    }
                    acc.add_assign(&prod.expect("at least one node"));
                }
            }
        }
        acc.to_cyclo(&self.full_denom)
    }
}

/// Direct exact evaluation of the integral over (x_1, x_2, t_2) of
/// prod_i f(x_1 + c_i theta_1, x_2 + c_i t_2 + C(c_i,2) theta_2) at one
/// theta.  Only the leading digit of each F_p^m coordinate enters any
/// character, so the computation lives on the digit torus.
pub fn too_direct_value(
    c: &[FpScalar],
    w: &WeightAssignment,
    theta1: u32,
    theta2: u32,
) -> Result<CycloValue> {
    Ok(DirectEvaluator::new(c, w)?.value(theta1, theta2))
}

/// Direct exact evaluation at every theta in (F_p)^2; independent of the
/// torus dimension m for the same reason as above.
pub fn verify_too(c: &[FpScalar], w: &WeightAssignment, _m: usize) -> Result<TooReport> {
    let eval = DirectEvaluator::new(c, w)?;
    let p = w.p;
    let mut max_exact: Option<BigRational> = None;
    let mut max_float = f64::NEG_INFINITY;
    let mut all_rational = true;
    let mut pass = true;
    for theta1 in 0..p {
        for theta2 in 0..p {
            let value = eval.value(theta1, theta2);
            match value.rational_part() {
                Some(q) => {
                    if q >= BigRational::one() {
                        pass = false;
                    }
                    max_exact = Some(match max_exact.take() {
                        None => q.clone(),
                        Some(cur) => cur.max(q.clone()),
                    });
                    max_float = max_float.max(q.to_f64().unwrap_or(f64::NAN));
                }
                None => {
                    all_rational = false;
                    let fv = real_f64(&value);
                    if fv >= 1.0 {
                        pass = false;
                    }
                    max_float = max_float.max(fv);
                }
            }
        }
    }
    if !all_rational {
        max_exact = None;
    }
    Ok(TooReport {
        max_exact,
        max_float,
        all_rational,
        theta_count: (p * p) as usize,
        pass,
    })
}

/// Character-expansion route: the integral equals
///   sum over flail tuples of (prod epsilon) e_p(theta_1 S_1 + theta_2 S_2)
/// with S_1 = sum a_{1,i} c_i and S_2 = sum a_{2,i} C(c_i, 2).
pub fn too_character_values(
    c: &[FpScalar],
    w: &WeightAssignment,
    a: &FrequencySet,
) -> Result<Vec<Vec<CycloValue>>> {
    let p = w.p;
    let tuples = enumerate_constraint_tuples(a, c)?;
    let binom2: Vec<u64> = c
        .iter()
        .map(|&ci| fp_binomial(ci, 2).map(|b| b.value as u64))
        .collect::<Result<Vec<u64>>>()?;
    // Per qualifying tuple: its weight product and its (S_1, S_2) phase.
    let mut terms: Vec<(BigRational, u64, u64)> = Vec::new();
    for t in &tuples {
        let mut prod = BigRational::one();
        let mut s1 = 0u64;
        let mut s2 = 0u64;
        for (i, &(a1, a2)) in t.entries.iter().enumerate() {
            if (a1, a2) != (0, 0) {
                prod *= w.value((a1, a2));
            }
            s1 += a1 as u64 * c[i].value as u64 % p as u64;
            s2 += a2 as u64 * binom2[i] % p as u64;
        }
        terms.push((prod, s1 % p as u64, s2 % p as u64));
    }
    let mut grid = Vec::with_capacity(p as usize);
    for theta1 in 0..p {
        let mut row = Vec::with_capacity(p as usize);
        for theta2 in 0..p {
            let mut acc = CycloValue::zero(p);
            for (prod, s1, s2) in &terms {
                if prod.is_zero() {
                    continue;
                }
                let e = (theta1 as u64 * s1 + theta2 as u64 * s2) % p as u64;
                acc = acc.add(&CycloValue::root(p, e as i64).scale(prod));
            }
            row.push(acc);
        }
        grid.push(row);
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureKind {
    AlphaCollision,
    ExtraTuple { count: usize },
    TooValueNotBelowOne,
}

#[derive(Debug, Clone)]
pub struct GenericityScan {
    pub samples: usize,
    pub successes: usize,
    pub fraction: f64,
    /// Failed sample tuples with their classification.
    pub failures: Vec<(Vec<u32>, FailureKind)>,
}

/// Samples distinct-entry tuples (c_0, ..., c_k) and reports the fraction
/// for which the counterexample construction goes through: nondegenerate A,
/// exactly three qualifying tuples, and the integral strictly below one for
/// every theta.  Uses the character-expansion route (cross-checked against
/// direct integration elsewhere) for speed.
pub fn genericity_scan(p: u32, k: usize, samples: usize, seed: u64) -> Result<GenericityScan> {
    crate::fp::validate_prime(p)?;
    if k < 3 || k as u32 >= p {
        return Err(Error::DegreeTooLarge { degree: k as u32, p });
    }
    let mut successes = 0usize;
    let mut failures = Vec::new();
    for sample in 0..samples {
        // Independent per-sample stream for reproducible parallel-safe runs.
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(sample as u64));
        let mut vals: Vec<u32> = Vec::with_capacity(k + 1);
        while vals.len() < k + 1 {
            let v = rng.gen_range(0..p);
            if !vals.contains(&v) {
                vals.push(v);
            }
        }
        let c: Vec<FpScalar> = vals.iter().map(|&v| FpScalar::new(v as i64, p)).collect();
        let a = build_a(&c)?;
        if a.degenerate {
            failures.push((vals, FailureKind::AlphaCollision));
            continue;
        }
        let tuples = enumerate_constraint_tuples(&a, &c)?;
        if tuples.len() != 3 {
            failures.push((vals, FailureKind::ExtraTuple { count: tuples.len() }));
            continue;
        }
        let w = choose_weights(&a)?;
        let grid = too_character_values(&c, &w, &a)?;
        let mut ok = true;
        for row in &grid {
            for v in row {
                match v.rational_part() {
                    Some(q) => {
                        if q >= BigRational::one() {
                            ok = false;
                        }
                    }
                    None => {
                        if real_f64(v) >= 1.0 {
                            ok = false;
                        }
                    }
                }
            }
        }
        if ok {
            successes += 1;
        } else {
            failures.push((vals, FailureKind::TooValueNotBelowOne));
        }
    }
    Ok(GenericityScan {
        samples,
        successes,
        fraction: successes as f64 / samples as f64,
        failures,
    })
}
