//! Multiple ergodic averages over the full group G_N, correlation sequences,
//! Gowers-Host-Kra seminorms, uniform-density norms, and the van der Corput
//! empirical check.  Every "limit over a Folner sequence" is modeled by the
//! average over the full finite group.

use crate::cyclo::{char_eval, histogram_mean, AdditiveCharacter, CycloValue};
use crate::error::{Error, Result};
use crate::fp::{FpScalar, GroupElement};
use crate::weyl::WeylTower;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use std::collections::HashMap;

/// A bounded complex observable on a Weyl state space: either a value table
/// indexed by state, or a tensor product of per-level additive characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observable {
    Table(Vec<CycloValue>),
    CharProd(Vec<AdditiveCharacter>),
}

impl Observable {
    /// The constant-1 observable in tensor-character form.
    pub fn one(sys: &WeylTower) -> Observable {
        Observable::CharProd(
            sys.level_dims()
                .iter()
                .map(|&m| AdditiveCharacter::zero(sys.p, m))
                .collect(),
        )
    }

    pub fn charprod(sys: &WeylTower, chars: Vec<AdditiveCharacter>) -> Result<Observable> {
        let dims = sys.level_dims();
        if chars.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                got: chars.len(),
            });
        }
        for (c, &m) in chars.iter().zip(&dims) {
            if c.dual.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: c.dual.len(),
                });
            }
            if c.p != sys.p {
                return Err(Error::PrimeMismatch(c.p, sys.p));
            }
        }
        Ok(Observable::CharProd(chars))
    }

    pub fn from_table(sys: &WeylTower, table: Vec<CycloValue>) -> Result<Observable> {
        if table.len() != sys.state_count() {
            return Err(Error::DimensionMismatch {
                expected: sys.state_count(),
                got: table.len(),
            });
        }
        Ok(Observable::Table(table))
    }

    /// Random rational-valued observable with small numerators; rational
    /// values keep every squared norm in the Gowers recursion an exact
    /// rational.
    pub fn random_rational<R: Rng>(sys: &WeylTower, rng: &mut R) -> Observable {
        let table = (0..sys.state_count())
            .map(|_| {
                let num = rng.gen_range(-8i64..=8);
                CycloValue::from_rational(
                    sys.p,
                    BigRational::new(BigInt::from(num), BigInt::from(4)),
                )
            })
            .collect();
        Observable::Table(table)
    }

    /// Random pure-phase observable (a table of roots of unity).
    pub fn random_phase<R: Rng>(sys: &WeylTower, rng: &mut R) -> Observable {
        let table = (0..sys.state_count())
            .map(|_| CycloValue::root(sys.p, rng.gen_range(0..sys.p) as i64))
            .collect();
        Observable::Table(table)
    }

    /// For pure tensor-character observables: the exponent e with
    /// value = zeta^e at the given state.
    pub fn phase_exponent(&self, state: &[u32]) -> Option<u32> {
        match self {
            Observable::CharProd(chars) => {
                let p = chars[0].p;
                let mut acc = 0u64;
                let mut offset = 0usize;
                for c in chars {
                    let m = c.dual.len();
                    acc += c.pairing(&state[offset..offset + m]).ok()? as u64;
                    offset += m;
                }
                Some((acc % p as u64) as u32)
            }
            Observable::Table(_) => None,
        }
    }

    pub fn eval(&self, sys: &WeylTower, state: &[u32]) -> CycloValue {
        match self {
            Observable::Table(t) => t[sys.state_index(state)].clone(),
            Observable::CharProd(chars) => {
                let mut offset = 0usize;
                let mut acc = CycloValue::one(sys.p);
                for c in chars {
                    let m = c.dual.len();
                    acc = acc.mul(&char_eval(c, &state[offset..offset + m]).expect("shape checked"));
                    offset += m;
                }
                acc
            }
        }
    }

    /// Expands to table form; the expansion is the consistency bridge between
    /// the two representations.
    pub fn to_table(&self, sys: &WeylTower) -> Vec<CycloValue> {
        match self {
            Observable::Table(t) => t.clone(),
            Observable::CharProd(_) => (0..sys.state_count())
                .map(|idx| self.eval(sys, &sys.state_from_index(idx)))
                .collect(),
        }
    }

    pub fn conj(&self, sys: &WeylTower) -> Observable {
        match self {
            Observable::Table(t) => Observable::Table(t.iter().map(|v| v.conj()).collect()),
            Observable::CharProd(chars) => Observable::CharProd(
                chars
                    .iter()
                    .map(|c| c.scale(FpScalar::new(-1, sys.p)))
                    .collect(),
            ),
        }
    }

    pub fn mean(&self, sys: &WeylTower) -> CycloValue {
        let table = self.to_table(sys);
        let mut acc = CycloValue::zero(sys.p);
        for v in &table {
            acc = acc.add(v);
        }
        acc.scale(&BigRational::new(
            BigInt::from(1),
            BigInt::from(table.len() as u64),
        ))
    }

    pub fn linf(&self, _sys: &WeylTower) -> f64 {
        match self {
            Observable::CharProd(_) => 1.0,
            Observable::Table(t) => t.iter().map(|v| v.abs_f64()).fold(0.0, f64::max),
        }
    }

    pub fn is_charprod(&self) -> bool {
        matches!(self, Observable::CharProd(_))
    }
}

/// The table g -> I(g) over G_N.
#[derive(Debug, Clone)]
pub struct CorrelationSeries {
    pub p: u32,
    pub acting_dim: usize,
    pub values: Vec<CycloValue>,
}

impl CorrelationSeries {
    pub fn sub(&self, other: &CorrelationSeries) -> CorrelationSeries {
        debug_assert_eq!(self.values.len(), other.values.len());
        CorrelationSeries {
            p: self.p,
            acting_dim: self.acting_dim,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }
}

fn validate_tuple(sys: &WeylTower, cs: &[FpScalar], fs: &[Observable]) -> Result<()> {
    if fs.is_empty() {
        return Err(Error::EmptyObservables);
    }
    if fs.len() != cs.len() {
        return Err(Error::DimensionMismatch {
            expected: cs.len(),
            got: fs.len(),
        });
    }
    for c in cs {
        if c.p != sys.p {
            return Err(Error::PrimeMismatch(c.p, sys.p));
        }
    }
    for f in fs {
        if let Observable::Table(t) = f {
            if t.len() != sys.state_count() {
                return Err(Error::DimensionMismatch {
                    expected: sys.state_count(),
                    got: t.len(),
                });
            }
        }
        if let Observable::CharProd(chars) = f {
            let dims = sys.level_dims();
            if chars.len() != dims.len()
                || chars.iter().zip(&dims).any(|(c, &m)| c.dual.len() != m)
            {
                return Err(Error::DimensionMismatch {
                    expected: dims.len(),
                    got: chars.len(),
                });
            }
        }
    }
    Ok(())
}

/// E_{g in G_N} (1/|X|) sum_x prod_i f_i(T_{c_i g} x), exact.
pub fn multi_average_integral(
    sys: &WeylTower,
    cs: &[FpScalar],
    fs: &[Observable],
) -> Result<CycloValue> {
    validate_tuple(sys, cs, fs)?;
    let count = sys.state_count();
    let gcount = sys.group_count();
    let p = sys.p;
    let all_phase = fs.iter().all(|f| f.is_charprod());
    let mut shifted = vec![0u32; sys.state_dim()];
    if all_phase {
        let mut counts = vec![0u64; p as usize];
        for g in GroupElement::enumerate(p, sys.acting_dim) {
            let gs: Vec<GroupElement> = cs.iter().map(|&c| g.scale(c)).collect();
            for idx in 0..count {
                let s = sys.state_from_index(idx);
                let mut e = 0u64;
                for (gi, f) in gs.iter().zip(fs) {
                    sys.shift_into(gi, &s, &mut shifted);
                    e += f.phase_exponent(&shifted).expect("charprod") as u64;
                }
                counts[(e % p as u64) as usize] += 1;
            }
        }
        Ok(histogram_mean(p, &counts, (gcount * count) as u64))
    } else {
        let tables: Vec<Vec<CycloValue>> = fs.iter().map(|f| f.to_table(sys)).collect();
        let mut acc = CycloValue::zero(p);
        for g in GroupElement::enumerate(p, sys.acting_dim) {
            let perms: Vec<Vec<usize>> = cs
                .iter()
                .map(|&c| sys.shift_permutation(&g.scale(c)))
                .collect();
            for idx in 0..count {
                let mut prod = tables[0][perms[0][idx]].clone();
                for (t, perm) in tables.iter().zip(&perms).skip(1) {
                    prod = prod.mul(&t[perm[idx]]);
                }
                acc = acc.add(&prod);
            }
        }
        Ok(acc.scale(&BigRational::new(
            BigInt::from(1),
            BigInt::from((gcount * count) as u64),
        )))
    }
}

/// E_{g in G_N} prod_i f_i(T_{c_i g} x) as a state-indexed table.
pub fn multi_average_function(
    sys: &WeylTower,
    cs: &[FpScalar],
    fs: &[Observable],
) -> Result<Vec<CycloValue>> {
    validate_tuple(sys, cs, fs)?;
    for (i, a) in cs.iter().enumerate() {
        if a.is_zero() {
            return Err(Error::RepeatedCoefficients);
        }
        for b in &cs[..i] {
            if a.value == b.value {
                return Err(Error::RepeatedCoefficients);
            }
        }
    }
    let count = sys.state_count();
    let gcount = sys.group_count();
    let tables: Vec<Vec<CycloValue>> = fs.iter().map(|f| f.to_table(sys)).collect();
    let mut acc = vec![CycloValue::zero(sys.p); count];
    for g in GroupElement::enumerate(sys.p, sys.acting_dim) {
        let perms: Vec<Vec<usize>> = cs
            .iter()
            .map(|&c| sys.shift_permutation(&g.scale(c)))
            .collect();
        for (idx, slot) in acc.iter_mut().enumerate() {
            let mut prod = tables[0][perms[0][idx]].clone();
            for (t, perm) in tables.iter().zip(&perms).skip(1) {
                prod = prod.mul(&t[perm[idx]]);
            }
            *slot = slot.add(&prod);
        }
    }
    let w = BigRational::new(BigInt::from(1), BigInt::from(gcount as u64));
    Ok(acc.into_iter().map(|v| v.scale(&w)).collect())
}

/// I(g) = int_X prod_i (T_{c_i g} f_i) dmu for every g in G_N.
pub fn correlation_sequence(
    sys: &WeylTower,
    cs: &[FpScalar],
    fs: &[Observable],
) -> Result<CorrelationSeries> {
    validate_tuple(sys, cs, fs)?;
    let count = sys.state_count();
    let tables: Vec<Vec<CycloValue>> = fs.iter().map(|f| f.to_table(sys)).collect();
    let w = BigRational::new(BigInt::from(1), BigInt::from(count as u64));
    let mut values = Vec::with_capacity(sys.group_count());
    for g in GroupElement::enumerate(sys.p, sys.acting_dim) {
        let perms: Vec<Vec<usize>> = cs
            .iter()
            .map(|&c| sys.shift_permutation(&g.scale(c)))
            .collect();
        let mut acc = CycloValue::zero(sys.p);
        for idx in 0..count {
            let mut prod = tables[0][perms[0][idx]].clone();
            for (t, perm) in tables.iter().zip(&perms).skip(1) {
                prod = prod.mul(&t[perm[idx]]);
            }
            acc = acc.add(&prod);
        }
        values.push(acc.scale(&w));
    }
    Ok(CorrelationSeries {
        p: sys.p,
        acting_dim: sys.acting_dim,
        values,
    })
}

/// The value of a Gowers-Host-Kra seminorm: the exact 2^k-th power, its
/// rational extraction when available, and the float norm for reporting.
#[derive(Debug, Clone)]
pub struct GowersNorm {
    pub k: usize,
    pub power: CycloValue,
    pub power_rational: Option<BigRational>,
    pub norm: f64,
}

/// Distinct shift permutations of the system with multiplicities; towers
/// whose shifts factor through a small quotient collapse the h-average.
fn shift_classes(sys: &WeylTower) -> Vec<(Vec<usize>, u64)> {
    let mut classes: HashMap<Vec<usize>, u64> = HashMap::new();
    for g in GroupElement::enumerate(sys.p, sys.acting_dim) {
        *classes.entry(sys.shift_permutation(&g)).or_insert(0) += 1;
    }
    let mut out: Vec<(Vec<usize>, u64)> = classes.into_iter().collect();
    out.sort(); // deterministic reduction order
    out
}

fn orbit_average(sys: &WeylTower, table: &[CycloValue]) -> Vec<CycloValue> {
    let orbit = sys.orbit_partition();
    let n_orbits = orbit.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = vec![CycloValue::zero(sys.p); n_orbits];
    let mut sizes = vec![0u64; n_orbits];
    for (idx, &o) in orbit.iter().enumerate() {
        sums[o] = sums[o].add(&table[idx]);
        sizes[o] += 1;
    }
    for (s, &n) in sums.iter_mut().zip(&sizes) {
        *s = s.scale(&BigRational::new(BigInt::from(1), BigInt::from(n)));
    }
    orbit.iter().map(|&o| sums[o].clone()).collect()
}

fn l2_squared(sys: &WeylTower, table: &[CycloValue]) -> CycloValue {
    let mut acc = CycloValue::zero(sys.p);
    for v in table {
        acc = acc.add(&v.abs_squared());
    }
    acc.scale(&BigRational::new(
        BigInt::from(1),
        BigInt::from(table.len() as u64),
    ))
}

fn gowers_power_rec(
    sys: &WeylTower,
    classes: &[(Vec<usize>, u64)],
    table: &[CycloValue],
    k: usize,
) -> CycloValue {
    if k == 1 {
        // ||f||_{U^1}^2 = ||E_h T_h f||_{L^2}^2, and E_h T_h f is the
        // orbit average (the invariant projection (pi_0)_* f).
        return l2_squared(sys, &orbit_average(sys, table));
    }
    let mut acc = CycloValue::zero(sys.p);
    let mut total = 0u64;
    for (perm, mult) in classes {
        let derived: Vec<CycloValue> = (0..table.len())
            .map(|idx| table[perm[idx]].mul(&table[idx].conj()))
            .collect();
        let inner = gowers_power_rec(sys, classes, &derived, k - 1);
        acc = acc.add(&inner.scale(&BigRational::from_integer(BigInt::from(*mult))));
        total += mult;
    }
    acc.scale(&BigRational::new(BigInt::from(1), BigInt::from(total)))
}

/// ||f||_{U^k(X)} with averages over the full group; returns the exact
/// 2^k-th power together with the reported float root.
pub fn gowers_norm(sys: &WeylTower, f: &Observable, k: usize) -> Result<GowersNorm> {
    if k < 1 {
        return Err(Error::GowersOrderZero);
    }
    let table = f.to_table(sys);
    let classes = shift_classes(sys);
    let power = gowers_power_rec(sys, &classes, &table, k);
    let power_rational = power.rational_part();
    let base = match &power_rational {
        Some(q) => q.to_f64().unwrap_or(f64::NAN),
        None => power.to_complex().0,
    };
    let norm = base.max(0.0).powf(1.0 / (1u64 << k) as f64);
    Ok(GowersNorm {
        k,
        power,
        power_rational,
        norm,
    })
}

/// For each window dimension d: max over cosets of the coordinate subgroup
/// F_p^d = <e_1, ..., e_d> of the mean of |sigma| on the coset.
pub fn uniform_density_norm(
    series: &CorrelationSeries,
    window_dims: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let n = series.acting_dim;
    let p = series.p as usize;
    let abs: Vec<f64> = series.values.iter().map(|v| v.abs_f64()).collect();
    let mut out = Vec::new();
    for &d in window_dims {
        if d > n {
            return Err(Error::WindowTooLarge {
                d: d as u32,
                n: n as u32,
            });
        }
        let inner = p.pow(d as u32);
        let outer = p.pow((n - d) as u32);
        let mut best = 0.0f64;
        for h in 0..outer {
            let mut acc = 0.0f64;
            for w in 0..inner {
                // Index of the element with low coords w, high coords h.
                acc += abs[h * inner + w];
            }
            best = best.max(acc / inner as f64);
        }
        out.push((d, best));
    }
    Ok(out)
}

/// Report of the generalized van der Corput inequality check: the finite
/// average is compared against the asymptotic bound and logged, flagged only
/// beyond the slack.
#[derive(Debug, Clone)]
pub struct VdcReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub flagged: bool,
}

pub fn vdc_check(
    sys: &WeylTower,
    cs: &[FpScalar],
    fs: &[Observable],
    slack: f64,
) -> Result<VdcReport> {
    let avg = multi_average_function(sys, cs, fs)?;
    let lhs_sq = l2_squared(sys, &avg);
    let lhs = match lhs_sq.rational_part() {
        Some(q) => q.to_f64().unwrap_or(f64::NAN).max(0.0).sqrt(),
        None => lhs_sq.to_complex().0.max(0.0).sqrt(),
    };
    let k = fs.len();
    let linfs: Vec<f64> = fs.iter().map(|f| f.linf(sys)).collect();
    let mut rhs = f64::INFINITY;
    for i in 0..k {
        let u = gowers_norm(sys, &fs[i], k)?.norm;
        let mut bound = u;
        for (j, l) in linfs.iter().enumerate() {
            if j != i {
                bound *= l;
            }
        }
        rhs = rhs.min(bound);
    }
    let margin = rhs - lhs;
    Ok(VdcReport {
        lhs,
        rhs,
        margin,
        flagged: lhs > rhs + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::{heisenberg_example, kronecker_example};
    use num_traits::One;
    use rand::SeedableRng;

    fn s(v: i64, p: u32) -> FpScalar {
        FpScalar::new(v, p)
    }

    #[test]
    fn constant_observables_average_to_one() {
        let sys = kronecker_example(5, 2, 1).unwrap();
        let one = Observable::one(&sys);
        let cs = [s(0, 5), s(1, 5), s(2, 5)];
        let fs = [one.clone(), one.clone(), one.clone()];
        let v = multi_average_integral(&sys, &cs, &fs).unwrap();
        assert_eq!(v, CycloValue::one(5));
        let table = multi_average_function(&sys, &[s(1, 5), s(2, 5)], &fs[..2]).unwrap();
        assert!(table.iter().all(|v| *v == CycloValue::one(5)));
    }

    #[test]
    fn orthogonal_characters_average_to_zero() {
        // k=1 on the ergodic rotation with f_0 = f_1 = a nonzero character:
        // E_g int f(x) f(x + rho(g)) = |f-hat|^2-type cancellation gives 0.
        let sys = kronecker_example(5, 2, 1).unwrap();
        let phi = Observable::charprod(&sys, vec![AdditiveCharacter::new(5, vec![1])]).unwrap();
        let v = multi_average_integral(&sys, &[s(0, 5), s(1, 5)], &[phi.clone(), phi]).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn charprod_expansion_is_consistent() {
        let sys = heisenberg_example(3, 2).unwrap();
        let f = Observable::charprod(
            &sys,
            vec![
                AdditiveCharacter::new(3, vec![1, 2]),
                AdditiveCharacter::new(3, vec![2]),
            ],
        )
        .unwrap();
        let table = f.to_table(&sys);
        for idx in 0..sys.state_count() {
            let state = sys.state_from_index(idx);
            assert_eq!(f.eval(&sys, &state), table[idx]);
            let e = f.phase_exponent(&state).unwrap();
            assert_eq!(table[idx], CycloValue::root(3, e as i64));
        }
    }

    #[test]
    fn phase_and_table_paths_agree() {
        let sys = heisenberg_example(3, 2).unwrap();
        let p = 3;
        let f0 = Observable::charprod(
            &sys,
            vec![
                AdditiveCharacter::new(p, vec![1, 0]),
                AdditiveCharacter::new(p, vec![1]),
            ],
        )
        .unwrap();
        let f1 = Observable::charprod(
            &sys,
            vec![
                AdditiveCharacter::new(p, vec![0, 2]),
                AdditiveCharacter::new(p, vec![2]),
            ],
        )
        .unwrap();
        let f2 = Observable::one(&sys);
        let cs = [s(0, p), s(1, p), s(2, p)];
        let fast = multi_average_integral(&sys, &cs, &[f0.clone(), f1.clone(), f2.clone()]).unwrap();
        let slow = multi_average_integral(
            &sys,
            &cs,
            &[
                Observable::Table(f0.to_table(&sys)),
                Observable::Table(f1.to_table(&sys)),
                Observable::Table(f2.to_table(&sys)),
            ],
        )
        .unwrap();
        assert_eq!(fast, slow);
    }

    #[test]
    fn ergodic_mean_function_is_constant() {
        // k=1 on an ergodic system: E_g T_g f is the constant int f dmu.
        let sys = kronecker_example(3, 2, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let f = Observable::random_rational(&sys, &mut rng);
        let avg = multi_average_function(&sys, &[s(1, 3)], &[f.clone()]).unwrap();
        let mean = f.mean(&sys);
        assert!(avg.iter().all(|v| *v == mean));
    }

    #[test]
    fn correlation_series_basics() {
        let sys = kronecker_example(3, 2, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let fs = [
            Observable::random_rational(&sys, &mut rng),
            Observable::random_rational(&sys, &mut rng),
        ];
        let cs = [s(0, 3), s(1, 3)];
        let series = correlation_sequence(&sys, &cs, &fs).unwrap();
        // Value at g = 0 is int prod f_i.
        let mut prod_mean = CycloValue::zero(3);
        let t0 = fs[0].to_table(&sys);
        let t1 = fs[1].to_table(&sys);
        for idx in 0..sys.state_count() {
            prod_mean = prod_mean.add(&t0[idx].mul(&t1[idx]));
        }
        prod_mean = prod_mean.scale(&BigRational::new(
            BigInt::from(1),
            BigInt::from(sys.state_count() as u64),
        ));
        assert_eq!(series.values[0], prod_mean);
        // Conjugating every f conjugates the series.
        let fsc = [fs[0].conj(&sys), fs[1].conj(&sys)];
        let seriesc = correlation_sequence(&sys, &cs, &fsc).unwrap();
        for (a, b) in series.values.iter().zip(&seriesc.values) {
            assert_eq!(a.conj(), *b);
        }
    }

    #[test]
    fn gowers_norm_of_one_is_one() {
        let sys = kronecker_example(5, 2, 1).unwrap();
        let one = Observable::one(&sys);
        for k in 1..=4 {
            let g = gowers_norm(&sys, &one, k).unwrap();
            assert_eq!(g.power_rational, Some(BigRational::one()));
        }
    }

    #[test]
    fn nonzero_character_has_u1_zero() {
        let sys = kronecker_example(5, 3, 1).unwrap();
        let phi = Observable::charprod(&sys, vec![AdditiveCharacter::new(5, vec![2])]).unwrap();
        let g = gowers_norm(&sys, &phi, 1).unwrap();
        assert!(g.power.is_zero());
    }

    #[test]
    fn u1_equals_abs_mean_on_ergodic_systems() {
        let sys = kronecker_example(5, 2, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let f = Observable::random_rational(&sys, &mut rng);
            let g = gowers_norm(&sys, &f, 1).unwrap();
            let mean = f.mean(&sys);
            assert_eq!(g.power, mean.abs_squared());
        }
    }

    #[test]
    fn gowers_monotone_on_random_observables() {
        let sys = kronecker_example(5, 3, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let f = Observable::random_rational(&sys, &mut rng);
            let powers: Vec<BigRational> = (1..=3)
                .map(|k| gowers_norm(&sys, &f, k).unwrap().power_rational.unwrap())
                .collect();
            for k in 0..powers.len() - 1 {
                // U^k <= U^(k+1)  <=>  (U^k^{2^k})^2 <= U^(k+1)^{2^(k+1)}
                assert!(&powers[k] * &powers[k] <= powers[k + 1]);
            }
        }
    }

    #[test]
    fn uniform_density_norm_basics() {
        let _sys = kronecker_example(3, 2, 1).unwrap();
        let zero = CorrelationSeries {
            p: 3,
            acting_dim: 2,
            values: vec![CycloValue::zero(3); 9],
        };
        for (_, v) in uniform_density_norm(&zero, &[0, 1, 2]).unwrap() {
            assert_eq!(v, 0.0);
        }
        let c = CycloValue::from_integer(3, -2);
        let constant = CorrelationSeries {
            p: 3,
            acting_dim: 2,
            values: vec![c; 9],
        };
        for (_, v) in uniform_density_norm(&constant, &[0, 1, 2]).unwrap() {
            assert!((v - 2.0).abs() < 1e-12);
        }
        assert!(uniform_density_norm(&constant, &[3]).is_err());
    }

    #[test]
    fn vdc_trivial_and_random() {
        let sys = kronecker_example(5, 2, 1).unwrap();
        let one = Observable::one(&sys);
        let rep = vdc_check(&sys, &[s(1, 5), s(2, 5)], &[one.clone(), one], 1e-9).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-12);
        assert!((rep.rhs - 1.0).abs() < 1e-12);
        assert!(!rep.flagged);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let fs = [
                Observable::random_phase(&sys, &mut rng),
                Observable::random_phase(&sys, &mut rng),
            ];
            let rep = vdc_check(&sys, &[s(1, 5), s(2, 5)], &fs, 1e-9).unwrap();
            assert!(!rep.flagged, "lhs={} rhs={}", rep.lhs, rep.rhs);
        }
    }

    #[test]
    fn affine_reparameterization_invariance() {
        // multi_average_integral is invariant under c_i -> a c_i + b, a != 0,
        // over the full group.
        let sys = kronecker_example(5, 2, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let fs = [
            Observable::random_rational(&sys, &mut rng),
            Observable::random_rational(&sys, &mut rng),
            Observable::random_rational(&sys, &mut rng),
        ];
        let cs = [s(0, 5), s(1, 5), s(2, 5)];
        let base = multi_average_integral(&sys, &cs, &fs).unwrap();
        for a in 1..5i64 {
            for b in 0..5i64 {
                let mapped: Vec<FpScalar> = cs
                    .iter()
                    .map(|c| s(a, 5).mul(*c).add(s(b, 5)))
                    .collect();
                let v = multi_average_integral(&sys, &mapped, &fs).unwrap();
                assert_eq!(v, base, "a={a} b={b}");
            }
        }
    }
}
