//! Hall-Petresco groups HP_{c_0,...,c_k}(U_1 x ... x U_r), their Haar
//! integrals realized as uniform averages over polynomial coefficient data,
//! the constrained cosets, and the limit-formula reports.

use crate::averages::{correlation_sequence, multi_average_integral, uniform_density_norm, Observable};
use crate::cyclo::CycloValue;
use crate::error::{Error, Result};
use crate::fp::{fp_binomial, FpScalar, GroupElement};
use crate::weyl::WeylTower;
use num_bigint::BigInt;
use num_rational::BigRational;

/// Guard on the number of enumerated coefficient tuples.
pub const ENUM_GUARD: u128 = 1 << 24;

/// Description of a Hall-Petresco group or constrained coset.
#[derive(Debug, Clone)]
pub struct HPGroupSpec {
    pub p: u32,
    /// c_0, ..., c_k, pairwise distinct.
    pub coeffs: Vec<FpScalar>,
    /// Structure-group dimensions m_1, ..., m_r.
    pub dims: Vec<usize>,
    /// Optional leading-coefficient constraint theta = (theta_1, ..., theta_r).
    pub constraint: Option<Vec<Vec<u32>>>,
}

impl HPGroupSpec {
    pub fn new(
        p: u32,
        coeffs: Vec<FpScalar>,
        dims: Vec<usize>,
        constraint: Option<Vec<Vec<u32>>>,
    ) -> Result<Self> {
        crate::fp::validate_prime(p)?;
        if coeffs.len() as u32 > p || dims.len() as u32 >= p {
            return Err(Error::DegreeTooLarge {
                degree: coeffs.len().max(dims.len()) as u32,
                p,
            });
        }
        for (i, a) in coeffs.iter().enumerate() {
            if a.p != p {
                return Err(Error::PrimeMismatch(a.p, p));
            }
            for b in &coeffs[..i] {
                if a.value == b.value {
                    return Err(Error::RepeatedCoefficients);
                }
            }
        }
        if let Some(theta) = &constraint {
            if theta.len() != dims.len() {
                return Err(Error::BadThetaShape { level: theta.len() });
            }
            for (j, (t, &m)) in theta.iter().zip(&dims).enumerate() {
                if t.len() != m {
                    return Err(Error::BadThetaShape { level: j + 1 });
                }
            }
        }
        Ok(HPGroupSpec {
            p,
            coeffs,
            dims,
            constraint,
        })
    }

    /// Total flat dimension of a single point of U_1 x ... x U_r.
    pub fn point_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Number of free coefficient scalars a_{jl}: level j contributes
    /// (j+1) m_j slots, one fewer in constrained mode.
    pub fn free_scalars(&self) -> usize {
        self.dims
            .iter()
            .enumerate()
            .map(|(idx, &m)| {
                let j = idx + 1;
                if self.constraint.is_some() {
                    j * m
                } else {
                    (j + 1) * m
                }
            })
            .sum()
    }

    pub fn enumeration_count(&self) -> u128 {
        (self.p as u128).pow(self.free_scalars() as u32)
    }
}

/// A tuple (P(c_0), ..., P(c_k)) of points of U_1 x ... x U_r.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HPPoint {
    pub points: Vec<Vec<u32>>,
}

/// Iterator over the coefficient parameterization of the HP group: every
/// tuple (a_{jl}) of coefficient data, mapped to the point tuple
/// ((sum_{l<=j} C(c_i, l) a_{jl})_j)_{i=0..k}.  Duplicate image points are
/// deliberately kept: the parameterization is a homomorphism with uniform
/// fibers, so the mean over parameters is the Haar integral.
pub struct HPEnumerator<'a> {
    spec: &'a HPGroupSpec,
    /// Binomials C(c_i, l) for l = 0..=r.
    binoms: Vec<Vec<u32>>,
    cursor: u128,
    total: u128,
}

impl<'a> HPEnumerator<'a> {
    fn point_of(&self, mut code: u128) -> HPPoint {
        let p = self.spec.p;
        let kk = self.spec.coeffs.len();
        let mut points = vec![Vec::with_capacity(self.spec.point_dim()); kk];
        for (idx, &m) in self.spec.dims.iter().enumerate() {
            let j = idx + 1;
            // Coefficient vectors a_{j0}, ..., a_{jj} in F_p^m; in constrained
            // mode the leading slot a_{jj} comes from theta.
            let free_l = if self.spec.constraint.is_some() { j } else { j + 1 };
            let mut coeff_vecs: Vec<Vec<u32>> = Vec::with_capacity(j + 1);
            for _ in 0..free_l {
                let mut v = vec![0u32; m];
                for slot in v.iter_mut() {
                    *slot = (code % p as u128) as u32;
                    code /= p as u128;
                }
                coeff_vecs.push(v);
            }
            if let Some(theta) = &self.spec.constraint {
                coeff_vecs.push(theta[idx].clone());
            }
            for (i, point) in points.iter_mut().enumerate() {
                for r in 0..m {
                    let mut acc = 0u64;
                    for (l, a) in coeff_vecs.iter().enumerate() {
                        acc += self.binoms[i][l] as u64 * a[r] as u64 % p as u64;
                    }
                    point.push((acc % p as u64) as u32);
                }
            }
        }
        HPPoint { points }
    }
}

impl<'a> Iterator for HPEnumerator<'a> {
    type Item = HPPoint;
    fn next(&mut self) -> Option<HPPoint> {
        if self.cursor >= self.total {
            return None;
        }
        let pt = self.point_of(self.cursor);
        self.cursor += 1;
        Some(pt)
    }
}

/// Enumerates the HP group (or coset) through its coefficient data, with
/// uniform weight 1/count per enumerated tuple.
pub fn hp_enumerate(spec: &HPGroupSpec) -> Result<HPEnumerator<'_>> {
    let total = spec.enumeration_count();
    if total > ENUM_GUARD {
        return Err(Error::GuardExceeded {
            size: total,
            guard: ENUM_GUARD,
        });
    }
    let r = spec.dims.len();
    let binoms = spec
        .coeffs
        .iter()
        .map(|&c| {
            (0..=r as u32)
                .map(|l| fp_binomial(c, l).map(|b| b.value))
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<Vec<u32>>>>()?;
    Ok(HPEnumerator {
        spec,
        binoms,
        cursor: 0,
        total,
    })
}

fn point_index(p: u32, coords: &[u32]) -> usize {
    let mut idx = 0usize;
    for &c in coords.iter().rev() {
        idx = idx * p as usize + c as usize;
    }
    idx
}

fn eval_on_point(spec: &HPGroupSpec, f: &Observable, coords: &[u32]) -> CycloValue {
    match f {
        Observable::Table(t) => t[point_index(spec.p, coords)].clone(),
        Observable::CharProd(chars) => {
            let mut offset = 0usize;
            let mut e = 0u64;
            for (c, &m) in chars.iter().zip(&spec.dims) {
                e += c.pairing(&coords[offset..offset + m]).expect("shape") as u64;
                offset += m;
            }
            CycloValue::root(spec.p, (e % spec.p as u64) as i64)
        }
    }
}

fn check_obs_shapes(spec: &HPGroupSpec, fs: &[Observable]) -> Result<()> {
    if fs.len() != spec.coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.coeffs.len(),
            got: fs.len(),
        });
    }
    let count = (spec.p as usize).pow(spec.point_dim() as u32);
    for f in fs {
        match f {
            Observable::Table(t) => {
                if t.len() != count {
                    return Err(Error::DimensionMismatch {
                        expected: count,
                        got: t.len(),
                    });
                }
            }
            Observable::CharProd(chars) => {
                if chars.len() != spec.dims.len()
                    || chars.iter().zip(&spec.dims).any(|(c, &m)| c.dual.len() != m)
                {
                    return Err(Error::DimensionMismatch {
                        expected: spec.dims.len(),
                        got: chars.len(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Closed form of the integral for pure tensor-character observables.
///
/// prod_i f_i(point_i) has exponent sum_{j,l} (sum_i C(c_i, l) dual_{ij}) . a_{jl},
/// so the average over uniform coefficient data is the indicator that every
/// free-slot combination vanishes; in constrained mode the fixed slot
/// a_{jj} = theta_j contributes a pure phase instead.
fn hp_integral_chars(spec: &HPGroupSpec, fs: &[Observable]) -> CycloValue {
    let p = spec.p;
    let mut phase = 0u64;
    for (idx, &m) in spec.dims.iter().enumerate() {
        let j = idx + 1;
        let free_l = if spec.constraint.is_some() { j } else { j + 1 };
        for l in 0..=j {
            // combined dual: sum_i C(c_i, l) dual_{i,j}
            let mut combined = vec![0u64; m];
            for (i, f) in fs.iter().enumerate() {
                let chars = match f {
                    Observable::CharProd(c) => c,
                    _ => unreachable!(),
                };
                let b = fp_binomial(spec.coeffs[i], l as u32).expect("l <= r < p").value as u64;
                for (slot, &d) in combined.iter_mut().zip(&chars[idx].dual) {
                    *slot = (*slot + b * d as u64) % p as u64;
                }
            }
            if l < free_l {
                if combined.iter().any(|&v| v != 0) {
                    return CycloValue::zero(p);
                }
            } else {
                // fixed slot: phase contribution combined . theta_j
                let theta = &spec.constraint.as_ref().expect("constrained")[idx];
                for (d, &t) in combined.iter().zip(theta) {
                    phase += d * t as u64 % p as u64;
                }
            }
        }
    }
    CycloValue::root(p, (phase % p as u64) as i64)
}

/// Haar integral of f_0 x ... x f_k over the HP group: the mean over the
/// coefficient parameterization of prod_i f_i(point_i).
pub fn hp_integral(spec: &HPGroupSpec, fs: &[Observable]) -> Result<CycloValue> {
    check_obs_shapes(spec, fs)?;
    if fs.iter().all(|f| f.is_charprod()) {
        // The closed form avoids the enumeration guard entirely; it is
        // cross-checked against the enumeration route in tests.
        return Ok(hp_integral_chars(spec, fs));
    }
    let total = spec.enumeration_count();
    let mut acc = CycloValue::zero(spec.p);
    for pt in hp_enumerate(spec)? {
        let mut prod = eval_on_point(spec, &fs[0], &pt.points[0]);
        for (f, coords) in fs.iter().zip(&pt.points).skip(1) {
            prod = prod.mul(&eval_on_point(spec, f, coords));
        }
        acc = acc.add(&prod);
    }
    Ok(acc.scale(&BigRational::new(
        BigInt::from(1),
        BigInt::from(total as u64),
    )))
}

/// Integral over the constrained coset HP(...)_theta; the spec must carry a
/// constraint.
pub fn hp_coset_integral(spec: &HPGroupSpec, fs: &[Observable]) -> Result<CycloValue> {
    if spec.constraint.is_none() {
        return Err(Error::BadThetaShape { level: 0 });
    }
    hp_integral(spec, fs)
}

/// theta_i(g) = Delta_g^i u_i for each level i of the tower: the constant
/// value of the i-fold difference of the level-i coordinate function.
pub fn theta_of_g(sys: &WeylTower, g: &GroupElement) -> Result<Vec<Vec<u32>>> {
    let p = sys.p;
    let count = sys.state_count();
    let mut theta = Vec::with_capacity(sys.num_levels());
    // Powers T_{s g} for s = 0..=num_levels.
    let max_i = sys.num_levels();
    let mut perms: Vec<Vec<usize>> = Vec::with_capacity(max_i + 1);
    perms.push((0..count).collect());
    for s in 1..=max_i {
        perms.push(sys.shift_permutation(&g.scale(FpScalar::new(s as i64, p))));
    }
    for i in 1..=max_i {
        let offset = sys.prefix_dim(i);
        let m = sys.levels[i - 1].0.dim;
        // Delta_g^i u_i(x) = sum_s (-1)^(i-s) C(i, s) u_i(T_{s g} x)
        let binoms: Vec<i64> = (0..=i)
            .map(|s| {
                let mut b: i64 = 1;
                for t in 0..s {
                    b = b * (i as i64 - t as i64) / (t as i64 + 1);
                }
                b
            })
            .collect();
        let mut value: Option<Vec<u32>> = None;
        for idx in 0..count {
            let mut acc = vec![0i64; m];
            for s in 0..=i {
                let sidx = perms[s][idx];
                let state = sys.state_from_index(sidx);
                let sign = if (i - s) % 2 == 1 { -1i64 } else { 1 };
                for r in 0..m {
                    acc[r] += sign * binoms[s] * state[offset + r] as i64;
                }
            }
            let v: Vec<u32> = acc.iter().map(|&a| a.rem_euclid(p as i64) as u32).collect();
            match &value {
                None => value = Some(v),
                Some(prev) => {
                    if *prev != v {
                        return Err(Error::NonConstantDifference { order: i as u32 });
                    }
                }
            }
        }
        theta.push(value.expect("state space nonempty"));
    }
    Ok(theta)
}

/// One row of the limit-formula report: LHS is the multiple average on the
/// tower, RHS the HP integral over the characteristic factor Z_{k-1}.
#[derive(Debug, Clone)]
pub struct LimitRow {
    pub acting_dim: usize,
    pub lhs: CycloValue,
    pub rhs: CycloValue,
    pub diff_abs: f64,
    pub exact_zero: bool,
}

/// Pushes an observable on the tower state space forward to the first
/// `keep` levels (fiberwise averaging over the discarded levels).
pub fn observable_pushforward(sys: &WeylTower, f: &Observable, keep: usize) -> Observable {
    let dims = sys.level_dims();
    if keep >= dims.len() {
        return f.clone();
    }
    match f {
        Observable::CharProd(chars) => {
            if chars[keep..].iter().all(|c| c.is_zero()) {
                Observable::CharProd(chars[..keep].to_vec())
            } else {
                // A nontrivial character averages to zero along its fiber.
                let count = (sys.p as usize).pow(dims[..keep].iter().sum::<usize>() as u32);
                Observable::Table(vec![CycloValue::zero(sys.p); count])
            }
        }
        Observable::Table(t) => {
            let kept_dim: usize = dims[..keep].iter().sum();
            let kept_count = (sys.p as usize).pow(kept_dim as u32);
            let fiber = t.len() / kept_count;
            let mut out = vec![CycloValue::zero(sys.p); kept_count];
            for (idx, v) in t.iter().enumerate() {
                // Base coords are the least significant digits of the index.
                let base = idx % kept_count;
                out[base] = out[base].add(v);
            }
            let w = BigRational::new(BigInt::from(1), BigInt::from(fiber as u64));
            Observable::Table(out.into_iter().map(|v| v.scale(&w)).collect())
        }
    }
}

/// Per system: |multi_average_integral - hp_integral| for the limit formula.
pub fn limit_formula_report(
    entries: &[(WeylTower, Vec<Observable>)],
    cs: &[FpScalar],
) -> Result<Vec<LimitRow>> {
    let k = cs.len() - 1;
    let mut rows = Vec::new();
    for (sys, fs) in entries {
        let lhs = multi_average_integral(sys, cs, fs)?;
        let keep = if k == 0 { 0 } else { sys.num_levels().min(k - 1) };
        let dims: Vec<usize> = sys.level_dims()[..keep].to_vec();
        let pushed: Vec<Observable> = fs
            .iter()
            .map(|f| observable_pushforward(sys, f, keep))
            .collect();
        let spec = HPGroupSpec::new(sys.p, cs.to_vec(), dims, None)?;
        let rhs = hp_integral(&spec, &pushed)?;
        let diff = lhs.sub(&rhs);
        rows.push(LimitRow {
            acting_dim: sys.acting_dim,
            diff_abs: diff.abs_f64(),
            exact_zero: diff.is_zero(),
            lhs,
            rhs,
        });
    }
    Ok(rows)
}

/// Uniform-density norms of the difference series I(g) - J(g), where J uses
/// the constrained coset with theta(g) from the tower.
#[derive(Debug, Clone)]
pub struct SecondLimitReport {
    pub ud_norms: Vec<(usize, f64)>,
    pub max_abs_diff: f64,
    pub exact_zero: bool,
}

pub fn second_limit_report(
    sys: &WeylTower,
    cs: &[FpScalar],
    fs: &[Observable],
    window_dims: &[usize],
) -> Result<SecondLimitReport> {
    let k = cs.len() - 1;
    let i_series = correlation_sequence(sys, cs, fs)?;
    let keep = sys.num_levels().min(k);
    let dims: Vec<usize> = sys.level_dims()[..keep].to_vec();
    let pushed: Vec<Observable> = fs
        .iter()
        .map(|f| observable_pushforward(sys, f, keep))
        .collect();
    let mut j_values = Vec::with_capacity(sys.group_count());
    for g in GroupElement::enumerate(sys.p, sys.acting_dim) {
        let theta = theta_of_g(sys, &g)?;
        let spec = HPGroupSpec::new(sys.p, cs.to_vec(), dims.clone(), Some(theta[..keep].to_vec()))?;
        j_values.push(hp_coset_integral(&spec, &pushed)?);
    }
    let j_series = crate::averages::CorrelationSeries {
        p: sys.p,
        acting_dim: sys.acting_dim,
        values: j_values,
    };
    let diff = i_series.sub(&j_series);
    let max_abs_diff = diff.values.iter().map(|v| v.abs_f64()).fold(0.0, f64::max);
    let exact_zero = diff.values.iter().all(|v| v.is_zero());
    let ud_norms = uniform_density_norm(&diff, window_dims)?;
    Ok(SecondLimitReport {
        ud_norms,
        max_abs_diff,
        exact_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::AdditiveCharacter;
    use crate::weyl::kronecker_example;
    use std::collections::HashSet;

    fn s(v: i64, p: u32) -> FpScalar {
        FpScalar::new(v, p)
    }

    fn collect_points(spec: &HPGroupSpec) -> Vec<HPPoint> {
        hp_enumerate(spec).unwrap().collect()
    }

    #[test]
    fn hp_01_image_is_full_square() {
        let p = 5;
        let spec = HPGroupSpec::new(p, vec![s(0, p), s(1, p)], vec![1, 1, 1], None).unwrap();
        let set: HashSet<HPPoint> = collect_points(&spec).into_iter().collect();
        assert_eq!(set.len(), (p as usize).pow(6));
    }

    #[test]
    fn hp_012_level1_constraint() {
        let p = 5;
        let spec = HPGroupSpec::new(p, vec![s(0, p), s(1, p), s(2, p)], vec![1, 1], None).unwrap();
        for pt in collect_points(&spec) {
            let h = |i: usize| pt.points[i][0] as i64;
            assert_eq!((h(0) - 2 * h(1) + h(2)).rem_euclid(p as i64), 0);
        }
    }

    #[test]
    fn hp_0123_constraints() {
        let p = 5;
        let spec = HPGroupSpec::new(
            p,
            vec![s(0, p), s(1, p), s(2, p), s(3, p)],
            vec![1, 1],
            None,
        )
        .unwrap();
        for pt in collect_points(&spec) {
            let h1 = |i: usize| pt.points[i][0] as i64;
            let h2 = |i: usize| pt.points[i][1] as i64;
            assert_eq!((h1(0) - 2 * h1(1) + h1(2)).rem_euclid(p as i64), 0);
            assert_eq!((h1(1) - 2 * h1(2) + h1(3)).rem_euclid(p as i64), 0);
            assert_eq!(
                (h2(0) - 3 * h2(1) + 3 * h2(2) - h2(3)).rem_euclid(p as i64),
                0
            );
        }
    }

    #[test]
    fn diagonal_and_surjectivity() {
        let p = 3;
        let spec = HPGroupSpec::new(p, vec![s(0, p), s(1, p), s(2, p)], vec![1, 1], None).unwrap();
        let pts = collect_points(&spec);
        let set: HashSet<&HPPoint> = pts.iter().collect();
        let dim = spec.point_dim();
        let count = (p as usize).pow(dim as u32);
        // Diagonal containment.
        for z in 0..count {
            let coords = crate::weyl::decode(p, dim, z);
            let diag = HPPoint {
                points: vec![coords.clone(), coords.clone(), coords],
            };
            assert!(set.contains(&diag));
        }
        // Coordinate surjectivity.
        for i in 0..3 {
            let proj: HashSet<Vec<u32>> = pts.iter().map(|pt| pt.points[i].clone()).collect();
            assert_eq!(proj.len(), count);
        }
    }

    #[test]
    fn zero_coset_is_a_subgroup() {
        let p = 3;
        let theta = vec![vec![0u32], vec![0u32]];
        let spec = HPGroupSpec::new(
            p,
            vec![s(0, p), s(1, p), s(2, p)],
            vec![1, 1],
            Some(theta),
        )
        .unwrap();
        let pts: HashSet<HPPoint> = collect_points(&spec).into_iter().collect();
        for a in &pts {
            for b in &pts {
                let sum = HPPoint {
                    points: a
                        .points
                        .iter()
                        .zip(&b.points)
                        .map(|(x, y)| {
                            x.iter().zip(y).map(|(&u, &v)| (u + v) % p).collect()
                        })
                        .collect(),
                };
                assert!(pts.contains(&sum));
            }
        }
        // A theta-coset is a translate of the zero coset.
        let theta = vec![vec![1u32], vec![2u32]];
        let cspec = HPGroupSpec::new(
            p,
            vec![s(0, p), s(1, p), s(2, p)],
            vec![1, 1],
            Some(theta),
        )
        .unwrap();
        let coset: HashSet<HPPoint> = collect_points(&cspec).into_iter().collect();
        let rep = coset.iter().next().unwrap().clone();
        let translated: HashSet<HPPoint> = pts
            .iter()
            .map(|a| HPPoint {
                points: a
                    .points
                    .iter()
                    .zip(&rep.points)
                    .map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| (u + v) % p).collect())
                    .collect(),
            })
            .collect();
        assert_eq!(coset, translated);
    }

    #[test]
    fn integral_of_one_is_one() {
        let p = 5;
        let spec = HPGroupSpec::new(p, vec![s(0, p), s(1, p), s(2, p)], vec![1], None).unwrap();
        let one = Observable::CharProd(vec![AdditiveCharacter::zero(p, 1)]);
        let v = hp_integral(&spec, &[one.clone(), one.clone(), one]).unwrap();
        assert_eq!(v, CycloValue::one(p));
    }

    #[test]
    fn character_closed_form_matches_enumeration() {
        let p = 5;
        let spec = HPGroupSpec::new(
            p,
            vec![s(0, p), s(1, p), s(2, p), s(3, p)],
            vec![2, 1],
            None,
        )
        .unwrap();
        // Exhaust a batch of character tuples and compare both routes.
        for seed in 0..40u64 {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fs: Vec<Observable> = (0..4)
                .map(|_| {
                    Observable::CharProd(vec![
                        AdditiveCharacter::new(p, vec![rng.gen_range(0..p), rng.gen_range(0..p)]),
                        AdditiveCharacter::new(p, vec![rng.gen_range(0..p)]),
                    ])
                })
                .collect();
            let fast = hp_integral_chars(&spec, &fs);
            // Enumeration route through table observables.
            let tables: Vec<Observable> = fs
                .iter()
                .map(|f| {
                    let count = (p as usize).pow(spec.point_dim() as u32);
                    let t = (0..count)
                        .map(|idx| {
                            let coords = crate::weyl::decode(p, spec.point_dim(), idx);
                            eval_on_point(&spec, f, &coords)
                        })
                        .collect();
                    Observable::Table(t)
                })
                .collect();
            let slow = hp_integral(&spec, &tables).unwrap();
            assert_eq!(fast, slow, "seed {seed}");
        }
    }

    #[test]
    fn constrained_closed_form_matches_enumeration() {
        let p = 5;
        let theta = vec![vec![2u32], vec![3u32]];
        let spec = HPGroupSpec::new(
            p,
            vec![s(0, p), s(1, p), s(2, p)],
            vec![1, 1],
            Some(theta),
        )
        .unwrap();
        use rand::{Rng, SeedableRng};
        for seed in 0..40u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100 + seed);
            let fs: Vec<Observable> = (0..3)
                .map(|_| {
                    Observable::CharProd(vec![
                        AdditiveCharacter::new(p, vec![rng.gen_range(0..p)]),
                        AdditiveCharacter::new(p, vec![rng.gen_range(0..p)]),
                    ])
                })
                .collect();
            let fast = hp_coset_integral(&spec, &fs).unwrap();
            let tables: Vec<Observable> = fs
                .iter()
                .map(|f| {
                    let count = (p as usize).pow(spec.point_dim() as u32);
                    let t = (0..count)
                        .map(|idx| {
                            let coords = crate::weyl::decode(p, spec.point_dim(), idx);
                            eval_on_point(&spec, f, &coords)
                        })
                        .collect();
                    Observable::Table(t)
                })
                .collect();
            let slow = hp_coset_integral(&spec, &tables).unwrap();
            assert_eq!(fast, slow, "seed {seed}");
        }
    }

    #[test]
    fn hp_integral_symmetric_under_pair_permutation() {
        let p = 5;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let sysdims = vec![1usize];
        let count = (p as usize).pow(1);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            use rand::Rng;
            Observable::Table(
                (0..count)
                    .map(|_| CycloValue::root(p, rng.gen_range(0..p) as i64))
                    .collect(),
            )
        };
        let fs: Vec<Observable> = (0..3).map(|_| mk(&mut rng)).collect();
        let cs = [s(0, p), s(1, p), s(3, p)];
        let spec = HPGroupSpec::new(p, cs.to_vec(), sysdims.clone(), None).unwrap();
        let base = hp_integral(&spec, &fs).unwrap();
        // Permute (c_i, f_i) pairs simultaneously.
        let perm = [2usize, 0, 1];
        let cs2: Vec<FpScalar> = perm.iter().map(|&i| cs[i]).collect();
        let fs2: Vec<Observable> = perm.iter().map(|&i| fs[i].clone()).collect();
        let spec2 = HPGroupSpec::new(p, cs2, sysdims, None).unwrap();
        assert_eq!(hp_integral(&spec2, &fs2).unwrap(), base);
    }

    #[test]
    fn guard_rejects_oversized_enumerations() {
        let p = 5;
        let spec = HPGroupSpec::new(
            p,
            vec![s(0, p), s(1, p), s(2, p), s(3, p)],
            vec![4, 1],
            None,
        )
        .unwrap();
        // 2*4 + 3*1 = 11 free scalars -> 5^11 > 2^24.
        assert!(matches!(
            hp_enumerate(&spec),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn theta_of_g_on_towers() {
        let p = 3;
        let sys = kronecker_example(p, 2, 1).unwrap();
        let zero = GroupElement::zero(p, 2);
        assert_eq!(theta_of_g(&sys, &zero).unwrap(), vec![vec![0]]);
        // 1-level tower: theta_1(g) = rho_1(g).
        for g in GroupElement::enumerate(p, 2) {
            let theta = theta_of_g(&sys, &g).unwrap();
            assert_eq!(theta, vec![vec![g.coords[0]]]);
        }
        // Heisenberg: Delta_g^2 u_2 computed by the difference operator must
        // match the closed form of the cocycle:
        // Delta_g^2 u_2 = rho_2(g, x + g) - rho_2(g, x), independent of x;
        // take x = 0.
        let sys = crate::weyl::heisenberg_example(p, 2).unwrap();
        let zero_state = vec![0u32; 2];
        for g in GroupElement::enumerate(p, 2) {
            let theta = theta_of_g(&sys, &g).unwrap();
            let mut at_g = [0u32];
            let mut at_zero = [0u32];
            sys.levels[1].1.eval_into(p, &g.coords, &g.coords, &mut at_g);
            sys.levels[1].1.eval_into(p, &g.coords, &zero_state, &mut at_zero);
            let expected = (at_g[0] + p - at_zero[0]) % p;
            assert_eq!(theta[1], vec![expected], "g={:?}", g.coords);
            assert_eq!(theta[0], g.coords.to_vec());
        }
    }
}
