//! Khintchine-property scans on finite systems, the weighted limit formula,
//! the temple inequality core, and the double-recurrence certification.

use crate::error::{Error, Result};
use crate::fp::{fp_binomial, FpScalar, GroupElement};
use crate::weyl::{decode, WeylTower};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A measurable event: 0/1 membership table over the tower state space.
#[derive(Debug, Clone)]
pub struct EventSet {
    pub membership: Vec<bool>,
}

impl EventSet {
    pub fn new(sys: &WeylTower, membership: Vec<bool>) -> Result<Self> {
        if membership.len() != sys.state_count() {
            return Err(Error::DimensionMismatch {
                expected: sys.state_count(),
                got: membership.len(),
            });
        }
        Ok(EventSet { membership })
    }

    pub fn full(sys: &WeylTower) -> Self {
        EventSet {
            membership: vec![true; sys.state_count()],
        }
    }

    pub fn measure(&self) -> BigRational {
        let hits = self.membership.iter().filter(|&&b| b).count();
        BigRational::new(BigInt::from(hits), BigInt::from(self.membership.len()))
    }

    /// The image T_h(A) as an event set.
    pub fn shifted(&self, sys: &WeylTower, h: &GroupElement) -> Self {
        let perm = sys.shift_permutation(h);
        let mut out = vec![false; self.membership.len()];
        for (idx, &m) in self.membership.iter().enumerate() {
            if m {
                out[perm[idx]] = true;
            }
        }
        EventSet { membership: out }
    }
}

/// Result of a Khintchine scan: the good set of group elements together
/// with its density and coset-hit (syndeticity proxy) profile.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub epsilon: BigRational,
    pub threshold: BigRational,
    pub good: Vec<bool>,
    pub density: BigRational,
    /// For each window dimension d: does the good set meet every coset of
    /// the coordinate subgroup F_p^d <= G_N?
    pub coset_profile: Vec<(usize, bool)>,
    /// Largest syndeticity index: the good set meets every coset of a
    /// coordinate subgroup of index p^d.  None when the good set is empty.
    pub best_syndetic_index: Option<usize>,
}

/// mu(T_{-c_0 g}A cap ... cap T_{-c_k g}A) for a single g, exactly.
fn intersection_measure(sys: &WeylTower, cs: &[FpScalar], a: &EventSet, g: &GroupElement) -> BigRational {
    let perms: Vec<Vec<usize>> = cs
        .iter()
        .map(|&c| sys.shift_permutation(&g.scale(c)))
        .collect();
    let mut hits = 0usize;
    'outer: for idx in 0..sys.state_count() {
        for perm in &perms {
            if !a.membership[perm[idx]] {
                continue 'outer;
            }
        }
        hits += 1;
    }
    BigRational::new(BigInt::from(hits), BigInt::from(sys.state_count()))
}

/// Scans every g in G_N for mu(cap_i T_{-c_i g} A) >= mu(A)^{k+1} - epsilon.
pub fn khintchine_scan(
    sys: &WeylTower,
    cs: &[FpScalar],
    a: &EventSet,
    epsilon: &BigRational,
) -> Result<ScanResult> {
    check_tuple(sys, cs)?;
    if a.membership.len() != sys.state_count() {
        return Err(Error::DimensionMismatch {
            expected: sys.state_count(),
            got: a.membership.len(),
        });
    }
    if a.membership.iter().all(|&b| !b) {
        return Err(Error::EmptyEventSet);
    }
    let mu = a.measure();
    let mut mu_pow = BigRational::one();
    for _ in 0..cs.len() {
        mu_pow *= &mu;
    }
    let threshold = &mu_pow - epsilon;
    let p = sys.p;
    let n = sys.acting_dim;
    let mut good = Vec::with_capacity(sys.group_count());
    for g in GroupElement::enumerate(p, n) {
        let m = intersection_measure(sys, cs, a, &g);
        good.push(m >= threshold);
    }
    let hits = good.iter().filter(|&&b| b).count();
    let density = BigRational::new(BigInt::from(hits), BigInt::from(good.len()));
    // Coset-hit profile over the coordinate subgroups F_p^d (first d coords).
    let mut coset_profile = Vec::with_capacity(n + 1);
    for d in 0..=n {
        let sub = (p as usize).pow(d as u32);
        let quot = good.len() / sub;
        let mut all_hit = true;
        for coset in 0..quot {
            // g index = inner + coset * p^d with inner ranging over the window.
            let hit = (0..sub).any(|inner| good[coset * sub + inner]);
            if !hit {
                all_hit = false;
                break;
            }
        }
        coset_profile.push((d, all_hit));
    }
    // Meeting every coset of the dimension-(n-d) subgroup means index p^d.
    let best_syndetic_index = coset_profile
        .iter()
        .filter(|&&(_, hit)| hit)
        .map(|&(d, _)| n - d)
        .max();
    Ok(ScanResult {
        epsilon: epsilon.clone(),
        threshold,
        good,
        density,
        coset_profile,
        best_syndetic_index,
    })
}

/// A weight on U_1: nonnegative rational table with mean 1.  The library
/// constructs normalized indicators of coordinate subgroups, the finite
/// surrogate for a bump function near the origin.
#[derive(Debug, Clone)]
pub struct Eta {
    pub p: u32,
    pub dim: usize,
    pub values: Vec<BigRational>,
}

impl Eta {
    pub fn new(p: u32, dim: usize, values: Vec<BigRational>) -> Result<Self> {
        let count = (p as usize).pow(dim as u32);
        if values.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.is_negative()) {
            return Err(Error::BadEtaMean("negative weight value".into()));
        }
        let mean: BigRational =
            values.iter().sum::<BigRational>() / BigRational::from(BigInt::from(count));
        if !mean.is_one() {
            return Err(Error::BadEtaMean(format!("mean is {mean}, expected 1")));
        }
        Ok(Eta { p, dim, values })
    }

    /// Normalized indicator of the coordinate subgroup spanned by the first
    /// `d` coordinates of U_1 = F_p^dim; d = 0 gives the indicator of {0}.
    pub fn subgroup(p: u32, dim: usize, d: usize) -> Result<Self> {
        if d > dim {
            return Err(Error::WindowTooLarge { d: d as u32, n: dim as u32 });
        }
        let count = (p as usize).pow(dim as u32);
        let sub = (p as usize).pow(d as u32);
        let scale = BigRational::from(BigInt::from(count / sub));
        let values = (0..count)
            .map(|idx| {
                if idx < sub {
                    scale.clone()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        Eta::new(p, dim, values)
    }

    pub fn constant(p: u32, dim: usize) -> Self {
        let count = (p as usize).pow(dim as u32);
        Eta {
            p,
            dim,
            values: vec![BigRational::one(); count],
        }
    }
}

/// rho_1(g): the level-1 coordinate of the shifted origin (the level-1
/// cocycle is x-independent).
pub fn rho1(sys: &WeylTower, g: &GroupElement) -> Vec<u32> {
    let zero = vec![0u32; sys.state_dim()];
    let shifted = sys.shift(g, &zero);
    shifted[..sys.levels[0].0.dim].to_vec()
}

/// The level-1 fiber average of 1_A: a rational function on U_1.
pub fn fiber_average(sys: &WeylTower, a: &EventSet) -> Vec<BigRational> {
    let m1 = sys.levels[0].0.dim;
    let base_count = (sys.p as usize).pow(m1 as u32);
    let fiber = sys.state_count() / base_count;
    let mut counts = vec![0usize; base_count];
    for (idx, &b) in a.membership.iter().enumerate() {
        if b {
            counts[idx % base_count] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| BigRational::new(BigInt::from(c), BigInt::from(fiber)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct WeightedReport {
    /// E_g eta(rho_1(g)) mu(cap T_{-c_i g} A).
    pub lhs: BigRational,
    /// int int eta(t) f(x+c_0 t) f(x+c_1 t) f(x+c_2 t), f the fiber average.
    pub rhs: BigRational,
}

/// Weighted limit formula for k = 2 (three nodes).
pub fn weighted_average(
    sys: &WeylTower,
    cs: &[FpScalar],
    a: &EventSet,
    eta: &Eta,
) -> Result<WeightedReport> {
    check_tuple(sys, cs)?;
    if cs.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: cs.len(),
        });
    }
    let m1 = sys.levels[0].0.dim;
    if eta.dim != m1 || eta.p != sys.p {
        return Err(Error::DimensionMismatch {
            expected: m1,
            got: eta.dim,
        });
    }
    let p = sys.p;
    let mut lhs = BigRational::zero();
    for g in GroupElement::enumerate(p, sys.acting_dim) {
        let t = rho1(sys, &g);
        let w = &eta.values[coords_index(p, &t)];
        if w.is_zero() {
            continue;
        }
        lhs += w * intersection_measure(sys, cs, a, &g);
    }
    lhs /= BigRational::from(BigInt::from(sys.group_count()));
    // RHS over the Kronecker factor.
    let f = fiber_average(sys, a);
    let base_count = f.len();
    let mut rhs = BigRational::zero();
    for t_idx in 0..base_count {
        let w = &eta.values[t_idx];
        if w.is_zero() {
            continue;
        }
        let t = decode(p, m1, t_idx);
        let shifts: Vec<Vec<u32>> = cs
            .iter()
            .map(|&c| t.iter().map(|&v| (v as u64 * c.value as u64 % p as u64) as u32).collect())
            .collect();
        let mut inner = BigRational::zero();
        for x_idx in 0..base_count {
            let x = decode(p, m1, x_idx);
            let mut prod = BigRational::one();
            for ct in &shifts {
                let y: Vec<u32> = x.iter().zip(ct).map(|(&a, &b)| (a + b) % p).collect();
                prod *= &f[coords_index(p, &y)];
                if prod.is_zero() {
                    break;
                }
            }
            inner += prod;
        }
        rhs += w * inner;
    }
    rhs /= BigRational::from(BigInt::from(base_count * base_count));
    Ok(WeightedReport { lhs, rhs })
}

#[derive(Debug, Clone)]
pub struct TempleReport {
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub pass: bool,
    pub equality: bool,
}

/// The temple inequality: for real F on U_2 = F_p^m and c_2 with
/// c_2, c_2 - 1, c_2 + 1 invertible,
///   E_{x,t,u} F(x) F(x+t) F(x+c_2 t + C(c_2,2) u) F(x+(c_2+1) t + C(c_2+1,2) u)
///     >= (E F)^4.
pub fn temple_check(p: u32, m: usize, values: &[BigRational], c2: FpScalar) -> Result<TempleReport> {
    crate::fp::validate_prime(p)?;
    if c2.p != p {
        return Err(Error::PrimeMismatch(c2.p, p));
    }
    let v = c2.value;
    if v == 0 || v == 1 || v == p - 1 {
        return Err(Error::DegenerateC2(v));
    }
    let count = (p as usize).pow(m as u32);
    if values.len() != count {
        return Err(Error::DimensionMismatch {
            expected: count,
            got: values.len(),
        });
    }
    let b2 = fp_binomial(c2, 2)?.value as u64;
    let c2p1 = FpScalar::new(v as i64 + 1, p);
    let b2p1 = fp_binomial(c2p1, 2)?.value as u64;
    let pv = p as u64;
    // Common-denominator integer path: lhs numerator fits i128 comfortably
    // at desk scale.
    let mut denom = BigInt::one();
    for val in values {
        denom = num_integer::lcm(denom, val.denom().clone());
    }
    let nums: Option<Vec<i64>> = values
        .iter()
        .map(|val| (val.numer() * (&denom / val.denom())).to_i64())
        .collect();
    let lhs = match nums {
        Some(nums) if count <= 1 << 14 && nums.iter().all(|&x| x.abs() < 1 << 20) => {
            let mut acc: i128 = 0;
            let dims = m;
            let mut x = vec![0u32; dims];
            let mut t = vec![0u32; dims];
            let mut u = vec![0u32; dims];
            let mut n2 = vec![0u32; dims];
            let mut n3 = vec![0u32; dims];
            let mut n4 = vec![0u32; dims];
            for xi in 0..count {
                decode_into(p, xi, &mut x);
                for ti in 0..count {
                    decode_into(p, ti, &mut t);
                    for ui in 0..count {
                        decode_into(p, ui, &mut u);
                        for r in 0..dims {
                            n2[r] = ((x[r] + t[r]) as u64 % pv) as u32;
                            n3[r] = ((x[r] as u64 + v as u64 * t[r] as u64 + b2 * u[r] as u64)
                                % pv) as u32;
                            n4[r] = ((x[r] as u64
                                + (v as u64 + 1) * t[r] as u64
                                + b2p1 * u[r] as u64)
                                % pv) as u32;
                        }
                        acc += nums[xi] as i128
                            * nums[coords_index(p, &n2)] as i128
                            * nums[coords_index(p, &n3)] as i128
                            * nums[coords_index(p, &n4)] as i128;
                    }
                }
            }
            let d4 = &denom * &denom * &denom * &denom;
            BigRational::new(BigInt::from(acc), d4 * BigInt::from(count).pow(3))
        }
        _ => {
            // Exact fallback without the integer fast path.
            let mut acc = BigRational::zero();
            for xi in 0..count {
                let x = decode(p, m, xi);
                for ti in 0..count {
                    let t = decode(p, m, ti);
                    for ui in 0..count {
                        let u = decode(p, m, ui);
                        let mut n2 = vec![0u32; m];
                        let mut n3 = vec![0u32; m];
                        let mut n4 = vec![0u32; m];
                        for r in 0..m {
                            n2[r] = ((x[r] + t[r]) as u64 % pv) as u32;
                            n3[r] = ((x[r] as u64 + v as u64 * t[r] as u64 + b2 * u[r] as u64)
                                % pv) as u32;
                            n4[r] = ((x[r] as u64
                                + (v as u64 + 1) * t[r] as u64
                                + b2p1 * u[r] as u64)
                                % pv) as u32;
                        }
                        acc += &values[xi]
                            * &values[coords_index(p, &n2)]
                            * &values[coords_index(p, &n3)]
                            * &values[coords_index(p, &n4)];
                    }
                }
            }
            acc / BigRational::from(BigInt::from(count).pow(3))
        }
    };
    let mean: BigRational =
        values.iter().sum::<BigRational>() / BigRational::from(BigInt::from(count));
    let rhs = &mean * &mean * &mean * &mean;
    Ok(TempleReport {
        pass: lhs >= rhs,
        equality: lhs == rhs,
        lhs,
        rhs,
    })
}

fn coords_index(p: u32, coords: &[u32]) -> usize {
    let mut idx = 0usize;
    for &c in coords.iter().rev() {
        idx = idx * p as usize + c as usize;
    }
    idx
}

fn check_tuple(sys: &WeylTower, cs: &[FpScalar]) -> Result<()> {
    if cs.is_empty() {
        return Err(Error::EmptyObservables);
    }
    for (i, c) in cs.iter().enumerate() {
        if c.p != sys.p {
            return Err(Error::PrimeMismatch(c.p, sys.p));
        }
        for b in &cs[..i] {
            if b.value == c.value {
                return Err(Error::RepeatedCoefficients);
            }
        }
    }
    Ok(())
}

fn decode_into(p: u32, mut idx: usize, out: &mut [u32]) {
    for slot in out.iter_mut() {
        *slot = (idx % p as usize) as u32;
        idx /= p as usize;
    }
}

#[derive(Debug, Clone)]
pub struct DoubleRecurrenceReport {
    /// Dimension of the largest coordinate subgroup W of U_1 on which the
    /// t-integral stays above mu(A)^3 - eps/2.
    pub window_dim: usize,
    pub min_integral: BigRational,
    pub threshold: BigRational,
    pub weighted: WeightedReport,
    pub scan: ScanResult,
    pub certified: bool,
}

/// int_x f(x+c_0 t) f(x+c_1 t) f(x+c_2 t) over U_1 for fixed t.
fn t_integral(p: u32, m: usize, f: &[BigRational], cs: &[FpScalar], t: &[u32]) -> BigRational {
    let count = f.len();
    let shifts: Vec<Vec<u32>> = cs
        .iter()
        .map(|&c| t.iter().map(|&v| (v as u64 * c.value as u64 % p as u64) as u32).collect())
        .collect();
    let mut acc = BigRational::zero();
    for x_idx in 0..count {
        let x = decode(p, m, x_idx);
        let mut prod = BigRational::one();
        for ct in &shifts {
            let y: Vec<u32> = x.iter().zip(ct).map(|(&a, &b)| (a + b) % p).collect();
            prod *= &f[coords_index(p, &y)];
            if prod.is_zero() {
                break;
            }
        }
        acc += prod;
    }
    acc / BigRational::from(BigInt::from(count))
}

/// Double-recurrence certification: find the largest coordinate subgroup
/// W <= U_1 with the t-integral >= mu(A)^3 - eps/2 throughout, then combine
/// the matching weighted average with a scan at eps.
pub fn double_recurrence_report(
    sys: &WeylTower,
    cs: &[FpScalar],
    a: &EventSet,
    epsilon: &BigRational,
) -> Result<DoubleRecurrenceReport> {
    if cs.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: cs.len(),
        });
    }
    let mu = a.measure();
    let threshold = &mu * &mu * &mu - epsilon / BigRational::from(BigInt::from(2));
    let p = sys.p;
    let m1 = sys.levels[0].0.dim;
    let f = fiber_average(sys, a);
    let mut best: Option<(usize, BigRational)> = None;
    for d in (0..=m1).rev() {
        let sub = (p as usize).pow(d as u32);
        let mut min_val: Option<BigRational> = None;
        for t_idx in 0..sub {
            let t = decode(p, m1, t_idx);
            let val = t_integral(p, m1, &f, cs, &t);
            min_val = Some(match min_val {
                None => val,
                Some(cur) => cur.min(val),
            });
        }
        let min_val = min_val.expect("subgroup nonempty");
        if min_val >= threshold {
            best = Some((d, min_val));
            break;
        }
    }
    // d = 0 always succeeds: the t = 0 integral is int f^3 >= (int f)^3 = mu^3
    // by convexity, so `best` is always set.
    let (window_dim, min_integral) = best.expect("t = 0 certifies d = 0");
    let eta = Eta::subgroup(p, m1, window_dim)?;
    let weighted = weighted_average(sys, cs, a, &eta)?;
    let scan = khintchine_scan(sys, cs, a, epsilon)?;
    let certified = min_integral >= threshold && scan.density > BigRational::zero();
    Ok(DoubleRecurrenceReport {
        window_dim,
        min_integral,
        threshold,
        weighted,
        scan,
        certified,
    })
}
