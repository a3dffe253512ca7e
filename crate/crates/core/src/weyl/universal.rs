//! The universal Weyl system of symmetric multilinear forms used by the
//! structure theorem: Y_j = V_1 x ... x V_j, where V_i is the space of
//! symmetric (j-i)-linear forms G^(j-i) -> U_j, with shift
//!
//!   S_g(Gamma_1, ..., Gamma_j)_i(h_1, ..., h_{j-i})
//!       = sum_{l=0}^{i} C(i, l) Gamma_l(h_1, ..., h_{j-i}, g, ..., g)
//!
//! (i - l copies of g, with the convention Gamma_0 = Lambda_j), realizing
//! Lambda_j(g, ..., g) = v_j(S_g(0)).

use crate::error::{Error, Result};
use crate::fp::{fp_binomial, validate_prime, FpScalar, GroupElement};
use crate::weyl::multisets;
use rand::Rng;

/// A symmetric multilinear form G^arity -> F_p^u_dim, stored by its values on
/// sorted multisets of basis vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricForm {
    pub p: u32,
    pub n: usize,
    pub arity: usize,
    pub u_dim: usize,
    /// Sorted basis-index multisets in canonical order.
    pub slots: Vec<Vec<usize>>,
    /// One value in F_p^u_dim per slot.
    pub values: Vec<Vec<u32>>,
}

impl SymmetricForm {
    pub fn zero(p: u32, n: usize, arity: usize, u_dim: usize) -> Self {
        let slots = multisets(n, arity);
        let values = vec![vec![0; u_dim]; slots.len()];
        SymmetricForm {
            p,
            n,
            arity,
            u_dim,
            slots,
            values,
        }
    }

    pub fn random<R: Rng>(p: u32, n: usize, arity: usize, u_dim: usize, rng: &mut R) -> Self {
        let mut f = Self::zero(p, n, arity, u_dim);
        for v in f.values.iter_mut() {
            for c in v.iter_mut() {
                *c = rng.gen_range(0..p);
            }
        }
        f
    }

    fn slot_index(&self, ms: &[usize]) -> usize {
        self.slots
            .iter()
            .position(|s| s == ms)
            .expect("sorted multiset is a valid slot")
    }

    /// Full multilinear expansion over basis index tuples.
    pub fn eval(&self, args: &[&[u32]]) -> Vec<u32> {
        assert_eq!(args.len(), self.arity);
        let pp = self.p as u64;
        let mut acc = vec![0u64; self.u_dim];
        let mut idx = vec![0usize; self.arity];
        loop {
            let mut coeff = 1u64;
            for (t, &i) in idx.iter().enumerate() {
                coeff = coeff * args[t][i] as u64 % pp;
            }
            if coeff != 0 {
                let mut ms: Vec<usize> = idx.clone();
                ms.sort_unstable();
                let v = &self.values[self.slot_index(&ms)];
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a = (*a + coeff * x as u64) % pp;
                }
            }
            // Advance the mixed-radix index tuple.
            let mut t = 0;
            loop {
                if t == self.arity {
                    return acc.into_iter().map(|a| a as u32).collect();
                }
                idx[t] += 1;
                if idx[t] < self.n {
                    break;
                }
                idx[t] = 0;
                t += 1;
            }
        }
    }
}

/// The finite model of Y_j together with its seed form Lambda_j.
#[derive(Debug, Clone)]
pub struct UniversalSystem {
    pub p: u32,
    pub n: usize,
    pub j: usize,
    pub u_dim: usize,
    pub lambda: SymmetricForm,
    /// Slot layout of the state: for each level i = 1..j, the multiset slots
    /// of V_i (arity j - i).
    pub level_slots: Vec<Vec<Vec<usize>>>,
    pub state_dim: usize,
}

/// Affine description of S_g on flat state coordinates: x -> M x + b.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<u32>>,
    pub offset: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct UniversalReport {
    pub action_pass: bool,
    pub representation_pass: bool,
    pub cocycle_structure_pass: bool,
    pub state_dim: usize,
    pub state_count: u128,
    pub pairs_checked: usize,
}

impl UniversalSystem {
    pub fn new(p: u32, n: usize, j: usize, lambda: SymmetricForm) -> Result<Self> {
        validate_prime(p)?;
        if j == 0 || j as u32 >= p {
            return Err(Error::BadUniversalLevel(j as u32));
        }
        assert_eq!(lambda.arity, j);
        assert_eq!(lambda.n, n);
        let level_slots: Vec<Vec<Vec<usize>>> =
            (1..=j).map(|i| multisets(n, j - i)).collect();
        let u_dim = lambda.u_dim;
        let state_dim = level_slots.iter().map(|s| s.len()).sum::<usize>() * u_dim;
        Ok(UniversalSystem {
            p,
            n,
            j,
            u_dim,
            lambda,
            level_slots,
            state_dim,
        })
    }

    /// Offset of the value block for (level i, slot s) in the flat state.
    fn block_offset(&self, level: usize, slot: usize) -> usize {
        let before: usize = self.level_slots[..level - 1]
            .iter()
            .map(|s| s.len())
            .sum();
        (before + slot) * self.u_dim
    }

    /// Builds the affine map of S_g on flat state coordinates.
    ///
    /// The new value of level i at slot (e_{b_1}, ..., e_{b_{j-i}}) is
    /// sum_{l=0}^{i} C(i, l) Gamma_l(e_{b_1}, ..., e_{b_{j-i}}, g^(i-l)).
    /// The l = i term is Gamma_i at the same slot (identity part); the
    /// l = 0 term is a Lambda_j evaluation (the offset); 0 < l < i terms are
    /// linear in the Gamma_l values.
    pub fn shift_affine(&self, g: &GroupElement) -> AffineMap {
        let d = self.state_dim;
        let mut matrix = vec![vec![0u32; d]; d];
        let mut offset = vec![0u32; d];
        let pp = self.p as u64;
        let basis: Vec<Vec<u32>> = (0..self.n)
            .map(|b| {
                let mut e = vec![0u32; self.n];
                e[b] = 1;
                e
            })
            .collect();
        for i in 1..=self.j {
            for (slot, ms) in self.level_slots[i - 1].iter().enumerate() {
                let row0 = self.block_offset(i, slot);
                for l in 0..=i {
                    let binom = fp_binomial(FpScalar::new(i as i64, self.p), l as u32)
                        .expect("i < p")
                        .value as u64;
                    if binom == 0 {
                        continue;
                    }
                    if l == 0 {
                        // Lambda_j(e_ms, g^(i)) contributes to the offset.
                        let mut args: Vec<&[u32]> =
                            ms.iter().map(|&b| basis[b].as_slice()).collect();
                        for _ in 0..i {
                            args.push(&g.coords);
                        }
                        let v = self.lambda.eval(&args);
                        for r in 0..self.u_dim {
                            offset[row0 + r] =
                                ((offset[row0 + r] as u64 + binom * v[r] as u64) % pp) as u32;
                        }
                    } else {
                        // Gamma_l(e_ms, g^(i-l)) is linear in the slot values
                        // of level l: expand the g-arguments over the basis.
                        let copies = i - l;
                        let arity_l = self.j - l;
                        debug_assert_eq!(ms.len() + copies, arity_l);
                        // Sum over assignments of basis indices to the g-slots.
                        let mut assign = vec![0usize; copies];
                        loop {
                            let mut coeff = binom;
                            for &b in &assign {
                                coeff = coeff * g.coords[b] as u64 % pp;
                            }
                            if coeff != 0 {
                                let mut full: Vec<usize> = ms.clone();
                                full.extend_from_slice(&assign);
                                full.sort_unstable();
                                let src_slot = self.level_slots[l - 1]
                                    .iter()
                                    .position(|s| *s == full)
                                    .expect("valid slot");
                                let col0 = self.block_offset(l, src_slot);
                                for r in 0..self.u_dim {
                                    matrix[row0 + r][col0 + r] =
                                        ((matrix[row0 + r][col0 + r] as u64 + coeff) % pp) as u32;
                                }
                            }
                            let mut t = 0;
                            loop {
                                if t == copies {
                                    // done with all assignments
                                    break;
                                }
                                assign[t] += 1;
                                if assign[t] < self.n {
                                    break;
                                }
                                assign[t] = 0;
                                t += 1;
                            }
                            if t == copies {
                                break;
                            }
                        }
                    }
                }
            }
        }
        AffineMap { matrix, offset }
    }

    pub fn apply(&self, map: &AffineMap, state: &[u32]) -> Vec<u32> {
        let pp = self.p as u64;
        map.matrix
            .iter()
            .zip(&map.offset)
            .map(|(row, &b)| {
                let mut acc = b as u64;
                for (&m, &x) in row.iter().zip(state) {
                    acc += m as u64 * x as u64 % pp;
                }
                (acc % pp) as u32
            })
            .collect()
    }

    fn compose(&self, outer: &AffineMap, inner: &AffineMap) -> AffineMap {
        let d = self.state_dim;
        let pp = self.p as u64;
        let mut matrix = vec![vec![0u32; d]; d];
        for r in 0..d {
            for c in 0..d {
                let mut acc = 0u64;
                for t in 0..d {
                    acc += outer.matrix[r][t] as u64 * inner.matrix[t][c] as u64 % pp;
                }
                matrix[r][c] = (acc % pp) as u32;
            }
        }
        let offset = self.apply(outer, &inner.offset);
        AffineMap { matrix, offset }
    }

    /// Exhaustive verification of the action law, the representation identity
    /// and the cocycle-extension structure of the shift.
    ///
    /// The shifts are affine on the p^state_dim states, so equality of the
    /// affine maps over every pair (g, g') is an exhaustive check of
    /// S_{g'} S_g = S_{g+g'} on all start points; the pair grid has
    /// p^(2N) entries.
    pub fn verify(&self) -> UniversalReport {
        let maps: Vec<AffineMap> = GroupElement::enumerate(self.p, self.n)
            .map(|g| self.shift_affine(&g))
            .collect();
        let count = maps.len();
        let mut action_pass = true;
        let mut pairs = 0usize;
        for (gi, g) in GroupElement::enumerate(self.p, self.n).enumerate() {
            for (hi, h) in GroupElement::enumerate(self.p, self.n).enumerate() {
                let sum_idx = g.add(&h).index();
                pairs += 1;
                if self.compose(&maps[hi], &maps[gi]) != maps[sum_idx] {
                    action_pass = false;
                }
            }
        }
        debug_assert_eq!(pairs, count * count);

        // v_j(S_g(0)) = Lambda_j(g, ..., g): the top block of the offset.
        let mut representation_pass = true;
        for (gi, g) in GroupElement::enumerate(self.p, self.n).enumerate() {
            let zero_image = &maps[gi].offset;
            let top = self.block_offset(self.j, 0);
            let args: Vec<&[u32]> = (0..self.j).map(|_| g.coords.as_slice()).collect();
            let expect = self.lambda.eval(&args);
            if zero_image[top..top + self.u_dim] != expect[..] {
                representation_pass = false;
            }
        }

        // The linear part must be block unitriangular: level i reads only
        // levels l <= i, with the identity on its own block; this is the
        // tower-of-cocycle-extensions structure of Y_j.
        let mut cocycle_structure_pass = true;
        for map in &maps {
            for i in 1..=self.j {
                for (slot, _) in self.level_slots[i - 1].iter().enumerate() {
                    let row0 = self.block_offset(i, slot);
                    for r in 0..self.u_dim {
                        for c in 0..self.state_dim {
                            let own = c == row0 + r;
                            // Columns at or past the start of level i's blocks
                            // belong to level >= i.
                            let same_or_later = c >= self.block_offset(i, 0);
                            let v = map.matrix[row0 + r][c];
                            if own && v != 1 {
                                cocycle_structure_pass = false;
                            }
                            // Apart from the identity, level i may only read
                            // strictly earlier levels.
                            if !own && same_or_later && v != 0 {
                                cocycle_structure_pass = false;
                            }
                        }
                    }
                }
            }
        }

        UniversalReport {
            action_pass,
            representation_pass,
            cocycle_structure_pass,
            state_dim: self.state_dim,
            state_count: (self.p as u128).pow(self.state_dim as u32),
            pairs_checked: pairs,
        }
    }
}

/// Builds the universal system for level j with a seeded random Lambda_j and
/// runs its verification.
pub fn universal_weyl(
    p: u32,
    n: usize,
    j: usize,
    u_dim: usize,
    seed: u64,
) -> Result<(UniversalSystem, UniversalReport)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let lambda = SymmetricForm::random(p, n, j, u_dim, &mut rng);
    let sys = UniversalSystem::new(p, n, j, lambda)?;
    let report = sys.verify();
    Ok((sys, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn symmetric_form_is_symmetric_and_multilinear() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = SymmetricForm::random(5, 2, 2, 1, &mut rng);
        let a = vec![2u32, 3];
        let b = vec![4u32, 1];
        let c = vec![1u32, 2];
        assert_eq!(f.eval(&[&a, &b]), f.eval(&[&b, &a]));
        // Multilinearity in the first slot.
        let apc: Vec<u32> = a.iter().zip(&c).map(|(&x, &y)| (x + y) % 5).collect();
        let lhs = f.eval(&[&apc, &b]);
        let r1 = f.eval(&[&a, &b]);
        let r2 = f.eval(&[&c, &b]);
        assert_eq!(lhs[0], (r1[0] + r2[0]) % 5);
    }

    #[test]
    fn j1_is_translation_by_lambda() {
        // j = 1: the state is a single U_1 value and S_g translates by
        // Lambda_1(g).
        let (sys, report) = universal_weyl(5, 2, 1, 1, 3).unwrap();
        assert!(report.action_pass && report.representation_pass);
        for g in GroupElement::enumerate(5, 2) {
            let map = sys.shift_affine(&g);
            assert_eq!(map.matrix, vec![vec![1u32]]);
            assert_eq!(map.offset, sys.lambda.eval(&[&g.coords]));
        }
    }

    #[test]
    fn j2_exhaustive_state_check() {
        let (sys, report) = universal_weyl(5, 2, 2, 1, 11).unwrap();
        assert!(report.action_pass);
        assert!(report.representation_pass);
        assert!(report.cocycle_structure_pass);
        // Direct state-level exhaustive confirmation of the action law.
        let maps: Vec<AffineMap> = GroupElement::enumerate(5, 2)
            .map(|g| sys.shift_affine(&g))
            .collect();
        let count = 5usize.pow(sys.state_dim as u32);
        for (gi, g) in GroupElement::enumerate(5, 2).enumerate() {
            for (hi, h) in GroupElement::enumerate(5, 2).enumerate() {
                let si = g.add(&h).index();
                for idx in 0..count {
                    let state = crate::weyl::decode(5, sys.state_dim, idx);
                    let a = sys.apply(&maps[hi], &sys.apply(&maps[gi], &state));
                    let b = sys.apply(&maps[si], &state);
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn j3_action_law() {
        let (_, report) = universal_weyl(5, 2, 3, 1, 5).unwrap();
        assert!(report.action_pass);
        assert!(report.representation_pass);
        assert!(report.cocycle_structure_pass);
    }
}
