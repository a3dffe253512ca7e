//! Finite Weyl systems: towers of polynomial cocycle extensions over
//! G_N = F_p^N, with validators and the Heisenberg-analogue example.

pub mod universal;

use crate::error::{Error, Result};
use crate::fp::{validate_prime, GroupElement};
use serde::{Deserialize, Serialize};

/// A structure group F_p^m, identified by its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureGroup {
    pub dim: usize,
}

/// One monomial of a cocycle evaluator: coeff * prod g[i] * prod x[b],
/// where `x_vars` index the flat coordinates of the base (prefix) state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CocycleTerm {
    pub coeff: u32,
    pub g_vars: Vec<usize>,
    pub x_vars: Vec<usize>,
}

/// A polynomial cocycle rho_j(g, x) into F_p^m, stored as a sparse
/// polynomial in the acting coordinates and the base-state coordinates.
/// A full lookup table (the canonical form for equality tests) is available
/// via [`WeylTower::cocycle_table`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyCocycle {
    /// 1-based level of the extension this cocycle feeds.
    pub level: usize,
    pub target_dim: usize,
    /// One term list per output coordinate.
    pub terms: Vec<Vec<CocycleTerm>>,
}

impl PolyCocycle {
    pub fn zero(level: usize, target_dim: usize) -> Self {
        PolyCocycle {
            level,
            target_dim,
            terms: vec![Vec::new(); target_dim],
        }
    }

    /// Evaluates rho(g, x) into `out`.
    pub fn eval_into(&self, p: u32, g: &[u32], x: &[u32], out: &mut [u32]) {
        let pp = p as u64;
        for (r, terms) in self.terms.iter().enumerate() {
            let mut acc = 0u64;
            for t in terms {
                let mut prod = t.coeff as u64 % pp;
                for &i in &t.g_vars {
                    prod = prod * g[i] as u64 % pp;
                }
                for &b in &t.x_vars {
                    prod = prod * x[b] as u64 % pp;
                }
                acc += prod;
            }
            out[r] = (acc % pp) as u32;
        }
    }
}

/// Report from an exhaustive validator; `witness` carries a counterexample.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub pass: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

/// A tower U_1 x_{rho_2} U_2 x ... x_{rho_k} U_k with the shift action of
/// G_N.  The level-1 "cocycle" is a homomorphism G_N -> U_1 (no x-terms).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylTower {
    pub p: u32,
    pub acting_dim: usize,
    pub levels: Vec<(StructureGroup, PolyCocycle)>,
}

impl WeylTower {
    pub fn new(p: u32, acting_dim: usize, levels: Vec<(StructureGroup, PolyCocycle)>) -> Result<Self> {
        validate_prime(p)?;
        let mut prefix = 0usize;
        for (j, (grp, coc)) in levels.iter().enumerate() {
            if coc.target_dim != grp.dim || coc.terms.len() != grp.dim {
                return Err(Error::BadSystemDescription(format!(
                    "level {}: cocycle target dimension does not match the structure group",
                    j + 1
                )));
            }
            if coc.level != j + 1 {
                return Err(Error::BadSystemDescription(format!(
                    "level {}: cocycle is labeled for level {}",
                    j + 1,
                    coc.level
                )));
            }
            for terms in &coc.terms {
                for t in terms {
                    if t.g_vars.iter().any(|&i| i >= acting_dim) {
                        return Err(Error::BadSystemDescription(format!(
                            "level {}: acting-coordinate index out of range",
                            j + 1
                        )));
                    }
                    if t.x_vars.iter().any(|&b| b >= prefix) {
                        return Err(Error::BadSystemDescription(format!(
                            "level {}: base-coordinate index out of range",
                            j + 1
                        )));
                    }
                }
            }
            prefix += grp.dim;
        }
        Ok(WeylTower {
            p,
            acting_dim,
            levels,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(|(g, _)| g.dim).collect()
    }

    /// Number of flat state coordinates before (1-based) level j.
    pub fn prefix_dim(&self, j: usize) -> usize {
        self.levels[..j - 1].iter().map(|(g, _)| g.dim).sum()
    }

    pub fn state_dim(&self) -> usize {
        self.levels.iter().map(|(g, _)| g.dim).sum()
    }

    pub fn state_count(&self) -> usize {
        (self.p as usize).pow(self.state_dim() as u32)
    }

    pub fn group_count(&self) -> usize {
        (self.p as usize).pow(self.acting_dim as u32)
    }

    pub fn state_from_index(&self, mut idx: usize) -> Vec<u32> {
        let mut s = vec![0u32; self.state_dim()];
        for slot in s.iter_mut() {
            *slot = (idx % self.p as usize) as u32;
            idx /= self.p as usize;
        }
        s
    }

    pub fn state_index(&self, s: &[u32]) -> usize {
        let mut idx = 0usize;
        for &c in s.iter().rev() {
            idx = idx * self.p as usize + c as usize;
        }
        idx
    }

    /// Applies the tower shift T_g level by level:
    /// (T_g s)_j = s_j + rho_j(g, s_{<j}).
    pub fn shift_into(&self, g: &GroupElement, s: &[u32], out: &mut [u32]) {
        debug_assert_eq!(g.coords.len(), self.acting_dim);
        debug_assert_eq!(s.len(), self.state_dim());
        let mut offset = 0usize;
        let mut buf = [0u32; 64];
        for (grp, coc) in &self.levels {
            let m = grp.dim;
            coc.eval_into(self.p, &g.coords, &s[..offset], &mut buf[..m]);
            for r in 0..m {
                out[offset + r] = (s[offset + r] + buf[r]) % self.p;
            }
            offset += m;
        }
    }

    pub fn shift(&self, g: &GroupElement, s: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; s.len()];
        self.shift_into(g, s, &mut out);
        out
    }

    /// Shift of a prefix state (levels < j) under the sub-tower.
    fn shift_prefix(&self, upto: usize, g: &GroupElement, s: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; s.len()];
        let mut offset = 0usize;
        let mut buf = [0u32; 64];
        for (grp, coc) in &self.levels[..upto] {
            let m = grp.dim;
            coc.eval_into(self.p, &g.coords, &s[..offset], &mut buf[..m]);
            for r in 0..m {
                out[offset + r] = (s[offset + r] + buf[r]) % self.p;
            }
            offset += m;
        }
        out
    }

    /// Permutation table of T_g on state indices.
    pub fn shift_permutation(&self, g: &GroupElement) -> Vec<usize> {
        let count = self.state_count();
        let mut perm = vec![0usize; count];
        let mut out = vec![0u32; self.state_dim()];
        for idx in 0..count {
            let s = self.state_from_index(idx);
            self.shift_into(g, &s, &mut out);
            perm[idx] = self.state_index(&out);
        }
        perm
    }

    /// Full lookup table of rho_j over (g, base state): the canonical form of
    /// a cocycle for equality tests.  Indexed [g_idx][x_idx] -> flat coords.
    pub fn cocycle_table(&self, level: usize) -> Vec<Vec<u32>> {
        let (grp, coc) = &self.levels[level - 1];
        let base_dim = self.prefix_dim(level);
        let base_count = (self.p as usize).pow(base_dim as u32);
        let mut table = Vec::with_capacity(self.group_count() * base_count);
        let mut out = vec![0u32; grp.dim];
        for g in GroupElement::enumerate(self.p, self.acting_dim) {
            for x_idx in 0..base_count {
                let x = decode(self.p, base_dim, x_idx);
                coc.eval_into(self.p, &g.coords, &x, &mut out);
                table.push(out.clone());
            }
        }
        table
    }

    /// Exhaustively checks the cocycle equation
    /// rho(g+g', x) = rho(g, T_{g'} x) + rho(g', x) at the given level.
    pub fn verify_cocycle(&self, level: usize) -> CheckReport {
        let (grp, coc) = &self.levels[level - 1];
        let base_dim = self.prefix_dim(level);
        let base_count = (self.p as usize).pow(base_dim as u32);
        let m = grp.dim;
        let mut checked = 0usize;
        let mut lhs = vec![0u32; m];
        let mut r1 = vec![0u32; m];
        let mut r2 = vec![0u32; m];
        for g in GroupElement::enumerate(self.p, self.acting_dim) {
            for gp in GroupElement::enumerate(self.p, self.acting_dim) {
                let sum = g.add(&gp);
                for x_idx in 0..base_count {
                    let x = decode(self.p, base_dim, x_idx);
                    let tx = self.shift_prefix(level - 1, &gp, &x);
                    coc.eval_into(self.p, &sum.coords, &x, &mut lhs);
                    coc.eval_into(self.p, &g.coords, &tx, &mut r1);
                    coc.eval_into(self.p, &gp.coords, &x, &mut r2);
                    checked += 1;
                    let ok = (0..m).all(|r| lhs[r] == (r1[r] + r2[r]) % self.p);
                    if !ok {
                        return CheckReport {
                            pass: false,
                            checked,
                            witness: Some(format!(
                                "cocycle equation fails at g={:?}, g'={:?}, x={:?}",
                                g.coords, gp.coords, x
                            )),
                        };
                    }
                }
            }
        }
        CheckReport {
            pass: true,
            checked,
            witness: None,
        }
    }

    /// Checks that x -> rho(g, x) is a polynomial of degree < d for every g:
    /// all d-fold differences along basis directions of the base state space
    /// vanish.  (Products of differences in arbitrary directions expand into
    /// products of at least as many basis differences, so basis directions
    /// suffice.)
    pub fn verify_poly_degree(&self, level: usize, d: usize) -> CheckReport {
        let (grp, coc) = &self.levels[level - 1];
        let base_dim = self.prefix_dim(level);
        let base_count = (self.p as usize).pow(base_dim as u32);
        let m = grp.dim;
        let dirs = multisets(base_dim.max(1), d);
        let mut checked = 0usize;
        let mut buf = vec![0u32; m];
        for g in GroupElement::enumerate(self.p, self.acting_dim) {
            for dir in &dirs {
                for x_idx in 0..base_count {
                    let x = decode(self.p, base_dim, x_idx);
                    // Delta_{e_{dir_1}} ... Delta_{e_{dir_d}} rho(g, .)(x)
                    // via inclusion-exclusion over subsets of the directions.
                    let mut acc = vec![0u32; m];
                    for mask in 0..(1usize << d) {
                        let mut y = x.clone();
                        if base_dim > 0 {
                            for (bit, &b) in dir.iter().enumerate() {
                                if mask >> bit & 1 == 1 {
                                    y[b] = (y[b] + 1) % self.p;
                                }
                            }
                        }
                        coc.eval_into(self.p, &g.coords, &y, &mut buf);
                        let sign_neg = (d - mask.count_ones() as usize) % 2 == 1;
                        for r in 0..m {
                            let v = if sign_neg {
                                (self.p - buf[r]) % self.p
                            } else {
                                buf[r]
                            };
                            acc[r] = (acc[r] + v) % self.p;
                        }
                    }
                    checked += 1;
                    if acc.iter().any(|&v| v != 0) {
                        return CheckReport {
                            pass: false,
                            checked,
                            witness: Some(format!(
                                "degree check fails at g={:?}, directions={:?}, x={:?}",
                                g.coords, dir, x
                            )),
                        };
                    }
                }
            }
        }
        CheckReport {
            pass: true,
            checked,
            witness: None,
        }
    }

    /// Orbit id per state under the generators T_{e_1}, ..., T_{e_N}.
    pub fn orbit_partition(&self) -> Vec<usize> {
        let count = self.state_count();
        let perms: Vec<Vec<usize>> = (0..self.acting_dim)
            .map(|i| self.shift_permutation(&GroupElement::basis(self.p, self.acting_dim, i)))
            .collect();
        let mut orbit = vec![usize::MAX; count];
        let mut next = 0usize;
        let mut stack = Vec::new();
        for start in 0..count {
            if orbit[start] != usize::MAX {
                continue;
            }
            orbit[start] = next;
            stack.push(start);
            while let Some(s) = stack.pop() {
                for perm in &perms {
                    let t = perm[s];
                    if orbit[t] == usize::MAX {
                        orbit[t] = next;
                        stack.push(t);
                    }
                }
            }
            next += 1;
        }
        orbit
    }

    /// A finite model is ergodic when the only shift-invariant functions are
    /// constants, i.e. the shift generators act with a single orbit.
    pub fn is_ergodic(&self) -> bool {
        let orbit = self.orbit_partition();
        orbit.iter().all(|&o| o == 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tower serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tower: WeylTower = serde_json::from_str(text)
            .map_err(|e| Error::BadSystemDescription(e.to_string()))?;
        WeylTower::new(tower.p, tower.acting_dim, tower.levels)
    }
}

pub(crate) fn decode(p: u32, dim: usize, mut idx: usize) -> Vec<u32> {
    let mut s = vec![0u32; dim];
    for slot in s.iter_mut() {
        *slot = (idx % p as usize) as u32;
        idx /= p as usize;
    }
    s
}

/// All multisets of size d over {0, ..., n-1}, as sorted index vectors.
pub(crate) fn multisets(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, d: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, d, i, cur, out);
            cur.pop();
        }
    }
    rec(n, d, 0, &mut cur, &mut out);
    out
}

/// The rotation system on U_1 = F_p^m with rho_1(g) = (g_1, ..., g_m):
/// a 1-level Weyl tower whose level-1 homomorphism is surjective when m <= N.
pub fn kronecker_example(p: u32, acting_dim: usize, m: usize) -> Result<WeylTower> {
    if m > acting_dim {
        return Err(Error::BadSystemDescription(format!(
            "Kronecker structure dimension {m} exceeds acting dimension {acting_dim}"
        )));
    }
    let terms = (0..m)
        .map(|r| {
            vec![CocycleTerm {
                coeff: 1,
                g_vars: vec![r],
                x_vars: vec![],
            }]
        })
        .collect();
    WeylTower::new(
        p,
        acting_dim,
        vec![(
            StructureGroup { dim: m },
            PolyCocycle {
                level: 1,
                target_dim: m,
                terms,
            },
        )],
    )
}

/// The 2-step analogue of the Heisenberg nilsystem: U_1 = F_p^N with the
/// translation action, extended by U_2 = F_p via
/// rho_2(g, x) = sum_{n<N-1} g_n x_{n+1} + x_n g_{n+1} + g_n g_{n+1},
/// the paper's infinite sum truncated with zero boundary.
pub fn heisenberg_example(p: u32, acting_dim: usize) -> Result<WeylTower> {
    if acting_dim < 2 {
        return Err(Error::HeisenbergTooSmall(acting_dim as u32));
    }
    let n = acting_dim;
    let level1_terms = (0..n)
        .map(|r| {
            vec![CocycleTerm {
                coeff: 1,
                g_vars: vec![r],
                x_vars: vec![],
            }]
        })
        .collect();
    let mut rho2 = Vec::new();
    for i in 0..n - 1 {
        rho2.push(CocycleTerm {
            coeff: 1,
            g_vars: vec![i],
            x_vars: vec![i + 1],
        });
        rho2.push(CocycleTerm {
            coeff: 1,
            g_vars: vec![i + 1],
            x_vars: vec![i],
        });
        rho2.push(CocycleTerm {
            coeff: 1,
            g_vars: vec![i, i + 1],
            x_vars: vec![],
        });
    }
    WeylTower::new(
        p,
        acting_dim,
        vec![
            (
                StructureGroup { dim: n },
                PolyCocycle {
                    level: 1,
                    target_dim: n,
                    terms: level1_terms,
                },
            ),
            (
                StructureGroup { dim: 1 },
                PolyCocycle {
                    level: 2,
                    target_dim: 1,
                    terms: vec![rho2],
                },
            ),
        ],
    )
}
