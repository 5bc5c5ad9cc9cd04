//! Fixed-point-free involutions ("pairings") on the block-structured index
//! set `S = {(l, j)}`, their orbit partitions, and the lattice dimension of
//! the frequency constraints they impose.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::intlinalg::{integer_rank, solve_affine, AffineSolution};
use crate::lattice::KVec;

/// Default cap on `|S|` for pairing enumeration; `(14 − 1)!! = 135135`.
pub const DEFAULT_PAIRING_CAP: usize = 14;

/// The index set `S` with `sizes[l]` elements in block `l`. Elements are
/// addressed by a flat index that follows the lexicographic order on `(l, j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockIndexSet {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    block_of: Vec<usize>,
}

impl BlockIndexSet {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut block_of = Vec::new();
        let mut acc = 0;
        for (l, &s) in sizes.iter().enumerate() {
            offsets.push(acc);
            acc += s;
            block_of.extend(std::iter::repeat_n(l, s));
        }
        offsets.push(acc);
        BlockIndexSet {
            sizes,
            offsets,
            block_of,
        }
    }

    /// Block sizes `n_l (N − 1) + 1` for Picard orders `n_l`.
    pub fn for_orders(arity: usize, orders: &[usize]) -> Self {
        Self::new(orders.iter().map(|&n| n * (arity - 1) + 1).collect())
    }

    pub fn blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_of(&self, m: usize) -> usize {
        self.block_of[m]
    }

    /// Zero-based `(l, j)` of a flat index.
    pub fn element(&self, m: usize) -> (usize, usize) {
        let l = self.block_of[m];
        (l, m - self.offsets[l])
    }

    pub fn flat(&self, l: usize, j: usize) -> usize {
        debug_assert!(j < self.sizes[l]);
        self.offsets[l] + j
    }

    pub fn block_range(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }
}

/// A fixed-point-free involution on the flat indices of a [`BlockIndexSet`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pairing {
    partner: Vec<usize>,
}

impl Pairing {
    pub fn from_partners(partner: Vec<usize>) -> Result<Self> {
        for (m, &p) in partner.iter().enumerate() {
            if p >= partner.len() || p == m || partner[p] != m {
                return Err(Error::invalid(format!(
                    "not a fixed-point-free involution at index {m}"
                )));
            }
        }
        Ok(Pairing { partner })
    }

    /// Builds a pairing from explicit 0-based `((l, j), (l', j'))` pairs.
    pub fn from_pairs(
        set: &BlockIndexSet,
        pairs: &[((usize, usize), (usize, usize))],
    ) -> Result<Self> {
        let mut partner = vec![usize::MAX; set.len()];
        for &((l1, j1), (l2, j2)) in pairs {
            let a = set.flat(l1, j1);
            let b = set.flat(l2, j2);
            partner[a] = b;
            partner[b] = a;
        }
        Self::from_partners(partner)
    }

    pub fn partner(&self, m: usize) -> usize {
        self.partner[m]
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    /// `S_σ = {m : m < σ(m)}` in increasing order.
    pub fn lower_elements(&self) -> Vec<usize> {
        (0..self.partner.len())
            .filter(|&m| m < self.partner[m])
            .collect()
    }

    /// Sorted 1-based `((l, j), (l', j'))` pairs with the first entry smaller.
    pub fn pairs(&self, set: &BlockIndexSet) -> Vec<[(usize, usize); 2]> {
        self.lower_elements()
            .into_iter()
            .map(|m| {
                let (l1, j1) = set.element(m);
                let (l2, j2) = set.element(self.partner[m]);
                [(l1 + 1, j1 + 1), (l2 + 1, j2 + 1)]
            })
            .collect()
    }
}

pub fn enumerate_pairings(set: &BlockIndexSet) -> Result<Vec<Pairing>> {
    enumerate_pairings_capped(set, DEFAULT_PAIRING_CAP)
}

/// All fixed-point-free involutions, matching the smallest unmatched element
/// first. Empty when `|S|` is odd.
pub fn enumerate_pairings_capped(set: &BlockIndexSet, cap: usize) -> Result<Vec<Pairing>> {
    let n = set.len();
    if n % 2 == 1 {
        return Ok(Vec::new());
    }
    if n > cap {
        return Err(Error::budget(
            "pairing enumeration |S|",
            n as u128,
            cap as u128,
        ));
    }
    let mut out = Vec::new();
    let mut partner = vec![usize::MAX; n];
    match_smallest(&mut partner, &mut out);
    Ok(out)
}

fn match_smallest(partner: &mut Vec<usize>, out: &mut Vec<Pairing>) {
    let Some(first) = partner.iter().position(|&p| p == usize::MAX) else {
        out.push(Pairing {
            partner: partner.clone(),
        });
        return;
    };
    for other in (first + 1)..partner.len() {
        if partner[other] != usize::MAX {
            continue;
        }
        partner[first] = other;
        partner[other] = first;
        match_smallest(partner, out);
        partner[first] = usize::MAX;
        partner[other] = usize::MAX;
    }
}

/// Number of fixed-point-free involutions on `n` points, `(n − 1)!!`.
pub fn pairing_count(n: usize) -> u128 {
    if n % 2 == 1 {
        return 0;
    }
    (1..n).step_by(2).map(|k| k as u128).product()
}

/// Partition of the blocks `0..R` into orbits of a pairing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitPartition {
    /// Each orbit sorted; orbits sorted by their smallest block.
    pub orbits: Vec<Vec<usize>>,
}

impl OrbitPartition {
    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn is_partition_of(&self, blocks: usize) -> bool {
        let mut seen = vec![false; blocks];
        for o in &self.orbits {
            for &l in o {
                if l >= blocks || seen[l] {
                    return false;
                }
                seen[l] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut cur = x;
        while self.0[cur] != root {
            let next = self.0[cur];
            self.0[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Orbits of the block relation `l ~ block(σ(l, j))`.
pub fn orbit_partition(sigma: &Pairing, set: &BlockIndexSet) -> OrbitPartition {
    let r = set.blocks();
    let mut uf = UnionFind::new(r);
    for m in 0..sigma.len() {
        uf.union(set.block_of(m), set.block_of(sigma.partner(m)));
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); r];
    for l in 0..r {
        let root = uf.find(l);
        by_root[root].push(l);
    }
    OrbitPartition {
        orbits: by_root.into_iter().filter(|o| !o.is_empty()).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaStatus {
    Nonempty,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaGeometry {
    pub status: SigmaStatus,
    /// Number of free `ℤ^d` parameters of the solution set (0 when empty).
    pub s_sigma: usize,
    /// Exact rank of the block constraint system.
    pub rank_witness: usize,
    pub orbits: OrbitPartition,
}

/// The block constraints of a pairing, one unknown per element of `S_σ`:
/// for every block `l`, `Σ_j k_{(l,j)} = L ξ_l` with `k_m = −k_{σ(m)}`.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub matrix: Vec<Vec<i64>>,
    pub rhs: Vec<KVec>,
    /// For every element of `S`: (unknown index, sign) so that `k_m = sign · x`.
    pub element_var: Vec<(usize, i64)>,
    pub n_vars: usize,
}

impl ConstraintSystem {
    pub fn build(sigma: &Pairing, set: &BlockIndexSet, freqs: &[KVec]) -> Self {
        assert_eq!(freqs.len(), set.blocks(), "one frequency per block");
        let lower = sigma.lower_elements();
        let mut var_of = vec![usize::MAX; set.len()];
        for (v, &m) in lower.iter().enumerate() {
            var_of[m] = v;
        }
        let mut element_var = Vec::with_capacity(set.len());
        let mut matrix = vec![vec![0i64; lower.len()]; set.blocks()];
        for m in 0..set.len() {
            let (v, sign) = if var_of[m] != usize::MAX {
                (var_of[m], 1)
            } else {
                (var_of[sigma.partner(m)], -1)
            };
            element_var.push((v, sign));
            matrix[set.block_of(m)][v] += sign;
        }
        ConstraintSystem {
            matrix,
            rhs: freqs.to_vec(),
            element_var,
            n_vars: lower.len(),
        }
    }

    pub fn solve(&self) -> Option<AffineSolution> {
        solve_affine(&self.matrix, &self.rhs)
    }

    /// Expands unknowns back to one lattice vector per element of `S`.
    pub fn expand(&self, vars: &[KVec]) -> Vec<KVec> {
        self.element_var
            .iter()
            .map(|&(v, s)| if s > 0 { vars[v] } else { -vars[v] })
            .collect()
    }
}

/// Dimension of the lattice solution set `Σ_σ` for frequencies `ξ_l = freqs[l] / L`
/// (the integer vectors `L ξ_l` are passed). The closed formula
/// `½|S| + |O_σ| − R` is cross-checked against the exact rank.
pub fn sigma_dimension(
    sigma: &Pairing,
    set: &BlockIndexSet,
    freqs: &[KVec],
) -> Result<SigmaGeometry> {
    if freqs.iter().any(KVec::is_zero) {
        return Err(Error::ZeroFrequency);
    }
    if sigma.len() != set.len() {
        return Err(Error::invalid("pairing and index set sizes differ"));
    }
    let orbits = orbit_partition(sigma, set);
    let zero_sum = orbits
        .orbits
        .iter()
        .all(|o| o.iter().map(|&l| freqs[l]).sum::<KVec>().is_zero());
    let system = ConstraintSystem::build(sigma, set, freqs);
    let rank = integer_rank(&system.matrix)?;
    let consistent = system.solve().is_some();
    if consistent != zero_sum {
        return Err(Error::Inconsistent(format!(
            "orbit zero-sum test says {zero_sum}, exact solver says {consistent}"
        )));
    }
    if !zero_sum {
        return Ok(SigmaGeometry {
            status: SigmaStatus::Empty,
            s_sigma: 0,
            rank_witness: rank,
            orbits,
        });
    }
    let formula = set.len() / 2 + orbits.len() - set.blocks();
    let from_rank = system.n_vars - rank;
    if formula != from_rank {
        return Err(Error::Inconsistent(format!(
            "closed-form dimension {formula} differs from rank complement {from_rank}"
        )));
    }
    Ok(SigmaGeometry {
        status: SigmaStatus::Nonempty,
        s_sigma: formula,
        rank_witness: rank,
        orbits,
    })
}

/// All set partitions of `0..R` into zero-sum blocks of size ≥ 2 having the
/// largest possible number of blocks. Empty when no such partition exists.
pub fn maximal_zero_sum_partitions(freqs: &[KVec]) -> Result<Vec<Vec<Vec<usize>>>> {
    if freqs.iter().any(KVec::is_zero) {
        return Err(Error::ZeroFrequency);
    }
    let mut all = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    grow_partitions(freqs, 0, &mut current, &mut all);
    let best = all.iter().map(Vec::len).max().unwrap_or(0);
    Ok(all.into_iter().filter(|p| p.len() == best).collect())
}

fn grow_partitions(
    freqs: &[KVec],
    next: usize,
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    if next == freqs.len() {
        let ok = current
            .iter()
            .all(|b| b.len() >= 2 && b.iter().map(|&l| freqs[l]).sum::<KVec>().is_zero());
        if ok {
            out.push(current.clone());
        }
        return;
    }
    for b in 0..current.len() {
        current[b].push(next);
        grow_partitions(freqs, next + 1, current, out);
        current[b].pop();
    }
    current.push(vec![next]);
    grow_partitions(freqs, next + 1, current, out);
    current.pop();
}

/// Isserlis sum `Σ_σ Π_{m<σ(m)} cov(m, σ(m))` over pairings of `n` indices.
pub fn wick_moment(n: usize, cov: impl Fn(usize, usize) -> Complex64) -> Result<Complex64> {
    if n % 2 == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let set = BlockIndexSet::new(vec![1; n]);
    let total = enumerate_pairings(&set)?
        .iter()
        .map(|s| {
            s.lower_elements()
                .into_iter()
                .map(|m| cov(m, s.partner(m)))
                .product::<Complex64>()
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_pairings(n: usize) -> usize {
        // Every permutation of 0..n that is an involution without fixed points.
        fn perms(rest: &mut Vec<usize>, cur: &mut Vec<usize>, count: &mut usize) {
            if rest.is_empty() {
                let ok = cur.iter().enumerate().all(|(i, &p)| p != i && cur[p] == i);
                if ok {
                    *count += 1;
                }
                return;
            }
            for i in 0..rest.len() {
                let v = rest.remove(i);
                cur.push(v);
                perms(rest, cur, count);
                cur.pop();
                rest.insert(i, v);
            }
        }
        let mut count = 0;
        perms(&mut (0..n).collect(), &mut Vec::new(), &mut count);
        count
    }

    #[test]
    fn pairing_counts() {
        assert_eq!(
            enumerate_pairings(&BlockIndexSet::new(vec![4]))
                .unwrap()
                .len(),
            3
        );
        assert!(enumerate_pairings(&BlockIndexSet::new(vec![3]))
            .unwrap()
            .is_empty());
        assert_eq!(
            enumerate_pairings(&BlockIndexSet::new(vec![3, 3]))
                .unwrap()
                .len(),
            15
        );
        assert_eq!(brute_force_pairings(6), 15);
        for n in [2, 4, 6, 8] {
            let got = enumerate_pairings(&BlockIndexSet::new(vec![n]))
                .unwrap()
                .len();
            assert_eq!(got as u128, pairing_count(n));
        }
        assert!(matches!(
            enumerate_pairings(&BlockIndexSet::new(vec![8, 8])),
            Err(Error::Budget { requested: 16, .. })
        ));
    }

    #[test]
    fn orbit_examples() {
        let set = BlockIndexSet::new(vec![1, 1]);
        let s = Pairing::from_pairs(&set, &[((0, 0), (1, 0))]).unwrap();
        assert_eq!(orbit_partition(&s, &set).orbits, vec![vec![0, 1]]);

        let set = BlockIndexSet::new(vec![2, 2]);
        let s = Pairing::from_pairs(&set, &[((0, 0), (0, 1)), ((1, 0), (1, 1))]).unwrap();
        assert_eq!(orbit_partition(&s, &set).orbits, vec![vec![0], vec![1]]);

        let set = BlockIndexSet::new(vec![2, 1, 1]);
        let s = Pairing::from_pairs(&set, &[((0, 0), (1, 0)), ((0, 1), (2, 0))]).unwrap();
        assert_eq!(orbit_partition(&s, &set).orbits, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn sigma_examples() {
        let k = KVec::d1(3);
        let set = BlockIndexSet::new(vec![1, 1]);
        let s = Pairing::from_pairs(&set, &[((0, 0), (1, 0))]).unwrap();
        let g = sigma_dimension(&s, &set, &[k, -k]).unwrap();
        assert_eq!((g.status, g.s_sigma), (SigmaStatus::Nonempty, 0));
        let g = sigma_dimension(&s, &set, &[k, KVec::d1(2)]).unwrap();
        assert_eq!(g.status, SigmaStatus::Empty);

        // Two blocks of size 3, all cross pairs.
        let set = BlockIndexSet::new(vec![3, 3]);
        let s = Pairing::from_pairs(
            &set,
            &[((0, 0), (1, 0)), ((0, 1), (1, 1)), ((0, 2), (1, 2))],
        )
        .unwrap();
        let g = sigma_dimension(&s, &set, &[k, -k]).unwrap();
        assert_eq!(
            (g.status, g.s_sigma, g.rank_witness),
            (SigmaStatus::Nonempty, 2, 1)
        );
        assert!(matches!(
            sigma_dimension(&s, &set, &[k, KVec::ZERO]),
            Err(Error::ZeroFrequency)
        ));
    }

    #[test]
    fn zero_sum_partitions() {
        let (x, y) = (KVec::d1(2), KVec::d1(5));
        assert_eq!(
            maximal_zero_sum_partitions(&[x, -x]).unwrap(),
            vec![vec![vec![0, 1]]]
        );
        assert!(maximal_zero_sum_partitions(&[x, KVec::d1(4)])
            .unwrap()
            .is_empty());
        assert_eq!(
            maximal_zero_sum_partitions(&[x, -x, y, -y]).unwrap(),
            vec![vec![vec![0, 1], vec![2, 3]]]
        );
        // x, x, -x, -x admits two maximal pairings.
        assert_eq!(
            maximal_zero_sum_partitions(&[x, x, -x, -x]).unwrap().len(),
            2
        );
    }

    #[test]
    fn wick_examples() {
        let delta = |ks: Vec<i64>| {
            move |a: usize, b: usize| Complex64::new(if ks[a] == -ks[b] { 1.0 } else { 0.0 }, 0.0)
        };
        assert_eq!(wick_moment(2, delta(vec![3, -3])).unwrap().re, 1.0);
        assert_eq!(wick_moment(2, delta(vec![3, 3])).unwrap().re, 0.0);
        assert_eq!(wick_moment(4, delta(vec![3, -3, 3, -3])).unwrap().re, 2.0);
        assert_eq!(wick_moment(3, delta(vec![3, -3, 3])).unwrap().re, 0.0);
    }
}
