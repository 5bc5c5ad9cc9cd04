//! N-ary trees indexing the terms of the Picard expansion, their Polish
//! (prefix) bit codes, and the leaf bookkeeping used when labelling leaves
//! with lattice vectors.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default cap on the number of trees a single enumeration may return.
pub const DEFAULT_TREE_CAP: u64 = 1_000_000;

/// A rooted tree in which every node has either no children or exactly
/// `arity` ordered children.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NTree {
    arity: usize,
    children: Vec<NTree>,
}

impl NTree {
    /// The trivial tree `()`.
    pub fn leaf(arity: usize) -> Self {
        NTree {
            arity,
            children: Vec::new(),
        }
    }

    pub fn node(children: Vec<NTree>) -> Result<Self> {
        let arity = children.len();
        check_arity(arity)?;
        if children.iter().any(|c| c.arity != arity) {
            return Err(Error::invalid("children of an N-tree must share its arity"));
        }
        Ok(NTree { arity, children })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn children(&self) -> &[NTree] {
        &self.children
    }

    pub fn is_trivial(&self) -> bool {
        self.children.is_empty()
    }

    /// Number of internal (N-child) nodes.
    pub fn nodes(&self) -> usize {
        if self.is_trivial() {
            0
        } else {
            1 + self.children.iter().map(NTree::nodes).sum::<usize>()
        }
    }

    pub fn leaves(&self) -> usize {
        if self.is_trivial() {
            1
        } else {
            self.children.iter().map(NTree::leaves).sum()
        }
    }

    pub fn encode(&self) -> PolishCode {
        let mut bits = Vec::with_capacity(self.nodes() * self.arity + 1);
        self.push_bits(&mut bits);
        PolishCode {
            bits,
            arity: self.arity,
        }
    }

    fn push_bits(&self, bits: &mut Vec<u8>) {
        if self.is_trivial() {
            bits.push(0);
        } else {
            bits.push(1);
            for c in &self.children {
                c.push_bits(bits);
            }
        }
    }

    /// Leaf windows of the children of a non-trivial tree; see [`LeafRangeTable`].
    pub fn leaf_ranges(&self) -> LeafRangeTable {
        if self.is_trivial() {
            return LeafRangeTable {
                offsets: vec![0, 1],
                windows: vec![1..=1],
            };
        }
        let n1 = self.arity - 1;
        let mut offsets = Vec::with_capacity(self.arity + 1);
        let mut acc = 0;
        offsets.push(0);
        for c in &self.children {
            acc += n1 * c.nodes() + 1;
            offsets.push(acc);
        }
        let windows = offsets.windows(2).map(|w| (w[0] + 1)..=w[1]).collect();
        LeafRangeTable { offsets, windows }
    }
}

impl fmt::Debug for NTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.children.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c:?}")?;
        }
        write!(f, ")")
    }
}

/// Polish (prefix) encoding of an N-tree: `1` for an internal node, `0` for a leaf.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolishCode {
    bits: Vec<u8>,
    arity: usize,
}

impl PolishCode {
    /// Builds a code without validating it; [`PolishCode::validate`] or
    /// [`PolishCode::decode`] check membership.
    pub fn new(bits: Vec<u8>, arity: usize) -> Self {
        PolishCode { bits, arity }
    }

    pub fn parse(s: &str, arity: usize) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::invalid(format!(
                    "unexpected character {other:?} in Polish code"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(PolishCode { bits, arity })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Checks the membership predicate: length `nN+1` for `n` ones and
    /// `k < b_k N + 1` for every proper prefix of length `k`.
    /// On failure the error carries the first offending 1-based position.
    pub fn validate(&self) -> Result<usize> {
        check_arity(self.arity)?;
        if self.bits.is_empty() {
            return Err(Error::MalformedCode { index: 0 });
        }
        if let Some(pos) = self.bits.iter().position(|&b| b > 1) {
            return Err(Error::MalformedCode { index: pos + 1 });
        }
        let len = self.bits.len();
        let mut ones = 0;
        for (i, &b) in self.bits.iter().enumerate() {
            let k = i + 1;
            ones += b as usize;
            if k < len && k > ones * self.arity {
                return Err(Error::MalformedCode { index: k });
            }
        }
        if len != ones * self.arity + 1 {
            return Err(Error::MalformedCode { index: len });
        }
        Ok(ones)
    }

    pub fn decode(&self) -> Result<NTree> {
        self.validate()?;
        Ok(decode_valid(&self.bits, self.arity))
    }
}

impl fmt::Display for PolishCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PolishCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolishCode({self}, N={})", self.arity)
    }
}

/// Splits `1 A_1 … A_N` using the running sums `b_k` and the cut points
/// `k_m = min{k : k ≥ (b_k − 1)N + m + 1}`.
fn decode_valid(bits: &[u8], arity: usize) -> NTree {
    if bits[0] == 0 {
        debug_assert_eq!(bits.len(), 1);
        return NTree::leaf(arity);
    }
    let mut children = Vec::with_capacity(arity);
    let mut prefix = vec![0usize; bits.len() + 1];
    for (i, &b) in bits.iter().enumerate() {
        prefix[i + 1] = prefix[i] + b as usize;
    }
    let mut prev_cut = 1;
    let mut k = 1;
    for m in 1..=arity {
        while k < (prefix[k] - 1) * arity + m + 1 {
            k += 1;
        }
        children.push(decode_valid(&bits[prev_cut..k], arity));
        prev_cut = k;
    }
    debug_assert_eq!(prev_cut, bits.len());
    NTree { arity, children }
}

/// Per-child leaf windows for a tree `A = (A_1, …, A_N)`.
///
/// `offsets[j]` is the number of leaves in children before `j` (so
/// `offsets[N]` is the total leaf count); `windows[j]` is the 1-based
/// inclusive range of leaves owned by child `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafRangeTable {
    pub offsets: Vec<usize>,
    pub windows: Vec<RangeInclusive<usize>>,
}

impl LeafRangeTable {
    /// Zero-based slice bounds of window `j`.
    pub fn slice(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }
}

fn check_arity(arity: usize) -> Result<()> {
    if arity < 2 {
        Err(Error::InvalidArity(arity))
    } else {
        Ok(())
    }
}

/// Exact `|A_n|` by dynamic programming over compositions `n_1 + … + n_N = n − 1`.
pub fn tree_count(arity: usize, n: usize) -> Result<BigUint> {
    check_arity(arity)?;
    let mut counts: Vec<BigUint> = vec![BigUint::one()];
    for m in 1..=n {
        // N-fold convolution of counts[0..m] evaluated at m - 1.
        let mut conv: Vec<BigUint> = vec![BigUint::zero(); m];
        conv[0] = BigUint::one();
        for _ in 0..arity {
            let mut next = vec![BigUint::zero(); m];
            for (i, ci) in conv.iter().enumerate() {
                if ci.is_zero() {
                    continue;
                }
                for (j, cj) in counts.iter().enumerate().take(m - i) {
                    next[i + j] += ci * cj;
                }
            }
            conv = next;
        }
        counts.push(conv.pop().unwrap_or_default());
    }
    Ok(counts.swap_remove(n))
}

/// Result of [`count_trees`]: the exact count and the growth bound it is checked against.
#[derive(Clone, Debug)]
pub struct TreeCount {
    pub arity: usize,
    pub nodes: usize,
    pub count: BigUint,
    /// `ln` of `4^{n-1}` (N = 2) or `(3eN)^{n-1}` (N ≥ 3).
    pub log_bound: f64,
    pub within_bound: bool,
}

pub fn count_trees(arity: usize, n: usize) -> Result<TreeCount> {
    let count = tree_count(arity, n)?;
    let base = if arity == 2 {
        4.0f64.ln()
    } else {
        (3.0 * std::f64::consts::E * arity as f64).ln()
    };
    let log_bound = n.saturating_sub(1) as f64 * base;
    let within_bound = if n == 0 {
        true
    } else if arity == 2 {
        count <= BigUint::from(4u32).pow((n - 1) as u32)
    } else {
        big_ln(&count) <= log_bound + 1e-12
    };
    Ok(TreeCount {
        arity,
        nodes: n,
        count,
        log_bound,
        within_bound,
    })
}

fn big_ln(x: &BigUint) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v.ln(),
        _ => {
            let bits = x.bits();
            let shift = bits.saturating_sub(60);
            let top = (x >> shift).to_f64().unwrap_or(1.0);
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

/// Enumerates `A_n` in lexicographic order of Polish codes.
pub fn enumerate_trees(arity: usize, n: usize) -> Result<Vec<NTree>> {
    enumerate_trees_capped(arity, n, DEFAULT_TREE_CAP)
}

pub fn enumerate_trees_capped(arity: usize, n: usize, cap: u64) -> Result<Vec<NTree>> {
    Ok(enumerate_codes_capped(arity, n, cap)?
        .iter()
        .map(|c| decode_valid(c.bits(), arity))
        .collect())
}

/// All Polish codes of `A_n`, in lexicographic order.
pub fn enumerate_codes_capped(arity: usize, n: usize, cap: u64) -> Result<Vec<PolishCode>> {
    check_arity(arity)?;
    let count = tree_count(arity, n)?;
    if count > BigUint::from(cap) {
        return Err(Error::budget(
            "tree enumeration",
            count.to_u128().unwrap_or(u128::MAX),
            cap as u128,
        ));
    }
    let len = n * arity + 1;
    let mut out = Vec::with_capacity(count.to_usize().unwrap_or(0));
    let mut bits = Vec::with_capacity(len);
    extend_codes(arity, n, len, 0, &mut bits, &mut out);
    Ok(out)
}

// Every prefix that satisfies the prefix condition with at most `n` ones
// extends to a full code, so the search never backtracks out of a dead end.
fn extend_codes(
    arity: usize,
    n: usize,
    len: usize,
    ones: usize,
    bits: &mut Vec<u8>,
    out: &mut Vec<PolishCode>,
) {
    if bits.len() == len {
        if ones == n {
            out.push(PolishCode {
                bits: bits.clone(),
                arity,
            });
        }
        return;
    }
    for b in [0u8, 1] {
        let ones_next = ones + b as usize;
        if ones_next > n {
            continue;
        }
        let k = bits.len() + 1;
        if k < len && k > ones_next * arity {
            continue;
        }
        bits.push(b);
        extend_codes(arity, n, len, ones_next, bits, out);
        bits.pop();
    }
}
