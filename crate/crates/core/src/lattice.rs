//! Integer lattice vectors `k ∈ ℤ^d` (d ≤ 3) and the frequencies `k/L` they stand for.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 3;

/// A lattice vector. Coordinates beyond the working dimension are kept at zero,
/// so arithmetic and ordering never need to know `d`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct KVec(pub [i64; MAX_DIM]);

impl KVec {
    pub const ZERO: KVec = KVec([0; MAX_DIM]);

    pub fn new(coords: &[i64]) -> Self {
        assert!(coords.len() <= MAX_DIM, "lattice dimension above {MAX_DIM}");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        KVec(c)
    }

    pub fn d1(k: i64) -> Self {
        KVec([k, 0, 0])
    }

    pub fn d2(k1: i64, k2: i64) -> Self {
        KVec([k1, k2, 0])
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    pub fn coords(&self, d: usize) -> &[i64] {
        &self.0[..d]
    }

    /// True when the first nonzero coordinate is positive.
    pub fn is_positive(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    /// Representative of `{k, -k}` in the positive half-space, with the sign
    /// that maps `k` onto it.
    pub fn canonical(&self) -> (KVec, bool) {
        if self.is_positive() {
            (*self, true)
        } else {
            (-*self, false)
        }
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// The frequency `k / L`, padded to `MAX_DIM`.
    pub fn freq(&self, scale: f64) -> [f64; MAX_DIM] {
        self.0.map(|c| c as f64 / scale)
    }

    pub fn scale(&self, factor: i64) -> KVec {
        KVec(self.0.map(|c| c * factor))
    }
}

impl Add for KVec {
    type Output = KVec;
    fn add(self, rhs: KVec) -> KVec {
        KVec([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl AddAssign for KVec {
    fn add_assign(&mut self, rhs: KVec) {
        *self = *self + rhs;
    }
}

impl Sub for KVec {
    type Output = KVec;
    fn sub(self, rhs: KVec) -> KVec {
        self + (-rhs)
    }
}

impl Neg for KVec {
    type Output = KVec;
    fn neg(self) -> KVec {
        KVec(self.0.map(|c| -c))
    }
}

impl std::iter::Sum for KVec {
    fn sum<I: Iterator<Item = KVec>>(iter: I) -> KVec {
        iter.fold(KVec::ZERO, |a, b| a + b)
    }
}

impl fmt::Debug for KVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{:?}", self.0)
    }
}

/// Japanese bracket `⟨x⟩ = sqrt(1 + |x|²)`.
pub fn bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
