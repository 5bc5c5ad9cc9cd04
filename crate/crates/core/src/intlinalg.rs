//! Exact linear algebra for the pairing constraint systems: fraction-free
//! rank and an affine parametrization of integer solution sets.

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{KVec, MAX_DIM};

type Q = Ratio<i64>;

/// Rank of an integer matrix by Bareiss fraction-free elimination.
pub fn integer_rank(matrix: &[Vec<i64>]) -> Result<usize> {
    let rows = matrix.len();
    if rows == 0 {
        return Ok(0);
    }
    let cols = matrix[0].len();
    let mut m: Vec<Vec<i128>> = matrix
        .iter()
        .map(|r| {
            assert_eq!(r.len(), cols, "ragged matrix");
            r.iter().map(|&v| v as i128).collect()
        })
        .collect();
    let mut rank = 0;
    let mut prev_pivot: i128 = 1;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col];
        for r in (rank + 1)..rows {
            let factor = m[r][col];
            for c in 0..cols {
                let num = pivot
                    .checked_mul(m[r][c])
                    .zip(factor.checked_mul(m[rank][c]))
                    .and_then(|(a, b)| a.checked_sub(b))
                    .ok_or_else(|| {
                        Error::Inconsistent("integer overflow in fraction-free elimination".into())
                    })?;
                // Bareiss: the division is exact.
                debug_assert_eq!(num % prev_pivot, 0);
                m[r][c] = num / prev_pivot;
            }
        }
        prev_pivot = pivot;
        rank += 1;
    }
    Ok(rank)
}

/// One pivot variable written in terms of the free ones:
/// `x_col = constant − Σ coeff · x_free[idx]`.
#[derive(Clone, Debug)]
pub struct PivotExpr {
    pub col: usize,
    pub constant: [Q; MAX_DIM],
    pub coeffs: Vec<(usize, Q)>,
}

/// Affine parametrization of `{x ∈ (ℤ^d)^n : A x = B}` by its free columns.
#[derive(Clone, Debug)]
pub struct AffineSolution {
    pub n_vars: usize,
    pub free_cols: Vec<usize>,
    pub pivots: Vec<PivotExpr>,
}

impl AffineSolution {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Completes an assignment of the free variables. Returns `None` when a
    /// pivot variable comes out non-integral.
    pub fn complete(&self, free_values: &[KVec]) -> Option<Vec<KVec>> {
        debug_assert_eq!(free_values.len(), self.free_cols.len());
        let mut out = vec![KVec::ZERO; self.n_vars];
        for (v, &c) in free_values.iter().zip(&self.free_cols) {
            out[c] = *v;
        }
        for p in &self.pivots {
            let mut k = [0i64; MAX_DIM];
            for (dim, slot) in k.iter_mut().enumerate() {
                let mut acc = p.constant[dim];
                for &(idx, coeff) in &p.coeffs {
                    acc -= coeff * Q::from_integer(free_values[idx].0[dim]);
                }
                if !acc.is_integer() {
                    return None;
                }
                *slot = acc.to_integer();
            }
            out[p.col] = KVec(k);
        }
        Some(out)
    }
}

/// Reduced row echelon form over ℚ of `[A | B]`; `None` if the system is inconsistent.
pub fn solve_affine(a: &[Vec<i64>], b: &[KVec]) -> Option<AffineSolution> {
    let rows = a.len();
    assert_eq!(rows, b.len());
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .map(|r| r.iter().map(|&v| Q::from_integer(v)).collect())
        .collect();
    let mut rhs: Vec<[Q; MAX_DIM]> = b.iter().map(|k| k.0.map(Q::from_integer)).collect();

    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        rhs.swap(row, p);
        let inv = Q::one() / m[row][col];
        for v in m[row].iter_mut() {
            *v *= inv;
        }
        for v in rhs[row].iter_mut() {
            *v *= inv;
        }
        for r in 0..rows {
            if r == row || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col];
            for c in 0..cols {
                let delta = f * m[row][c];
                m[r][c] -= delta;
            }
            for dim in 0..MAX_DIM {
                let delta = f * rhs[row][dim];
                rhs[r][dim] -= delta;
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    if rhs[row..].iter().any(|r| r.iter().any(|v| !v.is_zero())) {
        return None;
    }
    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let pivots = pivot_cols
        .iter()
        .enumerate()
        .map(|(r, &col)| PivotExpr {
            col,
            constant: rhs[r],
            coeffs: free_cols
                .iter()
                .enumerate()
                .filter(|(_, &fc)| !m[r][fc].is_zero())
                .map(|(i, &fc)| (i, m[r][fc]))
                .collect(),
        })
        .collect();
    Some(AffineSolution {
        n_vars: cols,
        free_cols,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(integer_rank(&[vec![1, 2], vec![2, 4]]).unwrap(), 1);
        assert_eq!(
            integer_rank(&[vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 2]]).unwrap(),
            2
        );
        assert_eq!(integer_rank(&[vec![0, 0], vec![0, 0]]).unwrap(), 0);
        assert_eq!(integer_rank(&[vec![2, 1], vec![1, 3]]).unwrap(), 2);
        assert_eq!(integer_rank(&[]).unwrap(), 0);
    }

    #[test]
    fn affine_solutions() {
        // x0 + x1 = 5, x1 - x2 = 1 over ℤ (d = 1).
        let sol = solve_affine(
            &[vec![1, 1, 0], vec![0, 1, -1]],
            &[KVec::d1(5), KVec::d1(1)],
        )
        .unwrap();
        assert_eq!(sol.rank(), 2);
        assert_eq!(sol.free_cols, vec![2]);
        let x = sol.complete(&[KVec::d1(7)]).unwrap();
        assert_eq!(x, vec![KVec::d1(-3), KVec::d1(8), KVec::d1(7)]);

        assert!(solve_affine(&[vec![1, 1], vec![1, 1]], &[KVec::d1(1), KVec::d1(2)]).is_none());

        // 2x = 3 has no integral solution.
        let sol = solve_affine(&[vec![2]], &[KVec::d1(3)]).unwrap();
        assert!(sol.complete(&[]).is_none());
    }
}
