//! Exact rational linear algebra used to pin rank decisions.
//!
//! Every finite `f64` is a rational number, so a structure tensor whose
//! coefficients carry no roundoff (catalog entries, parsed files) can have
//! all of its subspace dimensions computed exactly. The floating path then
//! only supplies orthonormal bases; the integer ranks come from here.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Dense matrix over the rationals, column-major like `DMatrix`.
#[derive(Debug, Clone)]
pub struct RatMatrix {
    pub nrows: usize,
    pub ncols: usize,
    data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![BigRational::zero(); nrows * ncols],
        }
    }

    /// Exact conversion: every finite f64 is a dyadic rational.
    pub fn from_f64(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out.set(i, j, BigRational::from_float(m[(i, j)]).expect("finite"));
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[j * self.nrows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[j * self.nrows + i] = v;
    }

    /// Horizontal concatenation.
    pub fn hstack(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.nrows, other.nrows);
        let mut out = RatMatrix::zeros(self.nrows, self.ncols + other.ncols);
        out.data[..self.data.len()].clone_from_slice(&self.data);
        out.data[self.data.len()..].clone_from_slice(&other.data);
        out
    }

    /// Row echelon form in place; returns the pivot columns.
    fn echelon(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.ncols {
            if row == self.nrows {
                break;
            }
            // Partial pivoting by magnitude keeps the entries tame.
            let mut best: Option<(usize, BigRational)> = None;
            for r in row..self.nrows {
                let v = self.get(r, col).clone();
                if !v.is_zero() {
                    let mag = v.abs();
                    match &best {
                        Some((_, m)) if *m >= mag => {}
                        _ => best = Some((r, mag)),
                    }
                }
            }
            let Some((pivot_row, _)) = best else { continue };
            if pivot_row != row {
                for c in 0..self.ncols {
                    let a = self.get(row, c).clone();
                    let b = self.get(pivot_row, c).clone();
                    self.set(row, c, b);
                    self.set(pivot_row, c, a);
                }
            }
            let pivot = self.get(row, col).clone();
            for r in (row + 1)..self.nrows {
                let factor = self.get(r, col) / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for c in col..self.ncols {
                    let v = self.get(r, c) - &factor * self.get(row, c);
                    self.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    /// Exact rank.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.echelon().len()
    }

    /// Pivot columns of the original matrix: an exact basis of the column
    /// space with rank-many columns.
    pub fn column_basis(&self) -> RatMatrix {
        let mut work = self.clone();
        let pivots = work.echelon();
        let mut out = RatMatrix::zeros(self.nrows, pivots.len());
        for (c, &p) in pivots.iter().enumerate() {
            for i in 0..self.nrows {
                out.set(i, c, self.get(i, p).clone());
            }
        }
        out
    }

    /// Exact basis of the right nullspace (columns).
    pub fn nullspace(&self) -> RatMatrix {
        let mut work = self.clone();
        let pivots = work.echelon();
        let rank = pivots.len();
        let free: Vec<usize> = (0..self.ncols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = RatMatrix::zeros(self.ncols, free.len());
        for (bi, &fc) in free.iter().enumerate() {
            // Back-substitute with the free variable set to 1.
            let mut x = vec![BigRational::zero(); self.ncols];
            x[fc] = BigRational::from(BigInt::from(1));
            for prow in (0..rank).rev() {
                let pcol = pivots[prow];
                let mut acc = BigRational::zero();
                for (c, xc) in x.iter().enumerate().skip(pcol + 1) {
                    if !work.get(prow, c).is_zero() && !xc.is_zero() {
                        acc += work.get(prow, c) * xc;
                    }
                }
                x[pcol] = -acc / work.get(prow, pcol);
            }
            for (i, v) in x.into_iter().enumerate() {
                basis.set(i, bi, v);
            }
        }
        basis
    }
}

/// dim(U + V) for subspaces given by exact generator columns.
pub fn sum_dim(u: &RatMatrix, v: &RatMatrix) -> usize {
    u.hstack(v).rank()
}

/// dim(U ∩ V) via dim U + dim V - dim(U + V), with generator matrices.
pub fn intersection_dim(u: &RatMatrix, v: &RatMatrix) -> usize {
    u.rank() + v.rank() - sum_dim(u, v)
}

/// Exact basis of the orthogonal complement (nullspace of the transpose).
pub fn orthogonal_complement(u: &RatMatrix) -> RatMatrix {
    let mut t = RatMatrix::zeros(u.ncols, u.nrows);
    for i in 0..u.nrows {
        for j in 0..u.ncols {
            t.set(j, i, u.get(i, j).clone());
        }
    }
    t.nullspace()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, vals: &[f64]) -> RatMatrix {
        let m = DMatrix::from_row_slice(rows, cols, vals);
        RatMatrix::from_f64(&m)
    }

    #[test]
    fn rank_exact() {
        let m = mat(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn nullspace_exact() {
        let m = mat(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let ns = m.nullspace();
        assert_eq!(ns.ncols, 1);
        // m * basis = 0 exactly
        for r in 0..2 {
            let mut acc = BigRational::zero();
            for c in 0..3 {
                acc += m.get(r, c) * ns.get(c, 0);
            }
            assert!(acc.is_zero());
        }
    }

    #[test]
    fn intersection_and_sum() {
        // U = span{e1, e2}, V = span{e2, e3} in R^3.
        let u = mat(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let v = mat(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(sum_dim(&u, &v), 3);
        assert_eq!(intersection_dim(&u, &v), 1);
        let comp = orthogonal_complement(&u);
        assert_eq!(comp.ncols, 1);
    }

    #[test]
    fn dyadic_roundtrip() {
        let m = mat(1, 1, &[0.1]);
        // 0.1 as an f64 is not 1/10; the conversion must capture the exact bits.
        let back: f64 = {
            let r = m.get(0, 0);
            let num: f64 = r.numer().to_string().parse().unwrap();
            let den: f64 = r.denom().to_string().parse().unwrap();
            num / den
        };
        assert_eq!(back, 0.1);
    }
}
