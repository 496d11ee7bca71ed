//! Sparse LDLᵀ factorization of symmetric quasi-definite matrices.
//!
//! Up-looking factorization over the elimination tree after an AMD
//! fill-reducing permutation.

use super::sparse::CscMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct Ldl {
    n: usize,
    /// `perm[k]` is the original index of pivot `k`.
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    dinv: Vec<f64>,
    /// Number of negative pivots.
    pub negative_pivots: usize,
}

impl Ldl {
    /// Factors a symmetric matrix given by its upper triangle (diagonal included).
    pub fn factor(upper: &CscMatrix) -> Result<Self> {
        let n = upper.ncols;
        if upper.nrows != n {
            return Err(Error::DimensionMismatch { expected: n, got: upper.nrows });
        }
        let perm: Vec<usize> = if n == 0 {
            vec![]
        } else {
            let (p, _pinv, _info) = amd::order::<usize>(n, &upper.colptr, &upper.rowind, &amd::Control::default())
                .map_err(|s| Error::NumericalBreakdown(format!("ordering failed: {s:?}")))?;
            p
        };
        let mut pinv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }
        let mut trip = Vec::with_capacity(upper.nnz());
        for c in 0..n {
            for p in upper.colptr[c]..upper.colptr[c + 1] {
                let r = upper.rowind[p];
                let (a, b) = (pinv[r], pinv[c]);
                trip.push((a.min(b), a.max(b), upper.values[p]));
            }
        }
        let pm = CscMatrix::from_triplets(n, n, &trip);
        Self::factor_permuted(&pm, perm)
    }

    fn factor_permuted(a: &CscMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.ncols;
        let (ap, ai, ax) = (&a.colptr, &a.rowind, &a.values);

        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &i0 in &ai[ap[j]..ap[j + 1]] {
                let mut i = i0;
                if i > j {
                    return Err(Error::NumericalBreakdown("matrix is not upper triangular".into()));
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }

        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut dinv = vec![0.0; n];
        let mut used = vec![false; n];
        let mut y_vals = vec![0.0; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = lp[..n].to_vec();
        let mut negative_pivots = 0;

        for k in 0..n {
            let mut nnz_y = 0;
            d[k] = 0.0;
            for p in ap[k]..ap[k + 1] {
                let bidx = ai[p];
                if bidx == k {
                    d[k] = ax[p];
                    continue;
                }
                y_vals[bidx] = ax[p];
                if !used[bidx] {
                    used[bidx] = true;
                    elim[0] = bidx;
                    let mut nnz_e = 1;
                    let mut next = etree[bidx];
                    while next != NONE && next < k {
                        if used[next] {
                            break;
                        }
                        used[next] = true;
                        elim[nnz_e] = next;
                        nnz_e += 1;
                        next = etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        y_idx[nnz_y] = elim[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for t in (0..nnz_y).rev() {
                let c = y_idx[t];
                let slot = next_space[c];
                let yc = y_vals[c];
                for j in lp[c]..slot {
                    y_vals[li[j]] -= lx[j] * yc;
                }
                li[slot] = k;
                lx[slot] = yc * dinv[c];
                d[k] -= yc * lx[slot];
                next_space[c] += 1;
                y_vals[c] = 0.0;
                used[c] = false;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::NumericalBreakdown(format!("zero pivot at {k}")));
            }
            if d[k] < 0.0 {
                negative_pivots += 1;
            }
            dinv[k] = 1.0 / d[k];
        }
        Ok(Self { n, perm, lp, li, lx, dinv, negative_pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    /// Solves `K x = b` in place; `work` must have length `n`.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            work[k] = b[self.perm[k]];
        }
        for i in 0..n {
            let wi = work[i];
            if wi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    work[self.li[j]] -= self.lx[j] * wi;
                }
            }
        }
        for i in 0..n {
            work[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = work[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * work[self.li[j]];
            }
            work[i] = acc;
        }
        for k in 0..n {
            b[self.perm[k]] = work[k];
        }
    }
}
