//! Dense real symmetric matrices.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

/// A dense real symmetric `n x n` matrix.
///
/// Every constructor symmetrizes its input, so `m[(i, j)] == m[(j, i)]` holds
/// exactly for every value of this type.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// The all-ones matrix `11ᵀ`.
    pub fn ones(n: usize) -> Self {
        Self(DMatrix::from_element(n, n, 1.0))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        Self(m)
    }

    /// Builds a matrix by evaluating `f` on the upper triangle (`i <= j`).
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    /// Wraps a dense matrix, replacing it by `(M + Mᵀ) / 2`.
    pub fn from_dmatrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "symmetric matrix must be square");
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    /// Wraps a dense matrix that is already exactly symmetric.
    pub(crate) fn from_dmatrix_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    /// Row-major data, useful for tests and serialization.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_dmatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
        self.0[(j, i)] = v;
    }

    /// Largest entry in magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Entrywise ℓ₁ norm over the full matrix.
    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    /// Sum of `|M_ij|` over `i <= j`.
    pub fn upper_l1_norm(&self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..=j {
                s += self.0[(i, j)].abs();
            }
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `⟨M, N⟩ = Tr(MN)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    /// `1ᵀ M 1`.
    pub fn total_sum(&self) -> f64 {
        self.0.sum()
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        Self(&self.0 * a)
    }

    /// Elementwise map; `f` must not depend on position.
    pub fn map(&self, f: impl FnMut(f64) -> f64) -> SymMatrix {
        Self(self.0.map(f))
    }

    /// `P M P` for symmetric `P`.
    pub fn congruence(&self, p: &SymMatrix) -> SymMatrix {
        Self::from_dmatrix(&p.0 * &self.0 * &p.0)
    }

    /// `Π M Πᵀ` where `perm[i]` is the image of vertex `i`.
    pub fn permute(&self, perm: &[usize]) -> SymMatrix {
        let n = self.dim();
        assert_eq!(perm.len(), n);
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(perm[i], perm[j])] = self.0[(i, j)];
            }
        }
        Self(out)
    }

    /// Maximum asymmetry `|M_ij - M_ji|` of a raw dense matrix.
    pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl<'a> Add<&'a SymMatrix> for &'a SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a SymMatrix> for &'a SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}
