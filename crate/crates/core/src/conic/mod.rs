//! Standard-form cone programs over zero, nonnegative and PSD cones, and a
//! first-order solver for them.
//!
//! A problem is `min cᵀx  s.t.  Ax + s = b,  s ∈ K`. PSD blocks are stored in
//! scaled symmetric vectorization ([`svec`]), so the cone is self-dual under
//! the ordinary Euclidean inner product.

mod anderson;
mod ldl;
mod solver;
pub mod sparse;

use nalgebra::DMatrix;

pub use ldl::Ldl;
pub use solver::{solve, Settings, Solution, Status};
pub use sparse::CscMatrix;

use crate::error::{check_dim, Result};
use crate::linalg::SymMatrix;

/// Cone `K = {0}^zero × R₊^nonneg × Π S₊^{s_i}` in that order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConeSpec {
    pub zero: usize,
    pub nonneg: usize,
    pub psd: Vec<usize>,
}

impl ConeSpec {
    pub fn total(&self) -> usize {
        self.zero + self.nonneg + self.psd.iter().map(|&s| svec_len(s)).sum::<usize>()
    }

    /// Row ranges of each PSD block.
    pub fn psd_ranges(&self) -> Vec<(usize, std::ops::Range<usize>)> {
        let mut start = self.zero + self.nonneg;
        self.psd
            .iter()
            .map(|&s| {
                let r = start..start + svec_len(s);
                start = r.end;
                (s, r)
            })
            .collect()
    }
}

/// Length of the symmetric vectorization of an `n x n` matrix.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry `(i, j)`, `i <= j`, in the row-major upper-triangle order.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Row-major upper triangle with off-diagonal entries scaled by `√2`.
pub fn svec(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut out = Vec::with_capacity(svec_len(n));
    for i in 0..n {
        out.push(m.get(i, i));
        for j in (i + 1)..n {
            out.push(m.get(i, j) * std::f64::consts::SQRT_2);
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], n: usize) -> Result<SymMatrix> {
    check_dim(svec_len(n), v.len())?;
    Ok(SymMatrix::from_dmatrix_unchecked(smat_dense(v, n)))
}

fn smat_dense(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = v[k];
        k += 1;
        for j in (i + 1)..n {
            let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for i in 0..n {
        out[k] = m[(i, i)];
        k += 1;
        for j in (i + 1)..n {
            out[k] = 0.5 * (m[(i, j)] + m[(j, i)]) * std::f64::consts::SQRT_2;
            k += 1;
        }
    }
}

/// Projects one svec-encoded block onto the PSD cone in place.
pub(crate) fn project_psd_svec(v: &mut [f64], n: usize) {
    if n == 1 {
        v[0] = v[0].max(0.0);
        return;
    }
    let m = smat_dense(v, n);
    let eig = match m.clone().try_symmetric_eigen(1e-14, 10_000) {
        Some(e) => e,
        None => {
            // Fall back to the dependency-free solver.
            let e = crate::spectra::eig_sym_jacobi(&SymMatrix::from_dmatrix_unchecked(m))
                .expect("Jacobi iteration on a finite matrix");
            let p = crate::spectra::recompose(&e.vectors, &e.values.iter().map(|x| x.max(0.0)).collect::<Vec<_>>());
            svec_into(p.as_matrix(), v);
            return;
        }
    };
    let vals = &eig.eigenvalues;
    if vals.iter().all(|&x| x >= 0.0) {
        return;
    }
    let positive: Vec<usize> = (0..n).filter(|&k| vals[k] > 0.0).collect();
    if positive.is_empty() {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut vp = DMatrix::zeros(n, positive.len());
    for (c, &k) in positive.iter().enumerate() {
        let s = vals[k].sqrt();
        for r in 0..n {
            vp[(r, c)] = eig.eigenvectors[(r, k)] * s;
        }
    }
    let p = &vp * vp.transpose();
    svec_into(&p, v);
}

/// Euclidean projection onto `K`.
pub fn project_cone(k: &ConeSpec, v: &[f64]) -> Result<Vec<f64>> {
    check_dim(k.total(), v.len())?;
    let mut out = v.to_vec();
    project_cone_in_place(k, &mut out, false);
    Ok(out)
}

/// Projects onto `K`, or onto `K*` when `dual` is set (the zero cone becomes free).
pub(crate) fn project_cone_in_place(k: &ConeSpec, v: &mut [f64], dual: bool) {
    if !dual {
        v[..k.zero].iter_mut().for_each(|x| *x = 0.0);
    }
    v[k.zero..k.zero + k.nonneg].iter_mut().for_each(|x| *x = x.max(0.0));
    for (s, r) in k.psd_ranges() {
        project_psd_svec(&mut v[r], s);
    }
}

/// `min cᵀx  s.t.  Ax + s = b,  s ∈ K`.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: ConeSpec,
}

impl ConicProblem {
    pub fn new(c: Vec<f64>, a: CscMatrix, b: Vec<f64>, cones: ConeSpec) -> Result<Self> {
        check_dim(a.ncols, c.len())?;
        check_dim(a.nrows, b.len())?;
        check_dim(cones.total(), b.len())?;
        Ok(Self { c, a, b, cones })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }
}

/// Affine expression `Σ coef · x_var + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![], constant: c }
    }

    pub fn var(v: usize) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, v: usize, coef: f64) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }
}

/// Incremental construction of a [`ConicProblem`].
#[derive(Clone, Debug, Default)]
pub struct ConicBuilder {
    num_vars: usize,
    objective: Vec<(usize, f64)>,
    zero: Vec<LinExpr>,
    nonneg: Vec<LinExpr>,
    psd: Vec<(usize, Vec<LinExpr>)>,
}

impl ConicBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Allocates `k` fresh variables and returns the first index.
    pub fn new_vars(&mut self, k: usize) -> usize {
        let first = self.num_vars;
        self.num_vars += k;
        first
    }

    pub fn add_objective(&mut self, var: usize, coef: f64) {
        self.objective.push((var, coef));
    }

    /// `expr = 0`.
    pub fn add_zero(&mut self, expr: LinExpr) {
        self.zero.push(expr);
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, expr: LinExpr) {
        self.nonneg.push(expr);
    }

    /// `M ⪰ 0` where `entries` lists `M_ij` for `i <= j` in row-major order.
    pub fn add_psd(&mut self, size: usize, entries: Vec<LinExpr>) {
        assert_eq!(entries.len(), svec_len(size), "PSD block entry count");
        self.psd.push((size, entries));
    }

    pub fn counts(&self) -> (usize, usize, Vec<usize>) {
        (self.zero.len(), self.nonneg.len(), self.psd.iter().map(|p| p.0).collect())
    }

    pub fn build(&self) -> ConicProblem {
        let mut c = vec![0.0; self.num_vars];
        for &(v, w) in &self.objective {
            c[v] += w;
        }
        let mut trip = Vec::new();
        let mut b = Vec::new();
        let mut push = |expr: &LinExpr, scale: f64, trip: &mut Vec<(usize, usize, f64)>| {
            let row = b.len();
            for &(v, coef) in &expr.terms {
                trip.push((row, v, -coef * scale));
            }
            b.push(expr.constant * scale);
        };
        for e in self.zero.iter().chain(&self.nonneg) {
            push(e, 1.0, &mut trip);
        }
        for (size, entries) in &self.psd {
            let mut k = 0;
            for i in 0..*size {
                for j in i..*size {
                    let s = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                    push(&entries[k], s, &mut trip);
                    k += 1;
                }
            }
        }
        let cones = ConeSpec {
            zero: self.zero.len(),
            nonneg: self.nonneg.len(),
            psd: self.psd.iter().map(|p| p.0).collect(),
        };
        let a = CscMatrix::from_triplets(b.len(), self.num_vars, &trip);
        ConicProblem { c, a, b, cones }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_examples() {
        assert_eq!(svec(&SymMatrix::identity(2)), vec![1.0, 0.0, 1.0]);
        let off = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let v = svec(&off);
        assert!((v[1] - std::f64::consts::SQRT_2).abs() < 1e-15 && v[0] == 0.0 && v[2] == 0.0);
        let m = SymMatrix::from_upper_fn(4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let back = smat(&svec(&m), 4).unwrap();
        assert!((&back - &m).max_abs() < 1e-14);
        let n = SymMatrix::from_upper_fn(4, |i, j| ((i + 2 * j) % 3) as f64);
        let dot: f64 = svec(&m).iter().zip(svec(&n)).map(|(a, b)| a * b).sum();
        assert!((dot - m.inner(&n)).abs() < 1e-12);
        assert!(smat(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn svec_index_matches_layout() {
        let n = 5;
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                assert_eq!(svec_index(n, i, j), k);
                k += 1;
            }
        }
    }

    #[test]
    fn project_cone_examples() {
        let k = ConeSpec { zero: 2, nonneg: 2, psd: vec![2] };
        let mut v = vec![3.0, -1.0, -1.0, 2.0];
        v.extend(svec(&SymMatrix::from_diagonal(&[1.0, -1.0])));
        let p = project_cone(&k, &v).unwrap();
        assert_eq!(&p[..4], &[0.0, 0.0, 0.0, 2.0]);
        let want = svec(&SymMatrix::from_diagonal(&[1.0, 0.0]));
        for (a, b) in p[4..].iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(project_cone(&k, &[0.0; 3]).is_err());
    }
}
