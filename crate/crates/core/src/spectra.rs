//! Symmetric eigendecomposition, eigenspace grouping and spectral projections.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::linalg::SymMatrix;

/// Default relative tolerance for merging eigenvalues into one eigenspace.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-6;

/// Eigenvalues sorted in decreasing order with matching orthonormal eigenvectors
/// (column `k` of `vectors` belongs to `values[k]`).
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Eigendecomposition `M = V diag(values) Vᵀ` with values in decreasing order.
pub fn eig_sym(m: &SymMatrix) -> Result<Eigen> {
    let n = m.dim();
    if n == 0 {
        return Ok(Eigen { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    if m.as_matrix().iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence);
    }
    let eig = m
        .as_matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Cyclic Jacobi eigensolver; slower than [`eig_sym`] but dependency-free and
/// used as an independent reference.
pub fn eig_sym_jacobi(m: &SymMatrix) -> Result<Eigen> {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.frobenius().max(1.0);
    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-12 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, c| v[(i, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Recomposes `V diag(values) Vᵀ`.
pub fn recompose(vectors: &DMatrix<f64>, values: &[f64]) -> SymMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (c, &lam) in values.iter().enumerate() {
        for r in 0..n {
            scaled[(r, c)] *= lam;
        }
    }
    SymMatrix::from_dmatrix(&scaled * vectors.transpose())
}

/// Eigenspace decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct EigStructure {
    /// Distinct eigenvalues, strictly decreasing.
    pub distinct_values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// Orthogonal projector onto each eigenspace.
    pub projectors: Vec<SymMatrix>,
    /// Orthonormal basis (as columns) of each eigenspace.
    pub bases: Vec<DMatrix<f64>>,
    /// Incoherence `max_a ‖P_i e_a‖₂` of each eigenspace.
    pub mu: Vec<f64>,
    pub grouping_tol: f64,
}

impl EigStructure {
    /// Number of distinct eigenvalues.
    pub fn m(&self) -> usize {
        self.distinct_values.len()
    }

    pub fn n(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.dim())
    }

    /// Second-highest multiplicity (`κ`); equals the only multiplicity when `m = 1`.
    pub fn kappa(&self) -> usize {
        let mut mult = self.multiplicities.clone();
        mult.sort_unstable_by(|a, b| b.cmp(a));
        mult.get(1).copied().or_else(|| mult.first().copied()).unwrap_or(0)
    }

    /// Index of the eigenspace with the largest incoherence (first on ties).
    pub fn most_coherent(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.mu.iter().enumerate() {
            if v > self.mu[best] + 1e-12 {
                best = i;
            }
        }
        best
    }

    /// `Σ values[i] P_i`.
    pub fn combine(&self, weights: &[f64]) -> SymMatrix {
        let n = self.n();
        let mut acc = DMatrix::zeros(n, n);
        for (w, p) in weights.iter().zip(&self.projectors) {
            acc += p.as_matrix() * *w;
        }
        SymMatrix::from_dmatrix_unchecked(acc)
    }
}

/// Groups the eigenvalues of `m` into eigenspaces.
///
/// Consecutive sorted eigenvalues closer than `tol * max(1, ‖M‖₂)` are merged.
pub fn eigenspaces(m: &SymMatrix, tol: f64) -> Result<EigStructure> {
    let n = m.dim();
    let eig = eig_sym(m)?;
    let norm2 = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let thr = tol * norm2.max(1.0);

    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || eig.values[k - 1] - eig.values[k] > thr {
            groups.push((start, k));
            start = k;
        }
    }
    for w in groups.windows(2) {
        let gap = eig.values[w[0].1 - 1] - eig.values[w[1].0];
        if gap < 10.0 * thr {
            return Err(Error::AmbiguousClustering { gap, threshold: 10.0 * thr });
        }
    }

    let mut distinct_values = Vec::new();
    let mut multiplicities = Vec::new();
    let mut projectors = Vec::new();
    let mut bases = Vec::new();
    for &(a, b) in &groups {
        let mean = eig.values[a..b].iter().sum::<f64>() / (b - a) as f64;
        distinct_values.push(mean);
        multiplicities.push(b - a);
        let basis = eig.vectors.columns(a, b - a).into_owned();
        projectors.push(SymMatrix::from_dmatrix(&basis * basis.transpose()));
        bases.push(basis);
    }
    let mut es = EigStructure {
        distinct_values,
        multiplicities,
        projectors,
        bases,
        mu: vec![],
        grouping_tol: tol,
    };
    es.mu = incoherences(&es);
    Ok(es)
}

/// `μ_i = max_a ‖P_i e_a‖₂ = max_a sqrt((P_i)_aa)`.
pub fn incoherences(es: &EigStructure) -> Vec<f64> {
    es.projectors
        .iter()
        .map(|p| (0..p.dim()).map(|a| p.get(a, a).max(0.0).sqrt()).fold(0.0, f64::max))
        .collect()
}

/// Nearest positive semidefinite matrix in Frobenius norm.
pub fn project_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = eig_sym(m)?;
    if eig.values.iter().all(|&v| v >= 0.0) {
        return Ok(m.clone());
    }
    let clamped: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    Ok(recompose(&eig.vectors, &clamped))
}

/// Euclidean projection of `x` onto `{y : y ≺ lam}` (the permutahedron of `lam`).
///
/// The output keeps the entry ordering of `x`.
pub fn project_majorization(x: &[f64], lam: &[f64]) -> Result<Vec<f64>> {
    check_dim(lam.len(), x.len())?;
    let n = x.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut lam_sorted = lam.to_vec();
    lam_sorted.sort_by(|a, b| b.total_cmp(a));

    // With x sorted descending the prefix constraints form a chain; the
    // projection is x - v where v is the non-increasing least-squares fit of
    // x_sorted - lam_sorted (pool adjacent violators).
    let target: Vec<f64> = order.iter().zip(&lam_sorted).map(|(&i, &l)| x[i] - l).collect();
    let fit = isotonic_nonincreasing(&target);
    let mut out = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        out[i] = x[i] - fit[k];
    }
    Ok(out)
}

/// Least-squares non-increasing fit (pool adjacent violators).
fn isotonic_nonincreasing(y: &[f64]) -> Vec<f64> {
    // (sum, count) blocks whose means are non-increasing left to right.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 >= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = (s1 + s2, c1 + c2);
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, c) in blocks {
        out.extend(std::iter::repeat_n(s / c as f64, c));
    }
    out
}

/// Whether `y ≺ lam` (prefix sums of sorted `y` bounded by those of `lam`, equal totals).
pub fn is_majorized(y: &[f64], lam: &[f64], tol: f64) -> bool {
    if y.len() != lam.len() {
        return false;
    }
    let mut ys = y.to_vec();
    ys.sort_by(|a, b| b.total_cmp(a));
    let mut ls = lam.to_vec();
    ls.sort_by(|a, b| b.total_cmp(a));
    let mut sy = 0.0;
    let mut sl = 0.0;
    for k in 0..ys.len() {
        sy += ys[k];
        sl += ls[k];
        if sy > sl + tol {
            return false;
        }
    }
    (sy - sl).abs() <= tol
}

/// Frobenius projection onto the Schur-Horn orbitope `conv{X : λ(X) = lam}`.
pub fn project_schur_horn(m: &SymMatrix, lam: &[f64]) -> Result<SymMatrix> {
    check_dim(m.dim(), lam.len())?;
    let eig = eig_sym(m)?;
    let projected = project_majorization(&eig.values, lam)?;
    Ok(recompose(&eig.vectors, &projected))
}
