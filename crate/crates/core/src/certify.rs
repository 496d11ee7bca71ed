//! Dual certificates for tightness of the Schur-Horn relaxation.
//!
//! With `P_i` the eigenspace projectors of `A`, the operator
//! `T_α(W) = W − Σ α_i P_i W P_i` controls everything here. `ξ` is its
//! entrywise gain over symmetric matrices with at most `d` nonzeros per row,
//! and `ρ = ‖Σ γ_i P_i‖_∞`. Exact `ξ` is combinatorial, so callers get a
//! bracket `[xi_lower, xi_upper]` and every "< 1" test uses the upper end.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::families::check_projector_diagonal_uniformity;
use crate::graphs::{EditSet, Graph};
use crate::linalg::SymMatrix;
use crate::spectra::{eigenspaces, EigStructure, DEFAULT_GROUPING_TOL};

/// Iteration cap for the fixed point defining `L^α`.
pub const MAX_DELTA_ITER: usize = 100;
/// Tolerance for the uniform projector diagonal precondition.
pub const UNIFORMITY_TOL: f64 = 1e-8;
const DEFAULT_PROBES: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateParams {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl CertificateParams {
    fn validate(&self, m: usize) -> Result<()> {
        check_dim(m, self.alpha.len())?;
        check_dim(m, self.gamma.len())?;
        if self.alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::BadParams("alpha entries must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Outcome of each condition. The first five are the sufficient conditions,
/// the last two the conditions of the main theorem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConditionFlags {
    pub sign_match: bool,
    pub off_support: bool,
    pub block_diagonal: bool,
    pub spacing: bool,
    pub xi_below_one: bool,
    pub theorem_contraction: bool,
    pub theorem_spacing: bool,
}

impl ConditionFlags {
    /// All five sufficient conditions.
    pub fn sufficient(&self) -> bool {
        self.sign_match && self.off_support && self.block_diagonal && self.spacing && self.xi_below_one
    }

    pub fn theorem(&self) -> bool {
        self.theorem_contraction && self.theorem_spacing
    }
}

/// Signed slack of each condition; positive means satisfied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConditionMargins {
    pub sign_match: f64,
    pub off_support: f64,
    pub block_diagonal: f64,
    pub spacing: f64,
    pub xi_below_one: f64,
    pub theorem_contraction: f64,
    pub theorem_spacing: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub rho: f64,
    pub xi_lower: f64,
    pub xi_upper: f64,
    /// Exact gain of `T_α` over matrices supported on this edit's `Ω`.
    /// It never exceeds `ξ(α, d)` and is a valid stand-in for it in the
    /// norm bounds of this particular instance.
    pub xi_support: Option<f64>,
    pub flags: ConditionFlags,
    pub margins: ConditionMargins,
    /// Whether `Q` lies in the relative interior of the orbitope normal cone.
    pub normal_cone: Option<bool>,
    #[serde(skip)]
    pub q: Option<SymMatrix>,
    #[serde(skip)]
    pub delta: Option<SymMatrix>,
}

/// `ρ(γ) = ‖Σ γ_i P_i‖_∞`.
pub fn rho(gamma: &[f64], es: &EigStructure) -> Result<f64> {
    check_dim(es.m(), gamma.len())?;
    Ok(es.combine(gamma).max_abs())
}

fn one_hot(alpha: &[f64]) -> Option<usize> {
    let mut hot = None;
    for (i, &a) in alpha.iter().enumerate() {
        if a == 1.0 && hot.is_none() {
            hot = Some(i);
        } else if a != 0.0 {
            return None;
        }
    }
    hot
}

/// Certified upper bound on `ξ(α, d)`.
pub fn xi_upper(alpha: &[f64], d: usize, es: &EigStructure) -> Result<f64> {
    check_dim(es.m(), alpha.len())?;
    let mu = &es.mu;
    let df = d as f64;
    let sum: f64 = mu.iter().sum();
    let sq: f64 = mu.iter().map(|m| m * m).sum();
    // Σ_{i≠j} μ_i μ_j = (Σμ)² − Σμ².
    let cross = sum * sum - sq;
    let diag: f64 = mu.iter().zip(alpha).map(|(m, a)| (1.0 - a) * m * m).sum();
    let generic = df * (cross + diag);
    let Some(l) = one_hot(alpha) else {
        return Ok(generic);
    };
    let others: Vec<f64> = mu.iter().enumerate().filter(|&(i, _)| i != l).map(|(_, &m)| m).collect();
    let s: f64 = others.iter().sum();
    let s2: f64 = others.iter().map(|m| m * m).sum();
    let mixed = 2.0 * s * df.sqrt() + (s2 + (s * s - s2)) * df;
    Ok(generic.min(mixed))
}

/// Precomputed pieces of `T_α(W) = W − Σ α_i P_i W P_i`.
struct Operator<'a> {
    active: Vec<(f64, &'a DMatrix<f64>)>,
}

impl<'a> Operator<'a> {
    fn new(alpha: &[f64], es: &'a EigStructure) -> Self {
        let active = alpha
            .iter()
            .zip(&es.projectors)
            .filter(|(a, _)| **a != 0.0)
            .map(|(a, p)| (*a, p.as_matrix()))
            .collect();
        Self { active }
    }

    /// `Σ α_i P_i W P_i`.
    fn diag_part(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(w.nrows(), w.ncols());
        for &(a, p) in &self.active {
            acc += (p * w * p) * a;
        }
        acc
    }

    fn apply(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        w - self.diag_part(w)
    }

    /// `T(e_a e_bᵀ + e_b e_aᵀ)`, computed from projector columns.
    fn apply_pair(&self, a: usize, b: usize, n: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, n);
        out[(a, b)] += 1.0;
        out[(b, a)] += 1.0;
        for &(al, p) in &self.active {
            let pa = p.column(a);
            let pb = p.column(b);
            out -= (pa * pb.transpose() + pb * pa.transpose()) * al;
        }
        out
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Random symmetric ±1 matrix with exactly `min(d, n)` nonzeros per row.
///
/// The support is a relabelled circulant; odd degrees use the diagonal (odd
/// `n`) or the antipodal offset (even `n`).
fn random_regular_sign_matrix(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = d.min(n);
    let mut offsets = Vec::new();
    if d == n {
        offsets.extend(0..n);
    } else if d % 2 == 1 {
        offsets.push(if n % 2 == 0 { n / 2 } else { 0 });
    }
    for k in 1..=(if d == n { 0 } else { d / 2 }) {
        offsets.push(k);
        offsets.push(n - k);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut w = DMatrix::zeros(n, n);
    for a in 0..n {
        for &k in &offsets {
            let b = (a + k) % n;
            let (i, j) = (perm[a], perm[b]);
            if w[(i, j)] == 0.0 {
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                w[(i, j)] = s;
                w[(j, i)] = s;
            }
        }
    }
    w
}

/// Lower bound on `ξ(α, d)` from probe matrices: every single-pair matrix
/// plus `probes` random `d`-regular sign matrices.
pub fn xi_lower(alpha: &[f64], d: usize, es: &EigStructure, probes: usize, seed: u64) -> Result<f64> {
    check_dim(es.m(), alpha.len())?;
    let n = es.n();
    let op = Operator::new(alpha, es);
    let mut best = 0.0_f64;
    for a in 0..n {
        for b in (a + 1)..n {
            best = best.max(inf_norm(&op.apply_pair(a, b, n)));
        }
    }
    if n == 1 {
        let mut w = DMatrix::zeros(1, 1);
        w[(0, 0)] = 1.0;
        best = best.max(inf_norm(&op.apply(&w)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        if n == 0 || d == 0 {
            break;
        }
        let w = random_regular_sign_matrix(n, d, &mut rng);
        best = best.max(inf_norm(&op.apply(&w)) / inf_norm(&w));
    }
    Ok(best)
}

/// Exact gain of `T_α` over symmetric matrices supported on `Ω`.
///
/// The maximum of a linear functional over the unit box is attained at a
/// sign pattern, so `‖T(W)‖_∞` over `|W| ≤ 1` on `Ω` equals the largest row
/// ℓ₁ norm of the matrix of `T` restricted to `Ω`.
pub fn xi_support(alpha: &[f64], edit: &EditSet, es: &EigStructure) -> Result<f64> {
    check_dim(es.m(), alpha.len())?;
    let n = es.n();
    let op = Operator::new(alpha, es);
    let mut row_sums = DMatrix::<f64>::zeros(n, n);
    for (a, b) in edit.adds().chain(edit.deletes()) {
        if b >= n {
            return Err(Error::InconsistentEdit(format!("pair ({a}, {b}) out of range")));
        }
        row_sums += op.apply_pair(a, b, n).abs();
    }
    Ok(inf_norm(&row_sums))
}

fn support_mask(edit: &EditSet, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for (a, b) in edit.adds().chain(edit.deletes()) {
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
    }
    m
}

/// `Δ = L^α(M)`.
///
/// Solves `Y = M + T_α(P_Ω(Y))` by fixed-point iteration and returns
/// `Δ = Σ α_i P_i P_Ω(Y) P_i`. This gives `P_Ω(Δ) = P_Ω(M)` and
/// `P_i Δ P_j = 0` for `i ≠ j`.
pub fn build_delta(es: &EigStructure, edit: &EditSet, alpha: &[f64], m: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    check_dim(es.m(), alpha.len())?;
    let n = es.n();
    check_dim(n, m.dim())?;
    if edit.adds().chain(edit.deletes()).any(|(_, b)| b >= n) {
        return Err(Error::InconsistentEdit("edit pair out of range".into()));
    }
    let mask = support_mask(edit, n);
    let op = Operator::new(alpha, es);
    let m0 = m.as_matrix();
    let mut y = m0.clone();
    let mut prev_change = f64::INFINITY;
    let mut converged = false;
    for it in 0..MAX_DELTA_ITER {
        let py = y.component_mul(&mask);
        let next = m0 + op.apply(&py);
        let change = inf_norm(&(&next - &y));
        y = next;
        if change <= tol {
            converged = true;
            break;
        }
        // Allow a few iterations of transient growth before judging.
        if !change.is_finite() || (it >= 5 && change > prev_change) {
            return Err(Error::NotContracting(format!("change {change:.3e} at iteration {it}")));
        }
        prev_change = change;
    }
    if !converged {
        return Err(Error::NotContracting(format!(
            "no convergence to {tol:.1e} within {MAX_DELTA_ITER} iterations (last change {prev_change:.3e})"
        )));
    }
    let py = y.component_mul(&mask);
    Ok(SymMatrix::from_dmatrix(op.diag_part(&py)))
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Sufficient conditions for tightness on `g` under a concrete edit.
pub fn check_sufficient(g: &Graph, edit: &EditSet, params: &CertificateParams, tol: f64) -> Result<CertificateReport> {
    let es = eigenspaces(&g.adjacency(), DEFAULT_GROUPING_TOL)?;
    check_sufficient_with(&es, edit, params, tol)
}

/// [`check_sufficient`] against a precomputed eigenstructure.
pub fn check_sufficient_with(
    es: &EigStructure,
    edit: &EditSet,
    params: &CertificateParams,
    tol: f64,
) -> Result<CertificateReport> {
    let m = es.m();
    params.validate(m)?;
    let n = es.n();
    let d = edit.max_degree().max(1);
    let mask = support_mask(edit, n);
    let off_mask = mask.map(|v| 1.0 - v);

    let r = es.combine(&params.gamma);
    let sign = edit.matrix(n);
    let mm = SymMatrix::from_dmatrix(sign.as_matrix() - r.as_matrix().component_mul(&mask));
    let delta = build_delta(es, edit, &params.alpha, &mm, tol)?;
    let (dm, rm) = (delta.as_matrix(), r.as_matrix());

    let sign_err = inf_norm(&((dm + rm).component_mul(&mask) - sign.as_matrix()));
    let off = inf_norm(&dm.component_mul(&off_mask)) + inf_norm(&rm.component_mul(&off_mask));
    let mut block = 0.0_f64;
    let mut diag_norms = Vec::with_capacity(m);
    for i in 0..m {
        let pi = es.projectors[i].as_matrix();
        for j in 0..m {
            let b = pi * dm * es.projectors[j].as_matrix();
            if i == j {
                diag_norms.push(spectral_norm(&b));
            } else {
                block = block.max(inf_norm(&b));
            }
        }
    }
    let mut spacing = f64::INFINITY;
    for i in 0..m.saturating_sub(1) {
        let gap = params.gamma[i + 1] - params.gamma[i];
        spacing = spacing.min(gap - diag_norms[i] - diag_norms[i + 1]);
    }
    let xu = xi_upper(&params.alpha, d, es)?;
    let xl = xi_lower(&params.alpha, d, es, DEFAULT_PROBES, 0)?.min(xu);
    let xs = xi_support(&params.alpha, edit, es)?;
    let (th_ok, th) = theorem_margins(es, d, params, xu)?;
    let q = &r + &delta;
    let normal_cone = check_normal_cone(&q, &es.combine(&es.distinct_values), tol.max(1e-9))?;

    let margins = ConditionMargins {
        sign_match: tol - sign_err,
        off_support: 1.0 - off,
        block_diagonal: tol - block,
        spacing,
        xi_below_one: 1.0 - xu,
        theorem_contraction: th.theorem_contraction,
        theorem_spacing: th.theorem_spacing,
    };
    let flags = ConditionFlags {
        sign_match: margins.sign_match >= 0.0,
        off_support: margins.off_support > 0.0,
        block_diagonal: margins.block_diagonal >= 0.0,
        spacing: margins.spacing > 0.0,
        xi_below_one: margins.xi_below_one > 0.0,
        theorem_contraction: th_ok.theorem_contraction,
        theorem_spacing: th_ok.theorem_spacing,
    };
    Ok(CertificateReport {
        rho: rho(&params.gamma, es)?,
        xi_lower: xl,
        xi_upper: xu,
        xi_support: Some(xs),
        flags,
        margins,
        normal_cone: Some(normal_cone),
        q: Some(q),
        delta: Some(delta),
    })
}

/// Whether `Q` is in the relative interior of the normal cone of the
/// Schur-Horn orbitope at `A`: `Q` commutes with `A` and its compressions to
/// the eigenspaces of `A` (decreasing eigenvalue order) are strictly ordered.
pub fn check_normal_cone(q: &SymMatrix, a: &SymMatrix, tol: f64) -> Result<bool> {
    check_dim(a.dim(), q.dim())?;
    let (qm, am) = (q.as_matrix(), a.as_matrix());
    if inf_norm(&(qm * am - am * qm)) > tol {
        return Ok(false);
    }
    let es = eigenspaces(a, DEFAULT_GROUPING_TOL)?;
    let ranges: Vec<(f64, f64)> = es
        .bases
        .iter()
        .map(|b| {
            let c = b.transpose() * qm * b;
            let ev = ((&c + c.transpose()) * 0.5).symmetric_eigenvalues();
            let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    Ok(ranges.windows(2).all(|w| w[0].0 > w[1].1 + tol))
}

fn theorem_margins(
    es: &EigStructure,
    d: usize,
    params: &CertificateParams,
    xi: f64,
) -> Result<(ConditionFlags, ConditionMargins)> {
    params.validate(es.m())?;
    let r = rho(&params.gamma, es)?;
    let c1 = 1.0 - 2.0 * xi - r;
    let mut c2 = f64::INFINITY;
    for i in 0..es.m().saturating_sub(1) {
        let gap = params.gamma[i + 1] - params.gamma[i];
        let weight = params.alpha[i] + params.alpha[i + 1];
        let lhs = if xi < 1.0 {
            weight * (1.0 + r) * d as f64 / (1.0 - xi)
        } else if weight == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        c2 = c2.min(gap - lhs);
    }
    let flags = ConditionFlags { theorem_contraction: c1 > 0.0, theorem_spacing: c2 > 0.0, ..Default::default() };
    let margins = ConditionMargins { theorem_contraction: c1, theorem_spacing: c2, ..Default::default() };
    Ok((flags, margins))
}

/// Margins of the main theorem's two conditions, using `xi_upper` for `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub holds: bool,
    pub contraction: f64,
    pub spacing: f64,
    pub rho: f64,
    pub xi_upper: f64,
}

pub fn check_theorem(g: &Graph, d: usize, params: &CertificateParams) -> Result<TheoremCheck> {
    let es = eigenspaces(&g.adjacency(), DEFAULT_GROUPING_TOL)?;
    check_theorem_with(&es, d, params)
}

pub fn check_theorem_with(es: &EigStructure, d: usize, params: &CertificateParams) -> Result<TheoremCheck> {
    if d == 0 {
        return Err(Error::BadParams("d must be at least 1".into()));
    }
    params.validate(es.m())?;
    let xi = xi_upper(&params.alpha, d, es)?;
    let (f, m) = theorem_margins(es, d, params, xi)?;
    Ok(TheoremCheck {
        holds: f.theorem(),
        contraction: m.theorem_contraction,
        spacing: m.theorem_spacing,
        rho: rho(&params.gamma, es)?,
        xi_upper: xi,
    })
}

/// Parameters from the corollary's construction: `α` one-hot at the most
/// coherent eigenspace `ℓ`, `γ_{i+1} − γ_i = c1 (α_i + α_{i+1}) / μ̄² + eps`
/// with `μ̄` the second-largest incoherence, shifted so that `γ_ℓ = 0`.
pub fn default_params(es: &EigStructure, c1: f64, eps: f64) -> Result<CertificateParams> {
    if !check_projector_diagonal_uniformity(es, UNIFORMITY_TOL) {
        return Err(Error::NotUniform);
    }
    let m = es.m();
    if m == 0 {
        return Ok(CertificateParams { alpha: vec![], gamma: vec![] });
    }
    let l = es.most_coherent();
    let mut alpha = vec![0.0; m];
    alpha[l] = 1.0;
    let mut sorted = es.mu.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mu_bar = sorted.get(1).copied().unwrap_or(sorted[0]);
    let mut gamma = vec![0.0; m];
    for i in 0..m - 1 {
        gamma[i + 1] = gamma[i] + c1 * (alpha[i] + alpha[i + 1]) / (mu_bar * mu_bar) + eps;
    }
    let shift = gamma[l];
    gamma.iter_mut().for_each(|g| *g -= shift);
    Ok(CertificateParams { alpha, gamma })
}

/// `⌊c n / κ⌋` with `κ` the second-highest multiplicity.
pub fn corollary_bound(es: &EigStructure, c: f64) -> Result<usize> {
    if !check_projector_diagonal_uniformity(es, UNIFORMITY_TOL) {
        return Err(Error::NotUniform);
    }
    let kappa = es.kappa().max(1);
    Ok((c * es.n() as f64 / kappa as f64).floor().max(0.0) as usize)
}
