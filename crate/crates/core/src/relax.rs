//! Convex relaxations of graph edit distance over invariant sets.

use serde::Serialize;

use crate::conic::{self, ConicBuilder, ConicProblem, LinExpr, Settings, Status};
use crate::error::{check_dim, Error, Result};
use crate::graphs::{Graph, VertexIndexedAdjacency};
use crate::linalg::SymMatrix;
use crate::sets::{emit_conic_blocks, make_sets_for_matrix, InvariantSet, MatVar, SetKind};
use crate::spectra::{eig_sym, project_schur_horn};

/// Threshold of [`success_check`].
pub const SUCCESS_THRESHOLD: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct ShAdmmSettings {
    /// Initial penalty parameter.
    pub rho: f64,
    /// Relative tolerance on the primal-dual gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Residual balancing of `rho`.
    pub adapt: bool,
}

impl Default for ShAdmmSettings {
    fn default() -> Self {
        Self { rho: 1.0, tol: 1e-6, max_iter: 50_000, adapt: true }
    }
}

#[derive(Clone, Debug)]
pub struct BoundSettings {
    pub conic: Settings,
    pub sh_admm: ShAdmmSettings,
    /// Solve Schur-Horn-only problems with [`sh_admm`] instead of the conic solver.
    pub sh_fast_path: bool,
}

/// Conic tolerance for bound computations; the ℓ₁ objective sums `n²`
/// residual-sized errors, so this is tighter than the solver default.
pub const BOUND_TOL: f64 = 1e-8;

impl Default for BoundSettings {
    fn default() -> Self {
        Self { conic: Settings::with_tol(BOUND_TOL), sh_admm: ShAdmmSettings::default(), sh_fast_path: false }
    }
}

impl BoundSettings {
    pub fn fast() -> Self {
        Self { sh_fast_path: true, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    G1toG2,
    G2toG1,
    /// Larger of both directions; `forward_won` when `G1 → G2` attained it.
    MaxOfBoth { forward_won: bool },
}

#[derive(Clone, Debug)]
pub struct BoundResult {
    /// Bound in edit units (scaled by the edit cost for extended problems).
    pub lower_bound: f64,
    pub e_hat: SymMatrix,
    pub x_hat: SymMatrix,
    pub status: Status,
    pub direction: Direction,
    /// Dual objective; certified when the solver's dual iterate is feasible
    /// (always for [`sh_admm`]).
    pub dual_bound: Option<f64>,
    pub iterations: usize,
    /// `(forward, reverse)` values for symmetric bounds.
    pub directed: Option<(f64, f64)>,
}

/// A formulated program with the variable layout needed to read it back.
#[derive(Clone, Debug)]
pub struct Formulation {
    pub problem: ConicProblem,
    pub x: MatVar,
    pub e_plus: MatVar,
    pub e_minus: MatVar,
    pub extended: bool,
}

fn formulate(a2: &SymMatrix, set: &InvariantSet, extended: bool) -> Result<Formulation> {
    set.validate()?;
    let n = a2.dim();
    let mut b = ConicBuilder::new();
    let x = MatVar::alloc(&mut b, n);
    let e_plus = MatVar::alloc(&mut b, n);
    let e_minus = MatVar::alloc(&mut b, n);
    for i in 0..n {
        for j in i..n {
            let w = if extended || i != j { 1.0 } else { 0.5 };
            b.add_objective(e_plus.idx(i, j), w);
            b.add_objective(e_minus.idx(i, j), w);
            b.add_zero(
                LinExpr::var(x.idx(i, j))
                    .term(e_plus.idx(i, j), 1.0)
                    .term(e_minus.idx(i, j), -1.0)
                    .plus(-a2.get(i, j)),
            );
            b.add_nonneg(LinExpr::var(e_plus.idx(i, j)));
            b.add_nonneg(LinExpr::var(e_minus.idx(i, j)));
        }
    }
    emit_conic_blocks(set, &mut b, &x)?;
    if extended {
        if !set.contains_kind(SetKind::Box) {
            emit_conic_blocks(&InvariantSet::Box01, &mut b, &x)?;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                b.add_nonneg(LinExpr::var(x.idx(i, i)).term(x.idx(i, j), -1.0));
                b.add_nonneg(LinExpr::var(x.idx(j, j)).term(x.idx(i, j), -1.0));
            }
        }
    }
    Ok(Formulation { problem: b.build(), x, e_plus, e_minus, extended })
}

/// `min ½‖E‖₁ s.t. X + E = a2, X ∈ set`.
pub fn formulate_p(a2: &SymMatrix, set: &InvariantSet) -> Result<Formulation> {
    formulate(a2, set, false)
}

/// `min Σ_{i≤j} |E_ij| s.t. X + E = a2v, X ∈ set, 0 ≤ X ≤ 1, X_ij ≤ X_ii, X_ij ≤ X_jj`.
pub fn formulate_p_ext(
    a1v: &VertexIndexedAdjacency,
    a2v: &VertexIndexedAdjacency,
    set_g1: &InvariantSet,
) -> Result<Formulation> {
    check_dim(a1v.n(), a2v.n())?;
    if set_g1.contains_kind(SetKind::Loopless) {
        return Err(Error::BadParams("the loopless set excludes vertex-indexed matrices".into()));
    }
    formulate(a2v.matrix(), set_g1, true)
}

fn objective_of(e: &SymMatrix, extended: bool) -> f64 {
    if extended {
        e.upper_l1_norm()
    } else {
        0.5 * e.l1_norm()
    }
}

/// Solves a formulation with the conic solver.
pub fn solve_formulation(f: &Formulation, settings: &Settings) -> Result<BoundResult> {
    let sol = conic::solve(&f.problem, settings)?;
    match sol.status {
        Status::Optimal | Status::MaxIterations => {}
        s => return Err(Error::SolverFailure(format!("relaxation reported {s:?}"))),
    }
    let x_hat = f.x.extract(&sol.x);
    let e_hat = &f.e_plus.extract(&sol.x) - &f.e_minus.extract(&sol.x);
    Ok(BoundResult {
        lower_bound: objective_of(&e_hat, f.extended),
        dual_bound: Some(sol.dual_objective(&f.problem.b)),
        e_hat,
        x_hat,
        status: sol.status,
        direction: Direction::G1toG2,
        iterations: sol.iterations,
        directed: None,
    })
}

/// Bound of (P) for a prebuilt set of `G1` against target `a2`.
pub fn lower_bound_with_set(set: &InvariantSet, a2: &SymMatrix, settings: &BoundSettings) -> Result<BoundResult> {
    if let (true, InvariantSet::SchurHorn(lam)) = (settings.sh_fast_path, set) {
        return sh_admm(a2, lam, &settings.sh_admm);
    }
    solve_formulation(&formulate_p(a2, set)?, &settings.conic)
}

/// Lower bound on `GED(G1, G2)` from (P) over the intersection of `kinds` built around `G1`.
pub fn lower_bound(g1: &Graph, g2: &Graph, kinds: &[SetKind], settings: &BoundSettings) -> Result<BoundResult> {
    check_dim(g1.n(), g2.n())?;
    let set = make_sets_for_matrix(&g1.adjacency(), kinds)?;
    lower_bound_with_set(&set, &g2.adjacency(), settings)
}

fn max_of_both(fwd: BoundResult, rev: BoundResult) -> BoundResult {
    let values = (fwd.lower_bound, rev.lower_bound);
    let forward_won = fwd.lower_bound >= rev.lower_bound;
    let mut best = if forward_won { fwd } else { rev };
    best.direction = Direction::MaxOfBoth { forward_won };
    best.directed = Some(values);
    best
}

/// `max(LB(G1 → G2), LB(G2 → G1))`.
pub fn symmetric_lower_bound(
    g1: &Graph,
    g2: &Graph,
    kinds: &[SetKind],
    settings: &BoundSettings,
) -> Result<BoundResult> {
    let fwd = lower_bound(g1, g2, kinds, settings)?;
    let mut rev = lower_bound(g2, g1, kinds, settings)?;
    rev.direction = Direction::G2toG1;
    Ok(max_of_both(fwd, rev))
}

/// Bound of (P_ext) in both directions, scaled by `cost_per_edit`.
///
/// Graphs may differ in size; both are padded to the larger vertex count.
pub fn lower_bound_ext(
    g1: &Graph,
    g2: &Graph,
    kinds: &[SetKind],
    cost_per_edit: f64,
    settings: &BoundSettings,
) -> Result<BoundResult> {
    let n = g1.n().max(g2.n());
    let a1v = VertexIndexedAdjacency::from_graph(g1, n)?;
    let a2v = VertexIndexedAdjacency::from_graph(g2, n)?;
    let set1 = make_sets_for_matrix(a1v.matrix(), kinds)?;
    let set2 = make_sets_for_matrix(a2v.matrix(), kinds)?;
    lower_bound_ext_with_sets(&a1v, &a2v, &set1, &set2, cost_per_edit, settings)
}

/// As [`lower_bound_ext`] with prebuilt sets around each vertex-indexed matrix.
pub fn lower_bound_ext_with_sets(
    a1v: &VertexIndexedAdjacency,
    a2v: &VertexIndexedAdjacency,
    set1: &InvariantSet,
    set2: &InvariantSet,
    cost_per_edit: f64,
    settings: &BoundSettings,
) -> Result<BoundResult> {
    if !(cost_per_edit > 0.0 && cost_per_edit.is_finite()) {
        return Err(Error::BadParams(format!("edit cost {cost_per_edit} must be positive")));
    }
    let fwd = solve_formulation(&formulate_p_ext(a1v, a2v, set1)?, &settings.conic)?;
    let mut rev = solve_formulation(&formulate_p_ext(a2v, a1v, set2)?, &settings.conic)?;
    rev.direction = Direction::G2toG1;
    let mut best = max_of_both(fwd, rev);
    best.lower_bound *= cost_per_edit;
    best.dual_bound = best.dual_bound.map(|d| d * cost_per_edit);
    best.directed = best.directed.map(|(a, b)| (a * cost_per_edit, b * cost_per_edit));
    Ok(best)
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `min_{Y'} ⟨Y', X⟩` over the Schur-Horn orbitope, i.e. `Σ λ↓(Y)_i λ↑(lam)_i`.
fn orbitope_min_inner(y: &SymMatrix, lam_desc: &[f64]) -> Result<f64> {
    let vals = eig_sym(y)?.values;
    Ok(vals.iter().zip(lam_desc.iter().rev()).map(|(a, b)| a * b).sum())
}

/// Two-block ADMM for `min ½‖a2 − X‖₁` over the Schur-Horn orbitope of `lam`.
///
/// Alternates the orbitope projection with entrywise soft-thresholding. The
/// reported `dual_bound` comes from the clipped scaled multiplier and is a
/// certified lower bound on the optimum; `lower_bound` is the objective at the
/// best feasible iterate.
pub fn sh_admm(a2: &SymMatrix, lam: &[f64], s: &ShAdmmSettings) -> Result<BoundResult> {
    let n = a2.dim();
    check_dim(n, lam.len())?;
    let mut lam_desc = lam.to_vec();
    lam_desc.sort_by(|a, b| b.total_cmp(a));
    if !(s.rho > 0.0) {
        return Err(Error::BadParams("rho must be positive".into()));
    }

    let a = a2.as_matrix();
    let mut rho = s.rho;
    let mut e = a2.clone();
    let mut u = SymMatrix::zeros(n);
    let mut best_x = project_schur_horn(&SymMatrix::zeros(n), &lam_desc)?;
    let mut best_p = objective_of(&(a2 - &best_x), false);
    let mut best_d = f64::NEG_INFINITY;
    let mut status = Status::MaxIterations;
    let mut iterations = s.max_iter;

    for it in 0..s.max_iter {
        let target = SymMatrix::from_dmatrix_unchecked(a - e.as_matrix() - u.as_matrix());
        let x = project_schur_horn(&target, &lam_desc)?;
        let thr = 0.5 / rho;
        let v = a - x.as_matrix() - u.as_matrix();
        let e_new = SymMatrix::from_dmatrix_unchecked(v.map(|z| soft(z, thr)));
        let r = x.as_matrix() + e_new.as_matrix() - a;
        let r_norm = r.norm();
        let s_norm = rho * (e_new.as_matrix() - e.as_matrix()).norm();
        u = SymMatrix::from_dmatrix_unchecked(u.as_matrix() + &r);
        e = e_new;

        let p = objective_of(&(a2 - &x), false);
        if p < best_p {
            best_p = p;
            best_x = x;
        }
        if (it + 1) % 10 == 0 || it + 1 == s.max_iter {
            let y = u.scale(rho).map(|z| z.clamp(-0.5, 0.5));
            let d = orbitope_min_inner(&y, &lam_desc)? - y.inner(a2);
            best_d = best_d.max(d);
            if best_p - best_d <= s.tol * (1.0 + best_p.abs()) {
                status = Status::Optimal;
                iterations = it + 1;
                break;
            }
        }
        if s.adapt {
            if r_norm > 10.0 * s_norm {
                rho *= 2.0;
                u = u.scale(0.5);
            } else if s_norm > 10.0 * r_norm {
                rho *= 0.5;
                u = u.scale(2.0);
            }
        }
    }
    let e_hat = a2 - &best_x;
    Ok(BoundResult {
        lower_bound: best_p,
        e_hat,
        x_hat: best_x,
        status,
        direction: Direction::G1toG2,
        dual_bound: Some(best_d),
        iterations,
        directed: None,
    })
}

/// `‖E_hat − E*‖_∞ < 0.01`.
pub fn success_check(e_hat: &SymMatrix, e_star: &SymMatrix) -> bool {
    e_hat.dim() == e_star.dim() && (e_hat - e_star).max_abs() < SUCCESS_THRESHOLD
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::extremal_e;
    use crate::graphs::{apply_edits, exact_ged_ext, EditSet};

    fn cospectral_pair() -> (Graph, Graph) {
        let star = Graph::star(4);
        let c4 = Graph::new(5, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        (star, c4)
    }

    #[test]
    fn variable_counts() {
        let lam = vec![2.0, 1.0, 0.0, -1.0, -2.0];
        let f = formulate_p(&SymMatrix::zeros(5), &InvariantSet::SchurHorn(lam)).unwrap();
        // X, E+, E- (15 each) and per k: z_k plus a 15-entry Z_k.
        assert_eq!(f.problem.num_vars(), 45 + 4 * 16);
        assert_eq!(f.problem.cones.psd.len(), 8);
        let f = formulate_p(&SymMatrix::zeros(4), &InvariantSet::Box01).unwrap();
        assert!(f.problem.cones.psd.is_empty());
    }

    #[test]
    fn identical_graphs_give_zero() {
        let g = Graph::cycle(5);
        for kinds in [vec![SetKind::SH], vec![SetKind::IS], vec![SetKind::MC], vec![SetKind::Box]] {
            let r = lower_bound(&g, &g, &kinds, &BoundSettings::default()).unwrap();
            assert!(r.lower_bound.abs() < 1e-5, "{kinds:?}: {}", r.lower_bound);
        }
        let r = sh_admm(&g.adjacency(), &eig_sym(&g.adjacency()).unwrap().values, &ShAdmmSettings::default()).unwrap();
        assert!(r.lower_bound < 1e-5);
    }

    #[test]
    fn cospectral_pair_gives_zero() {
        let (star, c4) = cospectral_pair();
        let r = lower_bound(&star, &c4, &[SetKind::SH], &BoundSettings::default()).unwrap();
        assert!(r.lower_bound.abs() < 1e-5, "{}", r.lower_bound);
        let r = lower_bound(&star, &c4, &[SetKind::SH], &BoundSettings::fast()).unwrap();
        assert!(r.lower_bound.abs() < 1e-5, "{}", r.lower_bound);
        let sym = symmetric_lower_bound(&c4, &star, &[SetKind::SH], &BoundSettings::default()).unwrap();
        let (a, b) = sym.directed.unwrap();
        assert!(sym.lower_bound >= a.max(b) - 1e-12);
        assert!(matches!(sym.direction, Direction::MaxOfBoth { .. }));
    }

    #[test]
    fn inverse_stability_detects_triangle_deletion() {
        let g = extremal_e(9).unwrap();
        let (a, b) = g.edges().find(|&(a, b)| a != 0 && b != 0).unwrap();
        let e = EditSet::new([], [(a, b)]).unwrap();
        let g2 = apply_edits(&g, &e).unwrap();
        let r = lower_bound(&g, &g2, &[SetKind::IS], &BoundSettings::default()).unwrap();
        assert!(r.lower_bound > 1e-3 && r.lower_bound <= 1.0 + 1e-5, "{}", r.lower_bound);
    }

    #[test]
    fn extended_examples() {
        let k2 = Graph::complete(2);
        let k3 = Graph::complete(3);
        let s = BoundSettings::default();
        let r = lower_bound_ext(&k3, &k3, &[SetKind::SH], 1.0, &s).unwrap();
        assert!(r.lower_bound.abs() < 1e-5);
        let raw = lower_bound_ext(&k2, &k3, &[SetKind::Box], 1.0, &s).unwrap();
        let exact = exact_ged_ext(&k2, &k3).unwrap() as f64;
        assert!(raw.lower_bound >= -1e-6 && raw.lower_bound <= exact + 1e-4);
        let sh = lower_bound_ext(&k2, &k3, &[SetKind::SH], 1.0, &s).unwrap();
        let sh3 = lower_bound_ext(&k2, &k3, &[SetKind::SH], 3.0, &s).unwrap();
        assert!((sh3.lower_bound - 3.0 * sh.lower_bound).abs() < 1e-9);
        assert!(sh.lower_bound <= exact + 1e-4);
        assert!(lower_bound_ext(&k2, &k3, &[SetKind::Loopless], 1.0, &s).is_err());
    }

    #[test]
    fn extended_objective_counts_diagonal_once() {
        let mut e = SymMatrix::zeros(3);
        e.set(1, 1, 1.0);
        assert_eq!(objective_of(&e, true), 1.0);
        assert_eq!(objective_of(&e, false), 0.5);
    }

    #[test]
    fn success_threshold() {
        let e = EditSet::new([(0, 1)], [(1, 2)]).unwrap().matrix(3);
        assert!(success_check(&e, &e));
        let mut off = e.clone();
        off.set(0, 2, 0.02);
        assert!(!success_check(&off, &e));
        assert!(success_check(&e.map(|v| v + 0.005), &e));
    }
}
