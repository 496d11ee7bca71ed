//! Invariant convex sets: the invariant functions `f` and `g`, membership
//! tests, tangent-cone checks and conic encodings.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::conic::{self, svec_index, svec_len, ConicBuilder, LinExpr, Settings, Status};
use crate::error::{check_dim, Error, Result};
use crate::graphs::Graph;
use crate::linalg::SymMatrix;
use crate::spectra::{eig_sym, is_majorized};

/// Solver tolerance used when evaluating `f` and `g`.
pub const INVARIANT_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SetKind {
    SH,
    IS,
    MC,
    Box,
    Loopless,
}

impl SetKind {
    pub const ALL: [SetKind; 5] = [SetKind::SH, SetKind::IS, SetKind::MC, SetKind::Box, SetKind::Loopless];

    pub fn name(self) -> &'static str {
        match self {
            SetKind::SH => "sh",
            SetKind::IS => "is",
            SetKind::MC => "mc",
            SetKind::Box => "box",
            SetKind::Loopless => "loopless",
        }
    }

    /// Parses a comma-separated list such as `sh,is,mc`.
    pub fn parse_list(s: &str) -> Result<Vec<SetKind>> {
        let mut out: Vec<SetKind> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(SetKind::from_str)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::BadParams("empty set list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sh" => Ok(SetKind::SH),
            "is" => Ok(SetKind::IS),
            "mc" => Ok(SetKind::MC),
            "box" => Ok(SetKind::Box),
            "loopless" => Ok(SetKind::Loopless),
            other => Err(Error::BadParams(format!("unknown set kind '{other}'"))),
        }
    }
}

/// An invariant convex set of symmetric matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum InvariantSet {
    /// Convex hull of the symmetric matrices with spectrum `lam` (sorted descending).
    SchurHorn(Vec<f64>),
    /// `{M : f(M) ≥ level}`.
    InvStability(f64),
    /// `{M : g(M) ≤ level}`.
    MaxCut(f64),
    /// `0 ≤ M_ij ≤ 1`.
    Box01,
    /// `M_ii = 0`.
    Loopless,
    Intersection(Vec<InvariantSet>),
}

impl InvariantSet {
    pub fn validate(&self) -> Result<()> {
        match self {
            InvariantSet::SchurHorn(lam) => {
                if lam.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::BadParams("Schur-Horn spectrum must be sorted descending".into()));
                }
            }
            InvariantSet::InvStability(level) => {
                if !(*level > 0.0 && level.is_finite()) {
                    return Err(Error::BadParams(format!("inverse-stability level {level} must be positive")));
                }
            }
            InvariantSet::MaxCut(level) => {
                // Allow solver round-off just below zero.
                if !(*level >= -1e-6 && level.is_finite()) {
                    return Err(Error::BadParams(format!("max-cut level {level} must be nonnegative")));
                }
            }
            InvariantSet::Box01 | InvariantSet::Loopless => {}
            InvariantSet::Intersection(parts) => {
                if parts.is_empty() {
                    return Err(Error::BadParams("empty intersection".into()));
                }
                for p in parts {
                    if matches!(p, InvariantSet::Intersection(_)) {
                        return Err(Error::BadParams("nested intersection".into()));
                    }
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Members of an intersection, or the set itself.
    pub fn parts(&self) -> Vec<&InvariantSet> {
        match self {
            InvariantSet::Intersection(p) => p.iter().collect(),
            other => vec![other],
        }
    }

    pub fn contains_kind(&self, kind: SetKind) -> bool {
        self.parts().iter().any(|p| p.kind() == Some(kind))
    }

    pub fn kind(&self) -> Option<SetKind> {
        match self {
            InvariantSet::SchurHorn(_) => Some(SetKind::SH),
            InvariantSet::InvStability(_) => Some(SetKind::IS),
            InvariantSet::MaxCut(_) => Some(SetKind::MC),
            InvariantSet::Box01 => Some(SetKind::Box),
            InvariantSet::Loopless => Some(SetKind::Loopless),
            InvariantSet::Intersection(_) => None,
        }
    }

    /// Builds a single set or a flat intersection.
    pub fn intersect(mut sets: Vec<InvariantSet>) -> InvariantSet {
        let mut flat = Vec::new();
        for s in sets.drain(..) {
            match s {
                InvariantSet::Intersection(p) => flat.extend(p),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            InvariantSet::Intersection(flat)
        }
    }
}

/// Variable layout of a symmetric matrix variable inside a [`ConicBuilder`]:
/// raw entries `M_ij`, `i <= j`, row-major from `offset`.
#[derive(Clone, Copy, Debug)]
pub struct MatVar {
    pub n: usize,
    pub offset: usize,
}

impl MatVar {
    pub fn alloc(b: &mut ConicBuilder, n: usize) -> Self {
        Self { n, offset: b.new_vars(svec_len(n)) }
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        let (a, c) = if i <= j { (i, j) } else { (j, i) };
        self.offset + svec_index(self.n, a, c)
    }

    pub fn len(&self) -> usize {
        svec_len(self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Reads the matrix back from a solution vector.
    pub fn extract(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::from_upper_fn(self.n, |i, j| x[self.idx(i, j)])
    }
}

/// Structural size of the blocks emitted for one set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockCounts {
    pub zero_rows: usize,
    pub nonneg_rows: usize,
    pub psd_blocks: Vec<usize>,
    pub aux_vars: usize,
}

impl BlockCounts {
    fn add(&mut self, o: BlockCounts) {
        self.zero_rows += o.zero_rows;
        self.nonneg_rows += o.nonneg_rows;
        self.psd_blocks.extend(o.psd_blocks);
        self.aux_vars += o.aux_vars;
    }
}

/// Adds the constraints `X ∈ s` to `b`, where `X` is the matrix variable `x`.
pub fn emit_conic_blocks(s: &InvariantSet, b: &mut ConicBuilder, x: &MatVar) -> Result<BlockCounts> {
    let n = x.n;
    let before_vars = b.num_vars();
    let (z0, n0, p0) = b.counts();
    match s {
        InvariantSet::SchurHorn(lam) => {
            check_dim(n, lam.len())?;
            let mut tr = LinExpr::constant(-lam.iter().sum::<f64>());
            for i in 0..n {
                tr = tr.term(x.idx(i, i), 1.0);
            }
            b.add_zero(tr);
            let mut prefix = 0.0;
            for k in 1..n {
                prefix += lam[k - 1];
                let z = b.new_vars(1);
                let zm = MatVar::alloc(b, n);
                let mut entries_z = Vec::with_capacity(zm.len());
                let mut entries_diff = Vec::with_capacity(zm.len());
                for i in 0..n {
                    for j in i..n {
                        entries_z.push(LinExpr::var(zm.idx(i, j)));
                        let mut e = LinExpr::var(zm.idx(i, j)).term(x.idx(i, j), -1.0);
                        if i == j {
                            e = e.term(z, 1.0);
                        }
                        entries_diff.push(e);
                    }
                }
                b.add_psd(n, entries_z);
                b.add_psd(n, entries_diff);
                let mut cap = LinExpr::constant(prefix).term(z, -(k as f64));
                for i in 0..n {
                    cap = cap.term(zm.idx(i, i), -1.0);
                }
                b.add_nonneg(cap);
            }
        }
        InvariantSet::InvStability(level) => {
            let mu = MatVar::alloc(b, n);
            let mut entries = Vec::with_capacity(mu.len());
            for i in 0..n {
                for j in i..n {
                    b.add_nonneg(LinExpr::var(mu.idx(i, j)));
                    let eye = if i == j { 1.0 } else { 0.0 };
                    entries.push(LinExpr::var(x.idx(i, j)).term(mu.idx(i, j), -1.0).plus(eye - level));
                }
            }
            b.add_psd(n, entries);
        }
        InvariantSet::MaxCut(level) => {
            let d = b.new_vars(n);
            let mut entries = Vec::with_capacity(svec_len(n));
            for i in 0..n {
                for j in i..n {
                    let mut e = LinExpr::var(x.idx(i, j));
                    if i == j {
                        e = e.term(d + i, -1.0);
                    }
                    entries.push(e);
                }
            }
            b.add_psd(n, entries);
            let mut cut = LinExpr::constant(*level);
            for i in 0..n {
                cut = cut.term(d + i, 0.25);
                for j in i..n {
                    cut = cut.term(x.idx(i, j), if i == j { -0.25 } else { -0.5 });
                }
            }
            b.add_nonneg(cut);
        }
        InvariantSet::Box01 => {
            for i in 0..n {
                for j in i..n {
                    b.add_nonneg(LinExpr::var(x.idx(i, j)));
                    b.add_nonneg(LinExpr::constant(1.0).term(x.idx(i, j), -1.0));
                }
            }
        }
        InvariantSet::Loopless => {
            for i in 0..n {
                b.add_zero(LinExpr::var(x.idx(i, i)));
            }
        }
        InvariantSet::Intersection(parts) => {
            let mut total = BlockCounts::default();
            for p in parts {
                total.add(emit_conic_blocks(p, b, x)?);
            }
            return Ok(total);
        }
    }
    let (z1, n1, p1) = b.counts();
    Ok(BlockCounts {
        zero_rows: z1 - z0,
        nonneg_rows: n1 - n0,
        psd_blocks: p1[p0.len()..].to_vec(),
        aux_vars: b.num_vars() - before_vars,
    })
}

fn invariant_settings() -> Settings {
    Settings { tol: INVARIANT_TOL, max_iter: 100_000, ..Settings::default() }
}

/// Primal and dual objective values of a solve that must reach optimality.
fn solve_values(b: &ConicBuilder, what: &str) -> Result<(f64, f64)> {
    let prob = b.build();
    let sol = conic::solve(&prob, &invariant_settings())?;
    if sol.status != Status::Optimal {
        return Err(Error::SolverFailure(format!("{what}: status {:?}", sol.status)));
    }
    Ok((sol.objective, sol.dual_objective(&prob.b)))
}

/// Primal and dual values of `min Tr(X(I+A)) s.t. X ⪰ 0, X ≥ 0, 1ᵀX1 = 1`.
fn f_values(a: &SymMatrix) -> Result<(f64, f64)> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::BadParams("f of an empty matrix".into()));
    }
    let mut b = ConicBuilder::new();
    let x = MatVar::alloc(&mut b, n);
    let mut total = LinExpr::constant(-1.0);
    let mut entries = Vec::with_capacity(x.len());
    for i in 0..n {
        for j in i..n {
            let w = if i == j { 1.0 + a.get(i, i) } else { 2.0 * a.get(i, j) };
            b.add_objective(x.idx(i, j), w);
            b.add_nonneg(LinExpr::var(x.idx(i, j)));
            total = total.term(x.idx(i, j), if i == j { 1.0 } else { 2.0 });
            entries.push(LinExpr::var(x.idx(i, j)));
        }
    }
    b.add_zero(total);
    b.add_psd(n, entries);
    solve_values(&b, "f")
}

/// Primal and dual values of `max ¼Tr(A(11ᵀ − X)) s.t. X ⪰ 0, X_ii = 1`.
fn g_values(a: &SymMatrix) -> Result<(f64, f64)> {
    let n = a.dim();
    let quarter_total = 0.25 * a.total_sum();
    if a.max_abs() == 0.0 {
        return Ok((0.0, 0.0));
    }
    // min ¼Tr(AX) over the elliptope, then subtract from ¼1ᵀA1.
    let mut b = ConicBuilder::new();
    let x = MatVar::alloc(&mut b, n);
    let mut entries = Vec::with_capacity(x.len());
    for i in 0..n {
        for j in i..n {
            if i == j {
                b.add_zero(LinExpr::var(x.idx(i, i)).plus(-1.0));
                b.add_objective(x.idx(i, i), 0.25 * a.get(i, i));
            } else {
                b.add_objective(x.idx(i, j), 0.5 * a.get(i, j));
            }
            entries.push(LinExpr::var(x.idx(i, j)));
        }
    }
    b.add_psd(n, entries);
    let (p, d) = solve_values(&b, "g")?;
    Ok((quarter_total - p, quarter_total - d))
}

/// Motzkin-Straus type relaxation `f(A) = min Tr(X(I+A))` over `X ⪰ 0, X ≥ 0, 1ᵀX1 = 1`.
pub fn f_value(a: &SymMatrix) -> Result<f64> {
    Ok(f_values(a)?.0)
}

/// Max-cut relaxation `g(A) = max ¼Tr(A(11ᵀ − X))` over `X ⪰ 0, X_ii = 1`.
pub fn g_value(a: &SymMatrix) -> Result<f64> {
    Ok(g_values(a)?.0)
}

/// Builds the set of `kind` around the matrix `m` (adjacency or vertex-indexed).
///
/// Levels of the IS and MC sets take the looser of the primal and dual solver
/// values, so solver round-off never shrinks the set below the exact one.
pub fn make_set_for_matrix(m: &SymMatrix, kind: SetKind) -> Result<InvariantSet> {
    Ok(match kind {
        SetKind::SH => InvariantSet::SchurHorn(eig_sym(m)?.values),
        SetKind::IS => {
            let (p, d) = f_values(m)?;
            InvariantSet::InvStability(p.min(d))
        }
        SetKind::MC => {
            let (p, d) = g_values(m)?;
            InvariantSet::MaxCut(p.max(d).max(0.0))
        }
        SetKind::Box => InvariantSet::Box01,
        SetKind::Loopless => InvariantSet::Loopless,
    })
}

pub fn make_set(g: &Graph, kind: SetKind) -> Result<InvariantSet> {
    make_set_for_matrix(&g.adjacency(), kind)
}

/// Intersection of the sets of all `kinds` around `m`.
pub fn make_sets_for_matrix(m: &SymMatrix, kinds: &[SetKind]) -> Result<InvariantSet> {
    if kinds.is_empty() {
        return Err(Error::BadParams("no set kinds given".into()));
    }
    let sets = kinds.iter().map(|&k| make_set_for_matrix(m, k)).collect::<Result<Vec<_>>>()?;
    Ok(InvariantSet::intersect(sets))
}

/// Whether `m` lies in `s` within `tol`.
pub fn membership(s: &InvariantSet, m: &SymMatrix, tol: f64) -> Result<bool> {
    let n = m.dim();
    Ok(match s {
        InvariantSet::SchurHorn(lam) => {
            check_dim(lam.len(), n)?;
            is_majorized(&eig_sym(m)?.values, lam, tol)
        }
        InvariantSet::InvStability(level) => f_value(m)? >= level - tol,
        InvariantSet::MaxCut(level) => g_value(m)? <= level + tol,
        InvariantSet::Box01 => m.as_matrix().iter().all(|&v| v >= -tol && v <= 1.0 + tol),
        InvariantSet::Loopless => (0..n).all(|i| m.get(i, i).abs() <= tol),
        InvariantSet::Intersection(parts) => {
            for p in parts {
                if !membership(p, m, tol)? {
                    return Ok(false);
                }
            }
            true
        }
    })
}

/// Largest `t ≤ 1` with `T + I + A − f(A)11ᵀ − μ ⪰ tI` for some `μ ≥ 0`.
///
/// `T` is tangent to the inverse-stability set at `A` exactly when the value is `≥ 0`.
pub fn tangent_margin(g: &Graph, t: &SymMatrix) -> Result<f64> {
    let n = g.n();
    check_dim(n, t.dim())?;
    let a = g.adjacency();
    let alpha = f_value(&a)?;
    let mut b = ConicBuilder::new();
    let tv = b.new_vars(1);
    b.add_objective(tv, -1.0);
    b.add_nonneg(LinExpr::constant(1.0).term(tv, -1.0));
    let mu = MatVar::alloc(&mut b, n);
    let mut entries = Vec::with_capacity(mu.len());
    for i in 0..n {
        for j in i..n {
            b.add_nonneg(LinExpr::var(mu.idx(i, j)));
            let eye = if i == j { 1.0 } else { 0.0 };
            let mut e = LinExpr::constant(t.get(i, j) + eye + a.get(i, j) - alpha).term(mu.idx(i, j), -1.0);
            if i == j {
                e = e.term(tv, -1.0);
            }
            entries.push(e);
        }
    }
    b.add_psd(n, entries);
    let (p, _) = solve_values(&b, "tangent")?;
    Ok(-p)
}

/// Whether `T` lies in the tangent cone of the inverse-stability set of `g` at its adjacency matrix.
pub fn check_is_tangent(g: &Graph, t: &SymMatrix, tol: f64) -> Result<bool> {
    Ok(tangent_margin(g, t)? >= -tol)
}
