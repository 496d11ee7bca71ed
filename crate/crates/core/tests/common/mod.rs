//! Helpers and independent oracles shared by the integration tests.
#![allow(dead_code)]

use gedlb::graphs::{apply_edits, random_edits, EditSet};
use gedlb::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Erdős–Rényi graph `G(n, p)`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// A random graph and a random edit of it with `1..=max_edits` edits.
pub fn random_pair(n: usize, max_edits: usize, seed: u64) -> (Graph, Graph, EditSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    loop {
        let g = random_graph(n, rng.gen_range(0.3..0.7), rng.gen());
        let count = rng.gen_range(1..=max_edits);
        let frac = rng.gen_range(0.0..=1.0);
        if let Ok(e) = random_edits(&g, count, frac, rng.gen()) {
            let g2 = apply_edits(&g, &e).unwrap();
            return (g, g2, e);
        }
    }
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1..(1usize << n) - 1).map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect()).collect()
}

/// Projection onto the permutahedron of `lam` by Dykstra's method over its
/// full inequality description: `Σ_{i∈S} y_i ≤ (sum of the |S| largest lam)`
/// for every proper subset `S`, and `Σ y = Σ lam`.
pub fn permutahedron_projection_oracle(x: &[f64], lam: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut ls = lam.to_vec();
    ls.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = vec![0.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + ls[k];
    }
    let mut cons: Vec<(Vec<usize>, f64, bool)> = subsets(n).into_iter().map(|s| {
        let b = prefix[s.len()];
        (s, b, false)
    }).collect();
    cons.push(((0..n).collect(), prefix[n], true));
    let mut y = x.to_vec();
    let mut corr = vec![vec![0.0; n]; cons.len()];
    for _sweep in 0..2_000_000 {
        let before = y.clone();
        let mut corr_change = 0.0_f64;
        for (c, (s, b, eq)) in cons.iter().enumerate() {
            let mut z: Vec<f64> = y.iter().zip(&corr[c]).map(|(a, p)| a + p).collect();
            let sum: f64 = s.iter().map(|&i| z[i]).sum();
            let viol = sum - b;
            let zp = z.clone();
            if *eq || viol > 0.0 {
                let shift = viol / s.len() as f64;
                for &i in s {
                    z[i] -= shift;
                }
            }
            for i in 0..n {
                let v = zp[i] - z[i];
                corr_change = corr_change.max((v - corr[c][i]).abs());
                corr[c][i] = v;
            }
            y = z;
        }
        let change = y.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // The iterate can stall while corrections are still moving.
        if change < 1e-14 && corr_change < 1e-13 {
            break;
        }
    }
    y
}

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Spectrum of the Johnson graph J(k, l) as (eigenvalue, multiplicity).
pub fn johnson_spectrum(k: usize, l: usize) -> Vec<(f64, usize)> {
    (0..=l.min(k - l))
        .map(|i| {
            let ev = (l as f64 - i as f64) * (k as f64 - l as f64 - i as f64) - i as f64;
            let mult = binom(k, i) - if i > 0 { binom(k, i - 1) } else { 0 };
            (ev, mult)
        })
        .collect()
}

/// Spectrum of the Hamming graph H(l, q).
pub fn hamming_spectrum(l: usize, q: usize) -> Vec<(f64, usize)> {
    (0..=l)
        .map(|i| (((q - 1) * l) as f64 - (q * i) as f64, binom(l, i) * (q - 1).pow(i as u32)))
        .collect()
}

/// Spectrum grouped from a graph, in decreasing eigenvalue order.
pub fn grouped_spectrum(g: &Graph) -> Vec<(f64, usize)> {
    let es = gedlb::spectra::eigenspaces(&g.adjacency(), gedlb::spectra::DEFAULT_GROUPING_TOL).unwrap();
    es.distinct_values.iter().copied().zip(es.multiplicities.iter().copied()).collect()
}

pub fn same_spectrum(a: &[(f64, usize)], b: &[(f64, usize)]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.retain(|p| p.1 > 0);
    b.retain(|p| p.1 > 0);
    a.sort_by(|x, y| y.0.total_cmp(&x.0));
    b.sort_by(|x, y| y.0.total_cmp(&x.0));
    a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x.0 - y.0).abs() < 1e-8 && x.1 == y.1)
}

/// Hand-written adjacencies of the bundled molecules, as 0-indexed edge lists.
pub fn mini_corpus_expected() -> Vec<(&'static str, usize, Vec<(usize, usize)>)> {
    vec![
        ("01_methane.ct", 1, vec![]),
        ("02_ethane.ct", 2, vec![(0, 1)]),
        ("03_propane.ct", 3, vec![(0, 1), (1, 2)]),
        ("04_isobutane.ct", 4, vec![(0, 1), (0, 2), (0, 3)]),
        ("05_neopentane.ct", 5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]),
        ("06_cyclopentane.ct", 5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
        ("07_benzene.ct", 6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)]),
        ("08_dimethylbutane.ct", 6, vec![(0, 1), (1, 2), (2, 3), (1, 4), (2, 5)]),
    ]
}

pub fn mini_corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini_ct")
}

/// `count` random edits of `g` whose support has at most `d` entries per
/// row; about half are additions.
pub fn bounded_degree_edits(g: &Graph, count: usize, d: usize, seed: u64) -> EditSet {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deg = vec![0usize; n];
    let (mut adds, mut dels) = (Vec::new(), Vec::new());
    let mut used = std::collections::HashSet::new();
    let mut attempts = 0;
    while adds.len() + dels.len() < count {
        attempts += 1;
        assert!(attempts < 100_000, "could not place {count} edits with degree {d}");
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (a, b) = (a.min(b), a.max(b));
        if a == b || deg[a] >= d || deg[b] >= d || !used.insert((a, b)) {
            continue;
        }
        let want_add = adds.len() < count / 2 + count % 2 * usize::from(rng.gen::<bool>());
        if g.has_edge(a, b) == want_add {
            used.remove(&(a, b));
            continue;
        }
        deg[a] += 1;
        deg[b] += 1;
        if want_add { adds.push((a, b)) } else { dels.push((a, b)) }
    }
    EditSet::new(adds, dels).unwrap()
}

/// `"t9"` or `"gq24"`.
pub fn test_graph(name: &str) -> Graph {
    match name {
        "t9" => gedlb::families::triangular(9).unwrap(),
        "gq24" => gedlb::families::gq24().unwrap(),
        _ => panic!("unknown test graph {name}"),
    }
}

/// One certificate-checking instance on a strongly regular test graph.
pub struct CertInstance {
    pub graph: &'static str,
    pub d: usize,
    pub seed: u64,
    pub report: gedlb::certify::CertificateReport,
    /// `(lhs, rhs)` of both norm-bound inequalities, evaluated with `ξ_Ω`.
    pub off_bound: (f64, f64),
    pub diag_bound: (f64, f64),
    /// Same right-hand sides with the generic `ξ` upper bound; infinite when it is ≥ 1.
    pub off_rhs_generic: f64,
    pub diag_rhs_generic: f64,
    pub p1_err: f64,
    pub p2_err: f64,
    /// Schur-Horn recovery of the planted edit.
    pub recovered: bool,
}

fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

fn spec_norm(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Runs the certificate checks on `count` edits of max degree `d` with the
/// corollary's parameter choice.
pub fn cert_instance(name: &'static str, count: usize, d: usize, seed: u64, solve: bool) -> CertInstance {
    use gedlb::certify::{check_sufficient_with, default_params};
    use gedlb::relax::{lower_bound, success_check, BoundSettings};
    use gedlb::sets::SetKind;
    use gedlb::spectra::{eigenspaces, DEFAULT_GROUPING_TOL};

    let g = test_graph(name);
    let n = g.n();
    let es = eigenspaces(&g.adjacency(), DEFAULT_GROUPING_TOL).unwrap();
    let params = default_params(&es, 0.1, 1.0).unwrap();
    let edit = bounded_degree_edits(&g, count, d, seed);
    let report = check_sufficient_with(&es, &edit, &params, 1e-10).unwrap();
    let delta = report.delta.as_ref().unwrap().as_matrix().clone();

    // Recompute M and the properties from scratch.
    let support = edit.support(n);
    let mask = nalgebra::DMatrix::from_fn(n, n, |i, j| if support[i][j] { 1.0 } else { 0.0 });
    let r = es.combine(&params.gamma);
    let m = edit.matrix(n).as_matrix() - r.as_matrix().component_mul(&mask);
    let m_norm = max_abs(&m);
    let p2_err = max_abs(&(&delta - &m).component_mul(&mask));
    let mut p1_err = 0.0_f64;
    let mut diag_lhs = 0.0_f64;
    for i in 0..es.m() {
        let pi = es.projectors[i].as_matrix();
        for j in 0..es.m() {
            let b = pi * &delta * es.projectors[j].as_matrix();
            if i != j {
                p1_err = p1_err.max(max_abs(&b));
            } else if params.alpha[i] > 0.0 {
                // Normalised by α_i so every block shares the bound d‖M‖/(1 − ξ).
                diag_lhs = diag_lhs.max(spec_norm(&b) / params.alpha[i]);
            } else {
                diag_lhs = diag_lhs.max(if spec_norm(&b) > 1e-9 { f64::INFINITY } else { 0.0 });
            }
        }
    }
    let off_lhs = max_abs(&delta.component_mul(&mask.map(|v| 1.0 - v)));
    let dd = edit.max_degree().max(1) as f64;
    let rhs = |xi: f64| if xi < 1.0 { (xi * m_norm / (1.0 - xi), dd * m_norm / (1.0 - xi)) } else { (f64::INFINITY, f64::INFINITY) };
    let xs = report.xi_support.unwrap();
    let (off_rhs, diag_rhs) = rhs(xs);
    let (off_g, diag_g) = rhs(report.xi_upper);

    let recovered = solve && {
        let g2 = apply_edits(&g, &edit).unwrap();
        let b = lower_bound(&g, &g2, &[SetKind::SH], &BoundSettings::fast()).unwrap();
        success_check(&b.e_hat, &edit.matrix(n))
    };
    CertInstance {
        graph: name,
        d,
        seed,
        report,
        off_bound: (off_lhs, off_rhs),
        diag_bound: (diag_lhs, diag_rhs),
        off_rhs_generic: off_g,
        diag_rhs_generic: diag_g,
        p1_err,
        p2_err,
        recovered,
    }
}
