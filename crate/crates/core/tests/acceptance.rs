//! Acceptance run: one PASS/FAIL/REPORT line per criterion.
//!
//! `cargo test -p gedlb --test acceptance -- 3 4` runs only the listed
//! criteria. `GEDLB_DATASET_DIR` (with `alkane/` and `pah/` subdirectories of
//! `.ct` files) enables the published-dataset check of criterion 11.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{cert_instance, mini_corpus_dir, permutahedron_projection_oracle, random_graph, random_pair};
use gedlb::experiment::{run_dataset, run_experiment, DatasetConfig, ExperimentConfig, ExperimentName, GridRecord};
use gedlb::graphs::{apply_edits, exact_ged, exact_ged_ext, random_edits};
use gedlb::io::load_dataset;
use gedlb::relax::{lower_bound, lower_bound_ext, symmetric_lower_bound, BoundSettings};
use gedlb::sets::{f_value, g_value, SetKind};
use gedlb::spectra::{is_majorized, project_majorization};
use gedlb::{Graph, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(PartialEq)]
enum Verdict {
    Pass,
    Fail,
    Report,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    Outcome { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
}

fn set_groups() -> Vec<Vec<SetKind>> {
    vec![
        vec![SetKind::SH],
        vec![SetKind::IS],
        vec![SetKind::MC],
        vec![SetKind::Box],
        vec![SetKind::Loopless],
        vec![SetKind::SH, SetKind::IS, SetKind::MC],
    ]
}

fn name(kinds: &[SetKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
}

fn c1_soundness() -> Outcome {
    let settings = BoundSettings::default();
    let groups = set_groups();
    let violations: Vec<String> = (0..200u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (g1, g2, _) = random_pair(4 + (i % 4) as usize, 4, 1000 + i);
            let exact = exact_ged(&g1, &g2).unwrap() as f64;
            groups
                .iter()
                .filter_map(|kinds| {
                    let lb = symmetric_lower_bound(&g1, &g2, kinds, &settings).unwrap().lower_bound;
                    (lb > exact + 1e-4).then(|| format!("pair {i} {}: {lb:.6} > {exact}", name(kinds)))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    pass_if(
        violations.is_empty(),
        format!("200 pairs x {} set groups, {} violations {:?}", groups.len(), violations.len(), violations),
    )
}

fn c2_analytic() -> Outcome {
    let f_k5 = f_value(&Graph::complete(5).adjacency()).unwrap();
    let f_e4 = f_value(&Graph::empty(4).adjacency()).unwrap();
    let g_k3 = g_value(&Graph::complete(3).adjacency()).unwrap();
    let g_0 = g_value(&SymMatrix::zeros(4)).unwrap();
    let ok = (f_k5 - 1.0).abs() <= 1e-6
        && (f_e4 - 0.25).abs() <= 1e-5
        && (g_k3 - 2.25).abs() <= 1e-4
        && g_0.abs() <= 1e-8;
    pass_if(ok, format!("f(K5)={f_k5:.9} f(empty4)={f_e4:.9} g(K3)={g_k3:.9} g(0)={g_0:.2e}"))
}

fn experiment(name: ExperimentName, grid: Option<Vec<usize>>) -> Vec<GridRecord> {
    let mut cfg = ExperimentConfig::preset(name);
    if let Some(grid) = grid {
        cfg.grid = grid;
    }
    run_experiment(&cfg).unwrap()
}

fn c3_schur_horn_tightness() -> Outcome {
    let t9 = experiment(ExperimentName::T9, Some(vec![4, 200]));
    let gq = experiment(ExperimentName::Gq24, Some(vec![2]));
    let (s4, r200, sgq) = (t9[0].success_rate, t9[1].mean_ratio, gq[0].success_rate);
    let detail = format!("T9 success@4={s4:.2} ratio@200={r200:.3}; GQ24 success@2={sgq:.2} (50 trials)");
    if s4 < 0.9 || sgq < 0.9 || r200 < 0.4 {
        return Outcome { verdict: Verdict::Fail, detail };
    }
    if r200 < 0.5 {
        return Outcome { verdict: Verdict::Report, detail: format!("{detail}; ratio in the report-only band [0.4, 0.5)") };
    }
    Outcome { verdict: Verdict::Pass, detail }
}

fn ratios(rows: &[GridRecord], kind: SetKind) -> Vec<f64> {
    let v: Vec<f64> = rows.iter().filter(|r| r.sets == kind.name()).map(|r| r.mean_ratio).collect();
    assert!(!v.is_empty() && v.len() * 3 == rows.len(), "no grid rows for {kind}");
    v
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

fn c4_extremal() -> Outcome {
    let rows = experiment(ExperimentName::E30, None);
    let (is, sh, mc) = (ratios(&rows, SetKind::IS), ratios(&rows, SetKind::SH), ratios(&rows, SetKind::MC));
    let floor = is.iter().all(|&r| r >= 0.40);
    let order = (0..is.len()).all(|i| is[i] >= sh[i] && sh[i] >= mc[i]);
    pass_if(
        floor && order,
        format!("IS floor {floor}, IS>=SH>=MC {order}; IS [{}] SH [{}] MC [{}]", fmt(&is), fmt(&sh), fmt(&mc)),
    )
}

fn c5_windmill() -> Outcome {
    let rows = experiment(ExperimentName::Windmill47, None);
    let (is, sh, mc) = (ratios(&rows, SetKind::IS), ratios(&rows, SetKind::SH), ratios(&rows, SetKind::MC));
    let floor = sh.iter().chain(&mc).all(|&r| r >= 0.5);
    let below = (0..is.len()).all(|i| is[i] < sh[i] && is[i] < mc[i]);
    pass_if(
        floor && below,
        format!("SH,MC >= 0.5 {floor}, IS below both {below}; SH [{}] MC [{}] IS [{}]", fmt(&sh), fmt(&mc), fmt(&is)),
    )
}

fn c6_tangent_cone() -> Outcome {
    let settings = BoundSettings::default();
    let run = |kind: SetKind, add_fraction: f64, offset: u64| -> f64 {
        (0..20u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(offset + i);
                let n = rng.gen_range(6..=12);
                let g = random_graph(n, rng.gen_range(0.3..0.6), rng.gen());
                let count = rng.gen_range(1..=4);
                let e = random_edits(&g, count, add_fraction, rng.gen()).unwrap();
                let g2 = apply_edits(&g, &e).unwrap();
                lower_bound(&g, &g2, &[kind], &settings).unwrap().lower_bound.abs()
            })
            .reduce(|| 0.0, f64::max)
    };
    let is_add = run(SetKind::IS, 1.0, 600);
    let mc_del = run(SetKind::MC, 0.0, 700);
    pass_if(
        is_add <= 1e-5 && mc_del <= 1e-5,
        format!("max |IS| on additions {is_add:.2e}, max |MC| on deletions {mc_del:.2e} (20 instances each)"),
    )
}

fn c7_cross_solver() -> Outcome {
    let conic = BoundSettings::default();
    let fast = BoundSettings::fast();
    let worst = (0..30u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(800 + i);
            let n = rng.gen_range(5..=20);
            let g = random_graph(n, rng.gen_range(0.2..0.6), rng.gen());
            let count = rng.gen_range(1..=n);
            let e = random_edits(&g, count, rng.gen_range(0.0..=1.0), rng.gen()).unwrap();
            let g2 = apply_edits(&g, &e).unwrap();
            let a = lower_bound(&g, &g2, &[SetKind::SH], &conic).unwrap().lower_bound;
            let b = lower_bound(&g, &g2, &[SetKind::SH], &fast).unwrap().lower_bound;
            (a - b).abs() / a.abs().max(1.0)
        })
        .reduce(|| 0.0, f64::max);
    pass_if(worst <= 1e-4, format!("max relative gap {worst:.2e} over 30 instances"))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn c8_projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut oracle_err = 0.0_f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lam: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let got = project_majorization(&x, &lam).unwrap();
        oracle_err = oracle_err.max(dist(&got, &permutahedron_projection_oracle(&x, &lam)));
    }
    let mut bad = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=10);
        let v = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<f64>>();
        let (x, z, lam) = (v(&mut rng), v(&mut rng), v(&mut rng));
        let px = project_majorization(&x, &lam).unwrap();
        let ppx = project_majorization(&px, &lam).unwrap();
        let pz = project_majorization(&z, &lam).unwrap();
        if !is_majorized(&px, &lam, 1e-9) || dist(&px, &ppx) > 1e-9 || dist(&px, &pz) > dist(&x, &z) + 1e-9 {
            bad += 1;
        }
    }
    pass_if(
        oracle_err <= 1e-7 && bad == 0,
        format!("max oracle distance {oracle_err:.2e} on 100 cases; {bad} idempotence/non-expansiveness failures in 1000"),
    )
}

fn c9_certificates() -> Outcome {
    let mut jobs = Vec::new();
    for (k, (graph, d)) in [("t9", 1), ("t9", 2), ("gq24", 1), ("gq24", 2)].into_iter().enumerate() {
        let count = if k % 2 == 0 { 13 } else { 12 };
        jobs.extend((0..count).map(|s| (graph, d, 900 + s as u64)));
    }
    let results: Vec<_> = jobs.par_iter().map(|&(graph, d, seed)| cert_instance(graph, 4, d, seed, true)).collect();
    let p_err = results.iter().map(|c| c.p1_err.max(c.p2_err)).fold(0.0, f64::max);
    let lemma_ok = results.iter().all(|c| {
        c.off_bound.0 <= c.off_bound.1 + 1e-6
            && c.diag_bound.0 <= c.diag_bound.1 + 1e-6
            && c.off_bound.0 <= c.off_rhs_generic + 1e-6
            && c.diag_bound.0 <= c.diag_rhs_generic + 1e-6
    });
    let generic_finite = results.iter().filter(|c| c.off_rhs_generic.is_finite()).count();
    let full: Vec<_> = results.iter().filter(|c| c.report.flags.sufficient()).collect();
    let full_bad = full.iter().filter(|c| !c.recovered).count();
    let weak: Vec<_> = results
        .iter()
        .filter(|c| {
            let f = c.report.flags;
            f.sign_match && f.off_support && f.block_diagonal && f.spacing && c.report.xi_support.unwrap() < 1.0
        })
        .collect();
    let weak_bad = weak.iter().filter(|c| !c.recovered).count();
    let recovered = results.iter().filter(|c| c.recovered).count();
    let xi_max = results.iter().map(|c| c.report.xi_upper).fold(0.0, f64::max);
    let xi_min = results.iter().map(|c| c.report.xi_upper).fold(f64::INFINITY, f64::min);
    let detail = format!(
        "{} instances; P1/P2 max error {p_err:.1e}; norm-bound lemma holds {lemma_ok} \
         (generic xi bound < 1 on {generic_finite}, xi in [{xi_min:.2}, {xi_max:.2}]); \
         all five conditions pass on {} ({} not recovered); conditions 1-4 with support gain < 1 pass on {} ({} not recovered); \
         SH recovered {recovered}",
        results.len(),
        full.len(),
        full_bad,
        weak.len(),
        weak_bad,
    );
    pass_if(p_err <= 1e-8 && lemma_ok && full_bad == 0 && weak_bad == 0, detail)
}

fn c10_families() -> Outcome {
    use common::{grouped_spectrum, hamming_spectrum, johnson_spectrum, same_spectrum};
    use gedlb::families::{check_srg, extremal_e, gq24, hamming, johnson, triangular, windmill};
    let t9 = triangular(9).unwrap();
    let gq = gq24().unwrap();
    let wm = windmill(4, 7).unwrap();
    let e30 = extremal_e(30).unwrap();
    let sizes = [(t9.n(), t9.edge_count()), (gq.n(), gq.edge_count()), (wm.n(), wm.edge_count()), (e30.n(), e30.edge_count())];
    let srg = check_srg(&gq);
    let johnson_ok = [(5, 2), (6, 3), (7, 2), (8, 3)]
        .iter()
        .all(|&(k, l)| same_spectrum(&grouped_spectrum(&johnson(k, l).unwrap()), &johnson_spectrum(k, l)));
    let hamming_ok = [(2, 3), (3, 2), (3, 3), (2, 4)]
        .iter()
        .all(|&(l, q)| same_spectrum(&grouped_spectrum(&hamming(l, q).unwrap()), &hamming_spectrum(l, q)));
    let ok = sizes == [(36, 252), (27, 135), (25, 84), (30, 39)] && srg == Some((27, 10, 1, 5)) && johnson_ok && hamming_ok;
    pass_if(ok, format!("sizes {sizes:?}, GQ24 srg {srg:?}, Johnson spectra {johnson_ok}, Hamming spectra {hamming_ok}"))
}

const TABLE: [(&str, [f64; 4], f64); 2] =
    [("alkane", [4.66, 6.12, 9.58, 10.72], 0.15), ("pah", [12.01, 14.52, 20.29, 21.60], 0.3)];

fn c11_datasets() -> Outcome {
    match std::env::var("GEDLB_DATASET_DIR") {
        Ok(root) => c11_published(std::path::Path::new(&root)),
        Err(_) => c11_mini_corpus(),
    }
}

fn c11_published(root: &std::path::Path) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (set, targets, tol) in TABLE {
        let mut cfg = DatasetConfig::new(root.join(set));
        let full = run_dataset(&cfg).unwrap();
        cfg.pairs = Some(300);
        let sampled = run_dataset(&cfg).unwrap();
        for (i, want) in targets.iter().enumerate() {
            let (f, s) = (&full[i], &sampled[i]);
            let full_ok = (f.mean_bound - want).abs() <= tol;
            let sampled_ok = (s.mean_bound - want).abs() <= 3.0 * s.std_err;
            ok &= full_ok && sampled_ok;
            parts.push(format!("{set} {} {:.2}/{:.2}+-{:.2} (target {want})", f.sets, f.mean_bound, s.mean_bound, s.std_err));
        }
    }
    pass_if(ok, parts.join("; "))
}

fn c11_mini_corpus() -> Outcome {
    let ds = load_dataset(&mini_corpus_dir(), "*.ct").unwrap();
    let settings = BoundSettings::default();
    // The loopless set cannot hold vertex indicators on the diagonal.
    let groups: Vec<Vec<SetKind>> = set_groups().into_iter().filter(|g| g != &[SetKind::Loopless]).collect();
    let graphs = &ds.graphs;
    let pairs: Vec<(usize, usize)> = (0..graphs.len()).flat_map(|i| (i + 1..graphs.len()).map(move |j| (i, j))).collect();
    let violations: Vec<String> = pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| {
            let (g1, g2) = (&graphs[i].1, &graphs[j].1);
            let exact = exact_ged_ext(g1, g2).unwrap() as f64;
            groups
                .iter()
                .filter_map(|kinds| {
                    let lb = lower_bound_ext(g1, g2, kinds, 1.0, &settings).unwrap().lower_bound;
                    (lb > exact + 1e-4).then(|| format!("{}/{} {}: {lb:.6} > {exact}", graphs[i].0, graphs[j].0, name(kinds)))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    pass_if(
        violations.is_empty(),
        format!(
            "GEDLB_DATASET_DIR unset; bundled corpus: {} pairs x {} set groups, {} violations {:?}",
            pairs.len(),
            groups.len(),
            violations.len(),
            violations
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "soundness sweep", c1_soundness),
        (2, "analytic SDP values", c2_analytic),
        (3, "Schur-Horn tightness", c3_schur_horn_tightness),
        (4, "E(30) experiment", c4_extremal),
        (5, "windmill D(4,7) experiment", c5_windmill),
        (6, "tangent-cone vanishing", c6_tangent_cone),
        (7, "cross-solver agreement", c7_cross_solver),
        (8, "projection oracle", c8_projection),
        (9, "certificate theory", c9_certificates),
        (10, "family facts", c10_families),
        (11, "datasets", c11_datasets),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // Panics become FAIL lines; keep the output to one line each.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, title, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome { verdict: Verdict::Fail, detail: format!("panicked: {msg}") }
            });
        let tag = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Report => "REPORT",
        };
        if outcome.verdict == Verdict::Fail {
            failed += 1;
        }
        println!("criterion {id:>2} {tag:<6} {title} ({:.1}s): {}", start.elapsed().as_secs_f64(), outcome.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
