//! `gedlb`: lower bounds, exact distances, experiments and certificates.
//!
//! Exit codes: 0 success, 2 bad input, 3 solver failure, 4 instance over the
//! exact-search budget.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gedlb::certify::{check_sufficient_with, check_theorem_with, corollary_bound, default_params, xi_lower, CertificateParams};
use gedlb::conic::Settings;
use gedlb::experiment::{parse_grid, run_dataset, run_experiment, DatasetConfig, ExperimentConfig, ExperimentName};
use gedlb::families::{by_name, check_srg};
use gedlb::graphs::{apply_edits, exact_ged, exact_ged_ext};
use gedlb::io::{emit_results, read_edits, read_graph_file, write_edgelist, OutputFormat};
use gedlb::relax::{lower_bound, lower_bound_ext, success_check, symmetric_lower_bound, BoundSettings, BOUND_TOL};
use gedlb::sets::SetKind;
use gedlb::spectra::{eigenspaces, DEFAULT_GROUPING_TOL};
use gedlb::{Error, Graph};

#[derive(Parser)]
#[command(name = "gedlb", version, about = "Convex lower bounds on graph edit distance")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lower bound on the edit distance between two graph files.
    Bound(BoundArgs),
    /// Exact edit distance by exhaustive search (small graphs only).
    Exact(ExactArgs),
    /// Run a published experiment or a dataset sweep.
    Experiment(ExperimentArgs),
    /// Evaluate the dual-certificate conditions on a graph.
    Certify(CertifyArgs),
    /// Write a family graph as an edge list.
    Family(FamilyArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output file; format follows --format or the file extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    g1: PathBuf,
    #[arg(long)]
    g2: PathBuf,
    /// Comma-separated set kinds, intersected: sh,is,mc,box,loopless.
    #[arg(long, default_value = "sh")]
    sets: String,
    /// Allow vertex edits (graphs may differ in size).
    #[arg(long)]
    ext: bool,
    /// Cost per edit in extended mode.
    #[arg(long, default_value_t = 1.0)]
    cost: f64,
    #[arg(long, default_value_t = BOUND_TOL)]
    tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    g1: PathBuf,
    #[arg(long)]
    g2: PathBuf,
    #[arg(long)]
    ext: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// t9, gq24, e30, windmill47 or dataset.
    #[arg(long)]
    name: String,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// start:stop:step or a comma list of edit counts.
    #[arg(long)]
    edit_grid: Option<String>,
    /// Set groups separated by commas; `+` intersects, e.g. "is,sh+mc".
    #[arg(long)]
    sets: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    #[arg(long, default_value = "*.ct")]
    pattern: String,
    /// Sample this many pairs in dataset mode.
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    cost: Option<f64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CertifyArgs {
    /// Graph file or `family:<name>[:<p1,p2,...>]`.
    #[arg(long)]
    graph: String,
    #[arg(long)]
    d: usize,
    /// Edit pattern file (`add i j` / `del i j` lines).
    #[arg(long)]
    edits: Option<PathBuf>,
    #[arg(long, default_value = "0.001,0.01,0.1,1")]
    c1: String,
    #[arg(long, default_value = "0.001,0.01,0.1,1")]
    eps: String,
    /// Override α (comma list, one entry per eigenspace).
    #[arg(long)]
    alpha: Option<String>,
    /// Override γ (comma list, one entry per eigenspace).
    #[arg(long)]
    gamma: Option<String>,
    /// Constant `c` of the corollary bound.
    #[arg(long, default_value_t = 1.0)]
    corollary_c: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct FamilyArgs {
    /// johnson, kneser, hamming, triangular, windmill, extremal or gq24.
    #[arg(long)]
    name: String,
    /// Comma-separated integer parameters.
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure(Error);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TooLarge { .. } => 4,
        Error::SolverFailure(_)
        | Error::NumericalBreakdown(_)
        | Error::NoConvergence
        | Error::MaxIterations(_)
        | Error::NotContracting(_) => 3,
        _ => 2,
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> gedlb::Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::BadParams(format!("bad {what} value {t:?}"))))
        .collect()
}

fn parse_groups(s: &str) -> gedlb::Result<Vec<Vec<SetKind>>> {
    s.split(',').map(|g| SetKind::parse_list(&g.replace('+', ","))).collect()
}

fn output_format(out: &OutArgs, path: &Path) -> gedlb::Result<OutputFormat> {
    match &out.format {
        Some(f) => f.parse(),
        None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Ok(OutputFormat::Csv),
        None => Ok(OutputFormat::Json),
    }
}

fn write_records<T: Serialize>(out: &OutArgs, records: &[T], header: &[String]) -> CmdResult {
    if let Some(path) = &out.out {
        let text = emit_results(records, header, output_format(out, path)?)?;
        std::fs::write(path, text)?;
        eprintln!("wrote {}", path.display());
    } else if let Some(f) = &out.format {
        print!("{}", emit_results(records, header, f.parse()?)?);
    }
    Ok(())
}

fn load_graph(spec: &str) -> gedlb::Result<Graph> {
    if let Some(rest) = spec.strip_prefix("family:") {
        let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
        return by_name(name, &parse_list(params, "family parameter")?);
    }
    read_graph_file(Path::new(spec))
}

#[derive(Serialize)]
struct BoundRecord {
    g1: String,
    g2: String,
    sets: String,
    extended: bool,
    cost: f64,
    lower_bound: f64,
    forward: f64,
    reverse: f64,
    status: String,
    iterations: usize,
    seconds: f64,
    tol: f64,
}

fn cmd_bound(a: &BoundArgs) -> CmdResult {
    let g1 = read_graph_file(&a.g1)?;
    let g2 = read_graph_file(&a.g2)?;
    let kinds = SetKind::parse_list(&a.sets)?;
    let settings = BoundSettings { conic: Settings::with_tol(a.tol), ..BoundSettings::default() };
    let t = Instant::now();
    let r = if a.ext {
        lower_bound_ext(&g1, &g2, &kinds, a.cost, &settings)?
    } else {
        if g1.n() != g2.n() {
            return Err(Error::BadParams(format!(
                "graphs have {} and {} vertices; use --ext for vertex edits",
                g1.n(),
                g2.n()
            ))
            .into());
        }
        if a.cost != 1.0 {
            return Err(Error::BadParams("--cost applies only with --ext".into()).into());
        }
        symmetric_lower_bound(&g1, &g2, &kinds, &settings)?
    };
    let (fwd, rev) = r.directed.unwrap_or((r.lower_bound, r.lower_bound));
    let rec = BoundRecord {
        g1: a.g1.display().to_string(),
        g2: a.g2.display().to_string(),
        sets: kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(","),
        extended: a.ext,
        cost: a.cost,
        lower_bound: r.lower_bound,
        forward: fwd,
        reverse: rev,
        status: format!("{:?}", r.status),
        iterations: r.iterations,
        seconds: t.elapsed().as_secs_f64(),
        tol: a.tol,
    };
    println!("lower bound: {:.6}", rec.lower_bound);
    println!("  G1 -> G2: {fwd:.6}\n  G2 -> G1: {rev:.6}");
    println!("  status {} after {} iterations, {:.3}s", rec.status, rec.iterations, rec.seconds);
    write_records(&a.out, &[rec], &[])
}

fn cmd_exact(a: &ExactArgs) -> CmdResult {
    let g1 = read_graph_file(&a.g1)?;
    let g2 = read_graph_file(&a.g2)?;
    let d = if a.ext {
        exact_ged_ext(&g1, &g2)?
    } else {
        exact_ged(&g1, &g2)?
    };
    println!("{d}");
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs) -> CmdResult {
    if a.name.eq_ignore_ascii_case("dataset") {
        let dir = a
            .dataset_dir
            .clone()
            .ok_or_else(|| Error::BadParams("dataset mode requires --dataset-dir".into()))?;
        let mut cfg = DatasetConfig::new(dir);
        cfg.pattern = a.pattern.clone();
        cfg.pairs = a.pairs;
        cfg.seed = a.seed;
        if let Some(c) = a.cost {
            cfg.cost = c;
        }
        if let Some(s) = &a.sets {
            cfg.set_groups = parse_groups(s)?;
        }
        if let Some(t) = a.tol {
            cfg.tol = t;
        }
        eprintln!("config: {}", one_line(&cfg));
        let rows = run_dataset(&cfg)?;
        println!("{:<16} {:>8} {:>12} {:>10}", "sets", "pairs", "mean bound", "std err");
        for r in &rows {
            println!("{:<16} {:>8} {:>12.4} {:>10.4}", r.sets, r.pairs, r.mean_bound, r.std_err);
        }
        return write_records(&a.out, &rows, &[]);
    }
    let name: ExperimentName = a.name.parse()?;
    let mut cfg = ExperimentConfig::preset(name);
    cfg.seed = a.seed;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(g) = &a.edit_grid {
        cfg.grid = parse_grid(g)?;
    }
    if let Some(s) = &a.sets {
        cfg.set_groups = parse_groups(s)?;
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    eprintln!("config: {}", one_line(&cfg));
    let rows = run_experiment(&cfg)?;
    println!("{:<10} {:>6} {:>9} {:>10} {:>8}", "sets", "edits", "success", "ratio", "sd");
    for r in &rows {
        println!("{:<10} {:>6} {:>9.3} {:>10.4} {:>8.4}", r.sets, r.edits, r.success_rate, r.mean_ratio, r.sd_ratio);
    }
    write_records(&a.out, &rows, &[])
}

/// One-line rendering of a config for the log.
fn one_line<T: Serialize>(v: &T) -> String {
    emit_results(std::slice::from_ref(v), &[], OutputFormat::Json)
        .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
        .unwrap_or_default()
}

#[derive(Serialize)]
struct CertifyRecord {
    c1: Option<f64>,
    eps: Option<f64>,
    d: usize,
    rho: f64,
    xi_lower: f64,
    xi_upper: f64,
    theorem_contraction: f64,
    theorem_spacing: f64,
    theorem_holds: bool,
    corollary_bound: Option<usize>,
    sufficient: Option<bool>,
    sign_match: Option<bool>,
    off_support: Option<bool>,
    block_diagonal: Option<bool>,
    spacing: Option<bool>,
    xi_below_one: Option<bool>,
    xi_support: Option<f64>,
    normal_cone: Option<bool>,
    sh_recovers: Option<bool>,
}

fn cmd_certify(a: &CertifyArgs) -> CmdResult {
    if a.d == 0 {
        return Err(Error::BadParams("--d must be at least 1".into()).into());
    }
    let g = load_graph(&a.graph)?;
    let es = eigenspaces(&g.adjacency(), DEFAULT_GROUPING_TOL)?;
    println!("n = {}, m = {} eigenspaces", g.n(), es.m());
    for i in 0..es.m() {
        println!("  λ = {:>10.5}  multiplicity {:>3}  μ = {:.5}", es.distinct_values[i], es.multiplicities[i], es.mu[i]);
    }
    let corollary = match corollary_bound(&es, a.corollary_c) {
        Ok(b) => {
            println!("corollary bound ⌊c n / κ⌋ with c = {}, κ = {}: {b}", a.corollary_c, es.kappa());
            Some(b)
        }
        Err(Error::NotUniform) => {
            println!("corollary: projector diagonals are not uniform, bound not applicable");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let edits = match &a.edits {
        Some(p) => {
            let e = read_edits(&std::fs::read_to_string(p)?)?;
            e.check_against(&g)?;
            Some(e)
        }
        None => None,
    };
    let sh_recovers = match &edits {
        Some(e) => {
            let g2 = apply_edits(&g, e)?;
            let r = lower_bound(&g, &g2, &[SetKind::SH], &BoundSettings::fast())?;
            let ok = success_check(&r.e_hat, &e.matrix(g.n()));
            println!("SH solve: bound {:.6} for {} edits, recovers E*: {ok}", r.lower_bound, e.len());
            if e.is_empty() {
                println!("edit set is empty: conditions 1-3 hold vacuously");
            }
            Some(ok)
        }
        None => None,
    };

    let mut candidates: Vec<(Option<f64>, Option<f64>, CertificateParams)> = Vec::new();
    if a.alpha.is_some() || a.gamma.is_some() {
        let alpha = match &a.alpha {
            Some(s) => parse_list(s, "alpha")?,
            None => default_params(&es, 0.1, 0.01)?.alpha,
        };
        let gamma = match &a.gamma {
            Some(s) => parse_list(s, "gamma")?,
            None => (0..es.m()).map(|i| i as f64).collect(),
        };
        candidates.push((None, None, CertificateParams { alpha, gamma }));
    } else {
        for c1 in parse_list::<f64>(&a.c1, "c1")? {
            for eps in parse_list::<f64>(&a.eps, "eps")? {
                candidates.push((Some(c1), Some(eps), default_params(&es, c1, eps)?));
            }
        }
    }

    let mut rows = Vec::new();
    println!(
        "{:>8} {:>8} {:>9} {:>19} {:>11} {:>11} {:>8}",
        "c1", "eps", "rho", "xi bracket", "cond 1", "cond 2", "theorem"
    );
    for (c1, eps, p) in candidates {
        let th = check_theorem_with(&es, a.d, &p)?;
        let xl = xi_lower(&p.alpha, a.d, &es, 32, 0)?.min(th.xi_upper);
        let mut rec = CertifyRecord {
            c1,
            eps,
            d: a.d,
            rho: th.rho,
            xi_lower: xl,
            xi_upper: th.xi_upper,
            theorem_contraction: th.contraction,
            theorem_spacing: th.spacing,
            theorem_holds: th.holds,
            corollary_bound: corollary,
            sufficient: None,
            sign_match: None,
            off_support: None,
            block_diagonal: None,
            spacing: None,
            xi_below_one: None,
            xi_support: None,
            normal_cone: None,
            sh_recovers,
        };
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
        println!(
            "{:>8} {:>8} {:>9.4} [{:>7.4}, {:>7.4}] {:>11.3e} {:>11.3e} {:>8}",
            show(c1),
            show(eps),
            th.rho,
            xl,
            th.xi_upper,
            th.contraction,
            th.spacing,
            if th.holds { "holds" } else { "fails" }
        );
        if let Some(e) = &edits {
            let r = match check_sufficient_with(&es, e, &p, a.tol) {
                Ok(r) => r,
                Err(Error::NotContracting(msg)) => {
                    println!("         sufficient: fails, no certificate ({msg})");
                    rec.sufficient = Some(false);
                    rows.push(rec);
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let f = r.flags;
            println!(
                "         sufficient: sign {} off-support {} block {} spacing {} xi<1 {} | all {} | ξ on Ω {:.4} | normal cone {}",
                f.sign_match,
                f.off_support,
                f.block_diagonal,
                f.spacing,
                f.xi_below_one,
                f.sufficient(),
                r.xi_support.unwrap_or(f64::NAN),
                r.normal_cone.unwrap_or(false)
            );
            rec.sufficient = Some(f.sufficient());
            rec.sign_match = Some(f.sign_match);
            rec.off_support = Some(f.off_support);
            rec.block_diagonal = Some(f.block_diagonal);
            rec.spacing = Some(f.spacing);
            rec.xi_below_one = Some(f.xi_below_one);
            rec.xi_support = r.xi_support;
            rec.normal_cone = r.normal_cone;
        }
        rows.push(rec);
    }
    write_records(&a.out, &rows, &[])
}

fn cmd_family(a: &FamilyArgs) -> CmdResult {
    let params: Vec<usize> = parse_list(&a.params, "family parameter")?;
    let g = by_name(&a.name, &params)?;
    println!("n = {}, edges = {}", g.n(), g.edge_count());
    match eigenspaces(&g.adjacency(), DEFAULT_GROUPING_TOL) {
        Ok(es) => {
            let parts: Vec<String> = es
                .distinct_values
                .iter()
                .zip(&es.multiplicities)
                .map(|(v, m)| format!("{v:.4}^{m}"))
                .collect();
            println!("spectrum: {}", parts.join(" "));
        }
        Err(e) => println!("spectrum: {e}"),
    }
    match check_srg(&g) {
        Some((n, r, da, dna)) => println!("srg({n},{r},{da},{dna})"),
        None => println!("not strongly regular"),
    }
    if let Some(p) = &a.out {
        std::fs::write(p, write_edgelist(&g))?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Bound(a) => cmd_bound(a),
        Cmd::Exact(a) => cmd_exact(a),
        Cmd::Experiment(a) => cmd_experiment(a),
        Cmd::Certify(a) => cmd_certify(a),
        Cmd::Family(a) => cmd_family(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
