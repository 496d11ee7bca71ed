//! Graph files, datasets and result emission.
//!
//! Edge-list format:
//!
//! ```text
//! # comment
//! n 3
//! 0 1
//! 1 2
//! ```
//!
//! Chemical-table (`.ct`) files: a name line, a counts line starting with
//! the atom and bond counts, one line per atom, then one line per bond whose
//! first two fields are 1-indexed atom numbers.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graphs::{EditSet, Graph};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn strip_comment(s: &str) -> &str {
    s.split('#').next().unwrap_or("").trim()
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("expected a nonnegative integer, got {tok:?}")))
}

pub fn read_edgelist(text: &str) -> Result<Graph> {
    let mut n = None;
    let mut edges = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = strip_comment(raw);
        if s.is_empty() {
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        let Some(n) = n else {
            if toks.len() != 2 || toks[0] != "n" {
                return Err(parse_err(line, "expected header \"n <count>\""));
            }
            n = Some(parse_usize(toks[1], line)?);
            continue;
        };
        if toks.len() != 2 {
            return Err(parse_err(line, "expected \"i j\""));
        }
        let (a, b) = (parse_usize(toks[0], line)?, parse_usize(toks[1], line)?);
        if a == b {
            return Err(parse_err(line, format!("self-loop at vertex {a}")));
        }
        if a >= n || b >= n {
            return Err(parse_err(line, format!("edge ({a}, {b}) out of range for n = {n}")));
        }
        if !edges.insert((a.min(b), a.max(b))) {
            return Err(parse_err(line, format!("duplicate edge ({a}, {b})")));
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing header \"n <count>\""))?;
    Graph::new(n, edges)
}

/// Edges in lexicographic order, one per line.
pub fn write_edgelist(g: &Graph) -> String {
    let mut out = format!("n {}\n", g.n());
    for (a, b) in g.edges() {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

fn leading_counts(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_whitespace();
    let a = it.next()?.parse().ok()?;
    let b = it.next()?.parse().ok()?;
    Some((a, b))
}

pub fn read_ct(text: &str) -> Result<Graph> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    if lines.is_empty() {
        return Err(parse_err(1, "empty file"));
    }
    // Line 1 is the molecule name. Some distributions put extra header lines
    // before the counts, so skip until a line opens with two integers.
    let mut k = 1;
    let (atoms, bonds) = loop {
        let Some(l) = lines.get(k) else {
            return Err(parse_err(k + 1, "no counts line found"));
        };
        if let Some(c) = leading_counts(l) {
            break c;
        }
        k += 1;
    };
    let first_atom = k + 1;
    let first_bond = first_atom + atoms;
    if lines.len() < first_bond + bonds {
        return Err(parse_err(
            lines.len(),
            format!("counts line declares {atoms} atoms and {bonds} bonds but the file is too short"),
        ));
    }
    let mut edges = BTreeSet::new();
    for (j, l) in lines[first_bond..first_bond + bonds].iter().enumerate() {
        let line = first_bond + j + 1;
        let (a, b) = leading_counts(l).ok_or_else(|| parse_err(line, "bond line must start with two atom indices"))?;
        for v in [a, b] {
            if v == 0 || v > atoms {
                return Err(parse_err(line, format!("atom index {v} out of range 1..={atoms}")));
            }
        }
        if a == b {
            return Err(parse_err(line, format!("bond from atom {a} to itself")));
        }
        edges.insert(((a - 1).min(b - 1), (a - 1).max(b - 1)));
    }
    Graph::new(atoms, edges)
}

/// Edit file: lines `add i j` or `del i j` (0-indexed), `#` comments.
pub fn read_edits(text: &str) -> Result<EditSet> {
    let mut adds = Vec::new();
    let mut dels = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = strip_comment(raw);
        if s.is_empty() {
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(line, "expected \"add i j\" or \"del i j\""));
        }
        let pair = (parse_usize(toks[1], line)?, parse_usize(toks[2], line)?);
        match toks[0] {
            "add" | "+" => adds.push(pair),
            "del" | "-" => dels.push(pair),
            other => return Err(parse_err(line, format!("unknown edit kind {other:?}"))),
        }
    }
    EditSet::new(adds, dels).map_err(|e| parse_err(0, e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetStats {
    pub count: usize,
    pub mean_vertices: f64,
    /// Mean over graphs of the average vertex degree `2|E|/n`.
    pub mean_degree: f64,
    pub min_vertices: usize,
    pub max_vertices: usize,
}

impl DatasetStats {
    pub fn of(graphs: &[(String, Graph)]) -> Self {
        let count = graphs.len();
        let c = count.max(1) as f64;
        let mean_vertices = graphs.iter().map(|(_, g)| g.n() as f64).sum::<f64>() / c;
        let mean_degree = graphs
            .iter()
            .map(|(_, g)| if g.n() == 0 { 0.0 } else { 2.0 * g.edge_count() as f64 / g.n() as f64 })
            .sum::<f64>()
            / c;
        Self {
            count,
            mean_vertices,
            mean_degree,
            min_vertices: graphs.iter().map(|(_, g)| g.n()).min().unwrap_or(0),
            max_vertices: graphs.iter().map(|(_, g)| g.n()).max().unwrap_or(0),
        }
    }
}

#[derive(Debug)]
pub struct Dataset {
    /// `(file name, graph)`, sorted by file name.
    pub graphs: Vec<(String, Graph)>,
    /// Files that failed to parse.
    pub errors: Vec<(String, Error)>,
    pub stats: DatasetStats,
}

/// Reads a graph file, choosing the parser by extension (`.ct` or edge list).
pub fn read_graph_file(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ct")) {
        read_ct(&text)
    } else {
        read_edgelist(&text)
    }
}

/// Loads every file in `dir` whose name matches the glob `pattern`.
pub fn load_dataset(dir: &Path, pattern: &str) -> Result<Dataset> {
    let pat = glob::Pattern::new(pattern).map_err(|e| Error::BadParams(format!("bad pattern {pattern:?}: {e}")))?;
    let mut files: Vec<(String, PathBuf)> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_ok_and(|t| t.is_file()))
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            pat.matches(&name).then(|| (name, e.path()))
        })
        .collect();
    files.sort();
    let results: Vec<(String, Result<Graph>)> =
        files.into_par_iter().map(|(name, path)| (name, read_graph_file(&path))).collect();
    let mut graphs = Vec::new();
    let mut errors = Vec::new();
    for (name, r) in results {
        match r {
            Ok(g) => graphs.push((name, g)),
            Err(e) => errors.push((name, e)),
        }
    }
    if graphs.is_empty() {
        return Err(Error::EmptyDataset(format!("no readable {pattern} files in {}", dir.display())));
    }
    let stats = DatasetStats::of(&graphs);
    Ok(Dataset { graphs, errors, stats })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::BadParams(format!("unknown format {s:?}"))),
        }
    }
}

/// Rounds to 6 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

fn to_rows<T: Serialize>(records: &[T]) -> Result<Vec<serde_json::Map<String, Value>>> {
    records
        .iter()
        .map(|r| match serde_json::to_value(r) {
            Ok(Value::Object(o)) => Ok(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
            Ok(_) => Err(Error::BadParams("records must serialize to objects".into())),
            Err(e) => Err(Error::BadParams(e.to_string())),
        })
        .collect()
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

/// Field names of a record type, taken from one serialized value.
pub fn field_names<T: Serialize>(sample: &T) -> Vec<String> {
    match serde_json::to_value(sample) {
        Ok(Value::Object(o)) => o.keys().cloned().collect(),
        _ => vec![],
    }
}

/// Renders records as a JSON array or as CSV with a header row.
///
/// Fields keep their declaration order and floats are rounded to 6
/// significant digits. `header` is used when `records` is empty.
pub fn emit_results<T: Serialize>(records: &[T], header: &[String], format: OutputFormat) -> Result<String> {
    let rows = to_rows(records)?;
    match format {
        OutputFormat::Json => {
            let arr = Value::Array(rows.into_iter().map(Value::Object).collect());
            serde_json::to_string_pretty(&arr).map_err(|e| Error::BadParams(e.to_string()))
        }
        OutputFormat::Csv => {
            let cols: Vec<String> = match rows.first() {
                Some(r) => r.keys().cloned().collect(),
                None => header.to_vec(),
            };
            let mut w = csv::Writer::from_writer(vec![]);
            let csv_err = |e: csv::Error| Error::BadParams(e.to_string());
            w.write_record(&cols).map_err(csv_err)?;
            for r in &rows {
                w.write_record(cols.iter().map(|c| r.get(c).map(cell).unwrap_or_default())).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::BadParams(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
        }
    }
}
