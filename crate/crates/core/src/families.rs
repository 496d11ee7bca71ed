//! Named graph families and structural validators.

use crate::error::{Error, Result};
use crate::graphs::{Graph, Pair};
use crate::spectra::EigStructure;

/// Upper neighbours (`j > i`) of each vertex of GQ(2,4), the collinearity graph
/// of the generalized quadrangle of order (2,4). Vertices 0..6 and 6..12 are
/// the two sixes of a double-six, 12..27 the remaining lines indexed by pairs.
const GQ24_UPPER: [&[usize]; 27] = [
    &[7, 8, 9, 10, 11, 12, 13, 14, 15, 16],
    &[6, 8, 9, 10, 11, 12, 17, 18, 19, 20],
    &[6, 7, 9, 10, 11, 13, 17, 21, 22, 23],
    &[6, 7, 8, 10, 11, 14, 18, 21, 24, 25],
    &[6, 7, 8, 9, 11, 15, 19, 22, 24, 26],
    &[6, 7, 8, 9, 10, 16, 20, 23, 25, 26],
    &[12, 13, 14, 15, 16],
    &[12, 17, 18, 19, 20],
    &[13, 17, 21, 22, 23],
    &[14, 18, 21, 24, 25],
    &[15, 19, 22, 24, 26],
    &[16, 20, 23, 25, 26],
    &[21, 22, 23, 24, 25, 26],
    &[18, 19, 20, 24, 25, 26],
    &[17, 19, 20, 22, 23, 26],
    &[17, 18, 20, 21, 23, 25],
    &[17, 18, 19, 21, 22, 24],
    &[24, 25, 26],
    &[22, 23, 26],
    &[21, 23, 25],
    &[21, 22, 24],
    &[26],
    &[25],
    &[24],
    &[],
    &[],
    &[],
];

/// All `l`-subsets of `{0..k}` in lexicographic order.
fn subsets(k: usize, l: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, l: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == l {
            out.push(cur.clone());
            return;
        }
        for v in start..k {
            if k - v < l - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, k, l, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, l, &mut Vec::with_capacity(l), &mut out);
    out
}

fn common(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| b.contains(x)).count()
}

fn subset_graph(k: usize, l: usize, adjacent: impl Fn(usize) -> bool) -> Graph {
    let verts = subsets(k, l);
    let mut edges = Vec::new();
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            if adjacent(common(&verts[i], &verts[j])) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(verts.len(), edges).expect("subset graph edges are valid")
}

/// Johnson graph J(k, l): `l`-subsets adjacent when they share `l - 1` elements.
pub fn johnson(k: usize, l: usize) -> Result<Graph> {
    if l == 0 || l >= k {
        return Err(Error::BadParams(format!("johnson needs 0 < l < k, got k={k}, l={l}")));
    }
    Ok(subset_graph(k, l, |c| c + 1 == l))
}

/// Kneser graph K(k, l): `l`-subsets adjacent when disjoint.
pub fn kneser(k: usize, l: usize) -> Result<Graph> {
    if l == 0 || k < 2 * l {
        return Err(Error::BadParams(format!("kneser needs 0 < l, k >= 2l, got k={k}, l={l}")));
    }
    Ok(subset_graph(k, l, |c| c == 0))
}

/// Hamming graph H(l, q) on `q^l` words, adjacent at Hamming distance 1.
pub fn hamming(l: usize, q: usize) -> Result<Graph> {
    if l == 0 || q < 2 {
        return Err(Error::BadParams(format!("hamming needs l >= 1, q >= 2, got l={l}, q={q}")));
    }
    let n = q
        .checked_pow(l as u32)
        .filter(|&n| n <= 1 << 16)
        .ok_or_else(|| Error::BadParams(format!("hamming({l},{q}) is too large")))?;
    let mut edges = Vec::new();
    for v in 0..n {
        let mut place = 1;
        for _ in 0..l {
            let digit = (v / place) % q;
            for other in (digit + 1)..q {
                edges.push((v, v + (other - digit) * place));
            }
            place *= q;
        }
    }
    Ok(Graph::new(n, edges).expect("hamming edges are valid"))
}

/// Triangular graph T(k) = J(k, 2).
pub fn triangular(k: usize) -> Result<Graph> {
    if k < 4 {
        return Err(Error::BadParams(format!("triangular needs k >= 4, got {k}")));
    }
    johnson(k, 2)
}

/// GQ(2,4) collinearity graph, srg(27, 10, 1, 5).
pub fn gq24() -> Result<Graph> {
    let edges: Vec<Pair> = GQ24_UPPER
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
        .collect();
    let g = Graph::new(27, edges).map_err(|e| Error::ConstructionInvalid(e.to_string()))?;
    match check_srg(&g) {
        Some((27, 10, 1, 5)) => Ok(g),
        other => Err(Error::ConstructionInvalid(format!("gq24 table gives {other:?}"))),
    }
}

/// Windmill graph: `m` copies of `K_n` sharing vertex 0.
pub fn windmill(m: usize, n: usize) -> Result<Graph> {
    if m == 0 || n < 2 {
        return Err(Error::BadParams(format!("windmill needs m >= 1, n >= 2, got m={m}, n={n}")));
    }
    let mut edges = Vec::new();
    for c in 0..m {
        let verts: Vec<usize> = std::iter::once(0).chain((0..n - 1).map(|t| 1 + c * (n - 1) + t)).collect();
        for a in 0..verts.len() {
            for b in (a + 1)..verts.len() {
                edges.push((verts[a], verts[b]));
            }
        }
    }
    Ok(Graph::new(m * (n - 1) + 1, edges).expect("windmill edges are valid"))
}

/// Connected graph on `n` vertices with the largest number of maximum stable sets.
///
/// Disjoint cliques (two K4 and the rest K3 when `n = 3s + 2`, one K4 when
/// `n = 3s + 1`, only K3 otherwise), K4s first; the lowest vertex of every
/// clique after the first is joined to vertex 0.
pub fn extremal_e(n: usize) -> Result<Graph> {
    if n < 6 {
        return Err(Error::BadParams(format!("extremal_e needs n >= 6, got {n}")));
    }
    let (s, r) = (n / 3, n % 3);
    let mut sizes = vec![4; r];
    sizes.extend(std::iter::repeat_n(3, s - r));
    let mut edges = Vec::new();
    let mut start = 0;
    for &size in &sizes {
        for a in start..start + size {
            for b in (a + 1)..start + size {
                edges.push((a, b));
            }
        }
        if start > 0 {
            edges.push((0, start));
        }
        start += size;
    }
    debug_assert_eq!(start, n);
    Ok(Graph::new(n, edges).expect("extremal edges are valid"))
}

/// Family graph from its name and integer parameters, e.g. `("windmill", [4, 7])`.
pub fn by_name(name: &str, params: &[usize]) -> Result<Graph> {
    let want = |k: usize| -> Result<()> {
        if params.len() == k {
            Ok(())
        } else {
            Err(Error::BadParams(format!("{name} takes {k} parameter(s), got {}", params.len())))
        }
    };
    match name.to_ascii_lowercase().as_str() {
        "johnson" => want(2).and_then(|_| johnson(params[0], params[1])),
        "kneser" => want(2).and_then(|_| kneser(params[0], params[1])),
        "hamming" => want(2).and_then(|_| hamming(params[0], params[1])),
        "triangular" => want(1).and_then(|_| triangular(params[0])),
        "windmill" => want(2).and_then(|_| windmill(params[0], params[1])),
        "extremal" => want(1).and_then(|_| extremal_e(params[0])),
        "gq24" => want(0).and_then(|_| gq24()),
        "complete" => want(1).map(|_| Graph::complete(params[0])),
        "cycle" => want(1).map(|_| Graph::cycle(params[0])),
        "path" => want(1).map(|_| Graph::path(params[0])),
        _ => Err(Error::BadParams(format!("unknown family {name:?}"))),
    }
}

/// Number of maximum stable sets of `f(n)`-extremal connected graphs.
pub fn extremal_stable_count(n: usize) -> u64 {
    let s = (n / 3) as u32;
    match n % 3 {
        0 => 2 * 3u64.pow(s - 1) + 2u64.pow(s - 1),
        1 => 3u64.pow(s) + 2u64.pow(s - 1),
        _ => 4 * 3u64.pow(s - 1) + 3 * 2u64.pow(s - 2),
    }
}

/// Returns `(n, r, d_a, d_na)` if `g` is strongly regular.
pub fn check_srg(g: &Graph) -> Option<(usize, usize, usize, usize)> {
    let n = g.n();
    let deg = g.degrees();
    let r = *deg.first()?;
    if deg.iter().any(|&d| d != r) {
        return None;
    }
    let adj = g.bool_adjacency();
    let mut da = None;
    let mut dna = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let c = (0..n).filter(|&k| adj[i][k] && adj[j][k]).count();
            let slot = if adj[i][j] { &mut da } else { &mut dna };
            match slot {
                None => *slot = Some(c),
                Some(v) if *v != c => return None,
                _ => {}
            }
        }
    }
    // Complete and empty graphs leave one count undetermined; report 0.
    Some((n, r, da.unwrap_or(0), dna.unwrap_or(0)))
}

/// Whether every eigenspace projector has a constant diagonal within `tol`.
pub fn check_projector_diagonal_uniformity(es: &EigStructure, tol: f64) -> bool {
    es.projectors.iter().all(|p| {
        let n = p.dim();
        let d0 = if n > 0 { p.get(0, 0) } else { 0.0 };
        (0..n).all(|a| (p.get(a, a) - d0).abs() <= tol)
    })
}
