//! Color refinement: 1-WL, r-loopy WL and k-WL on tuples.
//!
//! All engines share one driver. Each round every element (vertex or tuple)
//! gets a signature built from the previous round's colors; distinct
//! signatures are interned in sorted order, so color ids are dense and depend
//! only on the multiset of signatures, never on hashing. Refinement stops as
//! soon as a round produces no new color class.
//!
//! The per-round tables of `(signature, multiplicity)` are kept as the graph
//! invariant. Because ids are assigned in sorted-signature order, two runs
//! that agree on every table agree on the fully expanded signature trees, so
//! the serialized tables can be compared across independent runs.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{disjoint_union, Graph};
use crate::paths::{precompute_with, PathError, PathNeighborhood, PathOptions};

/// Default cap on the number of k-tuples (`n^k`).
pub const DEFAULT_TUPLE_LIMIT: usize = 1_000_000;

const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("path neighborhood mismatch: {0}")]
    Mismatch(String),
    #[error("{tuples} tuples exceed the limit of {limit}")]
    TupleLimit { tuples: u128, limit: usize },
    #[error("k-WL supports k in 2..=3, got {0}")]
    UnsupportedK(usize),
    #[error("label vector has {got} entries, graph has {expected} vertices")]
    LabelMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Paths(#[from] PathError),
}

/// How k-tuples see each other in k-WL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum KwlVariant {
    /// Per position `j`, the multiset of colors obtained by replacing entry `j`.
    #[default]
    Oblivious,
    /// Plain 1-WL on the graph whose nodes are tuples at Hamming distance one.
    TupleGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Wl1,
    Loopy { r: usize, atp: bool },
    Kwl { k: usize, variant: KwlVariant },
}

impl Method {
    pub fn loopy(r: usize) -> Self {
        Method::Loopy { r, atp: false }
    }

    pub fn kwl(k: usize) -> Self {
        Method::Kwl {
            k,
            variant: KwlVariant::Oblivious,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Wl1 => write!(f, "wl1"),
            Method::Loopy { r, atp: false } => write!(f, "loopy:{r}"),
            Method::Loopy { r, atp: true } => write!(f, "loopy:{r}:atp"),
            Method::Kwl {
                k,
                variant: KwlVariant::Oblivious,
            } => write!(f, "kwl:{k}"),
            Method::Kwl {
                k,
                variant: KwlVariant::TupleGraph,
            } => write!(f, "kwl:{k}:tuple-graph"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    /// Accepts `wl1`, `loopy:R`, `loopy:R:atp`, `kwl:K`, `kwl:K:tuple-graph`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: Option<&&str>| -> Result<usize, String> {
            p.ok_or_else(|| format!("missing parameter in `{s}`"))?
                .parse()
                .map_err(|e| format!("bad parameter in `{s}`: {e}"))
        };
        match parts[0] {
            "wl1" if parts.len() == 1 => Ok(Method::Wl1),
            "loopy" => {
                let r = num(parts.get(1))?;
                match parts.get(2) {
                    None => Ok(Method::Loopy { r, atp: false }),
                    Some(&"atp") if parts.len() == 3 => Ok(Method::Loopy { r, atp: true }),
                    _ => Err(format!("unknown loopy option in `{s}`")),
                }
            }
            "kwl" => {
                let k = num(parts.get(1))?;
                let variant = match parts.get(2) {
                    None => KwlVariant::Oblivious,
                    Some(&"tuple-graph") if parts.len() == 3 => KwlVariant::TupleGraph,
                    _ => return Err(format!("unknown kwl option in `{s}`")),
                };
                Ok(Method::Kwl { k, variant })
            }
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOptions {
    pub max_iters: usize,
    /// Optional initial vertex labels; uniform when absent.
    pub labels: Option<Vec<u32>>,
    pub tuple_limit: usize,
    pub paths: PathOptions,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iters: usize::MAX,
            labels: None,
            tuple_limit: DEFAULT_TUPLE_LIMIT,
            paths: PathOptions::default(),
        }
    }
}

impl RefineOptions {
    pub fn with_max_iters(max_iters: usize) -> Self {
        RefineOptions {
            max_iters,
            ..Self::default()
        }
    }
}

/// Colors of every element after one round; ids are dense in `0..num_colors`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub colors: Vec<u32>,
    pub round: usize,
    pub num_colors: usize,
}

/// Exact interning of signatures to fresh dense ids.
#[derive(Debug, Default)]
pub struct ColorTable {
    ids: HashMap<Vec<u32>, u32>,
    next: u32,
}

impl ColorTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `sig`, allocating the next free id on first sight.
    pub fn intern(&mut self, sig: &[u32]) -> u32 {
        if let Some(&id) = self.ids.get(sig) {
            return id;
        }
        let id = self.next;
        self.ids.insert(sig.to_vec(), id);
        self.next += 1;
        id
    }

    pub fn len(&self) -> usize {
        self.next as usize
    }

    pub fn is_empty(&self) -> bool {
        self.next == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementResult {
    /// Round 0 is the initial coloring.
    pub history: Vec<Coloring>,
    pub stable: Coloring,
    /// Number of update rounds executed.
    pub iterations: usize,
    pub graph_invariant: String,
}

impl RefinementResult {
    /// Coloring after `t` rounds; rounds past convergence repeat the stable one.
    pub fn coloring_at(&self, t: usize) -> &Coloring {
        &self.history[t.min(self.history.len() - 1)]
    }

    /// `(color, multiplicity)` pairs of the stable coloring restricted to `range`.
    pub fn histogram(&self, range: std::ops::Range<usize>) -> Vec<(u32, usize)> {
        histogram(&self.stable.colors[range])
    }
}

fn histogram(colors: &[u32]) -> Vec<(u32, usize)> {
    let mut sorted = colors.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(u32, usize)> = Vec::new();
    for c in sorted {
        match out.last_mut() {
            Some((last, k)) if *last == c => *k += 1,
            _ => out.push((c, 1)),
        }
    }
    out
}

trait SignatureSource: Sync {
    fn len(&self) -> usize;
    fn initial(&self, e: usize, out: &mut Vec<u32>);
    fn signature(&self, e: usize, colors: &[u32], out: &mut Vec<u32>);
}

fn compute_signatures<F>(len: usize, f: F) -> Vec<Vec<u32>>
where
    F: Fn(usize, &mut Vec<u32>) + Sync,
{
    let one = |e: usize| {
        let mut sig = Vec::new();
        f(e, &mut sig);
        sig
    };
    if len >= PARALLEL_THRESHOLD {
        (0..len).into_par_iter().map(one).collect()
    } else {
        (0..len).map(one).collect()
    }
}

/// Interns signatures in sorted order; returns the coloring and the round table.
fn intern_sorted(sigs: &[Vec<u32>], round: usize) -> (Coloring, Vec<(Vec<u32>, usize)>) {
    let mut order: Vec<usize> = (0..sigs.len()).collect();
    order.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]));
    let mut table = ColorTable::new();
    let mut colors = vec![0u32; sigs.len()];
    let mut rows: Vec<(Vec<u32>, usize)> = Vec::new();
    for &e in &order {
        let before = table.len();
        colors[e] = table.intern(&sigs[e]);
        if table.len() > before {
            rows.push((sigs[e].clone(), 1));
        } else if let Some(last) = rows.last_mut() {
            last.1 += 1;
        }
    }
    (
        Coloring {
            colors,
            round,
            num_colors: table.len(),
        },
        rows,
    )
}

fn write_table(out: &mut String, round: usize, rows: &[(Vec<u32>, usize)]) {
    let _ = write!(out, "R{round}:");
    for (i, (sig, mult)) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, x) in sig.iter().enumerate() {
            if j > 0 {
                out.push('.');
            }
            let _ = write!(out, "{x}");
        }
        let _ = write!(out, "]*{mult}");
    }
    out.push(';');
}

fn run(source: &dyn SignatureSource, max_iters: usize, tag: &str) -> RefinementResult {
    let len = source.len();
    let sigs = compute_signatures(len, |e, out| source.initial(e, out));
    let (mut current, rows) = intern_sorted(&sigs, 0);
    let mut invariant = format!("{tag}|");
    write_table(&mut invariant, 0, &rows);
    let mut history = vec![current.clone()];
    let mut iterations = 0;
    while iterations < max_iters && len > 0 {
        let prev = &current.colors;
        let sigs = compute_signatures(len, |e, out| source.signature(e, prev, out));
        iterations += 1;
        let (next, rows) = intern_sorted(&sigs, iterations);
        write_table(&mut invariant, iterations, &rows);
        let refined = next.num_colors > current.num_colors;
        history.push(next.clone());
        current = next;
        if !refined {
            break;
        }
    }
    RefinementResult {
        stable: current,
        history,
        iterations,
        graph_invariant: invariant,
    }
}

fn push_initial(labels: Option<&[u32]>, v: usize, out: &mut Vec<u32>) {
    out.push(labels.map_or(0, |l| l[v]));
}

struct Wl1Source<'a> {
    g: &'a Graph,
    labels: Option<&'a [u32]>,
}

impl SignatureSource for Wl1Source<'_> {
    fn len(&self) -> usize {
        self.g.n()
    }

    fn initial(&self, v: usize, out: &mut Vec<u32>) {
        push_initial(self.labels, v, out);
    }

    fn signature(&self, v: usize, colors: &[u32], out: &mut Vec<u32>) {
        out.push(colors[v]);
        let start = out.len();
        out.extend(self.g.neighbors(v).iter().map(|&u| colors[u]));
        out[start..].sort_unstable();
    }
}

struct LoopySource<'a> {
    g: &'a Graph,
    pn: &'a PathNeighborhood,
    r: usize,
    atp: bool,
    labels: Option<&'a [u32]>,
}

impl SignatureSource for LoopySource<'_> {
    fn len(&self) -> usize {
        self.g.n()
    }

    fn initial(&self, v: usize, out: &mut Vec<u32>) {
        push_initial(self.labels, v, out);
    }

    /// `[c(v), |N(v)|, sorted c(N(v)), then per q: |N_q(v)|, sorted path tuples]`.
    fn signature(&self, v: usize, colors: &[u32], out: &mut Vec<u32>) {
        out.push(colors[v]);
        let nbrs = self.g.neighbors(v);
        out.push(nbrs.len() as u32);
        let start = out.len();
        out.extend(nbrs.iter().map(|&u| colors[u]));
        out[start..].sort_unstable();

        let mut flat: Vec<u32> = Vec::new();
        for q in 1..=self.r {
            let width = if self.atp { 2 * (q + 1) } else { q + 1 };
            flat.clear();
            for path in self.pn.paths(v, q) {
                for &p in path {
                    if self.atp {
                        flat.push(u32::from(self.g.has_edge(v, p as usize)));
                    }
                    flat.push(colors[p as usize]);
                }
            }
            let mut tuples: Vec<&[u32]> = flat.chunks_exact(width).collect();
            tuples.sort_unstable();
            out.push(tuples.len() as u32);
            for t in tuples {
                out.extend_from_slice(t);
            }
        }
    }
}

struct KwlSource<'a> {
    graphs: Vec<&'a Graph>,
    offsets: Vec<usize>,
    k: usize,
    variant: KwlVariant,
}

impl<'a> KwlSource<'a> {
    fn new(graphs: Vec<&'a Graph>, k: usize, variant: KwlVariant, limit: usize) -> Result<Self, RefineError> {
        if !(2..=3).contains(&k) {
            return Err(RefineError::UnsupportedK(k));
        }
        let mut offsets = vec![0usize];
        let mut total: u128 = 0;
        for g in &graphs {
            total += (g.n() as u128).pow(k as u32);
            if total > limit as u128 {
                return Err(RefineError::TupleLimit { tuples: total, limit });
            }
            offsets.push(total as usize);
        }
        Ok(KwlSource {
            graphs,
            offsets,
            k,
            variant,
        })
    }

    /// Graph index, its vertex count, and the entries of tuple `e`.
    fn decode(&self, e: usize) -> (usize, usize, [usize; 3]) {
        let gi = self.offsets.partition_point(|&o| o <= e) - 1;
        let n = self.graphs[gi].n();
        let mut rest = e - self.offsets[gi];
        let mut t = [0usize; 3];
        for j in (0..self.k).rev() {
            t[j] = rest % n;
            rest /= n;
        }
        (gi, n, t)
    }

    fn encode(&self, gi: usize, n: usize, t: &[usize; 3]) -> usize {
        self.offsets[gi] + t[..self.k].iter().fold(0, |acc, &x| acc * n + x)
    }
}

impl SignatureSource for KwlSource<'_> {
    fn len(&self) -> usize {
        *self.offsets.last().expect("offsets start at zero")
    }

    /// Equality and adjacency bits over all position pairs `i < j`.
    fn initial(&self, e: usize, out: &mut Vec<u32>) {
        let (gi, _, t) = self.decode(e);
        let g = self.graphs[gi];
        let mut bits = 0u32;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                bits = (bits << 2) | (u32::from(t[i] == t[j]) << 1) | u32::from(g.has_edge(t[i], t[j]));
            }
        }
        out.push(bits);
    }

    fn signature(&self, e: usize, colors: &[u32], out: &mut Vec<u32>) {
        let (gi, n, t) = self.decode(e);
        out.push(colors[e]);
        match self.variant {
            KwlVariant::Oblivious => {
                for j in 0..self.k {
                    let start = out.len();
                    let mut s = t;
                    for w in 0..n {
                        s[j] = w;
                        out.push(colors[self.encode(gi, n, &s)]);
                    }
                    out[start..].sort_unstable();
                }
            }
            KwlVariant::TupleGraph => {
                let start = out.len();
                for j in 0..self.k {
                    let mut s = t;
                    for w in (0..n).filter(|&w| w != t[j]) {
                        s[j] = w;
                        out.push(colors[self.encode(gi, n, &s)]);
                    }
                }
                out[start..].sort_unstable();
            }
        }
    }
}

fn check_labels(g: &Graph, opts: &RefineOptions) -> Result<(), RefineError> {
    match &opts.labels {
        Some(l) if l.len() != g.n() => Err(RefineError::LabelMismatch {
            expected: g.n(),
            got: l.len(),
        }),
        _ => Ok(()),
    }
}

/// Classic color refinement.
pub fn wl1_refine(g: &Graph, opts: &RefineOptions) -> Result<RefinementResult, RefineError> {
    check_labels(g, opts)?;
    let src = Wl1Source {
        g,
        labels: opts.labels.as_deref(),
    };
    Ok(run(&src, opts.max_iters, &Method::Wl1.to_string()))
}

/// r-loopy refinement over precomputed path neighborhoods (`pn.r() ≥ r`).
pub fn loopy_refine(
    g: &Graph,
    pn: &PathNeighborhood,
    r: usize,
    atp: bool,
    opts: &RefineOptions,
) -> Result<RefinementResult, RefineError> {
    if pn.n() != g.n() {
        return Err(RefineError::Mismatch(format!(
            "neighborhoods cover {} vertices, graph has {}",
            pn.n(),
            g.n()
        )));
    }
    if pn.r() < r {
        return Err(RefineError::Mismatch(format!(
            "neighborhoods computed up to length {}, refinement needs {r}",
            pn.r()
        )));
    }
    check_labels(g, opts)?;
    let src = LoopySource {
        g,
        pn,
        r,
        atp,
        labels: opts.labels.as_deref(),
    };
    Ok(run(&src, opts.max_iters, &Method::Loopy { r, atp }.to_string()))
}

/// k-WL over `V(g)^k`; colors are indexed by tuple `Σ t_j n^(k-1-j)`.
pub fn kwl_refine(
    g: &Graph,
    k: usize,
    variant: KwlVariant,
    opts: &RefineOptions,
) -> Result<RefinementResult, RefineError> {
    let src = KwlSource::new(vec![g], k, variant, opts.tuple_limit)?;
    Ok(run(&src, opts.max_iters, &Method::Kwl { k, variant }.to_string()))
}

/// Runs `method` on a single graph.
pub fn refine(g: &Graph, method: &Method, opts: &RefineOptions) -> Result<RefinementResult, RefineError> {
    match *method {
        Method::Wl1 => wl1_refine(g, opts),
        Method::Loopy { r, atp } => {
            let pn = precompute_with(g, r, &opts.paths)?;
            loopy_refine(g, &pn, r, atp, opts)
        }
        Method::Kwl { k, variant } => kwl_refine(g, k, variant, opts),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub distinguished: bool,
    pub iterations: usize,
    /// Stable-color histogram of each input, over the shared color ids.
    pub histogram_g: Vec<(u32, usize)>,
    pub histogram_h: Vec<(u32, usize)>,
}

impl Comparison {
    pub fn invariant_g(&self) -> String {
        format_histogram(&self.histogram_g)
    }

    pub fn invariant_h(&self) -> String {
        format_histogram(&self.histogram_h)
    }
}

fn format_histogram(h: &[(u32, usize)]) -> String {
    h.iter()
        .map(|(c, k)| format!("{c}:{k}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Refines `g` and `h` jointly so that colors are shared, then compares the
/// stable histograms of the two sides.
pub fn compare_graphs(g: &Graph, h: &Graph, method: &Method, opts: &RefineOptions) -> Result<Comparison, RefineError> {
    let labels = match &opts.labels {
        Some(l) if l.len() != g.n() || g.n() != h.n() => {
            return Err(RefineError::LabelMismatch {
                expected: g.n(),
                got: l.len(),
            })
        }
        Some(l) => Some([l.as_slice(), l.as_slice()].concat()),
        None => None,
    };
    let (result, split, end) = match *method {
        Method::Wl1 | Method::Loopy { .. } => {
            let u = disjoint_union(g, h);
            let joint = RefineOptions {
                labels,
                ..opts.clone()
            };
            let res = match *method {
                Method::Wl1 => wl1_refine(&u, &joint)?,
                Method::Loopy { r, atp } => {
                    let pn = precompute_with(&u, r, &opts.paths)?;
                    loopy_refine(&u, &pn, r, atp, &joint)?
                }
                Method::Kwl { .. } => unreachable!(),
            };
            (res, g.n(), u.n())
        }
        Method::Kwl { k, variant } => {
            let src = KwlSource::new(vec![g, h], k, variant, opts.tuple_limit)?;
            let split = src.offsets[1];
            let end = src.offsets[2];
            (run(&src, opts.max_iters, &method.to_string()), split, end)
        }
    };
    let histogram_g = result.histogram(0..split);
    let histogram_h = result.histogram(split..end);
    Ok(Comparison {
        distinguished: histogram_g != histogram_h,
        iterations: result.iterations,
        histogram_g,
        histogram_h,
    })
}

/// Run-independent invariant string of `g` under `method`.
pub fn invariant_fingerprint(g: &Graph, method: &Method, opts: &RefineOptions) -> Result<String, RefineError> {
    Ok(refine(g, method, opts)?.graph_invariant)
}

/// Per-round color histograms as JSON, for debugging refinement runs.
pub fn trace_json(result: &RefinementResult) -> String {
    let mut out = String::from("{\"iterations\":");
    let _ = write!(out, "{},\"rounds\":[", result.iterations);
    for (i, c) in result.history.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{{\"round\":{},\"num_colors\":{},\"histogram\":[", c.round, c.num_colors);
        for (j, (color, k)) in histogram(&c.colors).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "[{color},{k}]");
        }
        out.push_str("]}");
    }
    out.push_str("]}");
    out
}
