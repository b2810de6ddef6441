//! Path neighborhoods: for a vertex `v` and length `q ≥ 1`, `N_q(v)` is the set
//! of oriented simple paths with `q` edges whose two endpoints are neighbors of
//! `v` and which avoid `v`. Both orientations of every geometric path are kept,
//! so `|N_q(v)|` is twice the number of `(q + 2)`-cycles through `v`.
//!
//! Paths are stored as flat `u32` node arrays, one bucket per `(v, q)`, each in
//! lexicographic order of the node sequence.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::Graph;

/// Longest path length accepted by [`precompute_all`].
pub const DEFAULT_MAX_R: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("path length must be at least 1")]
    ZeroLength,
    #[error("path length {r} exceeds configured maximum {max}")]
    LengthTooLarge { r: usize, max: usize },
    #[error("path budget of {limit} exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("cycle length {len} outside 3..={max}")]
    CycleLengthOutOfRange { len: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathOptions {
    /// Abort once this many oriented paths have been stored in total.
    pub budget: Option<u64>,
    pub max_r: usize,
    pub parallel: bool,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            budget: None,
            max_r: DEFAULT_MAX_R,
            parallel: false,
        }
    }
}

/// All `N_q(v)` for `q ∈ 1..=r`. `N_0(v)` is the host neighbor list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathNeighborhood {
    n: usize,
    r: usize,
    // buckets[v * r + (q - 1)] holds the concatenated node sequences
    buckets: Vec<Vec<u32>>,
}

impl PathNeighborhood {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn bucket(&self, v: usize, q: usize) -> &[u32] {
        assert!(
            (1..=self.r).contains(&q),
            "path length {q} outside 1..={}",
            self.r
        );
        &self.buckets[v * self.r + q - 1]
    }

    /// The paths of `N_q(v)`, each a slice of `q + 1` vertex ids.
    pub fn paths(&self, v: usize, q: usize) -> std::slice::ChunksExact<'_, u32> {
        self.bucket(v, q).chunks_exact(q + 1)
    }

    pub fn count(&self, v: usize, q: usize) -> usize {
        self.bucket(v, q).len() / (q + 1)
    }

    /// Number of stored oriented paths over all vertices and lengths.
    pub fn total_paths(&self) -> u64 {
        (0..self.n)
            .flat_map(|v| (1..=self.r).map(move |q| (v, q)))
            .map(|(v, q)| self.count(v, q) as u64)
            .sum()
    }

    /// Path totals per length `q = 1..=r`.
    pub fn totals_by_length(&self) -> Vec<u64> {
        (1..=self.r)
            .map(|q| (0..self.n).map(|v| self.count(v, q) as u64).sum())
            .collect()
    }

    /// Number of distinct simple cycles of length `len` through `v`.
    pub fn count_cycles_through(&self, v: usize, len: usize) -> Result<usize, PathError> {
        if len < 3 || len - 2 > self.r {
            return Err(PathError::CycleLengthOutOfRange {
                len,
                max: self.r + 2,
            });
        }
        if v >= self.n {
            return Err(PathError::VertexOutOfRange { vertex: v, n: self.n });
        }
        Ok(self.count(v, len - 2) / 2)
    }
}

/// `N_q(v)` for a single vertex and length, in lexicographic order.
pub fn enumerate_neighborhood(g: &Graph, v: usize, q: usize) -> Result<Vec<Vec<usize>>, PathError> {
    if v >= g.n() {
        return Err(PathError::VertexOutOfRange { vertex: v, n: g.n() });
    }
    if q == 0 {
        return Err(PathError::ZeroLength);
    }
    let mut buckets = vec![Vec::new(); q];
    let counter = AtomicU64::new(0);
    let mut scratch = Scratch::new(g.n());
    collect_vertex(g, v, q, &mut scratch, &mut buckets, &counter, None)?;
    Ok(buckets[q - 1]
        .chunks_exact(q + 1)
        .map(|p| p.iter().map(|&x| x as usize).collect())
        .collect())
}

/// Precomputes every `N_q(v)` with `q ≤ r` using default options.
pub fn precompute_all(g: &Graph, r: usize) -> Result<PathNeighborhood, PathError> {
    precompute_with(g, r, &PathOptions::default())
}

pub fn precompute_with(g: &Graph, r: usize, opts: &PathOptions) -> Result<PathNeighborhood, PathError> {
    if r > opts.max_r {
        return Err(PathError::LengthTooLarge { r, max: opts.max_r });
    }
    let n = g.n();
    if r == 0 {
        return Ok(PathNeighborhood {
            n,
            r,
            buckets: Vec::new(),
        });
    }
    let counter = AtomicU64::new(0);
    let per_vertex = |v: usize, scratch: &mut Scratch| -> Result<Vec<Vec<u32>>, PathError> {
        let mut buckets = vec![Vec::new(); r];
        collect_vertex(g, v, r, scratch, &mut buckets, &counter, opts.budget)?;
        Ok(buckets)
    };
    let results: Vec<Vec<Vec<u32>>> = if opts.parallel {
        (0..n)
            .into_par_iter()
            .map_init(|| Scratch::new(n), |scratch, v| per_vertex(v, scratch))
            .collect::<Result<_, _>>()?
    } else {
        let mut scratch = Scratch::new(n);
        (0..n)
            .map(|v| per_vertex(v, &mut scratch))
            .collect::<Result<_, _>>()?
    };
    Ok(PathNeighborhood {
        n,
        r,
        buckets: results.into_iter().flatten().collect(),
    })
}

struct Scratch {
    on_path: Vec<bool>,
    is_target: Vec<bool>,
    path: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            on_path: vec![false; n],
            is_target: vec![false; n],
            path: Vec::new(),
        }
    }
}

/// DFS from each neighbor of `v` (in sorted order) with `v` forbidden, recording
/// every prefix of length `q ≤ r` that ends at a neighbor of `v`. Sorted
/// adjacency makes the DFS pre-order lexicographic, so buckets come out sorted.
fn collect_vertex(
    g: &Graph,
    v: usize,
    r: usize,
    s: &mut Scratch,
    buckets: &mut [Vec<u32>],
    counter: &AtomicU64,
    budget: Option<u64>,
) -> Result<(), PathError> {
    let nbrs = g.neighbors(v);
    for &u in nbrs {
        s.is_target[u] = true;
    }
    s.on_path[v] = true;
    let mut result = Ok(());
    for &start in nbrs {
        s.path.clear();
        s.path.push(start as u32);
        s.on_path[start] = true;
        result = extend(g, r, s, buckets, counter, budget);
        s.on_path[start] = false;
        if result.is_err() {
            break;
        }
    }
    s.on_path[v] = false;
    for &u in nbrs {
        s.is_target[u] = false;
    }
    result
}

fn extend(
    g: &Graph,
    r: usize,
    s: &mut Scratch,
    buckets: &mut [Vec<u32>],
    counter: &AtomicU64,
    budget: Option<u64>,
) -> Result<(), PathError> {
    let last = *s.path.last().expect("path is non-empty") as usize;
    let q = s.path.len() - 1;
    if q >= 1 && s.is_target[last] {
        let stored = counter.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(limit) = budget {
            if stored > limit {
                return Err(PathError::BudgetExceeded { limit });
            }
        }
        buckets[q - 1].extend_from_slice(&s.path);
    }
    if q == r {
        return Ok(());
    }
    for &w in g.neighbors(last) {
        if s.on_path[w] {
            continue;
        }
        s.on_path[w] = true;
        s.path.push(w as u32);
        let res = extend(g, r, s, buckets, counter, budget);
        s.path.pop();
        s.on_path[w] = false;
        res?;
    }
    Ok(())
}

/// CSV rows `vertex,q,count` for every vertex and `q ∈ 1..=r`, with a header.
pub fn neighborhood_stats_csv(pn: &PathNeighborhood) -> String {
    let mut out = String::from("vertex,q,count\n");
    for v in 0..pn.n() {
        for q in 1..=pn.r() {
            let _ = writeln!(out, "{v},{q},{}", pn.count(v, q));
        }
    }
    out
}
