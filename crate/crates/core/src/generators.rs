//! Deterministic graph constructions.
//!
//! Random generators take an explicit `u64` seed and draw from ChaCha8, so the
//! same arguments always produce the same graph on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{biconnected_components, Graph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("a cycle needs at least 3 vertices, got {0}")]
    CycleTooShort(usize),
    #[error("invalid skip length {s} for a cycle on {n} vertices")]
    InvalidSkip { n: usize, s: usize },
    #[error("base graph must be connected")]
    Disconnected,
    #[error("base vertex {vertex} has degree {degree}, the limit is {limit}")]
    DegreeBudget { vertex: usize, degree: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Largest base degree accepted by the CFI constructions.
pub const CFI_MAX_DEGREE: usize = 8;

fn build(n: usize, edges: Vec<(usize, usize)>) -> Graph {
    Graph::from_edges(n, edges).expect("generator produced a valid edge list")
}

pub fn gen_cycle(n: usize) -> Result<Graph, GenError> {
    if n < 3 {
        return Err(GenError::CycleTooShort(n));
    }
    Ok(build(n, (0..n).map(|i| (i, (i + 1) % n)).collect()))
}

pub fn gen_path(n: usize) -> Graph {
    build(n, (1..n).map(|i| (i - 1, i)).collect())
}

pub fn gen_complete(n: usize) -> Graph {
    build(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect())
}

/// Erdős–Rényi `G(n, p)`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p.clamp(0.0, 1.0)) {
                edges.push((i, j));
            }
        }
    }
    build(n, edges)
}

/// Connected sparse graph shaped like a small molecule: a random tree plus
/// random extra edges until the average degree reaches `avg_degree`.
pub fn gen_sparse_connected(n: usize, avg_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    let max_m = n * n.saturating_sub(1) / 2;
    let target = ((avg_degree * n as f64 / 2.0).round() as usize).clamp(edges.len(), max_m);
    let mut g = build(n, edges.clone());
    while g.m() < target {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && !g.has_edge(u, v) {
            edges.push((u, v));
            g = build(n, edges.clone());
        }
    }
    g
}

/// Left: `C_{2r+6}` with chord `{0, r+3}`. Right: two copies of `C_{r+3}`
/// joined by the bridge `{0, r+3}`.
pub fn gen_chordal_pair(r: usize) -> (Graph, Graph) {
    let n = 2 * r + 6;
    let half = r + 3;
    let mut left: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    left.push((0, half));
    let mut right = Vec::new();
    for base in [0, half] {
        right.extend((0..half).map(|i| (base + i, base + (i + 1) % half)));
    }
    right.push((0, half));
    (build(n, left), build(n, right))
}

/// Circular skip-link graph: the cycle `C_n` plus chords `{i, i+s mod n}`.
pub fn gen_csl(n: usize, s: usize) -> Result<Graph, GenError> {
    if n < 5 || s < 2 || s + 2 > n {
        return Err(GenError::InvalidSkip { n, s });
    }
    let edges = (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + s) % n)]).collect();
    Ok(build(n, edges))
}

/// Cayley graph of `Z_4 × Z_4` with connection set `±(1,0), ±(0,1), ±(1,1)`.
pub fn gen_shrikhande() -> Graph {
    let id = |a: usize, b: usize| 4 * (a % 4) + (b % 4);
    let mut edges = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for (da, db) in [(1, 0), (0, 1), (1, 1)] {
                edges.push((id(a, b), id(a + da, b + db)));
            }
        }
    }
    build(16, edges)
}

/// The 4×4 rook's graph: cells sharing a row or a column are adjacent.
pub fn gen_rook44() -> Graph {
    let mut edges = Vec::new();
    for u in 0..16 {
        for v in (u + 1)..16 {
            if u / 4 == v / 4 || u % 4 == v % 4 {
                edges.push((u, v));
            }
        }
    }
    build(16, edges)
}

pub fn gen_two_triangles_bridge() -> Graph {
    build(6, vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
}

fn check_cfi_base(base: &Graph) -> Result<(), GenError> {
    if !base.is_connected() {
        return Err(GenError::Disconnected);
    }
    for v in 0..base.n() {
        if base.degree(v) > CFI_MAX_DEGREE {
            return Err(GenError::DegreeBudget {
                vertex: v,
                degree: base.degree(v),
                limit: CFI_MAX_DEGREE,
            });
        }
    }
    Ok(())
}

/// Even-size subsets of `0..d` as bitmasks, in increasing order.
fn even_masks(d: usize) -> impl Iterator<Item = u32> {
    (0u32..(1 << d)).filter(|m| m.count_ones() % 2 == 0)
}

/// Fürer graph of `base`.
///
/// Vertices are pairs `(x, X)` with `X` an even subset of `N(x)`, listed by
/// `x` and then by bitmask over the sorted neighbor list. `(x, X)` and
/// `(y, Y)` are adjacent when `xy` is a base edge and `x ∈ Y ⇔ y ∈ X`. The
/// twisted graph negates that condition on the lexicographically first base
/// edge. Both graphs have `Σ_v 2^(deg v - 1)` vertices.
pub fn gen_cfi(base: &Graph, twisted: bool) -> Result<Graph, GenError> {
    check_cfi_base(base)?;
    let mut offset = vec![0usize; base.n() + 1];
    for v in 0..base.n() {
        offset[v + 1] = offset[v] + (1usize << base.degree(v).saturating_sub(1));
    }
    // position of y in the sorted neighbor list of x
    let pos = |x: usize, y: usize| base.neighbors(x).binary_search(&y).expect("base edge") as u32;
    let twist = base.edges().next();
    let mut edges = Vec::new();
    for (x, y) in base.edges() {
        let flip = twisted && Some((x, y)) == twist;
        let (bit_y, bit_x) = (pos(x, y), pos(y, x));
        for (i, mx) in even_masks(base.degree(x)).enumerate() {
            for (j, my) in even_masks(base.degree(y)).enumerate() {
                let agree = (mx >> bit_y & 1) == (my >> bit_x & 1);
                if agree != flip {
                    edges.push((offset[x] + i, offset[y] + j));
                }
            }
        }
    }
    Ok(build(offset[base.n()], edges))
}

/// Cai–Fürer–Immerman graph with explicit edge gadgets.
///
/// Each base edge `e` contributes two vertices `e^0, e^1`; each base vertex
/// `v` contributes one vertex per even subset `S` of its incident edges,
/// adjacent to `e^1` for `e ∈ S` and to `e^0` otherwise. The twisted graph
/// swaps `e^0` and `e^1` at the lower endpoint of the first base edge. Vertex
/// count is `Σ_v 2^(deg v - 1) + 2 m`. The result is bipartite.
pub fn gen_cfi_classic(base: &Graph, twisted: bool) -> Result<Graph, GenError> {
    check_cfi_base(base)?;
    let base_edges: Vec<(usize, usize)> = base.edges().collect();
    let edge_index = |u: usize, v: usize| {
        let key = (u.min(v), u.max(v));
        base_edges.binary_search(&key).expect("base edge")
    };
    let gadget_total: usize = (0..base.n()).map(|v| 1usize << base.degree(v).saturating_sub(1)).sum();
    let edge_vertex = |e: usize, bit: bool| gadget_total + 2 * e + usize::from(bit);
    let mut edges = Vec::new();
    let mut next = 0;
    for v in 0..base.n() {
        for mask in even_masks(base.degree(v)) {
            for (b, &u) in base.neighbors(v).iter().enumerate() {
                let e = edge_index(v, u);
                let mut inside = mask >> b & 1 == 1;
                if twisted && e == 0 && v == base_edges[0].0 {
                    inside = !inside;
                }
                edges.push((next, edge_vertex(e, inside)));
            }
            next += 1;
        }
    }
    Ok(build(gadget_total + 2 * base_edges.len(), edges))
}

/// Growth state shared by the cactus generators. Each attached cycle
/// remembers its attachment vertex, which is its vertex closest to vertex 0.
struct CactusGrowth {
    n: usize,
    edges: Vec<(usize, usize)>,
}

fn grow_cactus(n_target: usize, max_cycle_len: usize, rng: &mut ChaCha8Rng) -> Result<CactusGrowth, GenError> {
    if n_target == 0 {
        return Err(GenError::InvalidParameter("n_target must be at least 1".into()));
    }
    if max_cycle_len < 2 {
        return Err(GenError::InvalidParameter(format!(
            "max_cycle_len must be at least 2, got {max_cycle_len}"
        )));
    }
    let mut st = CactusGrowth { n: 1, edges: Vec::new() };
    while st.n < n_target {
        let at = rng.gen_range(0..st.n);
        if max_cycle_len < 3 || rng.gen_bool(0.5) {
            st.edges.push((at, st.n));
            st.n += 1;
        } else {
            let len = rng.gen_range(3..=max_cycle_len);
            let mut prev = at;
            for _ in 1..len {
                st.edges.push((prev, st.n));
                prev = st.n;
                st.n += 1;
            }
            st.edges.push((prev, at));
        }
    }
    Ok(st)
}

/// Random cactus grown from `K_1` by attaching pendant edges and cycles of
/// length `3..=max_cycle_len` at uniformly chosen vertices. With
/// `max_cycle_len = 2` only pendant edges are used and the result is a tree.
pub fn gen_random_cactus(n_target: usize, max_cycle_len: usize, seed: u64) -> Result<Graph, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let st = grow_cactus(n_target, max_cycle_len, &mut rng)?;
    Ok(build(st.n, st.edges))
}

/// Random fan cactus rooted at vertex 0: a random cactus plus, per cycle,
/// each chord from the cycle's root-nearest vertex added with `chord_prob`.
pub fn gen_fan_cactus(
    n_target: usize,
    max_cycle_len: usize,
    chord_prob: f64,
    seed: u64,
) -> Result<(Graph, usize), GenError> {
    if !(0.0..=1.0).contains(&chord_prob) {
        return Err(GenError::InvalidParameter(format!("chord_prob {chord_prob} is not in [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let st = grow_cactus(n_target, max_cycle_len, &mut rng)?;
    let g = build(st.n, st.edges);
    Ok((add_fan_chords(&g, 0, chord_prob, &mut rng), 0))
}

/// For every cycle block of the cactus `g`, adds each chord `{v_C, w}` with
/// probability `chord_prob`, where `v_C` is the block vertex nearest `root`.
pub fn add_fan_chords<R: Rng + ?Sized>(g: &Graph, root: usize, chord_prob: f64, rng: &mut R) -> Graph {
    let dist = g.bfs_distances(root);
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    for block in biconnected_components(g) {
        if block.len() < 3 {
            continue;
        }
        let mut verts: Vec<usize> = block.iter().flat_map(|&(u, v)| [u, v]).collect();
        verts.sort_unstable();
        verts.dedup();
        let hub = *verts.iter().min_by_key(|&&v| (dist[v], v)).expect("non-empty block");
        for &w in &verts {
            if w != hub && !g.has_edge(hub, w) && rng.gen_bool(chord_prob) {
                edges.push((hub, w));
            }
        }
    }
    build(g.n(), edges)
}
