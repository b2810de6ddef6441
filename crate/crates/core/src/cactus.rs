//! Cactus recognition and canonical tree decompositions of fan cacti.
//!
//! A fan cactus is a cactus where each cycle may additionally carry chords
//! from its vertex closest to the root. The decomposition uses three gadget
//! kinds: a singleton bag per vertex, a two-vertex bag per bridge, and per
//! cycle `v0 v1 .. v(k-1)` (with `v0` nearest the root) the bag path
//! `{v0,v1}, {v0,v1,v2}, {v0,v2}, .., {v0,v(k-1)}`.
//!
//! Of the two directions around a cycle, the one whose sequence of
//! `(chord to v0, canonical code of the sub-cactus hanging below v_i)` is
//! lexicographically smaller is used, so isomorphic rooted inputs produce
//! isomorphic decompositions.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{biconnected_components, Graph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CactusError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("root {root} out of range for a graph on {n} vertices")]
    RootOutOfRange { root: usize, n: usize },
    #[error("not a fan cactus: {0}")]
    NotFanCactus(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GadgetKind {
    Node,
    Edge,
    Cycle,
}

impl GadgetKind {
    fn tag(self) -> char {
        match self {
            GadgetKind::Node => 'N',
            GadgetKind::Edge => 'E',
            GadgetKind::Cycle => 'C',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub tree: Graph,
    /// Sorted vertex sets, one per tree node.
    pub bags: Vec<Vec<usize>>,
    pub root: usize,
    pub kinds: Vec<GadgetKind>,
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1)
    }

    pub fn num_nodes(&self) -> usize {
        self.bags.len()
    }
}

#[derive(Serialize)]
struct TdJson<'a> {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    bags: &'a [Vec<usize>],
    kinds: &'a [GadgetKind],
    root: usize,
}

impl Serialize for TreeDecomposition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TdJson {
            nodes: self.bags.len(),
            edges: self.tree.edges().collect(),
            bags: &self.bags,
            kinds: &self.kinds,
            root: self.root,
        }
        .serialize(serializer)
    }
}

fn block_vertices(block: &[(usize, usize)]) -> Vec<usize> {
    let mut vs: Vec<usize> = block.iter().flat_map(|&(u, v)| [u, v]).collect();
    vs.sort_unstable();
    vs.dedup();
    vs
}

/// Every block is a single edge or a cycle.
pub fn is_cactus(g: &Graph) -> bool {
    biconnected_components(g)
        .iter()
        .all(|b| b.len() == 1 || b.len() == block_vertices(b).len())
}

/// A cactus whose cycles have at most `r` vertices; for `r < 3` a forest.
pub fn is_r_cactus(g: &Graph, r: usize) -> bool {
    biconnected_components(g)
        .iter()
        .all(|b| b.len() == 1 || (b.len() == block_vertices(b).len() && b.len() <= r))
}

struct CycleBlock {
    hub: usize,
    /// Vertices of the cycle after the hub, in the chosen direction.
    order: Vec<usize>,
}

enum Block {
    Bridge { hub: usize, other: usize },
    Cycle(CycleBlock),
}

/// Path order of `block − hub` and the per-vertex chord flags.
fn cycle_path(g: &Graph, hub: usize, verts: &[usize], block: &[(usize, usize)]) -> Result<(Vec<usize>, Vec<bool>), CactusError> {
    let rest: Vec<usize> = verts.iter().copied().filter(|&v| v != hub).collect();
    let in_rest = |v: usize| rest.binary_search(&v).is_ok();
    let mut path_adj: Vec<Vec<usize>> = vec![Vec::new(); rest.len()];
    let idx = |v: usize| rest.binary_search(&v).expect("block vertex");
    let mut path_edges = 0;
    for &(u, v) in block {
        if u != hub && v != hub {
            path_adj[idx(u)].push(v);
            path_adj[idx(v)].push(u);
            path_edges += 1;
        }
    }
    let bad = |why: &str| Err(CactusError::NotFanCactus(format!("block at vertex {hub}: {why}")));
    if path_edges + 1 != rest.len() || path_adj.iter().any(|a| a.len() > 2) {
        return bad("removing the root-nearest vertex does not leave a path");
    }
    let ends: Vec<usize> = rest.iter().copied().filter(|&v| path_adj[idx(v)].len() < 2).collect();
    let start = ends[0];
    let mut order = vec![start];
    let mut prev = usize::MAX;
    while order.len() < rest.len() {
        let cur = *order.last().expect("non-empty");
        let next = path_adj[idx(cur)]
            .iter()
            .copied()
            .find(|&w| w != prev && in_rest(w));
        match next {
            Some(w) => {
                prev = cur;
                order.push(w);
            }
            None => return bad("path part is disconnected"),
        }
    }
    let (first, last) = (order[0], *order.last().expect("non-empty"));
    if !g.has_edge(hub, first) || !g.has_edge(hub, last) {
        return bad("path ends are not both adjacent to the root-nearest vertex");
    }
    let chords = order
        .iter()
        .enumerate()
        .map(|(i, &v)| i != 0 && i + 1 != order.len() && g.has_edge(hub, v))
        .collect();
    Ok((order, chords))
}

/// Rooted block structure plus canonical codes of every hanging sub-cactus.
struct RootedCactus {
    child_blocks: Vec<Vec<Block>>,
}

fn analyze(g: &Graph, root: usize) -> Result<RootedCactus, CactusError> {
    if root >= g.n() {
        return Err(CactusError::RootOutOfRange { root, n: g.n() });
    }
    if !g.is_connected() {
        return Err(CactusError::Disconnected);
    }
    let dist = g.bfs_distances(root);
    struct Raw {
        hub: usize,
        verts: Vec<usize>,
        path: Option<(Vec<usize>, Vec<bool>)>,
    }
    let mut raws = Vec::new();
    for block in biconnected_components(g) {
        let verts = block_vertices(&block);
        let hub = *verts.iter().min_by_key(|&&v| dist[v]).expect("non-empty block");
        let path = if block.len() == 1 {
            None
        } else {
            Some(cycle_path(g, hub, &verts, &block)?)
        };
        raws.push(Raw { hub, verts, path });
    }

    let mut by_hub: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for (i, r) in raws.iter().enumerate() {
        by_hub[r.hub].push(i);
    }
    let mut vertices: Vec<usize> = (0..g.n()).collect();
    vertices.sort_by_key(|&v| std::cmp::Reverse(dist[v]));

    let mut code: Vec<String> = vec![String::new(); g.n()];
    let mut chosen: Vec<Option<(String, Block)>> = (0..raws.len()).map(|_| None).collect();
    for &x in &vertices {
        let mut parts: Vec<String> = Vec::new();
        for &bi in &by_hub[x] {
            let raw = &raws[bi];
            let (c, block) = match &raw.path {
                None => {
                    let other = raw.verts.iter().copied().find(|&v| v != x).expect("edge block");
                    (format!("b{}", code[other]), Block::Bridge { hub: x, other })
                }
                Some((order, chords)) => {
                    let fwd: Vec<(bool, &str)> = order.iter().zip(chords).map(|(&v, &c)| (c, code[v].as_str())).collect();
                    let bwd: Vec<(bool, &str)> = fwd.iter().rev().copied().collect();
                    let (seq, ord) = if bwd < fwd {
                        (bwd, order.iter().rev().copied().collect())
                    } else {
                        (fwd, order.clone())
                    };
                    let mut c = String::from("c[");
                    for (chord, sub) in seq {
                        c.push(if chord { '+' } else { '-' });
                        c.push_str(sub);
                    }
                    c.push(']');
                    (c, Block::Cycle(CycleBlock { hub: x, order: ord }))
                }
            };
            parts.push(c.clone());
            chosen[bi] = Some((c, block));
        }
        parts.sort();
        code[x] = format!("({})", parts.concat());
    }

    let mut child_blocks: Vec<Vec<(String, Block)>> = (0..g.n()).map(|_| Vec::new()).collect();
    for entry in chosen.into_iter() {
        let (c, b) = entry.expect("every block visited");
        let hub = match &b {
            Block::Bridge { hub, .. } => *hub,
            Block::Cycle(cb) => cb.hub,
        };
        child_blocks[hub].push((c, b));
    }
    let child_blocks = child_blocks
        .into_iter()
        .map(|mut v| {
            v.sort_by(|a, b| a.0.cmp(&b.0));
            v.into_iter().map(|(_, b)| b).collect()
        })
        .collect();
    Ok(RootedCactus { child_blocks })
}

/// Canonical decomposition of a connected fan cactus rooted at `root`.
///
/// Tree nodes `0..n` are the vertex gadgets (node `v` has bag `{v}`); bridge
/// and cycle gadgets follow in depth-first order from the root.
pub fn canonical_tree_decomposition(g: &Graph, root: usize) -> Result<TreeDecomposition, CactusError> {
    let rc = analyze(g, root)?;
    let mut bags: Vec<Vec<usize>> = (0..g.n()).map(|v| vec![v]).collect();
    let mut kinds = vec![GadgetKind::Node; g.n()];
    let mut links: Vec<(usize, usize)> = Vec::new();
    let mut push = |bag: Vec<usize>, kind: GadgetKind, bags: &mut Vec<Vec<usize>>| {
        let mut bag = bag;
        bag.sort_unstable();
        bags.push(bag);
        kinds.push(kind);
        bags.len() - 1
    };
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        for block in rc.child_blocks[x].iter().rev() {
            match block {
                Block::Bridge { hub, other } => {
                    let t = push(vec![*hub, *other], GadgetKind::Edge, &mut bags);
                    links.push((*hub, t));
                    links.push((*other, t));
                    stack.push(*other);
                }
                Block::Cycle(cb) => {
                    let v0 = cb.hub;
                    let vs = &cb.order;
                    let mut prev = push(vec![v0, vs[0]], GadgetKind::Cycle, &mut bags);
                    links.push((v0, prev));
                    links.push((vs[0], prev));
                    for i in 1..vs.len() {
                        let three = push(vec![v0, vs[i - 1], vs[i]], GadgetKind::Cycle, &mut bags);
                        links.push((prev, three));
                        let two = push(vec![v0, vs[i]], GadgetKind::Cycle, &mut bags);
                        links.push((three, two));
                        links.push((vs[i], two));
                        prev = two;
                    }
                    stack.extend(vs.iter().rev());
                }
            }
        }
    }
    let tree = Graph::from_edges(bags.len(), links).expect("gadget links are valid");
    Ok(TreeDecomposition {
        tree,
        bags,
        root,
        kinds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// The decomposition graph is not a tree, or the root is missing.
    NotATree,
    EmptyBag { node: usize },
    VertexOutOfRange { node: usize, vertex: usize },
    VertexNotCovered { vertex: usize },
    EdgeNotCovered { u: usize, v: usize },
    DisconnectedOccurrences { vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violation: Option<Violation>,
    pub width: usize,
}

/// Checks the tree-decomposition axioms and reports the first violation.
pub fn validate_tree_decomposition(g: &Graph, td: &TreeDecomposition) -> ValidationReport {
    let report = |violation: Option<Violation>| ValidationReport {
        valid: violation.is_none(),
        violation,
        width: td.width(),
    };
    let t = &td.tree;
    if t.n() != td.bags.len() || t.n() == 0 || td.root >= t.n() || !t.is_connected() || t.m() + 1 != t.n() {
        return report(Some(Violation::NotATree));
    }
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for (node, bag) in td.bags.iter().enumerate() {
        if bag.is_empty() {
            return report(Some(Violation::EmptyBag { node }));
        }
        for &v in bag {
            if v >= g.n() {
                return report(Some(Violation::VertexOutOfRange { node, vertex: v }));
            }
            holders[v].push(node);
        }
    }
    if let Some(vertex) = (0..g.n()).find(|&v| holders[v].is_empty()) {
        return report(Some(Violation::VertexNotCovered { vertex }));
    }
    for (u, v) in g.edges() {
        let covered = holders[u].iter().any(|&node| td.bags[node].binary_search(&v).is_ok());
        if !covered {
            return report(Some(Violation::EdgeNotCovered { u, v }));
        }
    }
    let mut mark = vec![false; t.n()];
    for (vertex, nodes) in holders.iter().enumerate() {
        for &x in nodes {
            mark[x] = true;
        }
        let mut seen = 1;
        let mut visited = vec![false; t.n()];
        let mut queue = VecDeque::from([nodes[0]]);
        visited[nodes[0]] = true;
        while let Some(x) = queue.pop_front() {
            for &y in t.neighbors(x) {
                if mark[y] && !visited[y] {
                    visited[y] = true;
                    seen += 1;
                    queue.push_back(y);
                }
            }
        }
        for &x in nodes {
            mark[x] = false;
        }
        if seen != nodes.len() {
            return report(Some(Violation::DisconnectedOccurrences { vertex }));
        }
    }
    report(None)
}

fn rooted_parents(td: &TreeDecomposition) -> (Vec<usize>, Vec<usize>) {
    let t = &td.tree;
    let mut parent = vec![usize::MAX; t.n()];
    let mut order = vec![td.root];
    parent[td.root] = td.root;
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for &y in t.neighbors(x) {
            if parent[y] == usize::MAX {
                parent[y] = x;
                order.push(y);
            }
        }
    }
    (parent, order)
}

/// Maximum node depth, where a tree step counts only if one of its two bags
/// is a singleton.
pub fn td_depth(td: &TreeDecomposition) -> usize {
    let (parent, order) = rooted_parents(td);
    let mut depth = vec![0usize; td.bags.len()];
    for &x in order.iter().skip(1) {
        let p = parent[x];
        let step = td.bags[x].len() == 1 || td.bags[p].len() == 1;
        depth[x] = depth[p] + usize::from(step);
    }
    depth.into_iter().max().unwrap_or(0)
}

/// AHU encoding of the rooted decomposition tree; each node is labeled by
/// its gadget kind, bag size and the number of `g`-edges inside the bag.
pub fn td_canonical_code(td: &TreeDecomposition, g: &Graph) -> String {
    let (parent, order) = rooted_parents(td);
    let mut children: Vec<Vec<String>> = vec![Vec::new(); td.bags.len()];
    let mut root_code = String::new();
    for &x in order.iter().rev() {
        let bag = &td.bags[x];
        let inner = bag
            .iter()
            .enumerate()
            .map(|(i, &u)| bag[i + 1..].iter().filter(|&&v| g.has_edge(u, v)).count())
            .sum::<usize>();
        let mut kids = std::mem::take(&mut children[x]);
        kids.sort();
        let code = format!("{}{}{}({})", td.kinds[x].tag(), bag.len(), inner, kids.concat());
        if x == td.root {
            root_code = code;
        } else {
            children[parent[x]].push(code);
        }
    }
    root_code
}
