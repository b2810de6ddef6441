//! Brute-force counting and isomorphism oracles.
//!
//! Everything here is deliberately independent of the refinement and path
//! code: hosts are stored as adjacency bitsets and patterns are matched by
//! plain backtracking. These are the reference answers the faster machinery
//! is checked against.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("pattern has {n} vertices, the limit is {max}")]
    PatternTooLarge { n: usize, max: usize },
    #[error("host has {n} vertices, the limit is {max}")]
    HostTooLarge { n: usize, max: usize },
    #[error("search exceeded the budget of {limit} decision nodes")]
    BudgetExceeded { limit: u64 },
    #[error("cycle length {0} is outside 3..=10")]
    CycleLength(usize),
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_pattern: usize,
    pub max_host: usize,
    pub max_spasm_pattern: usize,
    pub max_iso: usize,
    /// Cap on backtracking decision nodes; unlimited when `None`.
    pub budget: Option<u64>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_pattern: 12,
            max_host: 64,
            max_spasm_pattern: 8,
            max_iso: 16,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountResult {
    pub value: BigUint,
    pub elapsed: Duration,
}

impl CountResult {
    fn timed(start: Instant, value: BigUint) -> Self {
        CountResult {
            value,
            elapsed: start.elapsed(),
        }
    }
}

struct Bitsets {
    words: usize,
    rows: Vec<u64>,
}

impl Bitsets {
    fn of(g: &Graph) -> Self {
        let words = g.n().div_ceil(64).max(1);
        let mut rows = vec![0u64; words * g.n()];
        for v in 0..g.n() {
            for &u in g.neighbors(v) {
                rows[v * words + u / 64] |= 1 << (u % 64);
            }
        }
        Bitsets { words, rows }
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.words..(v + 1) * self.words]
    }
}

fn full_mask(n: usize, words: usize) -> Vec<u64> {
    let mut mask = vec![0u64; words];
    for v in 0..n {
        mask[v / 64] |= 1 << (v % 64);
    }
    mask
}

/// Pattern vertices in BFS order per component, each component started at
/// its highest-degree vertex (or at `first` for the first component).
fn pattern_order(f: &Graph, first: Option<usize>) -> Vec<usize> {
    let mut seen = vec![false; f.n()];
    let mut order = Vec::with_capacity(f.n());
    let mut starts: Vec<usize> = first.into_iter().collect();
    let mut by_degree: Vec<usize> = (0..f.n()).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(f.degree(v)), v));
    starts.extend(by_degree);
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut head = order.len();
        order.push(s);
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &u in f.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    order.push(u);
                }
            }
        }
    }
    order
}

struct Matcher<'a> {
    host: &'a Bitsets,
    all: Vec<u64>,
    /// For each position, the earlier positions adjacent to it in the pattern.
    back: Vec<Vec<usize>>,
    injective: bool,
    image: Vec<usize>,
    used: Vec<u64>,
    scratch: Vec<Vec<u64>>,
    nodes: u64,
    budget: Option<u64>,
}

impl<'a> Matcher<'a> {
    fn new(f: &Graph, order: &[usize], host: &'a Bitsets, host_n: usize, injective: bool, budget: Option<u64>) -> Self {
        let mut position = vec![0usize; f.n()];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        let back = order
            .iter()
            .enumerate()
            .map(|(i, &v)| f.neighbors(v).iter().map(|&u| position[u]).filter(|&p| p < i).collect())
            .collect();
        Matcher {
            host,
            all: full_mask(host_n, host.words),
            back,
            injective,
            image: vec![0; order.len()],
            used: vec![0; host.words],
            scratch: vec![vec![0; host.words]; order.len()],
            nodes: 0,
            budget,
        }
    }

    fn candidates(&mut self, depth: usize) {
        let mut cand = std::mem::take(&mut self.scratch[depth]);
        cand.copy_from_slice(&self.all);
        for &p in &self.back[depth] {
            for (c, r) in cand.iter_mut().zip(self.host.row(self.image[p])) {
                *c &= r;
            }
        }
        if self.injective {
            for (c, u) in cand.iter_mut().zip(&self.used) {
                *c &= !u;
            }
        }
        self.scratch[depth] = cand;
    }

    fn count_from(&mut self, depth: usize) -> Result<u128, OracleError> {
        self.nodes += 1;
        if let Some(limit) = self.budget {
            if self.nodes > limit {
                return Err(OracleError::BudgetExceeded { limit });
            }
        }
        self.candidates(depth);
        if depth + 1 == self.image.len() {
            return Ok(self.scratch[depth].iter().map(|w| u128::from(w.count_ones())).sum());
        }
        let mut total = 0u128;
        for w in 0..self.host.words {
            let mut bits = self.scratch[depth][w];
            while bits != 0 {
                let v = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                self.image[depth] = v;
                self.used[w] |= 1 << (v % 64);
                let sub = self.count_from(depth + 1);
                self.used[w] &= !(1 << (v % 64));
                total += sub?;
            }
        }
        Ok(total)
    }

    /// Counts extensions of a map with position 0 pinned to `v`.
    fn count_pinned(&mut self, v: usize) -> Result<u128, OracleError> {
        self.image[0] = v;
        self.used[v / 64] |= 1 << (v % 64);
        let res = if self.image.len() == 1 { Ok(1) } else { self.count_from(1) };
        self.used[v / 64] &= !(1 << (v % 64));
        res
    }
}

fn check_limits(f: &Graph, g: &Graph, limits: &OracleLimits) -> Result<(), OracleError> {
    if f.n() > limits.max_pattern {
        return Err(OracleError::PatternTooLarge {
            n: f.n(),
            max: limits.max_pattern,
        });
    }
    if g.n() > limits.max_host {
        return Err(OracleError::HostTooLarge {
            n: g.n(),
            max: limits.max_host,
        });
    }
    Ok(())
}

fn count_maps(f: &Graph, g: &Graph, injective: bool, limits: &OracleLimits) -> Result<BigUint, OracleError> {
    if f.n() == 0 {
        return Ok(BigUint::from(1u8));
    }
    if g.n() == 0 {
        return Ok(BigUint::from(0u8));
    }
    let host = Bitsets::of(g);
    let order = pattern_order(f, None);
    let mut m = Matcher::new(f, &order, &host, g.n(), injective, limits.budget);
    Ok(BigUint::from(m.count_from(0)?))
}

/// Number of edge-preserving maps `V(f) → V(g)`.
pub fn hom_count(f: &Graph, g: &Graph, limits: &OracleLimits) -> Result<CountResult, OracleError> {
    let start = Instant::now();
    check_limits(f, g, limits)?;
    let (comp, k) = f.components();
    let mut value = BigUint::from(1u8);
    for c in 0..k {
        let verts: Vec<usize> = (0..f.n()).filter(|&v| comp[v] == c).collect();
        let part = crate::graph::induced_subgraph(f, &verts).expect("component vertices are in range");
        value *= count_maps(&part, g, false, limits)?;
    }
    Ok(CountResult::timed(start, value))
}

/// Number of injective homomorphisms `f → g`.
pub fn sub_count(f: &Graph, g: &Graph, limits: &OracleLimits) -> Result<CountResult, OracleError> {
    let start = Instant::now();
    check_limits(f, g, limits)?;
    if f.n() > g.n() {
        return Ok(CountResult::timed(start, BigUint::from(0u8)));
    }
    Ok(CountResult::timed(start, count_maps(f, g, true, limits)?))
}

/// Injective homomorphisms `f → g` sending `root` to `v`.
pub fn rooted_sub_count(
    f: &Graph,
    root: usize,
    g: &Graph,
    v: usize,
    limits: &OracleLimits,
) -> Result<CountResult, OracleError> {
    let start = Instant::now();
    check_limits(f, g, limits)?;
    if root >= f.n() {
        return Err(OracleError::VertexOutOfRange { vertex: root, n: f.n() });
    }
    if v >= g.n() {
        return Err(OracleError::VertexOutOfRange { vertex: v, n: g.n() });
    }
    let host = Bitsets::of(g);
    let order = pattern_order(f, Some(root));
    let mut m = Matcher::new(f, &order, &host, g.n(), true, limits.budget);
    Ok(CountResult::timed(start, BigUint::from(m.count_pinned(v)?)))
}

/// Injective maps of `C_len` into `g` fixing one cycle vertex at `v`; twice
/// the number of `len`-cycles through `v`.
pub fn rooted_sub_cycle(g: &Graph, v: usize, len: usize) -> Result<CountResult, OracleError> {
    if !(3..=10).contains(&len) {
        return Err(OracleError::CycleLength(len));
    }
    let cycle = Graph::from_edges(len, (0..len).map(|i| (i, (i + 1) % len))).expect("cycle edges are valid");
    let limits = OracleLimits {
        max_host: usize::MAX,
        ..OracleLimits::default()
    };
    rooted_sub_count(&cycle, 0, g, v, &limits)
}

pub fn is_forest(g: &Graph) -> bool {
    g.m() + g.component_count() == g.n()
}

/// Homomorphic images of `f` under surjective maps, one per isomorphism class.
///
/// Enumerates set partitions of `V(f)` with independent blocks as restricted
/// growth strings and keeps the simple quotient graphs.
pub fn spasm(f: &Graph, limits: &OracleLimits) -> Result<Vec<Graph>, OracleError> {
    if f.n() > limits.max_spasm_pattern {
        return Err(OracleError::PatternTooLarge {
            n: f.n(),
            max: limits.max_spasm_pattern,
        });
    }
    let mut reps: Vec<Graph> = Vec::new();
    let mut block = vec![0usize; f.n()];
    let mut err = None;
    partitions(f, 0, 0, &mut block, &mut |blocks, count| {
        if err.is_some() {
            return;
        }
        let edges = f.edges().map(|(u, v)| (blocks[u], blocks[v]));
        let q = Graph::from_edges(count, edges).expect("independent blocks give a simple quotient");
        let mut fresh = true;
        for r in &reps {
            match is_iso_bruteforce(r, &q, limits) {
                Ok(true) => {
                    fresh = false;
                    break;
                }
                Ok(false) => {}
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
        }
        if fresh {
            reps.push(q);
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(reps),
    }
}

fn partitions(f: &Graph, v: usize, used: usize, block: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize], usize)) {
    if v == f.n() {
        emit(block, used);
        return;
    }
    for b in 0..=used {
        if f.neighbors(v).iter().any(|&u| u < v && block[u] == b) {
            continue;
        }
        block[v] = b;
        partitions(f, v + 1, used.max(b + 1), block, emit);
    }
}

/// Joint color refinement on `f ⊔ g`, returning colors for both sides.
fn joint_colors(f: &Graph, g: &Graph) -> (Vec<usize>, Vec<usize>) {
    let nf = f.n();
    let nbrs = |v: usize| -> Vec<usize> {
        if v < nf {
            f.neighbors(v).to_vec()
        } else {
            g.neighbors(v - nf).iter().map(|&u| u + nf).collect()
        }
    };
    let total = nf + g.n();
    let mut colors = vec![0usize; total];
    let mut classes = 1;
    loop {
        let mut sigs: Vec<(usize, Vec<usize>, usize)> = (0..total)
            .map(|v| {
                let mut s: Vec<usize> = nbrs(v).into_iter().map(|u| colors[u]).collect();
                s.sort_unstable();
                (colors[v], s, v)
            })
            .collect();
        sigs.sort();
        let mut next = vec![0usize; total];
        let mut id = 0;
        for i in 0..total {
            if i > 0 && (sigs[i].0 != sigs[i - 1].0 || sigs[i].1 != sigs[i - 1].1) {
                id += 1;
            }
            next[sigs[i].2] = id;
        }
        let new_classes = if total == 0 { 0 } else { id + 1 };
        colors = next;
        if new_classes == classes {
            break;
        }
        classes = new_classes;
    }
    let g_colors = colors.split_off(nf);
    (colors, g_colors)
}

/// Exhaustive isomorphism test with degree and color-refinement pruning.
pub fn is_iso_bruteforce(f: &Graph, g: &Graph, limits: &OracleLimits) -> Result<bool, OracleError> {
    if f.n() > limits.max_iso || g.n() > limits.max_iso {
        return Err(OracleError::PatternTooLarge {
            n: f.n().max(g.n()),
            max: limits.max_iso,
        });
    }
    if f.n() != g.n() || f.m() != g.m() || f.degree_sequence() != g.degree_sequence() {
        return Ok(false);
    }
    let (cf, cg) = joint_colors(f, g);
    let mut hf = cf.clone();
    let mut hg = cg.clone();
    hf.sort_unstable();
    hg.sort_unstable();
    if hf != hg {
        return Ok(false);
    }
    let order = pattern_order(f, None);
    let mut image = vec![usize::MAX; f.n()];
    let mut taken = vec![false; g.n()];
    let mut nodes = 0u64;
    extend_iso(f, g, &cf, &cg, &order, 0, &mut image, &mut taken, &mut nodes, limits.budget)
}

#[allow(clippy::too_many_arguments)]
fn extend_iso(
    f: &Graph,
    g: &Graph,
    cf: &[usize],
    cg: &[usize],
    order: &[usize],
    depth: usize,
    image: &mut [usize],
    taken: &mut [bool],
    nodes: &mut u64,
    budget: Option<u64>,
) -> Result<bool, OracleError> {
    if depth == order.len() {
        return Ok(true);
    }
    *nodes += 1;
    if let Some(limit) = budget {
        if *nodes > limit {
            return Err(OracleError::BudgetExceeded { limit });
        }
    }
    let v = order[depth];
    for w in 0..g.n() {
        if taken[w] || cg[w] != cf[v] {
            continue;
        }
        let consistent = order[..depth]
            .iter()
            .all(|&u| f.has_edge(u, v) == g.has_edge(image[u], w));
        if !consistent {
            continue;
        }
        image[v] = w;
        taken[w] = true;
        let found = extend_iso(f, g, cf, cg, order, depth + 1, image, taken, nodes, budget)?;
        taken[w] = false;
        if found {
            return Ok(true);
        }
    }
    image[v] = usize::MAX;
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::*;
    use crate::graph::{disjoint_union, permute, VertexPermutation};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn lim() -> OracleLimits {
        OracleLimits::default()
    }

    fn hom(f: &Graph, g: &Graph) -> BigUint {
        hom_count(f, g, &lim()).unwrap().value
    }

    fn sub(f: &Graph, g: &Graph) -> BigUint {
        sub_count(f, g, &lim()).unwrap().value
    }

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    /// Enumerates every map `V(f) → V(g)` directly.
    fn naive_count(f: &Graph, g: &Graph, injective: bool) -> u64 {
        let mut map = vec![0usize; f.n()];
        let mut total = 0;
        loop {
            let ok_inj = !injective || {
                let mut s = map.clone();
                s.sort_unstable();
                s.windows(2).all(|w| w[0] != w[1])
            };
            if ok_inj && f.edges().all(|(u, v)| g.has_edge(map[u], map[v])) {
                total += 1;
            }
            let mut i = 0;
            loop {
                if i == f.n() {
                    return total;
                }
                map[i] += 1;
                if map[i] < g.n() {
                    break;
                }
                map[i] = 0;
                i += 1;
            }
        }
    }

    fn p(n: usize) -> Graph {
        gen_path(n)
    }

    fn c(n: usize) -> Graph {
        gen_cycle(n).unwrap()
    }

    #[test]
    fn small_counts() {
        let g = gen_gnp(9, 0.4, 1);
        assert_eq!(hom(&gen_complete(2), &g), big(2 * g.m() as u64));
        assert_eq!(hom(&c(3), &gen_complete(3)), big(6));
        assert_eq!(sub(&c(3), &gen_complete(3)), big(6));
        assert_eq!(sub(&c(4), &c(4)), big(8));
        let chorded = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
        assert_eq!(sub(&c(3), &chorded), big(0));
        assert_eq!(hom(&Graph::empty(0), &g), big(1));
        assert_eq!(hom(&Graph::empty(3), &g), big(729));
        assert_eq!(hom(&p(2), &Graph::empty(0)), big(0));
        assert_eq!(sub(&p(5), &p(3)), big(0));
    }

    #[test]
    fn multi_word_hosts() {
        let g = gen_cycle(100).unwrap();
        let limits = OracleLimits {
            max_host: 128,
            ..lim()
        };
        assert_eq!(hom_count(&p(3), &g, &limits).unwrap().value, big(400));
        assert_eq!(sub_count(&c(4), &gen_complete(70), &OracleLimits { max_host: 70, ..lim() }).unwrap().value, big(70 * 69 * 68 * 67));
    }

    #[test]
    fn matches_naive_enumeration() {
        let patterns = [p(3), p(4), c(3), c(4), gen_two_triangles_bridge(), Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap()];
        for seed in 0..8 {
            let g = gen_gnp(6, 0.5, seed);
            for f in &patterns {
                assert_eq!(hom(f, &g), big(naive_count(f, &g, false)));
                assert_eq!(sub(f, &g), big(naive_count(f, &g, true)));
            }
        }
    }

    #[test]
    fn limits_and_budget() {
        let big_host = gen_path(65);
        assert!(matches!(hom_count(&p(2), &big_host, &lim()), Err(OracleError::HostTooLarge { n: 65, .. })));
        assert!(matches!(hom_count(&p(13), &p(3), &lim()), Err(OracleError::PatternTooLarge { n: 13, .. })));
        let tight = OracleLimits { budget: Some(50), ..lim() };
        assert_eq!(hom_count(&p(8), &gen_complete(10), &tight), Err(OracleError::BudgetExceeded { limit: 50 }));
    }

    #[test]
    fn rooted_cycles() {
        assert_eq!(rooted_sub_cycle(&c(5), 3, 5).unwrap().value, big(2));
        let k4 = gen_complete(4);
        for v in 0..4 {
            assert_eq!(rooted_sub_cycle(&k4, v, 3).unwrap().value, big(6));
        }
        let tree = gen_random_cactus(10, 2, 3).unwrap();
        assert_eq!(rooted_sub_cycle(&tree, 0, 4).unwrap().value, big(0));
        assert_eq!(rooted_sub_cycle(&k4, 0, 2), Err(OracleError::CycleLength(2)));
        assert_eq!(rooted_sub_cycle(&k4, 0, 11), Err(OracleError::CycleLength(11)));
        assert!(matches!(rooted_sub_cycle(&k4, 9, 3), Err(OracleError::VertexOutOfRange { .. })));
    }

    #[test]
    fn forests() {
        assert!(is_forest(&p(5)));
        assert!(!is_forest(&c(3)));
        assert!(is_forest(&Graph::empty(0)));
        assert!(is_forest(&Graph::empty(4)));
    }

    #[test]
    fn spasm_examples() {
        let s = spasm(&p(3), &lim()).unwrap();
        assert_eq!(s.len(), 2);
        for w in [p(3), p(2)] {
            assert!(s.iter().any(|h| is_iso_bruteforce(h, &w, &lim()).unwrap()));
        }
        let s = spasm(&c(4), &lim()).unwrap();
        let want = [c(4), p(3), p(2)];
        assert_eq!(s.len(), 3);
        for w in &want {
            assert!(s.iter().any(|h| is_iso_bruteforce(h, w, &lim()).unwrap()));
        }
        assert_eq!(spasm(&gen_complete(3), &lim()).unwrap().len(), 1);
        assert!(spasm(&p(9), &lim()).is_err());
    }

    #[test]
    fn isomorphism_examples() {
        let c6 = c(6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let relabeled = permute(&c6, &VertexPermutation::random(6, &mut rng)).unwrap();
        assert!(is_iso_bruteforce(&c6, &relabeled, &lim()).unwrap());
        let two_triangles = disjoint_union(&c(3), &c(3));
        assert!(!is_iso_bruteforce(&c6, &two_triangles, &lim()).unwrap());
        assert!(!is_iso_bruteforce(&gen_shrikhande(), &gen_rook44(), &lim()).unwrap());
        let s2 = permute(&gen_shrikhande(), &VertexPermutation::random(16, &mut rng)).unwrap();
        assert!(is_iso_bruteforce(&gen_shrikhande(), &s2, &lim()).unwrap());
        assert!(is_iso_bruteforce(&gen_csl(11, 2).unwrap(), &gen_csl(11, 9).unwrap(), &lim()).unwrap());
        assert!(is_iso_bruteforce(&p(17), &p(17), &lim()).is_err());
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                let mut edges = Vec::new();
                let mut k = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if bits[k] {
                            edges.push((i, j));
                        }
                        k += 1;
                    }
                }
                Graph::from_edges(n, edges).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hom_dominates_sub(f in arb_graph(5), g in arb_graph(8)) {
            prop_assert!(hom(&f, &g) >= sub(&f, &g));
        }

        #[test]
        fn hom_is_multiplicative(f1 in arb_graph(4), f2 in arb_graph(4), g in arb_graph(7)) {
            let u = disjoint_union(&f1, &f2);
            prop_assert_eq!(hom(&u, &g), hom(&f1, &g) * hom(&f2, &g));
        }

        #[test]
        fn complete_patterns_have_equal_counts(k in 1usize..5, g in arb_graph(8)) {
            let f = gen_complete(k);
            prop_assert_eq!(hom(&f, &g), sub(&f, &g));
        }

        #[test]
        fn iso_is_relabeling_invariant(g in arb_graph(9), seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let h = permute(&g, &VertexPermutation::random(g.n(), &mut rng)).unwrap();
            prop_assert!(is_iso_bruteforce(&g, &h, &lim()).unwrap());
        }
    }
}
