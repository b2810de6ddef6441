//! Loopy Weisfeiler-Leman refinement and the tools around it.
//!
//! * [`graph`] and [`io`]: simple undirected graphs, graph6 and edge lists.
//! * [`paths`]: simple paths between neighbors of each vertex.
//! * [`refine`]: 1-WL, r-loopy WL and k-WL color refinement.
//! * [`oracles`]: brute-force homomorphism, subgraph and isomorphism checks.
//! * [`generators`]: deterministic graph families.
//! * [`cactus`]: cactus recognition and canonical tree decompositions.

pub mod cactus;
pub mod generators;
pub mod graph;
pub mod io;
pub mod oracles;
pub mod paths;
pub mod refine;

pub use graph::{Graph, GraphError, VertexPermutation};
pub use refine::{compare_graphs, invariant_fingerprint, Method, RefineOptions};
