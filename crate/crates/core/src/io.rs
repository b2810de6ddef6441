//! graph6 and edge-list text formats.
//!
//! graph6 follows McKay's layout: a size prefix, then the upper triangle of the
//! adjacency matrix in column order `x(0,1), x(0,2), x(1,2), x(0,3), ...`,
//! packed six bits per byte with 63 added to each byte.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{Graph, GraphError};

const HEADER: &str = ">>graph6<<";
const BIAS: u8 = 63;
const MAX_SHORT: usize = 62;
const MAX_MEDIUM: usize = 258_047;
const MAX_LONG: usize = (1 << 36) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Graph6ErrorKind {
    #[error("empty record")]
    Empty,
    #[error("byte {0:#04x} outside the printable range 63..=126")]
    InvalidByte(u8),
    #[error("truncated size prefix")]
    TruncatedSize,
    #[error("expected {expected} adjacency bytes, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("nonzero padding bits in final byte")]
    NonZeroPadding,
}

/// A graph6 decoding failure; `position` is the byte offset within the record
/// (after any header).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("graph6 error at byte {position}: {kind}")]
pub struct Graph6Error {
    pub position: usize,
    pub kind: Graph6ErrorKind,
}

fn g6_err(position: usize, kind: Graph6ErrorKind) -> Graph6Error {
    Graph6Error { position, kind }
}

/// Decodes one graph6 record. Surrounding whitespace and a leading `>>graph6<<`
/// header are ignored.
pub fn parse_graph6(line: &str) -> Result<Graph, Graph6Error> {
    let rec = line.trim();
    let rec = rec.strip_prefix(HEADER).unwrap_or(rec).as_bytes();
    if rec.is_empty() {
        return Err(g6_err(0, Graph6ErrorKind::Empty));
    }
    for (i, &b) in rec.iter().enumerate() {
        if !(BIAS..=126).contains(&b) {
            return Err(g6_err(i, Graph6ErrorKind::InvalidByte(b)));
        }
    }
    let (n, body_start) = decode_size(rec)?;
    let bits = n * n.saturating_sub(1) / 2;
    let expected = bits.div_ceil(6);
    let body = &rec[body_start..];
    if body.len() != expected {
        return Err(g6_err(
            body_start,
            Graph6ErrorKind::WrongLength {
                expected,
                found: body.len(),
            },
        ));
    }
    if bits % 6 != 0 {
        let last = body[expected - 1] - BIAS;
        let pad = 6 - bits % 6;
        if last & ((1 << pad) - 1) != 0 {
            return Err(g6_err(
                body_start + expected - 1,
                Graph6ErrorKind::NonZeroPadding,
            ));
        }
    }

    let mut edges = Vec::new();
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            let byte = body[k / 6] - BIAS;
            if byte >> (5 - k % 6) & 1 == 1 {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    Ok(Graph::from_edges(n, edges).expect("graph6 bit matrix yields a simple graph"))
}

fn decode_size(rec: &[u8]) -> Result<(usize, usize), Graph6Error> {
    let read = |from: usize, count: usize| -> Result<usize, Graph6Error> {
        if rec.len() < from + count {
            return Err(g6_err(rec.len(), Graph6ErrorKind::TruncatedSize));
        }
        Ok(rec[from..from + count]
            .iter()
            .fold(0usize, |acc, &b| (acc << 6) | usize::from(b - BIAS)))
    };
    if rec[0] != 126 {
        return Ok((usize::from(rec[0] - BIAS), 1));
    }
    if rec.len() > 1 && rec[1] == 126 {
        Ok((read(2, 6)?, 8))
    } else {
        Ok((read(1, 3)?, 4))
    }
}

/// Encodes `g` as a single graph6 record (no header, no newline).
pub fn write_graph6(g: &Graph) -> String {
    let n = g.n();
    assert!(n <= MAX_LONG, "graph too large for graph6");
    let mut out: Vec<u8> = Vec::new();
    let push_size = |out: &mut Vec<u8>, count: usize| {
        for shift in (0..count).rev() {
            out.push(((n >> (6 * shift)) & 63) as u8 + BIAS);
        }
    };
    if n <= MAX_SHORT {
        out.push(n as u8 + BIAS);
    } else if n <= MAX_MEDIUM {
        out.push(126);
        push_size(&mut out, 3);
    } else {
        out.extend([126, 126]);
        push_size(&mut out, 6);
    }

    let mut acc = 0u8;
    let mut filled = 0;
    for j in 1..n {
        for i in 0..j {
            acc = (acc << 1) | u8::from(g.has_edge(i, j));
            filled += 1;
            if filled == 6 {
                out.push(acc + BIAS);
                acc = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        out.push((acc << (6 - filled)) + BIAS);
    }
    String::from_utf8(out).expect("graph6 output is ASCII")
}

/// Error while reading a multi-graph text file; `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("line {line}: {source}")]
    Graph6 { line: usize, source: Graph6Error },
    #[error("line {line}: {message}")]
    EdgeList { line: usize, message: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
}

/// Parses a whitespace-separated sequence of graph6 records.
pub fn parse_graph6_dataset(text: &str) -> Result<Vec<Graph>, DatasetError> {
    let mut graphs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        for token in line.split_whitespace() {
            let g = parse_graph6(token).map_err(|source| DatasetError::Graph6 {
                line: idx + 1,
                source,
            })?;
            graphs.push(g);
        }
    }
    Ok(graphs)
}

/// Parses the edge-list format: an `n m` header line followed by `m` lines
/// `u v` (0-indexed). `#` starts a comment; blank lines are ignored.
pub fn parse_edge_list(text: &str) -> Result<Graph, DatasetError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let nums: Result<Vec<usize>, _> = fields.iter().map(|f| f.parse::<usize>()).collect();
        let nums = nums.map_err(|e| DatasetError::EdgeList {
            line,
            message: format!("expected unsigned integers: {e}"),
        })?;
        if nums.len() != 2 {
            return Err(DatasetError::EdgeList {
                line,
                message: format!("expected two integers, found {}", nums.len()),
            });
        }
        match header {
            None => header = Some((nums[0], nums[1], line)),
            Some((n, _, _)) => {
                for &x in &nums {
                    if x >= n {
                        return Err(DatasetError::Graph {
                            line,
                            source: GraphError::VertexOutOfRange { vertex: x, n },
                        });
                    }
                }
                if nums[0] == nums[1] {
                    return Err(DatasetError::Graph {
                        line,
                        source: GraphError::SelfLoop(nums[0]),
                    });
                }
                edges.push((nums[0], nums[1]));
            }
        }
    }
    let (n, m, hline) = header.ok_or(DatasetError::EdgeList {
        line: last_line.max(1),
        message: "missing `n m` header".into(),
    })?;
    if edges.len() != m {
        return Err(DatasetError::EdgeList {
            line: hline,
            message: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Graph::from_edges(n, edges).map_err(|source| DatasetError::Graph { line: hline, source })
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.m());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Reads either format: text whose first meaningful line holds two integers is
/// an edge list, anything else a graph6 dataset.
pub fn parse_graphs_auto(text: &str) -> Result<Vec<Graph>, DatasetError> {
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty());
    let looks_like_edge_list = first.is_some_and(|l| {
        let f: Vec<&str> = l.split_whitespace().collect();
        f.len() == 2 && f.iter().all(|t| t.parse::<usize>().is_ok())
    });
    if looks_like_edge_list {
        Ok(vec![parse_edge_list(text)?])
    } else {
        parse_graph6_dataset(text)
    }
}
