//! Command implementations behind the `loopywl` binary.
//!
//! Every command returns a serializable report; `main.rs` only parses
//! arguments, picks the output format and maps results to exit codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use loopywl::cactus::{canonical_tree_decomposition, td_canonical_code, td_depth, validate_tree_decomposition, TreeDecomposition, ValidationReport};
use loopywl::generators as gens;
use loopywl::graph::Graph;
use loopywl::io::{parse_graph6, parse_graphs_auto, write_graph6, DatasetError};
use loopywl::oracles::{hom_count, sub_count, OracleError, OracleLimits};
use loopywl::paths::{precompute_with, PathError, PathOptions};
use loopywl::refine::{compare_graphs, loopy_refine, refine, Comparison, Method, RefineError, RefineOptions};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Path budget used when neither the flag nor the environment sets one.
pub const DEFAULT_PATH_BUDGET: u64 = 2_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}: {source}")]
    Dataset { origin: String, source: DatasetError },
    #[error("{0}")]
    Refine(#[from] RefineError),
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Paths(#[from] PathError),
    #[error("{0}")]
    Generator(#[from] gens::GenError),
    #[error("{0}")]
    Cactus(#[from] loopywl::cactus::CactusError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    /// Refinement method, absent for commands that do not refine.
    pub method: Option<String>,
    pub max_iters: Option<usize>,
    pub path_budget: Option<u64>,
    pub threads: usize,
    pub seed: u64,
}

impl Config {
    pub fn new(method: Option<&Method>) -> Self {
        Config {
            method: method.map(Method::to_string),
            max_iters: None,
            path_budget: Some(DEFAULT_PATH_BUDGET),
            threads: 1,
            seed: 0,
        }
    }

    pub fn refine_options(&self) -> RefineOptions {
        RefineOptions {
            max_iters: self.max_iters.unwrap_or(usize::MAX),
            paths: self.path_options(),
            ..RefineOptions::default()
        }
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions {
            budget: self.path_budget,
            ..PathOptions::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
    }
}

/// Envelope shared by every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: Config,
    pub results: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &'static str, config: Config, results: T) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command,
            config,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Reads graphs from a file (graph6 dataset or edge list); an argument that
/// is not an existing path is parsed as a single graph6 record.
pub fn load_graphs(arg: &str) -> Result<Vec<Graph>, CliError> {
    if Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).map_err(|source| CliError::Io {
            path: arg.to_string(),
            source,
        })?;
        parse_graphs_auto(&text).map_err(|source| CliError::Dataset {
            origin: arg.to_string(),
            source,
        })
    } else {
        parse_graph6(arg)
            .map(|g| vec![g])
            .map_err(|source| CliError::Dataset {
                origin: "argument".to_string(),
                source: DatasetError::Graph6 { line: 1, source },
            })
    }
}

/// Like [`load_graphs`] but requires exactly one graph.
pub fn load_graph(arg: &str) -> Result<Graph, CliError> {
    let mut gs = load_graphs(arg)?;
    match gs.len() {
        1 => Ok(gs.pop().expect("one graph")),
        k => Err(CliError::Usage(format!("{arg}: expected one graph, found {k}"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareResult {
    pub distinguished: bool,
    pub iterations: usize,
    pub histogram_g: Vec<(u32, usize)>,
    pub histogram_h: Vec<(u32, usize)>,
}

impl From<Comparison> for CompareResult {
    fn from(c: Comparison) -> Self {
        CompareResult {
            distinguished: c.distinguished,
            iterations: c.iterations,
            histogram_g: c.histogram_g,
            histogram_h: c.histogram_h,
        }
    }
}

pub fn cmd_compare(g: &Graph, h: &Graph, method: &Method, cfg: &Config) -> Result<CompareResult, CliError> {
    Ok(compare_graphs(g, h, method, &cfg.refine_options())?.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bucket {
    /// Leading 16 hex digits of the SHA-256 of the invariant string.
    pub fingerprint: String,
    pub multiplicity: usize,
    /// Input positions (0-based) of the graphs in this bucket.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub parse_ms: f64,
    pub precompute_ms: f64,
    pub refine_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub dataset: String,
    pub method: String,
    pub pairwise: bool,
    pub graph_count: usize,
    pub bucket_count: usize,
    /// Buckets holding more than one graph, ordered by first member.
    pub buckets: Vec<Bucket>,
    /// `multiplicity → number of buckets` over all buckets.
    pub multiplicity_histogram: BTreeMap<usize, usize>,
    pub indistinguishable_pairs: u64,
    pub timings: Timings,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn digest(s: &str) -> String {
    let hash = Sha256::digest(s.as_bytes());
    hash[..8].iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// Fingerprint of one graph plus the time spent on paths and on refinement.
fn fingerprint_timed(g: &Graph, method: &Method, cfg: &Config) -> Result<(String, Duration, Duration), CliError> {
    let opts = cfg.refine_options();
    match *method {
        Method::Loopy { r, atp } => {
            let t0 = Instant::now();
            let pn = precompute_with(g, r, &opts.paths)?;
            let t1 = Instant::now();
            let res = loopy_refine(g, &pn, r, atp, &opts)?;
            Ok((res.graph_invariant, t1 - t0, t1.elapsed()))
        }
        _ => {
            let t0 = Instant::now();
            let res = refine(g, method, &opts)?;
            Ok((res.graph_invariant, Duration::ZERO, t0.elapsed()))
        }
    }
}

/// Buckets graphs by invariant fingerprint, or with `pairwise` by running a
/// joint comparison on every pair.
pub fn cmd_sweep(
    dataset: &str,
    graphs: &[Graph],
    parse_time: Duration,
    method: &Method,
    cfg: &Config,
    pairwise: bool,
) -> Result<SweepReport, CliError> {
    let pool = cfg.pool()?;
    let fps: Vec<(String, Duration, Duration)> = pool.install(|| {
        graphs
            .par_iter()
            .map(|g| fingerprint_timed(g, method, cfg))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let precompute: Duration = fps.iter().map(|f| f.1).sum();
    let mut refine_time: Duration = fps.iter().map(|f| f.2).sum();

    // group members by fingerprint, in input order
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (fp, _, _)) in fps.iter().enumerate() {
        groups.entry(fp.as_str()).or_default().push(i);
    }

    let mut pairs: u64 = groups.values().map(|m| (m.len() * (m.len() - 1) / 2) as u64).sum();
    if pairwise {
        let t0 = Instant::now();
        let opts = cfg.refine_options();
        let n = graphs.len();
        let count = pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut same = 0u64;
                    for j in (i + 1)..n {
                        if !compare_graphs(&graphs[i], &graphs[j], method, &opts)?.distinguished {
                            same += 1;
                        }
                    }
                    Ok::<u64, RefineError>(same)
                })
                .collect::<Result<Vec<u64>, _>>()
        })?;
        pairs = count.iter().sum();
        refine_time += t0.elapsed();
    }

    let mut multiplicity_histogram = BTreeMap::new();
    let mut buckets = Vec::new();
    for (fp, members) in &groups {
        *multiplicity_histogram.entry(members.len()).or_insert(0) += 1;
        if members.len() > 1 {
            buckets.push(Bucket {
                fingerprint: digest(fp),
                multiplicity: members.len(),
                members: members.clone(),
            });
        }
    }
    buckets.sort_by_key(|b| b.members[0]);
    Ok(SweepReport {
        dataset: dataset.to_string(),
        method: method.to_string(),
        pairwise,
        graph_count: graphs.len(),
        bucket_count: groups.len(),
        buckets,
        multiplicity_histogram,
        indistinguishable_pairs: pairs,
        timings: Timings {
            parse_ms: ms(parse_time),
            precompute_ms: ms(precompute),
            refine_ms: ms(refine_time),
        },
    })
}

pub fn sweep_csv(r: &SweepReport) -> String {
    let mut out = String::from("fingerprint,multiplicity,members\n");
    for b in &r.buckets {
        let members: Vec<String> = b.members.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{},{},{}", b.fingerprint, b.multiplicity, members.join(" "));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Hom,
    Sub,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub mode: CountMode,
    /// Exact decimal value.
    pub value: String,
    pub elapsed_ms: f64,
}

pub fn cmd_count(f: &Graph, g: &Graph, mode: CountMode, limits: &OracleLimits) -> Result<CountReport, CliError> {
    let res = match mode {
        CountMode::Hom => hom_count(f, g, limits)?,
        CountMode::Sub => sub_count(f, g, limits)?,
    };
    Ok(CountReport {
        mode,
        value: res.value.to_string(),
        elapsed_ms: ms(res.elapsed),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CycleRow {
    pub length: usize,
    /// Injective maps `C_L → g`, obtained from path neighborhoods.
    pub sub_count: u64,
    /// Brute-force value, present when checking was requested.
    pub oracle: Option<String>,
}

/// `sub(C_L, g) = Σ_v |N_{L-2}(v)|` for `L ∈ 3..=max_len`.
pub fn cmd_cycles(g: &Graph, max_len: usize, check: bool, cfg: &Config) -> Result<Vec<CycleRow>, CliError> {
    let opts = cfg.path_options();
    if max_len < 3 || max_len > opts.max_r + 2 {
        return Err(CliError::Usage(format!(
            "maximum cycle length must be in 3..={}, got {max_len}",
            opts.max_r + 2
        )));
    }
    let pn = precompute_with(g, max_len - 2, &opts)?;
    let mut rows = Vec::new();
    for len in 3..=max_len {
        let total: u64 = (0..g.n()).map(|v| pn.count(v, len - 2) as u64).sum();
        let oracle = if check {
            let cycle = gens::gen_cycle(len)?;
            let limits = OracleLimits {
                max_host: usize::MAX,
                ..OracleLimits::default()
            };
            Some(sub_count(&cycle, g, &limits)?.value.to_string())
        } else {
            None
        };
        rows.push(CycleRow {
            length: len,
            sub_count: total,
            oracle,
        });
    }
    Ok(rows)
}

pub fn cycles_csv(rows: &[CycleRow]) -> String {
    let mut out = String::from("length,sub_count,oracle\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.length, r.sub_count, r.oracle.as_deref().unwrap_or(""));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeReport {
    pub root: usize,
    pub width: usize,
    pub depth: usize,
    pub canonical_code: String,
    pub validation: ValidationReport,
    pub decomposition: TreeDecomposition,
}

pub fn cmd_decompose(g: &Graph, root: usize) -> Result<DecomposeReport, CliError> {
    let td = canonical_tree_decomposition(g, root)?;
    Ok(DecomposeReport {
        root,
        width: td.width(),
        depth: td_depth(&td),
        canonical_code: td_canonical_code(&td, g),
        validation: validate_tree_decomposition(g, &td),
        decomposition: td,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub index: usize,
    pub n: usize,
    pub m: usize,
    pub paths: u64,
    pub precompute_ms: f64,
    pub refine_ms: f64,
    pub budget_exceeded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub r: usize,
    pub graphs: usize,
    pub total_edges: u64,
    pub total_paths: u64,
    pub total_precompute_ms: f64,
    pub total_refine_ms: f64,
    pub wall_ms: f64,
    pub budget_exceeded: usize,
    pub rows: Vec<BenchRow>,
}

/// Times path precomputation and r-loopy refinement per graph. Graphs that
/// exceed the path budget are flagged and skip refinement.
pub fn cmd_bench(graphs: &[Graph], r: usize, cfg: &Config) -> Result<BenchReport, CliError> {
    let pool = cfg.pool()?;
    let opts = cfg.refine_options();
    let wall = Instant::now();
    let rows: Vec<BenchRow> = pool.install(|| {
        graphs
            .par_iter()
            .enumerate()
            .map(|(index, g)| {
                let t0 = Instant::now();
                let pn = precompute_with(g, r, &opts.paths);
                let precompute_ms = ms(t0.elapsed());
                let mut row = BenchRow {
                    index,
                    n: g.n(),
                    m: g.m(),
                    paths: 0,
                    precompute_ms,
                    refine_ms: 0.0,
                    budget_exceeded: false,
                };
                match pn {
                    Ok(pn) => {
                        row.paths = pn.total_paths();
                        let t1 = Instant::now();
                        loopy_refine(g, &pn, r, false, &opts)?;
                        row.refine_ms = ms(t1.elapsed());
                    }
                    Err(PathError::BudgetExceeded { .. }) => row.budget_exceeded = true,
                    Err(e) => return Err(CliError::Paths(e)),
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    Ok(BenchReport {
        r,
        graphs: rows.len(),
        total_edges: rows.iter().map(|x| x.m as u64).sum(),
        total_paths: rows.iter().map(|x| x.paths).sum(),
        total_precompute_ms: rows.iter().map(|x| x.precompute_ms).sum(),
        total_refine_ms: rows.iter().map(|x| x.refine_ms).sum(),
        wall_ms: ms(wall.elapsed()),
        budget_exceeded: rows.iter().filter(|x| x.budget_exceeded).count(),
        rows,
    })
}

pub fn bench_csv(r: &BenchReport) -> String {
    let mut out = String::from("index,n,m,paths,precompute_ms,refine_ms,budget_exceeded\n");
    for x in &r.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{}",
            x.index, x.n, x.m, x.paths, x.precompute_ms, x.refine_ms, x.budget_exceeded
        );
    }
    out
}

/// Graph6 lines, one per graph.
pub fn graph6_lines(graphs: &[Graph]) -> String {
    graphs.iter().map(|g| write_graph6(g) + "\n").collect()
}
