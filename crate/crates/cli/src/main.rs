use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use loopywl::generators as gens;
use loopywl::oracles::OracleLimits;
use loopywl::refine::{KwlVariant, Method};
use loopywl_cli::*;

/// Loopy Weisfeiler-Leman refinement, counting oracles and cactus tools.
///
/// Exit codes: 0 success (for `compare`: distinguished), 1 `compare` found
/// the graphs indistinguishable, 2 usage, input or runtime error.
#[derive(Parser)]
#[command(name = "loopywl", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on stored paths per graph; 0 disables the cap.
    #[arg(long, global = true, env = "LOOPYWL_PATH_BUDGET", default_value_t = DEFAULT_PATH_BUDGET)]
    path_budget: u64,
    /// Worker threads for sweeps and benchmarks.
    #[arg(long, global = true, env = "LOOPYWL_THREADS", default_value_t = 1)]
    threads: usize,
    /// Stop refinement after this many rounds.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Seed for randomized generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodName {
    Wl1,
    Loopy,
    Kwl,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodName::Loopy)]
    method: MethodName,
    /// Path length bound for loopy refinement.
    #[arg(short, long, default_value_t = 1)]
    r: usize,
    /// Tuple width for k-WL.
    #[arg(short, long, default_value_t = 2)]
    k: usize,
    /// Add adjacency-to-center bits to loopy path tuples.
    #[arg(long)]
    atp: bool,
    /// Run k-WL as 1-WL on the Hamming-distance-one tuple graph.
    #[arg(long)]
    tuple_graph: bool,
}

impl MethodArgs {
    fn method(&self) -> Method {
        match self.method {
            MethodName::Wl1 => Method::Wl1,
            MethodName::Loopy => Method::Loopy { r: self.r, atp: self.atp },
            MethodName::Kwl => Method::Kwl {
                k: self.k,
                variant: if self.tuple_graph {
                    KwlVariant::TupleGraph
                } else {
                    KwlVariant::Oblivious
                },
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Refine two graphs jointly and report whether they are distinguished.
    Compare {
        /// File or inline graph6 record.
        a: String,
        /// File or inline graph6 record.
        b: String,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Bucket a dataset by invariant and count indistinguishable pairs.
    Sweep {
        dataset: String,
        #[command(flatten)]
        method: MethodArgs,
        /// Compare every pair jointly instead of bucketing fingerprints.
        #[arg(long)]
        pairwise: bool,
    },
    /// Exact homomorphism or subgraph-isomorphism count.
    Count {
        pattern: String,
        host: String,
        #[arg(long, value_enum, default_value_t = CountMode::Hom)]
        mode: CountMode,
    },
    /// Cycle counts sub(C_L, g) for L = 3..=max-len from path neighborhoods.
    Cycles {
        host: String,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        /// Also run the brute-force oracle.
        #[arg(long)]
        check: bool,
    },
    /// Print generated graphs as graph6.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Canonical tree decomposition of a fan cactus.
    Decompose {
        graph: String,
        #[arg(long, default_value_t = 0)]
        root: usize,
    },
    /// Time path precomputation and refinement over a dataset.
    Bench {
        dataset: String,
        #[arg(short, long, default_value_t = 5)]
        r: usize,
    },
}

#[derive(Subcommand)]
enum Family {
    Cycle { n: usize },
    Path { n: usize },
    Complete { n: usize },
    /// Chorded cycle and bridged cycle pair, one graph6 line each.
    ChordalPair { r: usize },
    Csl { n: usize, s: usize },
    Shrikhande,
    Rook44,
    TwoTrianglesBridge,
    /// Fürer graph of a base graph.
    Cfi {
        #[arg(long)]
        base: String,
        #[arg(long)]
        twisted: bool,
        /// Use explicit edge gadgets.
        #[arg(long)]
        classic: bool,
    },
    RandomCactus {
        n: usize,
        max_cycle_len: usize,
    },
    FanCactus {
        n: usize,
        max_cycle_len: usize,
        chord_prob: f64,
    },
    Gnp {
        n: usize,
        p: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Connected sparse graphs: random tree plus extra edges.
    Sparse {
        n: usize,
        avg_degree: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

fn config(global: &Global, method: Option<&Method>) -> Config {
    Config {
        method: method.map(Method::to_string),
        max_iters: global.max_iters,
        path_budget: (global.path_budget > 0).then_some(global.path_budget),
        threads: global.threads,
        seed: global.seed,
    }
}

fn emit(global: &Global, text: &str) -> Result<(), CliError> {
    match &global.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            if !text.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            Ok(())
        }
    }
}

fn generate(family: &Family, seed: u64) -> Result<Vec<loopywl::Graph>, CliError> {
    Ok(match family {
        Family::Cycle { n } => vec![gens::gen_cycle(*n)?],
        Family::Path { n } => vec![gens::gen_path(*n)],
        Family::Complete { n } => vec![gens::gen_complete(*n)],
        Family::ChordalPair { r } => {
            let (a, b) = gens::gen_chordal_pair(*r);
            vec![a, b]
        }
        Family::Csl { n, s } => vec![gens::gen_csl(*n, *s)?],
        Family::Shrikhande => vec![gens::gen_shrikhande()],
        Family::Rook44 => vec![gens::gen_rook44()],
        Family::TwoTrianglesBridge => vec![gens::gen_two_triangles_bridge()],
        Family::Cfi { base, twisted, classic } => {
            let base = load_graph(base)?;
            if *classic {
                vec![gens::gen_cfi_classic(&base, *twisted)?]
            } else {
                vec![gens::gen_cfi(&base, *twisted)?]
            }
        }
        Family::RandomCactus { n, max_cycle_len } => vec![gens::gen_random_cactus(*n, *max_cycle_len, seed)?],
        Family::FanCactus {
            n,
            max_cycle_len,
            chord_prob,
        } => vec![gens::gen_fan_cactus(*n, *max_cycle_len, *chord_prob, seed)?.0],
        Family::Gnp { n, p, count } => (0..*count as u64).map(|i| gens::gen_gnp(*n, *p, seed + i)).collect(),
        Family::Sparse { n, avg_degree, count } => (0..*count as u64)
            .map(|i| gens::gen_sparse_connected(*n, *avg_degree, seed + i))
            .collect(),
    })
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let g = &cli.global;
    let csv = g.format == Format::Csv;
    match &cli.command {
        Command::Compare { a, b, method } => {
            let m = method.method();
            let cfg = config(g, Some(&m));
            let res = cmd_compare(&load_graph(a)?, &load_graph(b)?, &m, &cfg)?;
            let text = if csv {
                format!("distinguished,iterations\n{},{}\n", res.distinguished, res.iterations)
            } else {
                Report::new("compare", cfg, &res).to_json()
            };
            emit(g, &text)?;
            Ok(if res.distinguished { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sweep { dataset, method, pairwise } => {
            let m = method.method();
            let cfg = config(g, Some(&m));
            let t0 = Instant::now();
            let graphs = load_graphs(dataset)?;
            let rep = cmd_sweep(dataset, &graphs, t0.elapsed(), &m, &cfg, *pairwise)?;
            let text = if csv { sweep_csv(&rep) } else { Report::new("sweep", cfg, &rep).to_json() };
            emit(g, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Count { pattern, host, mode } => {
            let cfg = config(g, None);
            let rep = cmd_count(&load_graph(pattern)?, &load_graph(host)?, *mode, &OracleLimits::default())?;
            let text = if csv {
                format!("mode,value,elapsed_ms\n{:?},{},{:.3}\n", rep.mode, rep.value, rep.elapsed_ms).to_lowercase()
            } else {
                Report::new("count", cfg, &rep).to_json()
            };
            emit(g, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cycles { host, max_len, check } => {
            let cfg = config(g, None);
            let rows = cmd_cycles(&load_graph(host)?, *max_len, *check, &cfg)?;
            let text = if csv { cycles_csv(&rows) } else { Report::new("cycles", cfg, &rows).to_json() };
            emit(g, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { family } => {
            emit(g, &graph6_lines(&generate(family, g.seed)?))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Decompose { graph, root } => {
            let cfg = config(g, None);
            let rep = cmd_decompose(&load_graph(graph)?, *root)?;
            if csv {
                return Err(CliError::Usage("decompose only writes JSON".into()));
            }
            emit(g, &Report::new("decompose", cfg, &rep).to_json())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { dataset, r } => {
            let cfg = config(g, Some(&Method::loopy(*r)));
            let rep = cmd_bench(&load_graphs(dataset)?, *r, &cfg)?;
            let text = if csv { bench_csv(&rep) } else { Report::new("bench", cfg, &rep).to_json() };
            emit(g, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
