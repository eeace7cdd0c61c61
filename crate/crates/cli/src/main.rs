use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stwig_core::coordinator::{run_distributed_query, LoadSetPolicy, RunConfig};
use stwig_core::decompose::{stwig_order_selection, trace_order_selection, FreqTable};
use stwig_core::join::{MatchTuple, DEFAULT_BLOCK_SIZE};
use stwig_core::matcher::{explore, BindingMode};
use stwig_core::query::QueryGraph;
use stwig_core::store::{LabeledGraph, PartitionedGraph, Placement};
use stwig_core::workbench::{
    bench, gen_query_dfs, gen_query_random, gen_rmat, label_pool, oracle_match_with_limit, BenchConfig,
    DfsEdges, RmatParams,
};
use stwig_core::{ExactScore, FloatScore};

mod error;

use error::CliError;

#[derive(Parser)]
#[command(name = "stwig", version, about = "Subgraph matching over a partitioned labeled graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and partition a graph, then print a summary.
    Load(LoadArgs),
    /// Print the STwig decomposition of a query.
    Decompose(DecomposeArgs),
    /// Answer a query; prints one TSV row per match.
    Query(QueryArgs),
    /// Write an R-MAT graph.
    GenRmat(RmatArgs),
    /// Write a generated query.
    GenQuery {
        #[command(subcommand)]
        kind: GenQueryKind,
    },
    /// Brute-force reference answer, as TSV.
    Oracle(OracleArgs),
    /// Run a benchmark grid described by a TOML file.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Partitioning {
    /// Number of partitions (machines).
    #[arg(short = 'k', long = "partitions", default_value_t = 1)]
    k: usize,
    /// Seed of the hash placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Explicit `p <node> <partition>` placement file instead of hashing.
    #[arg(long)]
    placement: Option<PathBuf>,
}

#[derive(Args)]
struct LoadArgs {
    graph: PathBuf,
    #[command(flatten)]
    part: Partitioning,
    /// Write `partition-<k>.txt` files into this directory.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    query: PathBuf,
    /// Take label frequencies from this graph (default: all equal).
    #[arg(long)]
    freqs: Option<PathBuf>,
    /// Score with floating point instead of exact fractions.
    #[arg(long)]
    float: bool,
    /// Also print the f-values and frontier of each selection pass.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Global,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoadSetArg {
    On,
    FetchAll,
}

#[derive(Args)]
struct QueryArgs {
    graph: PathBuf,
    query: PathBuf,
    #[command(flatten)]
    part: Partitioning,
    #[arg(long, value_enum, default_value = "global")]
    mode: ModeArg,
    #[arg(long = "load-sets", value_enum, default_value = "on")]
    load_sets: LoadSetArg,
    /// Stop after this many matches.
    #[arg(long)]
    limit: Option<usize>,
    /// Join block size.
    #[arg(long = "block", default_value_t = DEFAULT_BLOCK_SIZE)]
    block: usize,
    /// Sort rows before printing.
    #[arg(long)]
    sorted: bool,
    /// Write run statistics (`key=value` lines) to this file.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Print per-partition STwig matches to stderr.
    #[arg(long = "dump-stwigs")]
    dump_stwigs: bool,
    #[arg(long = "timeout-ms")]
    timeout_ms: Option<u64>,
    /// Seed of the join-order sampler.
    #[arg(long = "join-seed", default_value_t = 0)]
    join_seed: u64,
}

#[derive(Args)]
struct RmatArgs {
    #[arg(long, default_value_t = 10_000)]
    nodes: usize,
    /// Average degree; ignored when --edges is given.
    #[arg(long, default_value_t = 16)]
    degree: usize,
    #[arg(long)]
    edges: Option<usize>,
    /// Labels per node; ignored when --labels is given.
    #[arg(long = "label-density", default_value_t = 0.01)]
    label_density: f64,
    #[arg(long)]
    labels: Option<usize>,
    /// Quadrant probabilities a,b,c,d.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    probs: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenQueryKind {
    /// First N nodes of a DFS over the graph.
    Dfs {
        graph: PathBuf,
        #[arg(short = 'n', long, default_value_t = 10)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep only DFS tree edges instead of the induced subgraph.
        #[arg(long)]
        tree: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Random spanning tree plus random edges.
    Random {
        #[arg(short = 'n', long, default_value_t = 10)]
        nodes: usize,
        #[arg(short = 'e', long, default_value_t = 20)]
        edges: usize,
        /// Label pool, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "graph")]
        labels: Vec<String>,
        /// Take the label pool from this graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OracleArgs {
    graph: PathBuf,
    query: PathBuf,
    /// Lift the data-size guard.
    #[arg(long = "no-guard")]
    no_guard: bool,
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<LabeledGraph, CliError> {
    LabeledGraph::parse(open(path)?).map_err(|e| CliError::at(path, e))
}

fn read_query(path: &Path) -> Result<QueryGraph, CliError> {
    QueryGraph::parse(open(path)?).map_err(|e| CliError::at(path, e))
}

fn partitioned(path: &Path, part: &Partitioning) -> Result<PartitionedGraph, CliError> {
    let graph = read_graph(path)?;
    let placement = match &part.placement {
        Some(p) => Placement::parse_explicit(open(p)?, part.k).map_err(|e| CliError::at(p, e))?,
        None => Placement::hashed(part.k, part.seed),
    };
    Ok(PartitionedGraph::new(graph, placement)?)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_tsv(out: &mut dyn Write, query: &QueryGraph, rows: &[MatchTuple]) -> io::Result<()> {
    let header: Vec<String> = query.ids().iter().map(|id| id.to_string()).collect();
    writeln!(out, "{}", header.join("\t"))?;
    for row in rows {
        let cells: Vec<String> = row.0.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join("\t"))?;
    }
    Ok(())
}

fn load(args: LoadArgs) -> Result<(), CliError> {
    let g = partitioned(&args.graph, &args.part)?;
    let mut out = sink(None)?;
    let nodes: usize = g.partitions().iter().map(|p| p.len()).sum();
    writeln!(out, "nodes={nodes}")?;
    writeln!(out, "edges={}", g.edge_count())?;
    writeln!(out, "labels={}", g.symbols().len())?;
    writeln!(out, "partitions={}", g.partition_count())?;
    for p in g.partitions() {
        writeln!(out, "partition_{}_nodes={}", p.id, p.len())?;
    }
    writeln!(out, "catalog_entries={}", g.catalog().len())?;
    if let Some(dir) = &args.dump {
        fs::create_dir_all(dir)?;
        for k in 0..g.partition_count() {
            fs::write(dir.join(format!("partition-{k}.txt")), g.dump_partition(k))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn decompose(args: DecomposeArgs) -> Result<(), CliError> {
    let query = read_query(&args.query)?;
    let freqs = match &args.freqs {
        Some(p) => FreqTable::from_labeled(&read_graph(p)?),
        None => FreqTable::uniform(&query, 1),
    };
    let mut out = sink(None)?;
    if args.trace {
        let trace = trace_order_selection::<ExactScore>(&query, &freqs);
        for (i, step) in trace.steps.iter().enumerate() {
            let f: Vec<String> = step
                .f_values
                .iter()
                .enumerate()
                .map(|(v, s)| match s.value() {
                    Some(x) => format!("{}={x}", query.id(v)),
                    None => format!("{}=inf", query.id(v)),
                })
                .collect();
            let ids = |s: &[usize]| s.iter().map(|&v| query.id(v).to_string()).collect::<Vec<_>>().join(",");
            writeln!(
                out,
                "# pass {}: edge={}-{} f=[{}] frontier=[{}] -> [{}]",
                i + 1,
                query.id(step.edge.0),
                query.id(step.edge.1),
                f.join(" "),
                ids(&step.frontier_before),
                ids(&step.frontier_after)
            )?;
        }
    }
    let d = if args.float {
        stwig_order_selection::<FloatScore>(&query, &freqs)
    } else {
        stwig_order_selection::<ExactScore>(&query, &freqs)
    };
    write!(out, "{}", d.render(&query))?;
    out.flush()?;
    Ok(())
}

fn query(args: QueryArgs) -> Result<(), CliError> {
    let g = partitioned(&args.graph, &args.part)?;
    let q = read_query(&args.query)?;
    let config = RunConfig {
        mode: match args.mode {
            ModeArg::Global => BindingMode::Global,
            ModeArg::Local => BindingMode::Local,
        },
        load_sets: match args.load_sets {
            LoadSetArg::On => LoadSetPolicy::ClusterDistance,
            LoadSetArg::FetchAll => LoadSetPolicy::FetchAll,
        },
        limit: args.limit,
        block_size: args.block,
        seed: args.join_seed,
        timeout: args.timeout_ms.map(Duration::from_millis),
        ..RunConfig::default()
    };
    let outcome = run_distributed_query(&g, &q, &config)?;
    if let Some(label) = &outcome.stats.missing_label {
        log::warn!("label {label:?} does not occur in the graph; no matches");
    }
    if outcome.stats.timed_out {
        log::warn!("timed out; output is partial");
    }
    if args.dump_stwigs {
        if let Some(d) = &outcome.decomposition {
            let labels = q.resolve_labels(&g).map_err(|l| CliError::Input(format!("unknown label {l}")))?;
            let ex = explore(&g.cloud(), &labels, d, config.mode)?;
            eprint!("{}{}", d.render(&q), ex.debug_dump());
        }
    }
    let mut rows = outcome.matches;
    if args.sorted {
        rows.sort();
    }
    let mut out = sink(None)?;
    write_tsv(&mut out, &q, &rows)?;
    out.flush()?;
    if let Some(path) = &args.stats {
        fs::write(path, outcome.stats.to_kv())?;
    }
    Ok(())
}

fn gen_rmat_cmd(args: RmatArgs) -> Result<(), CliError> {
    let mut params = RmatParams::with_density(args.nodes, args.degree, args.label_density, args.seed);
    if let Some(e) = args.edges {
        params.edge_count = e;
    }
    if let Some(l) = args.labels {
        params.label_count = l;
    }
    if let Some(p) = &args.probs {
        params.probabilities = [p[0], p[1], p[2], p[3]];
    }
    let g = gen_rmat(&params)?;
    let mut out = sink(args.output.as_deref())?;
    out.write_all(g.to_text().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn gen_query(kind: GenQueryKind) -> Result<(), CliError> {
    let (q, output) = match kind {
        GenQueryKind::Dfs {
            graph,
            nodes,
            seed,
            tree,
            output,
        } => {
            let g = read_graph(&graph)?;
            let edges = if tree { DfsEdges::Tree } else { DfsEdges::Induced };
            (gen_query_dfs(&g, nodes, seed, edges)?.query, output)
        }
        GenQueryKind::Random {
            nodes,
            edges,
            labels,
            graph,
            seed,
            output,
        } => {
            let pool = match graph {
                Some(p) => label_pool(&read_graph(&p)?),
                None => labels,
            };
            (gen_query_random(nodes, edges, &pool, seed)?, output)
        }
    };
    let mut out = sink(output.as_deref())?;
    out.write_all(q.to_text().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let g = read_graph(&args.graph)?;
    let q = read_query(&args.query)?;
    let limit = if args.no_guard { None } else { Some(stwig_core::workbench::oracle::ORACLE_MAX_NODES) };
    let rows: Vec<MatchTuple> = oracle_match_with_limit(&g, &q, limit)?.into_iter().collect();
    let mut out = sink(None)?;
    write_tsv(&mut out, &q, &rows)?;
    out.flush()?;
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    let config: BenchConfig =
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    let report = bench(&config)?;
    let mut out = sink(args.output.as_deref())?;
    out.write_all(report.to_tsv().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Load(a) => load(a),
        Command::Decompose(a) => decompose(a),
        Command::Query(a) => query(a),
        Command::GenRmat(a) => gen_rmat_cmd(a),
        Command::GenQuery { kind } => gen_query(kind),
        Command::Oracle(a) => oracle(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stwig: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
