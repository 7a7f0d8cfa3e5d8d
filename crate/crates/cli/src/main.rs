//! Command-line front end: dataset ingestion, weights loading, streamed
//! inference, engine-vs-oracle verification, scheduling sweeps, and the
//! out-of-core benchmark. Every run writes a manifest next to its results.
//!
//! Exit codes: 0 ok, 2 usage, 3 data error, 4 verification failure.

mod manifest;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mpgnn::error::Error as CoreError;
use mpgnn::fixed::{dequantize, Fixed32};
use mpgnn::fixtures;
use mpgnn::graph::Graph;
use mpgnn::graph_io::{load_graph, save_graph};
use mpgnn::models::{ExecPath, ModelConfig, ModelKind, Prediction};
use mpgnn::oracle::{
    compare, laplacian_eigenvectors, read_eigenvectors, reference_forward, LaplacianKind,
    OraclePrediction,
};
use mpgnn::sim::{run_sweep, speedup_report, CostModel, SweepSpec};
use mpgnn::store::{
    run_model_out_of_core, simulate_degree_prefetch, stage_graph, ExternalStore,
    DEFAULT_PREFETCH_CAPACITY, DEFAULT_READ_LATENCY,
};
use mpgnn::weights::{read_weights, write_weights};
use mpgnn::{coo_to_csc, coo_to_csr, run_model};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "mpgnn",
    version,
    about = "Quantized streaming message-passing GNN engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw COO graph into CSR or CSC tables.
    Convert(ConvertArgs),
    /// Stream graphs from a directory through a model, one at a time.
    Infer(InferArgs),
    /// Run engine vs float oracle on every graph and report errors.
    Verify(VerifyArgs),
    /// Run the scheduling-strategy study over synthetic graphs.
    Simulate(SimulateArgs),
    /// Out-of-core run over a staged store with access-log summary.
    BenchLarge(BenchLargeArgs),
    /// Generate fixture graphs, weights, and stores.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// Input graph (.txt or .bin).
    graph: PathBuf,
    /// Target format.
    #[arg(long, value_parser = ["csr", "csc"])]
    to: String,
    /// Output path (defaults to `<graph>.<fmt>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model kind: gcn, gin, gin-vn, gat, pna, dgn.
    model: String,
    /// Weights file.
    weights: PathBuf,
    /// Override layer count.
    #[arg(long)]
    layers: Option<usize>,
    /// Override embedding width.
    #[arg(long)]
    dim: Option<usize>,
    /// GIN per-layer epsilon values (comma separated; default zeros).
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Use the gather-first execution path instead of merged.
    #[arg(long)]
    gather_first: bool,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Directory of graphs, streamed in filename order.
    graph_dir: PathBuf,
    /// Output directory (default: `<graph-dir>-out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Independent graphs in flight.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed recorded in the manifest (inference itself is deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    graph_dir: PathBuf,
    /// Relative L-infinity tolerance.
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sweep preset (`paper`) or `custom` with the flags below.
    #[arg(long, default_value = "paper")]
    sweep: String,
    #[arg(long, value_delimiter = ',')]
    degrees: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pcts: Vec<f64>,
    #[arg(long, default_value_t = 625)]
    graphs_per_cell: usize,
    #[arg(long, default_value_t = 32)]
    nodes_min: usize,
    #[arg(long, default_value_t = 128)]
    nodes_max: usize,
    #[arg(long, default_value_t = 4242)]
    seed: u64,
    #[arg(long, default_value = "sim-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchLargeArgs {
    /// Staged store file.
    store: PathBuf,
    /// Model kind (must match the staged layout).
    model: String,
    /// Weights file.
    weights: PathBuf,
    /// Node-task preset matching `fixtures store` (2-layer width-16 GCN,
    /// 7 classes).
    #[arg(long, default_value = "citation")]
    preset: String,
    #[arg(long, default_value_t = DEFAULT_PREFETCH_CAPACITY)]
    prefetch_capacity: usize,
    #[arg(long, default_value_t = DEFAULT_READ_LATENCY)]
    read_latency: u64,
    /// Disable the degree prefetcher in the latency simulation.
    #[arg(long)]
    no_prefetch: bool,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FixturesArgs {
    #[command(subcommand)]
    what: FixtureKind,
}

#[derive(Subcommand)]
enum FixtureKind {
    /// Random molecule-shaped graphs (9 node dims, 3 edge dims).
    Graphs {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        nodes_min: usize,
        #[arg(long, default_value_t = 40)]
        nodes_max: usize,
        #[arg(long, default_value_t = 2.0)]
        avg_degree: f64,
        #[arg(long, default_value_t = 9)]
        din: usize,
        #[arg(long, default_value_t = 3)]
        dedge: usize,
    },
    /// Random weights for a model's paper-default configuration.
    Weights {
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 9)]
        din: usize,
        #[arg(long, default_value_t = 3)]
        dedge: usize,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Citation-shaped node-task store (plus matching weights file).
    Store {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2708)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

static LIVE_GRAPHS: AtomicUsize = AtomicUsize::new(0);
static PEAK_LIVE_GRAPHS: AtomicUsize = AtomicUsize::new(0);

struct GraphGuard(Graph);

impl GraphGuard {
    fn load(path: &Path) -> Result<Self, CoreError> {
        let g = load_graph(path)?;
        let live = LIVE_GRAPHS.fetch_add(1, Ordering::SeqCst) + 1;
        PEAK_LIVE_GRAPHS.fetch_max(live, Ordering::SeqCst);
        Ok(Self(g))
    }
}

impl Drop for GraphGuard {
    fn drop(&mut self) {
        LIVE_GRAPHS.fetch_sub(1, Ordering::SeqCst);
    }
}

enum CliError {
    Data(CoreError),
    Verification(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Data(e)
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(CliError::Data(e)) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": "data", "message": e.to_string()})
            );
            3
        }
        Err(CliError::Verification(msg)) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": "verification", "message": msg})
            );
            4
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Convert(a) => convert(a),
        Command::Infer(a) => infer(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
        Command::BenchLarge(a) => bench_large(a),
        Command::Fixtures(a) => fixtures_cmd(a),
    }
}

fn build_config(args: &ModelArgs, din: usize, dedge: usize) -> Result<ModelConfig, CoreError> {
    let kind = ModelKind::parse(&args.model)?;
    let mut cfg = ModelConfig::paper_default(kind, din, dedge);
    if let Some(l) = args.layers {
        cfg.num_layers = l;
        cfg.eps = vec![0.0; l];
    }
    if let Some(d) = args.dim {
        cfg.embed_dim = d;
        if kind == ModelKind::Gat {
            return Err(CoreError::Config(
                "GAT width is heads * head features; override not supported".into(),
            ));
        }
    }
    if !args.eps.is_empty() {
        if args.eps.len() != cfg.num_layers {
            return Err(CoreError::Config(format!(
                "--eps needs {} values",
                cfg.num_layers
            )));
        }
        cfg.eps = args.eps.clone();
    }
    if args.gather_first {
        cfg.exec_path = ExecPath::GatherFirst;
    }
    cfg.weights = read_weights(&args.weights)?;
    cfg.validate()?;
    cfg.validate_weights()?;
    Ok(cfg)
}

/// The eigenvector for DGN: `<graph>.eig` sidecar when present, otherwise
/// computed with the Jacobi utility.
fn phi_for(graph_path: &Path, g: &Graph) -> Result<Vec<f64>, CoreError> {
    let sidecar = graph_path.with_extension("eig");
    if sidecar.exists() {
        let vecs = read_eigenvectors(&sidecar)?;
        return vecs
            .into_iter()
            .next()
            .ok_or_else(|| CoreError::Parse("empty eigenvector sidecar".into()));
    }
    Ok(
        laplacian_eigenvectors(g, 1, LaplacianKind::NormalizedSymmetric)?
            .into_iter()
            .next()
            .unwrap_or_else(|| vec![0.0; g.num_nodes]),
    )
}

fn list_graphs(dir: &Path) -> Result<Vec<PathBuf>, CoreError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|s| s.to_str()),
                    Some("txt") | Some("bin") | Some("graph")
                )
        })
        .collect();
    // directory order: lexicographic by file name, stable across platforms
    files.sort();
    if files.is_empty() {
        return Err(CoreError::Parse(format!(
            "no graphs (*.txt, *.bin, *.graph) in {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn convert(a: ConvertArgs) -> Result<(), CliError> {
    let g = load_graph(&a.graph)?;
    let out = a
        .out
        .unwrap_or_else(|| a.graph.with_extension(a.to.clone()));
    let text = match a.to.as_str() {
        "csr" => {
            let adj = coo_to_csr(&g)?;
            format_tables(
                "csr",
                g.num_nodes,
                g.num_edges,
                &adj.degree,
                &adj.neighbors,
                &adj.edge_index,
            )
        }
        _ => {
            let adj = coo_to_csc(&g)?;
            format_tables(
                "csc",
                g.num_nodes,
                g.num_edges,
                &adj.degree,
                &adj.neighbors,
                &adj.edge_index,
            )
        }
    };
    std::fs::write(&out, text).map_err(CoreError::from)?;
    let manifest = RunManifest::new("convert", &[&a.graph], "-", 0, &out);
    manifest.write_next_to(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn format_tables(
    kind: &str,
    n: usize,
    e: usize,
    degree: &[u32],
    neighbors: &[u32],
    edge_index: &[u32],
) -> String {
    let join = |v: &[u32]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "{kind} {n} {e}\ndegree: {}\nneighbors: {}\nedge_index: {}\n",
        join(degree),
        join(neighbors),
        join(edge_index)
    )
}

fn infer(a: InferArgs) -> Result<(), CliError> {
    let files = list_graphs(&a.graph_dir)?;
    let out_dir = a.out_dir.clone().unwrap_or_else(|| {
        let mut d = a.graph_dir.clone();
        d.set_extension("out");
        d
    });
    std::fs::create_dir_all(&out_dir).map_err(CoreError::from)?;

    // dimensions come from the first graph; all must match the model
    let first = load_graph(&files[0])?;
    let cfg = build_config(&a.model, first.input_dim(), first.edge_dim())?;
    drop(first);
    let kind = cfg.kind;

    let jobs = a.jobs.max(1);
    let started = Instant::now();
    let mut lines: Vec<String> = vec![String::new(); files.len()];
    let mut latencies = vec![0f64; files.len()];

    std::thread::scope(|scope| -> Result<(), CliError> {
        let mut handles = Vec::new();
        for (w, chunk) in files.chunks(files.len().div_ceil(jobs)).enumerate() {
            let cfg = &cfg;
            let base = w * files.len().div_ceil(jobs);
            handles.push(
                scope.spawn(move || -> Result<Vec<(usize, String, f64)>, CoreError> {
                    let mut out = Vec::new();
                    for (i, path) in chunk.iter().enumerate() {
                        let t0 = Instant::now();
                        let guard = GraphGuard::load(path)?;
                        let phi = if kind.needs_eigenvector() {
                            Some(phi_for(path, &guard.0)?)
                        } else {
                            None
                        };
                        let run = run_model::<Fixed32>(&guard.0, cfg, phi.as_deref())?;
                        let ms = t0.elapsed().as_secs_f64() * 1e3;
                        let name = path.file_name().unwrap().to_string_lossy().to_string();
                        let line = match &run.prediction {
                            Prediction::Graph(v) => format!(
                                "{name} {}",
                                v.iter()
                                    .map(|x| format!("{:12.6}", dequantize(*x)))
                                    .collect::<Vec<_>>()
                                    .join(" ")
                            ),
                            Prediction::Node(_) => {
                                return Err(CoreError::Config(
                                    "infer streams graph-level tasks".into(),
                                ))
                            }
                        };
                        out.push((base + i, line, ms));
                    }
                    Ok(out)
                }),
            );
        }
        for h in handles {
            for (idx, line, ms) in h.join().expect("worker panicked")? {
                lines[idx] = line;
                latencies[idx] = ms;
            }
        }
        Ok(())
    })?;

    let total_s = started.elapsed().as_secs_f64();
    let mean_ms = latencies.iter().sum::<f64>() / latencies.len() as f64;
    let pred_path = out_dir.join("predictions.txt");
    std::fs::write(&pred_path, lines.join("\n") + "\n").map_err(CoreError::from)?;

    let mut manifest = RunManifest::new(
        "infer",
        &[&a.model.weights, &a.graph_dir],
        kind.as_str(),
        a.seed,
        &pred_path,
    );
    manifest.timing(files.len() as f64 / total_s, mean_ms);
    manifest.peak_live_graphs = PEAK_LIVE_GRAPHS.load(Ordering::SeqCst);
    manifest.jobs = jobs;
    manifest.saturation_events = mpgnn::fixed::saturation_count();
    manifest.write_next_to(&pred_path)?;
    println!(
        "{} graphs, {:9.3} graphs/sec, mean latency {:9.3} ms -> {}",
        files.len(),
        files.len() as f64 / total_s,
        mean_ms,
        pred_path.display()
    );
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let files = list_graphs(&a.graph_dir)?;
    let out_dir = a.out_dir.clone().unwrap_or_else(|| {
        let mut d = a.graph_dir.clone();
        d.set_extension("verify");
        d
    });
    std::fs::create_dir_all(&out_dir).map_err(CoreError::from)?;
    let first = load_graph(&files[0])?;
    let cfg = build_config(&a.model, first.input_dim(), first.edge_dim())?;
    drop(first);

    let mut report = String::from("graph\tmax_abs_err\trel_linf\targmax_agree\tpass\n");
    let mut failures = 0usize;
    let mut worst = 0f64;
    for path in &files {
        let g = load_graph(path)?;
        let phi = if cfg.kind.needs_eigenvector() {
            Some(phi_for(path, &g)?)
        } else {
            None
        };
        let engine = run_model::<Fixed32>(&g, &cfg, phi.as_deref())?;
        let oracle = reference_forward(&g, &cfg, phi.as_deref())?;
        let e: Vec<f64> = match &engine.prediction {
            Prediction::Graph(v) => v.iter().map(|x| dequantize(*x)).collect(),
            Prediction::Node(_) => {
                return Err(CliError::Data(CoreError::Config(
                    "verify covers graph-level tasks".into(),
                )))
            }
        };
        let o = match &oracle.prediction {
            OraclePrediction::Graph(v) => v.clone(),
            _ => unreachable!("oracle task matches engine task"),
        };
        let r = compare(&e, &o, a.tol)?;
        if !r.pass || !r.argmax_agree {
            failures += 1;
        }
        worst = worst.max(r.rel_linf);
        report.push_str(&format!(
            "{}\t{:14.6e}\t{:12.6e}\t{}\t{}\n",
            path.file_name().unwrap().to_string_lossy(),
            r.max_abs_err,
            r.rel_linf,
            r.argmax_agree,
            r.pass
        ));
    }
    let report_path = out_dir.join("compare.tsv");
    std::fs::write(&report_path, report).map_err(CoreError::from)?;
    let manifest = RunManifest::new(
        "verify",
        &[&a.model.weights, &a.graph_dir],
        cfg.kind.as_str(),
        0,
        &report_path,
    );
    manifest.write_next_to(&report_path)?;
    println!(
        "verified {} graphs at tol {}: {} failures, worst rel {:10.3e} -> {}",
        files.len(),
        a.tol,
        failures,
        worst,
        report_path.display()
    );
    if failures > 0 {
        return Err(CliError::Verification(format!(
            "{failures} of {} graphs exceeded tol {}",
            files.len(),
            a.tol
        )));
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let spec = match a.sweep.as_str() {
        "paper" => SweepSpec::paper(a.graphs_per_cell, a.seed),
        _ => SweepSpec {
            degrees: if a.degrees.is_empty() {
                vec![2.0, 4.0, 8.0, 16.0]
            } else {
                a.degrees.clone()
            },
            pct_high: if a.pcts.is_empty() {
                vec![0.0, 0.05, 0.1, 0.2]
            } else {
                a.pcts.clone()
            },
            graphs_per_cell: a.graphs_per_cell,
            nodes_min: a.nodes_min,
            nodes_max: a.nodes_max,
            seed: a.seed,
        },
    };
    let cm = CostModel::calibrated_default();
    let rows = run_sweep(&spec, &cm)?;
    std::fs::create_dir_all(&a.out_dir).map_err(CoreError::from)?;
    let table_path = a.out_dir.join("speedup.tsv");
    std::fs::write(&table_path, speedup_report(&rows)).map_err(CoreError::from)?;
    let manifest = RunManifest::new("simulate", &[], "-", a.seed, &table_path);
    manifest.write_next_to(&table_path)?;
    let violations: usize = rows.iter().map(|r| r.dominance_violations).sum();
    println!(
        "sweep: {} cells x {} graphs, dominance violations {} -> {}",
        rows.len(),
        spec.graphs_per_cell,
        violations,
        table_path.display()
    );
    Ok(())
}

fn citation_preset(weights_path: &Path) -> Result<ModelConfig, CoreError> {
    let mut cfg = ModelConfig::paper_default(ModelKind::Gcn, 1433, 0);
    cfg.num_layers = 2;
    cfg.embed_dim = 16;
    cfg.head_sizes = vec![7];
    cfg.task = mpgnn::models::TaskKind::Node;
    cfg.weights = read_weights(weights_path)?;
    cfg.validate()?;
    cfg.validate_weights()?;
    Ok(cfg)
}

fn bench_large(a: BenchLargeArgs) -> Result<(), CliError> {
    if a.preset != "citation" {
        return Err(CliError::Data(CoreError::Config(format!(
            "unknown preset `{}`",
            a.preset
        ))));
    }
    let kind = ModelKind::parse(&a.model)?;
    if kind != ModelKind::Gcn {
        return Err(CliError::Data(CoreError::Config(
            "the citation preset is a GCN configuration".into(),
        )));
    }
    let cfg = citation_preset(&a.weights)?;
    let mut store = ExternalStore::load(&a.store)?;
    let t0 = Instant::now();
    let run = run_model_out_of_core(&mut store, &cfg)?;
    let dt = t0.elapsed();

    // degree-latency simulation over the staged graph's out-degrees
    let degrees = {
        let mut s = store.clone();
        s.read_u32_all("csr_degree")?
    };
    let cm = CostModel {
        hidden_dim: cfg.embed_dim,
        ..CostModel::calibrated_default()
    };
    let mp_costs: Vec<u64> = degrees.iter().map(|&d| cm.mp_cost(d)).collect();
    let prefetch = simulate_degree_prefetch(
        &mp_costs,
        a.prefetch_capacity,
        a.read_latency,
        !a.no_prefetch,
    );

    std::fs::create_dir_all(&a.out_dir).map_err(CoreError::from)?;
    let pred_path = a.out_dir.join("node_predictions.txt");
    let mut out = String::new();
    if let Prediction::Node(rows) = &run.prediction {
        for i in 0..rows.rows() {
            let vals: Vec<String> = rows
                .row(i)
                .iter()
                .map(|v| format!("{:12.6}", dequantize(*v)))
                .collect();
            out.push_str(&format!("{i} {}\n", vals.join(" ")));
        }
    }
    std::fs::write(&pred_path, out).map_err(CoreError::from)?;

    let summary_path = a.out_dir.join("access_log.txt");
    let summary = format!(
        "reads {}\nwrites {}\nwords_read {}\nwords_written {}\n\
         prefetch_enabled {}\nprefetch_capacity {}\nread_latency {}\n\
         mp_stall_cycles {}\npops {}\nrefills {}\nwall_ms {:12.3}\n",
        store.log.reads,
        store.log.writes,
        store.log.words_read,
        store.log.words_written,
        prefetch.enabled,
        prefetch.capacity,
        prefetch.read_latency,
        prefetch.mp_stall_cycles,
        prefetch.pops,
        prefetch.refills,
        dt.as_secs_f64() * 1e3
    );
    std::fs::write(&summary_path, summary).map_err(CoreError::from)?;
    let manifest = RunManifest::new(
        "bench-large",
        &[&a.store, &a.weights],
        kind.as_str(),
        0,
        &pred_path,
    );
    manifest.write_next_to(&pred_path)?;
    println!(
        "out-of-core run done in {:9.3} ms; {} words read, {} written; MP stalls {} -> {}",
        dt.as_secs_f64() * 1e3,
        store.log.words_read,
        store.log.words_written,
        prefetch.mp_stall_cycles,
        a.out_dir.display()
    );
    Ok(())
}

fn fixtures_cmd(a: FixturesArgs) -> Result<(), CliError> {
    match a.what {
        FixtureKind::Graphs {
            out,
            count,
            seed,
            nodes_min,
            nodes_max,
            avg_degree,
            din,
            dedge,
        } => {
            std::fs::create_dir_all(&out).map_err(CoreError::from)?;
            for i in 0..count {
                let span = nodes_max.saturating_sub(nodes_min).max(1);
                let n = nodes_min + ((seed as usize).wrapping_add(i * 37) % span);
                let g = fixtures::random_graph(n, avg_degree, din, dedge, seed + i as u64);
                let path = out.join(format!("g{i:04}.txt"));
                save_graph(&g, &path)?;
            }
            let manifest = RunManifest::new("fixtures-graphs", &[], "-", seed, &out);
            manifest.write_next_to(&out.join("manifest"))?;
            println!("wrote {count} graphs to {}", out.display());
        }
        FixtureKind::Weights {
            model,
            out,
            seed,
            din,
            dedge,
            layers,
            dim,
        } => {
            let kind = ModelKind::parse(&model)?;
            let mut cfg = ModelConfig::paper_default(kind, din, dedge);
            if let Some(l) = layers {
                cfg.num_layers = l;
                cfg.eps = vec![0.0; l];
            }
            if let Some(d) = dim {
                cfg.embed_dim = d;
            }
            let w = mpgnn::models::random_weights(&cfg, seed);
            write_weights(&w, &out)?;
            let manifest = RunManifest::new("fixtures-weights", &[], kind.as_str(), seed, &out);
            manifest.write_next_to(&out)?;
            println!("wrote {} tensors to {}", w.len(), out.display());
        }
        FixtureKind::Store { out, nodes, seed } => {
            let (g, cfg, _classes) = fixtures::citation_shaped(nodes, seed);
            let mut store = stage_graph(&g, &cfg)?;
            store.save(&out)?;
            let weights_path = out.with_extension("weights");
            write_weights(&cfg.weights, &weights_path)?;
            let manifest = RunManifest::new("fixtures-store", &[], "gcn", seed, &out);
            manifest.write_next_to(&out)?;
            println!(
                "staged {} nodes -> {} (+ {})",
                nodes,
                out.display(),
                weights_path.display()
            );
        }
    }
    Ok(())
}
