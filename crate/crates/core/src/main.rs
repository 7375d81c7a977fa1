use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use matchoid_stream::baselines::{brute_force_opt, offline_greedy};
use matchoid_stream::experiment::{
    load_summary, report, run_experiment, write_report, Algorithm, ExperimentConfig, OfflineChoice,
};
use matchoid_stream::generate::{generate_instance, GeneratorSpec, FAMILIES};
use matchoid_stream::instance::Instance;

#[derive(Parser)]
#[command(name = "matchoid-stream", version, about = "Multi-pass streaming submodular maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance file.
    Generate(GenerateArgs),
    /// Monotone multi-pass local search with certified bounds.
    RunMonotone(MonotoneArgs),
    /// Randomized buffered local search for non-monotone objectives.
    RunNonmonotone(NonmonotoneArgs),
    /// Brute-force optimum (n <= 16).
    SolveExact {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Offline greedy baseline.
    Greedy {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Ratio-vs-pass table over summary files.
    Report {
        summaries: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a serialized experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    items: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    parts: usize,
    #[arg(long, default_value_t = 1)]
    capacity: usize,
    #[arg(long, default_value_t = 4)]
    left: usize,
    #[arg(long, default_value_t = 4)]
    right: usize,
    #[arg(long, default_value_t = 6)]
    vertices: usize,
    #[arg(long, default_value_t = 10)]
    edges: usize,
    #[arg(long, default_value_t = 20)]
    arcs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

impl GenerateArgs {
    fn spec(&self) -> anyhow::Result<GeneratorSpec> {
        let seed = self.seed;
        Ok(match self.family.as_str() {
            "coverage-uniform" => GeneratorSpec::CoverageUniform {
                n: self.n,
                items: self.items,
                k: self.k,
                seed,
            },
            "coverage-partition" => GeneratorSpec::CoveragePartition {
                n: self.n,
                items: self.items,
                parts: self.parts,
                capacity: self.capacity,
                seed,
            },
            "bipartite-matching" => GeneratorSpec::BipartiteMatching {
                left: self.left,
                right: self.right,
                edges: self.edges,
                items: self.items,
                seed,
            },
            "3-uniform-hypergraph" => GeneratorSpec::Hypergraph3 {
                vertices: self.vertices,
                edges: self.edges,
                items: self.items,
                seed,
            },
            "directed-cut" => GeneratorSpec::DirectedCut {
                n: self.n,
                arcs: self.arcs,
                k: self.k,
                seed,
            },
            other => bail!("unknown family {other:?}; expected one of {}", FAMILIES.join(", ")),
        })
    }
}

#[derive(Args)]
struct Outputs {
    /// Per-pass CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON summary (also printed to stdout).
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Per-element JSON-lines trace.
    #[arg(long)]
    element_trace: Option<PathBuf>,
    /// Check the incremental-value identities after every element.
    #[arg(long)]
    audit: bool,
    /// Memoize objective values.
    #[arg(long)]
    memo: bool,
    /// Shuffle the stream once with this seed instead of ascending ids.
    #[arg(long)]
    shuffle_seed: Option<u64>,
}

#[derive(Args)]
struct MonotoneArgs {
    #[arg(long)]
    instance: PathBuf,
    /// matroid | matchoid | fixed:B | custom:B1,B2,...
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    target_gamma: Option<f64>,
    #[command(flatten)]
    outputs: Outputs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Offline {
    Exact,
    Heuristic,
}

#[derive(Args)]
struct NonmonotoneArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Offline::Exact)]
    offline: Offline,
    /// Offline factor to report in heuristic mode.
    #[arg(long)]
    gamma_off: Option<f64>,
    /// Buffer capacity, overriding ceil(4dk/eps'^2).
    #[arg(long)]
    buffer: Option<usize>,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    outputs: Outputs,
}

fn apply_outputs(cfg: &mut ExperimentConfig, o: Outputs) {
    cfg.trace = o.trace;
    cfg.summary = o.summary;
    cfg.element_trace = o.element_trace;
    cfg.audit = o.audit;
    cfg.memo = o.memo;
    cfg.shuffle_seed = o.shuffle_seed;
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let summary = run_experiment(cfg)?;
    print_json(&summary)
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => {
            let inst = generate_instance(&args.spec()?)?;
            inst.save(&args.out)?;
        }
        Command::RunMonotone(a) => {
            let mut cfg = ExperimentConfig::new(Algorithm::MonotoneMultipass);
            cfg.instance = Some(a.instance);
            cfg.schedule = a.schedule;
            cfg.epsilon = a.epsilon;
            cfg.passes = a.passes;
            cfg.target_gamma = a.target_gamma;
            apply_outputs(&mut cfg, a.outputs);
            run(&cfg)?;
        }
        Command::RunNonmonotone(a) => {
            let mut cfg = ExperimentConfig::new(Algorithm::NonmonotoneRandomized);
            cfg.instance = Some(a.instance);
            cfg.epsilon = a.epsilon;
            cfg.passes = a.passes;
            cfg.schedule = a.schedule;
            cfg.seed = a.seed;
            cfg.offline = match a.offline {
                Offline::Exact => OfflineChoice::Exact,
                Offline::Heuristic => OfflineChoice::Heuristic,
            };
            cfg.gamma_off = a.gamma_off;
            cfg.buffer = a.buffer;
            cfg.replicates = a.replicates;
            cfg.threads = a.threads;
            apply_outputs(&mut cfg, a.outputs);
            run(&cfg)?;
        }
        Command::SolveExact { instance } => {
            let (f, mp) = Instance::load(&instance)?.build()?;
            let r = brute_force_opt(&f, &mp)?;
            print_json(&r)?;
        }
        Command::Greedy { instance } => {
            let (f, mp) = Instance::load(&instance)?.build()?;
            let set = offline_greedy(&f, &mp)?;
            let value = f.value(&set)?;
            print_json(&json!({ "value": value, "set": set }))?;
        }
        Command::Report { summaries, out } => {
            let loaded = summaries
                .iter()
                .map(|p| load_summary(p).with_context(|| format!("reading {}", p.display())))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let rows = report(&loaded);
            match out {
                Some(path) => write_report(&path, &rows)?,
                None => {
                    let mut w = csv::Writer::from_writer(std::io::stdout());
                    for r in &rows {
                        w.serialize(r)?;
                    }
                    w.flush()?;
                }
            }
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            run(&cfg)?;
        }
    }
    Ok(())
}
