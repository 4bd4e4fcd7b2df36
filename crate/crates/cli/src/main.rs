use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use causalbench::discovery::NoTearsParams;
use causalbench::graph::GraphKind;
use causalbench::harness::{self, Cell, ExperimentGrid, MetricRecord, Model, RunOptions};
use causalbench::io::{self, DatasetMeta};
use causalbench::metrics::{evaluate, varsortability};
use causalbench::scm::Scale;
use causalbench::Dag;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "causalbench",
    version,
    about = "Benchmark causal structure learners on simulated data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one dataset and write it with its ground truth.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Replicate index within the configured cell.
        #[arg(long, default_value_t = 0)]
        replicate: u32,
    },
    /// Fit models to a dataset CSV and write the estimated graphs.
    Discover {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV with a header row.
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated model list.
        #[arg(long, default_value = "var-snr,r2-snr,notears")]
        models: String,
        /// Edge probability of the random baseline.
        #[arg(long, default_value_t = 0.2)]
        random_p: f64,
    },
    /// Score an estimated edge list against the true one.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        /// Optional dataset, used to report varsortability.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run an experiment grid, appending records to `<out>/runs.jsonl`.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Comma-separated model list overriding the configuration.
        #[arg(long)]
        models: Option<String>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Summarize a records file into CSV tables.
    Report {
        #[command(flatten)]
        common: Common,
        /// JSON-lines records file.
        records: PathBuf,
    },
}

/// A single simulated cell as read from `simulate --config`.
#[derive(serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateConfig {
    nodes: usize,
    graph: GraphKind,
    connectivity: f64,
    relu_fraction: f64,
    w_upper: f64,
    sample_size: usize,
    scale: Scale,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            nodes: 10,
            graph: GraphKind::Er,
            connectivity: 0.2,
            relu_fraction: 0.0,
            w_upper: 2.0,
            sample_size: 2500,
            scale: Scale::Original,
        }
    }
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening config {}", p.display()))?;
            serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing config {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn simulate(common: &Common, replicate: u32) -> Result<()> {
    let cfg: SimulateConfig = read_config(common.config.as_deref())?;
    let cell = Cell {
        id: 0,
        base_id: 0,
        sample_size: cfg.sample_size,
        nodes: cfg.nodes,
        graph: cfg.graph,
        connectivity: cfg.connectivity,
        relu_fraction: cfg.relu_fraction,
        w_upper: cfg.w_upper,
        scale: cfg.scale,
    };
    let seed = common.seed.unwrap_or(0);
    let (sim, ds) = harness::cell_instance(&cell, replicate, seed)?;
    std::fs::create_dir_all(&common.out)?;
    io::write_dataset(create(&common.out.join("data.csv"))?, &ds)?;
    io::write_edge_list(create(&common.out.join("truth.csv"))?, &sim.graph, Some(&sim.weights))?;
    io::write_adjacency(create(&common.out.join("truth_weights.csv"))?, sim.weights.matrix())?;
    let meta = DatasetMeta::for_dataset(&ds, Some(harness::cell_config(&cell)), Some("truth.csv".into()));
    io::write_json(&common.out.join("data.json"), &meta)?;
    println!(
        "simulated n={} d={} edges={} relu_nodes={}",
        ds.n(),
        ds.d(),
        sim.graph.edge_count(),
        sim.mechanisms.relu_count()
    );
    Ok(())
}

fn discover(common: &Common, data: &Path, models: &str, random_p: f64) -> Result<()> {
    let params: NoTearsParams = read_config(common.config.as_deref())?;
    params.validate()?;
    let ds = io::read_dataset(File::open(data).with_context(|| format!("opening {}", data.display()))?)?;
    std::fs::create_dir_all(&common.out)?;
    for model in Model::parse_list(models)? {
        let fit = model.fit(&ds, &params, common.seed.unwrap_or(0), random_p)?;
        let stem = model.name();
        io::write_edge_list(
            create(&common.out.join(format!("{stem}_edges.csv")))?,
            &fit.g_est,
            Some(&fit.w_est),
        )?;
        io::write_adjacency(
            create(&common.out.join(format!("{stem}_weights.csv")))?,
            fit.w_est.matrix(),
        )?;
        io::write_json(&common.out.join(format!("{stem}_diagnostics.json")), &fit.diagnostics)?;
        println!("{stem}: {} edges", fit.g_est.edge_count());
    }
    Ok(())
}

fn evaluate_files(common: &Common, truth: &Path, estimate: &Path, data: Option<&Path>) -> Result<()> {
    let ds = data
        .map(|p| {
            io::read_dataset(File::open(p).with_context(|| format!("opening {}", p.display()))?)
                .map_err(anyhow::Error::from)
        })
        .transpose()?;
    let (t, _) = io::read_edge_list(
        File::open(truth).with_context(|| format!("opening {}", truth.display()))?,
        ds.as_ref().map(|d| d.d()),
    )?;
    let (e, _) = io::read_edge_list(
        File::open(estimate).with_context(|| format!("opening {}", estimate.display()))?,
        Some(t.node_count()),
    )?;
    if e.node_count() != t.node_count() {
        bail!("estimate has {} nodes, truth {}", e.node_count(), t.node_count());
    }
    let truth = Dag::try_from(t).context("true graph is cyclic")?;
    let record = MetricRecord::from_evaluation(&evaluate::<f64>(&truth, &e)?)?;
    let vs = ds.as_ref().map(|d| varsortability(&truth, d)).transpose()?;
    let out = json!({ "metrics": record, "varsortability": vs });
    std::fs::create_dir_all(&common.out)?;
    io::write_json(&common.out.join("evaluation.json"), &out)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn grid(common: &Common, preset: Option<Preset>, models: Option<&str>, jobs: usize) -> Result<()> {
    let mut grid: ExperimentGrid = match (&common.config, preset) {
        (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
        (Some(p), None) => read_config(Some(p))?,
        (None, Some(Preset::Full)) => ExperimentGrid::full(),
        (None, Some(Preset::Desk)) | (None, None) => ExperimentGrid::desk(),
    };
    if let Some(seed) = common.seed {
        grid.master_seed = seed;
    }
    if let Some(m) = models {
        grid.models = Model::parse_list(m)?;
    }
    std::fs::create_dir_all(&common.out)?;
    io::write_json(&common.out.join("grid.json"), &grid)?;
    log::info!(
        "{} cells, {} instances, {} runs",
        grid.cell_count(),
        grid.instance_count(),
        grid.run_count()
    );
    let records = harness::run_grid(&grid, &common.out.join("runs.jsonl"), &RunOptions { jobs })?;
    let failures = records.iter().filter(|r| r.metrics.is_none()).count();
    println!(
        "{} records ({failures} failed) in {}",
        records.len(),
        common.out.join("runs.jsonl").display()
    );
    Ok(())
}

fn report(common: &Common, records: &Path) -> Result<()> {
    let records = harness::read_records_file(records).with_context(|| format!("reading {}", records.display()))?;
    let rep = harness::report(&records)?;
    rep.write(&common.out)?;
    harness::write_runs_csv(&common.out.join("runs.csv"), &records)?;
    for row in &rep.ranking {
        let dos = row.mean_dos.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:>2}  {:<8} {dos}  failures {}/{}",
            row.rank, row.model, row.failures, row.runs
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate { common, replicate } => simulate(common, *replicate),
        Command::Discover {
            common,
            data,
            models,
            random_p,
        } => discover(common, data, models, *random_p),
        Command::Evaluate {
            common,
            truth,
            estimate,
            data,
        } => evaluate_files(common, truth, estimate, data.as_deref()),
        Command::Grid {
            common,
            preset,
            models,
            jobs,
        } => grid(common, *preset, models.as_deref(), *jobs),
        Command::Report { common, records } => report(common, records),
    }
}
