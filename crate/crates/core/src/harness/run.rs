//! Seeded execution of one grid cell, and of a whole grid with resumable
//! JSON-lines output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discovery::{
    empty_baseline, fully_random_baseline, notears_linear, r2_sortnregress, var_sortnregress, DiscoveryResult,
    NoTearsParams,
};
use crate::dos::{dos_single, FactorRecord, ScenarioPair};
use crate::error::{Error, Result};
use crate::graph::{GraphKind, GraphSpec};
use crate::harness::grid::{enumerate_grid, Cell, ExperimentGrid};
use crate::harness::seed::{mix, rng_from, stream};
use crate::metrics::{evaluate, varsortability, Evaluation};
use crate::scm::{standardize, subsample, Dataset, Scale, SimConfig, Simulation, N_FULL, W_LOWER};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Structure learners the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "var-snr")]
    VarSnr,
    #[serde(rename = "r2-snr")]
    R2Snr,
    #[serde(rename = "notears")]
    NoTears,
    #[serde(rename = "empty")]
    Empty,
    #[serde(rename = "random")]
    Random,
    /// Returns the true graph. Useful as a sanity anchor.
    #[serde(rename = "truth")]
    Truth,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::VarSnr,
        Model::R2Snr,
        Model::NoTears,
        Model::Empty,
        Model::Random,
        Model::Truth,
    ];

    /// Default model list: the three learners and the two baselines.
    pub fn reference_set() -> [Model; 5] {
        [Model::VarSnr, Model::R2Snr, Model::NoTears, Model::Empty, Model::Random]
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::VarSnr => "var-snr",
            Model::R2Snr => "r2-snr",
            Model::NoTears => "notears",
            Model::Empty => "empty",
            Model::Random => "random",
            Model::Truth => "truth",
        }
    }

    /// Parses a comma-separated list such as `var-snr,notears`.
    pub fn parse_list(s: &str) -> Result<Vec<Model>> {
        let models: Vec<Model> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if models.is_empty() {
            return Err(Error::InvalidConfig("model list is empty".into()));
        }
        Ok(models)
    }

    /// Fits a data-driven model. `random_p` is the edge probability of the
    /// random baseline; the truth oracle has no data-only fit and errors.
    pub fn fit(
        self,
        ds: &Dataset<f64>,
        params: &NoTearsParams,
        seed: u64,
        random_p: f64,
    ) -> Result<DiscoveryResult<f64>> {
        match self {
            Model::VarSnr => var_sortnregress(ds),
            Model::R2Snr => r2_sortnregress(ds),
            Model::NoTears => notears_linear(ds, params),
            Model::Empty => Ok(empty_baseline(ds)),
            Model::Random => fully_random_baseline(ds, random_p, &mut rng_from(seed)),
            Model::Truth => Err(Error::InvalidConfig(
                "the truth model needs the generating graph".into(),
            )),
        }
    }

    fn fit_on(
        self,
        ds: &Dataset<f64>,
        sim: &Simulation<f64>,
        cell: &Cell,
        seed: u64,
        params: &NoTearsParams,
    ) -> Result<DiscoveryResult<f64>> {
        match self {
            Model::Truth => Ok(DiscoveryResult {
                w_est: sim.weights.clone(),
                g_est: sim.graph.clone(),
                order: sim.graph.topological_order(),
                diagnostics: BTreeMap::new(),
            }),
            _ => self.fit(ds, params, seed, cell.connectivity),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model `{s}`")))
    }
}

/// Flat scores of one estimate: the six normalized metrics, the raw counts
/// behind them and the DOS value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub tpr: f64,
    pub fpr: f64,
    pub nshd: f64,
    pub f1: f64,
    pub ncod: f64,
    pub nsid: f64,
    pub dos: f64,
    pub shd: usize,
    pub cod: usize,
    pub sid: usize,
    pub true_edges: usize,
    pub est_edges: usize,
    pub correct: usize,
    pub extra: usize,
    pub missing: usize,
    pub reversed: usize,
}

impl MetricRecord {
    pub fn from_evaluation(e: &Evaluation<f64>) -> Result<Self> {
        let dos = dos_single(&e.metrics, &ScenarioPair::standard())?;
        let m = e.metrics;
        Ok(Self {
            tpr: m.tpr,
            fpr: m.fpr,
            nshd: m.nshd,
            f1: m.f1,
            ncod: m.ncod,
            nsid: m.nsid,
            dos: dos.value,
            shd: e.shd,
            cod: e.cod,
            sid: e.sid,
            true_edges: e.counts.t_true,
            est_edges: e.counts.e_est,
            correct: e.counts.tp_dir,
            extra: e.counts.fp_skel,
            missing: e.counts.missing,
            reversed: e.counts.reversed,
        })
    }
}

/// One (cell, replicate, model) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub cell: usize,
    pub base_id: usize,
    pub replicate: u32,
    pub model: Model,
    pub sample_size: usize,
    pub nodes: usize,
    pub graph: GraphKind,
    pub connectivity: f64,
    pub relu_fraction: f64,
    pub w_upper: f64,
    pub scale: Scale,
    pub instance_seed: u64,
    /// Of the evaluated (possibly standardized) sample.
    pub varsortability: Option<f64>,
    /// Absent when the fit failed.
    pub metrics: Option<MetricRecord>,
    pub diagnostics: BTreeMap<String, f64>,
    pub error: Option<String>,
    pub wall_clock_ms: f64,
}

pub type RecordKey = (usize, u32, Model);

impl RunRecord {
    pub fn key(&self) -> RecordKey {
        (self.cell, self.replicate, self.model)
    }

    /// The record with the schedule-dependent field zeroed.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_ms: 0.0,
            ..self.clone()
        }
    }
}

impl FactorRecord for RunRecord {
    fn model(&self) -> &str {
        self.model.name()
    }

    fn dos(&self) -> Option<f64> {
        self.metrics.map(|m| m.dos)
    }

    fn levels(&self) -> Vec<(&'static str, String)> {
        vec![
            ("sample_size", self.sample_size.to_string()),
            ("nodes", self.nodes.to_string()),
            ("graph", self.graph.to_string()),
            ("connectivity", self.connectivity.to_string()),
            ("relu_fraction", self.relu_fraction.to_string()),
            ("w_upper", self.w_upper.to_string()),
            ("scale", self.scale.to_string()),
            ("replicate", self.replicate.to_string()),
        ]
    }
}

/// Seed of the base draw shared by all sample-size and scale variants of a
/// replicate.
pub fn instance_seed(master_seed: u64, cell: &Cell, replicate: u32) -> u64 {
    mix(master_seed, &[cell.base_id as u64, replicate as u64])
}

/// Simulation parameters of a cell's base draw (always the full sample size).
pub fn cell_config(cell: &Cell) -> SimConfig {
    SimConfig {
        graph: GraphSpec::matched(cell.nodes, cell.graph, cell.connectivity),
        relu_fraction: cell.relu_fraction,
        w_lower: W_LOWER,
        w_upper: cell.w_upper,
        n: N_FULL,
    }
}

/// Simulates the base draw and derives the cell's (sample size, scale) variant.
pub fn cell_instance(cell: &Cell, replicate: u32, master_seed: u64) -> Result<(Simulation<f64>, Dataset<f64>)> {
    let seed = instance_seed(master_seed, cell, replicate);
    let mut sim: Simulation<f64> = cell_config(cell).simulate(&mut rng_from(mix(seed, &[stream::SIMULATION])))?;
    sim.data.provenance.master_seed = Some(master_seed);
    sim.data.provenance.config_id = Some(cell.id as u64);
    sim.data.provenance.replicate = Some(replicate);
    let mut ds = if cell.sample_size < sim.data.n() {
        let mut rng = rng_from(mix(seed, &[stream::SUBSAMPLE, cell.sample_size as u64]));
        subsample(&sim.data, cell.sample_size, &mut rng)?
    } else {
        sim.data.clone()
    };
    if cell.scale == Scale::Standardized {
        ds = standardize(&ds)?;
    }
    Ok((sim, ds))
}

/// Runs every model on one replicate of one cell. Learner failures become
/// records with `metrics: None` and the error text.
pub fn run_cell(
    cell: &Cell,
    replicate: u32,
    models: &[Model],
    master_seed: u64,
    params: &NoTearsParams,
) -> Result<Vec<RunRecord>> {
    let seed = instance_seed(master_seed, cell, replicate);
    let (sim, ds) = cell_instance(cell, replicate, master_seed)?;
    let vs = varsortability(&sim.graph, &ds).ok();
    // one model stream per cell, shared by all models so comparisons are paired
    let model_seed = mix(seed, &[stream::MODEL, cell.id as u64]);
    let mut out = Vec::with_capacity(models.len());
    for &model in models {
        let start = Instant::now();
        let outcome = model.fit_on(&ds, &sim, cell, model_seed, params).and_then(|fit| {
            let e = evaluate::<f64>(&sim.graph, &fit.g_est)?;
            Ok((MetricRecord::from_evaluation(&e)?, fit.diagnostics))
        });
        let wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
        let (metrics, diagnostics, error) = match outcome {
            Ok((m, diag)) => (Some(m), diag, None),
            Err(e) => {
                log::warn!("cell {} replicate {replicate} model {model}: {e}", cell.id);
                (None, BTreeMap::new(), Some(e.to_string()))
            }
        };
        out.push(RunRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            cell: cell.id,
            base_id: cell.base_id,
            replicate,
            model,
            sample_size: cell.sample_size,
            nodes: cell.nodes,
            graph: cell.graph,
            connectivity: cell.connectivity,
            relu_fraction: cell.relu_fraction,
            w_upper: cell.w_upper,
            scale: cell.scale,
            instance_seed: seed,
            varsortability: vs.filter(|v| v.is_finite()),
            metrics,
            diagnostics: diagnostics.into_iter().filter(|(_, v)| v.is_finite()).collect(),
            error,
            wall_clock_ms,
        });
    }
    Ok(out)
}

/// Options of a grid run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `0` uses all cores.
    pub jobs: usize,
}

/// Reads JSON-lines records. A trailing partial line (from an interrupted
/// writer) is ignored.
pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    let mut lines = BufReader::new(input).lines().peekable();
    while let Some(line) = lines.next() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(&line) {
            Ok(r) => {
                if r.schema_version != RECORD_SCHEMA_VERSION {
                    return Err(Error::Parse(format!(
                        "record schema version {} (expected {RECORD_SCHEMA_VERSION})",
                        r.schema_version
                    )));
                }
                out.push(r)
            }
            Err(_) if lines.peek().is_none() => log::warn!("ignoring truncated final record"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<RunRecord>> {
    read_records(File::open(path)?)
}

/// Drops a trailing partial line so appends start on a fresh line.
fn truncate_partial_tail(file: &mut File) -> Result<()> {
    let len = file.metadata()?.len();
    if len == 0 {
        return Ok(());
    }
    let mut content = Vec::with_capacity(len as usize);
    file.seek(SeekFrom::Start(0))?;
    file.read_to_end(&mut content)?;
    if content.last() != Some(&b'\n') {
        let keep = content.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        file.set_len(keep as u64)?;
    }
    Ok(())
}

/// Runs the grid, appending one JSON line per record to `out_path`. Keys
/// already present in the file are skipped. Returns every record of the grid
/// (previous and new) sorted by key.
pub fn run_grid(grid: &ExperimentGrid, out_path: &Path, opts: &RunOptions) -> Result<Vec<RunRecord>> {
    if grid.models.is_empty() {
        return Err(Error::InvalidConfig("model list is empty".into()));
    }
    let cells = enumerate_grid(grid)?;
    let mut existing = if out_path.exists() {
        read_records_file(out_path)?
    } else {
        Vec::new()
    };
    let done: BTreeSet<RecordKey> = existing.iter().map(RunRecord::key).collect();

    let mut file = OpenOptions::new().create(true).read(true).append(true).open(out_path)?;
    truncate_partial_tail(&mut file)?;

    let work: Vec<(&Cell, u32, Vec<Model>)> = cells
        .iter()
        .flat_map(|c| (0..grid.replicates).map(move |r| (c, r)))
        .filter_map(|(c, r)| {
            let todo: Vec<Model> = grid
                .models
                .iter()
                .copied()
                .filter(|&m| !done.contains(&(c.id, r, m)))
                .collect();
            (!todo.is_empty()).then_some((c, r, todo))
        })
        .collect();
    log::info!(
        "{} cells x {} replicates, {} work items pending",
        cells.len(),
        grid.replicates,
        work.len()
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<Vec<RunRecord>>();
    let writer = std::thread::spawn(move || -> Result<Vec<RunRecord>> {
        let mut written = Vec::new();
        for batch in rx {
            let mut buf = Vec::new();
            for r in &batch {
                serde_json::to_writer(&mut buf, r)?;
                buf.push(b'\n');
            }
            // one write per work item keeps each batch contiguous
            file.write_all(&buf)?;
            file.flush()?;
            written.extend(batch);
        }
        file.sync_all()?;
        Ok(written)
    });

    let result: Result<()> = pool.install(|| {
        work.par_iter().try_for_each_with(tx, |tx, (cell, rep, models)| {
            let records = run_cell(cell, *rep, models, grid.master_seed, &grid.notears)?;
            tx.send(records)
                .map_err(|_| Error::Io(std::io::Error::other("record writer stopped")))
        })
    });
    let written = writer
        .join()
        .map_err(|_| Error::Io(std::io::Error::other("record writer panicked")))??;
    result?;

    let keys: BTreeSet<RecordKey> = cells
        .iter()
        .flat_map(|c| (0..grid.replicates).flat_map(move |r| grid.models.iter().map(move |&m| (c.id, r, m))))
        .collect();
    existing.retain(|r| keys.contains(&r.key()));
    existing.extend(written);
    existing.sort_by_key(RunRecord::key);
    existing.dedup_by_key(|r| r.key());
    Ok(existing)
}
