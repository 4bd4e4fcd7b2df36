//! The experimental factor grid and its enumeration.

use serde::{Deserialize, Serialize};

use crate::discovery::NoTearsParams;
use crate::error::{Error, Result};
use crate::graph::GraphKind;
use crate::harness::Model;
use crate::scm::{Scale, N_FULL, N_SMALL};

/// Factor domains, replicate count, seed and model list of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentGrid {
    pub sample_sizes: Vec<usize>,
    pub nodes: Vec<usize>,
    pub graph_types: Vec<GraphKind>,
    pub connectivity: Vec<f64>,
    pub relu_fractions: Vec<f64>,
    pub w_upper: Vec<f64>,
    pub scales: Vec<Scale>,
    pub replicates: u32,
    pub master_seed: u64,
    pub models: Vec<Model>,
    pub notears: NoTearsParams,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self::full()
    }
}

impl ExperimentGrid {
    /// The complete factor grid: 1536 cells.
    pub fn full() -> Self {
        Self {
            sample_sizes: vec![N_FULL, N_SMALL],
            nodes: vec![10, 20, 50, 100],
            graph_types: vec![GraphKind::Er, GraphKind::Sf],
            connectivity: vec![0.2, 0.3, 0.4],
            relu_fractions: vec![0.0, 0.5, 0.7, 0.9],
            w_upper: vec![1.0, 2.0, 3.0, 4.0],
            scales: vec![Scale::Original, Scale::Standardized],
            replicates: 10,
            master_seed: 0,
            models: Model::reference_set().to_vec(),
            notears: NoTearsParams::default(),
        }
    }

    /// Laptop-sized slice: 10 and 20 nodes, three replicates.
    pub fn desk() -> Self {
        Self {
            nodes: vec![10, 20],
            replicates: 3,
            ..Self::full()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "full" => Ok(Self::full()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("sample_sizes", self.sample_sizes.is_empty()),
            ("nodes", self.nodes.is_empty()),
            ("graph_types", self.graph_types.is_empty()),
            ("connectivity", self.connectivity.is_empty()),
            ("relu_fractions", self.relu_fractions.is_empty()),
            ("w_upper", self.w_upper.is_empty()),
            ("scales", self.scales.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("factor domain `{name}` is empty")));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.nodes.iter().any(|&d| d < 2) {
            return Err(Error::InvalidConfig("node counts must be at least 2".into()));
        }
        if self.sample_sizes.iter().any(|&n| n == 0 || n > N_FULL) {
            return Err(Error::InvalidConfig(format!("sample sizes must lie in 1..={N_FULL}")));
        }
        if self.connectivity.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::InvalidConfig("connectivity must lie in (0, 1]".into()));
        }
        if self.relu_fractions.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::InvalidConfig("relu fractions must lie in [0, 1]".into()));
        }
        if self.w_upper.iter().any(|&w| w < crate::scm::W_LOWER) {
            return Err(Error::InvalidConfig(
                "w_upper must be at least the 0.5 lower bound".into(),
            ));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.sample_sizes.len()
            * self.nodes.len()
            * self.graph_types.len()
            * self.connectivity.len()
            * self.relu_fractions.len()
            * self.w_upper.len()
            * self.scales.len()
    }

    pub fn instance_count(&self) -> usize {
        self.cell_count() * self.replicates as usize
    }

    pub fn run_count(&self) -> usize {
        self.instance_count() * self.models.len()
    }
}

/// One combination of factor levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Position in the lexicographic enumeration.
    pub id: usize,
    /// Index of the (nodes, graph, connectivity, relu, w_upper) combination.
    /// Cells sharing it differ only in sample size and scale and reuse one
    /// simulated base dataset.
    pub base_id: usize,
    pub sample_size: usize,
    pub nodes: usize,
    pub graph: GraphKind,
    pub connectivity: f64,
    pub relu_fraction: f64,
    pub w_upper: f64,
    pub scale: Scale,
}

/// Lexicographic enumeration, sample size outermost and scale innermost.
pub fn enumerate_grid(grid: &ExperimentGrid) -> Result<Vec<Cell>> {
    grid.validate()?;
    let mut cells = Vec::with_capacity(grid.cell_count());
    let base_stride = [
        grid.graph_types.len() * grid.connectivity.len() * grid.relu_fractions.len() * grid.w_upper.len(),
        grid.connectivity.len() * grid.relu_fractions.len() * grid.w_upper.len(),
        grid.relu_fractions.len() * grid.w_upper.len(),
        grid.w_upper.len(),
        1,
    ];
    for &sample_size in &grid.sample_sizes {
        for (a, &nodes) in grid.nodes.iter().enumerate() {
            for (b, &graph) in grid.graph_types.iter().enumerate() {
                for (c, &connectivity) in grid.connectivity.iter().enumerate() {
                    for (e, &relu_fraction) in grid.relu_fractions.iter().enumerate() {
                        for (f, &w_upper) in grid.w_upper.iter().enumerate() {
                            let base_id = a * base_stride[0]
                                + b * base_stride[1]
                                + c * base_stride[2]
                                + e * base_stride[3]
                                + f * base_stride[4];
                            for &scale in &grid.scales {
                                cells.push(Cell {
                                    id: cells.len(),
                                    base_id,
                                    sample_size,
                                    nodes,
                                    graph,
                                    connectivity,
                                    relu_fraction,
                                    w_upper,
                                    scale,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}
