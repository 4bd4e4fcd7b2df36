//! Additive-noise structural causal models with linear and ReLU mechanisms.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{node_label, Dag, Digraph, GraphSpec};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Lower bound of the edge-coefficient magnitude used by every simulation.
pub const W_LOWER: f64 = 0.5;
pub const N_FULL: usize = 2500;
pub const N_SMALL: usize = 250;

/// Square edge-coefficient matrix; entry `(i, j)` weights the edge `i -> j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAdjacency<T> {
    w: Matrix<T>,
}

impl<T: Scalar> WeightedAdjacency<T> {
    pub fn new(w: Matrix<T>) -> Result<Self> {
        if !w.is_square() {
            return Err(invalid("weighted adjacency must be square"));
        }
        Ok(Self { w })
    }

    pub fn zeros(d: usize) -> Self {
        Self { w: Matrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.w
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.w[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.w[(i, j)] = v;
    }

    /// Directed graph of the non-zero entries (diagonal ignored).
    pub fn support(&self) -> Digraph {
        let d = self.dim();
        let mut g = Digraph::empty(d);
        for i in 0..d {
            for j in 0..d {
                if i != j && self.w[(i, j)] != T::zero() {
                    g.add_edge(i, j).expect("indices in range");
                }
            }
        }
        g
    }

    /// `true` if the non-zero pattern is exactly the edge set of `g`.
    pub fn matches(&self, g: &Digraph) -> bool {
        self.dim() == g.node_count() && (0..self.dim()).all(|i| self.w[(i, i)] == T::zero()) && self.support() == *g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Root node: noise only.
    Noise,
    Linear,
    Relu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismMap {
    kinds: Vec<Mechanism>,
}

impl MechanismMap {
    pub fn all_linear(g: &Dag) -> Self {
        let kinds = (0..g.node_count())
            .map(|v| {
                if g.parents(v).is_empty() {
                    Mechanism::Noise
                } else {
                    Mechanism::Linear
                }
            })
            .collect();
        Self { kinds }
    }

    pub fn from_kinds(g: &Dag, kinds: Vec<Mechanism>) -> Result<Self> {
        if kinds.len() != g.node_count() {
            return Err(Error::DimensionMismatch {
                expected: g.node_count(),
                actual: kinds.len(),
            });
        }
        for (v, k) in kinds.iter().enumerate() {
            let root = g.parents(v).is_empty();
            if root != (*k == Mechanism::Noise) {
                return Err(invalid(format!(
                    "node {v}: roots must be noise-only and non-roots linear or relu"
                )));
            }
        }
        Ok(Self { kinds })
    }

    pub fn kind(&self, v: usize) -> Mechanism {
        self.kinds[v]
    }

    pub fn kinds(&self) -> &[Mechanism] {
        &self.kinds
    }

    pub fn relu_count(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == Mechanism::Relu).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Original,
    Standardized,
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Original => "original",
            Self::Standardized => "standardized",
        })
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" | "raw" => Ok(Self::Original),
            "standardized" | "std" => Ok(Self::Standardized),
            other => Err(Error::Parse(format!("unknown scale `{other}`"))),
        }
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: Option<u64>,
    pub config_id: Option<u64>,
    pub replicate: Option<u32>,
    /// Row count of the parent dataset when this one is a subsample.
    pub subsampled_from: Option<usize>,
}

/// An `n x d` sample matrix with column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    values: Matrix<T>,
    labels: Vec<String>,
    pub scale: Scale,
    pub provenance: Provenance,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(values: Matrix<T>) -> Result<Self> {
        let labels = (0..values.ncols()).map(node_label).collect();
        Self::with_labels(values, labels)
    }

    pub fn with_labels(values: Matrix<T>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                actual: labels.len(),
            });
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(invalid("dataset contains non-finite values"));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(invalid("column labels must be unique"));
        }
        Ok(Self {
            values,
            labels,
            scale: Scale::Original,
            provenance: Provenance::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.column(j)
    }

    pub fn column_means(&self) -> Vec<T> {
        let n = T::of_usize(self.n());
        let mut means = vec![T::zero(); self.d()];
        for r in 0..self.n() {
            for (m, &v) in means.iter_mut().zip(self.values.row(r)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Sample variances with the `n - 1` denominator.
    pub fn column_variances(&self) -> Vec<T> {
        let means = self.column_means();
        let denom = T::of_usize(self.n().saturating_sub(1).max(1));
        let mut vars = vec![T::zero(); self.d()];
        for r in 0..self.n() {
            for ((s, &v), &m) in vars.iter_mut().zip(self.values.row(r)).zip(&means) {
                let c = v - m;
                *s += c * c;
            }
        }
        vars.iter_mut().for_each(|s| *s /= denom);
        vars
    }

    /// Sample covariance matrix with the `n - 1` denominator.
    pub fn covariance(&self) -> Matrix<T> {
        let d = self.d();
        let means = self.column_means();
        let mut cov = Matrix::zeros(d, d);
        let mut centered = vec![T::zero(); d];
        for r in 0..self.n() {
            for ((c, &v), &m) in centered.iter_mut().zip(self.values.row(r)).zip(&means) {
                *c = v - m;
            }
            for i in 0..d {
                let ci = centered[i];
                for j in i..d {
                    cov[(i, j)] += ci * centered[j];
                }
            }
        }
        let denom = T::of_usize(self.n().saturating_sub(1).max(1));
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        cov
    }

    /// Applies `x -> (x - shift[j]) / scale[j]` per column.
    pub fn affine(&self, shift: &[T], scale: &[T]) -> Self {
        let values = Matrix::from_fn(self.n(), self.d(), |r, j| (self.values[(r, j)] - shift[j]) / scale[j]);
        Self {
            values,
            labels: self.labels.clone(),
            scale: self.scale,
            provenance: self.provenance.clone(),
        }
    }
}

/// Samples a coefficient for every edge of `g`, uniform on
/// `[-upper, -lower] ∪ [lower, upper]`. Non-edges stay zero.
pub fn sample_weights<T: Scalar, R: Rng + ?Sized>(
    g: &Dag,
    w_lower: f64,
    w_upper: f64,
    rng: &mut R,
) -> Result<WeightedAdjacency<T>> {
    if !(w_lower > 0.0 && w_lower <= w_upper) {
        return Err(invalid(format!(
            "weight bounds must satisfy 0 < lower <= upper, got [{w_lower}, {w_upper}]"
        )));
    }
    let mut w = WeightedAdjacency::zeros(g.node_count());
    for (i, j) in g.edges() {
        let magnitude = if w_lower == w_upper {
            w_lower
        } else {
            rng.random_range(w_lower..=w_upper)
        };
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        w.set(i, j, T::of(sign * magnitude));
    }
    Ok(w)
}

/// Each non-root node independently becomes ReLU with probability `q`.
pub fn assign_mechanisms<R: Rng + ?Sized>(g: &Dag, q: f64, rng: &mut R) -> Result<MechanismMap> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("relu fraction {q} outside [0, 1]")));
    }
    let kinds = (0..g.node_count())
        .map(|v| {
            if g.parents(v).is_empty() {
                Mechanism::Noise
            } else if rng.random_bool(q) {
                Mechanism::Relu
            } else {
                Mechanism::Linear
            }
        })
        .collect();
    Ok(MechanismMap { kinds })
}

/// Draws `n` samples by visiting nodes in topological order:
/// `X_i = f_i(X · W_i) + N_i` with `f_i` the identity or ReLU on the
/// aggregated parent sum and `N_i ~ N(0, 1)`.
pub fn sample_dataset<T: Scalar, R: Rng + ?Sized>(
    g: &Dag,
    w: &WeightedAdjacency<T>,
    mech: &MechanismMap,
    n: usize,
    rng: &mut R,
) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    if !w.matches(g) {
        return Err(invalid("weight support does not match the graph"));
    }
    if mech.kinds.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            actual: mech.kinds.len(),
        });
    }
    let d = g.node_count();
    let mut values = Matrix::zeros(n, d);
    for &v in g.topological_order().as_slice() {
        let parents = g.parents(v);
        let kind = mech.kind(v);
        for r in 0..n {
            let noise: f64 = rng.sample(StandardNormal);
            let signal: T = parents.iter().map(|&p| values[(r, p)] * w.get(p, v)).sum();
            let f = match kind {
                Mechanism::Noise | Mechanism::Linear => signal,
                Mechanism::Relu => signal.max(T::zero()),
            };
            values[(r, v)] = f + T::of(noise);
        }
    }
    Dataset::new(values)
}

/// Per-column z-scoring with the `n - 1` standard deviation.
pub fn standardize<T: Scalar>(ds: &Dataset<T>) -> Result<Dataset<T>> {
    let means = ds.column_means();
    let sds: Vec<T> = ds.column_variances().into_iter().map(T::sqrt).collect();
    if ds.n() < 2 {
        return Err(Error::DegenerateColumn { column: 0 });
    }
    if let Some(column) = sds.iter().position(|&s| !(s > T::of(1e-12))) {
        return Err(Error::DegenerateColumn { column });
    }
    let mut out = ds.affine(&means, &sds);
    out.scale = Scale::Standardized;
    Ok(out)
}

/// `m` rows drawn uniformly without replacement, kept in original row order.
pub fn subsample<T: Scalar, R: Rng + ?Sized>(ds: &Dataset<T>, m: usize, rng: &mut R) -> Result<Dataset<T>> {
    if m == 0 || m > ds.n() {
        return Err(invalid(format!("subsample size {m} must lie in 1..={}", ds.n())));
    }
    let mut rows = rand::seq::index::sample(rng, ds.n(), m).into_vec();
    rows.sort_unstable();
    let cols: Vec<usize> = (0..ds.d()).collect();
    let values = ds.values.select(&rows, &cols);
    Ok(Dataset {
        values,
        labels: ds.labels.clone(),
        scale: ds.scale,
        provenance: Provenance {
            subsampled_from: Some(ds.n()),
            ..ds.provenance.clone()
        },
    })
}

/// Full parameterisation of one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub graph: GraphSpec,
    pub relu_fraction: f64,
    pub w_lower: f64,
    pub w_upper: f64,
    pub n: usize,
}

/// Ground truth and base sample of one simulation.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub graph: Dag,
    pub weights: WeightedAdjacency<T>,
    pub mechanisms: MechanismMap,
    pub data: Dataset<T>,
}

impl SimConfig {
    pub fn simulate<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Simulation<T>> {
        let graph = self.graph.sample(rng)?;
        let weights = sample_weights(&graph, self.w_lower, self.w_upper, rng)?;
        let mechanisms = assign_mechanisms(&graph, self.relu_fraction, rng)?;
        let data = sample_dataset(&graph, &weights, &mechanisms, self.n, rng)?;
        Ok(Simulation {
            graph,
            weights,
            mechanisms,
            data,
        })
    }
}
