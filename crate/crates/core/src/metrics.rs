//! One-dimensional graph-evaluation criteria and varsortability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, Digraph, NodeOrder};
use crate::scalar::Scalar;
use crate::scm::Dataset;

/// Edge-level comparison of an estimate against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// Estimated edges present in the truth with the same direction.
    pub tp_dir: usize,
    /// Estimated edges whose endpoints are not adjacent in the truth.
    pub fp_skel: usize,
    /// True edges whose endpoints are not adjacent in the estimate.
    pub missing: usize,
    /// Estimated edges present in the truth with flipped direction.
    pub reversed: usize,
    pub t_true: usize,
    pub e_est: usize,
    pub d: usize,
}

pub fn confusion(truth: &Digraph, estimate: &Digraph) -> Result<ConfusionCounts> {
    let d = truth.node_count();
    if estimate.node_count() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: estimate.node_count(),
        });
    }
    let mut c = ConfusionCounts {
        d,
        t_true: truth.edge_count(),
        e_est: estimate.edge_count(),
        ..Default::default()
    };
    for (i, j) in estimate.edges() {
        if truth.has_edge(i, j) {
            c.tp_dir += 1;
        } else if truth.has_edge(j, i) {
            c.reversed += 1;
        } else {
            c.fp_skel += 1;
        }
    }
    c.missing = truth.edges().filter(|&(i, j)| !estimate.adjacent(i, j)).count();
    Ok(c)
}

impl ConfusionCounts {
    pub fn shd(&self) -> usize {
        self.fp_skel + self.missing + self.reversed
    }

    /// `SHD / (E(G) + E(G~))`, zero when both graphs are empty.
    pub fn nshd<T: Scalar>(&self) -> T {
        ratio_or(self.shd(), self.t_true + self.e_est, T::zero())
    }

    /// `TP / T`, one when the truth has no edges.
    pub fn tpr<T: Scalar>(&self) -> T {
        if self.t_true == 0 {
            log::debug!("tpr on an empty true graph defined as 1");
        }
        ratio_or(self.tp_dir, self.t_true, T::one())
    }

    /// `(R + FP) / (d(d-1) - T)`: the non-edge count without the usual 0.5 factor.
    pub fn fpr<T: Scalar>(&self) -> T {
        let pairs = self.d * self.d.saturating_sub(1);
        ratio_or(
            self.reversed + self.fp_skel,
            pairs.saturating_sub(self.t_true),
            T::zero(),
        )
    }

    /// Binary F1 over ordered node pairs, one when both graphs are empty.
    pub fn f1<T: Scalar>(&self) -> T {
        let fp = self.e_est - self.tp_dir;
        let fneg = self.t_true - self.tp_dir;
        ratio_or(2 * self.tp_dir, 2 * self.tp_dir + fp + fneg, T::one())
    }
}

fn ratio_or<T: Scalar>(num: usize, den: usize, fallback: T) -> T {
    if den == 0 {
        fallback
    } else {
        T::of_usize(num) / T::of_usize(den)
    }
}

/// Topological order of an estimate; a cyclic estimate is an error.
pub fn order_from_estimate(estimate: &Digraph) -> Result<NodeOrder> {
    estimate.topological_order()
}

/// Number of true edges pointing backwards in `order`.
pub fn cod(truth: &Digraph, order: &NodeOrder) -> Result<usize> {
    if order.len() != truth.node_count() {
        return Err(Error::DimensionMismatch {
            expected: truth.node_count(),
            actual: order.len(),
        });
    }
    let pos = order.positions();
    Ok(truth.edges().filter(|&(i, j)| pos[i] > pos[j]).count())
}

pub fn ncod<T: Scalar>(truth: &Digraph, order: &NodeOrder) -> Result<T> {
    Ok(ratio_or(cod(truth, order)?, truth.edge_count(), T::zero()))
}

/// Per-DAG data reused across every adjustment query on the same truth.
struct AdjustmentContext {
    nb: crate::graph::Neighbors,
    desc: Vec<Vec<bool>>,
    anc: Vec<Vec<bool>>,
}

impl AdjustmentContext {
    fn new(truth: &Dag) -> Self {
        let d = truth.node_count();
        let desc: Vec<Vec<bool>> = (0..d).map(|v| truth.descendant_mask(v)).collect();
        let anc = (0..d).map(|v| (0..d).map(|u| desc[u][v]).collect()).collect();
        Self {
            nb: truth.neighbors(),
            desc,
            anc,
        }
    }

    fn is_valid(&self, i: usize, j: usize, z: &[bool]) -> bool {
        let d = z.len();
        if i == j || z[i] || z[j] {
            return false;
        }
        // nodes other than i on a directed path i -> ... -> j
        let on_causal: Vec<bool> = (0..d).map(|v| self.desc[i][v] && (v == j || self.anc[j][v])).collect();
        let forbidden = (0..d).any(|v| z[v] && (0..d).any(|c| on_causal[c] && (c == v || self.desc[c][v])));
        if forbidden {
            return false;
        }
        // Remaining paths are non-causal; they must be blocked once the first
        // edges of the causal paths are removed.
        let reach = self.nb.active_reach(i, z, |from, to| from == i && on_causal[to]);
        !reach[j]
    }
}

/// `true` if `z` is a valid adjustment set for the effect of `i` on `j` in `truth`.
pub fn is_valid_adjustment(truth: &Dag, i: usize, j: usize, z: &[usize]) -> bool {
    let d = truth.node_count();
    if i >= d || j >= d || z.iter().any(|&v| v >= d) {
        return false;
    }
    let mut mask = vec![false; d];
    for &v in z {
        mask[v] = true;
    }
    AdjustmentContext::new(truth).is_valid(i, j, &mask)
}

/// Structural intervention distance: ordered pairs `(i, j)` whose
/// interventional distribution is inferred wrongly when adjusting for the
/// estimated parents of `i`.
pub fn sid(truth: &Dag, estimate: &Digraph) -> Result<usize> {
    let d = truth.node_count();
    if estimate.node_count() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: estimate.node_count(),
        });
    }
    if !estimate.is_acyclic() {
        return Err(Error::CyclicGraph);
    }
    let ctx = AdjustmentContext::new(truth);
    let mut wrong = 0;
    for i in 0..d {
        let mut pa = vec![false; d];
        for p in estimate.parents(i) {
            pa[p] = true;
        }
        for j in (0..d).filter(|&j| j != i) {
            let correct = if pa[j] {
                !ctx.desc[i][j]
            } else {
                ctx.is_valid(i, j, &pa)
            };
            if !correct {
                wrong += 1;
            }
        }
    }
    Ok(wrong)
}

pub fn nsid<T: Scalar>(truth: &Dag, estimate: &Digraph) -> Result<T> {
    let d = truth.node_count();
    Ok(ratio_or(sid(truth, estimate)?, d * d.saturating_sub(1), T::zero()))
}

/// Fraction of true edges whose parent has strictly smaller sample variance
/// than the child. Differences within the scalar tie tolerance count as ties.
pub fn varsortability<T: Scalar>(truth: &Digraph, ds: &Dataset<T>) -> Result<T> {
    if ds.d() != truth.node_count() {
        return Err(Error::DimensionMismatch {
            expected: truth.node_count(),
            actual: ds.d(),
        });
    }
    let e = truth.edge_count();
    if e == 0 {
        return Err(Error::Undefined("varsortability of a graph without edges".into()));
    }
    let var = ds.column_variances();
    let sorted = truth
        .edges()
        .filter(|&(i, j)| {
            let scale = var[i].abs().max(var[j].abs());
            var[i] < var[j] && !crate::scalar::nearly_equal(var[i], var[j], scale)
        })
        .count();
    Ok(T::of_usize(sorted) / T::of_usize(e))
}

pub const METRIC_NAMES: [&str; 6] = ["tpr", "fpr", "nshd", "f1", "ncod", "nsid"];

/// The six normalized criteria in the fixed order `[TPR, FPR, nSHD, F1, nCOD, nSID]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector<T> {
    pub tpr: T,
    pub fpr: T,
    pub nshd: T,
    pub f1: T,
    pub ncod: T,
    pub nsid: T,
}

impl<T: Scalar> MetricVector<T> {
    pub fn from_array(a: [T; 6]) -> Self {
        Self {
            tpr: a[0],
            fpr: a[1],
            nshd: a[2],
            f1: a[3],
            ncod: a[4],
            nsid: a[5],
        }
    }

    pub fn to_array(&self) -> [T; 6] {
        [self.tpr, self.fpr, self.nshd, self.f1, self.ncod, self.nsid]
    }

    /// Checks every component lies in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in METRIC_NAMES.iter().zip(self.to_array()) {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::InvalidMetric {
                    name,
                    value: v.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Everything computed when scoring one estimate against one truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation<T> {
    pub counts: ConfusionCounts,
    pub shd: usize,
    pub cod: usize,
    pub sid: usize,
    pub metrics: MetricVector<T>,
}

/// Scores `estimate` against `truth`; COD uses the estimate's own topological order.
pub fn evaluate<T: Scalar>(truth: &Dag, estimate: &Digraph) -> Result<Evaluation<T>> {
    let order = order_from_estimate(estimate)?;
    evaluate_with_order(truth, estimate, &order)
}

pub fn evaluate_with_order<T: Scalar>(truth: &Dag, estimate: &Digraph, order: &NodeOrder) -> Result<Evaluation<T>> {
    let counts = confusion(truth, estimate)?;
    let cod_count = cod(truth, order)?;
    let sid_count = sid(truth, estimate)?;
    let d = truth.node_count();
    let metrics = MetricVector {
        tpr: counts.tpr(),
        fpr: counts.fpr(),
        nshd: counts.nshd(),
        f1: counts.f1(),
        ncod: ratio_or(cod_count, counts.t_true, T::zero()),
        nsid: ratio_or(sid_count, d * d.saturating_sub(1), T::zero()),
    };
    metrics.validate()?;
    Ok(Evaluation {
        counts,
        shd: counts.shd(),
        cod: cod_count,
        sid: sid_count,
        metrics,
    })
}
