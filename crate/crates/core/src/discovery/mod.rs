//! Reference structure learners sharing one result type.

mod notears;
mod regression;
mod sortnregress;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::graph::{Dag, Digraph, NodeOrder};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::scm::{Dataset, WeightedAdjacency};

pub use notears::{h_acyclicity, notears_linear, NoTearsParams};
pub use sortnregress::{
    r2_scores, r2_sort_order, r2_sortnregress, sortnregress, var_sort_order, var_sortnregress, Prune,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult<T> {
    /// Real-valued coefficients before pruning.
    pub w_est: WeightedAdjacency<T>,
    pub g_est: Dag,
    pub order: NodeOrder,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Binary graph of the off-diagonal entries with `|w| > tau`. May be cyclic.
pub fn threshold_prune<T: Scalar>(w: &Matrix<T>, tau: T) -> Result<Digraph> {
    if !(tau >= T::zero()) {
        return Err(invalid("pruning threshold must be non-negative"));
    }
    if !w.is_square() {
        return Err(invalid("weight matrix must be square"));
    }
    let d = w.nrows();
    let mut g = Digraph::empty(d);
    for i in 0..d {
        for j in 0..d {
            if i != j && w[(i, j)].abs() > tau {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(g)
}

/// Predicts no edges at all.
pub fn empty_baseline<T: Scalar>(ds: &Dataset<T>) -> DiscoveryResult<T> {
    let d = ds.d();
    DiscoveryResult {
        w_est: WeightedAdjacency::zeros(d),
        g_est: Dag::empty(d),
        order: NodeOrder::identity(d),
        diagnostics: BTreeMap::new(),
    }
}

/// Random DAG: a uniformly random order, and each forward pair an edge with
/// probability `p`.
pub fn fully_random_baseline<T: Scalar, R: Rng + ?Sized>(
    ds: &Dataset<T>,
    p: f64,
    rng: &mut R,
) -> Result<DiscoveryResult<T>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let d = ds.d();
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    let mut g = Digraph::empty(d);
    let mut w = WeightedAdjacency::zeros(d);
    for a in 0..d {
        for b in (a + 1)..d {
            if rng.random_bool(p) {
                g.add_edge(perm[a], perm[b])?;
                w.set(perm[a], perm[b], T::one());
            }
        }
    }
    Ok(DiscoveryResult {
        w_est: w,
        g_est: g.into_dag()?,
        order: NodeOrder::new(perm)?,
        diagnostics: BTreeMap::new(),
    })
}
