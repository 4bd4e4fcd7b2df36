//! Order-then-regress learners: sort variables by marginal variance or by R²,
//! then regress each on its predecessors with lasso-BIC pruning.

use std::collections::BTreeMap;

use crate::discovery::regression::{lasso_bic_select, r_squared};
use crate::discovery::DiscoveryResult;
use crate::error::Result;
use crate::graph::{Digraph, NodeOrder};
use crate::scalar::{argsort_with_ties, Scalar};
use crate::scm::{Dataset, WeightedAdjacency};

/// Nodes in ascending sample variance; ties by index.
pub fn var_sort_order<T: Scalar>(ds: &Dataset<T>) -> NodeOrder {
    NodeOrder::new(argsort_with_ties(&ds.column_variances())).expect("argsort is a permutation")
}

/// R² of every variable regressed on all others.
pub fn r2_scores<T: Scalar>(ds: &Dataset<T>) -> Vec<T> {
    let cov = ds.covariance();
    let d = ds.d();
    (0..d)
        .map(|i| {
            let others: Vec<usize> = (0..d).filter(|&j| j != i).collect();
            r_squared(&cov, &others, i)
        })
        .collect()
}

/// Nodes in ascending R²; ties by index.
pub fn r2_sort_order<T: Scalar>(ds: &Dataset<T>) -> NodeOrder {
    NodeOrder::new(argsort_with_ties(&r2_scores(ds))).expect("argsort is a permutation")
}

/// Edge pruning strategy after ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prune {
    #[default]
    LassoBic,
}

/// Regresses each node on its predecessors in `order`.
pub fn sortnregress<T: Scalar>(ds: &Dataset<T>, order: &NodeOrder, prune: Prune) -> Result<DiscoveryResult<T>> {
    let d = ds.d();
    if order.len() != d {
        return Err(crate::error::Error::DimensionMismatch {
            expected: d,
            actual: order.len(),
        });
    }
    let cov = ds.covariance();
    let mut w = WeightedAdjacency::zeros(d);
    let mut g = Digraph::empty(d);
    let perm = order.as_slice();
    for (k, &node) in perm.iter().enumerate() {
        let preds = &perm[..k];
        if preds.is_empty() {
            continue;
        }
        let (support, beta) = match prune {
            Prune::LassoBic => lasso_bic_select(&cov, preds, node, ds.n()),
        };
        for (&p, &b) in support.iter().zip(&beta) {
            if b != T::zero() {
                w.set(p, node, b);
                g.add_edge(p, node)?;
            }
        }
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("edges".to_string(), g.edge_count() as f64);
    Ok(DiscoveryResult {
        w_est: w,
        g_est: g.into_dag()?,
        order: order.clone(),
        diagnostics,
    })
}

pub fn var_sortnregress<T: Scalar>(ds: &Dataset<T>) -> Result<DiscoveryResult<T>> {
    sortnregress(ds, &var_sort_order(ds), Prune::LassoBic)
}

pub fn r2_sortnregress<T: Scalar>(ds: &Dataset<T>) -> Result<DiscoveryResult<T>> {
    sortnregress(ds, &r2_sort_order(ds), Prune::LassoBic)
}
