//! Independent reference implementations used by the integration and
//! acceptance tests. They share no code with the library beyond the graph
//! container.

#![allow(dead_code)]

use causalbench::{Dag, Digraph, Matrix};
use rand::Rng;

/// Every labelled DAG on `d` nodes, by filtering all off-diagonal patterns.
pub fn all_dags(d: usize) -> Vec<Dag> {
    let slots: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << slots.len()) {
        let mut g = Digraph::empty(d);
        let mut two_cycle = false;
        for (b, &(i, j)) in slots.iter().enumerate() {
            if mask >> b & 1 == 1 {
                if g.has_edge(j, i) {
                    two_cycle = true;
                    break;
                }
                g.add_edge(i, j).unwrap();
            }
        }
        if !two_cycle {
            if let Ok(dag) = g.into_dag() {
                out.push(dag);
            }
        }
    }
    out
}

pub fn random_dag<R: Rng>(rng: &mut R, d: usize, p: f64) -> Dag {
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            if rng.random_bool(p) {
                edges.push((perm[a], perm[b]));
            }
        }
    }
    Dag::new(d, &edges).unwrap()
}

fn is_descendant_or_self(g: &Digraph, from: usize, target: usize) -> bool {
    let mut stack = vec![from];
    let mut seen = vec![false; g.node_count()];
    while let Some(v) = stack.pop() {
        if v == target {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(g.children(v));
    }
    false
}

/// d-separation by listing every simple path of the skeleton and applying
/// the blocking rules to each interior node.
pub fn brute_d_separated(g: &Digraph, i: usize, j: usize, z: &[usize]) -> bool {
    let d = g.node_count();
    let mut paths = Vec::new();
    let mut path = vec![i];
    let mut on_path = vec![false; d];
    on_path[i] = true;
    fn walk(g: &Digraph, j: usize, path: &mut Vec<usize>, on_path: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == j {
            out.push(path.clone());
            return;
        }
        for w in 0..g.node_count() {
            if !on_path[w] && g.adjacent(v, w) {
                on_path[w] = true;
                path.push(w);
                walk(g, j, path, on_path, out);
                path.pop();
                on_path[w] = false;
            }
        }
    }
    walk(g, j, &mut path, &mut on_path, &mut paths);
    let active = |p: &Vec<usize>| {
        p.windows(3).all(|w| {
            let (a, v, b) = (w[0], w[1], w[2]);
            let collider = g.has_edge(a, v) && g.has_edge(b, v);
            if collider {
                z.iter().any(|&c| is_descendant_or_self(g, v, c))
            } else {
                !z.contains(&v)
            }
        })
    };
    !paths.iter().any(active)
}

/// Edge-coefficient matrix with magnitudes in `[0.5, 2]` and random signs on
/// the edges of `g`.
pub fn random_weights<R: Rng>(rng: &mut R, g: &Digraph) -> Matrix<f64> {
    let d = g.node_count();
    let mut b = Matrix::zeros(d, d);
    for (i, j) in g.edges() {
        let m: f64 = rng.random_range(0.5..2.0);
        b[(i, j)] = if rng.random_bool(0.5) { m } else { -m };
    }
    b
}

/// Population quantities of the linear SEM `X = X B + N`, `N ~ N(0, I)`.
pub struct LinearGaussian {
    /// `(I - B)^{-1}`: entry `(i, j)` is the total effect of `i` on `j`.
    pub total: Matrix<f64>,
    pub cov: Matrix<f64>,
}

impl LinearGaussian {
    pub fn new(b: &Matrix<f64>) -> Self {
        let d = b.nrows();
        let total = Matrix::<f64>::identity(d).sub(b).inverse().unwrap();
        let cov = total.transpose().matmul(&total);
        Self { total, cov }
    }

    /// Coefficient of `X_i` in the population regression of `X_j` on `{X_i} ∪ Z`.
    pub fn adjusted_coefficient(&self, i: usize, j: usize, z: &[usize]) -> f64 {
        let mut s = vec![i];
        s.extend_from_slice(z);
        let css = self.cov.select(&s, &s);
        let csj: Vec<f64> = s.iter().map(|&a| self.cov[(a, j)]).collect();
        css.solve(&csj).unwrap()[0]
    }
}

pub const ORACLE_TOL: f64 = 1e-8;

/// Whether adjusting for `z` identifies the effect of `i` on `j` under every
/// weight draw.
pub fn oracle_adjustment_ok(models: &[LinearGaussian], i: usize, j: usize, z: &[usize]) -> bool {
    if z.contains(&j) {
        return false;
    }
    models
        .iter()
        .all(|m| (m.adjusted_coefficient(i, j, z) - m.total[(i, j)]).abs() <= ORACLE_TOL)
}

/// SID through the linear-Gaussian oracle.
pub fn oracle_sid(models: &[LinearGaussian], estimate: &Digraph) -> usize {
    let d = estimate.node_count();
    let mut wrong = 0;
    for i in 0..d {
        let pa = estimate.parents(i);
        for j in 0..d {
            if i == j {
                continue;
            }
            let ok = if pa.contains(&j) {
                models.iter().all(|m| m.total[(i, j)].abs() <= ORACLE_TOL)
            } else {
                oracle_adjustment_ok(models, i, j, &pa)
            };
            if !ok {
                wrong += 1;
            }
        }
    }
    wrong
}

/// Subsets of `pool` as index lists.
pub fn subsets(pool: &[usize]) -> Vec<Vec<usize>> {
    (0u32..(1 << pool.len()))
        .map(|m| {
            pool.iter()
                .enumerate()
                .filter(|(b, _)| m >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}
