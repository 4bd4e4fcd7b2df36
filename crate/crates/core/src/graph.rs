//! Directed graphs, random DAG samplers and graphical queries.
//!
//! Nodes are `0..d` internally and labelled `X1..Xd` in files.

use std::collections::VecDeque;
use std::ops::Deref;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Directed graph over `d` nodes stored as a dense boolean adjacency.
///
/// May contain cycles; see [`Dag`] for the checked acyclic wrapper.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    d: usize,
    adj: Vec<bool>,
}

impl Digraph {
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            adj: vec![false; d * d],
        }
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(d);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.d || j >= self.d {
            return Err(invalid(format!("edge ({i}, {j}) out of range for d = {}", self.d)));
        }
        if i == j {
            return Err(invalid(format!("self-loop on node {i}")));
        }
        self.adj[i * self.d + j] = true;
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.adj[i * self.d + j] = false;
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.d + j]
    }

    /// `true` if an edge joins `i` and `j` in either direction.
    #[inline]
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.has_edge(i, j) || self.has_edge(j, i)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.d).flat_map(move |i| (0..self.d).filter_map(move |j| self.has_edge(i, j).then_some((i, j))))
    }

    pub fn parents(&self, j: usize) -> Vec<usize> {
        (0..self.d).filter(|&i| self.has_edge(i, j)).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.d).filter(|&j| self.has_edge(i, j)).collect()
    }

    /// Kahn's algorithm; among available nodes the smallest index goes first.
    pub fn topological_order(&self) -> Result<NodeOrder> {
        let d = self.d;
        let mut indegree: Vec<usize> = (0..d).map(|j| self.parents(j).len()).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            (0..d).filter(|&j| indegree[j] == 0).map(std::cmp::Reverse).collect();
        let mut perm = Vec::with_capacity(d);
        while let Some(std::cmp::Reverse(i)) = ready.pop() {
            perm.push(i);
            for j in self.children(i) {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(std::cmp::Reverse(j));
                }
            }
        }
        if perm.len() != d {
            return Err(Error::CyclicGraph);
        }
        Ok(NodeOrder { perm })
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    pub fn into_dag(self) -> Result<Dag> {
        Dag::try_from(self)
    }

    /// Relabels nodes so that old node `i` becomes `relabel[i]`.
    pub fn permuted(&self, relabel: &[usize]) -> Self {
        let mut g = Self::empty(self.d);
        for (i, j) in self.edges() {
            g.adj[relabel[i] * self.d + relabel[j]] = true;
        }
        g
    }
}

/// Directed acyclic graph. Acyclicity is checked on construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag(Digraph);

impl Dag {
    pub fn new(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Digraph::from_edges(d, edges)?.into_dag()
    }

    pub fn empty(d: usize) -> Self {
        Self(Digraph::empty(d))
    }

    pub fn as_digraph(&self) -> &Digraph {
        &self.0
    }

    pub fn into_digraph(self) -> Digraph {
        self.0
    }

    pub fn topological_order(&self) -> NodeOrder {
        self.0.topological_order().expect("Dag is acyclic by construction")
    }

    pub fn permuted(&self, relabel: &[usize]) -> Self {
        Self(self.0.permuted(relabel))
    }

    /// Nodes reachable from `i` by a directed path, excluding `i`.
    pub fn descendants(&self, i: usize) -> Vec<usize> {
        let mask = self.descendant_mask(i);
        (0..self.d).filter(|&j| mask[j]).collect()
    }

    pub fn descendant_mask(&self, i: usize) -> Vec<bool> {
        let mut seen = vec![false; self.d];
        let mut stack = self.children(i);
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(self.children(v));
            }
        }
        seen
    }

    /// d-separation of `i` and `j` given `z`.
    pub fn is_d_separated(&self, i: usize, j: usize, z: &[usize]) -> Result<bool> {
        let d = self.d;
        if i >= d || j >= d || z.iter().any(|&v| v >= d) {
            return Err(invalid("node index out of range"));
        }
        if i == j || z.contains(&i) || z.contains(&j) {
            return Err(invalid("d-separation query requires distinct i, j outside Z"));
        }
        let mut zmask = vec![false; d];
        for &v in z {
            zmask[v] = true;
        }
        Ok(!self.neighbors().active_reach(i, &zmask, |_, _| false)[j])
    }

    pub fn neighbors(&self) -> Neighbors {
        Neighbors {
            parents: (0..self.d).map(|v| self.parents(v)).collect(),
            children: (0..self.d).map(|v| self.children(v)).collect(),
        }
    }
}

/// Adjacency lists of a DAG, for repeated graph traversals.
#[derive(Debug, Clone)]
pub struct Neighbors {
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl Neighbors {
    /// Ancestors of the marked set, including the set itself, ignoring edges
    /// for which `skip(from, to)` holds.
    pub fn ancestor_closure(&self, marked: &[bool], skip: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let mut seen = marked.to_vec();
        let mut stack: Vec<usize> = (0..marked.len()).filter(|&v| marked[v]).collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !seen[p] && !skip(p, v) {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Bayes-ball reachability: nodes joined to `source` by a trail that is
    /// active given `z`, in the graph without the edges selected by `skip`.
    pub fn active_reach(&self, source: usize, z: &[bool], skip: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        const UP: usize = 0;
        const DOWN: usize = 1;
        let d = self.parents.len();
        let anc_z = self.ancestor_closure(z, &skip);
        let mut visited = vec![[false; 2]; d];
        let mut reachable = vec![false; d];
        let mut queue = VecDeque::from([(source, UP)]);
        while let Some((v, dir)) = queue.pop_front() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !z[v] {
                reachable[v] = true;
            }
            let up_moves = |queue: &mut VecDeque<(usize, usize)>| {
                for &p in &self.parents[v] {
                    if !skip(p, v) {
                        queue.push_back((p, UP));
                    }
                }
            };
            let down_moves = |queue: &mut VecDeque<(usize, usize)>| {
                for &c in &self.children[v] {
                    if !skip(v, c) {
                        queue.push_back((c, DOWN));
                    }
                }
            };
            if dir == UP {
                if !z[v] {
                    up_moves(&mut queue);
                    down_moves(&mut queue);
                }
            } else {
                if !z[v] {
                    down_moves(&mut queue);
                }
                if anc_z[v] {
                    up_moves(&mut queue);
                }
            }
        }
        reachable[source] = false;
        reachable
    }
}

impl Deref for Dag {
    type Target = Digraph;

    fn deref(&self) -> &Digraph {
        &self.0
    }
}

impl TryFrom<Digraph> for Dag {
    type Error = Error;

    fn try_from(g: Digraph) -> Result<Self> {
        g.topological_order()?;
        Ok(Self(g))
    }
}

/// A permutation of the nodes; `perm[k]` is the node at position `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeOrder {
    perm: Vec<usize>,
}

impl NodeOrder {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &v in &perm {
            if v >= perm.len() || seen[v] {
                return Err(invalid("node order must be a permutation of 0..d"));
            }
            seen[v] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(d: usize) -> Self {
        Self { perm: (0..d).collect() }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Inverse permutation: `positions()[v]` is the position of node `v`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.perm.len()];
        for (k, &v) in self.perm.iter().enumerate() {
            pos[v] = k;
        }
        pos
    }

    /// `true` if every edge of `g` points forward in this order.
    pub fn is_linear_extension_of(&self, g: &Digraph) -> bool {
        let pos = self.positions();
        g.edges().all(|(i, j)| pos[i] < pos[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphKind {
    #[serde(rename = "ER")]
    Er,
    #[serde(rename = "SF")]
    Sf,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Er => "ER",
            Self::Sf => "SF",
        })
    }
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ER" => Ok(Self::Er),
            "SF" => Ok(Self::Sf),
            other => Err(Error::Parse(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// Density parameter of a random graph family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GraphModel {
    /// Erdős–Rényi with per-pair edge probability.
    #[serde(rename = "ER")]
    Er { p: f64 },
    /// Scale-free with `k` attachments per new node.
    #[serde(rename = "SF")]
    Sf { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub d: usize,
    pub model: GraphModel,
}

impl GraphSpec {
    /// Builds the spec for `kind`, converting an ER probability into the
    /// matched SF attachment count.
    pub fn matched(d: usize, kind: GraphKind, p: f64) -> Self {
        let model = match kind {
            GraphKind::Er => GraphModel::Er { p },
            GraphKind::Sf => GraphModel::Sf { k: er_to_sf_k(d, p) },
        };
        Self { d, model }
    }

    pub fn kind(&self) -> GraphKind {
        match self.model {
            GraphModel::Er { .. } => GraphKind::Er,
            GraphModel::Sf { .. } => GraphKind::Sf,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Dag> {
        match self.model {
            GraphModel::Er { p } => sample_er_dag(self.d, p, rng),
            GraphModel::Sf { k } => sample_sf_dag(self.d, k, rng),
        }
    }
}

/// Erdős–Rényi DAG: each unordered pair is an edge with probability `p`,
/// oriented along a uniformly random node permutation.
pub fn sample_er_dag<R: Rng + ?Sized>(d: usize, p: f64, rng: &mut R) -> Result<Dag> {
    if d == 0 {
        return Err(invalid("graph needs at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    let mut g = Digraph::empty(d);
    for a in 0..d {
        for b in (a + 1)..d {
            if rng.random_bool(p) {
                g.add_edge(perm[a], perm[b])?;
            }
        }
    }
    Ok(Dag(g))
}

/// Scale-free DAG by preferential attachment.
///
/// Growth starts from `k` isolated seed nodes; every later node draws `k`
/// distinct targets among the existing nodes with probability proportional to
/// their current degree (uniform while all candidates have degree zero), and
/// edges point from the existing node to the new one. The result has exactly
/// `k * (d - k)` edges. Node labels are shuffled afterwards so that index order
/// carries no causal information.
pub fn sample_sf_dag<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<Dag> {
    if k == 0 || k >= d {
        return Err(invalid(format!(
            "attachment count k = {k} must satisfy 1 <= k < d = {d}"
        )));
    }
    let mut g = Digraph::empty(d);
    let mut degree = vec![0usize; d];
    for new in k..d {
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        for _ in 0..k {
            let candidates: Vec<usize> = (0..new).filter(|v| !chosen.contains(v)).collect();
            let total: usize = candidates.iter().map(|&v| degree[v]).sum();
            let pick = if total == 0 {
                candidates[rng.random_range(0..candidates.len())]
            } else {
                let mut ticket = rng.random_range(0..total);
                let mut pick = candidates[candidates.len() - 1];
                for &v in &candidates {
                    if ticket < degree[v] {
                        pick = v;
                        break;
                    }
                    ticket -= degree[v];
                }
                pick
            };
            chosen.push(pick);
        }
        for &src in &chosen {
            g.add_edge(src, new)?;
            degree[src] += 1;
        }
        degree[new] += k;
    }
    let mut relabel: Vec<usize> = (0..d).collect();
    relabel.shuffle(rng);
    Ok(Dag(g.permuted(&relabel)))
}

/// SF attachment count giving the same expected edge count as ER(d, p):
/// `max(1, round(p * (d - 1) / 2))`.
pub fn er_to_sf_k(d: usize, p: f64) -> usize {
    let k = (p * (d as f64 - 1.0) / 2.0).round();
    (k as usize).max(1)
}

/// Expected ER edge count `p * d * (d - 1) / 2`.
pub fn er_expected_edges(d: usize, p: f64) -> f64 {
    p * (d * d.saturating_sub(1)) as f64 / 2.0
}

pub fn node_label(i: usize) -> String {
    format!("X{}", i + 1)
}

pub fn parse_node_label(s: &str) -> Result<usize> {
    s.trim()
        .strip_prefix('X')
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .map(|n| n - 1)
        .ok_or_else(|| Error::Parse(format!("bad node label `{s}`")))
}
