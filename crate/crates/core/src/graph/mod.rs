//! Signed symmetric digraphs.
//!
//! Every edge record stands for the symmetric pair `(i, j)` and `(j, i)`
//! and is stored once, canonically with `i < j`. Node ids are 1-based at
//! every public surface; dense matrices are indexed from zero.

mod cactus;
mod generate;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cactus::{
    find_generalized, validate_generalized, validate_sym_cactus, CactusDecomposition, Component,
    GeneralizedDecomposition, Rejection, Verdict,
};
pub use generate::{generate_generalized, generate_generalized_with, GeneratorOptions};
pub(crate) use io::canonical_json;
pub use io::{
    decomposition_from_json, decomposition_to_json, graph_from_json, graph_to_json, load_decomposition, load_graph,
    load_graph_document, GraphDocument,
};

/// 1-based node identifier.
pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node count must be positive, got {0}")]
    BadNodeCount(usize),
    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop on node {node}")]
    SelfLoop { node: NodeId },
    #[error("duplicate edge {i}-{j}")]
    DuplicateEdge { i: NodeId, j: NodeId },
    #[error("edge {i}-{j} ({sign}) weight {w0} outside [{lo}, {hi}]")]
    WeightOutOfBounds {
        i: NodeId,
        j: NodeId,
        sign: Sign,
        w0: f64,
        lo: f64,
        hi: f64,
    },
    #[error("bad control node {node}: {reason}")]
    BadControlNode { node: NodeId, reason: String },
    #[error("weight bounds must satisfy a-_lo < a-_hi < 0 < a+_lo < a+_hi, got {0:?}")]
    BadBounds(WeightBounds),
    #[error("{n} nodes cannot host {roots} cactus roots")]
    InfeasibleSize { n: usize, roots: usize },
    #[error("bad generator option: {0}")]
    BadGeneratorOption(String),
}

/// Excitatory (`Plus`) or inhibitory (`Minus`) connection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

/// Fixed-sign clip intervals for synaptic weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub a_minus_lo: f64,
    pub a_minus_hi: f64,
    pub a_plus_lo: f64,
    pub a_plus_hi: f64,
}

impl Default for WeightBounds {
    /// `[-1, -0.05]` for inhibitory and `[0.05, 1]` for excitatory edges.
    fn default() -> Self {
        WeightBounds {
            a_minus_lo: -1.0,
            a_minus_hi: -0.05,
            a_plus_lo: 0.05,
            a_plus_hi: 1.0,
        }
    }
}

impl WeightBounds {
    pub fn new(a_minus_lo: f64, a_minus_hi: f64, a_plus_lo: f64, a_plus_hi: f64) -> Result<Self, GraphError> {
        let b = WeightBounds {
            a_minus_lo,
            a_minus_hi,
            a_plus_lo,
            a_plus_hi,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let ordered = self.a_minus_lo < self.a_minus_hi
            && self.a_minus_hi < 0.0
            && 0.0 < self.a_plus_lo
            && self.a_plus_lo < self.a_plus_hi;
        let finite = [self.a_minus_lo, self.a_minus_hi, self.a_plus_lo, self.a_plus_hi]
            .iter()
            .all(|v| v.is_finite());
        if ordered && finite {
            Ok(())
        } else {
            Err(GraphError::BadBounds(*self))
        }
    }

    /// Closed interval `(lo, hi)` for a sign.
    pub fn interval(&self, sign: Sign) -> (f64, f64) {
        match sign {
            Sign::Plus => (self.a_plus_lo, self.a_plus_hi),
            Sign::Minus => (self.a_minus_lo, self.a_minus_hi),
        }
    }

    /// Largest admissible weight magnitude, `max(a+_hi, |a-_lo|)`.
    pub fn max_magnitude(&self) -> f64 {
        self.a_plus_hi.max(self.a_minus_lo.abs())
    }

    /// Weight an edge settles at with no activity: the bound nearest zero.
    pub fn resting(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.a_plus_lo,
            Sign::Minus => self.a_minus_hi,
        }
    }

    pub fn contains(&self, sign: Sign, w: f64) -> bool {
        let (lo, hi) = self.interval(sign);
        lo <= w && w <= hi
    }
}

/// Undirected edge record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: NodeId,
    pub j: NodeId,
    pub sign: Sign,
    pub w0: f64,
}

impl Edge {
    pub fn new(i: NodeId, j: NodeId, sign: Sign, w0: f64) -> Self {
        Edge { i, j, sign, w0 }
    }

    pub fn plus(i: NodeId, j: NodeId, w0: f64) -> Self {
        Edge::new(i, j, Sign::Plus, w0)
    }

    pub fn minus(i: NodeId, j: NodeId, w0: f64) -> Self {
        Edge::new(i, j, Sign::Minus, w0)
    }
}

/// Driver node `k` with its input gain `b_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlNode {
    pub node: NodeId,
    pub gain: f64,
}

impl ControlNode {
    pub fn new(node: NodeId, gain: f64) -> Self {
        ControlNode { node, gain }
    }

    pub fn unit(node: NodeId) -> Self {
        ControlNode { node, gain: 1.0 }
    }
}

/// Validated signed symmetric digraph with its driver nodes.
///
/// Immutable after construction. Edges are kept sorted by `(i, j)` with
/// `i < j`; that order is the canonical edge order used by weight CSVs and
/// the random weight draws in the control module.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedGraph {
    n: usize,
    edges: Vec<Edge>,
    control: Vec<ControlNode>,
    adjacency: Vec<Vec<usize>>,
}

/// Builds and validates a graph.
///
/// Records given as `(j, i)` with `j > i` are canonicalized. Weights are
/// checked against `bounds` for their sign.
pub fn build_graph(
    n: usize,
    edges: impl IntoIterator<Item = Edge>,
    control: impl IntoIterator<Item = ControlNode>,
    bounds: &WeightBounds,
) -> Result<SignedGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::BadNodeCount(n));
    }
    bounds.validate()?;
    let check_node = |node: NodeId| {
        if node == 0 || node > n {
            Err(GraphError::NodeOutOfRange { node, n })
        } else {
            Ok(())
        }
    };

    let mut canonical: BTreeMap<(NodeId, NodeId), Edge> = BTreeMap::new();
    for e in edges {
        check_node(e.i)?;
        check_node(e.j)?;
        if e.i == e.j {
            return Err(GraphError::SelfLoop { node: e.i });
        }
        let (i, j) = if e.i < e.j { (e.i, e.j) } else { (e.j, e.i) };
        if !bounds.contains(e.sign, e.w0) {
            let (lo, hi) = bounds.interval(e.sign);
            return Err(GraphError::WeightOutOfBounds {
                i,
                j,
                sign: e.sign,
                w0: e.w0,
                lo,
                hi,
            });
        }
        if canonical.insert((i, j), Edge { i, j, ..e }).is_some() {
            return Err(GraphError::DuplicateEdge { i, j });
        }
    }

    let control: Vec<ControlNode> = control.into_iter().collect();
    if control.is_empty() {
        return Err(GraphError::BadControlNode {
            node: 0,
            reason: "at least one control node is required".into(),
        });
    }
    for (idx, c) in control.iter().enumerate() {
        if c.node == 0 || c.node > n {
            return Err(GraphError::BadControlNode {
                node: c.node,
                reason: format!("out of range 1..={n}"),
            });
        }
        if c.gain == 0.0 || !c.gain.is_finite() {
            return Err(GraphError::BadControlNode {
                node: c.node,
                reason: format!("gain must be finite and nonzero, got {}", c.gain),
            });
        }
        if control[..idx].iter().any(|o| o.node == c.node) {
            return Err(GraphError::BadControlNode {
                node: c.node,
                reason: "listed twice".into(),
            });
        }
    }

    let edges: Vec<Edge> = canonical.into_values().collect();
    let mut adjacency = vec![Vec::new(); n];
    for e in &edges {
        adjacency[e.i - 1].push(e.j - 1);
        adjacency[e.j - 1].push(e.i - 1);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Ok(SignedGraph {
        n,
        edges,
        control,
        adjacency,
    })
}

impl SignedGraph {
    /// Node count `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge records in canonical order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn control_nodes(&self) -> &[ControlNode] {
        &self.control
    }

    pub fn edge(&self, i: NodeId, j: NodeId) -> Option<&Edge> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&key))
            .ok()
            .map(|idx| &self.edges[idx])
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.edge(i, j).is_some()
    }

    /// Neighbors of `node`, 1-based and ascending.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[node - 1].iter().map(|&k| k + 1)
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node - 1].len()
    }

    /// `d_max`: the largest number of edge records incident to one node.
    pub fn max_out_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Dense symmetric matrix of the initial weights `w0`.
    pub fn initial_weights(&self) -> DMatrix<f64> {
        self.weight_matrix(self.edges.iter().map(|e| e.w0))
    }

    /// Dense symmetric matrix placing `values` on the edges in canonical order.
    ///
    /// Panics if `values` yields fewer items than there are edges.
    pub fn weight_matrix(&self, values: impl IntoIterator<Item = f64>) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        let mut values = values.into_iter();
        for e in &self.edges {
            let w = values.next().expect("one weight per edge");
            a[(e.i - 1, e.j - 1)] = w;
            a[(e.j - 1, e.i - 1)] = w;
        }
        a
    }

    /// Edge weights of a dense matrix, read off in canonical order.
    pub fn edge_values(&self, a: &DMatrix<f64>) -> Vec<f64> {
        self.edges.iter().map(|e| a[(e.i - 1, e.j - 1)]).collect()
    }

    /// Input matrix `B` (`N x K`), column `k` equal to `b_k e_{node_k}`.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.control.len());
        for (k, c) in self.control.iter().enumerate() {
            b[(c.node - 1, k)] = c.gain;
        }
        b
    }

    /// `B u` without materializing `B`.
    pub fn apply_input(&self, u: &DVector<f64>, out: &mut DVector<f64>) {
        out.fill(0.0);
        for (c, uk) in self.control.iter().zip(u.iter()) {
            out[c.node - 1] += c.gain * uk;
        }
    }

    /// Same graph with one edge removed.
    pub fn without_edge(&self, i: NodeId, j: NodeId) -> SignedGraph {
        let key = if i < j { (i, j) } else { (j, i) };
        let edges: Vec<Edge> = self.edges.iter().copied().filter(|e| (e.i, e.j) != key).collect();
        Self::rebuild(self.n, edges, self.control.clone())
    }

    /// Same graph with a different driver set.
    pub fn with_control(&self, control: Vec<ControlNode>) -> Result<SignedGraph, GraphError> {
        if control.is_empty() {
            return Err(GraphError::BadControlNode {
                node: 0,
                reason: "at least one control node is required".into(),
            });
        }
        for c in &control {
            if c.node == 0 || c.node > self.n {
                return Err(GraphError::NodeOutOfRange {
                    node: c.node,
                    n: self.n,
                });
            }
        }
        Ok(Self::rebuild(self.n, self.edges.clone(), control))
    }

    /// Relabels nodes: old node `v` becomes `perm[v - 1]`.
    ///
    /// Panics if `perm` is not a permutation of `1..=n`.
    pub fn relabel(&self, perm: &[NodeId]) -> SignedGraph {
        assert_eq!(perm.len(), self.n, "permutation length");
        let mut seen = vec![false; self.n];
        for &p in perm {
            assert!(p >= 1 && p <= self.n && !seen[p - 1], "not a permutation");
            seen[p - 1] = true;
        }
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (perm[e.i - 1], perm[e.j - 1]);
                Edge::new(a.min(b), a.max(b), e.sign, e.w0)
            })
            .collect();
        let control = self
            .control
            .iter()
            .map(|c| ControlNode::new(perm[c.node - 1], c.gain))
            .collect();
        Self::rebuild(self.n, edges, control)
    }

    // Skips bound checks: the records came from an already validated graph.
    fn rebuild(n: usize, mut edges: Vec<Edge>, control: Vec<ControlNode>) -> SignedGraph {
        edges.sort_by_key(|e| (e.i, e.j));
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            adjacency[e.i - 1].push(e.j - 1);
            adjacency[e.j - 1].push(e.i - 1);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        SignedGraph {
            n,
            edges,
            control,
            adjacency,
        }
    }

    /// Every node reachable from some control node.
    pub fn is_input_accessible(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack: Vec<usize> = self.control.iter().map(|c| c.node - 1).collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// No dilation in `[A | B]`: every row can be matched to a distinct
    /// structurally nonzero column (a neighbor, or an input column for a
    /// driver node).
    ///
    /// Together with [`is_input_accessible`](Self::is_input_accessible) this
    /// is the classical graph condition for structural controllability.
    pub fn is_dilation_free(&self) -> bool {
        let inputs: Vec<usize> = self.control.iter().map(|c| c.node - 1).collect();
        has_row_matching(self.n, &self.adjacency, &inputs)
    }
}

/// Kuhn's augmenting-path matching of rows `0..n` into columns
/// `0..n` (neighbors) plus one extra column per entry of `inputs`.
pub(crate) fn has_row_matching(n: usize, adjacency: &[Vec<usize>], inputs: &[usize]) -> bool {
    let columns = n + inputs.len();
    let mut row_cols: Vec<Vec<usize>> = adjacency.to_vec();
    for (k, &row) in inputs.iter().enumerate() {
        row_cols[row].push(n + k);
    }
    let mut owner: Vec<Option<usize>> = vec![None; columns];

    fn augment(row: usize, row_cols: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &c in &row_cols[row] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            match owner[c] {
                None => {
                    owner[c] = Some(row);
                    return true;
                }
                Some(other) => {
                    if augment(other, row_cols, owner, seen) {
                        owner[c] = Some(row);
                        return true;
                    }
                }
            }
        }
        false
    }

    (0..n).all(|row| {
        let mut seen = vec![false; columns];
        augment(row, &row_cols, &mut owner, &mut seen)
    })
}
