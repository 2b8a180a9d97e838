//! Sym-cactus certificates and their validators.
//!
//! A sym-cactus is an ordered list of vertex-disjoint components, each a
//! symmetric cycle (length >= 3) or a single node. Every component after
//! the first hangs off the union of the earlier ones by exactly one edge
//! pair. A generalized structure is a node-disjoint family of such cacti,
//! one per root, spanning the graph, plus any leftover edges.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NodeId, SignedGraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Singleton(NodeId),
    /// Nodes in cycle order; the closing edge from last to first is implied.
    Cycle(Vec<NodeId>),
}

impl Component {
    pub fn nodes(&self) -> &[NodeId] {
        match self {
            Component::Singleton(v) => std::slice::from_ref(v),
            Component::Cycle(vs) => vs,
        }
    }

    /// Consecutive pairs including the wraparound; empty for singletons.
    pub fn cycle_edges(&self) -> Vec<(NodeId, NodeId)> {
        match self {
            Component::Singleton(_) => Vec::new(),
            Component::Cycle(vs) => (0..vs.len()).map(|k| (vs[k], vs[(k + 1) % vs.len()])).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CactusDecomposition {
    pub root: NodeId,
    pub components: Vec<Component>,
    /// `attachments[k]` hangs `components[k + 1]` off the earlier ones as
    /// `(d1, d2)`: `d1` inside the new component, `d2` already placed.
    pub attachments: Vec<(NodeId, NodeId)>,
}

impl CactusDecomposition {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.components.iter().flat_map(|c| c.nodes().iter().copied())
    }

    /// Canonical `(min, max)` pairs of every edge the certificate uses.
    pub fn edge_set(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.components
            .iter()
            .flat_map(Component::cycle_edges)
            .chain(self.attachments.iter().copied())
            .map(canonical)
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizedDecomposition {
    pub cacti: Vec<CactusDecomposition>,
    #[serde(default)]
    pub extra_edges: Vec<(NodeId, NodeId)>,
}

/// Why a certificate was rejected. Validators report the first failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    EmptyDecomposition,
    UnknownNode { node: NodeId },
    DisjointnessViolated { node: NodeId },
    CycleTooShort { component: usize, len: usize },
    MissingCycleEdge { component: usize, i: NodeId, j: NodeId },
    RootNotInFirstComponent { root: NodeId },
    MissingAttachment { component: usize },
    SurplusAttachment { count: usize, expected: usize },
    AttachmentNotInGraph { component: usize, i: NodeId, j: NodeId },
    AttachmentMisplaced { component: usize, d1: NodeId, d2: NodeId },
    Cactus { cactus: usize, cause: Box<Rejection> },
    RootNotControlNode { root: NodeId },
    DuplicateRoot { root: NodeId },
    CactiOverlap { node: NodeId },
    NotSpanning { missing: Vec<NodeId> },
    ExtraEdgeNotInGraph { i: NodeId, j: NodeId },
    UnaccountedEdge { i: NodeId, j: NodeId },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::EmptyDecomposition => write!(f, "decomposition has no components"),
            Rejection::UnknownNode { node } => write!(f, "node {node} is not in the graph"),
            Rejection::DisjointnessViolated { node } => write!(f, "node {node} appears in more than one place"),
            Rejection::CycleTooShort { component, len } => {
                write!(f, "component {component} is a cycle of length {len} < 3")
            }
            Rejection::MissingCycleEdge { component, i, j } => {
                write!(f, "cycle edge {i}-{j} of component {component} is not in the graph")
            }
            Rejection::RootNotInFirstComponent { root } => write!(f, "root {root} is not in the first component"),
            Rejection::MissingAttachment { component } => write!(f, "component {component} has no attachment edge"),
            Rejection::SurplusAttachment { count, expected } => {
                write!(f, "{count} attachments given, {expected} expected")
            }
            Rejection::AttachmentNotInGraph { component, i, j } => {
                write!(f, "attachment {i}-{j} of component {component} is not in the graph")
            }
            Rejection::AttachmentMisplaced { component, d1, d2 } => write!(
                f,
                "attachment ({d1}, {d2}) of component {component} must join it to an earlier component"
            ),
            Rejection::Cactus { cactus, cause } => write!(f, "cactus {cactus}: {cause}"),
            Rejection::RootNotControlNode { root } => write!(f, "root {root} is not a control node"),
            Rejection::DuplicateRoot { root } => write!(f, "root {root} roots more than one cactus"),
            Rejection::CactiOverlap { node } => write!(f, "node {node} belongs to more than one cactus"),
            Rejection::NotSpanning { missing } => write!(f, "nodes {missing:?} are not covered"),
            Rejection::ExtraEdgeNotInGraph { i, j } => write!(f, "extra edge {i}-{j} is not in the graph"),
            Rejection::UnaccountedEdge { i, j } => {
                write!(f, "edge {i}-{j} is neither in a cactus nor listed as extra")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Verdict::Accept => None,
            Verdict::Reject(r) => Some(r),
        }
    }
}

fn canonical((a, b): (NodeId, NodeId)) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

macro_rules! reject {
    ($r:expr) => {
        return Verdict::Reject($r)
    };
}

/// Checks a single sym-cactus certificate against `g`.
///
/// Components are numbered from 1 in rejections.
pub fn validate_sym_cactus(g: &SignedGraph, d: &CactusDecomposition) -> Verdict {
    if d.components.is_empty() {
        reject!(Rejection::EmptyDecomposition);
    }
    for v in d.nodes().chain([d.root]) {
        if v == 0 || v > g.n() {
            reject!(Rejection::UnknownNode { node: v });
        }
    }

    let mut seen = HashSet::new();
    for v in d.nodes() {
        if !seen.insert(v) {
            reject!(Rejection::DisjointnessViolated { node: v });
        }
    }

    for (idx, c) in d.components.iter().enumerate() {
        if let Component::Cycle(vs) = c {
            if vs.len() < 3 {
                reject!(Rejection::CycleTooShort {
                    component: idx + 1,
                    len: vs.len()
                });
            }
        }
        for (i, j) in c.cycle_edges() {
            if !g.has_edge(i, j) {
                reject!(Rejection::MissingCycleEdge {
                    component: idx + 1,
                    i,
                    j
                });
            }
        }
    }

    if !d.components[0].nodes().contains(&d.root) {
        reject!(Rejection::RootNotInFirstComponent { root: d.root });
    }

    let expected = d.components.len() - 1;
    if d.attachments.len() < expected {
        reject!(Rejection::MissingAttachment {
            component: d.attachments.len() + 2
        });
    }
    if d.attachments.len() > expected {
        reject!(Rejection::SurplusAttachment {
            count: d.attachments.len(),
            expected
        });
    }

    let mut placed: HashSet<NodeId> = d.components[0].nodes().iter().copied().collect();
    for (k, &(d1, d2)) in d.attachments.iter().enumerate() {
        let component = k + 2;
        let current = &d.components[k + 1];
        if !current.nodes().contains(&d1) || !placed.contains(&d2) {
            reject!(Rejection::AttachmentMisplaced { component, d1, d2 });
        }
        if !g.has_edge(d1, d2) {
            reject!(Rejection::AttachmentNotInGraph {
                component,
                i: d1,
                j: d2
            });
        }
        placed.extend(current.nodes().iter().copied());
    }
    Verdict::Accept
}

/// Checks a generalized sym-cactus certificate against `g`.
///
/// Any edge of `g` outside the cacti must be listed in `extra_edges`; extra
/// edges may join two cacti or chord a single one.
pub fn validate_generalized(g: &SignedGraph, gd: &GeneralizedDecomposition) -> Verdict {
    if gd.cacti.is_empty() {
        reject!(Rejection::EmptyDecomposition);
    }
    let mut roots = HashSet::new();
    for c in &gd.cacti {
        if !g.control_nodes().iter().any(|k| k.node == c.root) {
            reject!(Rejection::RootNotControlNode { root: c.root });
        }
        if !roots.insert(c.root) {
            reject!(Rejection::DuplicateRoot { root: c.root });
        }
    }
    for (idx, c) in gd.cacti.iter().enumerate() {
        if let Verdict::Reject(reason) = validate_sym_cactus(g, c) {
            reject!(Rejection::Cactus {
                cactus: idx + 1,
                cause: Box::new(reason)
            });
        }
    }

    let mut covered = vec![false; g.n()];
    for c in &gd.cacti {
        for v in c.nodes() {
            if covered[v - 1] {
                reject!(Rejection::CactiOverlap { node: v });
            }
            covered[v - 1] = true;
        }
    }
    let missing: Vec<NodeId> = (1..=g.n()).filter(|v| !covered[v - 1]).collect();
    if !missing.is_empty() {
        reject!(Rejection::NotSpanning { missing });
    }

    let mut accounted: BTreeSet<(NodeId, NodeId)> = gd.cacti.iter().flat_map(|c| c.edge_set()).collect();
    for &(i, j) in &gd.extra_edges {
        if i == 0 || j == 0 || i > g.n() || j > g.n() || !g.has_edge(i, j) {
            reject!(Rejection::ExtraEdgeNotInGraph { i, j });
        }
        accounted.insert(canonical((i, j)));
    }
    for e in g.edges() {
        if !accounted.contains(&(e.i, e.j)) {
            reject!(Rejection::UnaccountedEdge { i: e.i, j: e.j });
        }
    }
    Verdict::Accept
}

/// Finds a generalized sym-cactus certificate, if one exists.
///
/// With singleton components allowed, a certificate exists exactly when
/// every node is reachable from some control node; a multi-source
/// breadth-first forest of singletons is then one. Control nodes reached
/// from an earlier root are not used as roots. The result is a
/// Definition-level certificate and says nothing about dilations; see
/// [`SignedGraph::is_dilation_free`].
pub fn find_generalized(g: &SignedGraph) -> Option<GeneralizedDecomposition> {
    let n = g.n();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut cacti: Vec<CactusDecomposition> = Vec::new();
    let mut queue = VecDeque::new();
    for c in g.control_nodes() {
        if owner[c.node - 1].is_none() {
            owner[c.node - 1] = Some(cacti.len());
            cacti.push(CactusDecomposition {
                root: c.node,
                components: vec![Component::Singleton(c.node)],
                attachments: Vec::new(),
            });
            queue.push_back(c.node);
        }
    }
    while let Some(v) = queue.pop_front() {
        let tree = owner[v - 1].expect("queued nodes are owned");
        for w in g.neighbors(v) {
            if owner[w - 1].is_none() {
                owner[w - 1] = Some(tree);
                cacti[tree].components.push(Component::Singleton(w));
                cacti[tree].attachments.push((w, v));
                queue.push_back(w);
            }
        }
    }
    if owner.iter().any(Option::is_none) {
        return None;
    }
    let used: BTreeSet<(NodeId, NodeId)> = cacti.iter().flat_map(|c| c.edge_set()).collect();
    let extra_edges = g
        .edges()
        .iter()
        .map(|e| (e.i, e.j))
        .filter(|pair| !used.contains(pair))
        .collect();
    Some(GeneralizedDecomposition { cacti, extra_edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, ControlNode, Edge, WeightBounds};

    fn four_node() -> SignedGraph {
        build_graph(
            4,
            [
                Edge::plus(1, 2, 0.5),
                Edge::plus(2, 3, 0.5),
                Edge::minus(1, 3, -0.5),
                Edge::plus(3, 4, 0.5),
            ],
            [ControlNode::unit(1)],
            &WeightBounds::default(),
        )
        .unwrap()
    }

    fn four_node_cert() -> CactusDecomposition {
        CactusDecomposition {
            root: 1,
            components: vec![Component::Cycle(vec![1, 2, 3]), Component::Singleton(4)],
            attachments: vec![(4, 3)],
        }
    }

    fn example_graph(extra: bool) -> SignedGraph {
        let b = WeightBounds::new(-3.0, -0.05, 0.05, 3.0).unwrap();
        let mut edges = vec![
            Edge::plus(1, 2, 2.0),
            Edge::plus(3, 4, 1.0),
            Edge::plus(3, 5, 2.0),
            Edge::plus(4, 5, 1.0),
        ];
        if extra {
            edges.push(Edge::minus(2, 4, -0.5));
        }
        build_graph(5, edges, [ControlNode::unit(1), ControlNode::unit(3)], &b).unwrap()
    }

    fn example_cert(extra: bool) -> GeneralizedDecomposition {
        GeneralizedDecomposition {
            cacti: vec![
                CactusDecomposition {
                    root: 1,
                    components: vec![Component::Singleton(1), Component::Singleton(2)],
                    attachments: vec![(2, 1)],
                },
                CactusDecomposition {
                    root: 3,
                    components: vec![Component::Cycle(vec![3, 4, 5])],
                    attachments: vec![],
                },
            ],
            extra_edges: if extra { vec![(2, 4)] } else { vec![] },
        }
    }

    #[test]
    fn accepts_cycle_with_pendant() {
        assert_eq!(validate_sym_cactus(&four_node(), &four_node_cert()), Verdict::Accept);
    }

    #[test]
    fn rejects_shared_node() {
        let d = CactusDecomposition {
            root: 1,
            components: vec![Component::Cycle(vec![1, 2, 3]), Component::Singleton(2)],
            attachments: vec![(2, 3)],
        };
        assert_eq!(
            validate_sym_cactus(&four_node(), &d),
            Verdict::Reject(Rejection::DisjointnessViolated { node: 2 })
        );
    }

    #[test]
    fn rejects_missing_attachment() {
        let mut d = four_node_cert();
        d.attachments.clear();
        assert_eq!(
            validate_sym_cactus(&four_node(), &d),
            Verdict::Reject(Rejection::MissingAttachment { component: 2 })
        );
    }

    #[test]
    fn rejects_short_cycles_and_missing_cycle_edges() {
        let d = CactusDecomposition {
            root: 1,
            components: vec![Component::Cycle(vec![1, 2])],
            attachments: vec![],
        };
        assert!(matches!(
            validate_sym_cactus(&four_node(), &d),
            Verdict::Reject(Rejection::CycleTooShort { len: 2, .. })
        ));
        let d = CactusDecomposition {
            root: 1,
            components: vec![Component::Cycle(vec![1, 2, 4])],
            attachments: vec![],
        };
        assert!(matches!(
            validate_sym_cactus(&four_node(), &d),
            Verdict::Reject(Rejection::MissingCycleEdge { component: 1, .. })
        ));
    }

    #[test]
    fn rejects_misplaced_root_and_attachment() {
        let mut d = four_node_cert();
        d.root = 4;
        assert_eq!(
            validate_sym_cactus(&four_node(), &d),
            Verdict::Reject(Rejection::RootNotInFirstComponent { root: 4 })
        );
        let mut d = four_node_cert();
        d.attachments = vec![(3, 4)];
        assert!(matches!(
            validate_sym_cactus(&four_node(), &d),
            Verdict::Reject(Rejection::AttachmentMisplaced { component: 2, .. })
        ));
        let g = four_node().without_edge(3, 4);
        assert!(matches!(
            validate_sym_cactus(&g, &four_node_cert()),
            Verdict::Reject(Rejection::AttachmentNotInGraph { .. })
        ));
    }

    #[test]
    fn example_structures() {
        assert_eq!(
            validate_generalized(&example_graph(false), &example_cert(false)),
            Verdict::Accept
        );
        assert_eq!(
            validate_generalized(&example_graph(true), &example_cert(true)),
            Verdict::Accept
        );
        assert_eq!(
            validate_generalized(&example_graph(true), &example_cert(false)),
            Verdict::Reject(Rejection::UnaccountedEdge { i: 2, j: 4 })
        );
    }

    #[test]
    fn rejects_partial_cover() {
        let mut gd = example_cert(false);
        gd.cacti[1].components = vec![Component::Singleton(3), Component::Singleton(4)];
        gd.cacti[1].attachments = vec![(4, 3)];
        gd.extra_edges = vec![(3, 5), (4, 5)];
        assert_eq!(
            validate_generalized(&example_graph(false), &gd),
            Verdict::Reject(Rejection::NotSpanning { missing: vec![5] })
        );
    }

    #[test]
    fn rejects_bad_roots() {
        let mut gd = example_cert(false);
        gd.cacti[1].root = 4;
        gd.cacti[1].components = vec![Component::Cycle(vec![4, 5, 3])];
        assert_eq!(
            validate_generalized(&example_graph(false), &gd),
            Verdict::Reject(Rejection::RootNotControlNode { root: 4 })
        );
    }

    #[test]
    fn search_finds_certificates() {
        for g in [four_node(), example_graph(false), example_graph(true)] {
            let gd = find_generalized(&g).expect("reachable");
            assert_eq!(validate_generalized(&g, &gd), Verdict::Accept);
        }
        let b = WeightBounds::default();
        let split = build_graph(3, [Edge::plus(1, 2, 0.5)], [ControlNode::unit(1)], &b).unwrap();
        assert!(find_generalized(&split).is_none());
    }
}
