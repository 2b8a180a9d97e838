//! Seeded random generalized sym-cacti.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cactus::{CactusDecomposition, Component, GeneralizedDecomposition};
use super::{build_graph, has_row_matching, ControlNode, Edge, GraphError, NodeId, Sign, SignedGraph, WeightBounds};

const MAX_ATTEMPTS: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorOptions {
    /// Probability that an edge is excitatory.
    pub sign_ratio: f64,
    /// Probability of growing a cycle rather than a singleton when at least
    /// three nodes remain.
    pub cycle_probability: f64,
    pub max_cycle_len: usize,
    /// Cross-cactus edges to add; `None` adds one fewer than the number of cacti.
    pub extra_edges: Option<usize>,
    /// Degree cap for every node, at least 3.
    pub max_degree: Option<usize>,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            sign_ratio: 0.8,
            cycle_probability: 0.4,
            max_cycle_len: 5,
            extra_edges: None,
            max_degree: None,
        }
    }
}

/// [`generate_generalized_with`] using default options and the given sign ratio.
pub fn generate_generalized(
    n: usize,
    roots: &[NodeId],
    seed: u64,
    bounds: &WeightBounds,
    sign_ratio: f64,
) -> Result<(SignedGraph, GeneralizedDecomposition), GraphError> {
    let opts = GeneratorOptions {
        sign_ratio,
        ..GeneratorOptions::default()
    };
    generate_generalized_with(n, roots, seed, bounds, &opts)
}

/// Generates a graph with a generalized sym-cactus structure rooted at `roots`.
///
/// Non-root nodes are dealt to the roots at random and each cactus is grown
/// as a chain of random cycles and singletons. Every cactus is also kept
/// free of dilations with respect to its own root, so the result is
/// structurally controllable and not just certificate-valid. Roots become
/// control nodes with unit gain. Output is a pure function of the arguments.
pub fn generate_generalized_with(
    n: usize,
    roots: &[NodeId],
    seed: u64,
    bounds: &WeightBounds,
    opts: &GeneratorOptions,
) -> Result<(SignedGraph, GeneralizedDecomposition), GraphError> {
    bounds.validate()?;
    if roots.is_empty() || n < roots.len() {
        return Err(GraphError::InfeasibleSize { n, roots: roots.len() });
    }
    for (k, &r) in roots.iter().enumerate() {
        if r == 0 || r > n {
            return Err(GraphError::NodeOutOfRange { node: r, n });
        }
        if roots[..k].contains(&r) {
            return Err(GraphError::BadControlNode {
                node: r,
                reason: "listed twice".into(),
            });
        }
    }
    if !(0.0..=1.0).contains(&opts.sign_ratio) {
        return Err(GraphError::BadGeneratorOption(format!(
            "sign_ratio {} outside [0, 1]",
            opts.sign_ratio
        )));
    }
    if !(0.0..=1.0).contains(&opts.cycle_probability) {
        return Err(GraphError::BadGeneratorOption(format!(
            "cycle_probability {} outside [0, 1]",
            opts.cycle_probability
        )));
    }
    if opts.max_cycle_len < 3 {
        return Err(GraphError::BadGeneratorOption(
            "max_cycle_len must be at least 3".into(),
        ));
    }
    if let Some(cap) = opts.max_degree {
        if cap < 3 {
            return Err(GraphError::BadGeneratorOption("max_degree must be at least 3".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut others: Vec<NodeId> = (1..=n).filter(|v| !roots.contains(v)).collect();
    others.shuffle(&mut rng);
    let mut members: Vec<Vec<NodeId>> = roots.iter().map(|&r| vec![r]).collect();
    for v in others {
        let k = rng.random_range(0..roots.len());
        members[k].push(v);
    }

    let cap = opts.max_degree.unwrap_or(usize::MAX);
    let mut degree = vec![0usize; n + 1];
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut cacti = Vec::with_capacity(roots.len());
    for nodes in &members {
        let cactus = (0..MAX_ATTEMPTS)
            .find_map(|_| grow_cactus(nodes, opts, cap, &degree, &mut rng))
            .ok_or_else(|| {
                GraphError::BadGeneratorOption(format!(
                    "no dilation-free cactus found for root {} in {MAX_ATTEMPTS} attempts",
                    nodes[0]
                ))
            })?;
        for (i, j) in cactus.edge_set() {
            degree[i] += 1;
            degree[j] += 1;
            edges.insert((i, j));
        }
        cacti.push(cactus);
    }

    let mut extra_edges = Vec::new();
    if roots.len() > 1 {
        let wanted = opts.extra_edges.unwrap_or(roots.len() - 1);
        let mut owner = vec![0usize; n + 1];
        for (k, nodes) in members.iter().enumerate() {
            for &v in nodes {
                owner[v] = k;
            }
        }
        let mut tries = 0;
        while extra_edges.len() < wanted && tries < 100 * wanted.max(1) {
            tries += 1;
            let a = rng.random_range(1..=n);
            let b = rng.random_range(1..=n);
            let pair = (a.min(b), a.max(b));
            if owner[a] == owner[b] || edges.contains(&pair) || degree[a] >= cap || degree[b] >= cap {
                continue;
            }
            degree[a] += 1;
            degree[b] += 1;
            edges.insert(pair);
            extra_edges.push(pair);
        }
    }

    let records: Vec<Edge> = edges
        .iter()
        .map(|&(i, j)| {
            let sign = if rng.random_bool(opts.sign_ratio) {
                Sign::Plus
            } else {
                Sign::Minus
            };
            let (lo, hi) = bounds.interval(sign);
            Edge::new(i, j, sign, rng.random_range(lo..=hi))
        })
        .collect();
    let control: Vec<ControlNode> = roots.iter().map(|&r| ControlNode::unit(r)).collect();
    let g = build_graph(n, records, control, bounds)?;
    let gd = GeneralizedDecomposition { cacti, extra_edges };
    debug_assert!(super::validate_generalized(&g, &gd).is_accept());
    Ok((g, gd))
}

/// One attempt at a cactus over `nodes` (root first). `None` when the
/// degree cap blocks an attachment or the result has a dilation.
fn grow_cactus(
    nodes: &[NodeId],
    opts: &GeneratorOptions,
    cap: usize,
    base_degree: &[usize],
    rng: &mut ChaCha8Rng,
) -> Option<CactusDecomposition> {
    let mut degree = base_degree.to_vec();
    let mut components = Vec::new();
    let mut attachments = Vec::new();
    let mut placed: Vec<NodeId> = Vec::new();
    // Singletons whose column is not yet claimed by a pendant singleton.
    let mut free_columns: Vec<NodeId> = Vec::new();
    let mut cursor = 0;

    while cursor < nodes.len() {
        let remaining = nodes.len() - cursor;
        let as_cycle = remaining >= 3 && rng.random_bool(opts.cycle_probability);
        if as_cycle {
            let len = rng.random_range(3..=opts.max_cycle_len.min(remaining));
            let cycle = nodes[cursor..cursor + len].to_vec();
            for &v in &cycle {
                degree[v] += 2;
            }
            if !placed.is_empty() {
                let candidates: Vec<NodeId> = placed.iter().copied().filter(|&v| degree[v] < cap).collect();
                let &d2 = candidates.as_slice().choose(rng)?;
                let d1 = cycle[rng.random_range(0..len)];
                if degree[d1] >= cap {
                    return None;
                }
                degree[d1] += 1;
                degree[d2] += 1;
                attachments.push((d1, d2));
                free_columns.retain(|&v| v != d2);
            }
            placed.extend_from_slice(&cycle);
            components.push(Component::Cycle(cycle));
            cursor += len;
        } else {
            let s = nodes[cursor];
            if !placed.is_empty() {
                let mut candidates: Vec<NodeId> = free_columns.iter().copied().filter(|&v| degree[v] < cap).collect();
                if candidates.is_empty() {
                    candidates = placed.iter().copied().filter(|&v| degree[v] < cap).collect();
                }
                let &d2 = candidates.as_slice().choose(rng)?;
                degree[s] += 1;
                degree[d2] += 1;
                attachments.push((s, d2));
                free_columns.retain(|&v| v != d2);
            }
            free_columns.push(s);
            placed.push(s);
            components.push(Component::Singleton(s));
            cursor += 1;
        }
    }

    let d = CactusDecomposition {
        root: nodes[0],
        components,
        attachments,
    };
    // Dilation check on the cactus alone, input at its root.
    let index: std::collections::HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for (i, j) in d.edge_set() {
        adjacency[index[&i]].push(index[&j]);
        adjacency[index[&j]].push(index[&i]);
    }
    has_row_matching(nodes.len(), &adjacency, &[0]).then_some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_generalized;

    #[test]
    fn fourteen_nodes_two_roots() {
        let (g, gd) = generate_generalized(14, &[1, 9], 7, &WeightBounds::default(), 0.8).unwrap();
        assert_eq!(g.n(), 14);
        assert!(validate_generalized(&g, &gd).is_accept());
        assert_eq!(gd.cacti.len(), 2);
        assert!(g.is_dilation_free());
        assert!(g.is_input_accessible());
    }

    #[test]
    fn single_node() {
        let (g, gd) = generate_generalized(1, &[1], 3, &WeightBounds::default(), 0.8).unwrap();
        assert!(g.edges().is_empty());
        assert_eq!(gd.cacti[0].components, vec![Component::Singleton(1)]);
    }

    #[test]
    fn deterministic_per_seed() {
        let b = WeightBounds::default();
        let first = generate_generalized(5, &[1, 3], 42, &b, 0.8).unwrap();
        let second = generate_generalized(5, &[1, 3], 42, &b, 0.8).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn infeasible_sizes() {
        let b = WeightBounds::default();
        assert!(matches!(
            generate_generalized(1, &[1, 2], 0, &b, 0.8),
            Err(GraphError::InfeasibleSize { .. }) | Err(GraphError::NodeOutOfRange { .. })
        ));
        assert!(matches!(
            generate_generalized(3, &[], 0, &b, 0.8),
            Err(GraphError::InfeasibleSize { .. })
        ));
    }

    #[test]
    fn degree_cap_respected() {
        let opts = GeneratorOptions {
            max_degree: Some(3),
            extra_edges: Some(4),
            ..GeneratorOptions::default()
        };
        for seed in 0..30 {
            let (g, _) = generate_generalized_with(20, &[1, 5, 9], seed, &WeightBounds::default(), &opts).unwrap();
            assert!(g.max_out_degree() <= 3, "seed {seed}");
        }
    }

    #[test]
    fn sign_ratio_extremes() {
        let b = WeightBounds::default();
        let (g, _) = generate_generalized(10, &[1], 5, &b, 1.0).unwrap();
        assert!(g.edges().iter().all(|e| e.sign == Sign::Plus));
        let (g, _) = generate_generalized(10, &[1], 5, &b, 0.0).unwrap();
        assert!(g.edges().iter().all(|e| e.sign == Sign::Minus));
    }
}
