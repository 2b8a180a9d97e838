//! JSON documents for graphs and decompositions.
//!
//! Output is pretty-printed with keys in sorted order, so a document read
//! and written back is byte-identical to any other canonical rendering.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cactus::GeneralizedDecomposition;
use super::{build_graph, ControlNode, Edge, SignedGraph, WeightBounds};
use crate::error::{from_json_str, Error, Result};

/// On-disk graph: `{"n", "edges", "control"}` plus optional `"bounds"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub control: Vec<ControlNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<WeightBounds>,
}

impl GraphDocument {
    pub fn from_graph(g: &SignedGraph, bounds: Option<&WeightBounds>) -> Self {
        GraphDocument {
            n: g.n(),
            edges: g.edges().to_vec(),
            control: g.control_nodes().to_vec(),
            bounds: bounds.copied(),
        }
    }

    /// Bounds precedence: `explicit`, then the document's own, then the default.
    pub fn into_graph(self, explicit: Option<&WeightBounds>) -> Result<SignedGraph> {
        let bounds = explicit.copied().or(self.bounds).unwrap_or_default();
        Ok(build_graph(self.n, self.edges, self.control, &bounds)?)
    }
}

pub(crate) fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json::Value objects are BTreeMaps, which sorts keys.
    let value = serde_json::to_value(value).expect("serializable document");
    let mut text = serde_json::to_string_pretty(&value).expect("serializable document");
    text.push('\n');
    text
}

pub fn graph_from_json(text: &str, bounds: Option<&WeightBounds>) -> Result<SignedGraph> {
    if text.trim().is_empty() {
        return Err(Error::schema("", "empty document"));
    }
    from_json_str::<GraphDocument>(text)?.into_graph(bounds)
}

pub fn graph_to_json(g: &SignedGraph, bounds: Option<&WeightBounds>) -> String {
    canonical_json(&GraphDocument::from_graph(g, bounds))
}

pub fn load_graph(path: impl AsRef<Path>, bounds: Option<&WeightBounds>) -> Result<SignedGraph> {
    load_graph_document(path)?.into_graph(bounds)
}

/// Reads a graph file without building the graph, keeping its `bounds`.
pub fn load_graph_document(path: impl AsRef<Path>) -> Result<GraphDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::schema("", "empty document"));
    }
    from_json_str(&text)
}

pub fn decomposition_from_json(text: &str) -> Result<GeneralizedDecomposition> {
    if text.trim().is_empty() {
        return Err(Error::schema("", "empty document"));
    }
    from_json_str(text)
}

pub fn decomposition_to_json(gd: &GeneralizedDecomposition) -> String {
    canonical_json(gd)
}

pub fn load_decomposition(path: impl AsRef<Path>) -> Result<GeneralizedDecomposition> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decomposition_from_json(&text)
}
