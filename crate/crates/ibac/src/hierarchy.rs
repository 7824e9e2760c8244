//! Rooted label hierarchies flattened into subset tests.
//!
//! In a hierarchy drawn as a digraph with a single entry, label `u`
//! dominates label `v` when every path from the entry to `v` passes
//! through `u`. [`graph_dominates`] decides that by deleting `u` and
//! testing whether `v` is still reachable; no dominator-tree machinery,
//! the graphs here are policy-sized.
//!
//! [`flatten`] turns a tree-shaped hierarchy into one inclusion set per
//! vertex, `S(u) = {u} plus everything u dominates`, after which the graph
//! question collapses to `S(u) superset of S(v)`. That is the same move
//! the codecs make for levels and projects, so the two must agree; tests
//! hold them together. General DAGs are accepted by [`graph_dominates`]
//! but not by [`flatten`]: once a vertex is reachable around `u`,
//! "dominates" and "reaches" part ways and no single set per vertex can
//! carry the relation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::PolicySchema;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyGraph {
    entry: String,
    vertices: Vec<String>,
    edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphDoc {
    entry: String,
    #[serde(default)]
    vertices: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

impl HierarchyGraph {
    /// Vertices keep their declared order; the entry is prepended when
    /// missing. Edge endpoints must be declared vertices.
    pub fn new(
        entry: &str,
        vertices: impl IntoIterator<Item = String>,
        edges: Vec<(String, String)>,
    ) -> Result<Self> {
        let mut list: Vec<String> = Vec::new();
        for v in vertices {
            if !list.contains(&v) {
                list.push(v);
            }
        }
        if !list.iter().any(|v| v == entry) {
            list.insert(0, entry.to_string());
        }
        for (from, to) in &edges {
            for endpoint in [from, to] {
                if !list.iter().any(|v| v == endpoint) {
                    return Err(Error::UnknownVertex(endpoint.clone()));
                }
            }
        }
        Ok(HierarchyGraph {
            entry: entry.to_string(),
            vertices: list,
            edges,
        })
    }

    /// Parse `{ "entry": ..., "vertices": [...], "edges": [[a,b],...] }`.
    /// Vertices may be omitted; they are then inferred from the entry and
    /// the edges in order of appearance.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        let mut vertices = doc.vertices;
        if vertices.is_empty() {
            vertices.push(doc.entry.clone());
            for (from, to) in &doc.edges {
                for endpoint in [from, to] {
                    if !vertices.contains(endpoint) {
                        vertices.push(endpoint.clone());
                    }
                }
            }
        }
        HierarchyGraph::new(&doc.entry, vertices, doc.edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn entry(&self) -> &str {
        &self.entry
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn contains(&self, v: &str) -> bool {
        self.vertices.iter().any(|x| x == v)
    }

    /// Breadth-first reachability from the entry, optionally with one
    /// vertex deleted.
    fn reachable_without(&self, removed: Option<&str>) -> BTreeSet<&str> {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        if Some(self.entry.as_str()) == removed {
            return seen;
        }
        let mut queue: VecDeque<&str> = VecDeque::new();
        queue.push_back(&self.entry);
        seen.insert(&self.entry);
        while let Some(node) = queue.pop_front() {
            for (from, to) in &self.edges {
                if from == node && Some(to.as_str()) != removed && seen.insert(to) {
                    queue.push_back(to);
                }
            }
        }
        seen
    }

    /// Vertices the entry cannot reach, in declaration order.
    pub fn unreachable(&self) -> Vec<String> {
        let reachable = self.reachable_without(None);
        self.vertices
            .iter()
            .filter(|v| !reachable.contains(v.as_str()))
            .cloned()
            .collect()
    }
}

/// Does every entry-to-`v` path pass through `u`? Decided by deleting `u`
/// and re-testing reachability of `v`.
pub fn graph_dominates(graph: &HierarchyGraph, u: &str, v: &str) -> Result<bool> {
    for vertex in [u, v] {
        if !graph.contains(vertex) {
            return Err(Error::UnknownVertex(vertex.to_string()));
        }
    }
    if !graph.reachable_without(None).contains(v) {
        return Err(Error::Unreachable(vec![v.to_string()]));
    }
    if u == v {
        return Ok(true);
    }
    Ok(!graph.reachable_without(Some(u)).contains(v))
}

/// One inclusion set per vertex. Once flattened, dominance is a subset
/// test, exactly like the codecs' included form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionEncoding {
    pub sets: BTreeMap<String, BTreeSet<String>>,
}

impl InclusionEncoding {
    pub fn set(&self, vertex: &str) -> Option<&BTreeSet<String>> {
        self.sets.get(vertex)
    }

    /// Subset-side answer to the dominance question.
    pub fn dominates(&self, u: &str, v: &str) -> Option<bool> {
        Some(self.sets.get(u)?.is_superset(self.sets.get(v)?))
    }
}

/// Flatten a tree-shaped hierarchy: `S(u) = {u}` plus every vertex `u`
/// dominates. Inputs must be trees (entry in-degree 0, every other vertex
/// in-degree exactly 1, everything reachable).
pub fn flatten(graph: &HierarchyGraph) -> Result<InclusionEncoding> {
    let unreachable = graph.unreachable();
    if !unreachable.is_empty() {
        return Err(Error::Unreachable(unreachable));
    }
    let mut indegree: BTreeMap<&str, usize> =
        graph.vertices.iter().map(|v| (v.as_str(), 0)).collect();
    for (_, to) in &graph.edges {
        *indegree.get_mut(to.as_str()).expect("validated endpoint") += 1;
    }
    if indegree[graph.entry()] != 0 {
        return Err(Error::NotATree(format!(
            "entry `{}` has an incoming edge",
            graph.entry()
        )));
    }
    for v in &graph.vertices {
        if v != graph.entry() && indegree[v.as_str()] != 1 {
            return Err(Error::NotATree(format!(
                "vertex `{v}` has in-degree {}, expected 1",
                indegree[v.as_str()]
            )));
        }
    }

    let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for u in &graph.vertices {
        let mut s: BTreeSet<String> = BTreeSet::new();
        for v in &graph.vertices {
            if graph_dominates(graph, u, v)? {
                s.insert(v.clone());
            }
        }
        s.insert(u.clone());
        sets.insert(u.clone(), s);
    }
    Ok(InclusionEncoding { sets })
}

/// The schema's level order as a chain graph, highest level as entry.
/// Flattening it must reproduce the subject-side level closure.
pub fn level_chain(schema: &PolicySchema) -> Result<HierarchyGraph> {
    let levels = schema.levels();
    if levels.is_empty() {
        return Err(Error::NotATree("schema declares no levels".to_string()));
    }
    let edges: Vec<(String, String)> = levels
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    HierarchyGraph::new(&levels[0], levels.iter().cloned(), edges)
}
