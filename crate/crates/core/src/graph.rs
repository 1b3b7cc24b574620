//! Fixed bidirectional communication topology and the structural queries
//! the protocol needs: neighborhoods, two-hop sets, induced subgraphs,
//! connectivity, and assumption validation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense node identifier in `0..N`.
pub type NodeId = usize;

/// An ordered set of node ids. Iteration order is ascending, which keeps
/// every derived computation deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct NodeSet(BTreeSet<NodeId>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(BTreeSet::new())
    }

    /// The full vertex set `{0..n-1}`.
    pub fn all(n: usize) -> Self {
        (0..n).collect()
    }

    pub fn singleton(id: NodeId) -> Self {
        let mut s = BTreeSet::new();
        s.insert(id);
        NodeSet(s)
    }

    pub fn insert(&mut self, id: NodeId) -> bool {
        self.0.insert(id)
    }

    pub fn remove(&mut self, id: NodeId) -> bool {
        self.0.remove(&id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn first(&self) -> Option<NodeId> {
        self.0.first().copied()
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.intersection(&other.0).copied().collect())
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Strict containment: subset and not equal.
    pub fn is_strict_subset(&self, other: &NodeSet) -> bool {
        self.0.is_subset(&other.0) && self.0 != other.0
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        NodeSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[NodeId; N]> for NodeSet {
    fn from(ids: [NodeId; N]) -> Self {
        ids.into_iter().collect()
    }
}

impl IntoIterator for NodeSet {
    type Item = NodeId;
    type IntoIter = std::collections::btree_set::IntoIter<NodeId>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl fmt::Display for NodeSet {
    /// Sorted ids joined by `;`, e.g. `0;2;4`. Used verbatim in trace tables.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sep = "";
        for id in self.iter() {
            write!(f, "{sep}{id}")?;
            sep = ";";
        }
        Ok(())
    }
}

/// A fixed bidirectional communication graph. Edges are unordered pairs,
/// deduplicated and stored as `(lo, hi)`; there are no self-loops.
///
/// `nodes` is normally `{0..node_count-1}` but shrinks for induced
/// subgraphs, where the original ids are preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    nodes: NodeSet,
    edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: Vec<NodeSet>,
}

impl Graph {
    /// Build a graph over `0..node_count` from an edge list. Rejects
    /// self-loops, out-of-range ids, and graphs with fewer than two nodes.
    pub fn new(node_count: usize, edge_list: &[(NodeId, NodeId)]) -> Result<Graph> {
        if node_count < 2 {
            return Err(Error::TooFewNodes(node_count));
        }
        let mut edges = BTreeSet::new();
        let mut adjacency = vec![NodeSet::new(); node_count];
        for &(a, b) in edge_list {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            for id in [a, b] {
                if id >= node_count {
                    return Err(Error::NodeOutOfRange {
                        node: id,
                        count: node_count,
                    });
                }
            }
            edges.insert((a.min(b), a.max(b)));
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        Ok(Graph {
            node_count,
            nodes: NodeSet::all(node_count),
            edges,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Nodes present in this graph (a subset of `0..node_count` for
    /// induced subgraphs).
    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    fn check_present(&self, j: NodeId) -> Result<()> {
        if j >= self.node_count {
            return Err(Error::NodeOutOfRange {
                node: j,
                count: self.node_count,
            });
        }
        if !self.nodes.contains(j) {
            return Err(Error::NodeAbsent(j));
        }
        Ok(())
    }

    /// One-hop neighborhood of `j`; never contains `j`.
    pub fn neighbors(&self, j: NodeId) -> Result<&NodeSet> {
        self.check_present(j)?;
        Ok(&self.adjacency[j])
    }

    /// Two-hop neighborhood: neighbors plus neighbors-of-neighbors, with
    /// `j` itself removed. A node never messages itself, so the formal
    /// re-inclusion of `j` through its neighbors' lists is dropped.
    pub fn two_hop_set(&self, j: NodeId) -> Result<NodeSet> {
        self.check_present(j)?;
        let mut out = self.adjacency[j].clone();
        for i in self.adjacency[j].iter() {
            out = out.union(&self.adjacency[i]);
        }
        out.remove(j);
        Ok(out)
    }

    /// Subgraph over `keep`, preserving node ids: only edges with both
    /// endpoints in `keep` survive.
    pub fn induced_subgraph(&self, keep: &NodeSet) -> Result<Graph> {
        for id in keep.iter() {
            self.check_present(id)?;
        }
        let edges: BTreeSet<(NodeId, NodeId)> = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| keep.contains(a) && keep.contains(b))
            .collect();
        let mut adjacency = vec![NodeSet::new(); self.node_count];
        for &(a, b) in &edges {
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        Ok(Graph {
            node_count: self.node_count,
            nodes: keep.clone(),
            edges,
            adjacency,
        })
    }

    /// True iff every present node is reachable from the smallest present
    /// id. Single-node and empty graphs count as connected.
    pub fn is_connected(&self) -> bool {
        let start = match self.nodes.first() {
            Some(s) => s,
            None => return true,
        };
        let mut seen = NodeSet::singleton(start);
        let mut frontier = vec![start];
        while let Some(v) = frontier.pop() {
            for w in self.adjacency[v].iter() {
                if seen.insert(w) {
                    frontier.push(w);
                }
            }
        }
        seen == self.nodes
    }

    /// Check the structural assumptions a scenario relies on. Violations
    /// are report entries, never failures, so assumption-violating
    /// counterexamples remain runnable.
    pub fn validate_assumptions(
        &self,
        malicious: &NodeSet,
        mode: ValidationMode,
    ) -> Result<AssumptionReport> {
        for id in malicious.iter() {
            self.check_present(id)?;
        }
        let mut violations = Vec::new();
        let trustworthy = self.nodes.difference(malicious);
        if !self.induced_subgraph(&trustworthy)?.is_connected() {
            violations.push(AssumptionViolation::TrustworthySubgraphDisconnected);
        }
        if matches!(mode, ValidationMode::Concurrent | ValidationMode::Infrequent) {
            for &(a, b) in &self.edges {
                if malicious.contains(a) && malicious.contains(b) {
                    violations.push(AssumptionViolation::AdjacentMaliciousPair { a, b });
                }
            }
        }
        Ok(AssumptionReport { violations })
    }
}

/// Which trust regime a scenario runs under; decides which assumptions
/// apply. Two-hop checking additionally forbids adjacent malicious nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Oracle,
    Concurrent,
    Infrequent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssumptionViolation {
    /// The subgraph induced by the non-malicious nodes is disconnected.
    TrustworthySubgraphDisconnected,
    /// Two malicious nodes share an edge (breaks two-hop checking).
    AdjacentMaliciousPair { a: NodeId, b: NodeId },
}

impl fmt::Display for AssumptionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssumptionViolation::TrustworthySubgraphDisconnected => {
                write!(f, "trustworthy subgraph disconnected")
            }
            AssumptionViolation::AdjacentMaliciousPair { a, b } => {
                write!(f, "adjacent malicious pair ({a}, {b})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub violations: Vec<AssumptionViolation>,
}

impl AssumptionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The 5-node test graph used throughout: a 4-cycle 0-1-2-3 with node 4
/// hanging off node 3.
#[cfg(test)]
pub(crate) fn canonical_five() -> Graph {
    Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4)]).unwrap()
}
