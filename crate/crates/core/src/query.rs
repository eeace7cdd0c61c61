//! Query graphs and their STwig decomposition units.
//!
//! Query nodes are stored densely: index `i` is the `i`-th node in ascending
//! order of its external id, so comparing indices compares ids. Everything
//! downstream (STwigs, bindings, join tuples) uses the dense index.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::store::text::{parse_records, Record};
use crate::store::{LabelId, PartitionedGraph};

/// External query node identifier, as written in query files.
pub type QNodeId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGraph {
    ids: Vec<QNodeId>,
    labels: Vec<String>,
    adjacency: Vec<Vec<usize>>,
    /// `(a, b)` with `a < b`, ascending.
    edges: Vec<(usize, usize)>,
}

impl QueryGraph {
    /// Builds and validates a query: connected, simple, at least one edge.
    pub fn new(nodes: Vec<(QNodeId, String)>, edges: Vec<(QNodeId, QNodeId)>) -> Result<Self> {
        let mut nodes = nodes;
        nodes.sort_by_key(|(id, _)| *id);
        for pair in nodes.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidQuery(format!("query node {} declared twice", pair[0].0)));
            }
        }
        let index: HashMap<QNodeId, usize> =
            nodes.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
        let n = nodes.len();
        let mut edge_set = BTreeSet::new();
        for (u, v) in edges {
            let (Some(&a), Some(&b)) = (index.get(&u), index.get(&v)) else {
                let missing = if index.contains_key(&u) { v } else { u };
                return Err(Error::InvalidQuery(format!("edge endpoint {missing} is not declared")));
            };
            if a == b {
                return Err(Error::InvalidQuery(format!("self-loop on query node {u}")));
            }
            if !edge_set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidQuery(format!("parallel edge {u}–{v}")));
            }
        }
        if edge_set.is_empty() {
            return Err(Error::InvalidQuery("query has no edges".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &edge_set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let q = QueryGraph {
            ids: nodes.iter().map(|(id, _)| *id).collect(),
            labels: nodes.into_iter().map(|(_, l)| l).collect(),
            adjacency,
            edges: edge_set.into_iter().collect(),
        };
        if !q.is_connected() {
            return Err(Error::InvalidQuery("query is disconnected".into()));
        }
        Ok(q)
    }

    pub fn parse<R: BufRead>(source: R) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut seen = HashMap::new();
        for rec in parse_records(source)? {
            match rec {
                Record::Vertex { line, id, label } => {
                    if seen.insert(id, line).is_some() {
                        return Err(Error::DuplicateNode { line, id });
                    }
                    nodes.push((id, label));
                }
                Record::Edge { src, dst, .. } => edges.push((src, dst)),
            }
        }
        Self::new(nodes, edges)
    }

    fn is_connected(&self) -> bool {
        let n = self.ids.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn id(&self, node: usize) -> QNodeId {
        self.ids[node]
    }

    pub fn ids(&self) -> &[QNodeId] {
        &self.ids
    }

    pub fn index_of(&self, id: QNodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Canonical text: `v` lines by id, then `e` lines by (smaller, larger) index.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, label) in self.ids.iter().zip(&self.labels) {
            out.push_str(&format!("v {id} {label}\n"));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("e {} {}\n", self.ids[a], self.ids[b]));
        }
        out
    }

    /// Per-node label ids in `graph`, or the first label the graph lacks.
    pub fn resolve_labels(&self, graph: &PartitionedGraph) -> std::result::Result<Vec<LabelId>, String> {
        self.labels
            .iter()
            .map(|l| graph.label_id(l).ok_or_else(|| l.clone()))
            .collect()
    }
}

/// A two-level tree `(root, leaves)` over query node indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct STwig {
    pub root: usize,
    pub leaves: Vec<usize>,
}

impl STwig {
    pub fn new(root: usize, mut leaves: Vec<usize>) -> Self {
        leaves.sort_unstable();
        STwig { root, leaves }
    }

    /// Root first, then leaves: the column order of match tuples.
    pub fn schema(&self) -> Vec<usize> {
        std::iter::once(self.root).chain(self.leaves.iter().copied()).collect()
    }

    /// The query edges this STwig covers, normalized as `(smaller, larger)`.
    pub fn provenance(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.leaves
            .iter()
            .map(move |&l| (self.root.min(l), self.root.max(l)))
    }

    /// Well-formed against `query`: leaves distinct, not the root, and adjacent to it.
    pub fn is_valid_for(&self, query: &QueryGraph) -> bool {
        let distinct: BTreeSet<_> = self.leaves.iter().collect();
        self.root < query.node_count()
            && !self.leaves.is_empty()
            && distinct.len() == self.leaves.len()
            && self
                .leaves
                .iter()
                .all(|&l| l != self.root && l < query.node_count() && query.has_edge(self.root, l))
    }

    pub fn display<'a>(&'a self, query: &'a QueryGraph) -> STwigDisplay<'a> {
        STwigDisplay { stwig: self, query }
    }
}

pub struct STwigDisplay<'a> {
    stwig: &'a STwig,
    query: &'a QueryGraph,
}

impl fmt::Display for STwigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let leaves: Vec<String> = self
            .stwig
            .leaves
            .iter()
            .map(|&l| self.query.id(l).to_string())
            .collect();
        write!(f, "root={} leaves={}", self.query.id(self.stwig.root), leaves.join(","))
    }
}

/// An ordered STwig cover of a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub stwigs: Vec<STwig>,
    /// Set once the coordinator has picked a head.
    pub head: Option<usize>,
}

impl Decomposition {
    pub fn new(stwigs: Vec<STwig>) -> Self {
        Decomposition { stwigs, head: None }
    }

    pub fn len(&self) -> usize {
        self.stwigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stwigs.is_empty()
    }

    /// `T<i>: root=<qid> leaves=<qids>` lines, 1-based.
    pub fn render(&self, query: &QueryGraph) -> String {
        self.stwigs
            .iter()
            .enumerate()
            .map(|(i, t)| format!("T{}: {}\n", i + 1, t.display(query)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str) -> Result<QueryGraph> {
        QueryGraph::parse(text.as_bytes())
    }

    #[test]
    fn single_edge_query() {
        let g = q("v 0 a\nv 1 b\ne 0 1\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn dense_indices_follow_id_order() {
        let g = q("v 9 x\nv 3 y\nv 5 z\ne 9 3\ne 3 5\n").unwrap();
        assert_eq!(g.ids(), &[3, 5, 9]);
        assert_eq!(g.label(2), "x");
        assert_eq!(g.index_of(5), Some(1));
        assert_eq!(g.neighbors(0), &[1, 2]);
    }

    #[test]
    fn rejects_invalid_shapes() {
        for (text, why) in [
            ("v 0 a\nv 1 b\nv 2 c\nv 3 d\ne 0 1\ne 2 3\n", "disconnected"),
            ("v 0 a\nv 1 b\ne 0 1\ne 1 1\n", "self-loop"),
            ("v 0 a\n", "no edges"),
            ("v 0 a\nv 1 b\ne 0 1\ne 1 0\n", "parallel"),
            ("v 0 a\ne 0 1\n", "not declared"),
        ] {
            match q(text) {
                Err(Error::InvalidQuery(msg)) => assert!(msg.contains(why), "{msg} / {why}"),
                other => panic!("{why}: {other:?}"),
            }
        }
        assert!(matches!(q("v 0 a\nv 0 b\n"), Err(Error::DuplicateNode { .. })));
    }

    #[test]
    fn repeated_labels_are_allowed() {
        let g = q("v 0 a\nv 1 a\nv 2 a\ne 0 1\ne 1 2\ne 0 2\n").unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn stwig_schema_and_provenance() {
        let g = q("v 0 a\nv 1 b\nv 2 c\ne 0 1\ne 2 0\n").unwrap();
        let t = STwig::new(0, vec![2, 1]);
        assert_eq!(t.schema(), vec![0, 1, 2]);
        assert_eq!(t.provenance().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
        assert!(t.is_valid_for(&g));
        assert!(!STwig::new(1, vec![2]).is_valid_for(&g));
        assert_eq!(Decomposition::new(vec![t]).render(&g), "T1: root=0 leaves=1,2\n");
    }
}
