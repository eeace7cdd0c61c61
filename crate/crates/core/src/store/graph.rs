use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::sync::Arc;

use log::warn;

use super::text::{parse_records, Record};
use crate::error::{Error, Result};
use crate::NodeId;

/// Interned node label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    ids: HashMap<String, LabelId>,
}

impl SymbolTable {
    pub fn intern(&mut self, name: &str) -> LabelId {
        if let Some(id) = self.ids.get(name) {
            return *id;
        }
        let id = LabelId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<LabelId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: LabelId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub label: LabelId,
    /// Sorted, no duplicates, never contains `id`.
    pub neighbors: Vec<NodeId>,
}

/// Read access shared by the whole-graph and partitioned representations.
///
/// This path never touches the message bus; oracles and generators use it.
pub trait GraphAccess {
    fn node_count(&self) -> usize;
    /// All node ids in ascending order.
    fn node_ids(&self) -> Vec<NodeId>;
    fn label_of(&self, id: NodeId) -> Option<&str>;
    fn neighbors_of(&self, id: NodeId) -> Option<&[NodeId]>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    pub parallel_edges_dropped: usize,
}

/// A complete labeled, undirected, simple graph held in one address space.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub(crate) symbols: Arc<SymbolTable>,
    pub(crate) nodes: BTreeMap<NodeId, NodeRecord>,
    pub(crate) edge_count: usize,
    pub(crate) report: LoadReport,
}

impl LabeledGraph {
    pub fn parse<R: BufRead>(source: R) -> Result<Self> {
        let records = parse_records(source)?;
        let mut builder = GraphBuilder::default();
        let mut declared: HashMap<u64, usize> = HashMap::new();
        for rec in &records {
            if let Record::Vertex { line, id, label } = rec {
                if declared.insert(*id, *line).is_some() {
                    return Err(Error::DuplicateNode { line: *line, id: *id });
                }
                builder.add_node(*id, label);
            }
        }
        for rec in &records {
            if let Record::Edge { line, src, dst } = rec {
                for endpoint in [src, dst] {
                    if !declared.contains_key(endpoint) {
                        return Err(Error::UndeclaredEndpoint {
                            line: *line,
                            id: *endpoint,
                        });
                    }
                }
                builder.add_edge(*src, *dst);
            }
        }
        builder.build()
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn report(&self) -> LoadReport {
        self.report
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    /// Each undirected edge once, as `(smaller, larger)`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.values().flat_map(|rec| {
            rec.neighbors
                .iter()
                .filter(move |&&n| n > rec.id)
                .map(move |&n| (rec.id, n))
        })
    }

    pub fn label_counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for rec in self.nodes.values() {
            *counts
                .entry(self.symbols.name(rec.label).to_string())
                .or_insert(0) += 1;
        }
        counts
    }

    /// Canonical text form: sorted `v` lines then sorted `e` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rec in self.nodes.values() {
            out.push_str(&format!("v {} {}\n", rec.id, self.symbols.name(rec.label)));
        }
        for (u, v) in self.edges() {
            out.push_str(&format!("e {u} {v}\n"));
        }
        out
    }
}

impl GraphAccess for LabeledGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().collect()
    }

    fn label_of(&self, id: NodeId) -> Option<&str> {
        self.nodes.get(&id).map(|r| self.symbols.name(r.label))
    }

    fn neighbors_of(&self, id: NodeId) -> Option<&[NodeId]> {
        self.nodes.get(&id).map(|r| r.neighbors.as_slice())
    }
}

/// Incremental construction of a [`LabeledGraph`]; symmetrizes edges and
/// drops self-loops and parallel edges.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    symbols: SymbolTable,
    labels: BTreeMap<NodeId, LabelId>,
    edges: Vec<(NodeId, NodeId)>,
}

impl GraphBuilder {
    /// Re-declaring a node overwrites its label.
    pub fn add_node(&mut self, id: NodeId, label: &str) -> &mut Self {
        let label = self.symbols.intern(label);
        self.labels.insert(id, label);
        self
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> &mut Self {
        self.edges.push((u, v));
        self
    }

    pub fn build(self) -> Result<LabeledGraph> {
        let mut report = LoadReport::default();
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
            self.labels.keys().map(|&id| (id, BTreeSet::new())).collect();
        let mut edge_count = 0;
        for (u, v) in self.edges {
            if u == v {
                report.self_loops_dropped += 1;
                continue;
            }
            for endpoint in [u, v] {
                if !self.labels.contains_key(&endpoint) {
                    return Err(Error::UndeclaredEndpoint {
                        line: 0,
                        id: endpoint,
                    });
                }
            }
            let fresh = adjacency.get_mut(&u).expect("declared").insert(v);
            adjacency.get_mut(&v).expect("declared").insert(u);
            if fresh {
                edge_count += 1;
            } else {
                report.parallel_edges_dropped += 1;
            }
        }
        if report.self_loops_dropped > 0 {
            warn!("dropped {} self-loop(s)", report.self_loops_dropped);
        }
        if report.parallel_edges_dropped > 0 {
            warn!("dropped {} parallel edge(s)", report.parallel_edges_dropped);
        }
        let nodes = adjacency
            .into_iter()
            .map(|(id, nbrs)| {
                let rec = NodeRecord {
                    id,
                    label: self.labels[&id],
                    neighbors: nbrs.into_iter().collect(),
                };
                (id, rec)
            })
            .collect();
        Ok(LabeledGraph {
            symbols: Arc::new(self.symbols),
            nodes,
            edge_count,
            report,
        })
    }
}
