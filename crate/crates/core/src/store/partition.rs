use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::sync::Arc;

use super::bus::MessageBus;
use super::catalog::LabelPairCatalog;
use super::graph::{GraphAccess, LabelId, LabeledGraph, NodeRecord, SymbolTable};
use crate::error::{Error, Result};
use crate::NodeId;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Node → machine assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    /// Seeded hash of the node id.
    Hashed { partitions: usize, seed: u64 },
    /// Fixed table, e.g. a hand-drawn layout. Every node must be listed.
    Explicit {
        partitions: usize,
        owners: HashMap<NodeId, usize>,
    },
}

impl Placement {
    pub fn hashed(partitions: usize, seed: u64) -> Self {
        Placement::Hashed { partitions, seed }
    }

    pub fn partitions(&self) -> usize {
        match self {
            Placement::Hashed { partitions, .. } | Placement::Explicit { partitions, .. } => {
                *partitions
            }
        }
    }

    pub fn owner(&self, id: NodeId) -> Option<usize> {
        match self {
            Placement::Hashed { partitions, seed } => {
                Some((splitmix64(id ^ splitmix64(*seed)) % *partitions as u64) as usize)
            }
            Placement::Explicit { owners, .. } => owners.get(&id).copied(),
        }
    }

    /// Reads `p <node> <partition>` lines; `#` starts a comment.
    pub fn parse_explicit<R: BufRead>(source: R, partitions: usize) -> Result<Self> {
        let mut owners = HashMap::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            let bad = || Error::Parse {
                line: lineno,
                message: "expected `p <node> <partition>`".into(),
            };
            if tokens.len() != 3 || tokens[0] != "p" {
                return Err(bad());
            }
            let id: NodeId = tokens[1].parse().map_err(|_| bad())?;
            let part: usize = tokens[2].parse().map_err(|_| bad())?;
            if part >= partitions {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("partition {part} out of range for K={partitions}"),
                });
            }
            if owners.insert(id, part).is_some() {
                return Err(Error::DuplicateNode { line: lineno, id });
            }
        }
        Ok(Placement::Explicit { partitions, owners })
    }
}

/// The slice of the graph held by one machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub id: usize,
    nodes: BTreeMap<NodeId, NodeRecord>,
    label_index: HashMap<LabelId, Vec<NodeId>>,
}

impl Partition {
    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Local node ids carrying `label`, ascending.
    pub fn index_get_ids(&self, label: LabelId) -> &[NodeId] {
        self.label_index.get(&label).map_or(&[], Vec::as_slice)
    }

    pub fn labels(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.label_index.keys().copied()
    }
}

/// An immutable labeled graph split across `K` simulated machines.
#[derive(Debug)]
pub struct PartitionedGraph {
    symbols: Arc<SymbolTable>,
    partitions: Vec<Partition>,
    placement: Placement,
    catalog: LabelPairCatalog,
    label_freq: Vec<u64>,
    edge_count: usize,
    bus: MessageBus,
}

impl PartitionedGraph {
    pub fn new(graph: LabeledGraph, placement: Placement) -> Result<Self> {
        let k = placement.partitions();
        if k == 0 {
            return Err(Error::InvalidArgument("partition count must be at least 1".into()));
        }
        let mut owner_of = HashMap::with_capacity(graph.nodes.len());
        for &id in graph.nodes.keys() {
            let owner = placement.owner(id).ok_or_else(|| {
                Error::InvalidArgument(format!("placement does not assign node {id}"))
            })?;
            if owner >= k {
                return Err(Error::InvalidArgument(format!(
                    "node {id} placed on partition {owner}, K={k}"
                )));
            }
            owner_of.insert(id, owner);
        }

        let mut catalog = LabelPairCatalog::default();
        let mut label_freq = vec![0u64; graph.symbols.len()];
        for rec in graph.nodes.values() {
            label_freq[rec.label.0 as usize] += 1;
            let i = owner_of[&rec.id];
            for n in &rec.neighbors {
                let other = &graph.nodes[n];
                catalog.record(rec.label, other.label, i, owner_of[n]);
            }
        }

        let mut partitions: Vec<Partition> = (0..k)
            .map(|id| Partition {
                id,
                nodes: BTreeMap::new(),
                label_index: HashMap::new(),
            })
            .collect();
        let edge_count = graph.edge_count;
        for (id, rec) in graph.nodes {
            let part = &mut partitions[owner_of[&id]];
            // ids arrive ascending, so index lists stay sorted
            part.label_index.entry(rec.label).or_default().push(id);
            part.nodes.insert(id, rec);
        }

        Ok(PartitionedGraph {
            symbols: graph.symbols,
            partitions,
            placement,
            catalog,
            label_freq,
            edge_count,
            bus: MessageBus::new(k),
        })
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition(&self, k: usize) -> &Partition {
        &self.partitions[k]
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn catalog(&self) -> &LabelPairCatalog {
        &self.catalog
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// The machine holding `id`, if `id` exists.
    pub fn owner(&self, id: NodeId) -> Option<usize> {
        let k = self.placement.owner(id)?;
        self.partitions.get(k)?.contains(id).then_some(k)
    }

    pub fn label_id(&self, label: &str) -> Option<LabelId> {
        self.symbols.get(label)
    }

    /// Number of data nodes carrying `label`.
    pub fn label_frequency(&self, label: &str) -> u64 {
        self.label_id(label)
            .map_or(0, |l| self.label_freq[l.0 as usize])
    }

    /// The graph's built-in message bus.
    pub fn bus(&self) -> &MessageBus {
        &self.bus
    }

    /// Atomic operators tallied against the built-in bus.
    pub fn cloud(&self) -> Cloud<'_> {
        Cloud {
            graph: self,
            bus: &self.bus,
        }
    }

    /// Atomic operators tallied against a caller-owned bus, so concurrent
    /// queries keep separate accounts.
    pub fn cloud_with<'a>(&'a self, bus: &'a MessageBus) -> Cloud<'a> {
        debug_assert_eq!(bus.partitions(), self.partitions.len());
        Cloud { graph: self, bus }
    }

    pub fn cloud_load(&self, id: NodeId, requester: usize) -> Result<&NodeRecord> {
        self.cloud().load(id, requester)
    }

    pub fn index_has_label(&self, id: NodeId, label: &str, requester: usize) -> Result<bool> {
        let cloud = self.cloud();
        match self.label_id(label) {
            Some(l) => cloud.has_label(id, l, requester),
            None => {
                // still a lookup against the owner
                cloud.load_label(id, requester)?;
                Ok(false)
            }
        }
    }

    fn record(&self, id: NodeId) -> Option<(usize, &NodeRecord)> {
        let k = self.placement.owner(id)?;
        self.partitions.get(k)?.nodes.get(&id).map(|r| (k, r))
    }

    /// Partition `k` as sorted `v` lines then sorted `e <local> <neighbor>` lines.
    pub fn dump_partition(&self, k: usize) -> String {
        let part = &self.partitions[k];
        let mut out = String::new();
        for rec in part.nodes.values() {
            out.push_str(&format!("v {} {}\n", rec.id, self.symbols.name(rec.label)));
        }
        for rec in part.nodes.values() {
            for n in &rec.neighbors {
                out.push_str(&format!("e {} {}\n", rec.id, n));
            }
        }
        out
    }
}

impl GraphAccess for PartitionedGraph {
    fn node_count(&self) -> usize {
        self.partitions.iter().map(Partition::len).sum()
    }

    fn node_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self
            .partitions
            .iter()
            .flat_map(|p| p.nodes.keys().copied())
            .collect();
        ids.sort_unstable();
        ids
    }

    fn label_of(&self, id: NodeId) -> Option<&str> {
        self.record(id).map(|(_, r)| self.symbols.name(r.label))
    }

    fn neighbors_of(&self, id: NodeId) -> Option<&[NodeId]> {
        self.record(id).map(|(_, r)| r.neighbors.as_slice())
    }
}

/// The three atomic graph operators, as seen from one machine.
#[derive(Clone, Copy)]
pub struct Cloud<'a> {
    graph: &'a PartitionedGraph,
    bus: &'a MessageBus,
}

impl<'a> Cloud<'a> {
    pub fn graph(&self) -> &'a PartitionedGraph {
        self.graph
    }

    pub fn bus(&self) -> &'a MessageBus {
        self.bus
    }

    /// `Cloud.Load(id)`: the node and its neighbor ids.
    pub fn load(&self, id: NodeId, requester: usize) -> Result<&'a NodeRecord> {
        let (owner, rec) = self.graph.record(id).ok_or(Error::NodeNotFound(id))?;
        if owner != requester {
            self.bus.record_remote_load(requester);
        }
        Ok(rec)
    }

    /// `Index.hasLabel(id, label)`.
    pub fn has_label(&self, id: NodeId, label: LabelId, requester: usize) -> Result<bool> {
        Ok(self.load_label(id, requester)? == label)
    }

    fn load_label(&self, id: NodeId, requester: usize) -> Result<LabelId> {
        let (owner, rec) = self.graph.record(id).ok_or(Error::NodeNotFound(id))?;
        if owner != requester {
            self.bus.record_remote_label_check(requester);
        }
        Ok(rec.label)
    }

    /// `Index.getID(label)`, restricted to the requesting machine.
    pub fn get_ids(&self, partition: usize, label: LabelId) -> &'a [NodeId] {
        self.graph.partitions[partition].index_get_ids(label)
    }
}

/// Parses a graph file and partitions it by seeded hash.
pub fn load_graph<R: BufRead>(source: R, partitions: usize, placement_seed: u64) -> Result<PartitionedGraph> {
    if partitions == 0 {
        return Err(Error::InvalidArgument("partition count must be at least 1".into()));
    }
    let graph = LabeledGraph::parse(source)?;
    PartitionedGraph::new(graph, Placement::hashed(partitions, placement_seed))
}
