//! Partitioned, labeled, undirected in-memory graph store.

mod bus;
mod catalog;
mod graph;
mod partition;
pub(crate) mod text;

pub use bus::{MessageBus, MessageCounts};
pub use catalog::{CatalogEntry, LabelPairCatalog};
pub use graph::{GraphAccess, GraphBuilder, LabelId, LabeledGraph, LoadReport, NodeRecord, SymbolTable};
pub use partition::{load_graph, Cloud, Partition, PartitionedGraph, Placement};
