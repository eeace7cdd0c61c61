//! Small hand-built instances with known answers.

use crate::query::{Decomposition, QueryGraph, STwig};
use crate::store::{LabeledGraph, PartitionedGraph, Placement};

pub const DIAMOND_GRAPH: &str = include_str!("../../fixtures/diamond_graph.txt");
pub const DIAMOND_QUERY: &str = include_str!("../../fixtures/diamond_query.txt");
pub const SQUARE_TAIL_QUERY: &str = include_str!("../../fixtures/square_tail_query.txt");
pub const FOUR_MACHINE_GRAPH: &str = include_str!("../../fixtures/four_machine_graph.txt");
pub const FOUR_MACHINE_PLACEMENT: &str = include_str!("../../fixtures/four_machine_placement.txt");
pub const FRONTIER_QUERY: &str = include_str!("../../fixtures/frontier_query.txt");

/// Nine nodes, labels a–d; the diamond query has exactly two answers.
pub fn diamond_graph() -> LabeledGraph {
    LabeledGraph::parse(DIAMOND_GRAPH.as_bytes()).expect("fixture parses")
}

/// a–b, b–c, b–d, c–d with ids a=0, b=1, c=2, d=3.
pub fn diamond_query() -> QueryGraph {
    QueryGraph::parse(DIAMOND_QUERY.as_bytes()).expect("fixture parses")
}

/// Square a–b–d–c–a with a tail b–e, b–f, f–g; ids a=0 … g=6.
pub fn square_tail_query() -> QueryGraph {
    QueryGraph::parse(SQUARE_TAIL_QUERY.as_bytes()).expect("fixture parses")
}

/// The four-STwig cover of [`square_tail_query`]:
/// (a;b,c), (d;b,c), (b;e,f), (f;g).
pub fn square_tail_decomposition() -> Decomposition {
    Decomposition::new(vec![
        STwig::new(0, vec![1, 2]),
        STwig::new(3, vec![1, 2]),
        STwig::new(1, vec![4, 5]),
        STwig::new(5, vec![6]),
    ])
}

/// The three-STwig cover of [`square_tail_query`]: (b;a,d,e,f), (c;a,d), (f;g).
pub fn square_tail_compact_decomposition() -> Decomposition {
    Decomposition::new(vec![
        STwig::new(1, vec![0, 3, 4, 5]),
        STwig::new(2, vec![0, 3]),
        STwig::new(5, vec![6]),
    ])
}

pub fn four_machine_labeled() -> LabeledGraph {
    LabeledGraph::parse(FOUR_MACHINE_GRAPH.as_bytes()).expect("fixture parses")
}

/// Seventeen nodes spread over four machines by a fixed placement.
pub fn four_machine_graph() -> PartitionedGraph {
    let placement = Placement::parse_explicit(FOUR_MACHINE_PLACEMENT.as_bytes(), 4).expect("fixture parses");
    PartitionedGraph::new(four_machine_labeled(), placement).expect("every node is placed")
}

/// Six nodes d=0, c=1, b=2, f=3, a=4, e=5 with edges d–b, d–c, d–e, d–f,
/// c–a, c–f, b–a, b–f.
pub fn frontier_query() -> QueryGraph {
    QueryGraph::parse(FRONTIER_QUERY.as_bytes()).expect("fixture parses")
}

/// Readable name of a fixture data node, e.g. `21` → `c1`.
pub fn node_name(id: u64) -> String {
    let label = match id / 10 {
        0 => 'a',
        1 => 'b',
        2 => 'c',
        3 => 'd',
        4 => 'e',
        5 => 'f',
        6 => 'g',
        _ => return id.to_string(),
    };
    format!("{label}{}", id % 10)
}
