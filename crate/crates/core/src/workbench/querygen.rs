//! Query workloads: DFS prefixes of the data graph, and random connected shapes.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::query::QueryGraph;
use crate::store::GraphAccess;
use crate::NodeId;

pub const DEFAULT_QUERY_NODES: usize = 10;
pub const DEFAULT_QUERY_EDGES: usize = 20;
pub const DFS_RETRIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DfsEdges {
    /// Every data edge among the kept nodes.
    #[default]
    Induced,
    /// Only the DFS tree edges.
    Tree,
}

/// A DFS-sampled query together with the data nodes it came from.
#[derive(Debug, Clone)]
pub struct DfsQuery {
    pub query: QueryGraph,
    /// `embedding[i]` is the data node behind query node `i`.
    pub embedding: Vec<NodeId>,
}

/// Keeps the first `n` nodes of a randomized DFS from a random start. Query
/// node `i` is the `i`-th node visited and carries its data label.
pub fn gen_query_dfs<G: GraphAccess>(graph: &G, n: usize, seed: u64, edges: DfsEdges) -> Result<DfsQuery> {
    if n < 2 {
        return Err(Error::InvalidArgument("a DFS query needs at least 2 nodes".into()));
    }
    let ids = graph.node_ids();
    if ids.is_empty() {
        return Err(Error::InvalidArgument("graph has no nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..DFS_RETRIES {
        let start = ids[rng.gen_range(0..ids.len())];
        if let Some((visited, tree)) = dfs_prefix(graph, start, n, &mut rng) {
            return Ok(build_dfs_query(graph, visited, tree, edges));
        }
    }
    Err(Error::RetriesExhausted {
        attempts: DFS_RETRIES,
        what: format!("finding a start node that reaches {n} nodes"),
    })
}

type TreeEdges = Vec<(usize, usize)>;

fn dfs_prefix<G: GraphAccess>(graph: &G, start: NodeId, n: usize, rng: &mut ChaCha8Rng) -> Option<(Vec<NodeId>, TreeEdges)> {
    let mut order: HashMap<NodeId, usize> = HashMap::new();
    let mut visited = Vec::with_capacity(n);
    let mut tree = Vec::with_capacity(n - 1);
    // (node, parent position)
    let mut stack: Vec<(NodeId, Option<usize>)> = vec![(start, None)];
    while let Some((v, parent)) = stack.pop() {
        if order.contains_key(&v) {
            continue;
        }
        let pos = visited.len();
        order.insert(v, pos);
        visited.push(v);
        if let Some(p) = parent {
            tree.push((p, pos));
        }
        if visited.len() == n {
            return Some((visited, tree));
        }
        let mut nbrs: Vec<NodeId> = graph
            .neighbors_of(v)
            .unwrap_or(&[])
            .iter()
            .copied()
            .filter(|m| !order.contains_key(m))
            .collect();
        nbrs.shuffle(rng);
        stack.extend(nbrs.into_iter().map(|m| (m, Some(pos))));
    }
    None
}

fn build_dfs_query<G: GraphAccess>(graph: &G, visited: Vec<NodeId>, tree: TreeEdges, edges: DfsEdges) -> DfsQuery {
    let nodes: Vec<(u64, String)> = visited
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as u64, graph.label_of(v).expect("visited node exists").to_string()))
        .collect();
    let qedges: Vec<(u64, u64)> = match edges {
        DfsEdges::Tree => tree.into_iter().map(|(a, b)| (a as u64, b as u64)).collect(),
        DfsEdges::Induced => {
            let pos: HashMap<NodeId, usize> = visited.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let mut out = Vec::new();
            for (i, &v) in visited.iter().enumerate() {
                for m in graph.neighbors_of(v).unwrap_or(&[]) {
                    if let Some(&j) = pos.get(m) {
                        if i < j {
                            out.push((i as u64, j as u64));
                        }
                    }
                }
            }
            out
        }
    };
    let query = QueryGraph::new(nodes, qedges).expect("a DFS prefix is connected and simple");
    DfsQuery {
        query,
        embedding: visited,
    }
}

/// A random spanning tree on `n` nodes plus random extra edges up to `e`,
/// with labels drawn uniformly from `labels`. Query node ids are `0..n`.
pub fn gen_query_random(n: usize, e: usize, labels: &[String], seed: u64) -> Result<QueryGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument("a random query needs at least 2 nodes".into()));
    }
    let max = n * (n - 1) / 2;
    if e < n - 1 || e > max {
        return Err(Error::InvalidArgument(format!(
            "{e} edges on {n} nodes: need between {} and {max}",
            n - 1
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("label pool is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 1..n {
        let parent = perm[rng.gen_range(0..i)];
        let child = perm[i];
        edges.insert((parent.min(child), parent.max(child)));
    }
    let absent: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|p| !edges.contains(p))
        .collect();
    for i in sample(&mut rng, absent.len(), e - (n - 1)) {
        edges.insert(absent[i]);
    }
    let nodes = (0..n)
        .map(|i| (i as u64, labels[rng.gen_range(0..labels.len())].clone()))
        .collect();
    let edges = edges.into_iter().map(|(a, b)| (a as u64, b as u64)).collect();
    QueryGraph::new(nodes, edges)
}

/// Distinct labels present in `graph`, sorted.
pub fn label_pool<G: GraphAccess>(graph: &G) -> Vec<String> {
    let set: HashSet<&str> = graph
        .node_ids()
        .into_iter()
        .filter_map(|id| graph.label_of(id))
        .collect();
    let mut pool: Vec<String> = set.into_iter().map(str::to_string).collect();
    pool.sort();
    pool
}
