//! Exhaustive reference answers, deliberately independent of the engine.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::join::MatchTuple;
use crate::query::QueryGraph;
use crate::store::GraphAccess;
use crate::NodeId;

pub const ORACLE_MAX_NODES: usize = 2_000;
pub const COVER_MAX_NODES: usize = 12;

/// Every injective, label- and edge-preserving assignment of query nodes to
/// data nodes. Refuses graphs above [`ORACLE_MAX_NODES`].
pub fn oracle_match<G: GraphAccess>(graph: &G, query: &QueryGraph) -> Result<BTreeSet<MatchTuple>> {
    oracle_match_with_limit(graph, query, Some(ORACLE_MAX_NODES))
}

/// [`oracle_match`] with a custom node guard; `None` disables it.
pub fn oracle_match_with_limit<G: GraphAccess>(
    graph: &G,
    query: &QueryGraph,
    max_nodes: Option<usize>,
) -> Result<BTreeSet<MatchTuple>> {
    if let Some(max) = max_nodes {
        if graph.node_count() > max {
            return Err(Error::GuardExceeded(format!(
                "oracle refuses {} data nodes (limit {max})",
                graph.node_count()
            )));
        }
    }
    let mut by_label: HashMap<&str, Vec<NodeId>> = HashMap::new();
    for id in graph.node_ids() {
        if let Some(l) = graph.label_of(id) {
            by_label.entry(l).or_default().push(id);
        }
    }
    let n = query.node_count();
    let candidates: Vec<&[NodeId]> = (0..n)
        .map(|q| by_label.get(query.label(q)).map_or(&[][..], Vec::as_slice))
        .collect();

    // rarest label first, then always extend along a query edge
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let first = (0..n).min_by_key(|&q| (candidates[q].len(), q)).expect("query is nonempty");
    order.push(first);
    placed[first] = true;
    while order.len() < n {
        let next = (0..n)
            .filter(|&q| !placed[q] && query.neighbors(q).iter().any(|&p| placed[p]))
            .min_by_key(|&q| (candidates[q].len(), q))
            .expect("query is connected");
        order.push(next);
        placed[next] = true;
    }

    let mut out = BTreeSet::new();
    let mut assignment: Vec<Option<NodeId>> = vec![None; n];
    extend(graph, query, &order, &candidates, 0, &mut assignment, &mut out);
    Ok(out)
}

fn extend<G: GraphAccess>(
    graph: &G,
    query: &QueryGraph,
    order: &[usize],
    candidates: &[&[NodeId]],
    depth: usize,
    assignment: &mut Vec<Option<NodeId>>,
    out: &mut BTreeSet<MatchTuple>,
) {
    if depth == order.len() {
        out.insert(MatchTuple(assignment.iter().map(|a| a.expect("complete")).collect()));
        return;
    }
    let q = order[depth];
    let label = query.label(q);
    // walk the neighbors of an already-placed query neighbor when there is one
    let anchor = query.neighbors(q).iter().find_map(|&p| assignment[p]);
    let pool: Vec<NodeId> = match anchor {
        Some(a) => graph
            .neighbors_of(a)
            .unwrap_or(&[])
            .iter()
            .copied()
            .filter(|&m| graph.label_of(m) == Some(label))
            .collect(),
        None => candidates[q].to_vec(),
    };
    for v in pool {
        if assignment.contains(&Some(v)) {
            continue;
        }
        let edges_ok = query.neighbors(q).iter().all(|&p| match assignment[p] {
            Some(w) => graph.neighbors_of(v).is_some_and(|nb| nb.binary_search(&w).is_ok()),
            None => true,
        });
        if !edges_ok {
            continue;
        }
        assignment[q] = Some(v);
        extend(graph, query, order, candidates, depth + 1, assignment, out);
        assignment[q] = None;
    }
}

/// Size of a minimum vertex cover of the query, which equals the size of a
/// minimum STwig cover. Exhaustive; refuses more than [`COVER_MAX_NODES`] nodes.
pub fn brute_min_stwig_cover(query: &QueryGraph) -> Result<usize> {
    let n = query.node_count();
    if n > COVER_MAX_NODES {
        return Err(Error::GuardExceeded(format!(
            "exhaustive cover search refuses {n} query nodes (limit {COVER_MAX_NODES})"
        )));
    }
    let best = (0u32..1 << n)
        .filter(|mask| {
            query
                .edges()
                .iter()
                .all(|&(a, b)| mask & (1 << a) != 0 || mask & (1 << b) != 0)
        })
        .map(u32::count_ones)
        .min()
        .expect("the full node set is a cover");
    Ok(best as usize)
}
