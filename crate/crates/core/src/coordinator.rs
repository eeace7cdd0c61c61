//! Distributed query driver.
//!
//! Pipeline: decompose → pick head STwig and load sets from the cluster graph
//! → explore on every partition → each machine assembles `R_k(q_i)` from its
//! own results plus those of the machines in its load set → per-machine join
//! anchored on the local head results → concatenate.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::decompose::{stwig_order_selection, FreqTable};
use crate::error::{Error, Result};
use crate::join::{pipelined_join, select_join_order, MatchTuple, DEFAULT_BLOCK_SIZE, DEFAULT_SAMPLE_RATE};
use crate::matcher::{explore_until, BindingMode, STwigResult};
use crate::query::{Decomposition, QueryGraph, STwig};
use crate::store::{LabelId, LabelPairCatalog, MessageBus, PartitionedGraph};
use crate::ExactScore;

/// Machine-level connectivity relevant to one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterGraph {
    machines: usize,
    edges: BTreeSet<(usize, usize)>,
    /// `None` is infinity.
    distances: Vec<Vec<Option<u32>>>,
}

impl ClusterGraph {
    pub fn from_edges(machines: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .filter(|(i, j)| i != j)
            .map(|(i, j)| (i.min(j), i.max(j)))
            .collect();
        let mut adj = vec![Vec::new(); machines];
        for &(i, j) in &edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let distances = (0..machines)
            .map(|src| {
                let mut dist = vec![None; machines];
                dist[src] = Some(0);
                let mut queue = VecDeque::from([src]);
                while let Some(u) = queue.pop_front() {
                    let du = dist[u].expect("visited");
                    for &v in &adj[u] {
                        if dist[v].is_none() {
                            dist[v] = Some(du + 1);
                            queue.push_back(v);
                        }
                    }
                }
                dist
            })
            .collect();
        ClusterGraph {
            machines,
            edges,
            distances,
        }
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    /// Undirected edges as `(smaller, larger)`.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<u32> {
        self.distances[i][j]
    }

    /// `D_C(i, j) <= bound`; infinity never qualifies.
    pub fn within(&self, i: usize, j: usize, bound: u32) -> bool {
        self.distances[i][j].is_some_and(|d| d <= bound)
    }
}

/// Cluster graph from catalog lookups only: `i–j` iff some query edge's label
/// pair was seen on an edge between machines `i` and `j`.
pub fn build_cluster_graph(catalog: &LabelPairCatalog, query: &QueryGraph, labels: &[LabelId], machines: usize) -> ClusterGraph {
    let mut edges = BTreeSet::new();
    for &(x, y) in query.edges() {
        for (i, j) in catalog.machine_pairs(labels[x], labels[y]) {
            if i != j {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    ClusterGraph::from_edges(machines, edges)
}

/// Hop-count shortest paths between query nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryDistanceMatrix {
    dist: Vec<Vec<u32>>,
}

impl QueryDistanceMatrix {
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.dist[u][v]
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }
}

/// Floyd–Warshall over unit edge weights. Queries are connected, so every
/// entry ends up finite.
pub fn query_distances(query: &QueryGraph) -> QueryDistanceMatrix {
    const INF: u32 = u32::MAX / 2;
    let n = query.node_count();
    let mut dist = vec![vec![INF; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in query.edges() {
        dist[a][b] = 1;
        dist[b][a] = 1;
    }
    for k in 0..n {
        let via = dist[k].clone();
        for row in dist.iter_mut() {
            let dik = row[k];
            if dik == INF {
                continue;
            }
            for (dij, &dkj) in row.iter_mut().zip(&via) {
                *dij = (*dij).min(dik + dkj);
            }
        }
    }
    QueryDistanceMatrix { dist }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadChoice {
    pub index: usize,
    /// `d(s)`: farthest root from the head's root.
    pub radius: u32,
    /// `T(s)`: total machine pairs within `d(s)` in the cluster graph.
    pub cost: u64,
    /// `(d, T)` for every candidate, by STwig position.
    pub candidates: Vec<(u32, u64)>,
}

/// `T(s) = Σ_k |{ j : D_C(k, j) <= d(s) }|`, `j` ranging over all machines.
pub fn communication_cost(radius: u32, cluster: &ClusterGraph) -> u64 {
    let m = cluster.machines();
    (0..m)
        .map(|k| (0..m).filter(|&j| cluster.within(k, j, radius)).count() as u64)
        .sum()
}

/// Head STwig minimizing `T(s)`; ties to smaller `d(s)`, then smaller index.
pub fn select_head_stwig(stwigs: &[STwig], distances: &QueryDistanceMatrix, cluster: &ClusterGraph) -> HeadChoice {
    let candidates: Vec<(u32, u64)> = stwigs
        .iter()
        .map(|s| {
            let radius = stwigs
                .iter()
                .map(|t| distances.get(s.root, t.root))
                .max()
                .unwrap_or(0);
            (radius, communication_cost(radius, cluster))
        })
        .collect();
    let index = (0..stwigs.len())
        .min_by_key(|&i| (candidates[i].1, candidates[i].0, i))
        .unwrap_or(0);
    HeadChoice {
        index,
        radius: candidates.get(index).map_or(0, |c| c.0),
        cost: candidates.get(index).map_or(0, |c| c.1),
        candidates,
    }
}

/// `F[k][t]`: remote machines `k` must fetch STwig `t`'s matches from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadSetTable {
    pub head: usize,
    sets: Vec<Vec<BTreeSet<usize>>>,
}

impl LoadSetTable {
    pub fn get(&self, machine: usize, stwig: usize) -> &BTreeSet<usize> {
        &self.sets[machine][stwig]
    }

    pub fn machines(&self) -> usize {
        self.sets.len()
    }

    /// Machines `k` fetches anything from; one message each.
    pub fn peers(&self, machine: usize) -> BTreeSet<usize> {
        self.sets[machine].iter().flatten().copied().collect()
    }

    /// Every remote machine for every non-head STwig.
    pub fn fetch_all(head: usize, stwigs: usize, machines: usize) -> Self {
        let sets = (0..machines)
            .map(|k| {
                (0..stwigs)
                    .map(|t| {
                        if t == head {
                            BTreeSet::new()
                        } else {
                            (0..machines).filter(|&j| j != k).collect()
                        }
                    })
                    .collect()
            })
            .collect();
        LoadSetTable { head, sets }
    }
}

/// `F(k, t) = { j != k : D_C(k, j) <= d(root_head, root_t) }`, `F(k, head) = ∅`.
pub fn compute_load_sets(head: usize, stwigs: &[STwig], distances: &QueryDistanceMatrix, cluster: &ClusterGraph) -> LoadSetTable {
    let m = cluster.machines();
    let sets = (0..m)
        .map(|k| {
            stwigs
                .iter()
                .enumerate()
                .map(|(t, stwig)| {
                    if t == head {
                        return BTreeSet::new();
                    }
                    let bound = distances.get(stwigs[head].root, stwig.root);
                    (0..m)
                        .filter(|&j| j != k && cluster.within(k, j, bound))
                        .collect()
                })
                .collect()
        })
        .collect();
    LoadSetTable { head, sets }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
pub enum LoadSetPolicy {
    /// Distance-bounded load sets from the cluster graph.
    #[default]
    #[serde(rename = "on")]
    ClusterDistance,
    /// Fetch every non-head STwig from every other machine.
    #[serde(rename = "fetch-all")]
    FetchAll,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: BindingMode,
    pub load_sets: LoadSetPolicy,
    /// Global cap on emitted matches.
    pub limit: Option<usize>,
    pub block_size: usize,
    pub sample_rate: f64,
    pub seed: u64,
    /// Checked between pipeline stages and join blocks.
    pub timeout: Option<Duration>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: BindingMode::Global,
            load_sets: LoadSetPolicy::ClusterDistance,
            limit: None,
            block_size: DEFAULT_BLOCK_SIZE,
            sample_rate: DEFAULT_SAMPLE_RATE,
            seed: 0,
            timeout: None,
        }
    }
}

/// Per-query counters, always produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub partitions: usize,
    pub head: Option<usize>,
    pub head_radius: u32,
    pub head_cost: u64,
    pub messages_fetch: u64,
    pub messages_haslabel: u64,
    pub messages_bindings: u64,
    /// `Σ_k |G_k(q_i)|` per STwig.
    pub stwig_result_sizes: Vec<usize>,
    /// `|G_k(q_i)|`, `[k][i]`.
    pub partition_result_sizes: Vec<Vec<usize>>,
    /// Per-machine `R_k` sizes.
    pub machine_matches: Vec<usize>,
    /// Per-machine estimated join prefix sizes.
    pub join_estimates: Vec<Vec<f64>>,
    pub matches: usize,
    pub elapsed: Duration,
    pub timed_out: bool,
    pub missing_label: Option<String>,
}

impl RunStats {
    /// Flat `key=value` block, one pair per line.
    pub fn to_kv(&self) -> String {
        let sizes: Vec<String> = self.stwig_result_sizes.iter().map(|s| s.to_string()).collect();
        let head = self.head.map_or_else(|| "-".to_string(), |h| h.to_string());
        format!(
            "partitions={}\nhead={}\nd_s={}\nT_s={}\nmessages_fetch={}\nmessages_haslabel={}\nmessages_bindings={}\nstwig_result_sizes={}\nmatches={}\nelapsed_ms={}\n",
            self.partitions,
            head,
            self.head_radius,
            self.head_cost,
            self.messages_fetch,
            self.messages_haslabel,
            self.messages_bindings,
            sizes.join(","),
            self.matches,
            self.elapsed.as_millis(),
        )
    }
}

impl fmt::Display for RunStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv())
    }
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    /// Concatenation of the per-machine answers.
    pub matches: Vec<MatchTuple>,
    /// `R_k` for each machine.
    pub per_machine: Vec<Vec<MatchTuple>>,
    pub decomposition: Option<Decomposition>,
    pub load_sets: Option<LoadSetTable>,
    pub cluster: Option<ClusterGraph>,
    pub stats: RunStats,
}

/// Answers `query` on `graph`.
pub fn run_distributed_query(graph: &PartitionedGraph, query: &QueryGraph, config: &RunConfig) -> Result<QueryOutcome> {
    if config.block_size == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let started = Instant::now();
    let deadline = config.timeout.map(|t| started + t);
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);
    let machines = graph.partition_count();
    let mut stats = RunStats {
        partitions: machines,
        ..RunStats::default()
    };
    let empty = |stats: RunStats| QueryOutcome {
        matches: Vec::new(),
        per_machine: vec![Vec::new(); machines],
        decomposition: None,
        load_sets: None,
        cluster: None,
        stats,
    };

    let labels = match query.resolve_labels(graph) {
        Ok(l) => l,
        Err(missing) => {
            stats.missing_label = Some(missing);
            stats.elapsed = started.elapsed();
            return Ok(empty(stats));
        }
    };

    let freqs = FreqTable::from_graph(graph);
    let mut decomposition = stwig_order_selection::<ExactScore>(query, &freqs);
    let distances = query_distances(query);
    let cluster = build_cluster_graph(graph.catalog(), query, &labels, machines);
    let head = select_head_stwig(&decomposition.stwigs, &distances, &cluster);
    decomposition.head = Some(head.index);
    stats.head = Some(head.index);
    stats.head_radius = head.radius;
    stats.head_cost = head.cost;
    let load_sets = match config.load_sets {
        LoadSetPolicy::ClusterDistance => compute_load_sets(head.index, &decomposition.stwigs, &distances, &cluster),
        LoadSetPolicy::FetchAll => LoadSetTable::fetch_all(head.index, decomposition.len(), machines),
    };

    let bus = MessageBus::new(machines);
    let cloud = graph.cloud_with(&bus);
    let exploration = match explore_until(&cloud, &labels, &decomposition, config.mode, deadline) {
        Ok(ex) => ex,
        Err(Error::DeadlineExceeded) => {
            stats.timed_out = true;
            finish_stats(&mut stats, &bus, started);
            stats.machine_matches = vec![0; machines];
            let mut out = empty(stats);
            out.decomposition = Some(decomposition);
            out.load_sets = Some(load_sets);
            out.cluster = Some(cluster);
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    stats.stwig_result_sizes = exploration.stwig_sizes();
    stats.partition_result_sizes = exploration
        .results
        .iter()
        .map(|per| per.iter().map(STwigResult::len).collect())
        .collect();

    let mut outcome = QueryOutcome {
        matches: Vec::new(),
        per_machine: vec![Vec::new(); machines],
        decomposition: Some(decomposition.clone()),
        load_sets: Some(load_sets.clone()),
        cluster: Some(cluster),
        stats: RunStats::default(),
    };

    let answerless = match config.mode {
        BindingMode::Global => exploration.is_empty_answer(),
        BindingMode::Local => false,
    };
    if answerless || expired() {
        stats.timed_out = expired();
        finish_stats(&mut stats, &bus, started);
        stats.machine_matches = vec![0; machines];
        outcome.stats = stats;
        return Ok(outcome);
    }

    // Fetch: one message per (k, k') pair covering every STwig k needs from k'.
    for k in 0..machines {
        let peers = load_sets.peers(k).len() as u64;
        if peers > 0 {
            bus.record_result_fetch(k, peers);
        }
    }
    let assembled: Vec<Vec<STwigResult>> = (0..machines)
        .map(|k| {
            (0..decomposition.len())
                .map(|i| {
                    let sources = std::iter::once(k).chain(load_sets.get(k, i).iter().copied());
                    STwigResult::merged(sources.map(|src| &exploration.results[src][i]))
                        .expect("at least the local result")
                })
                .collect()
        })
        .collect();

    let plans: Vec<_> = assembled
        .par_iter()
        .enumerate()
        .map(|(k, rels)| {
            select_join_order(
                rels,
                query.node_count(),
                Some(head.index),
                config.sample_rate,
                config.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            )
        })
        .collect::<Result<_>>()?;
    stats.join_estimates = plans.iter().map(|p| p.estimated_sizes.clone()).collect();

    let mut per_machine: Vec<Vec<MatchTuple>> = vec![Vec::new(); machines];
    let mut timed_out = false;
    match config.limit {
        None if deadline.is_none() => {
            per_machine = assembled
                .par_iter()
                .zip(&plans)
                .map(|(rels, plan)| {
                    Ok(pipelined_join(rels, query.node_count(), plan, config.block_size, None)?.collect())
                })
                .collect::<Result<_>>()?;
        }
        _ => {
            // sequential so the global limit and the deadline are exact
            let mut left = config.limit;
            'machines: for k in 0..machines {
                if left == Some(0) {
                    break;
                }
                let stream = pipelined_join(&assembled[k], query.node_count(), &plans[k], config.block_size, left)?;
                for (n, t) in stream.enumerate() {
                    if n % 1024 == 0 && expired() {
                        timed_out = true;
                        break 'machines;
                    }
                    per_machine[k].push(t);
                }
                if let Some(l) = &mut left {
                    *l -= per_machine[k].len();
                }
            }
        }
    }

    stats.machine_matches = per_machine.iter().map(Vec::len).collect();
    stats.timed_out = timed_out;
    outcome.matches = per_machine.iter().flatten().cloned().collect();
    stats.matches = outcome.matches.len();
    outcome.per_machine = per_machine;
    finish_stats(&mut stats, &bus, started);
    outcome.stats = stats;
    Ok(outcome)
}

fn finish_stats(stats: &mut RunStats, bus: &MessageBus, started: Instant) {
    let totals = bus.totals();
    stats.messages_fetch = totals.result_fetches;
    stats.messages_haslabel = totals.remote_label_checks;
    stats.messages_bindings = totals.binding_exchanges;
    stats.elapsed = started.elapsed();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str) -> QueryGraph {
        QueryGraph::parse(text.as_bytes()).unwrap()
    }

    #[test]
    fn self_distance_is_zero_and_path_distances_add() {
        let query = q("v 0 a\nv 1 b\nv 2 c\nv 3 d\ne 0 1\ne 1 2\ne 2 3\n");
        let m = query_distances(&query);
        for v in 0..4 {
            assert_eq!(m.get(v, v), 0);
        }
        assert_eq!(m.get(0, 3), 3);
        assert_eq!(m.get(3, 1), 2);
    }

    #[test]
    fn single_machine_cluster() {
        let c = ClusterGraph::from_edges(1, []);
        assert_eq!(c.distance(0, 0), Some(0));
        let stwigs = vec![STwig::new(0, vec![1]), STwig::new(1, vec![2])];
        let query = q("v 0 a\nv 1 b\nv 2 c\ne 0 1\ne 1 2\n");
        let h = select_head_stwig(&stwigs, &query_distances(&query), &c);
        assert_eq!(h.index, 0);
        assert_eq!(h.cost, 1);
        assert!(h.candidates.iter().all(|&(_, t)| t == 1));
        let f = compute_load_sets(0, &stwigs, &query_distances(&query), &c);
        assert!(f.get(0, 0).is_empty() && f.get(0, 1).is_empty());
    }

    #[test]
    fn complete_cluster_costs_k_squared() {
        let k = 5;
        let edges = (0..k).flat_map(|i| (0..k).map(move |j| (i, j)));
        let c = ClusterGraph::from_edges(k, edges);
        for d in 1..4 {
            assert_eq!(communication_cost(d, &c), (k * k) as u64);
        }
        assert_eq!(communication_cost(0, &c), k as u64);
    }

    #[test]
    fn unreachable_machines_never_enter_load_sets() {
        let c = ClusterGraph::from_edges(3, [(0, 1)]);
        assert_eq!(c.distance(0, 2), None);
        let query = q("v 0 a\nv 1 b\nv 2 c\ne 0 1\ne 1 2\n");
        let stwigs = vec![STwig::new(0, vec![1]), STwig::new(2, vec![1])];
        let f = compute_load_sets(0, &stwigs, &query_distances(&query), &c);
        assert_eq!(f.get(0, 1), &BTreeSet::from([1]));
        assert!(f.get(2, 1).is_empty());
        assert!(f.get(1, 0).is_empty());
    }

    #[test]
    fn expired_deadline_reports_a_timeout() {
        let g = crate::workbench::fixtures::four_machine_graph();
        let q = crate::workbench::fixtures::square_tail_query();
        let config = RunConfig {
            timeout: Some(Duration::ZERO),
            ..RunConfig::default()
        };
        let out = run_distributed_query(&g, &q, &config).unwrap();
        assert!(out.stats.timed_out);
        assert!(out.matches.is_empty());
    }

    #[test]
    fn missing_label_short_circuits_without_messages() {
        let g = crate::workbench::fixtures::four_machine_graph();
        let q = q("v 0 a\nv 1 zzz\ne 0 1\n");
        let out = run_distributed_query(&g, &q, &RunConfig::default()).unwrap();
        assert!(out.matches.is_empty());
        assert_eq!(out.stats.missing_label.as_deref(), Some("zzz"));
        assert_eq!(out.stats.messages_fetch + out.stats.messages_haslabel + out.stats.messages_bindings, 0);
    }

    #[test]
    fn stats_block_has_every_key() {
        let s = RunStats {
            partitions: 4,
            head: Some(1),
            stwig_result_sizes: vec![3, 0, 7],
            ..RunStats::default()
        };
        let kv = s.to_kv();
        for key in [
            "partitions=4",
            "head=1",
            "d_s=",
            "T_s=",
            "messages_fetch=",
            "messages_haslabel=",
            "messages_bindings=",
            "stwig_result_sizes=3,0,7",
            "matches=",
            "elapsed_ms=",
        ] {
            assert!(kv.contains(key), "{key} missing from {kv}");
        }
    }
}
