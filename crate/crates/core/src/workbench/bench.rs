//! Batch timing over a grid of generated graphs and queries, reported as TSV.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Deserialize;

use crate::coordinator::{run_distributed_query, LoadSetPolicy, RunConfig};
use crate::error::Result;
use crate::matcher::BindingMode;
use crate::query::QueryGraph;
use crate::store::{LabeledGraph, PartitionedGraph, Placement};
use crate::workbench::querygen::{gen_query_dfs, gen_query_random, label_pool, DfsEdges};
use crate::workbench::rmat::{gen_rmat, RmatParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Dfs,
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub node_counts: Vec<usize>,
    pub avg_degrees: Vec<usize>,
    pub label_densities: Vec<f64>,
    pub partitions: Vec<usize>,
    pub modes: Vec<BindingMode>,
    pub load_sets: LoadSetPolicy,
    pub queries: usize,
    pub query_kind: QueryKind,
    pub query_nodes: usize,
    /// Random queries only.
    pub query_edges: usize,
    pub limit: Option<usize>,
    pub timeout_ms: Option<u64>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            node_counts: vec![10_000],
            avg_degrees: vec![16],
            label_densities: vec![0.01],
            partitions: vec![4],
            modes: vec![BindingMode::Global],
            load_sets: LoadSetPolicy::ClusterDistance,
            queries: 100,
            query_kind: QueryKind::Dfs,
            query_nodes: 10,
            query_edges: 20,
            limit: Some(1024),
            timeout_ms: Some(10_000),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub node_count: usize,
    pub avg_degree: usize,
    pub label_density: f64,
    pub partitions: usize,
    pub mode: BindingMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Timeout,
    /// The query could not be generated or run.
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub cell: Cell,
    pub query: usize,
    pub query_nodes: usize,
    pub query_edges: usize,
    pub matches: usize,
    pub elapsed: Duration,
    pub messages_fetch: u64,
    pub messages_haslabel: u64,
    pub messages_bindings: u64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub queries: usize,
    pub timeouts: usize,
    pub failures: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub mean_matches: f64,
    pub mean_messages: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<CellSummary>,
}

fn mode_name(m: BindingMode) -> &'static str {
    match m {
        BindingMode::Global => "global",
        BindingMode::Local => "local",
    }
}

impl BenchReport {
    /// Per-query table, a blank line, then the per-cell summary table.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "nodes\tavg_degree\tlabel_density\tK\tmode\tquery\tq_nodes\tq_edges\tmatches\telapsed_us\tmessages_fetch\tmessages_haslabel\tmessages_bindings\tstatus\n",
        );
        for r in &self.rows {
            let status = match r.status {
                RowStatus::Ok => "ok",
                RowStatus::Timeout => "timeout",
                RowStatus::Failed => "failed",
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.cell.node_count,
                r.cell.avg_degree,
                r.cell.label_density,
                r.cell.partitions,
                mode_name(r.cell.mode),
                r.query,
                r.query_nodes,
                r.query_edges,
                r.matches,
                r.elapsed.as_micros(),
                r.messages_fetch,
                r.messages_haslabel,
                r.messages_bindings,
                status
            );
        }
        out.push('\n');
        out.push_str("nodes\tavg_degree\tlabel_density\tK\tmode\tqueries\ttimeouts\tfailures\tmean_ms\tmedian_ms\tmean_matches\tmean_messages\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{:.1}\t{:.1}",
                s.cell.node_count,
                s.cell.avg_degree,
                s.cell.label_density,
                s.cell.partitions,
                mode_name(s.cell.mode),
                s.queries,
                s.timeouts,
                s.failures,
                s.mean_ms,
                s.median_ms,
                s.mean_matches,
                s.mean_messages
            );
        }
        out
    }
}

fn summarize(cell: Cell, rows: &[BenchRow]) -> CellSummary {
    let mut ms: Vec<f64> = rows
        .iter()
        .filter(|r| r.status != RowStatus::Failed)
        .map(|r| r.elapsed.as_secs_f64() * 1e3)
        .collect();
    ms.sort_by(f64::total_cmp);
    let mean = |xs: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };
    let median = match ms.len() {
        0 => 0.0,
        n if n % 2 == 1 => ms[n / 2],
        n => (ms[n / 2 - 1] + ms[n / 2]) / 2.0,
    };
    let ok = || rows.iter().filter(|r| r.status != RowStatus::Failed);
    CellSummary {
        cell,
        queries: rows.len(),
        timeouts: rows.iter().filter(|r| r.status == RowStatus::Timeout).count(),
        failures: rows.iter().filter(|r| r.status == RowStatus::Failed).count(),
        mean_ms: mean(&mut ms.iter().copied()),
        median_ms: median,
        mean_matches: mean(&mut ok().map(|r| r.matches as f64)),
        mean_messages: mean(&mut ok().map(|r| {
            (r.messages_fetch + r.messages_haslabel + r.messages_bindings) as f64
        })),
    }
}

fn query_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn gen_queries(config: &BenchConfig, graph: &LabeledGraph) -> Vec<Option<QueryGraph>> {
    let pool = label_pool(graph);
    (0..config.queries)
        .map(|i| {
            let seed = query_seed(config.seed, i);
            let q = match config.query_kind {
                QueryKind::Dfs => gen_query_dfs(graph, config.query_nodes, seed, DfsEdges::Induced).map(|d| d.query),
                QueryKind::Random => gen_query_random(config.query_nodes, config.query_edges, &pool, seed),
            };
            q.map_err(|e| log::warn!("query {i}: {e}")).ok()
        })
        .collect()
}

/// Runs every query of every cell. Per-query problems become rows with a
/// non-ok status; only invalid grid parameters abort the run.
pub fn bench(config: &BenchConfig) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    let run = RunConfig {
        load_sets: config.load_sets,
        limit: config.limit,
        timeout: config.timeout_ms.map(Duration::from_millis),
        seed: config.seed,
        ..RunConfig::default()
    };
    for &n in &config.node_counts {
        for &deg in &config.avg_degrees {
            for &density in &config.label_densities {
                let params = RmatParams::with_density(n, deg, density, config.seed);
                log::info!("generating R-MAT graph: {n} nodes, degree {deg}, label density {density}");
                let graph = gen_rmat(&params)?;
                let queries = gen_queries(config, &graph);
                for &k in &config.partitions {
                    let pg = PartitionedGraph::new(graph.clone(), Placement::hashed(k, config.seed))?;
                    for &mode in &config.modes {
                        let cell = Cell {
                            node_count: n,
                            avg_degree: deg,
                            label_density: density,
                            partitions: k,
                            mode,
                        };
                        let rows = run_cell(cell, &pg, &queries, &RunConfig { mode, ..run.clone() });
                        report.summaries.push(summarize(cell, &rows));
                        report.rows.extend(rows);
                    }
                }
            }
        }
    }
    Ok(report)
}

fn run_cell(cell: Cell, graph: &PartitionedGraph, queries: &[Option<QueryGraph>], run: &RunConfig) -> Vec<BenchRow> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut row = BenchRow {
                cell,
                query: i,
                query_nodes: 0,
                query_edges: 0,
                matches: 0,
                elapsed: Duration::ZERO,
                messages_fetch: 0,
                messages_haslabel: 0,
                messages_bindings: 0,
                status: RowStatus::Failed,
            };
            let Some(q) = q else { return row };
            row.query_nodes = q.node_count();
            row.query_edges = q.edge_count();
            match run_distributed_query(graph, q, run) {
                Ok(out) => {
                    let s = out.stats;
                    row.matches = s.matches;
                    row.elapsed = s.elapsed;
                    row.messages_fetch = s.messages_fetch;
                    row.messages_haslabel = s.messages_haslabel;
                    row.messages_bindings = s.messages_bindings;
                    row.status = if s.timed_out { RowStatus::Timeout } else { RowStatus::Ok };
                }
                Err(e) => log::warn!("query {i}: {e}"),
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            node_counts: vec![300],
            avg_degrees: vec![4],
            label_densities: vec![0.02],
            partitions: vec![2],
            queries: 5,
            query_nodes: 4,
            timeout_ms: None,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn one_row_per_query_and_one_summary_per_cell() {
        let report = bench(&small()).unwrap();
        assert_eq!(report.rows.len(), 5);
        assert_eq!(report.summaries.len(), 1);
        assert!(report.rows.iter().all(|r| r.status == RowStatus::Ok && r.matches >= 1));
        let tsv = report.to_tsv();
        assert_eq!(tsv.lines().count(), 1 + 5 + 1 + 1 + 1);
    }

    #[test]
    fn reruns_agree_on_match_counts() {
        let a: Vec<usize> = bench(&small()).unwrap().rows.iter().map(|r| r.matches).collect();
        let b: Vec<usize> = bench(&small()).unwrap().rows.iter().map(|r| r.matches).collect();
        assert_eq!(a, b);
    }
}
