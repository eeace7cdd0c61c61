//! Multi-way natural join of STwig results on shared query nodes.

use std::collections::{HashMap, VecDeque};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcher::STwigResult;
use crate::NodeId;

pub const DEFAULT_SAMPLE_RATE: f64 = 0.1;
pub const MIN_SAMPLE: usize = 100;
pub const DEFAULT_BLOCK_SIZE: usize = 4096;

/// A complete query-node → data-node assignment, indexed by query node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchTuple(pub Vec<NodeId>);

impl MatchTuple {
    pub fn get(&self, qnode: usize) -> NodeId {
        self.0[qnode]
    }

    pub fn is_injective(&self) -> bool {
        let mut v = self.0.clone();
        v.sort_unstable();
        v.windows(2).all(|w| w[0] != w[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinPlan {
    /// Positions into the relation list, in join order.
    pub order: Vec<usize>,
    /// Estimated size of each join prefix; `estimated_sizes[0]` is the driver.
    pub estimated_sizes: Vec<f64>,
    pub sample_rate: f64,
}

type Partial = Vec<Option<NodeId>>;

/// Hash index over one relation, keyed on the query nodes it shares with
/// everything joined before it.
struct Probe<'a> {
    relation: &'a STwigResult,
    /// (column in relation, query node) of join-key columns
    key: Vec<(usize, usize)>,
    /// (column in relation, query node) of columns that bind new query nodes
    fresh: Vec<(usize, usize)>,
    table: HashMap<Vec<NodeId>, Vec<usize>>,
}

impl<'a> Probe<'a> {
    fn new(relation: &'a STwigResult, bound: &[bool]) -> Self {
        let mut key = Vec::new();
        let mut fresh = Vec::new();
        for (col, &q) in relation.schema.iter().enumerate() {
            if bound[q] {
                key.push((col, q));
            } else {
                fresh.push((col, q));
            }
        }
        let mut table: HashMap<Vec<NodeId>, Vec<usize>> = HashMap::new();
        for (row, t) in relation.tuples.iter().enumerate() {
            let k: Vec<NodeId> = key.iter().map(|&(c, _)| t[c]).collect();
            table.entry(k).or_default().push(row);
        }
        Probe {
            relation,
            key,
            fresh,
            table,
        }
    }

    /// Calls `emit` for every injective extension of `partial`.
    fn extend(&self, partial: &mut Partial, emit: &mut dyn FnMut(&mut Partial) -> bool) -> bool {
        let k: Vec<NodeId> = self
            .key
            .iter()
            .map(|&(_, q)| partial[q].expect("key column bound"))
            .collect();
        let Some(rows) = self.table.get(&k) else {
            return true;
        };
        'rows: for &row in rows {
            let t = &self.relation.tuples[row];
            for &(c, _) in &self.fresh {
                if partial.iter().any(|x| *x == Some(t[c])) {
                    continue 'rows;
                }
            }
            for &(c, q) in &self.fresh {
                partial[q] = Some(t[c]);
            }
            let go_on = emit(partial);
            for &(_, q) in &self.fresh {
                partial[q] = None;
            }
            if !go_on {
                return false;
            }
        }
        true
    }
}

fn seed_partial(relation: &STwigResult, row: usize, width: usize) -> Partial {
    let mut p = vec![None; width];
    for (c, &q) in relation.schema.iter().enumerate() {
        p[q] = Some(relation.tuples[row][c]);
    }
    p
}

fn shares_node(relation: &STwigResult, bound: &[bool]) -> bool {
    relation.schema.iter().any(|&q| bound[q])
}

/// Greedy join order from sampled size estimates.
///
/// Starts from `head` if given, else from the smallest relation. Each step
/// joins a sample of the current intermediate result against every connected
/// candidate and appends the one with the smallest estimated output; ties go
/// to the smaller relation, then the lower position.
pub fn select_join_order(
    relations: &[STwigResult],
    query_nodes: usize,
    head: Option<usize>,
    sample_rate: f64,
    seed: u64,
) -> Result<JoinPlan> {
    if relations.is_empty() {
        return Err(Error::InvalidArgument("nothing to join".into()));
    }
    if !(sample_rate > 0.0 && sample_rate <= 1.0) {
        return Err(Error::InvalidArgument(format!("sample rate {sample_rate} not in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = match head {
        Some(h) if h < relations.len() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("head {h} out of range"))),
        None => (0..relations.len())
            .min_by_key(|&i| (relations[i].len(), i))
            .expect("nonempty"),
    };

    let mut order = vec![start];
    let mut used = vec![false; relations.len()];
    used[start] = true;
    let mut bound = vec![false; query_nodes];
    for &q in &relations[start].schema {
        bound[q] = true;
    }
    let mut estimate = relations[start].len() as f64;
    let mut estimates = vec![estimate];
    let mut sample_rows: Vec<Partial> = (0..relations[start].len())
        .map(|r| seed_partial(&relations[start], r, query_nodes))
        .collect();
    sample_rows = subsample(sample_rows, sample_rate, &mut rng);

    while order.len() < relations.len() {
        let mut best: Option<(f64, usize, usize, Vec<Partial>)> = None;
        for cand in 0..relations.len() {
            if used[cand] || !shares_node(&relations[cand], &bound) {
                continue;
            }
            let probe = Probe::new(&relations[cand], &bound);
            let mut joined = Vec::new();
            for p in &sample_rows {
                let mut p = p.clone();
                probe.extend(&mut p, &mut |full| {
                    joined.push(full.clone());
                    true
                });
            }
            let est = if sample_rows.is_empty() {
                0.0
            } else {
                joined.len() as f64 * estimate / sample_rows.len() as f64
            };
            let better = match &best {
                None => true,
                Some((b_est, b_size, b_idx, _)) => {
                    (est, relations[cand].len(), cand) < (*b_est, *b_size, *b_idx)
                }
            };
            if better {
                best = Some((est, relations[cand].len(), cand, joined));
            }
        }
        let Some((est, _, chosen, joined)) = best else {
            return Err(Error::Internal(
                "join graph is disconnected; the STwigs do not form a cover of a connected query".into(),
            ));
        };
        used[chosen] = true;
        for &q in &relations[chosen].schema {
            bound[q] = true;
        }
        order.push(chosen);
        estimate = est;
        estimates.push(est);
        sample_rows = subsample(joined, sample_rate, &mut rng);
    }

    Ok(JoinPlan {
        order,
        estimated_sizes: estimates,
        sample_rate,
    })
}

/// Keeps `max(MIN_SAMPLE, rate * n)` rows (all of them if fewer), uniformly.
fn subsample(rows: Vec<Partial>, rate: f64, rng: &mut ChaCha8Rng) -> Vec<Partial> {
    let n = rows.len();
    let want = ((rate * n as f64).ceil() as usize).max(MIN_SAMPLE);
    if want >= n {
        return rows;
    }
    let mut picked: Vec<usize> = sample(rng, n, want).into_vec();
    picked.sort_unstable();
    let mut rows: Vec<Option<Partial>> = rows.into_iter().map(Some).collect();
    picked.into_iter().map(|i| rows[i].take().expect("distinct")).collect()
}

/// Streams complete matches, processing the driving relation block by block.
pub struct JoinStream<'a> {
    driver: &'a STwigResult,
    probes: Vec<Probe<'a>>,
    width: usize,
    block_size: usize,
    next_row: usize,
    buffer: VecDeque<MatchTuple>,
    remaining: Option<usize>,
    blocks_done: usize,
}

impl JoinStream<'_> {
    /// Driver blocks consumed so far.
    pub fn blocks_processed(&self) -> usize {
        self.blocks_done
    }

    fn fill(&mut self) {
        while self.buffer.is_empty() && self.next_row < self.driver.len() {
            if self.remaining == Some(0) {
                return;
            }
            let end = (self.next_row + self.block_size).min(self.driver.len());
            let cap = self.remaining;
            let mut out = Vec::new();
            for row in self.next_row..end {
                let mut partial = seed_partial(self.driver, row, self.width);
                if !descend(&self.probes, 0, &mut partial, &mut out, cap) {
                    break;
                }
            }
            self.next_row = end;
            self.blocks_done += 1;
            if let Some(r) = &mut self.remaining {
                *r -= out.len();
            }
            self.buffer.extend(out);
        }
    }
}

fn descend(
    probes: &[Probe<'_>],
    depth: usize,
    partial: &mut Partial,
    out: &mut Vec<MatchTuple>,
    cap: Option<usize>,
) -> bool {
    if cap.is_some_and(|c| out.len() >= c) {
        return false;
    }
    if depth == probes.len() {
        out.push(MatchTuple(
            partial.iter().map(|x| x.expect("complete assignment")).collect(),
        ));
        return cap.is_none_or(|c| out.len() < c);
    }
    probes[depth].extend(partial, &mut |p| descend(probes, depth + 1, p, out, cap))
}

impl Iterator for JoinStream<'_> {
    type Item = MatchTuple;

    fn next(&mut self) -> Option<MatchTuple> {
        self.fill();
        self.buffer.pop_front()
    }
}

/// Joins `relations` in `plan` order. Every query node in `0..query_nodes`
/// must appear in some relation.
pub fn pipelined_join<'a>(
    relations: &'a [STwigResult],
    query_nodes: usize,
    plan: &JoinPlan,
    block_size: usize,
    limit: Option<usize>,
) -> Result<JoinStream<'a>> {
    if block_size == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let mut seen = vec![false; relations.len()];
    for &i in &plan.order {
        if i >= relations.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument("join order is not a permutation".into()));
        }
    }
    if plan.order.len() != relations.len() {
        return Err(Error::InvalidArgument("join order is not a permutation".into()));
    }
    let driver = &relations[plan.order[0]];
    let mut bound = vec![false; query_nodes];
    for &q in &driver.schema {
        bound[q] = true;
    }
    let mut probes = Vec::with_capacity(plan.order.len() - 1);
    for &i in &plan.order[1..] {
        if !shares_node(&relations[i], &bound) {
            return Err(Error::InvalidArgument(format!(
                "relation {i} shares no query node with the join prefix"
            )));
        }
        probes.push(Probe::new(&relations[i], &bound));
        for &q in &relations[i].schema {
            bound[q] = true;
        }
    }
    if let Some(q) = bound.iter().position(|b| !b) {
        return Err(Error::InvalidArgument(format!("query node {q} is not covered by any relation")));
    }
    Ok(JoinStream {
        driver,
        probes,
        width: query_nodes,
        block_size,
        next_row: 0,
        buffer: VecDeque::new(),
        remaining: limit,
        blocks_done: 0,
    })
}
