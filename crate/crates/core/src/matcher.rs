//! Per-partition STwig matching by exploration, with binding propagation.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::query::{Decomposition, STwig};
use crate::store::{Cloud, LabelId};
use crate::NodeId;

/// Sorted, duplicate-free set of data node ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct NodeSet(Vec<NodeId>);

impl NodeSet {
    pub fn contains(&self, id: NodeId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn intersect(&self, other: &NodeSet) -> NodeSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(self.len().min(other.len()));
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        NodeSet(out)
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut v: Vec<NodeId> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        NodeSet(v)
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut v: Vec<NodeId> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        NodeSet(v)
    }
}

/// Candidate set `H_x` of one query node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Binding {
    /// Every data node with the right label is still a candidate.
    #[default]
    Unbound,
    Bound(NodeSet),
}

impl Binding {
    pub fn admits(&self, id: NodeId) -> bool {
        match self {
            Binding::Unbound => true,
            Binding::Bound(set) => set.contains(id),
        }
    }

    pub fn set(&self) -> Option<&NodeSet> {
        match self {
            Binding::Unbound => None,
            Binding::Bound(s) => Some(s),
        }
    }

    /// Narrows to `incoming` (intersecting if already bound).
    fn narrow(&mut self, incoming: NodeSet) {
        *self = match std::mem::take(self) {
            Binding::Unbound => Binding::Bound(incoming),
            Binding::Bound(old) => Binding::Bound(old.intersect(&incoming)),
        };
    }
}

/// `H_x` for every query node, indexed by query node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingTable {
    slots: Vec<Binding>,
}

impl BindingTable {
    pub fn unbound(query_nodes: usize) -> Self {
        BindingTable {
            slots: vec![Binding::Unbound; query_nodes],
        }
    }

    pub fn get(&self, qnode: usize) -> &Binding {
        &self.slots[qnode]
    }

    pub fn bind(&mut self, qnode: usize, set: NodeSet) {
        self.slots[qnode].narrow(set);
    }

    /// Some query node has no candidates left, so the query has no answer.
    pub fn any_empty(&self) -> bool {
        self.slots
            .iter()
            .any(|b| matches!(b, Binding::Bound(s) if s.is_empty()))
    }

    pub fn all_bound(&self) -> bool {
        self.slots.iter().all(|b| matches!(b, Binding::Bound(_)))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// `G_k(q_i)`: the matches of one STwig found on one partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct STwigResult {
    pub stwig_index: usize,
    /// Query nodes per column: root, then leaves.
    pub schema: Vec<usize>,
    /// Sorted, distinct; each row is injective.
    pub tuples: Vec<Vec<NodeId>>,
}

impl STwigResult {
    pub fn empty(stwig_index: usize, stwig: &STwig) -> Self {
        STwigResult {
            stwig_index,
            schema: stwig.schema(),
            tuples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Distinct data nodes per column.
    pub fn column_sets(&self) -> Vec<NodeSet> {
        (0..self.schema.len())
            .map(|c| self.tuples.iter().map(|t| t[c]).collect())
            .collect()
    }

    /// Set union of several partitions' results for the same STwig.
    pub fn merged<'a>(parts: impl IntoIterator<Item = &'a STwigResult>) -> Option<STwigResult> {
        let mut iter = parts.into_iter();
        let first = iter.next()?;
        let mut tuples: BTreeSet<Vec<NodeId>> = first.tuples.iter().cloned().collect();
        for r in iter {
            debug_assert_eq!(r.schema, first.schema);
            tuples.extend(r.tuples.iter().cloned());
        }
        Some(STwigResult {
            stwig_index: first.stwig_index,
            schema: first.schema.clone(),
            tuples: tuples.into_iter().collect(),
        })
    }
}

/// Matches one STwig on one partition.
///
/// Roots are the local members of `H_root` if the root is bound, otherwise the
/// local nodes carrying the root label. For each root, each leaf collects the
/// neighbors that carry its label and pass its binding; the tuples are the
/// cross product of those sets with repeated data nodes discarded.
pub fn match_stwig(
    cloud: &Cloud<'_>,
    partition: usize,
    labels: &[LabelId],
    stwig_index: usize,
    stwig: &STwig,
    bindings: &BindingTable,
) -> Result<STwigResult> {
    match_stwig_until(cloud, partition, labels, stwig_index, stwig, bindings, None)
}

/// [`match_stwig`] that gives up with [`Error::DeadlineExceeded`] once
/// `deadline` passes.
pub fn match_stwig_until(
    cloud: &Cloud<'_>,
    partition: usize,
    labels: &[LabelId],
    stwig_index: usize,
    stwig: &STwig,
    bindings: &BindingTable,
    deadline: Option<Instant>,
) -> Result<STwigResult> {
    let mut result = STwigResult::empty(stwig_index, stwig);
    let graph = cloud.graph();
    let local_bound: Vec<NodeId>;
    let roots: &[NodeId] = match bindings.get(stwig.root) {
        Binding::Bound(h) => {
            local_bound = h
                .iter()
                .filter(|&id| graph.partition(partition).contains(id))
                .collect();
            &local_bound
        }
        Binding::Unbound => cloud.get_ids(partition, labels[stwig.root]),
    };

    let leaf_labels: Vec<LabelId> = stwig.leaves.iter().map(|&l| labels[l]).collect();
    let mut distinct_labels = leaf_labels.clone();
    distinct_labels.sort_unstable();
    distinct_labels.dedup();

    let mut per_leaf: Vec<Vec<NodeId>> = vec![Vec::new(); stwig.leaves.len()];
    let mut label_hits: Vec<bool> = vec![false; distinct_labels.len()];
    let mut guard = Guard::new(deadline);
    for &n in roots {
        guard.tick()?;
        let record = cloud.load(n, partition)?;
        for set in &mut per_leaf {
            set.clear();
        }
        for &m in &record.neighbors {
            // skip the label lookup when no leaf's binding admits m
            let wanted = stwig
                .leaves
                .iter()
                .any(|&l| bindings.get(l).admits(m));
            if !wanted {
                continue;
            }
            for (slot, &label) in distinct_labels.iter().enumerate() {
                label_hits[slot] = stwig
                    .leaves
                    .iter()
                    .zip(&leaf_labels)
                    .any(|(&l, &ll)| ll == label && bindings.get(l).admits(m))
                    && cloud.has_label(m, label, partition)?;
            }
            for (i, &l) in stwig.leaves.iter().enumerate() {
                let slot = distinct_labels.binary_search(&leaf_labels[i]).expect("present");
                if label_hits[slot] && bindings.get(l).admits(m) {
                    per_leaf[i].push(m);
                }
            }
        }
        emit_product(n, &per_leaf, &mut result.tuples, &mut guard)?;
    }
    result.tuples.sort_unstable();
    result.tuples.dedup();
    Ok(result)
}

/// Polls the clock every few thousand steps.
struct Guard {
    deadline: Option<Instant>,
    steps: u32,
}

impl Guard {
    fn new(deadline: Option<Instant>) -> Self {
        Guard { deadline, steps: 0 }
    }

    fn tick(&mut self) -> Result<()> {
        self.steps = self.steps.wrapping_add(1);
        if self.steps.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::DeadlineExceeded);
        }
        Ok(())
    }
}

fn emit_product(root: NodeId, per_leaf: &[Vec<NodeId>], out: &mut Vec<Vec<NodeId>>, guard: &mut Guard) -> Result<()> {
    if per_leaf.iter().any(Vec::is_empty) {
        return Ok(());
    }
    let mut tuple = Vec::with_capacity(per_leaf.len() + 1);
    tuple.push(root);
    fn rec(
        depth: usize,
        per_leaf: &[Vec<NodeId>],
        tuple: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
        guard: &mut Guard,
    ) -> Result<()> {
        if depth == per_leaf.len() {
            guard.tick()?;
            out.push(tuple.clone());
            return Ok(());
        }
        for &m in &per_leaf[depth] {
            if tuple.contains(&m) {
                continue;
            }
            tuple.push(m);
            rec(depth + 1, per_leaf, tuple, out, guard)?;
            tuple.pop();
        }
        Ok(())
    }
    rec(0, per_leaf, &mut tuple, out, guard)
}

/// Narrows each schema node's binding to the nodes seen in that column.
pub fn update_bindings(bindings: &mut BindingTable, result: &STwigResult) {
    for (col, set) in result.column_sets().into_iter().enumerate() {
        bindings.bind(result.schema[col], set);
    }
}

/// How candidate bindings travel between machines during exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BindingMode {
    /// After every STwig, partitions exchange their column sets and all
    /// continue from the same global bindings.
    #[default]
    Global,
    /// Each partition narrows only from its own results. Can lose answers
    /// whose STwig matches sit on different machines.
    Local,
}

/// Output of exploring every STwig on every partition.
#[derive(Debug, Clone)]
pub struct Exploration {
    /// `results[k][i]` is `G_k(q_i)`.
    pub results: Vec<Vec<STwigResult>>,
    /// Global bindings after each STwig round (global mode only).
    pub binding_history: Vec<BindingTable>,
    /// Final bindings per partition; all equal in global mode.
    pub final_bindings: Vec<BindingTable>,
}

impl Exploration {
    pub fn stwig_sizes(&self) -> Vec<usize> {
        let n = self.results.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| self.results.iter().map(|r| r[i].len()).sum())
            .collect()
    }

    /// Whether exploration proved the query has no answer.
    pub fn is_empty_answer(&self) -> bool {
        self.final_bindings.iter().all(BindingTable::any_empty)
    }

    /// `G[k](q_i): (<id>,...)` lines, sorted; `i` is 1-based.
    pub fn debug_dump(&self) -> String {
        let mut lines = Vec::new();
        for (k, per_stwig) in self.results.iter().enumerate() {
            for r in per_stwig {
                for t in &r.tuples {
                    let ids: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                    lines.push(format!("G[{k}](q_{}): ({})", r.stwig_index + 1, ids.join(",")));
                }
            }
        }
        lines.sort();
        let mut out = String::new();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

/// Runs every STwig, in decomposition order, on every partition.
pub fn explore(
    cloud: &Cloud<'_>,
    labels: &[LabelId],
    decomposition: &Decomposition,
    mode: BindingMode,
) -> Result<Exploration> {
    explore_until(cloud, labels, decomposition, mode, None)
}

/// [`explore`] with a deadline, see [`match_stwig_until`].
pub fn explore_until(
    cloud: &Cloud<'_>,
    labels: &[LabelId],
    decomposition: &Decomposition,
    mode: BindingMode,
    deadline: Option<Instant>,
) -> Result<Exploration> {
    let k = cloud.graph().partition_count();
    let qn = labels.len();
    match mode {
        BindingMode::Global => {
            let mut bindings = BindingTable::unbound(qn);
            let mut results: Vec<Vec<STwigResult>> = vec![Vec::new(); k];
            let mut history = Vec::with_capacity(decomposition.len());
            for (i, stwig) in decomposition.stwigs.iter().enumerate() {
                let round: Vec<STwigResult> = (0..k)
                    .into_par_iter()
                    .map(|p| match_stwig_until(cloud, p, labels, i, stwig, &bindings, deadline))
                    .collect::<Result<_>>()?;
                // all-gather of column sets: every machine sends to every other
                if k > 1 {
                    for p in 0..k {
                        cloud.bus().record_binding_exchange(p, (k - 1) as u64);
                    }
                }
                let mut columns: Vec<NodeSet> = vec![NodeSet::default(); stwig.leaves.len() + 1];
                for r in &round {
                    for (c, set) in r.column_sets().into_iter().enumerate() {
                        columns[c] = columns[c].union(&set);
                    }
                }
                for (c, set) in columns.into_iter().enumerate() {
                    bindings.bind(stwig.schema()[c], set);
                }
                history.push(bindings.clone());
                for (p, r) in round.into_iter().enumerate() {
                    results[p].push(r);
                }
            }
            Ok(Exploration {
                results,
                binding_history: history,
                final_bindings: vec![bindings; k],
            })
        }
        BindingMode::Local => {
            let per_partition: Vec<(Vec<STwigResult>, BindingTable)> = (0..k)
                .into_par_iter()
                .map(|p| {
                    let mut bindings = BindingTable::unbound(qn);
                    let mut out = Vec::with_capacity(decomposition.len());
                    for (i, stwig) in decomposition.stwigs.iter().enumerate() {
                        let r = match_stwig_until(cloud, p, labels, i, stwig, &bindings, deadline)?;
                        update_bindings(&mut bindings, &r);
                        out.push(r);
                    }
                    Ok((out, bindings))
                })
                .collect::<Result<_>>()?;
            let (results, final_bindings) = per_partition.into_iter().unzip();
            Ok(Exploration {
                results,
                binding_history: Vec::new(),
                final_bindings,
            })
        }
    }
}
