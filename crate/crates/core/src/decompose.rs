//! STwig cover construction and exploration order.
//!
//! Edge selection is the vertex-cover 2-approximation steered by two rules:
//! prefer edges touching the frontier `S` of already-covered neighbors, and
//! prefer endpoints with high f-value `deg(v) / freq(label(v))`. Degrees are
//! residual, i.e. counted over edges not yet covered.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::query::{Decomposition, QueryGraph, STwig};
use crate::score::{Score, Selectivity};
use crate::store::{LabeledGraph, PartitionedGraph};

/// Number of data nodes per label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreqTable {
    freq: BTreeMap<String, u64>,
}

impl FreqTable {
    pub fn new(freq: BTreeMap<String, u64>) -> Self {
        FreqTable { freq }
    }

    /// Every label of `query` mapped to the same count.
    pub fn uniform(query: &QueryGraph, count: u64) -> Self {
        let freq = (0..query.node_count())
            .map(|v| (query.label(v).to_string(), count))
            .collect();
        FreqTable { freq }
    }

    pub fn from_graph(graph: &PartitionedGraph) -> Self {
        let freq = graph
            .symbols()
            .names()
            .map(|name| (name.to_string(), graph.label_frequency(name)))
            .filter(|(_, c)| *c > 0)
            .collect();
        FreqTable { freq }
    }

    pub fn from_labeled(graph: &LabeledGraph) -> Self {
        FreqTable {
            freq: graph.label_counts(),
        }
    }

    pub fn get(&self, label: &str) -> u64 {
        self.freq.get(label).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.freq.values().sum()
    }

    /// First query label with no data nodes.
    pub fn missing_label<'q>(&self, query: &'q QueryGraph) -> Option<&'q str> {
        (0..query.node_count())
            .map(|v| query.label(v))
            .find(|l| self.get(l) == 0)
    }
}

/// f-value of query node `v` over the full query.
pub fn f_value<S: Score>(v: usize, query: &QueryGraph, freqs: &FreqTable) -> Selectivity<S> {
    Selectivity::new(query.degree(v), freqs.get(query.label(v)))
}

/// One pass of the selection loop, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep<S> {
    /// `(v, u)`: `v` is rooted first.
    pub edge: (usize, usize),
    /// Residual f-values of every query node when the edge was picked.
    pub f_values: Vec<Selectivity<S>>,
    /// The frontier when the edge was picked.
    pub frontier_before: Vec<usize>,
    /// The frontier after the pass.
    pub frontier_after: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderTrace<S> {
    pub decomposition: Decomposition,
    pub steps: Vec<SelectionStep<S>>,
}

struct Residual {
    adjacency: Vec<BTreeSet<usize>>,
    remaining: usize,
}

impl Residual {
    fn new(query: &QueryGraph) -> Self {
        Residual {
            adjacency: (0..query.node_count())
                .map(|v| query.neighbors(v).iter().copied().collect())
                .collect(),
            remaining: query.edge_count(),
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Takes every residual edge at `v` as an STwig rooted there.
    fn take_star(&mut self, v: usize) -> STwig {
        let leaves: Vec<usize> = std::mem::take(&mut self.adjacency[v]).into_iter().collect();
        for &l in &leaves {
            self.adjacency[l].remove(&v);
        }
        self.remaining -= leaves.len();
        STwig::new(v, leaves)
    }

    fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }
}

/// Decomposes `query` into an ordered STwig cover.
pub fn stwig_order_selection<S: Score>(query: &QueryGraph, freqs: &FreqTable) -> Decomposition {
    trace_order_selection::<S>(query, freqs).decomposition
}

/// [`stwig_order_selection`] with a record of each selection pass.
pub fn trace_order_selection<S: Score>(query: &QueryGraph, freqs: &FreqTable) -> OrderTrace<S> {
    let n = query.node_count();
    let freq: Vec<u64> = (0..n).map(|v| freqs.get(query.label(v))).collect();
    let mut residual = Residual::new(query);
    let mut frontier: BTreeSet<usize> = BTreeSet::new();
    let mut stwigs = Vec::new();
    let mut steps = Vec::new();

    while residual.remaining > 0 {
        let f: Vec<Selectivity<S>> = (0..n)
            .map(|v| Selectivity::new(residual.degree(v), freq[v]))
            .collect();

        // Ties on f(u)+f(v) go to the lexicographically smallest (min, max) pair;
        // edges come out of `Residual::edges` in exactly that order.
        let restrict = !frontier.is_empty();
        let mut best: Option<(usize, usize)> = None;
        for (a, b) in residual.edges() {
            if restrict && !frontier.contains(&a) && !frontier.contains(&b) {
                continue;
            }
            let better = match best {
                None => true,
                Some((x, y)) => {
                    f[a].edge_score(&f[b]).compare(&f[x].edge_score(&f[y])) == Ordering::Greater
                }
            };
            if better {
                best = Some((a, b));
            }
        }
        let (a, b) = best.expect("residual edges remain and the frontier touches one");

        // v must be on the frontier when one is in force; among eligible
        // endpoints the more selective one is rooted first, ties to the smaller index.
        let eligible = |x: usize| !restrict || frontier.contains(&x);
        let (v, u) = match (eligible(a), eligible(b)) {
            (true, false) => (a, b),
            (false, true) => (b, a),
            _ => {
                if f[b].compare(&f[a]) == Ordering::Greater {
                    (b, a)
                } else {
                    (a, b)
                }
            }
        };

        let frontier_before: Vec<usize> = frontier.iter().copied().collect();
        let t_v = residual.take_star(v);
        frontier.extend(t_v.leaves.iter().copied());
        stwigs.push(t_v);
        if residual.degree(u) > 0 {
            let t_u = residual.take_star(u);
            frontier.extend(t_u.leaves.iter().copied());
            stwigs.push(t_u);
        }
        frontier.remove(&u);
        frontier.remove(&v);
        frontier.retain(|&x| residual.degree(x) > 0);

        steps.push(SelectionStep {
            edge: (v, u),
            f_values: f,
            frontier_before,
            frontier_after: frontier.iter().copied().collect(),
        });
    }

    OrderTrace {
        decomposition: Decomposition::new(stwigs),
        steps,
    }
}

/// True iff every STwig is well-formed and their edge sets partition the query's edges.
pub fn verify_cover(query: &QueryGraph, stwigs: &[STwig]) -> bool {
    let mut covered = BTreeSet::new();
    for t in stwigs {
        if !t.is_valid_for(query) {
            return false;
        }
        for e in t.provenance() {
            if !covered.insert(e) {
                return false;
            }
        }
    }
    covered.len() == query.edge_count() && query.edges().iter().all(|e| covered.contains(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn q(text: &str) -> QueryGraph {
        QueryGraph::parse(text.as_bytes()).unwrap()
    }

    #[test]
    fn single_edge_yields_one_stwig() {
        let query = q("v 0 a\nv 1 b\ne 0 1\n");
        let d = stwig_order_selection::<Ratio<u64>>(&query, &FreqTable::uniform(&query, 5));
        assert_eq!(d.stwigs, vec![STwig::new(0, vec![1])]);
    }

    #[test]
    fn single_edge_roots_the_more_selective_end() {
        let query = q("v 0 a\nv 1 b\ne 0 1\n");
        let freqs = FreqTable::new(BTreeMap::from([("a".into(), 50), ("b".into(), 2)]));
        let d = stwig_order_selection::<f64>(&query, &freqs);
        assert_eq!(d.stwigs, vec![STwig::new(1, vec![0])]);
    }

    #[test]
    fn star_is_one_stwig_at_the_center() {
        let query = q("v 0 a\nv 1 b\nv 2 c\nv 3 d\ne 0 1\ne 0 2\ne 0 3\n");
        let d = stwig_order_selection::<Ratio<u64>>(&query, &FreqTable::uniform(&query, 10));
        assert_eq!(d.stwigs, vec![STwig::new(0, vec![1, 2, 3])]);
    }

    #[test]
    fn f_value_is_degree_over_frequency() {
        let query = q("v 0 a\nv 1 b\nv 2 c\ne 0 1\ne 0 2\n");
        let freqs = FreqTable::new(BTreeMap::from([
            ("a".into(), 4),
            ("b".into(), 1),
            ("c".into(), 0),
        ]));
        assert_eq!(f_value::<Ratio<u64>>(0, &query, &freqs), Selectivity::Finite(Ratio::new(1, 2)));
        assert_eq!(f_value::<Ratio<u64>>(1, &query, &freqs), Selectivity::Finite(Ratio::new(1, 1)));
        assert!(f_value::<Ratio<u64>>(2, &query, &freqs).is_impossible());
        assert_eq!(freqs.missing_label(&query), Some("c"));
    }

    #[test]
    fn cover_check_detects_gaps_and_overlaps() {
        let query = q("v 0 a\nv 1 b\nv 2 c\ne 0 1\ne 1 2\ne 0 2\n");
        let good = vec![STwig::new(0, vec![1, 2]), STwig::new(1, vec![2])];
        assert!(verify_cover(&query, &good));
        assert!(!verify_cover(&query, &good[..1]));
        let overlap = vec![STwig::new(0, vec![1, 2]), STwig::new(1, vec![2, 0])];
        assert!(!verify_cover(&query, &overlap));
    }

    #[test]
    fn float_and_exact_scores_agree_here() {
        let query = q("v 0 a\nv 1 b\nv 2 c\nv 3 d\ne 0 1\ne 1 2\ne 2 3\ne 3 0\ne 0 2\n");
        let freqs = FreqTable::new(BTreeMap::from([
            ("a".into(), 3),
            ("b".into(), 7),
            ("c".into(), 11),
            ("d".into(), 2),
        ]));
        assert_eq!(
            stwig_order_selection::<Ratio<u64>>(&query, &freqs),
            stwig_order_selection::<f64>(&query, &freqs)
        );
    }
}
