use std::collections::BTreeSet;

use super::graph::LabelId;

/// One label pair observed on one (ordered) machine pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CatalogEntry {
    pub labels: (LabelId, LabelId),
    pub machines: (usize, usize),
}

/// Every `(label(u), label(v))` seen on an edge `u–v`, keyed by the owners
/// of `u` and `v`. Stored with its symmetric closure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelPairCatalog {
    entries: BTreeSet<CatalogEntry>,
}

impl LabelPairCatalog {
    pub(crate) fn record(&mut self, a: LabelId, b: LabelId, i: usize, j: usize) {
        self.entries.insert(CatalogEntry {
            labels: (a, b),
            machines: (i, j),
        });
        self.entries.insert(CatalogEntry {
            labels: (b, a),
            machines: (j, i),
        });
    }

    pub fn contains(&self, a: LabelId, b: LabelId, i: usize, j: usize) -> bool {
        self.entries.contains(&CatalogEntry {
            labels: (a, b),
            machines: (i, j),
        })
    }

    /// Machine pairs `(i, j)` with an `a`-node on `i` adjacent to a `b`-node on `j`.
    pub fn machine_pairs(&self, a: LabelId, b: LabelId) -> impl Iterator<Item = (usize, usize)> + '_ {
        let lo = CatalogEntry {
            labels: (a, b),
            machines: (0, 0),
        };
        let hi = CatalogEntry {
            labels: (a, b),
            machines: (usize::MAX, usize::MAX),
        };
        self.entries.range(lo..=hi).map(|e| e.machines)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_symmetric_and_range_queries_stay_in_pair() {
        let (a, b, c) = (LabelId(0), LabelId(1), LabelId(2));
        let mut cat = LabelPairCatalog::default();
        cat.record(a, b, 0, 3);
        cat.record(a, b, 1, 1);
        cat.record(a, c, 2, 0);
        assert!(cat.contains(b, a, 3, 0));
        assert!(!cat.contains(a, b, 3, 0));
        assert_eq!(cat.machine_pairs(a, b).collect::<Vec<_>>(), vec![(0, 3), (1, 1)]);
        assert_eq!(cat.machine_pairs(c, a).collect::<Vec<_>>(), vec![(0, 2)]);
        assert_eq!(cat.len(), 6);
    }
}
