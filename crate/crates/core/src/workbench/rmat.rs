//! Recursive-quadrant (R-MAT) random graphs with uniform random labels.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::store::{GraphBuilder, LabeledGraph};
use crate::NodeId;

/// Desk-scale defaults: 10k nodes, average degree 16, label density 1e-2.
pub const DEFAULT_NODES: usize = 10_000;
pub const DEFAULT_AVG_DEGREE: usize = 16;
pub const DEFAULT_LABEL_DENSITY: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct RmatParams {
    pub node_count: usize,
    pub edge_count: usize,
    /// Quadrant probabilities `(a, b, c, d)`.
    pub probabilities: [f64; 4],
    pub label_count: usize,
    pub seed: u64,
}

impl Default for RmatParams {
    fn default() -> Self {
        RmatParams::with_density(DEFAULT_NODES, DEFAULT_AVG_DEGREE, DEFAULT_LABEL_DENSITY, 0)
    }
}

impl RmatParams {
    /// `avg_degree` counts both endpoints, so `edge_count = n * avg_degree / 2`.
    /// `label_density` is labels per node, rounded, at least one label.
    pub fn with_density(node_count: usize, avg_degree: usize, label_density: f64, seed: u64) -> Self {
        let label_count = ((node_count as f64) * label_density).round().max(1.0) as usize;
        RmatParams {
            node_count,
            edge_count: node_count * avg_degree / 2,
            probabilities: [0.45, 0.15, 0.15, 0.25],
            label_count,
            seed,
        }
    }

    pub fn label_density(&self) -> f64 {
        self.label_count as f64 / self.node_count as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 || self.label_count == 0 {
            return Err(Error::InvalidArgument("node and label counts must be positive".into()));
        }
        if self.probabilities.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidArgument("quadrant probabilities must be nonnegative".into()));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("quadrant probabilities sum to {sum}, not 1")));
        }
        let n = self.node_count as u128;
        let capacity = n * (n - 1) / 2;
        if self.edge_count as u128 > capacity {
            return Err(Error::InvalidArgument(format!(
                "{} edges do not fit in a simple graph on {} nodes",
                self.edge_count, self.node_count
            )));
        }
        Ok(())
    }
}

/// Node ids are `0..node_count`, labels `L0..L{label_count-1}`.
///
/// Duplicate edges and self-loops are resampled, so the edge count is exact.
/// Dense requests near capacity can exhaust the attempt budget.
pub fn gen_rmat(params: &RmatParams) -> Result<LabeledGraph> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.node_count as u64;
    let scale = 64 - (n.max(2) - 1).leading_zeros();
    let [a, b, c, _] = params.probabilities;

    let mut builder = GraphBuilder::default();
    for id in 0..n {
        let label = rng.gen_range(0..params.label_count);
        builder.add_node(id, &format!("L{label}"));
    }

    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::with_capacity(params.edge_count);
    let budget = 100 * params.edge_count as u64 + 10_000;
    let mut attempts = 0u64;
    while seen.len() < params.edge_count {
        attempts += 1;
        if attempts > budget {
            return Err(Error::RetriesExhausted {
                attempts: budget as usize,
                what: format!("placing {} distinct R-MAT edges", params.edge_count),
            });
        }
        let (mut u, mut v) = (0u64, 0u64);
        for _ in 0..scale {
            let r: f64 = rng.gen();
            let (bu, bv) = if r < a {
                (0, 0)
            } else if r < a + b {
                (0, 1)
            } else if r < a + b + c {
                (1, 0)
            } else {
                (1, 1)
            };
            u = (u << 1) | bu;
            v = (v << 1) | bv;
        }
        if u >= n || v >= n || u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            builder.add_edge(key.0, key.1);
        }
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> RmatParams {
        RmatParams {
            node_count: 4,
            edge_count: 3,
            probabilities: [0.25; 4],
            label_count: 2,
            seed,
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let a = gen_rmat(&tiny(7)).unwrap().to_text();
        let b = gen_rmat(&tiny(7)).unwrap().to_text();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_count_is_exact() {
        let g = gen_rmat(&RmatParams::with_density(10_000, 16, 0.01, 3)).unwrap();
        assert_eq!(g.edge_count(), 80_000);
        assert_eq!(g.nodes().count(), 10_000);
        assert_eq!(g.symbols().len(), 100);
    }

    #[test]
    fn complete_graph_fits_exactly() {
        let p = RmatParams {
            edge_count: 6,
            ..tiny(1)
        };
        assert_eq!(gen_rmat(&p).unwrap().edge_count(), 6);
        let over = RmatParams {
            edge_count: 7,
            ..tiny(1)
        };
        assert!(matches!(gen_rmat(&over), Err(Error::InvalidArgument(_))));
    }

    fn degree_mean_and_variance(p: [f64; 4]) -> (f64, f64) {
        let g = gen_rmat(&RmatParams {
            node_count: 4096,
            edge_count: 16_384,
            probabilities: p,
            label_count: 1,
            seed: 42,
        })
        .unwrap();
        let degs: Vec<f64> = g.nodes().map(|r| r.neighbors.len() as f64).collect();
        let mean = degs.iter().sum::<f64>() / degs.len() as f64;
        let var = degs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / degs.len() as f64;
        (mean, var)
    }

    #[test]
    fn uniform_quadrants_look_like_a_plain_random_graph() {
        // uniform random graphs have near-binomial degrees: variance close to the mean
        let (mean, var) = degree_mean_and_variance([0.25; 4]);
        assert!((mean - 8.0).abs() < 1e-9);
        assert!(var > 0.7 * mean && var < 1.4 * mean, "variance {var}");
        let (_, skewed) = degree_mean_and_variance([0.57, 0.19, 0.19, 0.05]);
        assert!(skewed > 5.0 * mean, "skewed variance {skewed}");
    }

    #[test]
    fn rejects_bad_probabilities() {
        let p = RmatParams {
            probabilities: [0.5, 0.5, 0.5, -0.5],
            ..tiny(0)
        };
        assert!(p.validate().is_err());
        let p = RmatParams {
            probabilities: [0.3, 0.3, 0.3, 0.3],
            ..tiny(0)
        };
        assert!(p.validate().is_err());
    }
}
