//! Generators, reference oracles, worked examples and the benchmark harness.

pub mod bench;
pub mod fixtures;
pub mod oracle;
pub mod querygen;
pub mod rmat;

pub use bench::{bench, BenchConfig, BenchReport, QueryKind};
pub use oracle::{brute_min_stwig_cover, oracle_match, oracle_match_with_limit};
pub use querygen::{gen_query_dfs, gen_query_random, label_pool, DfsEdges, DfsQuery};
pub use rmat::{gen_rmat, RmatParams};
