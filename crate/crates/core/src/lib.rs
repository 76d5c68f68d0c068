//! Range-filtered approximate nearest-neighbor search.
//!
//! Vectors carry one scalar attribute. The index partitions the scalar
//! domain into buckets, builds a dense exact kNN graph inside each bucket,
//! and fuses in remote edges from a global kNN graph so every row has the
//! same fixed degree. A query `(q, k, [l, u])` seeds inside the buckets that
//! intersect the range and runs a beam search that never computes a
//! distance to an out-of-range node.
//!
//! ```
//! use bucketann::io::{gen_synthetic, Distribution};
//! use bucketann::{BuildParams, Index, RangePredicate, SearchParams};
//!
//! let data = gen_synthetic(2_000, 8, Distribution::Gaussian, 1);
//! let params = BuildParams { bucket_capacity: 500, ..BuildParams::default() };
//! let (index, _report) = Index::build(&data.records(), params).unwrap();
//!
//! let range = RangePredicate::new(0.25, 0.5).unwrap();
//! let hits = index.search(&data.vectors[0], &SearchParams::new(10, range)).unwrap();
//! assert!(hits.neighbors.iter().all(|n| range.contains(index.scalar(n.slot))));
//! ```
//!
//! Inserts append at the tail of the arrays and rewire existing rows in
//! place; slots never move.

pub mod build;
pub mod cli;
pub mod distance;
pub mod error;
pub mod eval;
mod index;
pub mod insert;
pub mod io;
pub mod layout;
pub mod search;
mod types;

pub use build::BuildReport;
pub use distance::{squared_l2, Neighbor, Slot};
pub use error::{Error, Result};
pub use index::Index;
pub use insert::{InsertParams, InsertReport};
pub use search::{SearchOutcome, SearchResult, SearchStats, Searcher};
pub use types::{BuildParams, PartitionStrategy, RangePredicate, SearchParams, VectorRecord};
