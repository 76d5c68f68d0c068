//! Unified global storage: the append-only feature matrix and scalar column,
//! the fixed-degree adjacency matrix, and the logical bucket metadata that
//! maps physical slots to scalar buckets without moving any row.

mod adjacency;
mod buckets;
mod store;

pub use adjacency::{AdjacencyMatrix, SENTINEL};
pub use buckets::{BucketId, BucketMeta};
pub use store::VectorStore;
