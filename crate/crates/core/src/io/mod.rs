//! File formats: fvecs/ivecs, the scalar sidecar, the index container,
//! and seeded synthetic datasets.

mod container;
mod synthetic;
mod vecs;

pub use container::{load_index, read_index, save_index, write_index, CONTAINER_VERSION, MAGIC};
pub use synthetic::{gen_queries, gen_synthetic, Dataset, Distribution};
pub use vecs::{read_fvecs, read_ivecs, read_scalars, write_fvecs, write_ivecs, write_scalars};
