//! Finite verification tools for the Carlson-Simpson partition space.
//!
//! * [`partition`]: set partitions as restricted growth strings, the
//!   coarsening order, enumeration and exact counts.
//! * [`cs_space`]: finite prefixes of infinite partitions, block minima,
//!   approximations, traces and the `h`/`g` pair.
//! * [`lemma`]: exact counting bounds, bad-pair census, witness search and
//!   single fusion steps.
//! * [`tree`]: the section lemma for `(k, N)`-partitions.
//! * [`e1`]: windowed encodings and reductions around `E_1`.

pub mod cs_space;
pub mod e1;
pub mod error;
pub mod lemma;
pub mod partition;
pub mod report;
pub mod rng;
pub mod tree;

pub use cs_space::{PartitionPrefix, TraceResult};
pub use error::{LabError, Result};
pub use lemma::{EMapTable, Strategy};
pub use partition::{coarsens, is_coarsening, meet_refine, CoarseningProfile, SetPartition};
pub use report::WitnessReport;
