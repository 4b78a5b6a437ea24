//! Non-exchangeable random partitions driven by a generalized gamma process.
//!
//! Items arrive as a Cox process under the bisector `θ ≤ τ` of a completely
//! random measure; each arrival joins the cluster of the atom it was drawn
//! from. The crate covers exact sequential simulation, SMC marginal likelihood
//! and grid maximum likelihood, predictive continuation, the partition to
//! multigraph map, and simulation checks of the growth laws.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crm;
pub mod diagnostics;
pub mod error;
pub mod generative;
pub mod graphs;
pub mod inference;
pub mod numeric;
pub mod partition;
pub mod predict;

pub use crm::{BaseMeasureParams, GgpParams, ModelParams};
pub use error::{Error, Result};
pub use generative::{Allocation, CrpParams, LatentState};
pub use partition::{Partition, PartitionStats};
