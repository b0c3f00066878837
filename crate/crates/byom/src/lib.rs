//! Build-your-own-multi-task-model toolkit.
//!
//! Combines task-specific finetuned checkpoints into multi-task artifacts
//! without any training data:
//!
//! - baseline mergers (weighted averaging, task arithmetic, trim/elect/merge,
//!   per-parameter weighted) in [`merge`];
//! - magnitude-pruned task deltas over a pretrained or merged base
//!   (post-pruning and merge-then-prune) in [`prune`];
//! - rank-truncated compression of low-rank adapters via factored SVD in
//!   [`lora`];
//! - bit-exact checkpoint / delta / adapter serialization with fingerprint
//!   guards in [`store`];
//! - a small synthetic-task lab for measuring task interference in [`lab`].
//!
//! See the crate examples for runnable walkthroughs of each capability, and
//! the `byom` binary for the command-line surface.

pub mod account;
pub mod error;
pub mod lab;
pub mod linalg;
pub mod lora;
pub mod merge;
pub mod prune;
pub mod store;
pub mod tensor;

pub use account::ParamAccount;
pub use error::{Error, Result};
pub use linalg::{svd_thin, truncated_svd_of_product, SvdResult};
pub use lora::{byom_lora, materialize_lora_task_model, CompressedLoraSet};
pub use merge::{
    merge_per_param_weighted, merge_task_arithmetic, merge_ties, merge_weighted_average,
    task_vector, MergeMethod, MergeSpec,
};
pub use prune::{byom_fft, materialize_task_model, post_prune, PruneScope, PrunedTaskSet};
pub use store::{fingerprint, Checkpoint, LoraAdapter, LoraFile, SparseDelta, TruncatedLora};
pub use tensor::{elementwise_axpy, top_k_by_magnitude, Tensor, TensorMap, TopKSelection};

/// Sizes the global worker pool from the `BYOM_THREADS` environment
/// variable (unset or `0` = automatic). Call once at process start; later
/// calls are ignored.
pub fn configure_threads_from_env() {
    if let Ok(raw) = std::env::var("BYOM_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
