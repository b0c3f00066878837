//! Desk-scale lab: synthetic Gaussian-cluster tasks, a two-layer tanh MLP
//! with analytic gradients, full and low-rank finetuning, and the
//! interference experiment suite with CSV reporting.
//!
//! Everything is a pure function of seeds; the random source is SplitMix64
//! (see [`rng`]) so results reproduce bit-for-bit across platforms.

pub mod data;
pub mod mlp;
pub mod rng;
pub mod suite;
pub mod train;

pub use data::{
    disjoint_split_pair, dissimilar_pair, generate_task, task_family, Dataset, SyntheticTask,
    TaskShape,
};
pub use mlp::MlpModel;
pub use rng::SplitMix64;
pub use suite::{
    emit_csv, load_config, parse_config, render_csv, run_interference_suite, EvalReport,
    LabParams, PairKind, SuiteConfig, SuiteMethod, SuitePlan,
};
pub use train::{train, TrainConfig, TrainMode, TrainOutcome};
