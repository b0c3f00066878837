//! Parameter accounting for merged artifacts.
//!
//! Two counts are reported. `total` follows the value-only convention
//! used when quoting multi-task model sizes: the base plus, per task,
//! the number of kept delta values (or `q·(d_out + d_in + 1)` per
//! compressed adapter target). `on_disk` additionally charges sparse
//! index storage at two parameter-equivalents per kept value (one u64
//! index per f32 value).

use crate::lora::CompressedLoraSet;
use crate::prune::PrunedTaskSet;
use crate::store::Checkpoint;
use crate::tensor::keep_count;

/// Per-task slice of an account.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskParams {
    pub label: String,
    pub total: u64,
    pub on_disk: u64,
}

/// Value-only and on-disk parameter counts for one artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamAccount {
    pub method: String,
    pub total: u64,
    pub on_disk: u64,
    pub per_task: Vec<TaskParams>,
}

impl ParamAccount {
    fn assemble(method: String, base: u64, base_disk: u64, per_task: Vec<TaskParams>) -> Self {
        let total = base + per_task.iter().map(|t| t.total).sum::<u64>();
        let on_disk = base_disk + per_task.iter().map(|t| t.on_disk).sum::<u64>();
        ParamAccount {
            method,
            total,
            on_disk,
            per_task,
        }
    }

    /// Count in millions, as quoted in size tables.
    pub fn total_millions(&self) -> f64 {
        self.total as f64 / 1e6
    }

    pub fn on_disk_millions(&self) -> f64 {
        self.on_disk as f64 / 1e6
    }
}

/// Accounts a pruned task set from its actual kept counts.
pub fn account_pruned(set: &PrunedTaskSet) -> ParamAccount {
    let method = match &set.merge_provenance {
        Some(spec) => format!("byom_fft[{}](m={})", spec.method.label(), set.keep_ratio),
        None => format!("post_pruning(m={})", set.keep_ratio),
    };
    let base = set.base.value_count() as u64;
    let per_task = set
        .deltas
        .iter()
        .enumerate()
        .map(|(t, delta)| {
            let kept = delta.kept_count() as u64;
            TaskParams {
                label: format!("task_{t}"),
                total: kept,
                on_disk: kept * 3,
            }
        })
        .collect();
    ParamAccount::assemble(method, base, base, per_task)
}

/// Accounts a compressed adapter set: `q·(d_out + d_in + 1)` per target.
pub fn account_lora(set: &CompressedLoraSet) -> ParamAccount {
    let base = set.base.value_count() as u64;
    let per_task = set
        .adapters
        .iter()
        .enumerate()
        .map(|(t, adapter)| {
            let vals: u64 = adapter
                .entries
                .values()
                .map(|e| {
                    let d_out = e.u.shape()[0] as u64;
                    let d_in = e.v.shape()[0] as u64;
                    adapter.rank as u64 * (d_out + d_in + 1)
                })
                .sum();
            TaskParams {
                label: format!("task_{t}"),
                total: vals,
                on_disk: vals,
            }
        })
        .collect();
    ParamAccount::assemble(format!("byom_lora(q={})", set.rank), base, base, per_task)
}

/// Accounts one full checkpoint per task.
pub fn account_single_task(tasks: &[Checkpoint]) -> ParamAccount {
    let per_task = tasks
        .iter()
        .enumerate()
        .map(|(t, c)| {
            let n = c.value_count() as u64;
            TaskParams {
                label: format!("task_{t}"),
                total: n,
                on_disk: n,
            }
        })
        .collect();
    ParamAccount::assemble("single_task".into(), 0, 0, per_task)
}

/// Dry-run account for a pruned set from declared sizes, without tensors:
/// base plus `ceil(m · task_params)` per task.
pub fn pruned_account_from_sizes(
    method: &str,
    base_params: u64,
    task_params: &[u64],
    keep_ratio: f64,
) -> ParamAccount {
    let per_task = task_params
        .iter()
        .enumerate()
        .map(|(t, &d)| {
            let kept = keep_count(keep_ratio, d as usize) as u64;
            TaskParams {
                label: format!("task_{t}"),
                total: kept,
                on_disk: kept * 3,
            }
        })
        .collect();
    ParamAccount::assemble(
        format!("{method}(m={keep_ratio})"),
        base_params,
        base_params,
        per_task,
    )
}

/// Dry-run account for adapter compression from declared layer dims.
pub fn lora_account_from_dims(
    base_params: u64,
    layers: &[(u64, u64)],
    rank: usize,
    task_count: usize,
) -> ParamAccount {
    let vals: u64 = layers
        .iter()
        .map(|&(d_out, d_in)| rank as u64 * (d_out + d_in + 1))
        .sum();
    let per_task = (0..task_count)
        .map(|t| TaskParams {
            label: format!("task_{t}"),
            total: vals,
            on_disk: vals,
        })
        .collect();
    ParamAccount::assemble(
        format!("byom_lora(q={rank})"),
        base_params,
        base_params,
        per_task,
    )
}

/// Stored-value ratio of rank-`r` factor pairs over rank-`q` triples.
pub fn lora_saving_ratio(layers: &[(u64, u64)], source_rank: usize, rank: usize) -> f64 {
    let factor: u64 = layers
        .iter()
        .map(|&(d_out, d_in)| source_rank as u64 * (d_out + d_in))
        .sum();
    let truncated: u64 = layers
        .iter()
        .map(|&(d_out, d_in)| rank as u64 * (d_out + d_in + 1))
        .sum();
    factor as f64 / truncated as f64
}
