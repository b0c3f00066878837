//! Magnitude-pruned task deltas over a pretrained or merged base.
//!
//! Two entry points share the machinery: [`post_prune`] keeps the top
//! fraction of each task vector `task − base` directly, while [`byom_fft`]
//! first builds a merged base with any [`MergeSpec`] and prunes the
//! differences against that merged model instead, so the retained delta is
//! purely task-specific while the base carries the shared knowledge.
//!
//! Selection defaults to one global top-k over the whole concatenated task
//! vector; a per-tensor mode exists for ablations.

use crate::error::{Error, Result};
use crate::merge::MergeSpec;
use crate::store::{fingerprint, BaseKind, Checkpoint, SparseDelta, SparseEntry};
use crate::tensor::{keep_count, top_k_by_magnitude, Tensor, TensorMap};
use indexmap::IndexMap;
use rayon::prelude::*;

/// Granularity of the top-k selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneScope {
    /// One selection over the concatenated task vector.
    #[default]
    Global,
    /// Independent selection inside every tensor.
    PerTensor,
}

/// A base checkpoint plus one pruned delta per task.
#[derive(Debug, Clone)]
pub struct PrunedTaskSet {
    /// θ0 for post-pruning, the merged model for the merge-then-prune path.
    pub base: Checkpoint,
    pub deltas: Vec<SparseDelta>,
    pub keep_ratio: f64,
    /// The merger that produced `base`, when there was one.
    pub merge_provenance: Option<MergeSpec>,
}

impl PrunedTaskSet {
    pub fn task_count(&self) -> usize {
        self.deltas.len()
    }
}

/// Prunes one task vector to its top `keep_ratio` coordinates.
fn prune_vector(
    vector: &TensorMap,
    keep_ratio: f64,
    scope: PruneScope,
    base_fingerprint: String,
    base_kind: BaseKind,
) -> Result<SparseDelta> {
    let mut entries: IndexMap<String, SparseEntry> = IndexMap::new();
    match scope {
        PruneScope::Global => {
            let mut flat = Vec::with_capacity(vector.value_count());
            for (_, t) in vector.iter() {
                flat.extend_from_slice(t.data());
            }
            if flat.is_empty() {
                return Err(Error::EmptyInput("prune_vector"));
            }
            let sel = top_k_by_magnitude(&flat, keep_ratio)?;
            let mut cursor = 0usize;
            let mut offset = 0usize;
            for (name, t) in vector.iter() {
                let end = offset + t.len();
                let mut indices = Vec::new();
                let mut values = Vec::new();
                while cursor < sel.indices.len() && sel.indices[cursor] < end {
                    let local = sel.indices[cursor] - offset;
                    indices.push(local as u64);
                    values.push(t.data()[local]);
                    cursor += 1;
                }
                if !indices.is_empty() {
                    entries.insert(
                        name.clone(),
                        SparseEntry {
                            shape: t.shape().to_vec(),
                            indices,
                            values,
                        },
                    );
                }
                offset = end;
            }
        }
        PruneScope::PerTensor => {
            for (name, t) in vector.iter() {
                let sel = top_k_by_magnitude(t.data(), keep_ratio)?;
                entries.insert(
                    name.clone(),
                    SparseEntry {
                        shape: t.shape().to_vec(),
                        indices: sel.indices.iter().map(|&i| i as u64).collect(),
                        values: sel.indices.iter().map(|&i| t.data()[i]).collect(),
                    },
                );
            }
        }
    }
    Ok(SparseDelta {
        entries,
        keep_ratio,
        base_fingerprint,
        base_kind,
    })
}

/// Keeps the top `keep_ratio` of each task vector `task − base`.
pub fn post_prune(
    base: &Checkpoint,
    tasks: &[Checkpoint],
    keep_ratio: f64,
    scope: PruneScope,
) -> Result<PrunedTaskSet> {
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(Error::RatioOutOfRange(keep_ratio));
    }
    for task in tasks {
        base.tensors.check_compatible(&task.tensors)?;
    }
    let base_fp = fingerprint(base);
    let deltas: Vec<SparseDelta> = tasks
        .par_iter()
        .map(|task| {
            let vector = task.tensors.zip_map(&base.tensors, "task_vector", |t, b| t - b)?;
            prune_vector(&vector, keep_ratio, scope, base_fp.clone(), BaseKind::Pretrained)
        })
        .collect::<Result<_>>()?;
    Ok(PrunedTaskSet {
        base: base.clone(),
        deltas,
        keep_ratio,
        merge_provenance: None,
    })
}

/// Merge first, then prune each `task − merged` difference.
///
/// Any merger works as the base: the delta cancels whatever the merge did
/// to the retained coordinates, so at `keep_ratio = 1` the materialized
/// models recover the original task checkpoints regardless of method.
pub fn byom_fft(
    base: &Checkpoint,
    tasks: &[Checkpoint],
    keep_ratio: f64,
    merge: &MergeSpec,
    scope: PruneScope,
) -> Result<PrunedTaskSet> {
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(Error::RatioOutOfRange(keep_ratio));
    }
    for task in tasks {
        base.tensors.check_compatible(&task.tensors)?;
    }
    let merged = merge.apply(base, tasks)?;
    let merged_fp = fingerprint(&merged);
    let deltas: Vec<SparseDelta> = tasks
        .par_iter()
        .map(|task| {
            let vector = task
                .tensors
                .zip_map(&merged.tensors, "task_vector", |t, b| t - b)?;
            prune_vector(&vector, keep_ratio, scope, merged_fp.clone(), BaseKind::Merged)
        })
        .collect::<Result<_>>()?;
    Ok(PrunedTaskSet {
        base: merged,
        deltas,
        keep_ratio,
        merge_provenance: Some(merge.clone()),
    })
}

/// Ablation: prune the task checkpoints themselves instead of their
/// differences. The base is the zero checkpoint, so materialization
/// zero-fills everything outside the kept support.
pub fn ablation_prune_theta(
    tasks: &[Checkpoint],
    keep_ratio: f64,
    scope: PruneScope,
) -> Result<PrunedTaskSet> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    let zero_tensors: TensorMap = tasks[0]
        .tensors
        .iter()
        .map(|(name, t)| (name.clone(), Tensor::zeros(t.shape().to_vec())))
        .collect();
    let zero_base = Checkpoint::new(zero_tensors)?;
    post_prune(&zero_base, tasks, keep_ratio, scope)
}

/// Scatters a sparse delta onto a base checkpoint; the base fingerprint
/// must match the one the delta was built from.
pub fn apply_sparse_delta(base: &Checkpoint, delta: &SparseDelta) -> Result<Checkpoint> {
    let actual = fingerprint(base);
    if actual != delta.base_fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: delta.base_fingerprint.clone(),
            actual,
        });
    }
    let mut tensors = TensorMap::new();
    for (name, t) in base.tensors.iter() {
        match delta.entries.get(name) {
            None => tensors.insert(name.clone(), t.clone()),
            Some(entry) => {
                if entry.shape != t.shape() {
                    return Err(Error::ShapeMismatch {
                        name: name.clone(),
                        left: t.shape().to_vec(),
                        right: entry.shape.clone(),
                    });
                }
                let mut data = t.data().to_vec();
                for (&idx, &val) in entry.indices.iter().zip(&entry.values) {
                    let idx = idx as usize;
                    if idx >= data.len() {
                        return Err(Error::IndexOutOfRange {
                            name: name.clone(),
                            index: idx as u64,
                            size: data.len(),
                        });
                    }
                    data[idx] = (data[idx] as f64 + val as f64) as f32;
                }
                tensors.insert(name.clone(), Tensor::from_parts_unchecked(t.shape().to_vec(), data));
            }
        }
    }
    for name in delta.entries.keys() {
        if !base.tensors.contains(name) {
            return Err(Error::KeyMismatch(name.clone()));
        }
    }
    Checkpoint::from_parts(tensors, base.metadata.clone())
}

/// Materializes the task model `base + delta_t`.
pub fn materialize_task_model(set: &PrunedTaskSet, task: usize) -> Result<Checkpoint> {
    let delta = set.deltas.get(task).ok_or(Error::IndexOutOfRange {
        name: "task".into(),
        index: task as u64,
        size: set.deltas.len(),
    })?;
    apply_sparse_delta(&set.base, delta)
}

/// Exact number of coordinates a task delta keeps for a `d`-coordinate
/// vector at `keep_ratio` under global selection.
pub fn expected_kept(keep_ratio: f64, d: usize) -> usize {
    keep_count(keep_ratio, d)
}
