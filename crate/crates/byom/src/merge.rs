//! Baseline mergers that combine task checkpoints into one shared model.
//!
//! All mergers are pure, preserve key sets and shapes exactly, and are
//! order-invariant in the task sequence. Accumulation runs in `f64`;
//! results are stored back as `f32`.

use crate::error::{Error, Result};
use crate::store::Checkpoint;
use crate::tensor::{top_k_by_magnitude, Tensor, TensorMap};
use rayon::prelude::*;

/// Scaling coefficient used whenever a caller leaves λ unset.
pub const DEFAULT_LAMBDA: f64 = 0.3;
/// Trim ratio used by the trim/elect/merge method when unset.
pub const DEFAULT_TRIM_RATIO: f64 = 0.2;

/// Merge algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMethod {
    WeightedAverage,
    TaskArithmetic,
    Ties,
    PerParamWeighted,
}

impl MergeMethod {
    pub fn label(self) -> &'static str {
        match self {
            MergeMethod::WeightedAverage => "weighted_average",
            MergeMethod::TaskArithmetic => "task_arithmetic",
            MergeMethod::Ties => "ties",
            MergeMethod::PerParamWeighted => "per_param_weighted",
        }
    }
}

/// Method plus hyperparameters; the one value persisted as provenance on
/// merged-then-pruned artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeSpec {
    pub method: MergeMethod,
    pub lambda: f64,
    /// Per-task scalars for `WeightedAverage`.
    pub weights: Option<Vec<f64>>,
    /// Per-task per-parameter weight checkpoints for `PerParamWeighted`.
    pub weight_maps: Option<Vec<Checkpoint>>,
    pub trim_ratio: f64,
}

impl MergeSpec {
    pub fn task_arithmetic(lambda: f64) -> Self {
        Self {
            method: MergeMethod::TaskArithmetic,
            lambda,
            weights: None,
            weight_maps: None,
            trim_ratio: DEFAULT_TRIM_RATIO,
        }
    }

    /// Uniform averaging when `weights` is `None`.
    pub fn weighted_average(weights: Option<Vec<f64>>) -> Self {
        Self {
            method: MergeMethod::WeightedAverage,
            lambda: DEFAULT_LAMBDA,
            weights,
            weight_maps: None,
            trim_ratio: DEFAULT_TRIM_RATIO,
        }
    }

    pub fn ties(lambda: f64, trim_ratio: f64) -> Self {
        Self {
            method: MergeMethod::Ties,
            lambda,
            weights: None,
            weight_maps: None,
            trim_ratio,
        }
    }

    pub fn per_param_weighted(weight_maps: Vec<Checkpoint>) -> Self {
        Self {
            method: MergeMethod::PerParamWeighted,
            lambda: DEFAULT_LAMBDA,
            weights: None,
            weight_maps: Some(weight_maps),
            trim_ratio: DEFAULT_TRIM_RATIO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::NonFinite("lambda".into()));
        }
        if !(self.trim_ratio > 0.0 && self.trim_ratio <= 1.0) {
            return Err(Error::RatioOutOfRange(self.trim_ratio));
        }
        if let Some(w) = &self.weights {
            check_convex(w)?;
        }
        Ok(())
    }

    /// Runs the selected merger.
    pub fn apply(&self, base: &Checkpoint, tasks: &[Checkpoint]) -> Result<Checkpoint> {
        self.validate()?;
        match self.method {
            MergeMethod::TaskArithmetic => merge_task_arithmetic(base, tasks, self.lambda),
            MergeMethod::WeightedAverage => {
                let uniform;
                let weights = match &self.weights {
                    Some(w) => w.as_slice(),
                    None => {
                        if tasks.is_empty() {
                            return Err(Error::EmptyTaskSet);
                        }
                        uniform = vec![1.0 / tasks.len() as f64; tasks.len()];
                        &uniform
                    }
                };
                merge_weighted_average(tasks, weights)
            }
            MergeMethod::Ties => merge_ties(base, tasks, self.lambda, self.trim_ratio),
            MergeMethod::PerParamWeighted => {
                let maps = self.weight_maps.as_ref().ok_or(Error::WeightMismatch {
                    weights: 0,
                    tasks: tasks.len(),
                })?;
                merge_per_param_weighted(base, tasks, maps)
            }
        }
    }
}

fn check_convex(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::NonConvexWeights("negative or non-finite weight".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NonConvexWeights(format!("weights sum to {sum}")));
    }
    Ok(())
}

fn check_all_compatible(base: &Checkpoint, tasks: &[Checkpoint]) -> Result<()> {
    for task in tasks {
        base.tensors.check_compatible(&task.tensors)?;
    }
    Ok(())
}

fn stamped(tensors: TensorMap, spec_label: &str, lambda: Option<f64>) -> Result<Checkpoint> {
    let mut out = Checkpoint::new(tensors)?;
    out.metadata.insert("merge_method".into(), spec_label.into());
    if let Some(l) = lambda {
        out.metadata.insert("merge_lambda".into(), format!("{l}"));
    }
    Ok(out)
}

/// Elementwise difference `task − base`.
pub fn task_vector(base: &Checkpoint, task: &Checkpoint) -> Result<TensorMap> {
    task.tensors.zip_map(&base.tensors, "task_vector", |t, b| t - b)
}

/// `base + lambda · Σ_t (task_t − base)`, accumulated per coordinate.
pub fn merge_task_arithmetic(
    base: &Checkpoint,
    tasks: &[Checkpoint],
    lambda: f64,
) -> Result<Checkpoint> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    check_all_compatible(base, tasks)?;
    let names: Vec<String> = base.tensors.names().cloned().collect();
    let merged: Vec<(String, Tensor)> = names
        .par_iter()
        .map(|name| {
            let b = base.tensors.get(name).unwrap();
            let data: Vec<f32> = b
                .data()
                .iter()
                .enumerate()
                .map(|(j, &bv)| {
                    let mut acc = 0.0f64;
                    for task in tasks {
                        acc += task.tensors.get(name).unwrap().data()[j] as f64 - bv as f64;
                    }
                    (bv as f64 + lambda * acc) as f32
                })
                .collect();
            (name.clone(), Tensor::from_parts_unchecked(b.shape().to_vec(), data))
        })
        .collect();
    let tensors: TensorMap = merged.into_iter().collect();
    ensure_finite(&tensors, "task_arithmetic")?;
    stamped(tensors, "task_arithmetic", Some(lambda))
}

/// Convex combination `Σ_t w_t · task_t`.
pub fn merge_weighted_average(tasks: &[Checkpoint], weights: &[f64]) -> Result<Checkpoint> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    if weights.len() != tasks.len() {
        return Err(Error::WeightMismatch {
            weights: weights.len(),
            tasks: tasks.len(),
        });
    }
    check_convex(weights)?;
    check_all_compatible(&tasks[0], tasks)?;
    let names: Vec<String> = tasks[0].tensors.names().cloned().collect();
    let merged: Vec<(String, Tensor)> = names
        .par_iter()
        .map(|name| {
            let first = tasks[0].tensors.get(name).unwrap();
            let data: Vec<f32> = (0..first.len())
                .map(|j| {
                    let mut acc = 0.0f64;
                    for (task, &w) in tasks.iter().zip(weights) {
                        acc += w * task.tensors.get(name).unwrap().data()[j] as f64;
                    }
                    acc as f32
                })
                .collect();
            (name.clone(), Tensor::from_parts_unchecked(first.shape().to_vec(), data))
        })
        .collect();
    let tensors: TensorMap = merged.into_iter().collect();
    ensure_finite(&tensors, "weighted_average")?;
    stamped(tensors, "weighted_average", None)
}

/// Trim / elect / disjoint-mean merging.
///
/// Per task, only the top `trim_ratio` of the task vector by magnitude
/// survives (selected globally across the whole vector). Per coordinate,
/// the sign of the trimmed sum is elected; surviving values whose sign
/// matches are averaged. An exactly zero trimmed sum merges to zero.
pub fn merge_ties(
    base: &Checkpoint,
    tasks: &[Checkpoint],
    lambda: f64,
    trim_ratio: f64,
) -> Result<Checkpoint> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    if !(trim_ratio > 0.0 && trim_ratio <= 1.0) {
        return Err(Error::RatioOutOfRange(trim_ratio));
    }
    check_all_compatible(base, tasks)?;

    // Flatten each task vector, trim globally, and keep a survival mask.
    let layout: Vec<(String, usize)> = base
        .tensors
        .iter()
        .map(|(n, t)| (n.clone(), t.len()))
        .collect();
    let total: usize = layout.iter().map(|(_, l)| l).sum();

    let trimmed: Vec<Vec<f32>> = tasks
        .par_iter()
        .map(|task| {
            let mut flat = Vec::with_capacity(total);
            for (name, _) in &layout {
                let t = task.tensors.get(name).unwrap().data();
                let b = base.tensors.get(name).unwrap().data();
                flat.extend(t.iter().zip(b).map(|(&tv, &bv)| (tv as f64 - bv as f64) as f32));
            }
            let sel = top_k_by_magnitude(&flat, trim_ratio)?;
            let mut kept = vec![0.0f32; total];
            let mut live = vec![false; total];
            for &idx in &sel.indices {
                kept[idx] = flat[idx];
                live[idx] = true;
            }
            // Encode survival in NaN-free form: store value, mask separately.
            Ok((kept, live))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|(kept, live)| {
            // Dead coordinates carry 0.0 but must not vote; fold the mask in
            // by replacing dead slots with an impossible marker is avoided --
            // instead keep mask implicit: exact 0.0 never votes (sign 0).
            kept.iter()
                .zip(live)
                .map(|(&v, l)| if l { v } else { 0.0 })
                .collect()
        })
        .collect();

    let mut merged_flat = vec![0.0f32; total];
    for (j, slot) in merged_flat.iter_mut().enumerate() {
        let mut sum = 0.0f64;
        for tv in &trimmed {
            sum += tv[j] as f64;
        }
        if sum == 0.0 {
            continue;
        }
        let sign = sum.signum();
        let mut acc = 0.0f64;
        let mut count = 0usize;
        for tv in &trimmed {
            let v = tv[j] as f64;
            if v != 0.0 && v.signum() == sign {
                acc += v;
                count += 1;
            }
        }
        if count > 0 {
            *slot = (acc / count as f64) as f32;
        }
    }

    let mut tensors = TensorMap::new();
    let mut offset = 0usize;
    for (name, len) in &layout {
        let b = base.tensors.get(name).unwrap();
        let data: Vec<f32> = b
            .data()
            .iter()
            .zip(&merged_flat[offset..offset + len])
            .map(|(&bv, &mv)| (bv as f64 + lambda * mv as f64) as f32)
            .collect();
        tensors.insert(name.clone(), Tensor::from_parts_unchecked(b.shape().to_vec(), data));
        offset += len;
    }
    ensure_finite(&tensors, "ties")?;
    let mut out = stamped(tensors, "ties", Some(lambda))?;
    out.metadata.insert("merge_trim_ratio".into(), format!("{trim_ratio}"));
    Ok(out)
}

/// Per-coordinate weighted mean with externally supplied weight maps;
/// coordinates with zero total weight fall back to the base value.
pub fn merge_per_param_weighted(
    base: &Checkpoint,
    tasks: &[Checkpoint],
    weight_maps: &[Checkpoint],
) -> Result<Checkpoint> {
    if tasks.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    if weight_maps.len() != tasks.len() {
        return Err(Error::WeightMismatch {
            weights: weight_maps.len(),
            tasks: tasks.len(),
        });
    }
    check_all_compatible(base, tasks)?;
    check_all_compatible(base, weight_maps)?;
    for wm in weight_maps {
        for (name, t) in wm.tensors.iter() {
            if let Some(idx) = t.data().iter().position(|&w| w < 0.0) {
                return Err(Error::NegativeWeight {
                    name: name.clone(),
                    index: idx,
                });
            }
        }
    }
    let names: Vec<String> = base.tensors.names().cloned().collect();
    let merged: Vec<(String, Tensor)> = names
        .par_iter()
        .map(|name| {
            let b = base.tensors.get(name).unwrap();
            let data: Vec<f32> = b
                .data()
                .iter()
                .enumerate()
                .map(|(j, &bv)| {
                    let mut num = 0.0f64;
                    let mut den = 0.0f64;
                    for (task, wm) in tasks.iter().zip(weight_maps) {
                        let w = wm.tensors.get(name).unwrap().data()[j] as f64;
                        num += w * task.tensors.get(name).unwrap().data()[j] as f64;
                        den += w;
                    }
                    if den > 0.0 {
                        (num / den) as f32
                    } else {
                        bv
                    }
                })
                .collect();
            (name.clone(), Tensor::from_parts_unchecked(b.shape().to_vec(), data))
        })
        .collect();
    let tensors: TensorMap = merged.into_iter().collect();
    ensure_finite(&tensors, "per_param_weighted")?;
    stamped(tensors, "per_param_weighted", None)
}

fn ensure_finite(tensors: &TensorMap, op: &str) -> Result<()> {
    for (name, t) in tensors.iter() {
        if !t.data().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("{op}: {name}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ckpt(pairs: &[(&str, Vec<f32>)]) -> Checkpoint {
        let tensors: TensorMap = pairs
            .iter()
            .map(|(n, v)| (n.to_string(), Tensor::vector(v.clone()).unwrap()))
            .collect();
        Checkpoint::new(tensors).unwrap()
    }

    #[test]
    fn task_vector_of_self_is_zero() {
        let c = ckpt(&[("w", vec![1.0, -2.0, 3.0])]);
        let v = task_vector(&c, &c).unwrap();
        assert_eq!(v.get("w").unwrap().data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn task_vector_scalar_case() {
        let base = ckpt(&[("w", vec![1.0])]);
        let task = ckpt(&[("w", vec![3.0])]);
        assert_eq!(task_vector(&base, &task).unwrap().get("w").unwrap().data(), &[2.0]);
    }

    #[test]
    fn task_vector_reconstructs_task() {
        let base = ckpt(&[("w", vec![0.1, -0.7, 1e-3, 42.5])]);
        let task = ckpt(&[("w", vec![0.3, 0.2, -9.0, 42.500004])]);
        let v = task_vector(&base, &task).unwrap();
        for (j, (&b, &t)) in base.tensors.get("w").unwrap().data().iter()
            .zip(task.tensors.get("w").unwrap().data())
            .enumerate()
        {
            let rebuilt = b + v.get("w").unwrap().data()[j];
            assert!((rebuilt - t).abs() < 1e-6);
        }
    }

    #[test]
    fn task_arithmetic_zero_lambda_returns_base() {
        let base = ckpt(&[("w", vec![1.0, 2.0])]);
        let t1 = ckpt(&[("w", vec![5.0, -5.0])]);
        let out = merge_task_arithmetic(&base, &[t1], 0.0).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), base.tensors.get("w").unwrap().data());
    }

    #[test]
    fn task_arithmetic_single_task_unit_lambda_telescopes() {
        let base = ckpt(&[("w", vec![1.0, 2.0])]);
        let t1 = ckpt(&[("w", vec![5.0, -5.0])]);
        let out = merge_task_arithmetic(&base, &[t1.clone()], 1.0).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), t1.tensors.get("w").unwrap().data());
    }

    #[test]
    fn task_arithmetic_scalar_oracle() {
        let base = ckpt(&[("w", vec![0.0])]);
        let t1 = ckpt(&[("w", vec![1.0])]);
        let t2 = ckpt(&[("w", vec![3.0])]);
        let out = merge_task_arithmetic(&base, &[t1, t2], 0.3).unwrap();
        assert!((out.tensors.get("w").unwrap().data()[0] - 1.2).abs() < 1e-7);
        assert_eq!(out.metadata.get("merge_method").unwrap(), "task_arithmetic");
        assert_eq!(out.metadata.get("merge_lambda").unwrap(), "0.3");
    }

    #[test]
    fn task_arithmetic_rejects_empty_tasks() {
        let base = ckpt(&[("w", vec![0.0])]);
        assert!(matches!(
            merge_task_arithmetic(&base, &[], 0.3),
            Err(Error::EmptyTaskSet)
        ));
    }

    #[test]
    fn task_arithmetic_is_linear_in_lambda() {
        let base = ckpt(&[("w", vec![0.5, -1.5, 2.0])]);
        let t1 = ckpt(&[("w", vec![1.0, 0.0, -3.0])]);
        let t2 = ckpt(&[("w", vec![-2.0, 4.0, 0.25])]);
        let tasks = [t1, t2];
        let r1 = merge_task_arithmetic(&base, &tasks, 0.2).unwrap();
        let r2 = merge_task_arithmetic(&base, &tasks, 0.5).unwrap();
        let r3 = merge_task_arithmetic(&base, &tasks, 0.7).unwrap();
        for j in 0..3 {
            let lhs = r1.tensors.get("w").unwrap().data()[j]
                + r2.tensors.get("w").unwrap().data()[j]
                - base.tensors.get("w").unwrap().data()[j];
            let rhs = r3.tensors.get("w").unwrap().data()[j];
            assert!((lhs - rhs).abs() < 1e-5);
        }
    }

    #[test]
    fn weighted_average_degenerate_weight_selects_task() {
        let t1 = ckpt(&[("w", vec![1.0, 2.0])]);
        let t2 = ckpt(&[("w", vec![9.0, 9.0])]);
        let out = merge_weighted_average(&[t1.clone(), t2], &[1.0, 0.0]).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), t1.tensors.get("w").unwrap().data());
    }

    #[test]
    fn weighted_average_fixed_point_on_equal_checkpoints() {
        let t = ckpt(&[("w", vec![0.25, -8.0])]);
        let out = merge_weighted_average(&[t.clone(), t.clone()], &[0.3, 0.7]).unwrap();
        for (a, b) in out
            .tensors
            .get("w")
            .unwrap()
            .data()
            .iter()
            .zip(t.tensors.get("w").unwrap().data())
        {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn weighted_average_scalar_oracle() {
        let t1 = ckpt(&[("w", vec![2.0])]);
        let t2 = ckpt(&[("w", vec![6.0])]);
        let out = merge_weighted_average(&[t1, t2], &[0.25, 0.75]).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), &[5.0]);
    }

    #[test]
    fn weighted_average_rejects_bad_weights() {
        let t1 = ckpt(&[("w", vec![1.0])]);
        let t2 = ckpt(&[("w", vec![2.0])]);
        assert!(matches!(
            merge_weighted_average(&[t1.clone(), t2.clone()], &[0.5]),
            Err(Error::WeightMismatch { .. })
        ));
        assert!(matches!(
            merge_weighted_average(&[t1.clone(), t2.clone()], &[0.9, 0.3]),
            Err(Error::NonConvexWeights(_))
        ));
        assert!(matches!(
            merge_weighted_average(&[t1, t2], &[-0.5, 1.5]),
            Err(Error::NonConvexWeights(_))
        ));
    }

    #[test]
    fn ties_single_task_is_trimmed_vector() {
        let base = ckpt(&[("w", vec![0.0, 0.0])]);
        let t1 = ckpt(&[("w", vec![4.0, 0.1])]);
        let out = merge_ties(&base, &[t1], 1.0, 0.5).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), &[4.0, 0.0]);
    }

    #[test]
    fn ties_zero_sum_conflict_merges_to_zero() {
        let base = ckpt(&[("w", vec![0.0])]);
        let t1 = ckpt(&[("w", vec![2.0])]);
        let t2 = ckpt(&[("w", vec![-2.0])]);
        let out = merge_ties(&base, &[t1, t2], 1.0, 1.0).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), &[0.0]);
    }

    #[test]
    fn ties_trim_elect_mean_trace() {
        let base = ckpt(&[("w", vec![0.0, 0.0])]);
        let t1 = ckpt(&[("w", vec![4.0, 0.1])]);
        let t2 = ckpt(&[("w", vec![2.0, 0.2])]);
        let out = merge_ties(&base, &[t1, t2], 1.0, 0.5).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), &[3.0, 0.0]);
    }

    #[test]
    fn ties_full_trim_sign_agreeing_equals_mean() {
        let base = ckpt(&[("w", vec![1.0, -2.0, 0.5])]);
        let t1 = ckpt(&[("w", vec![1.5, -2.25, 0.75])]);
        let t2 = ckpt(&[("w", vec![2.5, -2.75, 1.25])]);
        let out = merge_ties(&base, &[t1.clone(), t2.clone()], 0.4, 1.0).unwrap();
        for j in 0..3 {
            let b = base.tensors.get("w").unwrap().data()[j] as f64;
            let v1 = t1.tensors.get("w").unwrap().data()[j] as f64 - b;
            let v2 = t2.tensors.get("w").unwrap().data()[j] as f64 - b;
            let expect = b + 0.4 * (v1 + v2) / 2.0;
            let got = out.tensors.get("w").unwrap().data()[j] as f64;
            assert!((got - expect).abs() < 1e-6, "coord {j}: {got} vs {expect}");
        }
    }

    #[test]
    fn per_param_weighted_uniform_is_mean() {
        let base = ckpt(&[("w", vec![0.0])]);
        let t1 = ckpt(&[("w", vec![1.0])]);
        let t2 = ckpt(&[("w", vec![3.0])]);
        let w = ckpt(&[("w", vec![1.0])]);
        let out = merge_per_param_weighted(&base, &[t1, t2], &[w.clone(), w]).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), &[2.0]);
    }

    #[test]
    fn per_param_weighted_selector_picks_task() {
        let base = ckpt(&[("w", vec![0.0])]);
        let t1 = ckpt(&[("w", vec![1.0])]);
        let t2 = ckpt(&[("w", vec![3.0])]);
        let w1 = ckpt(&[("w", vec![1.0])]);
        let w0 = ckpt(&[("w", vec![0.0])]);
        let out = merge_per_param_weighted(&base, &[t1, t2.clone()], &[w0, w1]).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), t2.tensors.get("w").unwrap().data());
    }

    #[test]
    fn per_param_weighted_scalar_oracle_and_fallback() {
        let base = ckpt(&[("w", vec![7.0, 7.0])]);
        let t1 = ckpt(&[("w", vec![1.0, 0.0])]);
        let t2 = ckpt(&[("w", vec![3.0, 0.0])]);
        let w1 = ckpt(&[("w", vec![1.0, 0.0])]);
        let w2 = ckpt(&[("w", vec![3.0, 0.0])]);
        let out = merge_per_param_weighted(&base, &[t1, t2], &[w1, w2]).unwrap();
        // (1*1 + 3*3) / 4 = 2.5; zero-weight coordinate falls back to base.
        assert_eq!(out.tensors.get("w").unwrap().data(), &[2.5, 7.0]);
    }

    #[test]
    fn per_param_weighted_rejects_negative_weight() {
        let base = ckpt(&[("w", vec![0.0])]);
        let t1 = ckpt(&[("w", vec![1.0])]);
        let w = ckpt(&[("w", vec![-1.0])]);
        assert!(matches!(
            merge_per_param_weighted(&base, &[t1], &[w]),
            Err(Error::NegativeWeight { .. })
        ));
    }

    #[test]
    fn all_mergers_are_order_invariant() {
        let base = ckpt(&[("w", vec![0.3, -0.6, 1.1, 0.0])]);
        let t1 = ckpt(&[("w", vec![1.0, 0.5, -2.0, 0.25])]);
        let t2 = ckpt(&[("w", vec![-1.5, 2.0, 0.75, -0.5])]);
        let t3 = ckpt(&[("w", vec![0.1, -0.9, 3.0, 1.0])]);
        let fwd = [t1.clone(), t2.clone(), t3.clone()];
        let rev = [t3, t2, t1];

        let pairs = [
            (
                merge_task_arithmetic(&base, &fwd, 0.3).unwrap(),
                merge_task_arithmetic(&base, &rev, 0.3).unwrap(),
            ),
            (
                merge_weighted_average(&fwd, &[1.0 / 3.0; 3]).unwrap(),
                merge_weighted_average(&rev, &[1.0 / 3.0; 3]).unwrap(),
            ),
            (
                merge_ties(&base, &fwd, 0.3, 0.5).unwrap(),
                merge_ties(&base, &rev, 0.3, 0.5).unwrap(),
            ),
        ];
        for (a, b) in &pairs {
            for (x, y) in a
                .tensors
                .get("w")
                .unwrap()
                .data()
                .iter()
                .zip(b.tensors.get("w").unwrap().data())
            {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mergers_preserve_keys_and_shapes() {
        let mut tensors = TensorMap::new();
        tensors.insert("z_last", Tensor::matrix(2, 2, vec![1.0; 4]).unwrap());
        tensors.insert("a_first", Tensor::vector(vec![2.0; 3]).unwrap());
        let base = Checkpoint::new(tensors).unwrap();
        let t1 = base.clone();
        let out = merge_task_arithmetic(&base, &[t1], 0.5).unwrap();
        let names: Vec<&String> = out.tensors.names().collect();
        assert_eq!(names, ["z_last", "a_first"]);
        assert_eq!(out.tensors.get("z_last").unwrap().shape(), &[2, 2]);
    }
}
