//! Synthetic classification tasks: Gaussian clusters with fixed means and a
//! shared isotropic noise scale, generated deterministically from a seed.

use super::rng::{mix, SplitMix64};
use crate::error::{Error, Result};

const TRAIN_STREAM: u64 = 0x7261_696e; // "rain"
const TEST_STREAM: u64 = 0x7465_7374; // "test"

/// Specification for one synthetic task.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub seed: u64,
    pub input_dim: usize,
    pub class_count: usize,
    /// Per-class cluster means, `class_count × input_dim`.
    pub means: Vec<Vec<f32>>,
    /// Shared isotropic standard deviation around each mean.
    pub noise_scale: f32,
    pub train_count: usize,
    pub test_count: usize,
    /// Labels are emitted in `[label_offset, label_offset + class_count)`.
    pub label_offset: usize,
}

/// A drawn sample set; inputs are row-major `len × input_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<f32>,
    pub labels: Vec<usize>,
    pub input_dim: usize,
    pub class_count: usize,
    pub label_offset: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// Label mapped into `[0, class_count)`.
    pub fn local_label(&self, i: usize) -> usize {
        self.labels[i] - self.label_offset
    }

    /// Pools several datasets; labels are re-expressed locally so tasks
    /// with different offsets supervise the same head slots.
    pub fn pooled(parts: &[&Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or(Error::EmptyInput("pooled"))?;
        let mut out = Dataset {
            inputs: Vec::new(),
            labels: Vec::new(),
            input_dim: first.input_dim,
            class_count: first.class_count,
            label_offset: 0,
        };
        for part in parts {
            if part.input_dim != out.input_dim || part.class_count != out.class_count {
                return Err(Error::BadSpec(
                    "pooled datasets must share input_dim and class_count".into(),
                ));
            }
            out.inputs.extend_from_slice(&part.inputs);
            for i in 0..part.len() {
                out.labels.push(part.local_label(i));
            }
        }
        Ok(out)
    }
}

fn draw(spec: &SyntheticTask, stream: u64, count: usize) -> Dataset {
    let mut rng = SplitMix64::new(mix(spec.seed, stream));
    let mut inputs = Vec::with_capacity(count * spec.input_dim);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let class = rng.next_below(spec.class_count);
        let mean = &spec.means[class];
        for &m in mean.iter() {
            inputs.push(m + spec.noise_scale * rng.normal_f32());
        }
        labels.push(spec.label_offset + class);
    }
    Dataset {
        inputs,
        labels,
        input_dim: spec.input_dim,
        class_count: spec.class_count,
        label_offset: spec.label_offset,
    }
}

/// Draws the train and test sets from disjoint streams of the task seed.
pub fn generate_task(spec: &SyntheticTask) -> Result<(Dataset, Dataset)> {
    if spec.class_count < 2 {
        return Err(Error::BadSpec("class_count must be at least 2".into()));
    }
    if spec.train_count == 0 || spec.test_count == 0 {
        return Err(Error::BadSpec("sample counts must be at least 1".into()));
    }
    if spec.means.len() != spec.class_count
        || spec.means.iter().any(|m| m.len() != spec.input_dim)
    {
        return Err(Error::BadSpec("means must be class_count × input_dim".into()));
    }
    if !(spec.noise_scale >= 0.0 && spec.noise_scale.is_finite()) {
        return Err(Error::BadSpec("noise_scale must be finite and non-negative".into()));
    }
    Ok((
        draw(spec, TRAIN_STREAM, spec.train_count),
        draw(spec, TEST_STREAM, spec.test_count),
    ))
}

/// Draws `count` cluster means with per-dimension standard deviation
/// `separation`.
fn draw_means(rng: &mut SplitMix64, count: usize, dim: usize, separation: f32) -> Vec<Vec<f32>> {
    (0..count)
        .map(|_| (0..dim).map(|_| separation * rng.normal_f32()).collect())
        .collect()
}

/// Knobs shared by the task-family builders.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskShape {
    pub input_dim: usize,
    pub class_count: usize,
    pub separation: f32,
    pub noise_scale: f32,
    pub train_count: usize,
    pub test_count: usize,
}

impl Default for TaskShape {
    fn default() -> Self {
        Self {
            input_dim: 16,
            class_count: 4,
            separation: 1.0,
            noise_scale: 0.4,
            train_count: 128,
            test_count: 128,
        }
    }
}

/// A family of `task_count` tasks over disjoint class clusters: all
/// `task_count × class_count` means come from one geometry stream, then
/// each task takes its own chunk with a disjoint label range.
pub fn task_family(seed: u64, task_count: usize, shape: &TaskShape) -> Vec<SyntheticTask> {
    let mut geo = SplitMix64::new(mix(seed, 0x6765_6f6d)); // "geom"
    let all_means = draw_means(
        &mut geo,
        task_count * shape.class_count,
        shape.input_dim,
        shape.separation,
    );
    (0..task_count)
        .map(|t| SyntheticTask {
            seed: mix(seed, 0x7461_736b + t as u64), // "task" + t
            input_dim: shape.input_dim,
            class_count: shape.class_count,
            means: all_means[t * shape.class_count..(t + 1) * shape.class_count].to_vec(),
            noise_scale: shape.noise_scale,
            train_count: shape.train_count,
            test_count: shape.test_count,
            label_offset: t * shape.class_count,
        })
        .collect()
}

/// Two tasks with independent random geometries.
pub fn dissimilar_pair(seed: u64, shape: &TaskShape) -> (SyntheticTask, SyntheticTask) {
    let mut family = task_family(seed, 2, shape);
    let b = family.pop().unwrap();
    let mut a = family.pop().unwrap();
    // Re-draw task A's geometry from an unrelated stream so the pair shares
    // nothing beyond dimensionality.
    let mut geo = SplitMix64::new(mix(seed, 0x6469_7373)); // "diss"
    a.means = draw_means(&mut geo, shape.class_count, shape.input_dim, shape.separation);
    (a, b)
}

/// Two similar tasks: one cluster family split in half with disjoint
/// label sets.
pub fn disjoint_split_pair(seed: u64, shape: &TaskShape) -> (SyntheticTask, SyntheticTask) {
    let mut family = task_family(seed, 2, shape);
    let b = family.pop().unwrap();
    let a = family.pop().unwrap();
    (a, b)
}
