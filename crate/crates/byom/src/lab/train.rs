//! Full-batch gradient descent for the lab models, in full and low-rank
//! adapter modes.

use super::data::Dataset;
use super::mlp::{MlpModel, W1, W2};
use super::rng::{mix, SplitMix64};
use crate::error::{Error, Result};
use crate::store::{fingerprint, LoraAdapter, LoraFactors};
use crate::tensor::Tensor;
use indexmap::IndexMap;

/// Which parameters gradient descent updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// All four tensors.
    Full,
    /// Base frozen; only factor matrices for `w1` and `w2` move.
    Lora { rank: usize },
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub mode: TrainMode,
    /// Seeds adapter initialization in low-rank mode.
    pub seed: u64,
}

/// Trained model plus, in low-rank mode, the factor adapter.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub adapter: Option<LoraAdapter>,
    pub final_loss: f64,
}

fn descend(tensor: &Tensor, grad: &[f32], lr: f64) -> Tensor {
    let data: Vec<f32> = tensor
        .data()
        .iter()
        .zip(grad)
        .map(|(&p, &g)| (p as f64 - lr * g as f64) as f32)
        .collect();
    Tensor::from_parts_unchecked(tensor.shape().to_vec(), data)
}

fn check_finite(loss: f64, step: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::DivergenceDetected { step });
    }
    Ok(())
}

/// Plain full-batch gradient descent from `init`; deterministic given the
/// config.
pub fn train(init: &MlpModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    match cfg.mode {
        TrainMode::Full => train_full(init, data, cfg),
        TrainMode::Lora { rank } => train_lora(init, data, cfg, rank),
    }
}

fn train_full(init: &MlpModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut model = init.clone();
    let mut last = model.loss(data)?;
    check_finite(last, 0)?;
    for step in 0..cfg.steps {
        let (loss, grads) = model.grad(data)?;
        check_finite(loss, step)?;
        model.w1 = descend(&model.w1, grads.get(W1).unwrap().data(), cfg.learning_rate);
        model.b1 = descend(&model.b1, grads.get(super::mlp::B1).unwrap().data(), cfg.learning_rate);
        model.w2 = descend(&model.w2, grads.get(W2).unwrap().data(), cfg.learning_rate);
        model.b2 = descend(&model.b2, grads.get(super::mlp::B2).unwrap().data(), cfg.learning_rate);
        last = loss;
    }
    let final_loss = model.loss(data)?;
    check_finite(final_loss, cfg.steps)?;
    let _ = last;
    Ok(TrainOutcome {
        model,
        adapter: None,
        final_loss,
    })
}

/// Low-rank factors for one target: update is `a · bᵀ`.
#[derive(Debug, Clone)]
struct Factors {
    a: Vec<f32>, // rows × rank
    b: Vec<f32>, // cols × rank
    rows: usize,
    cols: usize,
    rank: usize,
}

impl Factors {
    fn init(rng: &mut SplitMix64, rows: usize, cols: usize, rank: usize) -> Self {
        // Gaussian A, zero B: the update starts at exactly zero.
        let a = (0..rows * rank).map(|_| 0.1 * rng.normal_f32()).collect();
        Self {
            a,
            b: vec![0.0; cols * rank],
            rows,
            cols,
            rank,
        }
    }

    /// `base + a·bᵀ` as a dense tensor.
    fn materialize(&self, base: &Tensor) -> Tensor {
        let mut data = base.data().to_vec();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let mut acc = data[i * self.cols + j] as f64;
                for t in 0..self.rank {
                    acc += self.a[i * self.rank + t] as f64 * self.b[j * self.rank + t] as f64;
                }
                data[i * self.cols + j] = acc as f32;
            }
        }
        Tensor::from_parts_unchecked(base.shape().to_vec(), data)
    }

    /// Chain rule through the product: `gA = G·B`, `gB = Gᵀ·A`.
    fn step(&mut self, dense_grad: &[f32], lr: f64) {
        let mut ga = vec![0.0f64; self.rows * self.rank];
        let mut gb = vec![0.0f64; self.cols * self.rank];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let g = dense_grad[i * self.cols + j] as f64;
                if g == 0.0 {
                    continue;
                }
                for t in 0..self.rank {
                    ga[i * self.rank + t] += g * self.b[j * self.rank + t] as f64;
                    gb[j * self.rank + t] += g * self.a[i * self.rank + t] as f64;
                }
            }
        }
        for (p, g) in self.a.iter_mut().zip(&ga) {
            *p = (*p as f64 - lr * g) as f32;
        }
        for (p, g) in self.b.iter_mut().zip(&gb) {
            *p = (*p as f64 - lr * g) as f32;
        }
    }

    fn tensors(&self) -> LoraFactors {
        LoraFactors {
            a: Tensor::from_parts_unchecked(vec![self.rows, self.rank], self.a.clone()),
            b: Tensor::from_parts_unchecked(vec![self.cols, self.rank], self.b.clone()),
        }
    }
}

fn train_lora(
    init: &MlpModel,
    data: &Dataset,
    cfg: &TrainConfig,
    rank: usize,
) -> Result<TrainOutcome> {
    if rank == 0 {
        return Err(Error::RankOutOfRange { rank, max: 1 });
    }
    let (input_dim, hidden, classes) = init.dims();
    let mut rng = SplitMix64::new(mix(cfg.seed, 0x6c6f_7261)); // "lora"
    let mut f1 = Factors::init(&mut rng, hidden, input_dim, rank);
    let mut f2 = Factors::init(&mut rng, classes, hidden, rank);

    let mut effective = init.clone();
    for step in 0..cfg.steps {
        effective.w1 = f1.materialize(&init.w1);
        effective.w2 = f2.materialize(&init.w2);
        let (loss, grads) = effective.grad(data)?;
        check_finite(loss, step)?;
        f1.step(grads.get(W1).unwrap().data(), cfg.learning_rate);
        f2.step(grads.get(W2).unwrap().data(), cfg.learning_rate);
    }
    effective.w1 = f1.materialize(&init.w1);
    effective.w2 = f2.materialize(&init.w2);
    let final_loss = effective.loss(data)?;
    check_finite(final_loss, cfg.steps)?;

    let mut entries = IndexMap::new();
    entries.insert(W1.to_string(), f1.tensors());
    entries.insert(W2.to_string(), f2.tensors());
    let adapter = LoraAdapter {
        entries,
        rank,
        base_fingerprint: fingerprint(&init.to_checkpoint()),
    };
    Ok(TrainOutcome {
        model: effective,
        adapter: Some(adapter),
        final_loss,
    })
}
