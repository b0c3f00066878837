//! Two-layer tanh MLP with softmax cross-entropy, analytic gradients, and
//! lossless round-tripping through the checkpoint types.

use super::data::Dataset;
use super::rng::SplitMix64;
use crate::error::{Error, Result};
use crate::store::Checkpoint;
use crate::tensor::{Tensor, TensorMap};

pub const W1: &str = "w1";
pub const B1: &str = "b1";
pub const W2: &str = "w2";
pub const B2: &str = "b2";

/// Tensor names of the shared trunk (everything but the classifier head).
pub const TRUNK: [&str; 2] = [W1, B1];

/// Two-layer network: `w1` is `hidden × input`, `w2` is `classes × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

impl MlpModel {
    /// Gaussian init scaled by `1/sqrt(fan_in)`; biases zero.
    pub fn init(seed: u64, input_dim: usize, hidden: usize, classes: usize) -> Self {
        let mut rng = SplitMix64::new(seed);
        let scale1 = 1.0 / (input_dim as f64).sqrt();
        let w1: Vec<f32> = (0..hidden * input_dim)
            .map(|_| (rng.normal() * scale1) as f32)
            .collect();
        let scale2 = 1.0 / (hidden as f64).sqrt();
        let w2: Vec<f32> = (0..classes * hidden)
            .map(|_| (rng.normal() * scale2) as f32)
            .collect();
        Self {
            w1: Tensor::from_parts_unchecked(vec![hidden, input_dim], w1),
            b1: Tensor::from_parts_unchecked(vec![hidden], vec![0.0; hidden]),
            w2: Tensor::from_parts_unchecked(vec![classes, hidden], w2),
            b2: Tensor::from_parts_unchecked(vec![classes], vec![0.0; classes]),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let hidden = self.w1.shape()[0];
        let input = self.w1.shape()[1];
        let classes = self.w2.shape()[0];
        (input, hidden, classes)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut tensors = TensorMap::new();
        tensors.insert(W1, self.w1.clone());
        tensors.insert(B1, self.b1.clone());
        tensors.insert(W2, self.w2.clone());
        tensors.insert(B2, self.b2.clone());
        Checkpoint::new(tensors).expect("model tensors are always valid")
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let get = |name: &str| {
            c.tensors
                .get(name)
                .cloned()
                .ok_or_else(|| Error::KeyMismatch(name.to_string()))
        };
        let model = Self {
            w1: get(W1)?,
            b1: get(B1)?,
            w2: get(W2)?,
            b2: get(B2)?,
        };
        let (input, hidden, classes) = model.dims();
        if model.w1.shape() != [hidden, input]
            || model.b1.shape() != [hidden]
            || model.w2.shape() != [classes, hidden]
            || model.b2.shape() != [classes]
        {
            return Err(Error::ShapeMismatch {
                name: "mlp".into(),
                left: model.w1.shape().to_vec(),
                right: model.w2.shape().to_vec(),
            });
        }
        Ok(model)
    }

    /// Hidden activations and logits for one input row, in `f64`.
    fn row_forward(&self, x: &[f32], h: &mut [f64], z: &mut [f64]) {
        let (input_dim, hidden, classes) = self.dims();
        for j in 0..hidden {
            let mut acc = self.b1.data()[j] as f64;
            let wrow = &self.w1.data()[j * input_dim..(j + 1) * input_dim];
            for (wi, xi) in wrow.iter().zip(x) {
                acc += *wi as f64 * *xi as f64;
            }
            h[j] = acc.tanh();
        }
        for c in 0..classes {
            let mut acc = self.b2.data()[c] as f64;
            let wrow = &self.w2.data()[c * hidden..(c + 1) * hidden];
            for (wi, hi) in wrow.iter().zip(h.iter()) {
                acc += *wi as f64 * *hi;
            }
            z[c] = acc;
        }
    }

    /// Logits for a row-major batch, `n × classes`.
    pub fn forward(&self, inputs: &[f32], n: usize) -> Result<Vec<f32>> {
        let (input_dim, hidden, classes) = self.dims();
        if inputs.len() != n * input_dim {
            return Err(Error::ShapeMismatch {
                name: "inputs".into(),
                left: vec![n, input_dim],
                right: vec![inputs.len()],
            });
        }
        let mut logits = vec![0.0f32; n * classes];
        let mut h = vec![0.0f64; hidden];
        let mut z = vec![0.0f64; classes];
        for row in 0..n {
            let x = &inputs[row * input_dim..(row + 1) * input_dim];
            self.row_forward(x, &mut h, &mut z);
            for c in 0..classes {
                logits[row * classes + c] = z[c] as f32;
            }
        }
        Ok(logits)
    }

    /// Mean softmax cross-entropy over the dataset, in `f64` end to end.
    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        let (input_dim, hidden, classes) = self.dims();
        if data.inputs.len() != data.len() * input_dim {
            return Err(Error::ShapeMismatch {
                name: "inputs".into(),
                left: vec![data.len(), input_dim],
                right: vec![data.inputs.len()],
            });
        }
        let mut h = vec![0.0f64; hidden];
        let mut z = vec![0.0f64; classes];
        let mut total = 0.0f64;
        for row in 0..data.len() {
            self.row_forward(data.row(row), &mut h, &mut z);
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let logsum = z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
            total += logsum - z[data.local_label(row)];
        }
        Ok(total / data.len() as f64)
    }

    /// Mean-loss gradients for all four parameter tensors.
    pub fn grad(&self, data: &Dataset) -> Result<(f64, TensorMap)> {
        let (input_dim, hidden, classes) = self.dims();
        if data.local_label(0) >= classes {
            return Err(Error::ShapeMismatch {
                name: "labels".into(),
                left: vec![classes],
                right: vec![data.local_label(0)],
            });
        }
        let n = data.len();
        let mut g_w1 = vec![0.0f64; hidden * input_dim];
        let mut g_b1 = vec![0.0f64; hidden];
        let mut g_w2 = vec![0.0f64; classes * hidden];
        let mut g_b2 = vec![0.0f64; classes];
        let mut loss = 0.0f64;

        let mut h = vec![0.0f64; hidden];
        let mut p = vec![0.0f64; classes];
        for row in 0..n {
            let x = data.row(row);
            self.row_forward(x, &mut h, &mut p);
            let zmax = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0f64;
            for pc in p.iter_mut() {
                *pc = (*pc - zmax).exp();
                sum += *pc;
            }
            let label = data.local_label(row);
            loss += -(p[label] / sum).ln();

            // dL/dz = softmax - onehot, averaged over the batch.
            for c in 0..classes {
                let dz = (p[c] / sum - if c == label { 1.0 } else { 0.0 }) / n as f64;
                g_b2[c] += dz;
                for j in 0..hidden {
                    g_w2[c * hidden + j] += dz * h[j];
                }
            }
            for j in 0..hidden {
                let mut dh = 0.0f64;
                for c in 0..classes {
                    let dz = (p[c] / sum - if c == label { 1.0 } else { 0.0 }) / n as f64;
                    dh += dz * self.w2.data()[c * hidden + j] as f64;
                }
                let dpre = dh * (1.0 - h[j] * h[j]);
                g_b1[j] += dpre;
                for (i, xi) in x.iter().enumerate() {
                    g_w1[j * input_dim + i] += dpre * *xi as f64;
                }
            }
        }

        let mut grads = TensorMap::new();
        grads.insert(
            W1,
            Tensor::from_parts_unchecked(
                vec![hidden, input_dim],
                g_w1.iter().map(|&v| v as f32).collect(),
            ),
        );
        grads.insert(
            B1,
            Tensor::from_parts_unchecked(vec![hidden], g_b1.iter().map(|&v| v as f32).collect()),
        );
        grads.insert(
            W2,
            Tensor::from_parts_unchecked(
                vec![classes, hidden],
                g_w2.iter().map(|&v| v as f32).collect(),
            ),
        );
        grads.insert(
            B2,
            Tensor::from_parts_unchecked(vec![classes], g_b2.iter().map(|&v| v as f32).collect()),
        );
        Ok((loss / n as f64, grads))
    }

    /// Argmax class predictions (local label space).
    pub fn predict(&self, data: &Dataset) -> Result<Vec<usize>> {
        let (_, _, classes) = self.dims();
        let logits = self.forward(&data.inputs, data.len())?;
        Ok((0..data.len())
            .map(|row| {
                let z = &logits[row * classes..(row + 1) * classes];
                let mut best = 0;
                for c in 1..classes {
                    if z[c] > z[best] {
                        best = c;
                    }
                }
                best
            })
            .collect())
    }

    /// Fraction of correct argmax predictions.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let preds = self.predict(data)?;
        let correct = preds
            .iter()
            .enumerate()
            .filter(|&(i, &p)| p == data.local_label(i))
            .count();
        Ok(correct as f64 / data.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::data::{generate_task, SyntheticTask};

    fn tiny_dataset(seed: u64, n: usize) -> Dataset {
        let spec = SyntheticTask {
            seed,
            input_dim: 4,
            class_count: 3,
            means: vec![
                vec![1.0, 0.0, 0.5, -0.5],
                vec![-1.0, 0.5, 0.0, 0.5],
                vec![0.0, -1.0, 1.0, 0.0],
            ],
            noise_scale: 0.3,
            train_count: n,
            test_count: 1,
            label_offset: 0,
        };
        generate_task(&spec).unwrap().0
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let model = MlpModel {
            w1: Tensor::zeros(vec![5, 4]),
            b1: Tensor::zeros(vec![5]),
            w2: Tensor::zeros(vec![3, 5]),
            b2: Tensor::zeros(vec![3]),
        };
        let data = tiny_dataset(1, 8);
        let loss = model.loss(&data).unwrap();
        assert!((loss - (3.0f64).ln()).abs() < 1e-9, "loss {loss}");
        let logits = model.forward(&data.inputs, data.len()).unwrap();
        assert!(logits.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        // Spec'd harness: 5-sample batch, step 1e-3, guarded relative error.
        let model = MlpModel::init(3, 4, 5, 3);
        let data = tiny_dataset(2, 5);
        let (_, grads) = model.grad(&data).unwrap();
        let step = 1e-3f64;
        for name in [W1, B1, W2, B2] {
            let g = grads.get(name).unwrap();
            for j in 0..g.len() {
                let mut plus = model.clone();
                let mut minus = model.clone();
                let (tp, tm) = match name {
                    W1 => (&mut plus.w1, &mut minus.w1),
                    B1 => (&mut plus.b1, &mut minus.b1),
                    W2 => (&mut plus.w2, &mut minus.w2),
                    _ => (&mut plus.b2, &mut minus.b2),
                };
                bump(tp, j, step as f32);
                bump(tm, j, -(step as f32));
                // Divide by the step the f32 parameters actually took.
                let actual = tp.data()[j] as f64 - tm.data()[j] as f64;
                let fd = (plus.loss(&data).unwrap() - minus.loss(&data).unwrap()) / actual;
                let an = g.data()[j] as f64;
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3);
                assert!(rel < 1e-4, "{name}[{j}]: fd {fd} vs analytic {an} rel {rel}");
            }
        }
    }

    fn bump(t: &mut Tensor, j: usize, delta: f32) {
        let mut data = t.data().to_vec();
        data[j] += delta;
        *t = Tensor::from_parts_unchecked(t.shape().to_vec(), data);
    }

    #[test]
    fn duplicated_point_doubles_its_contribution() {
        // Sum-linearity: 3·g({a,a,b}) == 2·g({a,b}) + g({a}).
        let model = MlpModel::init(9, 4, 5, 3);
        let base = tiny_dataset(4, 2);
        let single = Dataset {
            inputs: base.row(0).to_vec(),
            labels: vec![base.labels[0]],
            ..base.clone()
        };
        let doubled = Dataset {
            inputs: [base.row(0), base.row(0), base.row(1)].concat(),
            labels: vec![base.labels[0], base.labels[0], base.labels[1]],
            ..base.clone()
        };
        let (_, g2) = model.grad(&base).unwrap();
        let (_, g1) = model.grad(&single).unwrap();
        let (_, g3) = model.grad(&doubled).unwrap();
        for name in [W1, B1, W2, B2] {
            for j in 0..g2.get(name).unwrap().len() {
                let lhs = 3.0 * g3.get(name).unwrap().data()[j] as f64;
                let rhs =
                    2.0 * g2.get(name).unwrap().data()[j] as f64 + g1.get(name).unwrap().data()[j] as f64;
                assert!((lhs - rhs).abs() < 1e-5, "{name}[{j}]: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_lossless() {
        let model = MlpModel::init(5, 4, 6, 3);
        let c = model.to_checkpoint();
        let back = MlpModel::from_checkpoint(&c).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn forward_rejects_misshapen_batch() {
        let model = MlpModel::init(5, 4, 6, 3);
        assert!(matches!(
            model.forward(&[0.0; 7], 2),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
