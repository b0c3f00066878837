//! Rank truncation for low-rank adapters.
//!
//! Each task's update `A·Bᵀ` (rank `r`) is replaced by its top-`q` SVD
//! triple `U·diag(S)·Vᵀ`, computed from the factors without materializing
//! the dense update. Storage per target drops from `r·(d_out + d_in)` to
//! `q·(d_out + d_in + 1)` values.
//!
//! Differences against a *merged* base are deliberately not compressed
//! this way: `task − merged` stacks every task's update, so its rank can
//! reach `r·T` and a small-`q` truncation has no budget to represent it.

use crate::error::{Error, Result};
use crate::linalg::truncated_svd_of_product;
use crate::store::{
    fingerprint, Checkpoint, LoraAdapter, LoraFile, TruncatedEntry, TruncatedLora,
};
use crate::tensor::{Tensor, TensorMap};
use indexmap::IndexMap;
use rayon::prelude::*;

/// A base checkpoint plus one rank-truncated adapter per task.
#[derive(Debug, Clone)]
pub struct CompressedLoraSet {
    pub base: Checkpoint,
    pub adapters: Vec<TruncatedLora>,
    /// Truncation rank `q`.
    pub rank: usize,
    /// Rank of the source factor pairs.
    pub source_rank: usize,
}

impl CompressedLoraSet {
    pub fn task_count(&self) -> usize {
        self.adapters.len()
    }
}

/// Checks one adapter against the base: every target present, shapes
/// consistent, fingerprint matching.
fn check_adapter(base: &Checkpoint, base_fp: &str, adapter: &LoraAdapter) -> Result<()> {
    if adapter.base_fingerprint != base_fp {
        return Err(Error::FingerprintMismatch {
            expected: adapter.base_fingerprint.clone(),
            actual: base_fp.to_string(),
        });
    }
    for (name, factors) in &adapter.entries {
        let target = base
            .tensors
            .get(name)
            .ok_or_else(|| Error::TargetMissing(name.clone()))?;
        let (d_out, d_in) = target.dims2()?;
        let (a_rows, a_cols) = factors.a.dims2()?;
        let (b_rows, b_cols) = factors.b.dims2()?;
        if a_cols != b_cols {
            return Err(Error::InnerDimMismatch {
                left: a_cols,
                right: b_cols,
            });
        }
        if a_rows != d_out || b_rows != d_in {
            return Err(Error::ShapeMismatch {
                name: name.clone(),
                left: vec![d_out, d_in],
                right: vec![a_rows, b_rows],
            });
        }
    }
    Ok(())
}

/// Compresses each task's factor pair to its top-`q` SVD triple.
pub fn byom_lora(
    base: &Checkpoint,
    adapters: &[LoraAdapter],
    q: usize,
) -> Result<CompressedLoraSet> {
    let source_rank = adapters.first().map(|a| a.rank).unwrap_or(q);
    for adapter in adapters {
        if adapter.rank != source_rank {
            return Err(Error::InnerDimMismatch {
                left: source_rank,
                right: adapter.rank,
            });
        }
    }
    if q == 0 || q > source_rank {
        return Err(Error::RankOutOfRange {
            rank: q,
            max: source_rank,
        });
    }
    let base_fp = fingerprint(base);
    let compressed: Vec<TruncatedLora> = adapters
        .par_iter()
        .map(|adapter| {
            check_adapter(base, &base_fp, adapter)?;
            let mut entries = IndexMap::new();
            for (name, factors) in &adapter.entries {
                let svd = truncated_svd_of_product(&factors.a, &factors.b, q)?;
                entries.insert(
                    name.clone(),
                    TruncatedEntry {
                        u: svd.u,
                        s: svd.s,
                        v: svd.v,
                    },
                );
            }
            Ok(TruncatedLora {
                entries,
                rank: q,
                source_rank: adapter.rank,
                base_fingerprint: adapter.base_fingerprint.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CompressedLoraSet {
        base: base.clone(),
        adapters: compressed,
        rank: q,
        source_rank,
    })
}

/// Adds `u · diag(s) · vᵀ` onto `target` (row-major `d_out × d_in`).
fn add_triple(target: &mut [f32], d_in: usize, entry: &TruncatedEntry) {
    let (d_out, k) = (entry.u.shape()[0], entry.u.shape()[1]);
    let u = entry.u.data();
    let v = entry.v.data();
    for i in 0..d_out {
        for j in 0..d_in {
            let mut acc = target[i * d_in + j] as f64;
            for t in 0..k {
                acc += u[i * k + t] as f64 * entry.s[t] as f64 * v[j * k + t] as f64;
            }
            target[i * d_in + j] = acc as f32;
        }
    }
}

/// Adds `a · bᵀ` onto `target`.
fn add_factor_product(target: &mut [f32], d_in: usize, a: &Tensor, b: &Tensor) {
    let (d_out, r) = (a.shape()[0], a.shape()[1]);
    let ad = a.data();
    let bd = b.data();
    for i in 0..d_out {
        for j in 0..d_in {
            let mut acc = target[i * d_in + j] as f64;
            for t in 0..r {
                acc += ad[i * r + t] as f64 * bd[j * r + t] as f64;
            }
            target[i * d_in + j] = acc as f32;
        }
    }
}

/// Applies an adapter file (either variant) to its base checkpoint,
/// fingerprint-checked.
pub fn apply_lora(base: &Checkpoint, file: &LoraFile) -> Result<Checkpoint> {
    let actual = fingerprint(base);
    let (expected, names): (&str, Vec<&String>) = match file {
        LoraFile::Factor(a) => (&a.base_fingerprint, a.entries.keys().collect()),
        LoraFile::Truncated(t) => (&t.base_fingerprint, t.entries.keys().collect()),
    };
    if expected != actual {
        return Err(Error::FingerprintMismatch {
            expected: expected.to_string(),
            actual,
        });
    }
    for name in &names {
        if !base.tensors.contains(name) {
            return Err(Error::TargetMissing((*name).clone()));
        }
    }
    let mut tensors = TensorMap::new();
    for (name, t) in base.tensors.iter() {
        let mut data = t.data().to_vec();
        match file {
            LoraFile::Factor(adapter) => {
                if let Some(f) = adapter.entries.get(name) {
                    let (_, d_in) = t.dims2()?;
                    add_factor_product(&mut data, d_in, &f.a, &f.b);
                }
            }
            LoraFile::Truncated(trunc) => {
                if let Some(e) = trunc.entries.get(name) {
                    let (_, d_in) = t.dims2()?;
                    add_triple(&mut data, d_in, e);
                }
            }
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("apply_lora: {name}")));
        }
        tensors.insert(name.clone(), Tensor::from_parts_unchecked(t.shape().to_vec(), data));
    }
    Checkpoint::from_parts(tensors, base.metadata.clone())
}

/// Materializes the task model `base + U_t · diag(S_t) · V_tᵀ`.
pub fn materialize_lora_task_model(set: &CompressedLoraSet, task: usize) -> Result<Checkpoint> {
    let adapter = set.adapters.get(task).ok_or(Error::IndexOutOfRange {
        name: "task".into(),
        index: task as u64,
        size: set.adapters.len(),
    })?;
    apply_lora(&set.base, &LoraFile::Truncated(adapter.clone()))
}

/// Ablation: truncate `A` and `B` separately to rank `q` and use
/// `Approx(A)·Approx(B)ᵀ` as the update.
///
/// The result is stored as the canonical SVD triple of that (rank ≤ q)
/// product so it flows through the same materialization path. Its
/// reconstruction error can only match or exceed [`byom_lora`]'s, which
/// truncates the product itself optimally.
pub fn ablation_separate_factor_approx(
    base: &Checkpoint,
    adapters: &[LoraAdapter],
    q: usize,
) -> Result<CompressedLoraSet> {
    let source_rank = adapters.first().map(|a| a.rank).unwrap_or(q);
    if q == 0 || q > source_rank {
        return Err(Error::RankOutOfRange {
            rank: q,
            max: source_rank,
        });
    }
    let base_fp = fingerprint(base);
    let compressed: Vec<TruncatedLora> = adapters
        .par_iter()
        .map(|adapter| {
            check_adapter(base, &base_fp, adapter)?;
            let mut entries = IndexMap::new();
            for (name, factors) in &adapter.entries {
                // Rank-q SVD truncation of each factor on its own.
                let (p_scaled, p_basis) = truncate_factor(&factors.a, q)?;
                let (q_scaled, q_basis) = truncate_factor(&factors.b, q)?;
                // Approx(A)·Approx(B)ᵀ = (P·(PvᵀQv))·Qᵀ with P, Q `d×q`.
                let cross = matmul_tn(&p_basis, &q_basis);
                let left = matmul_nn(&p_scaled, &cross);
                let svd = truncated_svd_of_product(&left, &q_scaled, q)?;
                entries.insert(
                    name.clone(),
                    TruncatedEntry {
                        u: svd.u,
                        s: svd.s,
                        v: svd.v,
                    },
                );
            }
            Ok(TruncatedLora {
                entries,
                rank: q,
                source_rank: adapter.rank,
                base_fingerprint: adapter.base_fingerprint.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CompressedLoraSet {
        base: base.clone(),
        adapters: compressed,
        rank: q,
        source_rank,
    })
}

/// Splits the rank-q truncation of `f` into `(U_q · diag(S_q), V_q)`.
fn truncate_factor(f: &Tensor, q: usize) -> Result<(Tensor, Tensor)> {
    let svd = crate::linalg::svd_thin(f)?;
    let (rows, k) = svd.u.dims2()?;
    let (cols, _) = svd.v.dims2()?;
    let q_eff = q.min(k);
    let mut scaled = vec![0.0f32; rows * q_eff];
    for i in 0..rows {
        for j in 0..q_eff {
            scaled[i * q_eff + j] =
                (svd.u.data()[i * k + j] as f64 * svd.s[j] as f64) as f32;
        }
    }
    let mut basis = vec![0.0f32; cols * q_eff];
    for i in 0..cols {
        for j in 0..q_eff {
            basis[i * q_eff + j] = svd.v.data()[i * k + j];
        }
    }
    Ok((
        Tensor::matrix(rows, q_eff, scaled)?,
        Tensor::matrix(cols, q_eff, basis)?,
    ))
}

/// `aᵀ · b` for row-major tensors.
fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, ka) = (a.shape()[0], a.shape()[1]);
    let kb = b.shape()[1];
    let mut out = vec![0.0f32; ka * kb];
    for i in 0..ka {
        for j in 0..kb {
            let mut acc = 0.0f64;
            for t in 0..n {
                acc += a.data()[t * ka + i] as f64 * b.data()[t * kb + j] as f64;
            }
            out[i * kb + j] = acc as f32;
        }
    }
    Tensor::from_parts_unchecked(vec![ka, kb], out)
}

/// `a · b` for row-major tensors.
fn matmul_nn(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, ka) = (a.shape()[0], a.shape()[1]);
    let kb = b.shape()[1];
    let mut out = vec![0.0f32; n * kb];
    for i in 0..n {
        for j in 0..kb {
            let mut acc = 0.0f64;
            for t in 0..ka {
                acc += a.data()[i * ka + t] as f64 * b.data()[t * kb + j] as f64;
            }
            out[i * kb + j] = acc as f32;
        }
    }
    Tensor::from_parts_unchecked(vec![n, kb], out)
}

/// Frobenius distance between the dense updates of two checkpoints'
/// worth of targets; used to compare reconstruction quality.
pub fn update_error(base: &Checkpoint, reference: &Checkpoint, candidate: &Checkpoint) -> f64 {
    let mut acc = 0.0f64;
    for (name, b) in base.tensors.iter() {
        let r = reference.tensors.get(name).unwrap().data();
        let c = candidate.tensors.get(name).unwrap().data();
        for (j, &bv) in b.data().iter().enumerate() {
            let ru = r[j] as f64 - bv as f64;
            let cu = c[j] as f64 - bv as f64;
            acc += (ru - cu) * (ru - cu);
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::LoraFactors;
    use crate::tensor::TensorMap;

    struct Lcg(u64);
    impl Lcg {
        fn next_f32(&mut self) -> f32 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((self.0 >> 40) as f32 / (1u64 << 24) as f32) * 2.0 - 1.0
        }
        fn mat(&mut self, r: usize, c: usize) -> Tensor {
            let data: Vec<f32> = (0..r * c).map(|_| self.next_f32()).collect();
            Tensor::matrix(r, c, data).unwrap()
        }
    }

    fn base_with(names: &[(&str, usize, usize)], rng: &mut Lcg) -> Checkpoint {
        let tensors: TensorMap = names
            .iter()
            .map(|&(n, r, c)| (n.to_string(), rng.mat(r, c)))
            .collect();
        Checkpoint::new(tensors).unwrap()
    }

    fn adapter_for(base: &Checkpoint, rank: usize, rng: &mut Lcg) -> LoraAdapter {
        let entries: IndexMap<String, LoraFactors> = base
            .tensors
            .iter()
            .map(|(name, t)| {
                let (d_out, d_in) = t.dims2().unwrap();
                (
                    name.clone(),
                    LoraFactors {
                        a: rng.mat(d_out, rank),
                        b: rng.mat(d_in, rank),
                    },
                )
            })
            .collect();
        LoraAdapter {
            entries,
            rank,
            base_fingerprint: fingerprint(base),
        }
    }

    fn max_rel_tensor_err(a: &Checkpoint, b: &Checkpoint) -> f64 {
        let mut worst = 0.0f64;
        for (name, ta) in a.tensors.iter() {
            let tb = b.tensors.get(name).unwrap();
            let mut diff = 0.0f64;
            let mut norm = 0.0f64;
            for (&x, &y) in ta.data().iter().zip(tb.data()) {
                diff += (x as f64 - y as f64).powi(2);
                norm += (y as f64).powi(2);
            }
            worst = worst.max(diff.sqrt() / norm.sqrt().max(1e-30));
        }
        worst
    }

    #[test]
    fn full_rank_truncation_is_lossless() {
        let mut rng = Lcg(5);
        let base = base_with(&[("w1", 8, 6), ("w2", 5, 7)], &mut rng);
        let adapter = adapter_for(&base, 3, &mut rng);
        let original = apply_lora(&base, &LoraFile::Factor(adapter.clone())).unwrap();

        let set = byom_lora(&base, &[adapter], 3).unwrap();
        let rebuilt = materialize_lora_task_model(&set, 0).unwrap();
        assert!(max_rel_tensor_err(&rebuilt, &original) < 1e-5);
    }

    #[test]
    fn zero_singular_values_return_base() {
        let mut rng = Lcg(6);
        let base = base_with(&[("w", 4, 4)], &mut rng);
        let mut entries = IndexMap::new();
        entries.insert(
            "w".to_string(),
            TruncatedEntry {
                u: Tensor::matrix(4, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
                s: vec![0.0, 0.0],
                v: Tensor::matrix(4, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            },
        );
        let trunc = TruncatedLora {
            entries,
            rank: 2,
            source_rank: 2,
            base_fingerprint: fingerprint(&base),
        };
        let out = apply_lora(&base, &LoraFile::Truncated(trunc)).unwrap();
        assert_eq!(out.tensors, base.tensors);
    }

    #[test]
    fn hand_case_materializes() {
        let mut tensors = TensorMap::new();
        tensors.insert("w", Tensor::matrix(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap());
        let base = Checkpoint::new(tensors).unwrap();
        let mut entries = IndexMap::new();
        entries.insert(
            "w".to_string(),
            LoraFactors {
                a: Tensor::matrix(2, 1, vec![1.0, 0.0]).unwrap(),
                b: Tensor::matrix(2, 1, vec![2.0, 0.0]).unwrap(),
            },
        );
        let adapter = LoraAdapter {
            entries,
            rank: 1,
            base_fingerprint: fingerprint(&base),
        };
        let set = byom_lora(&base, &[adapter], 1).unwrap();
        let out = materialize_lora_task_model(&set, 0).unwrap();
        assert_eq!(out.tensors.get("w").unwrap().data(), &[3.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn compression_matches_materialized_svd_oracle() {
        let mut rng = Lcg(9);
        let base = base_with(&[("w", 8, 8)], &mut rng);
        let adapter = adapter_for(&base, 3, &mut rng);
        let original = apply_lora(&base, &LoraFile::Factor(adapter.clone())).unwrap();

        let set = byom_lora(&base, &[adapter.clone()], 2).unwrap();
        let fast_err = update_error(&base, &original, &materialize_lora_task_model(&set, 0).unwrap());

        // Materialize the dense update, full SVD, truncate by zeroing.
        let f = &adapter.entries["w"];
        let mut dense = vec![0.0f32; 64];
        for i in 0..8 {
            for j in 0..8 {
                let mut acc = 0.0f64;
                for t in 0..3 {
                    acc += f.a.data()[i * 3 + t] as f64 * f.b.data()[j * 3 + t] as f64;
                }
                dense[i * 8 + j] = acc as f32;
            }
        }
        let mut svd = crate::linalg::svd_thin(&Tensor::matrix(8, 8, dense.clone()).unwrap()).unwrap();
        for s in svd.s.iter_mut().skip(2) {
            *s = 0.0;
        }
        let rec = svd.reconstruction();
        let oracle_err: f64 = rec
            .data()
            .iter()
            .zip(&dense)
            .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(
            (fast_err - oracle_err).abs() < 1e-6,
            "fast {fast_err} vs oracle {oracle_err}"
        );
    }

    #[test]
    fn separate_factor_ablation_never_beats_product_truncation() {
        let mut rng = Lcg(31);
        for case in 0..10 {
            let base = base_with(&[("w", 10, 7)], &mut rng);
            let adapter = adapter_for(&base, 4, &mut rng);
            let original = apply_lora(&base, &LoraFile::Factor(adapter.clone())).unwrap();
            let q = 1 + case % 3;
            let product = byom_lora(&base, &[adapter.clone()], q).unwrap();
            let separate = ablation_separate_factor_approx(&base, &[adapter], q).unwrap();
            let err_product =
                update_error(&base, &original, &materialize_lora_task_model(&product, 0).unwrap());
            let err_separate =
                update_error(&base, &original, &materialize_lora_task_model(&separate, 0).unwrap());
            assert!(
                err_product <= err_separate + 1e-9,
                "case {case} q={q}: product {err_product} > separate {err_separate}"
            );
        }
    }

    #[test]
    fn separate_factor_ablation_exact_on_rank_one() {
        let mut rng = Lcg(41);
        let base = base_with(&[("w", 6, 5)], &mut rng);
        // Rank-1 factors stored in rank-1 shape.
        let adapter = adapter_for(&base, 1, &mut rng);
        let original = apply_lora(&base, &LoraFile::Factor(adapter.clone())).unwrap();
        let separate = ablation_separate_factor_approx(&base, &[adapter], 1).unwrap();
        let err = update_error(&base, &original, &materialize_lora_task_model(&separate, 0).unwrap());
        assert!(err < 1e-5, "rank-1 ablation error {err}");
    }

    #[test]
    fn rejects_bad_rank_missing_target_and_wrong_base() {
        let mut rng = Lcg(51);
        let base = base_with(&[("w", 6, 5)], &mut rng);
        let adapter = adapter_for(&base, 3, &mut rng);
        assert!(matches!(
            byom_lora(&base, &[adapter.clone()], 4),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            byom_lora(&base, &[adapter.clone()], 0),
            Err(Error::RankOutOfRange { .. })
        ));

        let other = base_with(&[("v", 6, 5)], &mut rng);
        assert!(matches!(
            byom_lora(&other, &[adapter.clone()], 2),
            Err(Error::FingerprintMismatch { .. })
        ));

        let mut renamed = adapter;
        renamed.base_fingerprint = fingerprint(&other);
        assert!(matches!(
            byom_lora(&other, &[renamed], 2),
            Err(Error::TargetMissing(_))
        ));
    }
}
