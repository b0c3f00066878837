//! Dense 32-bit tensors and the magnitude-selection kernel.
//!
//! Tensors are row-major flat buffers with a shape; a [`TensorMap`] is an
//! ordered name → tensor collection representing one checkpoint's worth of
//! parameters. Every public operation preserves the finiteness invariant:
//! no NaN or Inf ever escapes.

use crate::error::{Error, Result};
use indexmap::IndexMap;

/// Dense tensor: shape plus row-major `f32` data.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    /// Builds a tensor, checking the shape/data contract and finiteness.
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidTensor {
                name: String::new(),
                reason: format!("zero dimension in shape {shape:?}"),
            });
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidTensor {
                name: String::new(),
                reason: format!(
                    "shape {shape:?} implies {expected} values, got {}",
                    data.len()
                ),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("tensor data".into()));
        }
        Ok(Self { shape, data })
    }

    /// 1-D convenience constructor.
    pub fn vector(data: Vec<f32>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    /// 2-D convenience constructor from row-major data.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Number of stored values.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row/column pair for 2-D tensors.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(Error::NotAMatrix(self.shape.clone())),
        }
    }

    /// Internal constructor for values already known finite and sized.
    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }
}

/// Ordered name → tensor collection (one checkpoint's parameters).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorMap {
    entries: IndexMap<String, Tensor>,
}

impl TensorMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a tensor under `name`, replacing any previous entry.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.entries.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.entries.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Total number of stored values across all tensors.
    pub fn value_count(&self) -> usize {
        self.entries.values().map(Tensor::len).sum()
    }

    /// Checks that `other` has exactly the same keys and shapes.
    pub fn check_compatible(&self, other: &TensorMap) -> Result<()> {
        if self.entries.len() != other.entries.len()
            || !self.entries.keys().all(|k| other.entries.contains_key(k))
        {
            let missing: Vec<&str> = self
                .entries
                .keys()
                .filter(|k| !other.entries.contains_key(*k))
                .chain(
                    other
                        .entries
                        .keys()
                        .filter(|k| !self.entries.contains_key(*k)),
                )
                .map(String::as_str)
                .collect();
            return Err(Error::KeyMismatch(missing.join(", ")));
        }
        for (name, a) in &self.entries {
            let b = &other.entries[name];
            if a.shape() != b.shape() {
                return Err(Error::ShapeMismatch {
                    name: name.clone(),
                    left: a.shape().to_vec(),
                    right: b.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Applies `f` to each aligned value pair, producing a new map with the
    /// same keys, shapes, and key order. Accumulation runs in `f64`.
    pub(crate) fn zip_map(
        &self,
        other: &TensorMap,
        op_name: &str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<TensorMap> {
        self.check_compatible(other)?;
        let mut out = TensorMap::new();
        for (name, a) in &self.entries {
            let b = &other.entries[name];
            let data: Vec<f32> = a
                .data()
                .iter()
                .zip(b.data())
                .map(|(&x, &y)| f(x as f64, y as f64) as f32)
                .collect();
            if !data.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("{op_name}: {name}")));
            }
            out.insert(name.clone(), Tensor::from_parts_unchecked(a.shape().to_vec(), data));
        }
        Ok(out)
    }
}

impl FromIterator<(String, Tensor)> for TensorMap {
    fn from_iter<I: IntoIterator<Item = (String, Tensor)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Result of a magnitude top-k selection over a flat value sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopKSelection {
    /// Selected flat positions, strictly ascending.
    pub indices: Vec<usize>,
    /// Number of kept positions; equals `indices.len()`.
    pub count: usize,
}

/// Computes `alpha * x + y` per key.
///
/// Both maps must share key sets and shapes; key order of `x` is preserved.
pub fn elementwise_axpy(alpha: f64, x: &TensorMap, y: &TensorMap) -> Result<TensorMap> {
    x.zip_map(y, "axpy", |xv, yv| alpha * xv + yv)
}

/// Number of entries kept by a `keep_ratio` selection over `n` values.
pub fn keep_count(keep_ratio: f64, n: usize) -> usize {
    ((keep_ratio * n as f64).ceil() as usize).clamp(1, n)
}

/// Selects the positions whose magnitudes rank in the top
/// `ceil(keep_ratio * n)`, lower index winning among equal magnitudes.
///
/// Runs in expected O(n) via quickselect rather than a full sort.
pub fn top_k_by_magnitude(values: &[f32], keep_ratio: f64) -> Result<TopKSelection> {
    if values.is_empty() {
        return Err(Error::EmptyInput("top_k_by_magnitude"));
    }
    if !(keep_ratio > 0.0 && keep_ratio <= 1.0) {
        return Err(Error::RatioOutOfRange(keep_ratio));
    }
    let count = keep_count(keep_ratio, values.len());
    let mut order: Vec<usize> = (0..values.len()).collect();
    if count < values.len() {
        // Rank by (|v| descending, index ascending); the index tiebreak makes
        // the ordering total, so the selected set is unique.
        order.select_nth_unstable_by(count - 1, |&i, &j| {
            values[i]
                .abs()
                .total_cmp(&values[j].abs())
                .reverse()
                .then(i.cmp(&j))
        });
        order.truncate(count);
    }
    order.sort_unstable();
    Ok(TopKSelection {
        indices: order,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_of(pairs: &[(&str, Vec<f32>)]) -> TensorMap {
        pairs
            .iter()
            .map(|(n, v)| (n.to_string(), Tensor::vector(v.clone()).unwrap()))
            .collect()
    }

    #[test]
    fn axpy_zero_alpha_is_identity() {
        let x = map_of(&[("w", vec![9.0, -7.0])]);
        let y = map_of(&[("w", vec![1.0, 2.0])]);
        let out = elementwise_axpy(0.0, &x, &y).unwrap();
        assert_eq!(out.get("w").unwrap().data(), &[1.0, 2.0]);
    }

    #[test]
    fn axpy_unit_alpha_adds() {
        let x = map_of(&[("w", vec![1.0, 2.0])]);
        let y = map_of(&[("w", vec![3.0, 4.0])]);
        let out = elementwise_axpy(1.0, &x, &y).unwrap();
        assert_eq!(out.get("w").unwrap().data(), &[4.0, 6.0]);
    }

    #[test]
    fn axpy_scales_then_adds() {
        let x = map_of(&[("w", vec![10.0, -10.0])]);
        let y = map_of(&[("w", vec![1.0, 1.0])]);
        let out = elementwise_axpy(0.3, &x, &y).unwrap();
        assert_eq!(out.get("w").unwrap().data(), &[4.0, -2.0]);
    }

    #[test]
    fn axpy_rejects_key_mismatch() {
        let x = map_of(&[("w", vec![1.0])]);
        let y = map_of(&[("v", vec![1.0])]);
        assert!(matches!(
            elementwise_axpy(1.0, &x, &y),
            Err(Error::KeyMismatch(_))
        ));
    }

    #[test]
    fn axpy_rejects_shape_mismatch() {
        let x = map_of(&[("w", vec![1.0, 2.0])]);
        let y = map_of(&[("w", vec![1.0])]);
        assert!(matches!(
            elementwise_axpy(1.0, &x, &y),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn axpy_preserves_key_order() {
        let mut x = TensorMap::new();
        x.insert("z", Tensor::vector(vec![1.0]).unwrap());
        x.insert("a", Tensor::vector(vec![2.0]).unwrap());
        let out = elementwise_axpy(1.0, &x, &x).unwrap();
        let names: Vec<&String> = out.names().collect();
        assert_eq!(names, ["z", "a"]);
    }

    #[test]
    fn top_k_selects_by_magnitude() {
        let sel = top_k_by_magnitude(&[3.0, -1.0, 0.5, -4.0], 0.5).unwrap();
        assert_eq!(sel.indices, vec![0, 3]);
        assert_eq!(sel.count, 2);
    }

    #[test]
    fn top_k_keep_all() {
        let sel = top_k_by_magnitude(&[1.0, 2.0, 3.0], 1.0).unwrap();
        assert_eq!(sel.indices, vec![0, 1, 2]);
    }

    #[test]
    fn top_k_tie_break_prefers_lower_index() {
        let sel = top_k_by_magnitude(&[2.0, -2.0, 2.0, -2.0], 0.5).unwrap();
        assert_eq!(sel.indices, vec![0, 1]);
    }

    #[test]
    fn top_k_rejects_empty_and_bad_ratio() {
        assert!(matches!(
            top_k_by_magnitude(&[], 0.5),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            top_k_by_magnitude(&[1.0], 0.0),
            Err(Error::RatioOutOfRange(_))
        ));
        assert!(matches!(
            top_k_by_magnitude(&[1.0], 1.5),
            Err(Error::RatioOutOfRange(_))
        ));
    }

    #[test]
    fn tensor_rejects_bad_shape_and_nonfinite() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
        assert!(Tensor::new(vec![1], vec![f32::NAN]).is_err());
        assert!(Tensor::new(vec![1], vec![f32::INFINITY]).is_err());
    }

    /// Full-sort reference for the selection kernel.
    fn top_k_sort_oracle(values: &[f32], keep_ratio: f64) -> Vec<usize> {
        let count = keep_count(keep_ratio, values.len());
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| {
            values[i]
                .abs()
                .total_cmp(&values[j].abs())
                .reverse()
                .then(i.cmp(&j))
        });
        let mut kept: Vec<usize> = order[..count].to_vec();
        kept.sort_unstable();
        kept
    }

    #[test]
    fn top_k_matches_sort_oracle_with_duplicates() {
        // Deterministic pseudo-random inputs with many repeated magnitudes.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state
        };
        for case in 0..200 {
            let n = 1 + (next() % 500) as usize;
            let values: Vec<f32> = (0..n)
                .map(|_| {
                    let v = (next() % 17) as f32 - 8.0;
                    v / 4.0
                })
                .collect();
            let ratio = ((case % 10) as f64 + 1.0) / 10.0;
            let sel = top_k_by_magnitude(&values, ratio).unwrap();
            assert_eq!(sel.indices, top_k_sort_oracle(&values, ratio), "n={n} ratio={ratio}");
        }
    }
}
