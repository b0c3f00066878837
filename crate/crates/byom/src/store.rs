//! Bit-exact serialization for checkpoints, sparse deltas, and low-rank
//! adapter files, plus the fingerprint that guards delta application.
//!
//! All three kinds share one container layout: an 8-byte little-endian
//! header length, a UTF-8 JSON header mapping tensor names to
//! `{"dtype", "shape", "data_offsets"}` entries plus a `"__metadata__"`
//! string map, and the concatenated raw little-endian payload. Offsets are
//! relative to the payload start; tensors are serialized in map order with
//! no padding, so writing the same value twice yields identical bytes.
//!
//! Extensions: `.ckpt` (checkpoint), `.sdelta` (sparse delta), `.lora`
//! (adapter, factor or truncated variant).

use crate::error::{Error, Result};
use crate::tensor::{Tensor, TensorMap};
use indexmap::IndexMap;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Version tag written into every file's metadata.
pub const FORMAT_VERSION: &str = "1";

const KIND_CHECKPOINT: &str = "checkpoint";
const KIND_SPARSE_DELTA: &str = "sparse_delta";
const KIND_LORA: &str = "lora";

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A named tensor collection plus string metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub tensors: TensorMap,
    pub metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    /// Wraps a tensor map, stamping the format version and kind.
    pub fn new(tensors: TensorMap) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        metadata.insert("format_version".into(), FORMAT_VERSION.into());
        metadata.insert("kind".into(), KIND_CHECKPOINT.into());
        Self::from_parts(tensors, metadata)
    }

    /// Wraps tensors with caller-supplied metadata (format_version required).
    pub fn from_parts(tensors: TensorMap, metadata: BTreeMap<String, String>) -> Result<Self> {
        if !metadata.contains_key("format_version") {
            return Err(Error::MalformedHeader(
                "checkpoint metadata must include format_version".into(),
            ));
        }
        for name in tensors.names() {
            validate_name(name)?;
        }
        Ok(Self { tensors, metadata })
    }

    /// Total number of stored parameter values.
    pub fn value_count(&self) -> usize {
        self.tensors.value_count()
    }
}

/// Which base a sparse delta must be applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    /// Delta over the pretrained checkpoint.
    Pretrained,
    /// Delta over a merged checkpoint.
    Merged,
}

impl BaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::Pretrained => "pretrained",
            BaseKind::Merged => "merged",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "pretrained" => Ok(BaseKind::Pretrained),
            "merged" => Ok(BaseKind::Merged),
            other => Err(Error::MalformedHeader(format!("unknown base_kind `{other}`"))),
        }
    }
}

/// Pruned task vector for one source tensor: ascending flat positions and
/// their values, plus the source shape they index into.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEntry {
    pub shape: Vec<usize>,
    pub indices: Vec<u64>,
    pub values: Vec<f32>,
}

/// One task's pruned delta over a base checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDelta {
    /// Per-source-tensor entries; tensors with no kept coordinates are omitted.
    pub entries: IndexMap<String, SparseEntry>,
    pub keep_ratio: f64,
    pub base_fingerprint: String,
    pub base_kind: BaseKind,
}

impl SparseDelta {
    /// Number of kept values across all tensors.
    pub fn kept_count(&self) -> usize {
        self.entries.values().map(|e| e.values.len()).sum()
    }

    fn validate(&self) -> Result<()> {
        if !(self.keep_ratio > 0.0 && self.keep_ratio <= 1.0) {
            return Err(Error::RatioOutOfRange(self.keep_ratio));
        }
        for (name, entry) in &self.entries {
            validate_name(name)?;
            if entry.indices.len() != entry.values.len() {
                return Err(Error::MalformedHeader(format!(
                    "`{name}`: {} indices vs {} values",
                    entry.indices.len(),
                    entry.values.len()
                )));
            }
            let size: usize = entry.shape.iter().product();
            let mut prev: Option<u64> = None;
            for &idx in &entry.indices {
                if idx >= size as u64 {
                    return Err(Error::IndexOutOfRange {
                        name: name.clone(),
                        index: idx,
                        size,
                    });
                }
                if let Some(p) = prev {
                    if idx <= p {
                        return Err(Error::MalformedHeader(format!(
                            "`{name}`: indices not strictly ascending"
                        )));
                    }
                }
                prev = Some(idx);
            }
        }
        Ok(())
    }
}

/// Factor pair for one target tensor: `a` is `d_out × r`, `b` is `d_in × r`,
/// and the adapter's update is `a · bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraFactors {
    pub a: Tensor,
    pub b: Tensor,
}

/// A task's low-rank adapter in factor form.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    pub entries: IndexMap<String, LoraFactors>,
    pub rank: usize,
    pub base_fingerprint: String,
}

impl LoraAdapter {
    fn validate(&self) -> Result<()> {
        for (name, f) in &self.entries {
            validate_name(name)?;
            let (_, ra) = f.a.dims2()?;
            let (_, rb) = f.b.dims2()?;
            if ra != rb || ra != self.rank {
                return Err(Error::InnerDimMismatch { left: ra, right: rb });
            }
        }
        Ok(())
    }
}

/// Truncated SVD triple for one target tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedEntry {
    pub u: Tensor,
    pub s: Vec<f32>,
    pub v: Tensor,
}

/// A task's adapter compressed to rank `rank` from a rank `source_rank`
/// factor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedLora {
    pub entries: IndexMap<String, TruncatedEntry>,
    pub rank: usize,
    pub source_rank: usize,
    pub base_fingerprint: String,
}

impl TruncatedLora {
    fn validate(&self) -> Result<()> {
        for (name, e) in &self.entries {
            validate_name(name)?;
            let (_, ku) = e.u.dims2()?;
            let (_, kv) = e.v.dims2()?;
            if ku != self.rank || kv != self.rank || e.s.len() != self.rank {
                return Err(Error::RankOutOfRange {
                    rank: self.rank,
                    max: ku.min(kv).min(e.s.len()),
                });
            }
            for w in e.s.windows(2) {
                if w[0] < w[1] {
                    return Err(Error::MalformedHeader(format!(
                        "`{name}`: singular values not descending"
                    )));
                }
            }
            if e.s.iter().any(|&x| x < 0.0) {
                return Err(Error::MalformedHeader(format!(
                    "`{name}`: negative singular value"
                )));
            }
        }
        Ok(())
    }
}

/// On-disk adapter file: every entry is the same variant.
#[derive(Debug, Clone, PartialEq)]
pub enum LoraFile {
    Factor(LoraAdapter),
    Truncated(TruncatedLora),
}

/// Any artifact this crate can read, for inspection tooling.
#[derive(Debug, Clone)]
pub enum Artifact {
    Checkpoint(Checkpoint),
    SparseDelta(SparseDelta),
    Lora(LoraFile),
}

// ---------------------------------------------------------------------------
// Fingerprint
// ---------------------------------------------------------------------------

/// 256-bit digest over the canonical little-endian serialization of the
/// tensors (names, shapes, data); metadata is excluded by construction.
pub fn fingerprint(c: &Checkpoint) -> String {
    let mut hasher = Sha256::new();
    for (name, tensor) in c.tensors.iter() {
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update((tensor.shape().len() as u64).to_le_bytes());
        for &d in tensor.shape() {
            hasher.update((d as u64).to_le_bytes());
        }
        hasher.update((tensor.len() as u64).to_le_bytes());
        for &v in tensor.data() {
            hasher.update(v.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Container plumbing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F32,
    U64,
}

impl Dtype {
    fn as_str(self) -> &'static str {
        match self {
            Dtype::F32 => "F32",
            Dtype::U64 => "U64",
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum RawData {
    F32(Vec<f32>),
    U64(Vec<u64>),
}

impl RawData {
    fn dtype(&self) -> Dtype {
        match self {
            RawData::F32(_) => Dtype::F32,
            RawData::U64(_) => Dtype::U64,
        }
    }

    fn len(&self) -> usize {
        match self {
            RawData::F32(v) => v.len(),
            RawData::U64(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone)]
struct RawEntry {
    name: String,
    shape: Vec<usize>,
    data: RawData,
}

fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains('\0') || name == "__metadata__" {
        return Err(Error::InvalidTensor {
            name: name.into(),
            reason: "tensor names must be non-empty, NUL-free, and not reserved".into(),
        });
    }
    Ok(())
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::IoFailure {
        path: path.display().to_string(),
        source,
    }
}

fn write_container(
    path: &Path,
    metadata: &BTreeMap<String, String>,
    entries: &[RawEntry],
) -> Result<()> {
    let mut header = Map::new();
    let mut meta_obj = Map::new();
    for (k, v) in metadata {
        meta_obj.insert(k.clone(), Value::String(v.clone()));
    }
    header.insert("__metadata__".into(), Value::Object(meta_obj));

    let mut offset = 0usize;
    for entry in entries {
        let bytes = entry.data.len() * entry.data.dtype().size();
        header.insert(
            entry.name.clone(),
            json!({
                "dtype": entry.data.dtype().as_str(),
                "shape": entry.shape,
                "data_offsets": [offset, offset + bytes],
            }),
        );
        offset += bytes;
    }

    let header_bytes = serde_json::to_vec(&Value::Object(header))
        .map_err(|e| Error::MalformedHeader(format!("header serialization failed: {e}")))?;

    let mut out = Vec::with_capacity(8 + header_bytes.len() + offset);
    out.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    for entry in entries {
        match &entry.data {
            RawData::F32(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            RawData::U64(v) => {
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    fs::write(path, &out).map_err(|e| io_err(path, e))
}

fn read_container(path: &Path) -> Result<(BTreeMap<String, String>, Vec<RawEntry>)> {
    let raw = fs::read(path).map_err(|e| io_err(path, e))?;
    if raw.len() < 8 {
        return Err(Error::MalformedHeader("file shorter than 8-byte length prefix".into()));
    }
    let header_len = u64::from_le_bytes(raw[..8].try_into().unwrap()) as usize;
    if raw.len() - 8 < header_len {
        return Err(Error::MalformedHeader(format!(
            "declared header length {header_len} exceeds file size"
        )));
    }
    let header: Value = serde_json::from_slice(&raw[8..8 + header_len])
        .map_err(|e| Error::MalformedHeader(format!("header is not valid JSON: {e}")))?;
    let header = match header {
        Value::Object(map) => map,
        _ => return Err(Error::MalformedHeader("header is not a JSON object".into())),
    };
    let payload = &raw[8 + header_len..];

    let mut metadata = BTreeMap::new();
    let mut entries = Vec::new();
    let mut cursor = 0usize;

    for (name, value) in header {
        if name == "__metadata__" {
            let obj = value.as_object().ok_or_else(|| {
                Error::MalformedHeader("__metadata__ is not an object".into())
            })?;
            for (k, v) in obj {
                let s = v.as_str().ok_or_else(|| {
                    Error::MalformedHeader(format!("metadata `{k}` is not a string"))
                })?;
                metadata.insert(k.clone(), s.to_string());
            }
            continue;
        }
        validate_name(&name).map_err(|_| {
            Error::MalformedHeader(format!("invalid tensor name `{name}`"))
        })?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::MalformedHeader(format!("entry `{name}` is not an object")))?;

        let dtype = match obj.get("dtype").and_then(Value::as_str) {
            Some("F32") => Dtype::F32,
            Some("U64") => Dtype::U64,
            Some(other) => {
                return Err(Error::UnsupportedDtype {
                    name,
                    dtype: other.to_string(),
                })
            }
            None => return Err(Error::MalformedHeader(format!("entry `{name}` missing dtype"))),
        };

        let shape: Vec<usize> = obj
            .get("shape")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::MalformedHeader(format!("entry `{name}` missing shape")))?
            .iter()
            .map(|v| {
                v.as_u64()
                    .filter(|&d| d > 0)
                    .map(|d| d as usize)
                    .ok_or_else(|| {
                        Error::MalformedHeader(format!("entry `{name}` has a non-positive dim"))
                    })
            })
            .collect::<Result<_>>()?;
        let count: usize = shape.iter().product();

        let offsets = obj
            .get("data_offsets")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::MalformedHeader(format!("entry `{name}` missing data_offsets")))?;
        if offsets.len() != 2 {
            return Err(Error::MalformedHeader(format!(
                "entry `{name}` data_offsets must have two elements"
            )));
        }
        let begin = offsets[0].as_u64().ok_or_else(|| {
            Error::MalformedHeader(format!("entry `{name}` has a non-integer offset"))
        })? as usize;
        let end = offsets[1].as_u64().ok_or_else(|| {
            Error::MalformedHeader(format!("entry `{name}` has a non-integer offset"))
        })? as usize;

        if end < begin || end - begin != count * dtype.size() {
            return Err(Error::MalformedHeader(format!(
                "entry `{name}` offsets [{begin},{end}] disagree with shape {shape:?}"
            )));
        }
        if begin < cursor {
            return Err(Error::OffsetOverlap { name });
        }
        if begin > cursor {
            return Err(Error::MalformedHeader(format!(
                "entry `{name}` leaves a payload gap at byte {cursor}"
            )));
        }
        if end > payload.len() {
            return Err(Error::TruncatedPayload {
                name,
                end,
                payload_len: payload.len(),
            });
        }
        cursor = end;

        let bytes = &payload[begin..end];
        let data = match dtype {
            Dtype::F32 => {
                let mut vals = Vec::with_capacity(count);
                for chunk in bytes.chunks_exact(4) {
                    let v = f32::from_le_bytes(chunk.try_into().unwrap());
                    if !v.is_finite() {
                        return Err(Error::NonFinite(name));
                    }
                    vals.push(v);
                }
                RawData::F32(vals)
            }
            Dtype::U64 => {
                let vals = bytes
                    .chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                RawData::U64(vals)
            }
        };
        entries.push(RawEntry { name, shape, data });
    }

    if cursor != payload.len() {
        return Err(Error::MalformedHeader(format!(
            "payload has {} trailing bytes past the last entry",
            payload.len() - cursor
        )));
    }
    Ok((metadata, entries))
}

fn expect_kind(metadata: &BTreeMap<String, String>, expected: &str) -> Result<()> {
    if !metadata.contains_key("format_version") {
        return Err(Error::MalformedHeader("metadata missing format_version".into()));
    }
    match metadata.get("kind") {
        Some(kind) if kind != expected => Err(Error::MalformedHeader(format!(
            "expected a {expected} file, found kind `{kind}`"
        ))),
        _ => Ok(()),
    }
}

fn meta_field<'a>(metadata: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    metadata
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::MalformedHeader(format!("metadata missing `{key}`")))
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

/// Writes a checkpoint in the container layout; byte-exact for equal inputs.
pub fn write_checkpoint(path: impl AsRef<Path>, c: &Checkpoint) -> Result<()> {
    if !c.metadata.contains_key("format_version") {
        return Err(Error::MalformedHeader(
            "checkpoint metadata must include format_version".into(),
        ));
    }
    let entries: Vec<RawEntry> = c
        .tensors
        .iter()
        .map(|(name, t)| RawEntry {
            name: name.clone(),
            shape: t.shape().to_vec(),
            data: RawData::F32(t.data().to_vec()),
        })
        .collect();
    write_container(path.as_ref(), &c.metadata, &entries)
}

/// Reads a checkpoint written by [`write_checkpoint`].
pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let (metadata, entries) = read_container(path.as_ref())?;
    expect_kind(&metadata, KIND_CHECKPOINT)?;
    let mut tensors = TensorMap::new();
    for entry in entries {
        let data = match entry.data {
            RawData::F32(v) => v,
            RawData::U64(_) => {
                return Err(Error::UnsupportedDtype {
                    name: entry.name,
                    dtype: "U64".into(),
                })
            }
        };
        tensors.insert(entry.name, Tensor::new(entry.shape, data)?);
    }
    Checkpoint::from_parts(tensors, metadata)
}

// ---------------------------------------------------------------------------
// Sparse delta I/O
// ---------------------------------------------------------------------------

fn format_shape(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            part.parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| Error::MalformedHeader(format!("bad shape component `{part}`")))
        })
        .collect()
}

/// Writes one task's sparse delta. Each source tensor becomes an
/// `<name>.indices` (U64) and `<name>.values` (F32) pair; the source shape
/// is recorded in metadata.
pub fn write_sparse_delta(path: impl AsRef<Path>, delta: &SparseDelta) -> Result<()> {
    delta.validate()?;
    let mut metadata = BTreeMap::new();
    metadata.insert("format_version".into(), FORMAT_VERSION.into());
    metadata.insert("kind".into(), KIND_SPARSE_DELTA.into());
    metadata.insert("keep_ratio".into(), format!("{}", delta.keep_ratio));
    metadata.insert("base_fingerprint".into(), delta.base_fingerprint.clone());
    metadata.insert("base_kind".into(), delta.base_kind.as_str().into());
    let mut entries = Vec::new();
    for (name, entry) in &delta.entries {
        if entry.values.is_empty() {
            continue;
        }
        metadata.insert(format!("shape:{name}"), format_shape(&entry.shape));
        entries.push(RawEntry {
            name: format!("{name}.indices"),
            shape: vec![entry.indices.len()],
            data: RawData::U64(entry.indices.clone()),
        });
        entries.push(RawEntry {
            name: format!("{name}.values"),
            shape: vec![entry.values.len()],
            data: RawData::F32(entry.values.clone()),
        });
    }
    write_container(path.as_ref(), &metadata, &entries)
}

/// Reads a sparse delta, validating index bounds and ordering.
pub fn read_sparse_delta(path: impl AsRef<Path>) -> Result<SparseDelta> {
    let (metadata, raw_entries) = read_container(path.as_ref())?;
    expect_kind(&metadata, KIND_SPARSE_DELTA)?;
    let keep_ratio: f64 = meta_field(&metadata, "keep_ratio")?
        .parse()
        .map_err(|_| Error::MalformedHeader("keep_ratio is not a number".into()))?;
    let base_fingerprint = meta_field(&metadata, "base_fingerprint")?.to_string();
    let base_kind = BaseKind::parse(meta_field(&metadata, "base_kind")?)?;

    let mut indices: IndexMap<String, Vec<u64>> = IndexMap::new();
    let mut values: IndexMap<String, Vec<f32>> = IndexMap::new();
    for entry in raw_entries {
        if let Some(source) = entry.name.strip_suffix(".indices") {
            match entry.data {
                RawData::U64(v) => {
                    indices.insert(source.to_string(), v);
                }
                RawData::F32(_) => {
                    return Err(Error::UnsupportedDtype {
                        name: entry.name,
                        dtype: "F32".into(),
                    })
                }
            }
        } else if let Some(source) = entry.name.strip_suffix(".values") {
            match entry.data {
                RawData::F32(v) => {
                    values.insert(source.to_string(), v);
                }
                RawData::U64(_) => {
                    return Err(Error::UnsupportedDtype {
                        name: entry.name,
                        dtype: "U64".into(),
                    })
                }
            }
        } else {
            return Err(Error::MalformedHeader(format!(
                "unexpected entry `{}` in sparse delta",
                entry.name
            )));
        }
    }

    let mut entries = IndexMap::new();
    for (name, idx) in indices {
        let vals = values.shift_remove(&name).ok_or_else(|| {
            Error::MalformedHeader(format!("`{name}` has indices but no values"))
        })?;
        let shape = parse_shape(meta_field(&metadata, &format!("shape:{name}"))?)?;
        entries.insert(
            name,
            SparseEntry {
                shape,
                indices: idx,
                values: vals,
            },
        );
    }
    if let Some((name, _)) = values.into_iter().next() {
        return Err(Error::MalformedHeader(format!(
            "`{name}` has values but no indices"
        )));
    }

    let delta = SparseDelta {
        entries,
        keep_ratio,
        base_fingerprint,
        base_kind,
    };
    delta.validate()?;
    Ok(delta)
}

// ---------------------------------------------------------------------------
// Adapter I/O
// ---------------------------------------------------------------------------

/// Writes an adapter file in either variant.
pub fn write_lora(path: impl AsRef<Path>, file: &LoraFile) -> Result<()> {
    let mut metadata = BTreeMap::new();
    metadata.insert("format_version".into(), FORMAT_VERSION.into());
    metadata.insert("kind".into(), KIND_LORA.into());
    let mut entries = Vec::new();
    match file {
        LoraFile::Factor(adapter) => {
            adapter.validate()?;
            metadata.insert("variant".into(), "factor".into());
            metadata.insert("rank".into(), adapter.rank.to_string());
            metadata.insert("base_fingerprint".into(), adapter.base_fingerprint.clone());
            for (name, f) in &adapter.entries {
                entries.push(RawEntry {
                    name: format!("{name}.A"),
                    shape: f.a.shape().to_vec(),
                    data: RawData::F32(f.a.data().to_vec()),
                });
                entries.push(RawEntry {
                    name: format!("{name}.B"),
                    shape: f.b.shape().to_vec(),
                    data: RawData::F32(f.b.data().to_vec()),
                });
            }
        }
        LoraFile::Truncated(t) => {
            t.validate()?;
            metadata.insert("variant".into(), "truncated".into());
            metadata.insert("rank".into(), t.rank.to_string());
            metadata.insert("source_rank".into(), t.source_rank.to_string());
            metadata.insert("base_fingerprint".into(), t.base_fingerprint.clone());
            for (name, e) in &t.entries {
                entries.push(RawEntry {
                    name: format!("{name}.U"),
                    shape: e.u.shape().to_vec(),
                    data: RawData::F32(e.u.data().to_vec()),
                });
                entries.push(RawEntry {
                    name: format!("{name}.S"),
                    shape: vec![e.s.len()],
                    data: RawData::F32(e.s.clone()),
                });
                entries.push(RawEntry {
                    name: format!("{name}.V"),
                    shape: e.v.shape().to_vec(),
                    data: RawData::F32(e.v.data().to_vec()),
                });
            }
        }
    }
    write_container(path.as_ref(), &metadata, &entries)
}

/// Reads an adapter file, rejecting variant mixing.
pub fn read_lora(path: impl AsRef<Path>) -> Result<LoraFile> {
    let (metadata, raw_entries) = read_container(path.as_ref())?;
    expect_kind(&metadata, KIND_LORA)?;
    let variant = meta_field(&metadata, "variant")?.to_string();
    let rank: usize = meta_field(&metadata, "rank")?
        .parse()
        .map_err(|_| Error::MalformedHeader("rank is not an integer".into()))?;
    let base_fingerprint = meta_field(&metadata, "base_fingerprint")?.to_string();

    let mut parts: IndexMap<String, IndexMap<&'static str, (Vec<usize>, Vec<f32>)>> =
        IndexMap::new();
    for entry in raw_entries {
        let (source, role) = match entry.name.rsplit_once('.') {
            Some((s, "A")) => (s.to_string(), "A"),
            Some((s, "B")) => (s.to_string(), "B"),
            Some((s, "U")) => (s.to_string(), "U"),
            Some((s, "S")) => (s.to_string(), "S"),
            Some((s, "V")) => (s.to_string(), "V"),
            _ => {
                return Err(Error::MalformedHeader(format!(
                    "unexpected entry `{}` in adapter file",
                    entry.name
                )))
            }
        };
        let factor_role = matches!(role, "A" | "B");
        if (variant == "factor") != factor_role {
            return Err(Error::VariantMixing(format!(
                "`{}` does not belong in a {variant} file",
                entry.name
            )));
        }
        let data = match entry.data {
            RawData::F32(v) => v,
            RawData::U64(_) => {
                return Err(Error::UnsupportedDtype {
                    name: entry.name,
                    dtype: "U64".into(),
                })
            }
        };
        parts
            .entry(source)
            .or_default()
            .insert(role, (entry.shape, data));
    }

    match variant.as_str() {
        "factor" => {
            let mut entries = IndexMap::new();
            for (name, mut roles) in parts {
                let (a_shape, a_data) = roles.shift_remove("A").ok_or_else(|| {
                    Error::MalformedHeader(format!("`{name}` missing A factor"))
                })?;
                let (b_shape, b_data) = roles.shift_remove("B").ok_or_else(|| {
                    Error::MalformedHeader(format!("`{name}` missing B factor"))
                })?;
                entries.insert(
                    name,
                    LoraFactors {
                        a: Tensor::new(a_shape, a_data)?,
                        b: Tensor::new(b_shape, b_data)?,
                    },
                );
            }
            let adapter = LoraAdapter {
                entries,
                rank,
                base_fingerprint,
            };
            adapter.validate()?;
            Ok(LoraFile::Factor(adapter))
        }
        "truncated" => {
            let source_rank: usize = meta_field(&metadata, "source_rank")?
                .parse()
                .map_err(|_| Error::MalformedHeader("source_rank is not an integer".into()))?;
            let mut entries = IndexMap::new();
            for (name, mut roles) in parts {
                let (u_shape, u_data) = roles.shift_remove("U").ok_or_else(|| {
                    Error::MalformedHeader(format!("`{name}` missing U factor"))
                })?;
                let (_, s_data) = roles.shift_remove("S").ok_or_else(|| {
                    Error::MalformedHeader(format!("`{name}` missing S values"))
                })?;
                let (v_shape, v_data) = roles.shift_remove("V").ok_or_else(|| {
                    Error::MalformedHeader(format!("`{name}` missing V factor"))
                })?;
                entries.insert(
                    name,
                    TruncatedEntry {
                        u: Tensor::new(u_shape, u_data)?,
                        s: s_data,
                        v: Tensor::new(v_shape, v_data)?,
                    },
                );
            }
            let trunc = TruncatedLora {
                entries,
                rank,
                source_rank,
                base_fingerprint,
            };
            trunc.validate()?;
            Ok(LoraFile::Truncated(trunc))
        }
        other => Err(Error::MalformedHeader(format!("unknown variant `{other}`"))),
    }
}

/// Reads any artifact kind by inspecting the metadata.
pub fn read_artifact(path: impl AsRef<Path>) -> Result<Artifact> {
    let path = path.as_ref();
    let (metadata, _) = read_container(path)?;
    match metadata.get("kind").map(String::as_str) {
        Some(KIND_SPARSE_DELTA) => Ok(Artifact::SparseDelta(read_sparse_delta(path)?)),
        Some(KIND_LORA) => Ok(Artifact::Lora(read_lora(path)?)),
        _ => Ok(Artifact::Checkpoint(read_checkpoint(path)?)),
    }
}
