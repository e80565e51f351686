//! On-disk store formats.
//!
//! GEMB (little-endian):
//!
//! ```text
//! magic      4 bytes  "GEMB"
//! version    u16      1
//! dim        u32
//! count      u64
//! count × { name_len u16 | name (UTF-8) | context_id u8 | dim × f32 }
//! ```
//!
//! The text alternative is JSON lines with keys `entity`, `context`, `vector`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ContextId, EmbeddingRecord, EmbeddingStore, Result, StoreError};

const MAGIC: &[u8; 4] = b"GEMB";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreFormat {
    Binary,
    Text,
}

fn format_err(offset: usize, message: impl Into<String>) -> StoreError {
    StoreError::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(format_err(
                self.pos,
                format!("truncated {what}: need {n} bytes, {} left", self.buf.len() - self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn decode_binary(buf: &[u8]) -> Result<EmbeddingStore> {
    if buf.len() < HEADER_LEN {
        return Err(format_err(0, "missing header"));
    }
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(format_err(0, "magic mismatch, expected GEMB"));
    }
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let dim = cur.u32("dim")? as usize;
    let count = cur.u64("record count")?;

    let mut records = Vec::new();
    for i in 0..count {
        let start = cur.pos;
        let name_len = cur.u16("name length")? as usize;
        let name = cur.take(name_len, "entity name")?;
        let entity = std::str::from_utf8(name)
            .map_err(|_| format_err(start + 2, format!("record {i}: entity name is not UTF-8")))?
            .to_string();
        let context = ContextId(cur.u8("context id")?);
        let raw = cur.take(dim * 4, "vector")?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        records.push(EmbeddingRecord {
            entity,
            context,
            vector,
        });
    }
    if cur.pos != buf.len() {
        return Err(format_err(
            cur.pos,
            format!("{} trailing bytes after {count} records", buf.len() - cur.pos),
        ));
    }
    EmbeddingStore::with_dim(dim, records)
}

fn encode_binary(store: &EmbeddingStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + store.len() * (3 + 16 + store.dim() * 4));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(store.len() as u64).to_le_bytes());
    for r in store.records() {
        out.extend_from_slice(&(r.entity.len() as u16).to_le_bytes());
        out.extend_from_slice(r.entity.as_bytes());
        out.push(r.context.0);
        for v in &r.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode_text(buf: &[u8]) -> Result<EmbeddingStore> {
    let text = std::str::from_utf8(buf).map_err(|e| format_err(e.valid_up_to(), "text store is not UTF-8"))?;
    let mut records = Vec::new();
    let mut dim = None;
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let line_start = offset;
        offset += line.len();
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord = serde_json::from_str(line)
            .map_err(|e| format_err(line_start, format!("line {}: {e}", i + 1)))?;
        let d = *dim.get_or_insert(rec.vector.len());
        if rec.vector.len() != d {
            return Err(format_err(
                line_start,
                format!("line {}: dimension {} in a dimension-{d} store", i + 1, rec.vector.len()),
            ));
        }
        records.push(rec);
    }
    let dim = dim.ok_or_else(|| format_err(0, "missing header: no records in text store"))?;
    EmbeddingStore::with_dim(dim, records)
}

fn encode_text(store: &EmbeddingStore) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in store.records() {
        if r.vector.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::Invalid(format!(
                "{:?}: non-finite values cannot be written as text",
                r.entity
            )));
        }
        serde_json::to_writer(&mut out, r).map_err(|e| StoreError::Invalid(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Reads a store, detecting the format from its first bytes.
pub fn read_store(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if buf.is_empty() {
        return Err(format_err(0, "missing header: empty file"));
    }
    if buf.starts_with(MAGIC) {
        return decode_binary(&buf);
    }
    match buf.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => decode_text(&buf),
        _ => Err(format_err(0, "magic mismatch: neither GEMB nor JSON lines")),
    }
}

/// Validates `records` and writes them. Binary output reloads bit-exactly;
/// text output uses shortest round-trip decimal for each `f32`, which also
/// reloads exactly.
pub fn write_store(records: &[EmbeddingRecord], path: impl AsRef<Path>, format: StoreFormat) -> Result<()> {
    let path = path.as_ref();
    let store = EmbeddingStore::new(records.to_vec())?;
    let bytes = match format {
        StoreFormat::Binary => encode_binary(&store),
        StoreFormat::Text => encode_text(&store)?,
    };
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(&bytes).map_err(io_err)?;
    Ok(())
}

/// Metadata written next to a store by the extraction tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionMetadata {
    pub model_id: String,
    #[serde(default)]
    pub layer_policy: Option<String>,
    #[serde(default)]
    pub templates: Vec<String>,
    #[serde(rename = "D", alias = "dim")]
    pub dim: usize,
    #[serde(rename = "L", alias = "layers", default)]
    pub layers: Option<u32>,
}

/// `<store path>.meta.json`
pub fn sidecar_path(store: &Path) -> PathBuf {
    let mut name = store.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Reads the sidecar if present.
pub fn read_sidecar(store: impl AsRef<Path>) -> Result<Option<ExtractionMetadata>> {
    let path = sidecar_path(store.as_ref());
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|source| StoreError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| StoreError::Invalid(format!("{}: {e}", path.display())))
}
