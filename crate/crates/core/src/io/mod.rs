//! Versioned JSON file formats.
//!
//! Every document is a JSON object whose first two keys are
//! `"format": "retarget-kit/<kind>"` and `"version": 1`. Files are written
//! canonically (fixed key order, two-space indentation, numeric rows on one
//! line, shortest round-trip floats) and atomically (temp file + rename), so
//! saving the same value twice produces identical bytes.

mod canonical;
mod formats;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use canonical::to_canonical_string;
pub use formats::*;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {location}: {reason}")]
    Parse { path: PathBuf, location: String, reason: String },
    #[error("{path}: expected {expected} version {FORMAT_VERSION}, found {found}")]
    SchemaVersion { path: PathBuf, expected: String, found: String },
}

impl IoError {
    pub fn parse(path: &Path, location: impl Into<String>, reason: impl fmt::Display) -> Self {
        IoError::Parse { path: path.to_path_buf(), location: location.into(), reason: reason.to_string() }
    }
}

/// Document kinds, named by the `format` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Skeleton,
    Motion,
    Correspondence,
    DofConfig,
    Codebook,
    Matrix,
    Tokens,
    Report,
}

impl Kind {
    pub fn tag(self) -> &'static str {
        match self {
            Kind::Skeleton => "retarget-kit/skeleton",
            Kind::Motion => "retarget-kit/motion",
            Kind::Correspondence => "retarget-kit/correspondence",
            Kind::DofConfig => "retarget-kit/dofconfig",
            Kind::Codebook => "retarget-kit/codebook",
            Kind::Matrix => "retarget-kit/matrix",
            Kind::Tokens => "retarget-kit/tokens",
            Kind::Report => "retarget-kit/report",
        }
    }
}

#[derive(Deserialize)]
struct Header {
    format: Option<serde_json::Value>,
    version: Option<serde_json::Value>,
}

/// Reads a whole file as UTF-8.
pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Parses `text` as a document of `kind`, reporting syntax and schema errors
/// with line, column and the JSON path of the offending value.
pub fn parse_document<T: DeserializeOwned>(path: &Path, text: &str, kind: Kind) -> Result<T, IoError> {
    let header: Header = serde_json::from_str(text).map_err(|e| json_error(path, "", &e))?;
    let format = header.format.ok_or_else(|| IoError::parse(path, "format", "missing `format` key"))?;
    if format.as_str() != Some(kind.tag()) {
        return Err(IoError::parse(path, "format", format!("expected \"{}\", found {format}", kind.tag())));
    }
    match header.version {
        Some(v) if v.as_u64() == Some(u64::from(FORMAT_VERSION)) => {}
        Some(v) => {
            return Err(IoError::SchemaVersion { path: path.to_path_buf(), expected: kind.tag().into(), found: v.to_string() })
        }
        None => return Err(IoError::parse(path, "version", "missing `version` key")),
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        json_error(path, &at, e.inner())
    })?;
    de.end().map_err(|e| json_error(path, "", &e))?;
    Ok(value)
}

fn json_error(path: &Path, at: &str, e: &serde_json::Error) -> IoError {
    let mut location = format!("line {} column {}", e.line(), e.column());
    if !at.is_empty() && at != "." {
        location.push_str(&format!(" at `{at}`"));
    }
    let reason = e.to_string();
    // serde_json appends its own position; drop it since `location` has it
    let reason = match reason.rfind(" at line ") {
        Some(i) => reason[..i].to_string(),
        None => reason,
    };
    IoError::Parse { path: path.to_path_buf(), location, reason }
}

pub fn load_document<T: DeserializeOwned>(path: &Path, kind: Kind) -> Result<T, IoError> {
    parse_document(path, &read_text(path)?, kind)
}

/// Canonical text for a serializable document.
pub fn document_string<T: Serialize>(doc: &T) -> Result<String, IoError> {
    let value = serde_json::to_value(doc)
        .map_err(|e| IoError::parse(Path::new("<memory>"), "", format!("cannot serialize: {e}")))?;
    // serde_json turns NaN and infinities into null
    if let Some(at) = find_null(&value, String::new()) {
        return Err(IoError::parse(Path::new("<memory>"), at, "non-finite number"));
    }
    Ok(to_canonical_string(&value))
}

fn find_null(value: &serde_json::Value, at: String) -> Option<String> {
    use serde_json::Value;
    match value {
        Value::Null => Some(at),
        Value::Array(items) => items.iter().enumerate().find_map(|(i, v)| find_null(v, format!("{at}[{i}]"))),
        Value::Object(map) => map.iter().find_map(|(k, v)| find_null(v, if at.is_empty() { k.clone() } else { format!("{at}.{k}") })),
        _ => None,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    use std::io::Write;
    let io_err = |source| IoError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn save_document<T: Serialize>(path: &Path, doc: &T) -> Result<(), IoError> {
    write_atomic(path, document_string(doc)?.as_bytes())
}

/// Writes an arbitrary JSON report in canonical form with the report header.
pub fn save_report(path: &Path, body: serde_json::Map<String, serde_json::Value>) -> Result<(), IoError> {
    let mut doc = serde_json::Map::new();
    doc.insert("format".into(), Kind::Report.tag().into());
    doc.insert("version".into(), FORMAT_VERSION.into());
    doc.extend(body);
    write_atomic(path, to_canonical_string(&serde_json::Value::Object(doc)).as_bytes())
}
