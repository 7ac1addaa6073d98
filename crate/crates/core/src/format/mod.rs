//! On-disk formats: activation dumps, capture manifests, reports and
//! architecture descriptions. All text output is byte-deterministic.

mod arch;
mod dump;
mod manifest;
mod report;

use std::io;

use thiserror::Error;

use crate::activation::LayoutError;

pub use arch::{parse_architecture, write_architecture};
pub use dump::{
    read_dump, read_dump_from, write_dump, write_dump_to, DumpHeader, DumpReader, DTYPE_F32, DUMP_MAGIC,
    DUMP_VERSION, MAX_NAME_LEN,
};
pub use manifest::{
    parse_labels, read_labels, read_manifest, write_labels, write_manifest, LoadedManifest, Manifest,
    ManifestEntry, MANIFEST_FORMAT,
};
pub use report::{emit_report, parse_report, sort_rows, Metric, ReportFormat, ReportRow, CSV_HEADER};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"SATD\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),
    #[error("header is truncated")]
    TruncatedHeader,
    #[error("payload is truncated (expected {expected} bytes)")]
    TruncatedPayload { expected: usize },
    #[error("unexpected bytes after the payload")]
    TrailingBytes,
    #[error("layer name of {0} bytes exceeds the 256-byte limit")]
    OversizedName(usize),
    #[error("layer name is not valid UTF-8")]
    InvalidName,
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown layer kind {kind:?}")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: missing field {field:?}")]
    MissingField { line: usize, field: &'static str },
    #[error("architecture description is empty")]
    EmptyArchitecture,
    #[error("invalid report row: {0}")]
    InvalidRow(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
