//! Snapshot tables, the capture manifest, and loading both from disk.
//!
//! A snapshot is one state of the tracked table at a marker point in a
//! preprocessing script. Rows are identified by an explicit row-id column
//! written by the capture shim, so identity survives deletions and reorders.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{diff_step, DiffOptions};
use crate::warning::Warning;

/// Row-id column name used when the manifest does not name one.
pub const DEFAULT_ROWID_COLUMN: &str = "__rowid__";

/// Only manifest version understood by this build.
pub const MANIFEST_VERSION: u32 = 1;

/// Recommended bounds on the number of snapshots in one timeline.
pub const MAX_RECOMMENDED_SNAPSHOTS: usize = 10;

pub fn default_na_tokens() -> Vec<String> {
    vec![String::new(), "NA".to_string()]
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },
    #[error("manifest {path} has version {found}; only version {MANIFEST_VERSION} is supported")]
    VersionUnsupported { path: PathBuf, found: u64 },
    #[error("snapshot {index} ({label}) points at {path}, which does not exist")]
    MissingSnapshotFile {
        index: usize,
        label: String,
        path: PathBuf,
    },
    #[error("{path}: row-id column `{column}` not found in header")]
    MissingRowIdColumn { path: PathBuf, column: String },
    #[error("{path}: row id {row_id} appears more than once")]
    DuplicateRowId { path: PathBuf, row_id: RowId },
    #[error("{path}: `{value}` in row-id column on record {record} is not an integer")]
    InvalidRowId {
        path: PathBuf,
        record: usize,
        value: String,
    },
    #[error("{path}: column `{column}` appears more than once in the header")]
    DuplicateColumn { path: PathBuf, column: String },
    #[error("{path}: record {record} has {found} fields, header has {expected}")]
    RaggedRow {
        path: PathBuf,
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Identifier of a row in the ORIGINAL dataset (or of a row added later).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowId(pub i64);

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A typed scalar cell value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Cell {
    /// Types a raw field. NA tokens win over every other interpretation.
    pub fn parse(raw: &str, na_tokens: &[String]) -> Cell {
        if na_tokens.iter().any(|t| t == raw) {
            return Cell::Missing;
        }
        if raw.eq_ignore_ascii_case("true") {
            return Cell::Bool(true);
        }
        if raw.eq_ignore_ascii_case("false") {
            return Cell::Bool(false);
        }
        if is_decimal_numeral(raw) {
            if let Ok(v) = raw.parse::<f64>() {
                if v.is_finite() {
                    return Cell::Number(v);
                }
            }
        }
        Cell::Text(raw.to_string())
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Typed equality. Numbers compare within `epsilon`; everything else exactly.
    pub fn same_as(&self, other: &Cell, epsilon: f64) -> bool {
        match (self, other) {
            (Cell::Number(a), Cell::Number(b)) => {
                if epsilon > 0.0 {
                    (a - b).abs() <= epsilon
                } else {
                    a == b
                }
            }
            (a, b) => a == b,
        }
    }

    /// Text form written back to a snapshot file. Missing cells become `na`.
    pub fn to_field(&self, na: &str) -> String {
        match self {
            Cell::Missing => na.to_string(),
            Cell::Bool(true) => "TRUE".to_string(),
            Cell::Bool(false) => "FALSE".to_string(),
            Cell::Number(v) => format!("{v}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Optional sign, digits with an optional fraction, optional exponent.
fn is_decimal_numeral(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

/// One row of a snapshot: its identity plus one cell per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: RowId,
    pub cells: Vec<Cell>,
}

/// One tabular state of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotTable {
    pub label: String,
    pub resume_before: bool,
    columns: Vec<String>,
    rows: Vec<Row>,
    row_index: BTreeMap<RowId, usize>,
}

impl SnapshotTable {
    /// Builds a table, checking the shape invariants.
    pub fn new(
        label: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Row>,
    ) -> Result<Self, TableError> {
        let path = PathBuf::from("<memory>");
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(TableError::DuplicateColumn {
                    path,
                    column: c.clone(),
                });
            }
        }
        let mut row_index = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            if r.cells.len() != columns.len() {
                return Err(TableError::RaggedRow {
                    path,
                    record: i + 1,
                    expected: columns.len(),
                    found: r.cells.len(),
                });
            }
            if row_index.insert(r.id, i).is_some() {
                return Err(TableError::DuplicateRowId { path, row_id: r.id });
            }
        }
        Ok(SnapshotTable {
            label: label.into(),
            resume_before: false,
            columns,
            rows,
            row_index,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn row(&self, id: RowId) -> Option<&Row> {
        self.row_index.get(&id).map(|&i| &self.rows[i])
    }

    pub fn contains_row(&self, id: RowId) -> bool {
        self.row_index.contains_key(&id)
    }

    pub fn row_ids(&self) -> impl Iterator<Item = RowId> + '_ {
        self.rows.iter().map(|r| r.id)
    }

    pub fn cell(&self, id: RowId, column: &str) -> Option<&Cell> {
        let c = self.column_index(column)?;
        self.row(id).map(|r| &r.cells[c])
    }

    /// Reads a snapshot from delimited text.
    pub fn read_csv<R: Read>(
        reader: R,
        rowid_column: &str,
        na_tokens: &[String],
        source: &Path,
    ) -> Result<Self, TableError> {
        let csv_err = |e: csv::Error| TableError::Csv {
            path: source.to_path_buf(),
            source: e,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let id_pos = header
            .iter()
            .position(|h| h == rowid_column)
            .ok_or_else(|| TableError::MissingRowIdColumn {
                path: source.to_path_buf(),
                column: rowid_column.to_string(),
            })?;
        let columns: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != id_pos)
            .map(|(_, h)| h.to_string())
            .collect();

        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let record = n + 1;
            if rec.len() != header.len() {
                return Err(TableError::RaggedRow {
                    path: source.to_path_buf(),
                    record,
                    expected: header.len(),
                    found: rec.len(),
                });
            }
            let raw_id = rec.get(id_pos).unwrap_or_default();
            let id = raw_id
                .trim()
                .parse::<i64>()
                .map_err(|_| TableError::InvalidRowId {
                    path: source.to_path_buf(),
                    record,
                    value: raw_id.to_string(),
                })?;
            let cells = rec
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != id_pos)
                .map(|(_, f)| Cell::parse(f, na_tokens))
                .collect();
            rows.push(Row {
                id: RowId(id),
                cells,
            });
        }

        SnapshotTable::new(String::new(), columns, rows).map_err(|e| match e {
            TableError::DuplicateColumn { column, .. } => TableError::DuplicateColumn {
                path: source.to_path_buf(),
                column,
            },
            TableError::DuplicateRowId { row_id, .. } => TableError::DuplicateRowId {
                path: source.to_path_buf(),
                row_id,
            },
            other => other,
        })
    }

    /// Writes the table with the row-id column first. Missing cells are
    /// written as `na`.
    pub fn write_csv<W: Write>(&self, writer: W, rowid_column: &str, na: &str) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![rowid_column.to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.id.to_string()];
            rec.extend(r.cells.iter().map(|c| c.to_field(na)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Keeps only the listed rows (in table order).
    pub fn restrict_rows(&self, keep: &BTreeSet<RowId>) -> SnapshotTable {
        let rows: Vec<Row> = self
            .rows
            .iter()
            .filter(|r| keep.contains(&r.id))
            .cloned()
            .collect();
        let row_index = rows.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        SnapshotTable {
            label: self.label.clone(),
            resume_before: self.resume_before,
            columns: self.columns.clone(),
            rows,
            row_index,
        }
    }
}

/// One snapshot entry in the capture manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub label: String,
    pub path: String,
    #[serde(default)]
    pub resume_before: bool,
}

/// Machine-readable index of snapshot files written by the capture shim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureManifest {
    pub version: u32,
    #[serde(default = "default_rowid_column")]
    pub rowid_column: String,
    #[serde(default = "default_na_tokens")]
    pub na_tokens: Vec<String>,
    pub snapshots: Vec<SnapshotEntry>,
    /// Directory relative snapshot paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_rowid_column() -> String {
    DEFAULT_ROWID_COLUMN.to_string()
}

const MANIFEST_FIELDS: &[&str] = &["version", "rowid_column", "na_tokens", "snapshots"];
const ENTRY_FIELDS: &[&str] = &["index", "label", "path", "resume_before"];

impl CaptureManifest {
    /// Parses and validates manifest JSON. Does not touch the filesystem.
    pub fn from_json(text: &str, strict: bool, source: &Path) -> Result<Self, TableError> {
        let malformed = |reason: String| TableError::MalformedManifest {
            path: source.to_path_buf(),
            reason,
        };
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("top level is not a JSON object".into()))?;

        match obj.get("version") {
            Some(v) => match v.as_u64() {
                Some(n) if n == u64::from(MANIFEST_VERSION) => {}
                Some(n) => {
                    return Err(TableError::VersionUnsupported {
                        path: source.to_path_buf(),
                        found: n,
                    })
                }
                None => return Err(malformed("`version` must be a non-negative integer".into())),
            },
            None => return Err(malformed("missing field `version`".into())),
        }

        if strict {
            for key in obj.keys() {
                if !MANIFEST_FIELDS.contains(&key.as_str()) {
                    return Err(malformed(format!("unknown field `{key}`")));
                }
            }
            if let Some(serde_json::Value::Array(entries)) = obj.get("snapshots") {
                for e in entries.iter().filter_map(|e| e.as_object()) {
                    for key in e.keys() {
                        if !ENTRY_FIELDS.contains(&key.as_str()) {
                            return Err(malformed(format!("unknown snapshot field `{key}`")));
                        }
                    }
                }
            }
        }

        let manifest: CaptureManifest =
            serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;

        if manifest.rowid_column.is_empty() {
            return Err(malformed("`rowid_column` is empty".into()));
        }
        if manifest.snapshots.len() < 2 {
            return Err(malformed(format!(
                "a timeline needs at least 2 snapshots, found {}",
                manifest.snapshots.len()
            )));
        }
        for (pos, e) in manifest.snapshots.iter().enumerate() {
            if e.index != pos {
                return Err(malformed(format!(
                    "snapshot indices must be 0..{} in order; position {pos} has index {}",
                    manifest.snapshots.len(),
                    e.index
                )));
            }
        }
        Ok(manifest)
    }

    pub fn snapshot_path(&self, entry: &SnapshotEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Loads every snapshot in manifest order, carrying labels and resume flags.
    pub fn load_tables(&self) -> Result<Vec<SnapshotTable>, TableError> {
        self.snapshots
            .iter()
            .map(|e| {
                let mut t = load_snapshot(&self.snapshot_path(e), self)?;
                t.label = e.label.clone();
                t.resume_before = e.resume_before;
                Ok(t)
            })
            .collect()
    }
}

/// Reads and validates a manifest; every referenced snapshot file must exist.
pub fn load_manifest(path: &Path, strict: bool) -> Result<CaptureManifest, TableError> {
    let text = std::fs::read_to_string(path).map_err(|e| TableError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut manifest = CaptureManifest::from_json(&text, strict, path)?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for e in &manifest.snapshots {
        let p = manifest.snapshot_path(e);
        if !p.is_file() {
            return Err(TableError::MissingSnapshotFile {
                index: e.index,
                label: e.label.clone(),
                path: p,
            });
        }
    }
    Ok(manifest)
}

/// Reads one snapshot file using the manifest's row-id column and NA tokens.
/// The label defaults to the file stem.
pub fn load_snapshot(path: &Path, manifest: &CaptureManifest) -> Result<SnapshotTable, TableError> {
    let file = File::open(path).map_err(|e| TableError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut t = SnapshotTable::read_csv(file, &manifest.rowid_column, &manifest.na_tokens, path)?;
    t.label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(t)
}

/// Checks a loaded snapshot sequence against the usage recommendations.
pub fn validate_sequence(tables: &[SnapshotTable]) -> Vec<Warning> {
    let mut warnings = Vec::new();
    if tables.len() > MAX_RECOMMENDED_SNAPSHOTS {
        warnings.push(Warning::TooManySnapshots {
            count: tables.len(),
            max: MAX_RECOMMENDED_SNAPSHOTS,
        });
    }
    let Some(first) = tables.first() else {
        return warnings;
    };
    if first.n_rows() < crate::select::RECOMMENDED_K.0 {
        warnings.push(Warning::SmallOriginal {
            rows: first.n_rows(),
            min: crate::select::RECOMMENDED_K.0,
        });
    }

    // A row id that vanishes and later comes back breaks row identity.
    let mut gone: BTreeMap<RowId, usize> = BTreeMap::new();
    for (s, pair) in tables.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        for id in prev.row_ids().filter(|id| !next.contains_row(*id)) {
            gone.entry(id).or_insert(s + 1);
        }
        for id in next.row_ids().filter(|id| !prev.contains_row(*id)) {
            if let Some(&deleted_at) = gone.get(&id) {
                warnings.push(Warning::ReappearingRow {
                    row_id: id,
                    deleted_at,
                    returned_at: s + 1,
                });
            }
        }
        let d = diff_step(prev, next, s + 1, &DiffOptions::default());
        if d.is_empty() {
            warnings.push(Warning::NoChange { step: s + 1 });
        }
    }
    warnings
}
