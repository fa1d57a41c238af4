//! Step diffs between consecutive snapshots and the matrices derived from
//! them: coverage (row altered by step), appearance (last change per cell)
//! and pairwise Hamming distances between appearance rows.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::table::{RowId, SnapshotTable};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiffOptions {
    /// Absolute tolerance for numeric comparison; 0 means exact.
    pub epsilon: f64,
}

/// Change code of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeCode {
    #[serde(rename = "U")]
    Unchanged,
    #[serde(rename = "E")]
    Edited,
    #[serde(rename = "A")]
    Added,
    #[serde(rename = "D")]
    Deleted,
}

impl ChangeCode {
    pub const ALL: [ChangeCode; 4] = [
        ChangeCode::Unchanged,
        ChangeCode::Edited,
        ChangeCode::Added,
        ChangeCode::Deleted,
    ];

    pub fn letter(self) -> char {
        match self {
            ChangeCode::Unchanged => 'U',
            ChangeCode::Edited => 'E',
            ChangeCode::Added => 'A',
            ChangeCode::Deleted => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'U' => Some(ChangeCode::Unchanged),
            'E' => Some(ChangeCode::Edited),
            'A' => Some(ChangeCode::Added),
            'D' => Some(ChangeCode::Deleted),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChangeCode::Unchanged => "unchanged",
            ChangeCode::Edited => "edited",
            ChangeCode::Added => "added",
            ChangeCode::Deleted => "deleted",
        }
    }
}

impl fmt::Display for ChangeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Changes made by step `step` (1-based), from snapshot `step - 1` to `step`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StepDiff {
    pub step: usize,
    pub rows_added: BTreeSet<RowId>,
    pub rows_deleted: BTreeSet<RowId>,
    /// In the order they appear in the later snapshot.
    pub cols_added: Vec<String>,
    pub cols_deleted: BTreeSet<String>,
    pub cells_edited: BTreeSet<(RowId, String)>,
    pub cells_missing_after: BTreeSet<(RowId, String)>,
}

impl StepDiff {
    /// True when the step changed nothing (missing cells carried over do not count).
    pub fn is_empty(&self) -> bool {
        self.rows_added.is_empty()
            && self.rows_deleted.is_empty()
            && self.cols_added.is_empty()
            && self.cols_deleted.is_empty()
            && self.cells_edited.is_empty()
    }

    pub fn has_column_change(&self) -> bool {
        !self.cols_added.is_empty() || !self.cols_deleted.is_empty()
    }

    /// Rows with at least one edited cell.
    pub fn edited_rows(&self) -> BTreeSet<RowId> {
        self.cells_edited.iter().map(|(r, _)| *r).collect()
    }

    /// Edited-cell counts per column, in column-name order.
    pub fn edits_by_column(&self) -> Vec<(String, usize)> {
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for (_, c) in &self.cells_edited {
            *counts.entry(c.as_str()).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|(c, n)| (c.to_string(), n))
            .collect()
    }

    /// Whether this step alters `row`, given the row was present before it.
    pub fn alters(&self, row: RowId) -> bool {
        self.rows_deleted.contains(&row)
            || self.has_column_change()
            || self.cells_edited.iter().any(|(r, _)| *r == row)
    }
}

/// Compares two consecutive snapshots by row id and column name.
///
/// Renames are reported as a deletion plus an addition.
pub fn diff_step(
    prev: &SnapshotTable,
    next: &SnapshotTable,
    step: usize,
    opts: &DiffOptions,
) -> StepDiff {
    let rows_deleted = prev
        .row_ids()
        .filter(|id| !next.contains_row(*id))
        .collect();
    let rows_added = next
        .row_ids()
        .filter(|id| !prev.contains_row(*id))
        .collect();

    let prev_cols: HashSet<&str> = prev.columns().iter().map(String::as_str).collect();
    let next_cols: HashSet<&str> = next.columns().iter().map(String::as_str).collect();
    let cols_deleted = prev
        .columns()
        .iter()
        .filter(|c| !next_cols.contains(c.as_str()))
        .cloned()
        .collect();
    let cols_added = next
        .columns()
        .iter()
        .filter(|c| !prev_cols.contains(c.as_str()))
        .cloned()
        .collect();

    let shared: Vec<(usize, usize, &String)> = prev
        .columns()
        .iter()
        .enumerate()
        .filter_map(|(pi, c)| next.column_index(c).map(|ni| (pi, ni, c)))
        .collect();

    let mut cells_edited = BTreeSet::new();
    for row in next.rows() {
        let Some(before) = prev.row(row.id) else {
            continue;
        };
        for &(pi, ni, name) in &shared {
            if !before.cells[pi].same_as(&row.cells[ni], opts.epsilon) {
                cells_edited.insert((row.id, name.clone()));
            }
        }
    }

    let mut cells_missing_after = BTreeSet::new();
    for row in next.rows() {
        for (c, cell) in row.cells.iter().enumerate() {
            if cell.is_missing() {
                cells_missing_after.insert((row.id, next.columns()[c].clone()));
            }
        }
    }

    StepDiff {
        step,
        rows_added,
        rows_deleted,
        cols_added,
        cols_deleted,
        cells_edited,
        cells_missing_after,
    }
}

/// Diffs every consecutive pair; step numbers start at 1.
pub fn diff_sequence(tables: &[SnapshotTable], opts: &DiffOptions) -> Vec<StepDiff> {
    tables
        .windows(2)
        .enumerate()
        .map(|(i, w)| diff_step(&w[0], &w[1], i + 1, opts))
        .collect()
}

/// N×H indicator: entry (i, h) is 1 iff original row i is altered by step h+1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    row_ids: Vec<RowId>,
    steps: usize,
    entries: Vec<u8>,
}

impl CoverageMatrix {
    pub fn from_rows(row_ids: Vec<RowId>, rows: &[Vec<u8>]) -> Self {
        let steps = rows.first().map_or(0, Vec::len);
        assert_eq!(row_ids.len(), rows.len());
        assert!(
            rows.iter().all(|r| r.len() == steps),
            "ragged coverage rows"
        );
        assert!(
            rows.iter().flatten().all(|&v| v <= 1),
            "coverage entries must be 0/1"
        );
        CoverageMatrix {
            row_ids,
            steps,
            entries: rows.concat(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_steps(&self) -> usize {
        self.steps
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    /// `step` is 0-based here.
    pub fn get(&self, row: usize, step: usize) -> bool {
        self.entries[row * self.steps + step] == 1
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.entries[row * self.steps..(row + 1) * self.steps]
    }

    pub fn column_sum(&self, step: usize) -> usize {
        (0..self.n_rows()).filter(|&i| self.get(i, step)).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n_rows()).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Builds C. Column additions and deletions alter every row present at that step.
pub fn build_coverage(diffs: &[StepDiff], original: &SnapshotTable) -> CoverageMatrix {
    let row_ids: Vec<RowId> = original.row_ids().collect();
    let mut alive: HashSet<RowId> = row_ids.iter().copied().collect();
    let steps = diffs.len();
    let mut entries = vec![0u8; row_ids.len() * steps];
    for (h, d) in diffs.iter().enumerate() {
        let edited = d.edited_rows();
        let col_change = d.has_column_change();
        for (i, id) in row_ids.iter().enumerate() {
            if !alive.contains(id) {
                continue;
            }
            if col_change || d.rows_deleted.contains(id) || edited.contains(id) {
                entries[i * steps + h] = 1;
            }
        }
        for id in &d.rows_deleted {
            alive.remove(id);
        }
        for id in &d.rows_added {
            alive.insert(*id);
        }
    }
    CoverageMatrix {
        row_ids,
        steps,
        entries,
    }
}

/// N'×M' matrix of the last change each cell undergoes over the whole sequence.
///
/// Rows are the original rows followed by rows added later; columns are the
/// original columns followed by added ones, both in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppearanceMatrix {
    row_ids: Vec<RowId>,
    n_original: usize,
    columns: Vec<String>,
    codes: Vec<ChangeCode>,
}

impl AppearanceMatrix {
    pub fn from_parts(
        row_ids: Vec<RowId>,
        n_original: usize,
        columns: Vec<String>,
        codes: Vec<ChangeCode>,
    ) -> Self {
        assert_eq!(codes.len(), row_ids.len() * columns.len());
        assert!(n_original <= row_ids.len());
        AppearanceMatrix {
            row_ids,
            n_original,
            columns,
            codes,
        }
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> ChangeCode {
        self.codes[row * self.columns.len() + col]
    }

    pub fn row(&self, row: usize) -> &[ChangeCode] {
        let m = self.columns.len();
        &self.codes[row * m..(row + 1) * m]
    }

    pub fn row_string(&self, row: usize) -> String {
        self.row(row).iter().map(|c| c.letter()).collect()
    }

    pub fn row_of(&self, id: RowId) -> Option<&[ChangeCode]> {
        self.row_ids
            .iter()
            .position(|r| *r == id)
            .map(|i| self.row(i))
    }

    pub fn to_letters(&self) -> Vec<Vec<String>> {
        (0..self.n_rows())
            .map(|i| self.row(i).iter().map(|c| c.letter().to_string()).collect())
            .collect()
    }
}

/// Builds A with last-change-wins semantics.
///
/// A row absent from `final_table` is D in every column, including columns
/// added after it was deleted; a column absent from `final_table` is D for
/// every row.
pub fn build_appearance(
    diffs: &[StepDiff],
    original: &SnapshotTable,
    final_table: &SnapshotTable,
) -> AppearanceMatrix {
    let mut row_ids: Vec<RowId> = original.row_ids().collect();
    let n_original = row_ids.len();
    let mut row_pos: HashMap<RowId, usize> =
        row_ids.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let mut columns: Vec<String> = original.columns().to_vec();
    let mut col_pos: HashMap<String, usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();

    let mut alive_rows: BTreeSet<RowId> = row_ids.iter().copied().collect();
    let mut alive_cols: Vec<String> = columns.clone();
    let mut last: HashMap<(usize, usize), ChangeCode> = HashMap::new();

    for d in diffs {
        for r in &d.rows_deleted {
            alive_rows.remove(r);
        }
        alive_cols.retain(|c| !d.cols_deleted.contains(c));

        for c in &d.cols_added {
            let j = *col_pos.entry(c.clone()).or_insert_with(|| {
                columns.push(c.clone());
                columns.len() - 1
            });
            alive_cols.push(c.clone());
            for r in &alive_rows {
                last.insert((row_pos[r], j), ChangeCode::Added);
            }
        }
        for r in &d.rows_added {
            let i = *row_pos.entry(*r).or_insert_with(|| {
                row_ids.push(*r);
                row_ids.len() - 1
            });
            alive_rows.insert(*r);
            for c in &alive_cols {
                last.insert((i, col_pos[c]), ChangeCode::Added);
            }
        }
        for (r, c) in &d.cells_edited {
            if let (Some(&i), Some(&j)) = (row_pos.get(r), col_pos.get(c)) {
                last.insert((i, j), ChangeCode::Edited);
            }
        }
    }

    let final_cols: HashSet<&str> = final_table.columns().iter().map(String::as_str).collect();
    let mut codes = Vec::with_capacity(row_ids.len() * columns.len());
    for (i, r) in row_ids.iter().enumerate() {
        let row_alive = final_table.contains_row(*r);
        for (j, c) in columns.iter().enumerate() {
            let code = if !row_alive || !final_cols.contains(c.as_str()) {
                ChangeCode::Deleted
            } else {
                last.get(&(i, j)).copied().unwrap_or(ChangeCode::Unchanged)
            };
            codes.push(code);
        }
    }
    AppearanceMatrix {
        row_ids,
        n_original,
        columns,
        codes,
    }
}

/// Symmetric N×N matrix of Hamming distances between original-row
/// appearance vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    q: Vec<u32>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<u32>]) -> Self {
        let n = rows.len();
        assert!(
            rows.iter().all(|r| r.len() == n),
            "distance matrix must be square"
        );
        DistanceMatrix {
            n,
            q: rows.concat(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, l: usize) -> u32 {
        self.q[i * self.n + l]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    /// z^T Q z for the indicator of `selected` (indices into the matrix).
    pub fn quadratic_form(&self, selected: &[usize]) -> u64 {
        let mut total = 0u64;
        for &i in selected {
            for &l in selected {
                total += u64::from(self.get(i, l));
            }
        }
        total
    }
}

pub fn hamming(a: &[ChangeCode], b: &[ChangeCode]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// Builds Q over the original rows of `appearance`; added rows are excluded.
pub fn build_distance(appearance: &AppearanceMatrix) -> DistanceMatrix {
    let n = appearance.n_original();
    let mut q = vec![0u32; n * n];
    for i in 0..n {
        for l in (i + 1)..n {
            let d = hamming(appearance.row(i), appearance.row(l));
            q[i * n + l] = d;
            q[l * n + i] = d;
        }
    }
    DistanceMatrix { n, q }
}

/// Debug dump of C and A. Coverage rows are the first `coverage.len()`
/// entries of `row_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub coverage: Vec<Vec<u8>>,
    pub appearance: Vec<Vec<String>>,
    pub row_ids: Vec<RowId>,
    pub columns: Vec<String>,
    pub steps: Vec<String>,
}

impl MatrixDump {
    pub fn new(
        coverage: &CoverageMatrix,
        appearance: &AppearanceMatrix,
        step_labels: Vec<String>,
    ) -> Self {
        MatrixDump {
            coverage: coverage.to_rows(),
            appearance: appearance.to_letters(),
            row_ids: appearance.row_ids().to_vec(),
            columns: appearance.columns().to_vec(),
            steps: step_labels,
        }
    }
}
