//! Caption template, caption parsing and the alt-text description.
//!
//! Caption files are plain text. Each snapshot owns a section that starts
//! with a `## snapshot <n>` header (1-based); lines starting with `#` are
//! hints and are ignored; everything else is caption prose.
//!
//! Alt text is written as:
//!
//! ```text
//! Title: <title>
//! This Smallset Timeline has <n> snapshots.
//! Legend:
//! - <colour> marks <kind> data
//! Snapshot <i> of <n>: <caption> Changes: <enumerated changes>.
//!   <continuation lines are indented by two spaces>
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::diff::{ChangeCode, StepDiff};
use crate::render::{wrap_words, Palette, Rgb, TimelineSpec};
use crate::select::SmallsetSelection;
use crate::table::{RowId, SnapshotTable};
use crate::warning::Warning;

pub const ALT_TEXT_WIDTH: usize = 100;
const CONTINUATION: &str = "  ";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CaptionError {
    #[error("cannot read caption file: {0}")]
    Io(String),
    #[error("caption file has no section for snapshot {0}")]
    MissingSection(usize),
    #[error("section for snapshot {0} appears more than once")]
    DuplicateSection(usize),
    #[error("section for snapshot {found} is out of order; expected snapshot {expected}")]
    OutOfOrderSection { found: usize, expected: usize },
    #[error("caption file has {found} sections but the timeline has {expected} snapshots")]
    ExtraSection { found: usize, expected: usize },
    #[error("line {0}: malformed section header")]
    BadHeader(usize),
    #[error("line {0}: text before the first section header")]
    UnexpectedText(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaptionEntry {
    /// 0-based, as in the manifest.
    pub snapshot_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CaptionSet {
    pub entries: Vec<CaptionEntry>,
}

impl CaptionSet {
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CaptionSet {
            entries: texts
                .into_iter()
                .enumerate()
                .map(|(i, t)| CaptionEntry {
                    snapshot_index: i,
                    text: t.into(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.text.clone()).collect()
    }
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

/// Rows the step touched: deleted, added, edited, or every row when the
/// column set changed.
pub fn rows_affected(prev: &SnapshotTable, d: &StepDiff) -> usize {
    if d.has_column_change() {
        return prev.n_rows() + d.rows_added.len();
    }
    let mut rows: BTreeSet<RowId> = d.edited_rows();
    rows.extend(d.rows_deleted.iter().copied());
    rows.extend(d.rows_added.iter().copied());
    rows.len()
}

fn step_hint(prev: &SnapshotTable, d: &StepDiff, selection: Option<&SmallsetSelection>) -> String {
    let affected = rows_affected(prev, d);
    let mut hint = if d.is_empty() {
        format!("step {}: no changes detected; 0 rows affected", d.step)
    } else {
        format!(
            "step {}: {} deleted, {} added, {} deleted, {} added, {} edited; {} affected",
            d.step,
            plural(d.rows_deleted.len(), "row", "rows"),
            plural(d.rows_added.len(), "row", "rows"),
            plural(d.cols_deleted.len(), "column", "columns"),
            plural(d.cols_added.len(), "column", "columns"),
            plural(d.cells_edited.len(), "cell", "cells"),
            plural(affected, "row", "rows"),
        )
    };
    if let Some(sel) = selection {
        let shown = sel
            .selected_row_ids
            .iter()
            .filter(|r| prev.contains_row(**r) && d.alters(**r))
            .count();
        hint.push_str(&format!("; {shown} of {} Smallset rows affected", sel.k));
    }
    hint
}

/// A caption template with one section per snapshot, each pre-filled with
/// a hint summarising what the preceding step changed.
pub fn emit_caption_template(
    tables: &[SnapshotTable],
    diffs: &[StepDiff],
    selection: Option<&SmallsetSelection>,
) -> String {
    let mut out = String::new();
    out.push_str("# Caption template. Write each caption under its snapshot header.\n");
    out.push_str("# Lines starting with '#' are hints and are ignored.\n");
    for (s, table) in tables.iter().enumerate() {
        out.push('\n');
        out.push_str(&format!("## snapshot {}\n", s + 1));
        if !table.label.is_empty() {
            out.push_str(&format!("# label: {}\n", table.label));
        }
        let hint = if s == 0 {
            format!(
                "start: {}, {}",
                plural(table.n_rows(), "row", "rows"),
                plural(table.n_cols(), "column", "columns")
            )
        } else {
            step_hint(&tables[s - 1], &diffs[s - 1], selection)
        };
        out.push_str(&format!("# {hint}\n"));
        out.push('\n');
    }
    out
}

fn parse_header(line: &str) -> Option<Option<usize>> {
    let rest = line.strip_prefix("##")?.trim_start();
    let rest = rest.strip_prefix("snapshot")?;
    Some(rest.trim().parse::<usize>().ok())
}

/// Parses a completed caption file. `expected` is the snapshot count, when
/// known. Empty captions are returned with a warning.
pub fn parse_captions(
    text: &str,
    expected: Option<usize>,
) -> Result<(CaptionSet, Vec<Warning>), CaptionError> {
    let mut sections: Vec<(usize, Vec<&str>)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = parse_header(line) {
            let num = header.ok_or(CaptionError::BadHeader(n + 1))?;
            let want = sections.len() + 1;
            if num != want {
                return Err(if sections.iter().any(|(s, _)| *s == num) {
                    CaptionError::DuplicateSection(num)
                } else if num > want {
                    CaptionError::MissingSection(want)
                } else {
                    CaptionError::OutOfOrderSection {
                        found: num,
                        expected: want,
                    }
                });
            }
            sections.push((num, Vec::new()));
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        match sections.last_mut() {
            Some((_, body)) => body.push(line),
            None => return Err(CaptionError::UnexpectedText(n + 1)),
        }
    }
    if let Some(expected) = expected {
        if sections.len() < expected {
            return Err(CaptionError::MissingSection(sections.len() + 1));
        }
        if sections.len() > expected {
            return Err(CaptionError::ExtraSection {
                found: sections.len(),
                expected,
            });
        }
    }
    let mut warnings = Vec::new();
    let entries = sections
        .into_iter()
        .map(|(num, body)| {
            let text = body.join(" ");
            if text.trim().is_empty() {
                warnings.push(Warning::EmptyCaption { snapshot: num });
            }
            CaptionEntry {
                snapshot_index: num - 1,
                text,
            }
        })
        .collect();
    Ok((CaptionSet { entries }, warnings))
}

pub fn parse_captions_file(
    path: &Path,
    expected: Option<usize>,
) -> Result<(CaptionSet, Vec<Warning>), CaptionError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CaptionError::Io(format!("{}: {e}", path.display())))?;
    parse_captions(&text, expected)
}

/// Words for the default palette; other colours are given as hex.
pub fn color_name(color: Rgb) -> String {
    let d = Palette::default();
    let named = [
        (d.unchanged, "light gray"),
        (d.edited, "orange"),
        (d.added, "bluish green"),
        (d.deleted, "vermillion"),
    ];
    named
        .iter()
        .find(|(c, _)| *c == color)
        .map(|(_, n)| n.to_string())
        .unwrap_or_else(|| color.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AltText {
    pub title: String,
    pub snapshot_count: usize,
    pub legend_entries: Vec<(ChangeCode, String)>,
    pub snapshot_blurbs: Vec<String>,
}

/// Machine-enumerated changes made by one step, in a fixed order.
pub fn change_items(d: &StepDiff) -> Vec<String> {
    let mut items = Vec::new();
    if !d.rows_deleted.is_empty() {
        items.push(format!(
            "{} deleted",
            plural(d.rows_deleted.len(), "row", "rows")
        ));
    }
    if !d.rows_added.is_empty() {
        items.push(format!(
            "{} added",
            plural(d.rows_added.len(), "row", "rows")
        ));
    }
    for c in &d.cols_deleted {
        items.push(format!("column {c} deleted"));
    }
    for c in &d.cols_added {
        items.push(format!("column {c} added"));
    }
    for (c, n) in d.edits_by_column() {
        items.push(format!("{} edited in {c}", plural(n, "value", "values")));
    }
    items
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Builds the alt-text description of a timeline.
///
/// Change counts come from `diffs` (the whole dataset), not from the
/// Smallset alone.
pub fn generate_alt_text(
    spec: &TimelineSpec,
    captions: &CaptionSet,
    diffs: &[StepDiff],
    title: &str,
) -> AltText {
    let legend_entries = spec
        .codes_present()
        .into_iter()
        .map(|c| (c, color_name(spec.palette.color(c))))
        .collect();
    let snapshot_blurbs = spec
        .frames
        .iter()
        .enumerate()
        .map(|(s, frame)| {
            let caption = captions
                .entries
                .iter()
                .find(|e| e.snapshot_index == s)
                .map(|e| e.text.as_str())
                .unwrap_or("");
            let mut items = match s.checked_sub(1).and_then(|h| diffs.get(h)) {
                None => vec![format!(
                    "starting data with {} and {} shown",
                    plural(frame.rows.len(), "row", "rows"),
                    plural(frame.columns.len(), "column", "columns")
                )],
                Some(d) => change_items(d),
            };
            if s > 0 && frame.resume_before {
                items.push("resume marker before this snapshot".to_string());
            }
            let changes = if items.is_empty() {
                "Changes: none.".to_string()
            } else {
                format!("Changes: {}.", items.join("; "))
            };
            normalize(&format!("{caption} {changes}"))
        })
        .collect();
    AltText {
        title: normalize(title),
        snapshot_count: spec.frames.len(),
        legend_entries,
        snapshot_blurbs,
    }
}

fn push_wrapped(out: &mut String, first: &str) {
    let lines = wrap_words(first, ALT_TEXT_WIDTH - CONTINUATION.len());
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push_str(CONTINUATION);
        }
        out.push_str(line);
        out.push('\n');
    }
}

impl AltText {
    /// Plain text, at most 100 characters per line unless a single word is
    /// longer.
    pub fn render(&self) -> String {
        let mut out = String::new();
        push_wrapped(&mut out, &format!("Title: {}", self.title));
        out.push_str(&format!(
            "This Smallset Timeline has {}.\n",
            plural(self.snapshot_count, "snapshot", "snapshots")
        ));
        out.push_str("Legend:\n");
        for (code, color) in &self.legend_entries {
            out.push_str(&format!("- {color} marks {} data\n", code.name()));
        }
        for (i, blurb) in self.snapshot_blurbs.iter().enumerate() {
            push_wrapped(
                &mut out,
                &format!("Snapshot {} of {}: {blurb}", i + 1, self.snapshot_count),
            );
        }
        out
    }

    /// Reads back the output of [`AltText::render`].
    pub fn parse(text: &str) -> Result<AltText, String> {
        // Re-join continuation lines first.
        let mut logical: Vec<String> = Vec::new();
        for line in text.lines() {
            match line.strip_prefix(CONTINUATION) {
                Some(rest) if !logical.is_empty() => {
                    let last = logical.last_mut().expect("non-empty");
                    last.push(' ');
                    last.push_str(rest.trim());
                }
                _ => logical.push(line.to_string()),
            }
        }
        let mut it = logical.into_iter();
        let title = it
            .next()
            .and_then(|l| l.strip_prefix("Title: ").map(str::to_string))
            .ok_or("missing title line")?;
        let count_line = it.next().ok_or("missing snapshot count line")?;
        let snapshot_count = count_line
            .strip_prefix("This Smallset Timeline has ")
            .and_then(|r| r.split_whitespace().next())
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or("malformed snapshot count line")?;
        if it.next().as_deref() != Some("Legend:") {
            return Err("missing legend header".into());
        }
        let mut legend_entries = Vec::new();
        let mut snapshot_blurbs = Vec::new();
        for line in it {
            if let Some(entry) = line.strip_prefix("- ") {
                let (color, rest) = entry.split_once(" marks ").ok_or("malformed legend line")?;
                let kind = rest.strip_suffix(" data").ok_or("malformed legend line")?;
                let code = ChangeCode::ALL
                    .into_iter()
                    .find(|c| c.name() == kind)
                    .ok_or("unknown change kind")?;
                legend_entries.push((code, color.to_string()));
            } else if let Some(rest) = line.strip_prefix("Snapshot ") {
                let (_, blurb) = rest.split_once(": ").ok_or("malformed snapshot line")?;
                snapshot_blurbs.push(blurb.to_string());
            } else if !line.trim().is_empty() {
                return Err(format!("unexpected line `{line}`"));
            }
        }
        Ok(AltText {
            title,
            snapshot_count,
            legend_entries,
            snapshot_blurbs,
        })
    }
}
