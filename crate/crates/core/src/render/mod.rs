//! Timeline construction and SVG rendering.
//!
//! Each frame is the Smallset at one snapshot. A cell's code says what last
//! happened to it: added or edited cells are coloured in the frame where the
//! change first shows, and cells about to be removed are coloured D in the
//! last frame that still holds them. After that they are gone, or drawn as
//! blank ghost placeholders when ghosting is on.

mod layout;
mod svg;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{ChangeCode, StepDiff};
use crate::table::{Cell, RowId, SnapshotTable};

pub(crate) use layout::wrap_words;
pub use layout::{layout_geometry, CellKind, CellRect, FrameBox, Geometry, ResumeMarker};
pub use svg::render_svg;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("timeline has no snapshots")]
    NoSnapshots,
    #[error("{captions} captions for {snapshots} snapshots")]
    CaptionCountMismatch { captions: usize, snapshots: usize },
    #[error("{diffs} step diffs for {snapshots} snapshots")]
    DiffCountMismatch { diffs: usize, snapshots: usize },
    #[error("column `{0}` is not present in any snapshot")]
    UnknownColumnInSubset(String),
    #[error("selected row {0} is not in the first snapshot")]
    UnknownRow(RowId),
    #[error("invalid palette: {0}")]
    InvalidPalette(String),
    #[error("invalid render options: {0}")]
    InvalidOptions(String),
    #[error(
        "timeline is {width:.0}pt wide, over the {max:.0}pt limit; lower frames_per_band to wrap frames onto more bands"
    )]
    LayoutOverflow { width: f64, max: f64 },
}

/// An sRGB colour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    /// Linear interpolation toward white by `amount` in [0, 1].
    pub fn lighten(self, amount: f64) -> Rgb {
        let mix = |c: u8| -> u8 {
            let v = f64::from(c) + (255.0 - f64::from(c)) * amount;
            v.round().clamp(0.0, 255.0) as u8
        };
        Rgb(mix(self.0), mix(self.1), mix(self.2))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6 && h.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| format!("`{s}` is not a #RRGGBB colour"))?;
        let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|e| e.to_string());
        Ok(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }
}

impl TryFrom<String> for Rgb {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rgb> for String {
    fn from(c: Rgb) -> String {
        c.to_string()
    }
}

/// Four change colours plus the missing-value tint strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Palette {
    pub unchanged: Rgb,
    pub edited: Rgb,
    pub added: Rgb,
    pub deleted: Rgb,
    pub tint_lighten: f64,
}

impl Default for Palette {
    /// Colour-blind safe (Okabe-Ito based).
    fn default() -> Self {
        Palette {
            unchanged: Rgb(0xE6, 0xE6, 0xE6),
            edited: Rgb(0xE6, 0x9F, 0x00),
            added: Rgb(0x00, 0x9E, 0x73),
            deleted: Rgb(0xD5, 0x5E, 0x00),
            tint_lighten: 0.45,
        }
    }
}

impl Palette {
    pub fn color(&self, code: ChangeCode) -> Rgb {
        match code {
            ChangeCode::Unchanged => self.unchanged,
            ChangeCode::Edited => self.edited,
            ChangeCode::Added => self.added,
            ChangeCode::Deleted => self.deleted,
        }
    }

    pub fn tint(&self, code: ChangeCode) -> Rgb {
        self.color(code).lighten(self.tint_lighten)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let colors: HashSet<Rgb> = ChangeCode::ALL.iter().map(|&c| self.color(c)).collect();
        if colors.len() != 4 {
            return Err(RenderError::InvalidPalette(
                "the four colours must be distinct".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.tint_lighten) {
            return Err(RenderError::InvalidPalette(format!(
                "tint_lighten {} is outside [0, 1]",
                self.tint_lighten
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// Keep blank placeholders where rows/columns were deleted.
    pub ghost: bool,
    pub print_data: bool,
    /// Lighten the fill of missing cells.
    pub tints: bool,
    /// Columns to show, in this order. All columns when unset.
    pub columns: Option<Vec<String>>,
    /// Snapshots per horizontal band.
    pub frames_per_band: usize,
    pub sig_digits: usize,
    pub max_text_chars: usize,
    pub font_size_pt: f64,
    pub cell_w: f64,
    pub cell_h: f64,
    pub max_width_pt: f64,
    /// Rows added mid-pipeline shown in addition to the Smallset.
    pub added_rows_cap: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            ghost: true,
            print_data: false,
            tints: true,
            columns: None,
            frames_per_band: 5,
            sig_digits: 3,
            max_text_chars: 6,
            font_size_pt: 7.0,
            cell_w: 16.0,
            cell_h: 10.0,
            max_width_pt: 2400.0,
            added_rows_cap: 2,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: &str| Err(RenderError::InvalidOptions(m.to_string()));
        if self.frames_per_band == 0 {
            return bad("frames_per_band must be at least 1");
        }
        if self.sig_digits == 0 {
            return bad("sig_digits must be at least 1");
        }
        if self.max_text_chars == 0 {
            return bad("max_text_chars must be at least 1");
        }
        let positive = [
            self.font_size_pt,
            self.cell_w,
            self.cell_h,
            self.max_width_pt,
        ];
        if positive.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return bad("font size, cell size and max width must be positive");
        }
        Ok(())
    }
}

/// One drawn cell of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCell {
    pub row: RowId,
    pub column: String,
    pub code: ChangeCode,
    pub missing: bool,
    pub value: Cell,
}

/// The Smallset at one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub label: String,
    pub resume_before: bool,
    /// Present rows, in grid order.
    pub rows: Vec<RowId>,
    /// Present columns, in grid order.
    pub columns: Vec<String>,
    /// Row-major over `rows` × `columns`.
    pub cells: Vec<FrameCell>,
    /// Shown in an earlier frame, absent here.
    pub ghost_rows: Vec<RowId>,
    pub ghost_columns: Vec<String>,
}

impl FrameSpec {
    pub fn cell(&self, row: RowId, column: &str) -> Option<&FrameCell> {
        self.cells
            .iter()
            .find(|c| c.row == row && c.column == column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineSpec {
    pub title: String,
    pub frames: Vec<FrameSpec>,
    pub captions: Vec<String>,
    pub palette: Palette,
    pub options: RenderOptions,
    /// Every row shown in any frame, in display order.
    pub row_order: Vec<RowId>,
    /// Every column shown in any frame, in display order.
    pub column_order: Vec<String>,
}

impl TimelineSpec {
    /// Codes drawn anywhere, in legend order. Unchanged is always included.
    pub fn codes_present(&self) -> Vec<ChangeCode> {
        let used: BTreeSet<ChangeCode> = self
            .frames
            .iter()
            .flat_map(|f| f.cells.iter().map(|c| c.code))
            .collect();
        ChangeCode::ALL
            .into_iter()
            .filter(|c| *c == ChangeCode::Unchanged || used.contains(c))
            .collect()
    }

    /// Fill of a non-ghost cell.
    pub fn fill(&self, cell: &FrameCell) -> Rgb {
        if cell.missing && self.options.tints {
            self.palette.tint(cell.code)
        } else {
            self.palette.color(cell.code)
        }
    }
}

/// Merges column orders across snapshots: new columns go right after the
/// nearest known column that precedes them.
fn merged_columns(tables: &[SnapshotTable]) -> Vec<String> {
    let mut order: Vec<String> = Vec::new();
    for t in tables {
        let mut anchor: Option<usize> = None;
        for c in t.columns() {
            match order.iter().position(|o| o == c) {
                Some(p) => anchor = Some(p),
                None => {
                    let at = anchor.map_or(0, |a| a + 1);
                    order.insert(at, c.clone());
                    anchor = Some(at);
                }
            }
        }
    }
    order
}

/// Assembles the per-frame view of the Smallset.
///
/// `selected` are original-row ids. Rows added mid-pipeline are appended up
/// to `options.added_rows_cap`, lowest ids first.
pub fn build_timeline(
    tables: &[SnapshotTable],
    diffs: &[StepDiff],
    selected: &[RowId],
    captions: &[String],
    palette: &Palette,
    options: &RenderOptions,
) -> Result<TimelineSpec, RenderError> {
    let first = tables.first().ok_or(RenderError::NoSnapshots)?;
    if captions.len() != tables.len() {
        return Err(RenderError::CaptionCountMismatch {
            captions: captions.len(),
            snapshots: tables.len(),
        });
    }
    if diffs.len() + 1 != tables.len() {
        return Err(RenderError::DiffCountMismatch {
            diffs: diffs.len(),
            snapshots: tables.len(),
        });
    }
    palette.validate()?;
    options.validate()?;

    let chosen: BTreeSet<RowId> = selected.iter().copied().collect();
    if let Some(missing) = chosen.iter().find(|id| !first.contains_row(**id)) {
        return Err(RenderError::UnknownRow(*missing));
    }
    let mut row_order: Vec<RowId> = first.row_ids().filter(|id| chosen.contains(id)).collect();
    let added: BTreeSet<RowId> = tables[1..]
        .iter()
        .flat_map(|t| t.row_ids())
        .filter(|id| !first.contains_row(*id))
        .collect();
    row_order.extend(added.into_iter().take(options.added_rows_cap));

    let all_columns = merged_columns(tables);
    let column_order = match &options.columns {
        None => all_columns,
        Some(subset) => {
            if let Some(unknown) = subset.iter().find(|c| !all_columns.contains(c)) {
                return Err(RenderError::UnknownColumnInSubset(unknown.clone()));
            }
            subset.clone()
        }
    };

    let mut seen_rows: BTreeSet<RowId> = BTreeSet::new();
    let mut seen_cols: HashSet<String> = HashSet::new();
    let mut frames = Vec::with_capacity(tables.len());
    for (s, table) in tables.iter().enumerate() {
        let rows: Vec<RowId> = row_order
            .iter()
            .copied()
            .filter(|r| table.contains_row(*r))
            .collect();
        let col_idx: Vec<(String, usize)> = column_order
            .iter()
            .filter_map(|c| table.column_index(c).map(|j| (c.clone(), j)))
            .collect();
        let ghost_rows = row_order
            .iter()
            .copied()
            .filter(|r| seen_rows.contains(r) && !table.contains_row(*r))
            .collect();
        let ghost_columns = column_order
            .iter()
            .filter(|c| seen_cols.contains(*c) && table.column_index(c).is_none())
            .cloned()
            .collect();

        let arriving = s.checked_sub(1).map(|h| &diffs[h]);
        let leaving = diffs.get(s);
        let mut cells = Vec::with_capacity(rows.len() * col_idx.len());
        for &r in &rows {
            let row = table.row(r).expect("row present");
            for (c, j) in &col_idx {
                let mut code = match arriving {
                    None => ChangeCode::Unchanged,
                    Some(d) if d.rows_added.contains(&r) || d.cols_added.contains(c) => {
                        ChangeCode::Added
                    }
                    Some(d) if d.cells_edited.contains(&(r, c.clone())) => ChangeCode::Edited,
                    Some(_) => ChangeCode::Unchanged,
                };
                if let Some(d) = leaving {
                    if d.rows_deleted.contains(&r) || d.cols_deleted.contains(c) {
                        code = ChangeCode::Deleted;
                    }
                }
                let value = row.cells[*j].clone();
                cells.push(FrameCell {
                    row: r,
                    column: c.clone(),
                    code,
                    missing: value.is_missing(),
                    value,
                });
            }
        }
        for &r in &rows {
            seen_rows.insert(r);
        }
        for (c, _) in &col_idx {
            seen_cols.insert(c.clone());
        }
        frames.push(FrameSpec {
            label: table.label.clone(),
            resume_before: table.resume_before,
            rows,
            columns: col_idx.into_iter().map(|(c, _)| c).collect(),
            cells,
            ghost_rows,
            ghost_columns,
        });
    }

    Ok(TimelineSpec {
        title: String::new(),
        frames,
        captions: captions.to_vec(),
        palette: palette.clone(),
        options: options.clone(),
        row_order,
        column_order,
    })
}
