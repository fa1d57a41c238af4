use crate::diff::ChangeCode;
use crate::table::RowId;

use super::TimelineSpec;

pub(crate) const MARGIN: f64 = 10.0;
const BAND_GAP: f64 = 14.0;
const MIN_SLOT_W: f64 = 48.0;
/// Rough advance of one glyph, as a fraction of the font size.
pub(crate) const GLYPH_W: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellKind {
    Data { code: ChangeCode, missing: bool },
    Ghost,
}

/// A cell rectangle. `dx`/`dy` are offsets inside the frame; `x`/`y` are
/// absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRect {
    pub frame: usize,
    pub row: RowId,
    pub column: String,
    pub dx: f64,
    pub dy: f64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub kind: CellKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameBox {
    pub index: usize,
    pub band: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    /// Width reserved for the frame and its caption.
    pub slot_w: f64,
    pub header_y: f64,
    pub caption_y: f64,
    pub caption_lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResumeMarker {
    /// The marker sits just before this frame.
    pub before_frame: usize,
    pub x: f64,
    pub y1: f64,
    pub y2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegendEntry {
    pub code: ChangeCode,
    pub x: f64,
    pub y: f64,
    pub size: f64,
    pub label_x: f64,
    pub label: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub title_y: Option<f64>,
    pub legend: Vec<LegendEntry>,
    pub frames: Vec<FrameBox>,
    pub cells: Vec<CellRect>,
    pub resume_markers: Vec<ResumeMarker>,
}

impl Geometry {
    /// Rectangles of one logical cell across frames.
    pub fn cell_rects<'a>(
        &'a self,
        row: RowId,
        column: &'a str,
    ) -> impl Iterator<Item = &'a CellRect> + 'a {
        self.cells
            .iter()
            .filter(move |c| c.row == row && c.column == column)
    }
}

pub(crate) fn legend_label(code: ChangeCode) -> &'static str {
    match code {
        ChangeCode::Unchanged => "Unchanged",
        ChangeCode::Edited => "Edited",
        ChangeCode::Added => "Added",
        ChangeCode::Deleted => "Deleted",
    }
}

pub(crate) fn text_width(s: &str, font: f64) -> f64 {
    s.chars().count() as f64 * font * GLYPH_W
}

/// Greedy word wrap to at most `width` characters per line. Words longer
/// than a line get a line of their own.
pub(crate) fn wrap_words(text: &str, width: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut line = String::new();
    for word in text.split_whitespace() {
        let needed = if line.is_empty() {
            word.chars().count()
        } else {
            line.chars().count() + 1 + word.chars().count()
        };
        if needed > width && !line.is_empty() {
            lines.push(std::mem::take(&mut line));
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(word);
    }
    if !line.is_empty() {
        lines.push(line);
    }
    lines
}

/// Positions every element of the timeline.
///
/// With ghosting on, every frame uses the full row × column grid, so a
/// logical cell sits at the same offset in every frame. Without it, each
/// frame packs its present rows and columns toward the top left.
pub fn layout_geometry(spec: &TimelineSpec) -> Geometry {
    let o = &spec.options;
    let font = o.font_size_pt;
    let header_h = font + 4.0;
    let line_h = font * 1.25;
    let gap = (2.0 * o.cell_w).max(14.0);

    let mut top = MARGIN;
    let title_y = if spec.title.trim().is_empty() {
        None
    } else {
        let y = top + font * 1.3;
        top += font * 1.3 + 6.0;
        Some(y)
    };

    let mut legend = Vec::new();
    let mut lx = MARGIN;
    let swatch = o.cell_h;
    for code in spec.codes_present() {
        let label = legend_label(code);
        legend.push(LegendEntry {
            code,
            x: lx,
            y: top,
            size: swatch,
            label_x: lx + swatch + 3.0,
            label,
        });
        lx += swatch + 3.0 + text_width(label, font) + 10.0;
    }
    let legend_w = lx - 10.0 - MARGIN;
    top += swatch + 10.0;

    let grid_rows = spec.row_order.len();
    let grid_cols = spec.column_order.len();

    let mut frames = Vec::with_capacity(spec.frames.len());
    let mut cells = Vec::new();
    let mut band_extent: Vec<(f64, f64)> = Vec::new();
    let mut max_band_w: f64 = 0.0;
    let mut y = top;

    for (band, chunk) in spec.frames.chunks(o.frames_per_band).enumerate() {
        let first = band * o.frames_per_band;
        let sizes: Vec<(f64, f64)> = chunk
            .iter()
            .map(|f| {
                if o.ghost {
                    (grid_cols as f64 * o.cell_w, grid_rows as f64 * o.cell_h)
                } else {
                    (
                        f.columns.len() as f64 * o.cell_w,
                        f.rows.len() as f64 * o.cell_h,
                    )
                }
            })
            .collect();
        let frame_h_max = sizes.iter().map(|s| s.1).fold(0.0, f64::max);
        let frame_y = y + header_h;

        let mut x = MARGIN;
        let mut max_lines = 0;
        for (k, (f, &(w, h))) in chunk.iter().zip(&sizes).enumerate() {
            let index = first + k;
            let slot_w = w.max(MIN_SLOT_W);
            let chars = ((slot_w / (font * GLYPH_W)).floor() as usize).max(8);
            let caption_lines = wrap_words(&spec.captions[index], chars);
            max_lines = max_lines.max(caption_lines.len());
            frames.push(FrameBox {
                index,
                band,
                x,
                y: frame_y,
                w,
                h,
                slot_w,
                header_y: y + font,
                caption_y: frame_y + frame_h_max + 4.0 + font,
                caption_lines,
            });

            let mut place = |row: RowId, column: &str, ri: usize, ci: usize, kind: CellKind| {
                let dx = ci as f64 * o.cell_w;
                let dy = ri as f64 * o.cell_h;
                cells.push(CellRect {
                    frame: index,
                    row,
                    column: column.to_string(),
                    dx,
                    dy,
                    x: x + dx,
                    y: frame_y + dy,
                    w: o.cell_w,
                    h: o.cell_h,
                    kind,
                });
            };

            if o.ghost {
                for (ri, row) in spec.row_order.iter().enumerate() {
                    let row_present = f.rows.contains(row);
                    let row_ghost = f.ghost_rows.contains(row);
                    if !row_present && !row_ghost {
                        continue;
                    }
                    for (ci, col) in spec.column_order.iter().enumerate() {
                        let col_present = f.columns.contains(col);
                        let col_ghost = f.ghost_columns.contains(col);
                        if row_present && col_present {
                            let c = f.cell(*row, col).expect("present cell");
                            place(
                                *row,
                                col,
                                ri,
                                ci,
                                CellKind::Data {
                                    code: c.code,
                                    missing: c.missing,
                                },
                            );
                        } else if col_present || col_ghost {
                            place(*row, col, ri, ci, CellKind::Ghost);
                        }
                    }
                }
            } else {
                let ncols = f.columns.len();
                for (k, c) in f.cells.iter().enumerate() {
                    place(
                        c.row,
                        &c.column,
                        k / ncols,
                        k % ncols,
                        CellKind::Data {
                            code: c.code,
                            missing: c.missing,
                        },
                    );
                }
            }
            x += slot_w + gap;
        }
        let band_w = x - gap - MARGIN;
        max_band_w = max_band_w.max(band_w);
        band_extent.push((frame_y - header_h, frame_y + frame_h_max));
        y = frame_y + frame_h_max + 4.0 + max_lines as f64 * line_h + BAND_GAP;
    }

    let mut resume_markers = Vec::new();
    for (s, f) in spec.frames.iter().enumerate().skip(1) {
        if !f.resume_before {
            continue;
        }
        let cur = &frames[s];
        let prev = &frames[s - 1];
        let x = if prev.band == cur.band {
            (prev.x + prev.slot_w + cur.x) / 2.0
        } else {
            (cur.x - gap / 2.0).max(1.0)
        };
        let (y1, y2) = band_extent[cur.band];
        resume_markers.push(ResumeMarker {
            before_frame: s,
            x,
            y1,
            y2,
        });
    }

    let title_w = if title_y.is_some() {
        text_width(&spec.title, font * 1.2)
    } else {
        0.0
    };
    let width = max_band_w.max(legend_w).max(title_w) + 2.0 * MARGIN;
    let height = y - BAND_GAP + MARGIN;
    Geometry {
        width,
        height,
        title_y,
        legend,
        frames,
        cells,
        resume_markers,
    }
}
