use std::fmt::Write;

use crate::table::Cell;

use super::layout::{layout_geometry, CellKind};
use super::{RenderError, TimelineSpec};

const FONT_FAMILY: &str = "Helvetica, Arial, sans-serif";
const GHOST_STROKE: &str = "#D9D9D9";
const TEXT_COLOR: &str = "#333333";
const MARKER_COLOR: &str = "#555555";

/// Rounds to `digits` significant digits and prints the shortest form.
pub(crate) fn round_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), v);
    let rounded: f64 = s.parse().unwrap_or(v);
    format!("{rounded}")
}

pub(crate) fn truncate_chars(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        return s.to_string();
    }
    let mut out: String = s.chars().take(max.saturating_sub(1)).collect();
    out.push('…');
    out
}

fn printed(value: &Cell, sig_digits: usize, max_chars: usize) -> String {
    match value {
        Cell::Missing => "NA".to_string(),
        Cell::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        Cell::Number(v) => round_sig(*v, sig_digits),
        Cell::Text(t) => truncate_chars(t, max_chars),
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders a standalone SVG 1.1 document. Output depends only on `spec`;
/// coordinates are written with two decimals.
pub fn render_svg(spec: &TimelineSpec) -> Result<String, RenderError> {
    if spec.frames.is_empty() {
        return Err(RenderError::NoSnapshots);
    }
    if spec.captions.len() != spec.frames.len() {
        return Err(RenderError::CaptionCountMismatch {
            captions: spec.captions.len(),
            snapshots: spec.frames.len(),
        });
    }
    spec.palette.validate()?;
    spec.options.validate()?;

    let geo = layout_geometry(spec);
    let o = &spec.options;
    if geo.width > o.max_width_pt {
        return Err(RenderError::LayoutOverflow {
            width: geo.width,
            max: o.max_width_pt,
        });
    }
    let font = o.font_size_pt;
    let mut svg = String::new();

    // Writing into a String cannot fail.
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.2}pt" height="{h:.2}pt" viewBox="0 0 {w:.2} {h:.2}" font-family="{FONT_FAMILY}">"#,
        w = geo.width,
        h = geo.height
    );
    if !spec.title.trim().is_empty() {
        let _ = writeln!(svg, "<title>{}</title>", escape(&spec.title));
    }
    let _ = writeln!(
        svg,
        r##"<rect class="background" x="0" y="0" width="{:.2}" height="{:.2}" fill="#FFFFFF"/>"##,
        geo.width, geo.height
    );
    if let Some(ty) = geo.title_y {
        let _ = writeln!(
            svg,
            r#"<text class="title" x="{:.2}" y="{ty:.2}" font-size="{:.2}" font-weight="bold" fill="{TEXT_COLOR}">{}</text>"#,
            super::layout::MARGIN,
            font * 1.2,
            escape(&spec.title)
        );
    }

    let _ = writeln!(svg, r#"<g class="legend">"#);
    for e in &geo.legend {
        let _ = writeln!(
            svg,
            r##"<rect class="legend-swatch" data-code="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="#FFFFFF" stroke-width="0.50"/>"##,
            e.code.letter(),
            e.x,
            e.y,
            e.size,
            e.size,
            spec.palette.color(e.code)
        );
        let _ = writeln!(
            svg,
            r#"<text class="legend-label" x="{:.2}" y="{:.2}" font-size="{font:.2}" fill="{TEXT_COLOR}">{}</text>"#,
            e.label_x,
            e.y + e.size * 0.5 + font * 0.35,
            e.label
        );
    }
    let _ = writeln!(svg, "</g>");

    let text_size = font.min(o.cell_h * 0.75);
    for fb in &geo.frames {
        let frame = &spec.frames[fb.index];
        let _ = writeln!(
            svg,
            r#"<g class="frame" data-frame="{}" data-label="{}">"#,
            fb.index,
            escape(&frame.label)
        );
        let _ = writeln!(
            svg,
            r#"<text class="frame-header" x="{:.2}" y="{:.2}" font-size="{font:.2}" font-weight="bold" fill="{TEXT_COLOR}">{}.</text>"#,
            fb.x,
            fb.header_y,
            fb.index + 1
        );
        for rect in geo.cells.iter().filter(|c| c.frame == fb.index) {
            match rect.kind {
                CellKind::Ghost => {
                    let _ = writeln!(
                        svg,
                        r#"<rect class="ghost" data-row="{}" data-col="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="{GHOST_STROKE}" stroke-width="1.00"/>"#,
                        rect.row,
                        escape(&rect.column),
                        rect.x + 0.5,
                        rect.y + 0.5,
                        rect.w - 1.0,
                        rect.h - 1.0
                    );
                }
                CellKind::Data { code, missing } => {
                    let cell = frame
                        .cell(rect.row, &rect.column)
                        .expect("laid-out cell exists");
                    let _ = writeln!(
                        svg,
                        r##"<rect class="cell" data-row="{}" data-col="{}" data-code="{}" data-missing="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="#FFFFFF" stroke-width="0.50"/>"##,
                        rect.row,
                        escape(&rect.column),
                        code.letter(),
                        u8::from(missing),
                        rect.x,
                        rect.y,
                        rect.w,
                        rect.h,
                        spec.fill(cell)
                    );
                    if o.print_data {
                        let _ = writeln!(
                            svg,
                            r#"<text class="cell-text" x="{:.2}" y="{:.2}" font-size="{text_size:.2}" text-anchor="middle" fill="{TEXT_COLOR}">{}</text>"#,
                            rect.x + rect.w / 2.0,
                            rect.y + rect.h / 2.0 + text_size * 0.35,
                            escape(&printed(&cell.value, o.sig_digits, o.max_text_chars))
                        );
                    }
                }
            }
        }
        if !fb.caption_lines.is_empty() {
            let _ = write!(
                svg,
                r#"<text class="caption" x="{:.2}" y="{:.2}" font-size="{font:.2}" fill="{TEXT_COLOR}">"#,
                fb.x, fb.caption_y
            );
            for (i, line) in fb.caption_lines.iter().enumerate() {
                let dy = if i == 0 { 0.0 } else { font * 1.25 };
                let _ = write!(
                    svg,
                    r#"<tspan x="{:.2}" dy="{dy:.2}">{}</tspan>"#,
                    fb.x,
                    escape(line)
                );
            }
            let _ = writeln!(svg, "</text>");
        }
        let _ = writeln!(svg, "</g>");
    }

    for m in &geo.resume_markers {
        let _ = writeln!(
            svg,
            r#"<line class="resume-marker" data-before-frame="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{MARKER_COLOR}" stroke-width="1.50"/>"#,
            m.before_frame, m.x, m.y1, m.x, m.y2
        );
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
