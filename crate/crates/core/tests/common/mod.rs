#![allow(dead_code)]

//! Synthetic 100-row scenario: filter C2 = FALSE, impute C6/C8 by C1-group
//! mean and drop C7, add C9 = C3 + C4.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use smalltime::table::Row;
use smalltime::{Cell, RowId, SnapshotTable};

pub const SEED: u64 = 20220921;
pub const N_ROWS: usize = 100;
pub const N_DELETED: usize = 30;
pub const N_MISSING_C6: usize = 14;
pub const N_MISSING_C7: usize = 44;
pub const N_MISSING_C8: usize = 19;

// Rows whose role is fixed so the expected matrix rows hold.
const PINNED: [i64; 9] = [1, 2, 3, 4, 5, 32, 98, 99, 100];
const PINNED_DELETED: [i64; 3] = [3, 4, 99];
const PINNED_C6_MISSING: [i64; 1] = [1];
const PINNED_C8_MISSING: [i64; 2] = [1, 5];
// Survivors with nothing to impute; one per C1 group so every group mean exists.
const COMPLETE: [(i64, &str); 4] = [(2, "A"), (32, "B"), (98, "C"), (100, "D")];
const GROUPS: [&str; 4] = ["A", "B", "C", "D"];

pub fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn pick(rng: &mut Xoshiro256PlusPlus, pool: &[i64], n: usize) -> Vec<i64> {
    let mut p = pool.to_vec();
    p.shuffle(rng);
    p.truncate(n);
    p
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub struct Synthetic {
    pub tables: Vec<SnapshotTable>,
    pub deleted: BTreeSet<RowId>,
    pub missing_c6: BTreeSet<RowId>,
    pub missing_c8: BTreeSet<RowId>,
}

/// Original table plus the three processed snapshots. With `resume`, a
/// fifth snapshot adds C10 = 2 * C5 and is flagged to resume.
pub fn synthetic(resume: bool) -> Synthetic {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(SEED);
    let free: Vec<i64> = (1..=N_ROWS as i64)
        .filter(|i| !PINNED.contains(i))
        .collect();
    let complete: Vec<i64> = COMPLETE.iter().map(|c| c.0).collect();

    let mut deleted: BTreeSet<i64> = PINNED_DELETED.into_iter().collect();
    deleted.extend(pick(&mut rng, &free, N_DELETED - PINNED_DELETED.len()));

    let not_complete: Vec<i64> = (1..=N_ROWS as i64)
        .filter(|i| !complete.contains(i) && !PINNED.contains(i))
        .collect();
    let mut m6: BTreeSet<i64> = PINNED_C6_MISSING.into_iter().collect();
    m6.extend(pick(&mut rng, &not_complete, N_MISSING_C6 - m6.len()));
    let mut m8: BTreeSet<i64> = PINNED_C8_MISSING.into_iter().collect();
    m8.extend(pick(&mut rng, &not_complete, N_MISSING_C8 - m8.len()));
    let all: Vec<i64> = (1..=N_ROWS as i64).collect();
    let m7: BTreeSet<i64> = pick(&mut rng, &all, N_MISSING_C7).into_iter().collect();

    let header = cols(&["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8"]);
    let mut rows = Vec::new();
    for id in 1..=N_ROWS as i64 {
        let group = match COMPLETE.iter().find(|c| c.0 == id) {
            Some((_, g)) => g.to_string(),
            None => GROUPS[rng.gen_range(0..GROUPS.len())].to_string(),
        };
        let num = |rng: &mut Xoshiro256PlusPlus, lo: f64, hi: f64, missing: bool| {
            let v = round2(rng.gen_range(lo..hi));
            if missing {
                Cell::Missing
            } else {
                Cell::Number(v)
            }
        };
        let cells = vec![
            Cell::Text(group),
            Cell::Bool(!deleted.contains(&id)),
            Cell::Number(rng.gen_range(0..100) as f64),
            Cell::Number(rng.gen_range(0..50) as f64),
            num(&mut rng, 0.0, 10.0, false),
            num(&mut rng, 10.0, 20.0, m6.contains(&id)),
            num(&mut rng, -5.0, 5.0, m7.contains(&id)),
            num(&mut rng, 100.0, 200.0, m8.contains(&id)),
        ];
        rows.push(Row {
            id: RowId(id),
            cells,
        });
    }
    let s0 = SnapshotTable::new("original", header.clone(), rows).unwrap();

    let keep: BTreeSet<RowId> = s0
        .rows()
        .iter()
        .filter(|r| r.cells[1] == Cell::Bool(true))
        .map(|r| r.id)
        .collect();
    let mut s1 = s0.restrict_rows(&keep);
    s1.label = "filter".into();

    // Group means over the rows present after filtering.
    let mean = |col: usize| -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for r in s1.rows() {
            if let (Cell::Text(g), Cell::Number(v)) = (&r.cells[0], &r.cells[col]) {
                let e = acc.entry(g.clone()).or_default();
                e.0 += v;
                e.1 += 1;
            }
        }
        acc.into_iter()
            .map(|(g, (s, n))| (g, s / n as f64))
            .collect()
    };
    let (mean6, mean8) = (mean(5), mean(7));
    let s2_cols = cols(&["C1", "C2", "C3", "C4", "C5", "C6", "C8"]);
    let s2_rows = s1
        .rows()
        .iter()
        .map(|r| {
            let g = match &r.cells[0] {
                Cell::Text(g) => g.clone(),
                _ => unreachable!(),
            };
            let fill = |c: &Cell, m: &BTreeMap<String, f64>| match c {
                Cell::Missing => Cell::Number(m[&g]),
                other => other.clone(),
            };
            let mut cells = r.cells[..5].to_vec();
            cells.push(fill(&r.cells[5], &mean6));
            cells.push(fill(&r.cells[7], &mean8));
            Row { id: r.id, cells }
        })
        .collect();
    let s2 = SnapshotTable::new("impute", s2_cols.clone(), s2_rows).unwrap();

    let sum = |r: &Row| match (&r.cells[2], &r.cells[3]) {
        (Cell::Number(a), Cell::Number(b)) => Cell::Number(a + b),
        _ => Cell::Missing,
    };
    let mut s3_cols = s2_cols.clone();
    s3_cols.push("C9".into());
    let s3_rows = s2
        .rows()
        .iter()
        .map(|r| {
            let mut cells = r.cells.clone();
            cells.push(sum(r));
            Row { id: r.id, cells }
        })
        .collect();
    let s3 = SnapshotTable::new("feature", s3_cols.clone(), s3_rows).unwrap();

    let mut tables = vec![s0, s1, s2, s3];
    if resume {
        let mut s4_cols = s3_cols;
        s4_cols.push("C10".into());
        let s4_rows = tables[3]
            .rows()
            .iter()
            .map(|r| {
                let mut cells = r.cells.clone();
                let c5 = match &r.cells[4] {
                    Cell::Number(v) => Cell::Number(round2(v * 2.0)),
                    other => other.clone(),
                };
                cells.push(c5);
                Row { id: r.id, cells }
            })
            .collect();
        let mut s4 = SnapshotTable::new("feature2", s4_cols, s4_rows).unwrap();
        s4.resume_before = true;
        tables.push(s4);
    }

    let ids = |s: BTreeSet<i64>| s.into_iter().map(RowId).collect();
    Synthetic {
        tables,
        deleted: ids(deleted),
        missing_c6: ids(m6),
        missing_c8: ids(m8),
    }
}

/// Writes `snapshot_<i>.csv` files plus `manifest.json` into `dir`;
/// returns the manifest path.
pub fn write_capture(tables: &[SnapshotTable], dir: &Path) -> std::path::PathBuf {
    let mut entries = Vec::new();
    for (i, t) in tables.iter().enumerate() {
        let name = format!("snapshot_{i}.csv");
        let f = std::fs::File::create(dir.join(&name)).unwrap();
        t.write_csv(f, "__rowid__", "NA").unwrap();
        entries.push(serde_json::json!({
            "index": i,
            "label": t.label,
            "path": name,
            "resume_before": t.resume_before,
        }));
    }
    let manifest = serde_json::json!({
        "version": 1,
        "rowid_column": "__rowid__",
        "na_tokens": ["", "NA"],
        "snapshots": entries,
    });
    let path = dir.join("manifest.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).unwrap() + "\n",
    )
    .unwrap();
    path
}

/// One placeholder caption per snapshot.
pub fn captions_for(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("Snapshot {} caption.", i + 1))
        .collect()
}

pub fn table(label: &str, columns: &[&str], rows: &[(i64, Vec<Cell>)]) -> SnapshotTable {
    SnapshotTable::new(
        label,
        cols(columns),
        rows.iter()
            .map(|(id, cells)| Row {
                id: RowId(*id),
                cells: cells.clone(),
            })
            .collect(),
    )
    .unwrap()
}

pub fn n(v: f64) -> Cell {
    Cell::Number(v)
}

/// One SVG element with its attributes and the frame group it sits in.
#[derive(Debug, Clone)]
pub struct Element {
    pub tag: String,
    pub frame: Option<usize>,
    pub attrs: BTreeMap<String, String>,
}

impl Element {
    pub fn attr(&self, k: &str) -> &str {
        self.attrs.get(k).map(String::as_str).unwrap_or("")
    }
}

/// Minimal tag scanner; enough for the renderer's one-element-per-line output.
pub fn elements(svg: &str) -> Vec<Element> {
    let mut out = Vec::new();
    let mut frame = None;
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        rest = &rest[start + 1..];
        if rest.starts_with('/') {
            if rest.starts_with("/g>") {
                frame = None;
            }
            continue;
        }
        if rest.starts_with('?') {
            continue;
        }
        let end = rest.find('>').unwrap();
        let body = &rest[..end];
        let tag: String = body
            .chars()
            .take_while(|c| !c.is_whitespace() && *c != '/')
            .collect();
        let mut attrs = BTreeMap::new();
        let mut s = &body[tag.len()..];
        while let Some(eq) = s.find("=\"") {
            let key = s[..eq].trim().to_string();
            let after = &s[eq + 2..];
            let close = after.find('"').unwrap();
            attrs.insert(key, after[..close].to_string());
            s = &after[close + 1..];
        }
        if tag == "g" && attrs.get("class").map(String::as_str) == Some("frame") {
            frame = attrs["data-frame"].parse().ok();
        }
        out.push(Element { tag, frame, attrs });
        rest = &rest[end..];
    }
    out
}

pub fn with_class<'a>(els: &'a [Element], class: &str) -> Vec<&'a Element> {
    els.iter().filter(|e| e.attr("class") == class).collect()
}

/// Lightens a `#RRGGBB` colour toward white.
pub fn lerp_white(hex: &str, t: f64) -> String {
    let c = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap() as f64;
    let m = |v: f64| (v + (255.0 - v) * t).round() as u8;
    format!("#{:02X}{:02X}{:02X}", m(c(1)), m(c(3)), m(c(5)))
}

/// Caption text of each frame, with wrapped lines re-joined.
pub fn caption_texts(svg: &str) -> Vec<String> {
    svg.split(r#"<text class="caption""#)
        .skip(1)
        .map(|chunk| {
            let body = &chunk[..chunk.find("</text>").unwrap()];
            body.split("<tspan")
                .skip(1)
                .map(|t| {
                    let start = t.find('>').unwrap() + 1;
                    &t[start..t.find("</tspan>").unwrap()]
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
