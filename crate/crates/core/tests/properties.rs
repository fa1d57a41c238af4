mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use smalltime::diff::{hamming, ChangeCode};
use smalltime::narrative::{parse_captions, AltText, CaptionSet};
use smalltime::table::{default_na_tokens, Row};
use smalltime::{Cell, Method, Project, RowId, RunConfig, SelectorConfig, SnapshotTable, Warning};

fn random_cell(rng: &mut Xoshiro256PlusPlus) -> Cell {
    match rng.gen_range(0..10) {
        0 | 1 => Cell::Missing,
        2..=6 => Cell::Number(rng.gen_range(0..5) as f64),
        _ => Cell::Text(["a", "b"][rng.gen_range(0..2)].to_string()),
    }
}

/// A random preprocessing run: row deletions and additions, cell edits,
/// column drops and additions. Column names are never reused.
fn pipeline(seed: u64) -> Vec<SnapshotTable> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = rng.gen_range(3..=10);
    let mut columns: Vec<String> = (0..rng.gen_range(2..=4)).map(|i| format!("c{i}")).collect();
    let mut next_col = columns.len();
    let mut next_row = 1000;
    let mut rows: Vec<(RowId, Vec<Cell>)> = (1..=n as i64)
        .map(|i| {
            (
                RowId(i),
                (0..columns.len()).map(|_| random_cell(&mut rng)).collect(),
            )
        })
        .collect();
    let build = |label: String, columns: &[String], rows: &[(RowId, Vec<Cell>)]| {
        let rows = rows
            .iter()
            .map(|(id, c)| Row {
                id: *id,
                cells: c.clone(),
            })
            .collect();
        SnapshotTable::new(label, columns.to_vec(), rows).unwrap()
    };
    let mut tables = vec![build("s0".into(), &columns, &rows)];
    for step in 1..=rng.gen_range(1..=4) {
        if rows.len() > 2 && rng.gen_bool(0.4) {
            for _ in 0..rng.gen_range(1..=2) {
                let at = rng.gen_range(0..rows.len());
                rows.remove(at);
            }
        }
        if rng.gen_bool(0.5) && !rows.is_empty() {
            for _ in 0..rng.gen_range(1..=3) {
                let r = rng.gen_range(0..rows.len());
                let c = rng.gen_range(0..columns.len());
                rows[r].1[c] = random_cell(&mut rng);
            }
        }
        if columns.len() > 1 && rng.gen_bool(0.2) {
            let c = rng.gen_range(0..columns.len());
            columns.remove(c);
            rows.iter_mut().for_each(|r| {
                r.1.remove(c);
            });
        }
        if rng.gen_bool(0.2) {
            columns.push(format!("c{next_col}"));
            next_col += 1;
            for r in rows.iter_mut() {
                let v = random_cell(&mut rng);
                r.1.push(v);
            }
        }
        if rng.gen_bool(0.15) {
            let cells = (0..columns.len()).map(|_| random_cell(&mut rng)).collect();
            rows.push((RowId(next_row), cells));
            next_row += 1;
        }
        tables.push(build(format!("s{step}"), &columns, &rows));
    }
    tables
}

/// Last change wins, computed directly from the tables.
fn appearance_oracle(tables: &[SnapshotTable]) -> BTreeMap<(RowId, String), ChangeCode> {
    let last = tables.last().unwrap();
    let mut all_cols: Vec<String> = Vec::new();
    for t in tables {
        for c in t.columns() {
            if !all_cols.contains(c) {
                all_cols.push(c.clone());
            }
        }
    }
    let mut out = BTreeMap::new();
    for id in tables[0].row_ids() {
        for c in &all_cols {
            let mut code = ChangeCode::Unchanged;
            if !last.contains_row(id) || last.column_index(c).is_none() {
                code = ChangeCode::Deleted;
            } else {
                for w in tables.windows(2) {
                    let (p, q) = (&w[0], &w[1]);
                    if !q.contains_row(id) {
                        continue;
                    }
                    match (p.cell(id, c), q.cell(id, c)) {
                        (None, Some(_)) if p.contains_row(id) => code = ChangeCode::Added,
                        (Some(a), Some(b)) if a != b => code = ChangeCode::Edited,
                        _ => {}
                    }
                }
            }
            out.insert((id, c.clone()), code);
        }
    }
    out
}

fn coverage_oracle(tables: &[SnapshotTable]) -> Vec<Vec<u8>> {
    tables[0]
        .row_ids()
        .map(|id| {
            tables
                .windows(2)
                .map(|w| {
                    let (p, q) = (&w[0], &w[1]);
                    if !p.contains_row(id) {
                        return 0;
                    }
                    let before: BTreeSet<_> = p.columns().iter().collect();
                    let after: BTreeSet<_> = q.columns().iter().collect();
                    let altered = !q.contains_row(id)
                        || before != after
                        || p.columns()
                            .iter()
                            .any(|c| matches!(q.cell(id, c), Some(v) if Some(v) != p.cell(id, c)));
                    u8::from(altered)
                })
                .collect()
        })
        .collect()
}

fn exact(k: usize) -> SelectorConfig {
    SelectorConfig {
        k,
        method: Method::CoverageVariety,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn csv_round_trip(
        cells in prop::collection::vec(
            prop_oneof![
                Just(Cell::Missing),
                any::<bool>().prop_map(Cell::Bool),
                (-1e6f64..1e6).prop_map(Cell::Number),
                "x[a-z0-9,\" ]{0,5}[a-z]".prop_map(Cell::Text),
            ],
            1..40,
        ),
        width in 1usize..5,
    ) {
        let columns: Vec<String> = (0..width).map(|i| format!("col {i}")).collect();
        let rows: Vec<Row> = cells
            .chunks(width)
            .filter(|c| c.len() == width)
            .enumerate()
            .map(|(i, c)| Row { id: RowId(i as i64 * 7 - 3), cells: c.to_vec() })
            .collect();
        let t = SnapshotTable::new("", columns, rows).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, "__rowid__", "NA").unwrap();
        let back = SnapshotTable::read_csv(&buf[..], "__rowid__", &default_na_tokens(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn matrices_match_oracles(seed in any::<u64>()) {
        let tables = pipeline(seed);
        let p = Project::from_tables(tables.clone(), 0.0).unwrap();
        let want = appearance_oracle(&tables);
        let a = &p.appearance;
        for (i, id) in a.row_ids().iter().enumerate().take(a.n_original()) {
            for (j, c) in a.columns().iter().enumerate() {
                prop_assert_eq!(a.get(i, j), want[&(*id, c.clone())], "row {} col {}", id, c);
            }
        }
        prop_assert_eq!(a.n_original() * a.columns().len(), want.len());
        prop_assert_eq!(p.coverage.to_rows(), coverage_oracle(&tables));
    }

    #[test]
    fn deleted_rows_are_all_deleted(seed in any::<u64>()) {
        let tables = pipeline(seed);
        let p = Project::from_tables(tables.clone(), 0.0).unwrap();
        let last = tables.last().unwrap();
        for (i, id) in p.appearance.row_ids().iter().enumerate().take(p.appearance.n_original()) {
            if !last.contains_row(*id) {
                prop_assert!(p.appearance.row(i).iter().all(|c| *c == ChangeCode::Deleted));
            }
        }
        for (j, c) in p.appearance.columns().iter().enumerate() {
            if last.column_index(c).is_none() {
                prop_assert!((0..p.appearance.n_original()).all(|i| p.appearance.get(i, j) == ChangeCode::Deleted));
            }
        }
    }

    #[test]
    fn repeating_a_snapshot_only_adds_an_empty_step(seed in any::<u64>(), at in 0usize..5) {
        let tables = pipeline(seed);
        let at = at % tables.len();
        let mut padded = tables.clone();
        padded.insert(at + 1, tables[at].clone());
        let p = Project::from_tables(tables, 0.0).unwrap();
        let q = Project::from_tables(padded, 0.0).unwrap();
        prop_assert_eq!(p.appearance.to_letters(), q.appearance.to_letters());
        prop_assert_eq!(q.coverage.column_sum(at), 0);
        let mut cov = q.coverage.to_rows();
        cov.iter_mut().for_each(|r| { r.remove(at); });
        prop_assert_eq!(cov, p.coverage.to_rows());
        let warned = q.warnings.iter().any(|w| matches!(w, Warning::NoChange { step } if *step == at + 1));
        prop_assert!(warned);
    }

    #[test]
    fn distance_is_a_metric(seed in any::<u64>()) {
        let p = Project::from_tables(pipeline(seed), 0.0).unwrap();
        let d = &p.distance;
        let n = d.n();
        prop_assert_eq!(n, p.appearance.n_original());
        for i in 0..n {
            prop_assert_eq!(d.get(i, i), 0);
            for j in 0..n {
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                prop_assert_eq!(d.get(i, j), hamming(p.appearance.row(i), p.appearance.row(j)));
                for l in 0..n {
                    prop_assert!(d.get(i, l) <= d.get(i, j) + d.get(j, l));
                }
            }
        }
    }

    #[test]
    fn selections_are_feasible_dominant_and_deterministic(seed in any::<u64>(), k in 1usize..5) {
        let p = Project::from_tables(pipeline(seed), 0.0).unwrap();
        let k = k.min(p.n_original_rows());
        let zero: Vec<usize> = (0..p.coverage.n_steps()).filter(|&h| p.coverage.column_sum(h) == 0).map(|h| h + 1).collect();
        let Ok(best) = p.select(&exact(k)) else {
            // Infeasible: the minimum cover needs more than k rows.
            let cov = SelectorConfig { k, method: Method::Coverage, ..Default::default() };
            prop_assert!(p.select(&cov).is_err());
            return Ok(());
        };
        prop_assert_eq!(&p.select(&exact(k)).unwrap(), &best);
        let sel = &best.selection;
        prop_assert_eq!(sel.selected_row_ids.len(), k);
        prop_assert!(sel.uncovered_steps(&p.coverage).is_empty());
        prop_assert_eq!(&sel.dropped_steps, &zero);
        for h in &zero {
            let dropped = best.warnings.iter().any(|w| matches!(w, Warning::DroppedStep { step } if step == h));
            prop_assert!(dropped);
        }
        let cov = p.select(&SelectorConfig { k, method: Method::Coverage, ..Default::default() }).unwrap();
        prop_assert!(cov.selection.uncovered_steps(&p.coverage).is_empty());
        let cov_obj = p.distance.quadratic_form(&cov.selection.selected_indices());
        prop_assert!(sel.objective_value >= cov_obj);
        for s in 0..8 {
            let r = p.select(&SelectorConfig { k, method: Method::Random, seed: s, ..Default::default() }).unwrap();
            prop_assert_eq!(r.selection.selected_row_ids.len(), k);
            if r.selection.uncovered_steps(&p.coverage).is_empty() {
                prop_assert!(sel.objective_value >= p.distance.quadratic_form(&r.selection.selected_indices()));
            }
            let again = p.select(&SelectorConfig { k, method: Method::Random, seed: s, ..Default::default() }).unwrap();
            prop_assert_eq!(r, again);
        }
    }

    #[test]
    fn cell_colours_encode_codes(seed in any::<u64>()) {
        let p = Project::from_tables(pipeline(seed), 0.0).unwrap();
        let k = p.n_original_rows().min(3);
        let Ok(sel) = p.select(&exact(k)) else { return Ok(()) };
        let cfg = RunConfig::default();
        let caps = CaptionSet::from_texts(common::captions_for(p.n_snapshots()));
        let spec = p.timeline(&sel.selection, &caps, &cfg.palette, &cfg.render, "t").unwrap();
        let svg = smalltime::render::render_svg(&spec).unwrap();
        let els = common::elements(&svg);
        let mut by_fill: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        for e in common::with_class(&els, "cell") {
            let code = ChangeCode::from_letter(e.attr("data-code").chars().next().unwrap()).unwrap();
            let want = if e.attr("data-missing") == "1" {
                common::lerp_white(&cfg.palette.color(code).to_string(), cfg.palette.tint_lighten)
            } else {
                cfg.palette.color(code).to_string()
            };
            prop_assert_eq!(e.attr("fill"), want.as_str());
            by_fill.entry(want).or_default().insert((e.attr("data-code").into(), e.attr("data-missing").into()));
        }
        // Each fill means exactly one (code, missing) pair.
        prop_assert!(by_fill.values().all(|s| s.len() == 1));
        let legend: Vec<String> = common::with_class(&els, "legend-swatch").iter().map(|e| e.attr("data-code").to_string()).collect();
        let want: Vec<String> = spec.codes_present().iter().map(|c| c.letter().to_string()).collect();
        prop_assert_eq!(legend, want);
    }

    #[test]
    fn template_sections_round_trip(seed in any::<u64>(), words in prop::collection::vec("[A-Za-z]{1,8}", 1..12)) {
        let p = Project::from_tables(pipeline(seed), 0.0).unwrap();
        let template = p.caption_template(None);
        let texts: Vec<String> = (0..p.n_snapshots()).map(|s| format!("{} {}", words[s % words.len()], s)).collect();
        let mut filled = String::new();
        let mut section = 0;
        for line in template.lines() {
            filled.push_str(line);
            filled.push('\n');
            if line.starts_with("## snapshot") {
                filled.push_str(&texts[section]);
                filled.push('\n');
                section += 1;
            }
        }
        prop_assert_eq!(section, p.n_snapshots());
        let (set, warnings) = parse_captions(&filled, Some(p.n_snapshots())).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(set.texts(), texts);
        // An unfilled template parses, with one warning per snapshot.
        let (_, warnings) = parse_captions(&template, Some(p.n_snapshots())).unwrap();
        prop_assert_eq!(warnings.len(), p.n_snapshots());
    }

    #[test]
    fn alt_text_round_trips(seed in any::<u64>(), caption in "[A-Za-z ,.]{0,300}") {
        let p = Project::from_tables(pipeline(seed), 0.0).unwrap();
        let k = p.n_original_rows().min(3);
        let Ok(sel) = p.select(&exact(k)) else { return Ok(()) };
        let cfg = RunConfig::default();
        let caps = CaptionSet::from_texts(vec![caption; p.n_snapshots()]);
        let spec = p.timeline(&sel.selection, &caps, &cfg.palette, &cfg.render, "A title").unwrap();
        let alt = smalltime::narrative::generate_alt_text(&spec, &caps, &p.diffs, "A title");
        let text = alt.render();
        prop_assert!(text.lines().all(|l| l.chars().count() <= smalltime::narrative::ALT_TEXT_WIDTH));
        prop_assert_eq!(AltText::parse(&text).unwrap(), alt);
    }
}
