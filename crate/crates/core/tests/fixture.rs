mod common;

use std::path::Path;

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/synthetic");

/// The checked-in capture is exactly what the generator writes. Set
/// `SMALLTIME_BLESS=1` to rewrite it.
#[test]
fn checked_in_fixture_matches_generator() {
    let tables = common::synthetic(false).tables;
    if std::env::var_os("SMALLTIME_BLESS").is_some() {
        common::write_capture(&tables, Path::new(DIR));
    }
    let fresh = tempfile::tempdir().unwrap();
    common::write_capture(&tables, fresh.path());
    let mut names: Vec<_> = std::fs::read_dir(fresh.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for name in names {
        let want = std::fs::read(fresh.path().join(&name)).unwrap();
        let got = std::fs::read(Path::new(DIR).join(&name)).unwrap_or_default();
        assert!(
            got == want,
            "{} differs from the generator",
            name.to_string_lossy()
        );
    }
}
