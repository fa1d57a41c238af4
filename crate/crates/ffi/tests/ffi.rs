use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use smalltime_ffi::*;

const CAPTIONS: &str =
    "## snapshot 1\nRaw.\n## snapshot 2\nRows dropped.\n## snapshot 3\nValues fixed.\n";

fn write_capture(dir: &Path) -> PathBuf {
    let s0 = "__rowid__,a,b\n1,1,x\n2,2,y\n3,NA,z\n4,4,w\n5,5,v\n6,6,u\n";
    let s1 = "__rowid__,a,b\n1,1,x\n3,NA,z\n4,4,w\n5,5,v\n6,6,u\n";
    let s2 = "__rowid__,a,b\n1,1,x\n3,3,z\n4,4,w\n5,5,v\n6,6,u\n";
    for (i, s) in [s0, s1, s2].iter().enumerate() {
        std::fs::write(dir.join(format!("s{i}.csv")), s).unwrap();
    }
    let manifest = r#"{"version": 1, "snapshots": [
        {"index": 0, "label": "raw", "path": "s0.csv"},
        {"index": 1, "label": "filter", "path": "s1.csv"},
        {"index": 2, "label": "impute", "path": "s2.csv"}]}"#;
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest).unwrap();
    path
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    smalltime_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = smalltime_last_error();
    assert!(!p.is_null(), "no error message set");
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

unsafe fn open(path: &Path) -> *mut SmalltimeProject {
    let mut project = ptr::null_mut();
    let p = c(path.to_str().unwrap());
    assert_eq!(
        smalltime_project_open(p.as_ptr(), true, 0.0, &mut project),
        SmalltimeStatus::Ok
    );
    assert!(!project.is_null());
    project
}

#[test]
fn open_count_select_render() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_capture(dir.path());
    unsafe {
        let project = open(&manifest);
        let mut n = 0usize;
        assert_eq!(
            smalltime_project_snapshot_count(project, &mut n),
            SmalltimeStatus::Ok
        );
        assert_eq!(n, 3);
        assert_eq!(
            smalltime_project_row_count(project, &mut n),
            SmalltimeStatus::Ok
        );
        assert_eq!(n, 6);

        let mut json = ptr::null_mut();
        let cfg = c(r#"{"k": 2, "method": "coverage_variety"}"#);
        assert_eq!(
            smalltime_project_select(project, cfg.as_ptr(), &mut json),
            SmalltimeStatus::Ok
        );
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(
            v["selection"]["selected_row_ids"],
            serde_json::json!([2, 3])
        );
        assert!(v["warnings"].is_array());

        let mut dump = ptr::null_mut();
        assert_eq!(
            smalltime_project_dump_matrices(project, &mut dump),
            SmalltimeStatus::Ok
        );
        let v: serde_json::Value = serde_json::from_str(&take(dump)).unwrap();
        assert_eq!(v["coverage"].as_array().unwrap().len(), 6);

        let mut template = ptr::null_mut();
        assert_eq!(
            smalltime_project_caption_template(project, cfg.as_ptr(), &mut template),
            SmalltimeStatus::Ok
        );
        assert!(take(template).contains("## snapshot 3"));

        let (mut svg, mut alt) = (ptr::null_mut(), ptr::null_mut());
        let run = c(r#"{"selector": {"k": 2}, "title": "Demo"}"#);
        let caps = c(CAPTIONS);
        assert_eq!(
            smalltime_project_render(project, run.as_ptr(), caps.as_ptr(), &mut svg, &mut alt),
            SmalltimeStatus::Ok
        );
        assert!(take(svg).starts_with("<?xml"));
        assert!(take(alt).contains("has 3 snapshots."));
        assert!(smalltime_last_error().is_null());
        smalltime_project_free(project);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_capture(dir.path());
    unsafe {
        let mut project = ptr::null_mut();
        let missing = c(dir.path().join("nope.json").to_str().unwrap());
        assert_eq!(
            smalltime_project_open(missing.as_ptr(), false, 0.0, &mut project),
            SmalltimeStatus::Io
        );
        assert!(project.is_null());
        assert!(last_error().contains("nope.json"));

        assert_eq!(
            smalltime_project_open(ptr::null(), false, 0.0, &mut project),
            SmalltimeStatus::NullArgument
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            smalltime_project_open(bad.as_ptr().cast(), false, 0.0, &mut project),
            SmalltimeStatus::InvalidUtf8
        );

        let project = open(&manifest);
        let mut json = ptr::null_mut();
        let too_big = c(r#"{"k": 50}"#);
        assert_eq!(
            smalltime_project_select(project, too_big.as_ptr(), &mut json),
            SmalltimeStatus::Selection
        );
        assert!(json.is_null());
        let unknown = c(r#"{"kk": 2}"#);
        assert_eq!(
            smalltime_project_select(project, unknown.as_ptr(), &mut json),
            SmalltimeStatus::Config
        );

        let (mut svg, mut alt) = (ptr::null_mut(), ptr::null_mut());
        let short = c("## snapshot 1\nOnly one.\n");
        assert_eq!(
            smalltime_project_render(project, ptr::null(), short.as_ptr(), &mut svg, &mut alt),
            SmalltimeStatus::Captions
        );
        assert!(svg.is_null() && alt.is_null());
        let mut n = 0usize;
        assert_eq!(
            smalltime_project_snapshot_count(ptr::null(), &mut n),
            SmalltimeStatus::NullArgument
        );
        smalltime_project_free(project);
        smalltime_project_free(ptr::null_mut());
        smalltime_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(smalltime_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests/ binaries live in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libsmalltime_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_capture(dir.path());
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r###"#include <stdio.h>
#include <string.h>
#include "smalltime.h"

int main(int argc, char **argv) {
    SmalltimeProject *p = NULL;
    if (smalltime_project_open(argv[1], false, 0.0, &p) != SMALLTIME_STATUS_OK) {
        fprintf(stderr, "%s\n", smalltime_last_error());
        return 1;
    }
    size_t n = 0;
    smalltime_project_snapshot_count(p, &n);
    char *svg = NULL, *alt = NULL;
    const char *caps = "## snapshot 1\nA.\n## snapshot 2\nB.\n## snapshot 3\nC.\n";
    SmalltimeStatus st = smalltime_project_render(p, "{\"selector\":{\"k\":2}}", caps, &svg, &alt);
    if (st != SMALLTIME_STATUS_OK) {
        fprintf(stderr, "%d %s\n", (int)st, smalltime_last_error());
        return 2;
    }
    printf("%zu %d\n", n, strstr(svg, "legend-swatch") != NULL);
    smalltime_string_free(svg);
    smalltime_string_free(alt);
    smalltime_project_free(p);
    return 0;
}
"###,
    )
    .unwrap();
    let exe = dir.path().join("demo");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).arg(&manifest).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout), "3 1\n");
}
