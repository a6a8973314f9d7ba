use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use relmap_ffi::*;

fn fixture(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(relmap_last_error()) }.to_str().unwrap().to_string()
}

fn open(name: &str) -> *mut RelmapEngine {
    let mut e = ptr::null_mut();
    let status = unsafe { relmap_engine_open(fixture(name).as_ptr(), &mut e) };
    assert_eq!(status, RelmapStatus::Ok, "{}", last_error());
    assert!(!e.is_null());
    e
}

fn take_json(s: *mut c_char) -> serde_json::Value {
    assert!(!s.is_null());
    let v = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { relmap_string_free(s) };
    v
}

struct Names {
    _owned: Vec<CString>,
    ptrs: Vec<*const c_char>,
}

fn names(list: &[&str]) -> Names {
    let owned: Vec<CString> = list.iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs = owned.iter().map(|c| c.as_ptr()).collect();
    Names { _owned: owned, ptrs }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(relmap_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn maps_the_solar_fixture() {
    let e = open("solar.jsonl");
    let b = names(&["sun", "earth", "gravity", "solar system", "newton"]);
    let t = names(&["nucleus", "electrons", "electric force", "atom", "faraday"]);
    let mut out = ptr::null_mut();
    let status = unsafe { relmap_map(e, b.ptrs.as_ptr(), b.ptrs.len(), t.ptrs.as_ptr(), t.ptrs.len(), &mut out) };
    assert_eq!(status, RelmapStatus::Ok);
    assert_eq!(last_error(), "");
    let v = take_json(out);
    let pairs = &v["mappings"][0]["pairs"];
    assert_eq!(pairs.as_array().unwrap().len(), 5);
    assert!(pairs
        .as_array()
        .unwrap()
        .iter()
        .any(|p| p["base"] == "newton" && p["target"] == "faraday"));
    unsafe { relmap_engine_free(e) };
}

#[test]
fn unrelated_domains_report_no_mapping() {
    let e = open("solar.jsonl");
    let b = names(&["x", "y"]);
    let t = names(&["z", "w"]);
    let mut out = ptr::null_mut();
    let status = unsafe { relmap_map(e, b.ptrs.as_ptr(), 2, t.ptrs.as_ptr(), 2, &mut out) };
    assert_eq!(status, RelmapStatus::NoMapping);
    take_json(out);
    unsafe { relmap_engine_free(e) };
}

#[test]
fn input_errors_carry_a_message() {
    let e = open("solar.jsonl");
    let b = names(&["sun"]);
    let t = names(&["nucleus", "atom"]);
    let mut out = ptr::null_mut();
    let status = unsafe { relmap_map(e, b.ptrs.as_ptr(), 1, t.ptrs.as_ptr(), 2, &mut out) };
    assert_eq!(status, RelmapStatus::InputError);
    assert!(out.is_null());
    assert!(last_error().contains("at least two"));

    let mut handle = ptr::null_mut();
    let missing = CString::new("/no/such/snapshot.jsonl").unwrap();
    let status = unsafe { relmap_engine_open(missing.as_ptr(), &mut handle) };
    assert_eq!(status, RelmapStatus::InputError);
    assert!(handle.is_null());
    assert!(last_error().contains("/no/such/snapshot.jsonl"));

    let status = unsafe { relmap_engine_configure(e, 0, 0, 2.0, 0.0) };
    assert_eq!(status, RelmapStatus::InputError);
    unsafe { relmap_engine_free(e) };
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = ptr::null_mut();
    let status = unsafe { relmap_map(ptr::null(), ptr::null(), 0, ptr::null(), 0, &mut out) };
    assert_eq!(status, RelmapStatus::NullPointer);
    assert_eq!(unsafe { relmap_engine_open(ptr::null(), ptr::null_mut()) }, RelmapStatus::NullPointer);
    assert_eq!(unsafe { relmap_solution_space_size(2, 2, ptr::null_mut()) }, RelmapStatus::NullPointer);
    unsafe {
        relmap_string_free(ptr::null_mut());
        relmap_engine_free(ptr::null_mut());
    }
}

#[test]
fn explain_and_configure() {
    let e = open("solar.jsonl");
    let [b1, b2, t1, t2] = ["earth", "sun", "electrons", "nucleus"].map(|s| CString::new(s).unwrap());
    let mut out = ptr::null_mut();
    let status = unsafe { relmap_explain(e, b1.as_ptr(), b2.as_ptr(), t1.as_ptr(), t2.as_ptr(), &mut out) };
    assert_eq!(status, RelmapStatus::Ok);
    assert_eq!(take_json(out)["score"], 4.0);

    assert_eq!(unsafe { relmap_engine_configure(e, 0, 1, 0.0, 0.0) }, RelmapStatus::Ok);
    let status = unsafe { relmap_explain(e, b1.as_ptr(), b2.as_ptr(), t1.as_ptr(), t2.as_ptr(), &mut out) };
    assert_eq!(status, RelmapStatus::Ok);
    // One retained edge per direction.
    assert_eq!(take_json(out)["score"], 2.0);
    unsafe { relmap_engine_free(e) };
}

#[test]
fn suggests_lock() {
    let e = open("suggest_b1.jsonl");
    let b = names(&["answer", "logic", "riddle"]);
    let t = names(&["key", "mechanism"]);
    let slot = CString::new("riddle").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe {
        relmap_suggest(e, b.ptrs.as_ptr(), 3, t.ptrs.as_ptr(), 2, slot.as_ptr(), &mut out)
    };
    assert_eq!(status, RelmapStatus::Ok, "{}", last_error());
    assert_eq!(take_json(out)["candidates"][0]["best_member"], "lock");
    unsafe { relmap_engine_free(e) };
}

#[test]
fn opens_a_toml_config() {
    let dir = tempfile::tempdir().unwrap();
    let snap = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/solar.jsonl");
    std::fs::copy(snap, dir.path().join("s.jsonl")).unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "snapshot = \"s.jsonl\"\nbeam_width = 5\n").unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { relmap_engine_open(path.as_ptr(), &mut e) }, RelmapStatus::Ok, "{}", last_error());
    unsafe { relmap_engine_free(e) };
}

#[test]
fn solution_space_sizes() {
    let mut n = 0u64;
    assert_eq!(unsafe { relmap_solution_space_size(2, 2, &mut n) }, RelmapStatus::Ok);
    assert_eq!(n, 3);
    assert_eq!(unsafe { relmap_solution_space_size(7, 7, &mut n) }, RelmapStatus::Ok);
    assert_eq!(n, 130_873);
    assert_eq!(unsafe { relmap_solution_space_size(0, 3, &mut n) }, RelmapStatus::InputError);
    assert_eq!(unsafe { relmap_solution_space_size(40, 40, &mut n) }, RelmapStatus::InputError);
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/relmap.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "relmap_version",
        "relmap_last_error",
        "relmap_engine_open",
        "relmap_engine_configure",
        "relmap_map",
        "relmap_explain",
        "relmap_suggest",
        "relmap_solution_space_size",
        "relmap_string_free",
        "relmap_engine_free",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing");
    }
    assert!(text.contains("typedef struct RelmapEngine RelmapEngine;"));
    assert!(text.contains("RELMAP_STATUS_SOURCE_ERROR = 3"));

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"relmap.h\"\nint main(void) { RelmapEngine *e = 0; return relmap_engine_open(\"x\", &e) == RELMAP_STATUS_OK; }\n",
    )
    .unwrap();
    match Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("skipping C syntax check: {e}"),
    }
}
