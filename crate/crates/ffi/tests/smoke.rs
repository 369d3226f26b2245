//! Exercises the C ABI end to end from Rust: handles, status codes, error
//! messages, and the generated header.

use std::ffi::{CStr, CString};
use std::path::Path;

use offlang_ffi::{
    offlang_evaluate, offlang_last_error, offlang_normalize, offlang_pipeline_free,
    offlang_pipeline_new, offlang_predict, offlang_stats, offlang_string_free, offlang_train,
    offlang_version, OfflangPipeline, OfflangStatus,
};

fn cstring(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(ptr: *mut libc::c_char) -> String {
    assert!(!ptr.is_null());
    let s = CStr::from_ptr(ptr).to_str().unwrap().to_string();
    offlang_string_free(ptr);
    s
}

fn last_error() -> String {
    let ptr = offlang_last_error();
    assert!(!ptr.is_null(), "an error message must be set");
    unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string()
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(offlang_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn normalize_round_trip() {
    let text = cstring("Check THIS https://t.co/xyz out 42");
    let lang = cstring("en");
    let mut out: *mut libc::c_char = std::ptr::null_mut();
    let status = unsafe { offlang_normalize(text.as_ptr(), lang.as_ptr(), &mut out) };
    assert_eq!(status, OfflangStatus::Ok);
    assert_eq!(unsafe { take_string(out) }, "check this out number");
}

#[test]
fn devanagari_normalize_keeps_case_and_replaces_digits() {
    let text = cstring("मैंने ३ बार कहा RT");
    let lang = cstring("hi");
    let mut out: *mut libc::c_char = std::ptr::null_mut();
    let status = unsafe { offlang_normalize(text.as_ptr(), lang.as_ptr(), &mut out) };
    assert_eq!(status, OfflangStatus::Ok);
    assert_eq!(unsafe { take_string(out) }, "मैंने number बार कहा RT");
}

#[test]
fn unknown_language_reports_usage_error_with_message() {
    let text = cstring("hello");
    let lang = cstring("xx");
    let mut out: *mut libc::c_char = std::ptr::null_mut();
    let status = unsafe { offlang_normalize(text.as_ptr(), lang.as_ptr(), &mut out) };
    assert_eq!(status, OfflangStatus::Usage);
    assert!(last_error().contains("xx"), "{}", last_error());
    assert!(out.is_null());
}

#[test]
fn null_arguments_are_invalid() {
    let mut out: *mut libc::c_char = std::ptr::null_mut();
    let lang = cstring("en");
    let status = unsafe { offlang_normalize(std::ptr::null(), lang.as_ptr(), &mut out) };
    assert_eq!(status, OfflangStatus::InvalidArgument);
    assert!(last_error().contains("text"));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let path = cstring("/no/such/config.toml");
    let mut pipeline: *mut OfflangPipeline = std::ptr::null_mut();
    let status = unsafe { offlang_pipeline_new(path.as_ptr(), &mut pipeline) };
    assert_eq!(status, OfflangStatus::Usage);
    assert!(pipeline.is_null());
}

/// A tiny label-consistent dataset; every text is distinct in letters.
fn write_fixture(dir: &Path) -> std::path::PathBuf {
    let words = ["alpha", "bravo", "carol", "delta", "echo", "fanta"];
    let mut tsv = String::from("text_id\ttext\ttask_1\ttask_2\ttask_3\n");
    for i in 0..120 {
        let w = words[i % 6];
        if i % 2 == 0 {
            tsv.push_str(&format!("id{i}\tcalm words about {w}\tNOT\tNONE\tNONE\n"));
        } else {
            let b = ["HATE", "OFFN", "PRFN"][i % 3];
            let c = ["TIN", "UNT"][(i / 3) % 2];
            tsv.push_str(&format!("id{i}\tfurious words about {w} {b}\t HOF\t{b}\t{c}\n"));
        }
    }
    let path = dir.join("train.tsv");
    std::fs::write(&path, tsv.replace("\t HOF\t", "\tHOF\t")).unwrap();
    path
}

#[test]
fn full_pipeline_via_c_api() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_fixture(dir.path());
    let config_path = dir.path().join("config.toml");
    std::fs::write(
        &config_path,
        format!(
            "language = \"en\"\nseed = 5\n\
             [data]\ntrain = {train:?}\n\
             [model]\npath = {model:?}\n\
             [train]\nrounds = 25\nmin_data_in_leaf = 5\n",
            train = train.to_str().unwrap(),
            model = dir.path().join("model.hmdl").to_str().unwrap(),
        ),
    )
    .unwrap();

    let config_c = cstring(config_path.to_str().unwrap());
    let mut pipeline: *mut OfflangPipeline = std::ptr::null_mut();
    let status = unsafe { offlang_pipeline_new(config_c.as_ptr(), &mut pipeline) };
    assert_eq!(status, OfflangStatus::Ok);
    assert!(!pipeline.is_null());

    // stats
    let mut stats_out: *mut libc::c_char = std::ptr::null_mut();
    let status = unsafe { offlang_stats(pipeline, &mut stats_out) };
    assert_eq!(status, OfflangStatus::Ok);
    let stats = unsafe { take_string(stats_out) };
    assert!(stats.contains("HOF 60"), "{stats}");

    // train
    assert_eq!(unsafe { offlang_train(pipeline) }, OfflangStatus::Ok);
    assert!(dir.path().join("model.hmdl").exists());

    // predict the training file itself
    let pred_path = dir.path().join("pred.tsv");
    let input_c = cstring(train.to_str().unwrap());
    let pred_c = cstring(pred_path.to_str().unwrap());
    let status = unsafe { offlang_predict(pipeline, input_c.as_ptr(), pred_c.as_ptr()) };
    assert_eq!(status, OfflangStatus::Ok, "{}", last_error());
    assert_eq!(
        std::fs::read_to_string(&pred_path).unwrap().lines().count(),
        121
    );

    // evaluate pred against gold
    let mut text_out: *mut libc::c_char = std::ptr::null_mut();
    let status = unsafe {
        offlang_evaluate(
            pipeline,
            input_c.as_ptr(),
            pred_c.as_ptr(),
            std::ptr::null(),
            &mut text_out,
        )
    };
    assert_eq!(status, OfflangStatus::Ok);
    let tables = unsafe { take_string(text_out) };
    assert!(tables.contains("Sub-task A"), "{tables}");
    assert!(tables.contains("Total"), "{tables}");

    unsafe { offlang_pipeline_free(pipeline) };
}

#[test]
fn generated_header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/offlang.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "OFFLANG_H",
        "typedef struct OfflangPipeline OfflangPipeline;",
        "offlang_pipeline_new",
        "offlang_pipeline_free",
        "offlang_normalize",
        "offlang_train",
        "offlang_predict",
        "offlang_evaluate",
        "offlang_stats",
        "offlang_last_error",
        "offlang_string_free",
        "OFFLANG_STATUS_OK",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
