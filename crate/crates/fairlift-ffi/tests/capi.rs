//! Exercises the C ABI through the exported symbols, the same way a C
//! caller would (raw pointers, manual frees).

use std::ffi::{CStr, CString};
use std::ptr;

use fairlift_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null(), "last error: {}", last_error());
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    fl_string_free(p);
    s
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(fl_last_error())
            .to_str()
            .unwrap()
            .to_owned()
    }
}

#[test]
fn graph_round_trip_and_store_query() {
    // already in canonical order ('2' < '>' code-point-wise)
    let nt = "<http://d/s> <http://d/p2> <http://d/o> .\n<http://d/s> <http://d/p> \"x\" .\n";
    unsafe {
        let mut graph: *mut FlGraph = ptr::null_mut();
        let rc = fl_graph_parse_ntriples(c(nt).as_ptr(), &mut graph);
        assert_eq!(rc, 0, "parse failed: {}", last_error());
        assert_eq!(fl_graph_len(graph), 2);

        let serialized = take_string(fl_graph_serialize_ntriples(graph));
        assert_eq!(serialized, nt);

        let store = fl_store_from_graph(graph);
        assert!(!store.is_null());
        let tsv = take_string(fl_store_query(
            store,
            c("SELECT ?o WHERE { <http://d/s> <http://d/p2> ?o }").as_ptr(),
        ));
        assert_eq!(tsv, "?o\n<http://d/o>\n");

        fl_store_free(store);
        fl_graph_free(graph);
    }
}

#[test]
fn parse_error_reports_module_name() {
    unsafe {
        let mut graph: *mut FlGraph = ptr::null_mut();
        let rc = fl_graph_parse_ntriples(c("not ntriples").as_ptr(), &mut graph);
        assert_eq!(rc, 2); // FL_MODULE_ERROR
        assert!(graph.is_null());
        assert!(
            last_error().starts_with("ERROR rdf-core."),
            "got: {}",
            last_error()
        );
    }
}

#[test]
fn query_error_sets_last_error() {
    unsafe {
        let mut graph: *mut FlGraph = ptr::null_mut();
        assert_eq!(fl_graph_parse_ntriples(c("").as_ptr(), &mut graph), 0);
        let store = fl_store_from_graph(graph);
        let out = fl_store_query(store, c("SELECT WHERE {}").as_ptr());
        assert!(out.is_null());
        assert!(
            last_error().starts_with("ERROR store-query."),
            "got: {}",
            last_error()
        );
        fl_store_free(store);
        fl_graph_free(graph);
    }
}

#[test]
fn null_arguments_are_invalid() {
    unsafe {
        let rc = fl_graph_parse_ntriples(ptr::null(), ptr::null_mut());
        assert_eq!(rc, 1); // FL_INVALID_ARGUMENT
        assert_eq!(fl_graph_len(ptr::null()), 0);
        assert!(fl_graph_serialize_ntriples(ptr::null()).is_null());
        fl_graph_free(ptr::null_mut());
        fl_store_free(ptr::null_mut());
        fl_string_free(ptr::null_mut());
    }
}

#[test]
fn pipeline_and_assess_through_json_configs() {
    let fixtures = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .join("fairlift")
        .join("fixtures");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = serde_json::json!({
        "in": fixtures.join("crf.csv"),
        "schema": fixtures.join("crf.schema.json"),
        "map": fixtures.join("crf.mapping.json"),
        "out": out,
        "run_id": "ffi-run-1",
        "fixed_clock": "2020-05-01T12:00:00Z",
    });
    unsafe {
        let report = take_string(fl_run_pipeline(c(&config.to_string()).as_ptr()));
        let report: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(report["rows_in"], 200);
        assert_eq!(report["triples_out"], 1731);

        let bundle = serde_json::json!({
            "data": out.join("data.nt"),
            "prov": out.join("prov.nt"),
            "metadata": fixtures.join("metadata.json"),
            "map": fixtures.join("crf.mapping.json"),
            "questions": fixtures.join("questions.json"),
        });
        let report = take_string(fl_assess(c(&bundle.to_string()).as_ptr()));
        let report: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(report["indicators"].as_array().unwrap().len(), 10);
        // offline bundle: everything except the two service indicators passes
        for ind in report["indicators"].as_array().unwrap() {
            let id = ind["id"].as_str().unwrap();
            let expected = !matches!(id, "F4-M-SERVED" | "A1-M-HTTP");
            assert_eq!(ind["pass"], expected, "{id}: {}", ind["evidence"]);
        }
        assert_eq!(report["essential_pass"], true);
        let cqs = report["cqs"].as_array().unwrap();
        assert_eq!(cqs.len(), 3);
        assert!(cqs.iter().all(|c| c["answered"] == true));
    }
}

#[test]
fn empty_bundle_is_an_error() {
    unsafe {
        let out = fl_assess(c("{}").as_ptr());
        assert!(out.is_null());
        assert!(
            last_error().contains("assessor.EmptyBundle"),
            "got: {}",
            last_error()
        );
    }
}
