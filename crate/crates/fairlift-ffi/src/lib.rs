//! C ABI for the fairlift toolkit.
//!
//! Conventions:
//! - Opaque handles (`FlGraph`, `FlStore`) are created and released by
//!   this library only; never free them with `free(3)`.
//! - Functions returning `int` use `FL_OK` (0) for success; any other
//!   value is an `FlStatus` code and the detail is available from
//!   [`fl_last_error`] until the next call on the same thread.
//! - Returned strings are NUL-terminated UTF-8 owned by the caller;
//!   release them with [`fl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use fairlift::assess::{assess, load_questions, render_json, AssessmentBundle};
use fairlift::clock::{fixed_clock, system_clock, SharedClock};
use fairlift::error::{error_line, Diagnostic, Error};
use fairlift::pipeline::{run_pipeline, PipelineConfig};
use fairlift::prov::Granularity;
use fairlift::query::{evaluate, parse_query};
use fairlift::rdf::{parse_ntriples, serialize_ntriples, Graph};
use fairlift::store::TripleStore;

/// Status codes returned by fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    /// Success.
    FlOk = 0,
    /// A pointer argument was NULL or a string was not valid UTF-8.
    FlInvalidArgument = 1,
    /// A toolkit module reported an error (see fl_last_error()).
    FlModuleError = 2,
}

/// An RDF graph (set of triples).
pub struct FlGraph(Graph);

/// An indexed triple store supporting conjunctive queries.
pub struct FlStore(TripleStore);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).expect("NUL filtered");
    });
}

fn set_module_error(e: &Error) -> c_int {
    set_error(&error_line(e));
    FlStatus::FlModuleError as c_int
}

fn invalid(msg: &str) -> c_int {
    set_error(msg);
    FlStatus::FlInvalidArgument as c_int
}

/// # Safety
/// `s` must be NULL or a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, String> {
    if s.is_null() {
        return Err(format!("{name} is NULL"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| format!("{name} is not UTF-8: {e}"))
}

fn to_owned_c_string(s: String) -> *mut c_char {
    let sanitized: String = s.chars().filter(|&c| c != '\0').collect();
    CString::new(sanitized)
        .expect("NUL filtered")
        .into_raw()
}

/// Last error message recorded on this thread. The pointer stays valid
/// until the next fairlift call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn fl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a fairlift function
/// that documents [`fl_string_free`] ownership, or NULL.
#[no_mangle]
pub unsafe extern "C" fn fl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse an N-Triples document into a new graph handle.
///
/// On success writes the handle to `out` and returns FL_OK.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to a graph-handle slot.
#[no_mangle]
pub unsafe extern "C" fn fl_graph_parse_ntriples(
    text: *const c_char,
    out: *mut *mut FlGraph,
) -> c_int {
    if out.is_null() {
        return invalid("out is NULL");
    }
    let text = match utf8_arg(text, "text") {
        Ok(t) => t,
        Err(e) => return invalid(&e),
    };
    match parse_ntriples(text) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(FlGraph(g)));
            FlStatus::FlOk as c_int
        }
        Err(e) => set_module_error(&Error::from(e)),
    }
}

/// Serialize a graph to canonical N-Triples (sorted, trailing newline).
/// Returns a string owned by the caller (fl_string_free), or NULL if
/// `graph` is NULL.
///
/// # Safety
/// `graph` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn fl_graph_serialize_ntriples(graph: *const FlGraph) -> *mut c_char {
    let Some(g) = graph.as_ref() else {
        set_error("graph is NULL");
        return ptr::null_mut();
    };
    to_owned_c_string(serialize_ntriples(&g.0))
}

/// Number of triples in the graph (0 for NULL).
///
/// # Safety
/// `graph` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn fl_graph_len(graph: *const FlGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.len())
}

/// Release a graph handle.
///
/// # Safety
/// `graph` must be NULL or a live graph handle; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_graph_free(graph: *mut FlGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Build an indexed triple store from a graph (the graph handle stays
/// owned by the caller and remains valid).
///
/// # Safety
/// `graph` must be a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn fl_store_from_graph(graph: *const FlGraph) -> *mut FlStore {
    let Some(g) = graph.as_ref() else {
        set_error("graph is NULL");
        return ptr::null_mut();
    };
    Box::into_raw(Box::new(FlStore(TripleStore::from_graph(&g.0))))
}

/// Evaluate a query (PREFIX/SELECT/WHERE text) against the store.
/// Returns the result table as TSV (header row of variables, then one
/// row per binding), owned by the caller; NULL on error (see
/// fl_last_error()).
///
/// # Safety
/// `store` must be a live store handle; `query` a valid NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn fl_store_query(
    store: *const FlStore,
    query: *const c_char,
) -> *mut c_char {
    let Some(s) = store.as_ref() else {
        set_error("store is NULL");
        return ptr::null_mut();
    };
    let query = match utf8_arg(query, "query") {
        Ok(q) => q,
        Err(e) => {
            set_error(&e);
            return ptr::null_mut();
        }
    };
    match parse_query(query) {
        Ok(q) => to_owned_c_string(evaluate(&q, &s.0).to_tsv()),
        Err(e) => {
            set_module_error(&Error::from(e));
            ptr::null_mut()
        }
    }
}

/// Release a store handle.
///
/// # Safety
/// `store` must be NULL or a live store handle; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_store_free(store: *mut FlStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

fn clock_from_json(obj: &serde_json::Value) -> Result<SharedClock, String> {
    match obj.get("fixed_clock") {
        None => Ok(system_clock()),
        Some(v) => {
            let s = v
                .as_str()
                .ok_or_else(|| "\"fixed_clock\" must be an ISO-8601 string".to_owned())?;
            let instant = chrono::DateTime::parse_from_rfc3339(s)
                .map_err(|e| format!("\"fixed_clock\" {s:?} is not ISO-8601: {e}"))?;
            Ok(fixed_clock(instant.with_timezone(&chrono::Utc)))
        }
    }
}

fn json_path(obj: &serde_json::Value, key: &str) -> Option<PathBuf> {
    obj.get(key).and_then(|v| v.as_str()).map(PathBuf::from)
}

fn run_pipeline_json(config_json: &str) -> Result<String, String> {
    let doc: serde_json::Value =
        serde_json::from_str(config_json).map_err(|e| format!("config is not JSON: {e}"))?;
    let need = |key: &str| {
        json_path(&doc, key).ok_or_else(|| format!("config key {key:?} (string path) is required"))
    };
    let granularity = match doc.get("granularity").and_then(|v| v.as_str()) {
        None => Granularity::default(),
        Some(s) => Granularity::parse(s)
            .ok_or_else(|| format!("granularity must be run, step, or record (got {s:?})"))?,
    };
    let config = PipelineConfig {
        input: need("in")?,
        schema: need("schema")?,
        mapping: need("map")?,
        out_dir: need("out")?,
        run_id: doc
            .get("run_id")
            .and_then(|v| v.as_str())
            .map(str::to_owned),
        granularity,
        batch_size: doc
            .get("batch_size")
            .and_then(|v| v.as_u64())
            .unwrap_or(100) as usize,
        clock: clock_from_json(&doc)?,
    };
    let report = run_pipeline(&config).map_err(|e| error_line(&e))?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    Ok(json)
}

/// Run the full pipeline. `config_json` is an object with string keys
/// "in", "schema", "map", "out" (paths, required) and optional
/// "run_id", "granularity" (run|step|record), "batch_size",
/// "fixed_clock" (ISO-8601). Returns the run report as JSON (owned by
/// the caller) or NULL on error.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fl_run_pipeline(config_json: *const c_char) -> *mut c_char {
    let text = match utf8_arg(config_json, "config_json") {
        Ok(t) => t,
        Err(e) => {
            set_error(&e);
            return ptr::null_mut();
        }
    };
    match run_pipeline_json(text) {
        Ok(json) => to_owned_c_string(json),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}

fn assess_json(bundle_json: &str) -> Result<String, String> {
    let doc: serde_json::Value =
        serde_json::from_str(bundle_json).map_err(|e| format!("bundle is not JSON: {e}"))?;
    let bundle = AssessmentBundle {
        data_path: json_path(&doc, "data"),
        prov_path: json_path(&doc, "prov"),
        metadata_path: json_path(&doc, "metadata"),
        mapping_path: json_path(&doc, "map"),
        service_url: doc
            .get("service_url")
            .and_then(|v| v.as_str())
            .map(str::to_owned),
    };
    let questions = match json_path(&doc, "questions") {
        None => Vec::new(),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| format!("cannot read questions {}: {e}", p.display()))?;
            load_questions(&text).map_err(|e| format!("ERROR {}.{}: {e}", e.module(), e.name()))?
        }
    };
    let report = assess(&bundle, &questions)
        .map_err(|e| format!("ERROR {}.{}: {e}", e.module(), e.name()))?;
    Ok(render_json(&report))
}

/// Assess FAIR maturity. `bundle_json` is an object with optional
/// string keys "data", "prov", "metadata", "map", "questions" (paths)
/// and "service_url"; at least one bundle element must be present.
/// Returns the maturity report as JSON (owned by the caller) or NULL
/// on error.
///
/// # Safety
/// `bundle_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fl_assess(bundle_json: *const c_char) -> *mut c_char {
    let text = match utf8_arg(bundle_json, "bundle_json") {
        Ok(t) => t,
        Err(e) => {
            set_error(&e);
            return ptr::null_mut();
        }
    };
    match assess_json(text) {
        Ok(json) => to_owned_c_string(json),
        Err(e) => {
            set_error(&e);
            ptr::null_mut()
        }
    }
}
