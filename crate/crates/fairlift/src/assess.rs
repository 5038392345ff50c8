//! FAIR maturity assessment: a fixed 10-indicator rubric evaluated
//! mechanically over an assessment bundle (data graph, provenance
//! document, metadata, mapping spec, optional live service), plus
//! competency questions answered through the query engine.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Diagnostic;
use crate::fdp::{LayerKind, MetadataStore, ValidationIssue};
use crate::ingest::sha256_hex;
use crate::prov::prov_json_to_graph;
use crate::query::{evaluate, parse_query};
use crate::rdf::{parse_ntriples, render_term, serialize_ntriples, validate_iri, vocab, Graph, Term};
use crate::store::TripleStore;

/// Version tag reported in every rendering; bump when the rubric's
/// indicator set or semantics change.
pub const RUBRIC_VERSION: &str = "flt-rubric-1.0";

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssessError {
    #[error("assessment bundle is empty: provide at least one element")]
    EmptyBundle,
    #[error("question {question}: {detail}")]
    QueryParseError { question: String, detail: String },
    #[error("cannot read bundle element: {reason}")]
    BadBundle { reason: String },
    #[error("invalid questions file: {reason}")]
    BadQuestions { reason: String },
}

impl Diagnostic for AssessError {
    fn module(&self) -> &'static str {
        "assessor"
    }
    fn name(&self) -> &'static str {
        match self {
            AssessError::EmptyBundle => "EmptyBundle",
            AssessError::QueryParseError { .. } => "QueryParseError",
            AssessError::BadBundle { .. } => "BadBundle",
            AssessError::BadQuestions { .. } => "BadQuestions",
        }
    }
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

/// What gets assessed. Every element is optional, but at least one
/// must be present; indicators whose inputs are missing fail with
/// evidence instead of erroring.
#[derive(Debug, Clone, Default)]
pub struct AssessmentBundle {
    /// N-Triples data file (the triplified dataset).
    pub data_path: Option<PathBuf>,
    /// Provenance document: N-Triples or PROV-JSON (sniffed).
    pub prov_path: Option<PathBuf>,
    /// Layered metadata authoring file (metadata.json).
    pub metadata_path: Option<PathBuf>,
    /// Mapping spec (for the vocabulary-membership indicator).
    pub mapping_path: Option<PathBuf>,
    /// Live service base URL (enables the networked indicators).
    pub service_url: Option<String>,
}

impl AssessmentBundle {
    pub fn is_empty(&self) -> bool {
        self.data_path.is_none()
            && self.prov_path.is_none()
            && self.metadata_path.is_none()
            && self.mapping_path.is_none()
            && self.service_url.is_none()
    }
}

/// Bundle elements loaded into memory. Read failures of named paths
/// are hard errors; *parse* failures are kept as evidence strings so
/// the relevant indicators fail instead.
struct Loaded {
    data_raw: Option<Vec<u8>>,
    data: Option<Result<Graph, String>>,
    prov: Option<Result<Graph, String>>,
    metadata: Option<Result<(MetadataStore, Vec<ValidationIssue>), String>>,
    namespaces: Option<Result<BTreeMap<String, String>, String>>,
    service_url: Option<String>,
}

fn read(path: &PathBuf) -> Result<Vec<u8>, AssessError> {
    std::fs::read(path).map_err(|e| AssessError::BadBundle {
        reason: format!("{}: {e}", path.display()),
    })
}

impl Loaded {
    fn from_bundle(bundle: &AssessmentBundle) -> Result<Loaded, AssessError> {
        if bundle.is_empty() {
            return Err(AssessError::EmptyBundle);
        }
        let mut data_raw = None;
        let mut data = None;
        if let Some(p) = &bundle.data_path {
            let raw = read(p)?;
            data = Some(match std::str::from_utf8(&raw) {
                Ok(text) => parse_ntriples(text).map_err(|e| e.to_string()),
                Err(e) => Err(format!("not UTF-8: {e}")),
            });
            data_raw = Some(raw);
        }
        let prov = match &bundle.prov_path {
            Some(p) => {
                let raw = read(p)?;
                Some(match std::str::from_utf8(&raw) {
                    Ok(text) => {
                        if text.trim_start().starts_with('{') {
                            prov_json_to_graph(text).map_err(|e| e.to_string())
                        } else {
                            parse_ntriples(text).map_err(|e| e.to_string())
                        }
                    }
                    Err(e) => Err(format!("not UTF-8: {e}")),
                })
            }
            None => None,
        };
        let metadata = match &bundle.metadata_path {
            Some(p) => {
                let raw = read(p)?;
                Some(match std::str::from_utf8(&raw) {
                    Ok(text) => MetadataStore::from_json_lenient(text, &p.display().to_string())
                        .map_err(|e| e.to_string()),
                    Err(e) => Err(format!("not UTF-8: {e}")),
                })
            }
            None => None,
        };
        let namespaces = match &bundle.mapping_path {
            Some(p) => {
                let raw = read(p)?;
                Some(extract_namespaces(&raw))
            }
            None => None,
        };
        Ok(Loaded {
            data_raw,
            data,
            prov,
            metadata,
            namespaces,
            service_url: bundle.service_url.clone(),
        })
    }

    fn store(&self) -> TripleStore {
        match &self.data {
            Some(Ok(g)) => TripleStore::from_graph(g),
            _ => TripleStore::new(),
        }
    }
}

fn extract_namespaces(raw: &[u8]) -> Result<BTreeMap<String, String>, String> {
    let text = std::str::from_utf8(raw).map_err(|e| format!("not UTF-8: {e}"))?;
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = doc
        .get("prefixes")
        .and_then(|v| v.as_object())
        .ok_or_else(|| "mapping spec has no \"prefixes\" object".to_owned())?;
    let mut out = BTreeMap::new();
    for (k, v) in obj {
        let ns = v
            .as_str()
            .ok_or_else(|| format!("prefix {k:?} is not a string"))?;
        out.insert(k.clone(), ns.to_owned());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Indicators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    Essential,
    Important,
    Useful,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicatorResult {
    pub id: &'static str,
    pub principle: &'static str,
    pub priority: Priority,
    pub pass: bool,
    pub evidence: String,
}

/// (id, principle letter, priority) in fixed report order.
pub const INDICATORS: &[(&str, &str, Priority)] = &[
    ("F1-M-ID", "F", Priority::Essential),
    ("F2-M-RICH", "F", Priority::Important),
    ("F3-M-REF", "F", Priority::Essential),
    ("F4-M-SERVED", "F", Priority::Important),
    ("A1-M-HTTP", "A", Priority::Important),
    ("I1-D-RDF", "I", Priority::Essential),
    ("I1-M-RDF", "I", Priority::Essential),
    ("I2-D-VOCAB", "I", Priority::Useful),
    ("R1.1-M-LICENSE", "R", Priority::Essential),
    ("R1.2-M-PROV", "R", Priority::Essential),
];

fn http_client() -> Result<reqwest::blocking::Client, String> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(5))
        .build()
        .map_err(|e| format!("http client: {e}"))
}

fn service_root(url: &str) -> String {
    format!("{}/", url.trim_end_matches('/'))
}

fn check_service_root(url: &str) -> (bool, String) {
    let root = service_root(url);
    let client = match http_client() {
        Ok(c) => c,
        Err(e) => return (false, e),
    };
    match client.get(&root).send() {
        Ok(resp) if resp.status().is_success() => (true, format!("GET {root} returned 200")),
        Ok(resp) => (false, format!("GET {root} returned {}", resp.status().as_u16())),
        Err(e) => (false, format!("GET {root} failed: {e}")),
    }
}

/// Crawl from the root following ldp:contains; every reachable record
/// route must answer 200 with a parseable N-Triples body.
fn crawl_records(url: &str) -> (bool, String) {
    let root = service_root(url);
    let client = match http_client() {
        Ok(c) => c,
        Err(e) => return (false, e),
    };
    let mut queue = vec![root.clone()];
    let mut seen = BTreeSet::new();
    while let Some(u) = queue.pop() {
        if !seen.insert(u.clone()) {
            continue;
        }
        if seen.len() > 100 {
            return (false, "crawl exceeded 100 routes".to_owned());
        }
        let resp = match client
            .get(&u)
            .header("Accept", "application/n-triples")
            .send()
        {
            Ok(r) => r,
            Err(e) => return (false, format!("GET {u} failed: {e}")),
        };
        if !resp.status().is_success() {
            return (false, format!("GET {u} returned {}", resp.status().as_u16()));
        }
        let body = match resp.text() {
            Ok(b) => b,
            Err(e) => return (false, format!("GET {u}: unreadable body: {e}")),
        };
        let g = match parse_ntriples(&body) {
            Ok(g) => g,
            Err(e) => return (false, format!("GET {u}: body is not N-Triples: {e}")),
        };
        for t in g.iter() {
            if t.predicate.as_str() == vocab::LDP_CONTAINS {
                if let Term::Iri(child) = &t.object {
                    queue.push(child.as_str().to_owned());
                }
            }
        }
    }
    (
        true,
        format!("{} record routes reachable from {root}", seen.len()),
    )
}

fn fail(msg: impl Into<String>) -> (bool, String) {
    (false, msg.into())
}

fn eval_one(id: &str, l: &Loaded) -> (bool, String) {
    let meta = || -> Result<&(MetadataStore, Vec<ValidationIssue>), String> {
        match &l.metadata {
            None => Err("metadata not provided".to_owned()),
            Some(Err(e)) => Err(format!("metadata failed to load: {e}")),
            Some(Ok(pair)) => Ok(pair),
        }
    };
    match id {
        "F1-M-ID" => match meta() {
            Err(e) => fail(e),
            Ok((store, _)) => {
                let bad: Vec<String> = store
                    .records
                    .keys()
                    .filter(|id| validate_iri(id.as_str()).is_err())
                    .map(|id| id.to_string())
                    .collect();
                if bad.is_empty() {
                    (
                        true,
                        format!("all {} record ids are absolute IRIs", store.records.len()),
                    )
                } else {
                    fail(format!("non-IRI record ids: {}", bad.join(", ")))
                }
            }
        },
        "F2-M-RICH" => match meta() {
            Err(e) => fail(e),
            Ok((store, _)) => {
                let mut missing = Vec::new();
                let mut count = 0;
                for r in store.records.values() {
                    if r.kind != LayerKind::Dataset {
                        continue;
                    }
                    count += 1;
                    if r.title.as_deref().map_or(true, str::is_empty) {
                        missing.push(format!("<{}> lacks title", r.id));
                    }
                    if r.description.as_deref().map_or(true, str::is_empty) {
                        missing.push(format!("<{}> lacks description", r.id));
                    }
                    if r.keywords.is_empty() {
                        missing.push(format!("<{}> lacks keywords", r.id));
                    }
                }
                if count == 0 {
                    fail("no dataset records present")
                } else if missing.is_empty() {
                    (
                        true,
                        format!("{count} dataset record(s) carry title, description, and keywords"),
                    )
                } else {
                    fail(missing.join("; "))
                }
            }
        },
        "F3-M-REF" => match meta() {
            Err(e) => fail(e),
            Ok((store, _)) => {
                let dists: Vec<_> = store
                    .records
                    .values()
                    .filter(|r| r.kind == LayerKind::Distribution)
                    .collect();
                if dists.is_empty() {
                    return fail("no distribution records present");
                }
                let missing: Vec<String> = dists
                    .iter()
                    .filter(|r| r.download_url.is_none() && r.access_url.is_none())
                    .map(|r| format!("<{}>", r.id))
                    .collect();
                if missing.is_empty() {
                    (
                        true,
                        format!(
                            "{} distribution record(s) reference the data by URL",
                            dists.len()
                        ),
                    )
                } else {
                    fail(format!("no data URL on {}", missing.join(", ")))
                }
            }
        },
        "F4-M-SERVED" => match &l.service_url {
            None => fail("service not provided"),
            Some(url) => check_service_root(url),
        },
        "A1-M-HTTP" => match &l.service_url {
            None => fail("service not provided"),
            Some(url) => crawl_records(url),
        },
        "I1-D-RDF" => match &l.data {
            None => fail("data not provided"),
            Some(Err(e)) => fail(format!("data does not parse as N-Triples: {e}")),
            Some(Ok(g)) => (
                true,
                format!("data parses as N-Triples ({} statements)", g.len()),
            ),
        },
        "I1-M-RDF" => match meta() {
            Err(e) => fail(e),
            Ok((store, _)) => {
                let g = store.to_graph();
                let nt = serialize_ntriples(&g);
                (
                    true,
                    format!(
                        "metadata serializes as RDF ({} statements, {} bytes)",
                        g.len(),
                        nt.len()
                    ),
                )
            }
        },
        "I2-D-VOCAB" => {
            let namespaces = match &l.namespaces {
                None => return fail("mapping spec not provided"),
                Some(Err(e)) => return fail(format!("mapping spec unusable: {e}")),
                Some(Ok(ns)) => ns,
            };
            let g = match &l.data {
                None => return fail("data not provided"),
                Some(Err(e)) => return fail(format!("data does not parse: {e}")),
                Some(Ok(g)) => g,
            };
            let mut outside = BTreeSet::new();
            let mut predicates = BTreeSet::new();
            for t in g.iter() {
                let p = t.predicate.as_str();
                predicates.insert(p.to_owned());
                if !namespaces.values().any(|ns| p.starts_with(ns.as_str())) {
                    outside.insert(format!("<{p}>"));
                }
            }
            if outside.is_empty() {
                (
                    true,
                    format!(
                        "{} distinct predicates, all inside declared namespaces",
                        predicates.len()
                    ),
                )
            } else {
                fail(format!(
                    "predicates outside declared namespaces: {}",
                    outside.into_iter().collect::<Vec<_>>().join(", ")
                ))
            }
        }
        "R1.1-M-LICENSE" => match meta() {
            Err(e) => fail(e),
            Ok((store, _)) => {
                let mut missing = Vec::new();
                let mut checked = 0;
                for r in store.records.values() {
                    if !matches!(r.kind, LayerKind::Dataset | LayerKind::Distribution) {
                        continue;
                    }
                    checked += 1;
                    if r.license.is_none() {
                        missing.push(format!("<{}>", r.id));
                    }
                }
                if checked == 0 {
                    fail("no dataset or distribution records present")
                } else if missing.is_empty() {
                    (
                        true,
                        format!("license present on all {checked} dataset/distribution records"),
                    )
                } else {
                    fail(format!("license missing on {}", missing.join(", ")))
                }
            }
        },
        "R1.2-M-PROV" => {
            let g = match &l.prov {
                None => return fail("provenance not provided"),
                Some(Err(e)) => return fail(format!("provenance unusable: {e}")),
                Some(Ok(g)) => g,
            };
            if g.is_empty() {
                return fail("provenance document is empty");
            }
            let raw = match &l.data_raw {
                None => return fail("data not provided, cannot verify recorded digest"),
                Some(raw) => raw,
            };
            let actual = sha256_hex(raw);
            let path_pred = vocab::iri(vocab::FLT_PATH);
            let sha_pred = vocab::iri(vocab::FLT_SHA256);
            let subject = g.iter().find_map(|t| {
                (t.predicate == path_pred
                    && t.object.as_literal().map(|l| l.lexical()) == Some("data.nt"))
                .then(|| t.subject.clone())
            });
            let Some(subject) = subject else {
                return fail("no provenance entity labeled with path data.nt");
            };
            let recorded = g.iter().find_map(|t| {
                (t.subject == subject && t.predicate == sha_pred)
                    .then(|| t.object.as_literal().map(|l| l.lexical().to_owned()))
                    .flatten()
            });
            match recorded {
                Some(d) if d == actual => (
                    true,
                    format!("recorded digest matches data file ({}…)", &actual[..12]),
                ),
                Some(d) => fail(format!(
                    "digest mismatch: recorded {}…, actual {}…",
                    &d[..12.min(d.len())],
                    &actual[..12]
                )),
                None => fail("provenance entity for data.nt has no sha256 label"),
            }
        }
        other => unreachable!("unknown indicator {other}"),
    }
}

/// Evaluate the full rubric over a bundle. Missing elements produce
/// failing indicators with evidence; only an empty bundle or an
/// unreadable named file is an error.
pub fn evaluate_indicators(bundle: &AssessmentBundle) -> Result<Vec<IndicatorResult>, AssessError> {
    let loaded = Loaded::from_bundle(bundle)?;
    Ok(indicator_results(&loaded))
}

fn indicator_results(loaded: &Loaded) -> Vec<IndicatorResult> {
    INDICATORS
        .iter()
        .map(|&(id, principle, priority)| {
            let (pass, evidence) = eval_one(id, loaded);
            IndicatorResult {
                id,
                principle,
                priority,
                pass,
                evidence,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Competency questions
// ---------------------------------------------------------------------------

fn default_min_rows() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetencyQuestion {
    pub id: String,
    pub text: String,
    pub query: String,
    #[serde(default = "default_min_rows")]
    pub min_rows: usize,
}

pub fn load_questions(text: &str) -> Result<Vec<CompetencyQuestion>, AssessError> {
    serde_json::from_str(text).map_err(|e| AssessError::BadQuestions {
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CqEntry {
    pub id: String,
    pub rows: usize,
    pub answered: bool,
    /// First 10 result rows, TSV-encoded (not part of the JSON schema).
    #[serde(skip)]
    pub sample: Vec<String>,
}

pub fn run_competency_questions(
    questions: &[CompetencyQuestion],
    store: &TripleStore,
) -> Result<Vec<CqEntry>, AssessError> {
    let mut out = Vec::new();
    for q in questions {
        let parsed = parse_query(&q.query).map_err(|e| AssessError::QueryParseError {
            question: q.id.clone(),
            detail: e.to_string(),
        })?;
        let table = evaluate(&parsed, store);
        let sample = table
            .rows
            .iter()
            .take(10)
            .map(|row| {
                row.iter()
                    .map(render_term)
                    .collect::<Vec<_>>()
                    .join("\t")
            })
            .collect();
        out.push(CqEntry {
            id: q.id.clone(),
            rows: table.rows.len(),
            answered: table.rows.len() >= q.min_rows,
            sample,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Scores {
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaturityReport {
    pub rubric_version: String,
    pub indicators: Vec<IndicatorResult>,
    pub scores: Scores,
    pub essential_pass: bool,
    pub cqs: Vec<CqEntry>,
}

fn letter_score(indicators: &[IndicatorResult], letter: &str) -> f64 {
    let of_letter: Vec<_> = indicators.iter().filter(|i| i.principle == letter).collect();
    if of_letter.is_empty() {
        return 0.0;
    }
    of_letter.iter().filter(|i| i.pass).count() as f64 / of_letter.len() as f64
}

pub fn build_report(indicators: Vec<IndicatorResult>, cqs: Vec<CqEntry>) -> MaturityReport {
    let scores = Scores {
        f: letter_score(&indicators, "F"),
        a: letter_score(&indicators, "A"),
        i: letter_score(&indicators, "I"),
        r: letter_score(&indicators, "R"),
    };
    let essential_pass = indicators
        .iter()
        .filter(|i| i.priority == Priority::Essential)
        .all(|i| i.pass);
    MaturityReport {
        rubric_version: RUBRIC_VERSION.to_owned(),
        indicators,
        scores,
        essential_pass,
        cqs,
    }
}

/// Assess a bundle and answer the questions over its data graph.
pub fn assess(
    bundle: &AssessmentBundle,
    questions: &[CompetencyQuestion],
) -> Result<MaturityReport, AssessError> {
    let loaded = Loaded::from_bundle(bundle)?;
    let indicators = indicator_results(&loaded);
    let cqs = run_competency_questions(questions, &loaded.store())?;
    Ok(build_report(indicators, cqs))
}

/// Exit-code contract: 0 when every essential indicator passes and
/// every competency question is answered; 3 otherwise.
pub fn report_exit_code(report: &MaturityReport) -> i32 {
    if report.essential_pass && report.cqs.iter().all(|c| c.answered) {
        0
    } else {
        3
    }
}

pub fn render_json(report: &MaturityReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

pub fn render_text(report: &MaturityReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "FAIR maturity assessment (rubric {})\n\n",
        report.rubric_version
    ));
    out.push_str(&format!(
        "{:<16} {:<9} {:<9} {:<6} evidence\n",
        "indicator", "principle", "priority", "result"
    ));
    for i in &report.indicators {
        let priority = match i.priority {
            Priority::Essential => "essential",
            Priority::Important => "important",
            Priority::Useful => "useful",
        };
        out.push_str(&format!(
            "{:<16} {:<9} {:<9} {:<6} {}\n",
            i.id,
            i.principle,
            priority,
            if i.pass { "PASS" } else { "FAIL" },
            i.evidence
        ));
    }
    out.push_str(&format!(
        "\nscores: F={:.2} A={:.2} I={:.2} R={:.2}\nessential indicators: {}\n",
        report.scores.f,
        report.scores.a,
        report.scores.i,
        report.scores.r,
        if report.essential_pass { "PASS" } else { "FAIL" }
    ));
    if !report.cqs.is_empty() {
        out.push_str("\ncompetency questions\n");
        for cq in &report.cqs {
            out.push_str(&format!(
                "{}: rows={} answered={}\n",
                cq.id,
                cq.rows,
                if cq.answered { "yes" } else { "no" }
            ));
            for s in &cq.sample {
                out.push_str(&format!("  {s}\n"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn fixture(name: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join(name)
    }

    fn data_only_bundle(dir: &Path) -> AssessmentBundle {
        let data = dir.join("data.nt");
        std::fs::write(&data, "<http://a/s> <http://a/p> <http://a/o> .\n").unwrap();
        AssessmentBundle {
            data_path: Some(data),
            ..Default::default()
        }
    }

    #[test]
    fn empty_bundle_rejected() {
        let err = evaluate_indicators(&AssessmentBundle::default()).unwrap_err();
        assert_eq!(err, AssessError::EmptyBundle);
    }

    #[test]
    fn data_only_bundle_passes_exactly_i1_data() {
        let dir = tempfile::tempdir().unwrap();
        let results = evaluate_indicators(&data_only_bundle(dir.path())).unwrap();
        assert_eq!(results.len(), 10);
        for r in &results {
            assert_eq!(r.pass, r.id == "I1-D-RDF", "{}: {}", r.id, r.evidence);
        }
        let f4 = results.iter().find(|r| r.id == "F4-M-SERVED").unwrap();
        assert_eq!(f4.evidence, "service not provided");
        let i2 = results.iter().find(|r| r.id == "I2-D-VOCAB").unwrap();
        assert_eq!(i2.evidence, "mapping spec not provided");
    }

    #[test]
    fn metadata_indicators_pass_on_fixture() {
        let bundle = AssessmentBundle {
            metadata_path: Some(fixture("metadata.json")),
            ..Default::default()
        };
        let results = evaluate_indicators(&bundle).unwrap();
        let by_id = |id: &str| results.iter().find(|r| r.id == id).unwrap();
        assert!(by_id("F1-M-ID").pass);
        assert!(by_id("F2-M-RICH").pass);
        assert!(by_id("F3-M-REF").pass);
        assert!(by_id("R1.1-M-LICENSE").pass);
        assert!(by_id("I1-M-RDF").pass);
        assert!(!by_id("I1-D-RDF").pass);
    }

    #[test]
    fn license_removal_flips_only_r11() {
        let text = std::fs::read_to_string(fixture("metadata.json")).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        for rec in doc.as_array_mut().unwrap() {
            if rec["kind"] == "dataset" {
                rec.as_object_mut().unwrap().remove("license");
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let stripped = dir.path().join("metadata.json");
        std::fs::write(&stripped, serde_json::to_string(&doc).unwrap()).unwrap();

        let base = AssessmentBundle {
            metadata_path: Some(fixture("metadata.json")),
            ..Default::default()
        };
        let modified = AssessmentBundle {
            metadata_path: Some(stripped),
            ..Default::default()
        };
        let before = evaluate_indicators(&base).unwrap();
        let after = evaluate_indicators(&modified).unwrap();
        for (b, a) in before.iter().zip(after.iter()) {
            if b.id == "R1.1-M-LICENSE" {
                assert!(b.pass && !a.pass);
            } else {
                assert_eq!(b.pass, a.pass, "{} flipped unexpectedly", b.id);
            }
        }
    }

    #[test]
    fn cq_over_empty_store_unanswered() {
        let questions = load_questions(
            &std::fs::read_to_string(fixture("questions.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(questions.len(), 3);
        let store = TripleStore::new();
        let entries = run_competency_questions(&questions, &store).unwrap();
        assert!(entries.iter().all(|e| e.rows == 0 && !e.answered));
    }

    #[test]
    fn malformed_query_attributed_to_question() {
        let questions = vec![CompetencyQuestion {
            id: "CQ-XX".into(),
            text: "broken".into(),
            query: "SELECT WHERE {}".into(),
            min_rows: 1,
        }];
        let err = run_competency_questions(&questions, &TripleStore::new()).unwrap_err();
        match err {
            AssessError::QueryParseError { question, .. } => assert_eq!(question, "CQ-XX"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn report_shape_and_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let report = assess(&data_only_bundle(dir.path()), &[]).unwrap();
        assert_eq!(report.rubric_version, RUBRIC_VERSION);
        assert_eq!(report.indicators.len(), 10);
        assert!(!report.essential_pass);
        assert_eq!(report_exit_code(&report), 3);

        let json: serde_json::Value = serde_json::from_str(&render_json(&report)).unwrap();
        assert_eq!(json["rubric_version"], RUBRIC_VERSION);
        assert_eq!(json["indicators"].as_array().unwrap().len(), 10);
        assert!(json["scores"]["F"].is_number());
        assert_eq!(json["essential_pass"], false);
        // text and JSON agree on row counts
        let text = render_text(&report);
        assert_eq!(
            text.matches("FAIL").count(),
            report.indicators.iter().filter(|i| !i.pass).count() + 1 // + essential line
        );
    }

    #[test]
    fn offline_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = data_only_bundle(dir.path());
        let a = render_json(&assess(&bundle, &[]).unwrap());
        let b = render_json(&assess(&bundle, &[]).unwrap());
        assert_eq!(a, b);
    }
}
