//! fairlift — a FAIRification toolkit.
//!
//! Turns tabular datasets into linkable RDF via a declarative JSON
//! mapping language, records W3C PROV provenance (prospective plan +
//! retrospective run records), publishes layered FAIR Data Point
//! metadata over HTTP with content negotiation, and assesses the
//! result against a fixed FAIR maturity rubric plus competency
//! questions.
//!
//! Module map:
//! - [`rdf`] — IRI/literal/triple model, N-Triples and N-Quads
//!   parse/serialize (canonical, sorted, blank-node free)
//! - [`store`] — indexed in-memory triple store with pattern matching
//! - [`query`] — conjunctive basic-graph-pattern query language
//! - [`ingest`] — strict RFC-4180 CSV reader and column-schema typing
//! - [`mapping`] — mapping-spec parsing and row-to-triples transform
//! - [`prov`] — provenance recording, validation, PROV-O/PROV-JSON
//! - [`pipeline`] — end-to-end run: files in, artifacts + provenance out
//! - [`fdp`] — layered metadata records, validation, RDF/JSON-LD views
//! - [`service`] — read-only HTTP host for the metadata layers
//! - [`assess`] — FAIR maturity indicators and competency questions
//! - [`clock`], [`error`] — injected time and the error taxonomy

pub mod assess;
pub mod clock;
pub mod error;
pub mod fdp;
pub mod ingest;
pub mod mapping;
pub mod pipeline;
pub mod prov;
pub mod query;
pub mod rdf;
pub mod service;
pub mod store;
