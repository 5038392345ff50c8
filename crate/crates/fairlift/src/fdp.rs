//! FAIR Data Point metadata: the four hierarchical layer records
//! (repository root → catalog → dataset → distribution), their
//! validation rules, and rendering to RDF and fixed-context JSON-LD.

use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::clock::SharedClock;
use crate::error::Diagnostic;
use crate::ingest::sha256_hex;
use crate::rdf::{vocab, Graph, Iri, Literal, Term, Triple};

/// Fixed JSON-LD context shipped with the toolkit.
pub const JSONLD_CONTEXT: &str = include_str!("../assets/context.jsonld");

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FdpError {
    #[error("a {child} record requires a {expected} parent, got {got}")]
    WrongParentKind {
        child: &'static str,
        expected: &'static str,
        got: String,
    },
    #[error("record {id}: missing required field {field:?}")]
    MissingRequiredField { id: String, field: &'static str },
    #[error("record {id} does not validate: {summary}")]
    InvalidRecord { id: String, summary: String },
    #[error("metadata validation failed:\n{}", issues.iter().map(ValidationIssue::to_string).collect::<Vec<_>>().join("\n"))]
    ValidationFailed { issues: Vec<ValidationIssue> },
    #[error("no fdp_root record present")]
    NoRoot,
    #[error("layer chain is broken: {reason}")]
    BrokenChain { reason: String },
    #[error("invalid metadata document: {reason}")]
    BadMetadata { reason: String },
}

impl Diagnostic for FdpError {
    fn module(&self) -> &'static str {
        "fdp-metadata"
    }
    fn name(&self) -> &'static str {
        match self {
            FdpError::WrongParentKind { .. } => "WrongParentKind",
            FdpError::MissingRequiredField { .. } => "MissingRequiredField",
            FdpError::InvalidRecord { .. } => "InvalidRecord",
            FdpError::ValidationFailed { .. } => "ValidationFailed",
            FdpError::NoRoot => "NoRoot",
            FdpError::BrokenChain { .. } => "BrokenChain",
            FdpError::BadMetadata { .. } => "BadMetadata",
        }
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LayerKind {
    FdpRoot,
    Catalog,
    Dataset,
    Distribution,
}

impl LayerKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fdp_root" => Some(LayerKind::FdpRoot),
            "catalog" => Some(LayerKind::Catalog),
            "dataset" => Some(LayerKind::Dataset),
            "distribution" => Some(LayerKind::Distribution),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::FdpRoot => "fdp_root",
            LayerKind::Catalog => "catalog",
            LayerKind::Dataset => "dataset",
            LayerKind::Distribution => "distribution",
        }
    }

    /// The kind of the immediately higher layer.
    pub fn superior(self) -> Option<LayerKind> {
        match self {
            LayerKind::FdpRoot => None,
            LayerKind::Catalog => Some(LayerKind::FdpRoot),
            LayerKind::Dataset => Some(LayerKind::Catalog),
            LayerKind::Distribution => Some(LayerKind::Dataset),
        }
    }

    pub fn type_iri(self) -> Iri {
        vocab::iri(match self {
            LayerKind::FdpRoot => vocab::R3D_REPOSITORY,
            LayerKind::Catalog => vocab::DCAT_CATALOG,
            LayerKind::Dataset => vocab::DCAT_DATASET,
            LayerKind::Distribution => vocab::DCAT_DISTRIBUTION,
        })
    }
}

/// Publisher is an IRI when the authored string parses as one,
/// otherwise a literal organization name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Publisher {
    Iri(Iri),
    Name(String),
}

impl Publisher {
    pub fn from_string(s: &str) -> Publisher {
        match Iri::new(s) {
            Ok(iri) => Publisher::Iri(iri),
            Err(_) => Publisher::Name(s.to_owned()),
        }
    }

    pub fn as_display_string(&self) -> &str {
        match self {
            Publisher::Iri(i) => i.as_str(),
            Publisher::Name(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerRecord {
    pub kind: LayerKind,
    pub id: Iri,
    pub title: Option<String>,
    pub description: Option<String>,
    pub version: Option<String>,
    pub publisher: Option<Publisher>,
    pub license: Option<Iri>,
    pub issued: Option<String>,
    pub modified: Option<String>,
    pub keywords: Vec<String>,
    pub parent: Option<Iri>,
    pub children: Vec<Iri>,
    pub media_type: Option<String>,
    pub download_url: Option<Iri>,
    pub access_url: Option<Iri>,
    pub byte_size: Option<u64>,
    pub checksum: Option<String>,
}

impl LayerRecord {
    pub fn new(kind: LayerKind, id: Iri) -> Self {
        LayerRecord {
            kind,
            id,
            title: None,
            description: None,
            version: None,
            publisher: None,
            license: None,
            issued: None,
            modified: None,
            keywords: Vec::new(),
            parent: None,
            children: Vec::new(),
            media_type: None,
            download_url: None,
            access_url: None,
            byte_size: None,
            checksum: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Essential,
    Important,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Essential => "essential",
            Severity::Important => "important",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub record: Iri,
    pub field: String,
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] <{}> {}: {}",
            self.severity.as_str(),
            self.record,
            self.field,
            self.message
        )
    }
}

// ---------------------------------------------------------------------------
// Building and validation
// ---------------------------------------------------------------------------

fn valid_version(v: &str) -> bool {
    !v.is_empty()
        && v.split('.')
            .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_digit()))
}

fn valid_date(v: &str) -> bool {
    v.len() == 10
        && v.as_bytes()[4] == b'-'
        && v.as_bytes()[7] == b'-'
        && chrono::NaiveDate::parse_from_str(v, "%Y-%m-%d").is_ok()
}

/// Install a record under its parent: checks layer order, checks the
/// core required fields, links both sides, and defaults `modified` to
/// the clock's current date.
pub fn build_layer(
    mut record: LayerRecord,
    parent: Option<&mut LayerRecord>,
    clock: &SharedClock,
) -> Result<LayerRecord, FdpError> {
    for (field, present) in [
        ("title", record.title.is_some()),
        ("version", record.version.is_some()),
        ("publisher", record.publisher.is_some()),
    ] {
        if !present {
            return Err(FdpError::MissingRequiredField {
                id: record.id.to_string(),
                field,
            });
        }
    }
    match (record.kind.superior(), parent) {
        (None, None) => {}
        (None, Some(p)) => {
            return Err(FdpError::WrongParentKind {
                child: record.kind.as_str(),
                expected: "no",
                got: p.kind.as_str().to_owned(),
            })
        }
        (Some(expected), Some(p)) => {
            if p.kind != expected {
                return Err(FdpError::WrongParentKind {
                    child: record.kind.as_str(),
                    expected: expected.as_str(),
                    got: p.kind.as_str().to_owned(),
                });
            }
            record.parent = Some(p.id.clone());
            if !p.children.contains(&record.id) {
                p.children.push(record.id.clone());
            }
        }
        (Some(expected), None) => {
            return Err(FdpError::WrongParentKind {
                child: record.kind.as_str(),
                expected: expected.as_str(),
                got: "none".to_owned(),
            })
        }
    }
    if record.modified.is_none() {
        record.modified = Some(clock.now().format("%Y-%m-%d").to_string());
    }
    Ok(record)
}

/// Record-local validation; empty result means publishable.
pub fn validate_layer(r: &LayerRecord) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let mut push = |field: &str, severity: Severity, message: String| {
        issues.push(ValidationIssue {
            record: r.id.clone(),
            field: field.to_owned(),
            severity,
            message,
        });
    };

    if r.title.as_deref().map_or(true, str::is_empty) {
        push("title", Severity::Essential, "title is required".into());
    }
    match &r.version {
        None => push("version", Severity::Essential, "version is required".into()),
        Some(v) if !valid_version(v) => push(
            "version",
            Severity::Essential,
            format!("version {v:?} is not dotted numerals"),
        ),
        _ => {}
    }
    if r.publisher.is_none() {
        push("publisher", Severity::Essential, "publisher is required".into());
    }
    if matches!(r.kind, LayerKind::Dataset | LayerKind::Distribution) && r.license.is_none() {
        push(
            "license",
            Severity::Essential,
            format!("license is required on a {}", r.kind.as_str()),
        );
    }
    match r.kind {
        LayerKind::FdpRoot => {
            if r.parent.is_some() {
                push("parent", Severity::Essential, "fdp_root must not have a parent".into());
            }
        }
        _ => {
            if r.parent.is_none() {
                push(
                    "parent",
                    Severity::Essential,
                    format!("a {} requires a parent", r.kind.as_str()),
                );
            }
        }
    }
    if r.kind == LayerKind::Distribution {
        if r.media_type.as_deref().map_or(true, str::is_empty) {
            push(
                "media_type",
                Severity::Essential,
                "distribution requires media_type".into(),
            );
        }
        if r.download_url.is_none() && r.access_url.is_none() {
            push(
                "access",
                Severity::Essential,
                "distribution requires download_url or access_url".into(),
            );
        }
    }
    if r.kind == LayerKind::Dataset {
        if r.description.as_deref().map_or(true, str::is_empty) {
            push(
                "description",
                Severity::Important,
                "dataset should carry a description".into(),
            );
        }
        if r.keywords.is_empty() {
            push(
                "keywords",
                Severity::Important,
                "dataset should carry keywords".into(),
            );
        }
    }
    issues
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Render without validating (used by the assessor, which turns
/// validation problems into indicator evidence instead of errors).
pub fn render_layer_graph(r: &LayerRecord) -> Graph {
    let mut g = Graph::new();
    let id = r.id.clone();
    let lit = |s: &str| Term::literal(Literal::string(s));
    let date = |s: &str| {
        Term::literal(Literal::typed(s, vocab::iri(vocab::XSD_DATE)).expect("date literal"))
    };
    let mut add = |p: &str, o: Term| {
        g.insert(Triple::new(id.clone(), vocab::iri(p), o));
    };

    add(vocab::RDF_TYPE, Term::iri(r.kind.type_iri()));
    if let Some(v) = &r.title {
        add(vocab::DCT_TITLE, lit(v));
    }
    if let Some(v) = &r.description {
        add(vocab::DCT_DESCRIPTION, lit(v));
    }
    if let Some(v) = &r.version {
        add(vocab::DCT_HAS_VERSION, lit(v));
    }
    match &r.publisher {
        Some(Publisher::Iri(i)) => add(vocab::DCT_PUBLISHER, Term::iri(i.clone())),
        Some(Publisher::Name(n)) => add(vocab::DCT_PUBLISHER, lit(n)),
        None => {}
    }
    if let Some(v) = &r.license {
        add(vocab::DCT_LICENSE, Term::iri(v.clone()));
    }
    if let Some(v) = &r.issued {
        add(vocab::DCT_ISSUED, date(v));
    }
    if let Some(v) = &r.modified {
        add(vocab::DCT_MODIFIED, date(v));
    }
    for k in &r.keywords {
        add(vocab::DCAT_KEYWORD, lit(k));
    }
    if let Some(v) = &r.parent {
        add(vocab::DCT_IS_PART_OF, Term::iri(v.clone()));
    }
    for c in &r.children {
        add(vocab::LDP_CONTAINS, Term::iri(c.clone()));
    }
    if let Some(v) = &r.media_type {
        add(vocab::DCAT_MEDIA_TYPE, lit(v));
    }
    if let Some(v) = &r.download_url {
        add(vocab::DCAT_DOWNLOAD_URL, Term::iri(v.clone()));
    }
    if let Some(v) = &r.access_url {
        add(vocab::DCAT_ACCESS_URL, Term::iri(v.clone()));
    }
    if let Some(v) = &r.byte_size {
        add(
            vocab::DCAT_BYTE_SIZE,
            Term::literal(
                Literal::typed(v.to_string(), vocab::iri(vocab::XSD_INTEGER))
                    .expect("integer literal"),
            ),
        );
    }
    if let Some(v) = &r.checksum {
        add(vocab::FLT_SHA256, lit(v));
    }
    g
}

/// Strict rendering: the record must be free of essential issues.
pub fn serialize_layer(r: &LayerRecord) -> Result<Graph, FdpError> {
    let essential: Vec<ValidationIssue> = validate_layer(r)
        .into_iter()
        .filter(|i| i.severity == Severity::Essential)
        .collect();
    if !essential.is_empty() {
        return Err(FdpError::InvalidRecord {
            id: r.id.to_string(),
            summary: essential
                .iter()
                .map(|i| format!("{}: {}", i.field, i.message))
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    Ok(render_layer_graph(r))
}

fn kind_curie(kind: LayerKind) -> &'static str {
    match kind {
        LayerKind::FdpRoot => "r3d:Repository",
        LayerKind::Catalog => "dcat:Catalog",
        LayerKind::Dataset => "dcat:Dataset",
        LayerKind::Distribution => "dcat:Distribution",
    }
}

/// Fixed-context JSON-LD rendering of one record (not a general
/// JSON-LD processor: the shipped @context is embedded verbatim).
pub fn render_jsonld(r: &LayerRecord) -> String {
    let context: Value = serde_json::from_str(JSONLD_CONTEXT).expect("bundled context parses");
    let mut obj = Map::new();
    obj.insert("@context".into(), context["@context"].clone());
    obj.insert("@id".into(), Value::String(r.id.to_string()));
    obj.insert("@type".into(), Value::String(kind_curie(r.kind).to_owned()));
    let mut put_str = |key: &str, v: &Option<String>| {
        if let Some(v) = v {
            obj.insert(key.into(), Value::String(v.clone()));
        }
    };
    put_str("title", &r.title);
    put_str("description", &r.description);
    put_str("version", &r.version);
    put_str("issued", &r.issued);
    put_str("modified", &r.modified);
    put_str("media_type", &r.media_type);
    put_str("checksum", &r.checksum);
    if let Some(p) = &r.publisher {
        obj.insert(
            "publisher".into(),
            Value::String(p.as_display_string().to_owned()),
        );
    }
    if let Some(v) = &r.license {
        obj.insert("license".into(), Value::String(v.to_string()));
    }
    if !r.keywords.is_empty() {
        obj.insert(
            "keywords".into(),
            Value::Array(r.keywords.iter().cloned().map(Value::String).collect()),
        );
    }
    if let Some(v) = &r.parent {
        obj.insert("parent".into(), Value::String(v.to_string()));
    }
    if !r.children.is_empty() {
        obj.insert(
            "children".into(),
            Value::Array(
                r.children
                    .iter()
                    .map(|c| Value::String(c.to_string()))
                    .collect(),
            ),
        );
    }
    if let Some(v) = &r.download_url {
        obj.insert("download_url".into(), Value::String(v.to_string()));
    }
    if let Some(v) = &r.access_url {
        obj.insert("access_url".into(), Value::String(v.to_string()));
    }
    if let Some(v) = r.byte_size {
        obj.insert("byte_size".into(), Value::Number(Number::from(v)));
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(obj)).expect("jsonld");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Authoring-file parsing
// ---------------------------------------------------------------------------

const RECORD_FIELDS: &[&str] = &[
    "kind",
    "id",
    "title",
    "description",
    "version",
    "publisher",
    "license",
    "issued",
    "modified",
    "keywords",
    "parent",
    "children",
    "media_type",
    "download_url",
    "access_url",
    "byte_size",
    "checksum",
];

fn bad(reason: impl Into<String>) -> FdpError {
    FdpError::BadMetadata {
        reason: reason.into(),
    }
}

fn field_str(obj: &Map<String, Value>, key: &str, ctx: &str) -> Result<Option<String>, FdpError> {
    match obj.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(bad(format!("{ctx}: field {key:?} must be a string"))),
    }
}

fn field_iri(obj: &Map<String, Value>, key: &str, ctx: &str) -> Result<Option<Iri>, FdpError> {
    match field_str(obj, key, ctx)? {
        None => Ok(None),
        Some(s) => Iri::new(s)
            .map(Some)
            .map_err(|e| bad(format!("{ctx}: field {key:?}: {e}"))),
    }
}

fn field_date(obj: &Map<String, Value>, key: &str, ctx: &str) -> Result<Option<String>, FdpError> {
    match field_str(obj, key, ctx)? {
        None => Ok(None),
        Some(s) if valid_date(&s) => Ok(Some(s)),
        Some(s) => Err(bad(format!(
            "{ctx}: field {key:?}: {s:?} is not a YYYY-MM-DD date"
        ))),
    }
}

/// Parse the authoring file (a JSON array of records, field names
/// exactly as the record model) without cross-record validation.
pub fn parse_metadata_json(text: &str) -> Result<Vec<LayerRecord>, FdpError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| bad(format!("invalid JSON: {e}")))?;
    let arr = root
        .as_array()
        .ok_or_else(|| bad("top level must be an array of records"))?;
    let mut records = Vec::new();
    for (i, rv) in arr.iter().enumerate() {
        let ctx = format!("record[{i}]");
        let obj = rv
            .as_object()
            .ok_or_else(|| bad(format!("{ctx}: not an object")))?;
        for k in obj.keys() {
            if !RECORD_FIELDS.contains(&k.as_str()) {
                return Err(bad(format!("{ctx}: unknown field {k:?}")));
            }
        }
        let kind_str = field_str(obj, "kind", &ctx)?
            .ok_or_else(|| bad(format!("{ctx}: missing \"kind\"")))?;
        let kind = LayerKind::parse(&kind_str)
            .ok_or_else(|| bad(format!("{ctx}: unknown kind {kind_str:?}")))?;
        let id = field_iri(obj, "id", &ctx)?
            .ok_or_else(|| bad(format!("{ctx}: missing \"id\"")))?;

        let mut r = LayerRecord::new(kind, id);
        r.title = field_str(obj, "title", &ctx)?;
        r.description = field_str(obj, "description", &ctx)?;
        r.version = field_str(obj, "version", &ctx)?;
        r.publisher = field_str(obj, "publisher", &ctx)?
            .map(|s| Publisher::from_string(&s));
        r.license = field_iri(obj, "license", &ctx)?;
        r.issued = field_date(obj, "issued", &ctx)?;
        r.modified = field_date(obj, "modified", &ctx)?;
        if let Some(v) = obj.get("keywords") {
            let arr = v
                .as_array()
                .ok_or_else(|| bad(format!("{ctx}: \"keywords\" must be an array")))?;
            for k in arr {
                r.keywords.push(
                    k.as_str()
                        .ok_or_else(|| bad(format!("{ctx}: keyword must be a string")))?
                        .to_owned(),
                );
            }
        }
        r.parent = field_iri(obj, "parent", &ctx)?;
        if let Some(v) = obj.get("children") {
            let arr = v
                .as_array()
                .ok_or_else(|| bad(format!("{ctx}: \"children\" must be an array")))?;
            for c in arr {
                let s = c
                    .as_str()
                    .ok_or_else(|| bad(format!("{ctx}: child must be a string")))?;
                r.children.push(
                    Iri::new(s).map_err(|e| bad(format!("{ctx}: child {s:?}: {e}")))?,
                );
            }
        }
        r.media_type = field_str(obj, "media_type", &ctx)?;
        r.download_url = field_iri(obj, "download_url", &ctx)?;
        r.access_url = field_iri(obj, "access_url", &ctx)?;
        if let Some(v) = obj.get("byte_size") {
            let n = v
                .as_u64()
                .ok_or_else(|| bad(format!("{ctx}: \"byte_size\" must be a non-negative integer")))?;
            r.byte_size = Some(n);
        }
        r.checksum = field_str(obj, "checksum", &ctx)?;
        records.push(r);
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MetadataStore {
    pub records: BTreeMap<Iri, LayerRecord>,
    pub root: Iri,
    pub source_path: String,
    pub digest: String,
}

impl MetadataStore {
    /// Strict load: shape, linking, chain law, and essential-clean
    /// validation must all hold.
    pub fn from_json(text: &str, source_path: &str) -> Result<Self, FdpError> {
        let (store, issues) = Self::from_json_lenient(text, source_path)?;
        let essential: Vec<ValidationIssue> = issues
            .into_iter()
            .filter(|i| i.severity == Severity::Essential)
            .collect();
        if !essential.is_empty() {
            return Err(FdpError::ValidationFailed { issues: essential });
        }
        Ok(store)
    }

    /// Lenient load: structural problems (bad shape, broken chain, no
    /// root) still fail, but validation findings are returned for the
    /// caller to interpret instead of blocking the load.
    pub fn from_json_lenient(
        text: &str,
        source_path: &str,
    ) -> Result<(Self, Vec<ValidationIssue>), FdpError> {
        let parsed = parse_metadata_json(text)?;
        let mut records: BTreeMap<Iri, LayerRecord> = BTreeMap::new();
        for r in parsed {
            if records.contains_key(&r.id) {
                return Err(bad(format!("duplicate record id <{}>", r.id)));
            }
            records.insert(r.id.clone(), r);
        }

        let roots: Vec<Iri> = records
            .values()
            .filter(|r| r.kind == LayerKind::FdpRoot)
            .map(|r| r.id.clone())
            .collect();
        let root = match roots.as_slice() {
            [] => return Err(FdpError::NoRoot),
            [one] => one.clone(),
            many => {
                return Err(FdpError::BrokenChain {
                    reason: format!("{} fdp_root records, expected 1", many.len()),
                })
            }
        };

        // Compute children from parent pointers; verify stated children.
        let mut computed: BTreeMap<Iri, Vec<Iri>> = BTreeMap::new();
        for r in records.values() {
            if let Some(p) = &r.parent {
                if !records.contains_key(p) {
                    return Err(FdpError::BrokenChain {
                        reason: format!("<{}> names absent parent <{p}>", r.id),
                    });
                }
                computed.entry(p.clone()).or_default().push(r.id.clone());
            }
        }
        let mut issues = Vec::new();
        let ids: Vec<Iri> = records.keys().cloned().collect();
        for id in &ids {
            let mut kids = computed.remove(id).unwrap_or_default();
            kids.sort();
            let r = records.get_mut(id).unwrap();
            if !r.children.is_empty() {
                let mut stated = r.children.clone();
                stated.sort();
                if stated != kids {
                    return Err(FdpError::ValidationFailed {
                        issues: vec![ValidationIssue {
                            record: id.clone(),
                            field: "children".into(),
                            severity: Severity::Essential,
                            message: "stated children do not match records' parent links".into(),
                        }],
                    });
                }
            }
            r.children = kids;
        }

        // Parent kinds must follow the layer order.
        for r in records.values() {
            if let Some(p) = &r.parent {
                let pk = records[p].kind;
                if r.kind.superior() != Some(pk) {
                    issues.push(ValidationIssue {
                        record: r.id.clone(),
                        field: "parent".into(),
                        severity: Severity::Essential,
                        message: format!(
                            "a {} cannot sit under a {}",
                            r.kind.as_str(),
                            pk.as_str()
                        ),
                    });
                }
            }
        }

        // Chain law: the tree from the root reaches every record once.
        let mut seen = std::collections::BTreeSet::new();
        let mut queue = vec![root.clone()];
        while let Some(id) = queue.pop() {
            if !seen.insert(id.clone()) {
                return Err(FdpError::BrokenChain {
                    reason: format!("<{id}> reached more than once"),
                });
            }
            queue.extend(records[&id].children.iter().cloned());
        }
        if seen.len() != records.len() {
            let stranded: Vec<String> = records
                .keys()
                .filter(|id| !seen.contains(*id))
                .map(|id| format!("<{id}>"))
                .collect();
            return Err(FdpError::BrokenChain {
                reason: format!("unreachable from root: {}", stranded.join(", ")),
            });
        }

        for r in records.values() {
            issues.extend(validate_layer(r));
        }

        Ok((
            MetadataStore {
                records,
                root,
                source_path: source_path.to_owned(),
                digest: sha256_hex(text.as_bytes()),
            },
            issues,
        ))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, FdpError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn record(&self, id: &Iri) -> Option<&LayerRecord> {
        self.records.get(id)
    }

    pub fn root_record(&self) -> &LayerRecord {
        &self.records[&self.root]
    }

    /// Records in breadth-first tree order from the root.
    pub fn walk(&self) -> Vec<&LayerRecord> {
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::from([&self.root]);
        while let Some(id) = queue.pop_front() {
            let r = &self.records[id];
            out.push(r);
            queue.extend(r.children.iter());
        }
        out
    }

    /// Union graph of every record (used for whole-store export).
    pub fn to_graph(&self) -> Graph {
        let mut g = Graph::new();
        for r in self.records.values() {
            for t in render_layer_graph(r).iter() {
                g.insert(t.clone());
            }
        }
        g
    }

    /// Rewrite every IRI under the authored base (the root id) onto a
    /// live base URL; external IRIs (license, publisher) are untouched.
    pub fn rebase(&self, new_base: &Iri) -> Result<MetadataStore, FdpError> {
        let old = self.root.as_str();
        let new = if new_base.as_str().ends_with('/') {
            new_base.as_str().to_owned()
        } else {
            format!("{new_base}/")
        };
        let rebased = |iri: &Iri| -> Result<Iri, FdpError> {
            match iri.as_str().strip_prefix(old) {
                Some(rest) => Iri::new(format!("{new}{rest}"))
                    .map_err(|e| bad(format!("rebased IRI invalid: {e}"))),
                None => Ok(iri.clone()),
            }
        };
        let mut records = BTreeMap::new();
        for r in self.records.values() {
            let mut r = r.clone();
            r.id = rebased(&r.id)?;
            if let Some(p) = &r.parent {
                r.parent = Some(rebased(p)?);
            }
            let mut children = Vec::with_capacity(r.children.len());
            for c in &r.children {
                children.push(rebased(c)?);
            }
            children.sort();
            r.children = children;
            if let Some(u) = &r.download_url {
                r.download_url = Some(rebased(u)?);
            }
            if let Some(u) = &r.access_url {
                r.access_url = Some(rebased(u)?);
            }
            records.insert(r.id.clone(), r);
        }
        Ok(MetadataStore {
            records,
            root: Iri::new(new).expect("validated above"),
            source_path: self.source_path.clone(),
            digest: self.digest.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::fixed_clock;
    use crate::rdf::serialize_ntriples;

    fn fixture_text() -> String {
        std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/metadata.json"
        ))
        .unwrap()
    }

    fn clock() -> SharedClock {
        fixed_clock(
            chrono::DateTime::parse_from_rfc3339("2020-05-01T00:00:00Z")
                .unwrap()
                .with_timezone(&chrono::Utc),
        )
    }

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    fn minimal(kind: LayerKind, id: &str) -> LayerRecord {
        let mut r = LayerRecord::new(kind, iri(id));
        r.title = Some("T".into());
        r.version = Some("1.0".into());
        r.publisher = Some(Publisher::from_string("http://pub.org/x"));
        r
    }

    #[test]
    fn fixture_loads_strict() {
        let store = MetadataStore::from_json(&fixture_text(), "metadata.json").unwrap();
        assert_eq!(store.records.len(), 4);
        assert_eq!(store.root.as_str(), "http://fdp.local/");
        assert_eq!(store.walk().len(), 4);
    }

    #[test]
    fn fixture_serializes_to_expected_ntriples() {
        let store = MetadataStore::from_json(&fixture_text(), "metadata.json").unwrap();
        let mut g = Graph::new();
        for r in store.records.values() {
            for t in serialize_layer(r).unwrap().iter() {
                g.insert(t.clone());
            }
        }
        let expected = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/expected/metadata.nt"
        ))
        .unwrap();
        assert_eq!(serialize_ntriples(&g), expected);
    }

    #[test]
    fn build_layer_links_both_sides() {
        let clock = clock();
        let mut root = build_layer(minimal(LayerKind::FdpRoot, "http://b/"), None, &clock).unwrap();
        let cat = build_layer(
            minimal(LayerKind::Catalog, "http://b/catalog/c"),
            Some(&mut root),
            &clock,
        )
        .unwrap();
        assert_eq!(cat.parent.as_ref().unwrap().as_str(), "http://b/");
        assert!(root.children.iter().any(|c| c.as_str() == "http://b/catalog/c"));
        assert_eq!(cat.modified.as_deref(), Some("2020-05-01")); // clock default
    }

    #[test]
    fn build_layer_wrong_parent() {
        let clock = clock();
        let mut cat = minimal(LayerKind::Catalog, "http://b/catalog/c");
        let err = build_layer(
            minimal(LayerKind::Distribution, "http://b/distribution/d"),
            Some(&mut cat),
            &clock,
        )
        .unwrap_err();
        assert_eq!(err.name(), "WrongParentKind");
    }

    #[test]
    fn build_layer_missing_title() {
        let clock = clock();
        let mut r = minimal(LayerKind::FdpRoot, "http://b/");
        r.title = None;
        let err = build_layer(r, None, &clock).unwrap_err();
        assert_eq!(
            err,
            FdpError::MissingRequiredField {
                id: "http://b/".into(),
                field: "title"
            }
        );
    }

    #[test]
    fn validation_rules() {
        // dataset without license → essential "license"
        let mut d = minimal(LayerKind::Dataset, "http://b/dataset/d");
        d.parent = Some(iri("http://b/catalog/c"));
        d.description = Some("x".into());
        d.keywords = vec!["k".into()];
        let issues = validate_layer(&d);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].field, "license");
        assert_eq!(issues[0].severity, Severity::Essential);

        // distribution with neither URL → essential "access"
        let mut dist = minimal(LayerKind::Distribution, "http://b/distribution/x");
        dist.parent = Some(iri("http://b/dataset/d"));
        dist.license = Some(iri("http://lic/"));
        dist.media_type = Some("text/turtle".into());
        let issues = validate_layer(&dist);
        assert!(issues.iter().any(|i| i.field == "access" && i.severity == Severity::Essential));

        // bad version string
        let mut r = minimal(LayerKind::FdpRoot, "http://b/");
        r.version = Some("v1".into());
        assert!(validate_layer(&r).iter().any(|i| i.field == "version"));
    }

    #[test]
    fn serialize_layer_rejects_invalid() {
        let mut d = minimal(LayerKind::Dataset, "http://b/dataset/d");
        d.parent = Some(iri("http://b/catalog/c"));
        let err = serialize_layer(&d).unwrap_err();
        assert_eq!(err.name(), "InvalidRecord");
        // lenient rendering still works
        assert!(!render_layer_graph(&d).is_empty());
    }

    #[test]
    fn load_rejects_broken_chain_and_missing_root() {
        let err = MetadataStore::from_json(
            r#"[{"kind":"catalog","id":"http://b/catalog/c","title":"t","version":"1",
                 "publisher":"p","parent":"http://b/"}]"#,
            "m",
        )
        .unwrap_err();
        assert_eq!(err.name(), "NoRoot");

        let err = MetadataStore::from_json(
            r#"[{"kind":"fdp_root","id":"http://b/","title":"t","version":"1","publisher":"p"},
                {"kind":"catalog","id":"http://b/catalog/c","title":"t","version":"1",
                 "publisher":"p","parent":"http://b/absent"}]"#,
            "m",
        )
        .unwrap_err();
        assert_eq!(err.name(), "BrokenChain");
    }

    #[test]
    fn strict_load_rejects_essential_issue_lenient_reports_it() {
        // dataset missing license
        let text = r#"[
            {"kind":"fdp_root","id":"http://b/","title":"t","version":"1","publisher":"p"},
            {"kind":"catalog","id":"http://b/catalog/c","title":"t","version":"1","publisher":"p","parent":"http://b/"},
            {"kind":"dataset","id":"http://b/dataset/d","title":"t","version":"1","publisher":"p","parent":"http://b/catalog/c"}
        ]"#;
        let err = MetadataStore::from_json(text, "m").unwrap_err();
        assert_eq!(err.name(), "ValidationFailed");
        let (store, issues) = MetadataStore::from_json_lenient(text, "m").unwrap();
        assert_eq!(store.records.len(), 3);
        assert!(issues.iter().any(|i| i.field == "license"));
    }

    #[test]
    fn stated_children_must_match_parent_links() {
        let text = r#"[
            {"kind":"fdp_root","id":"http://b/","title":"t","version":"1","publisher":"p",
             "children":["http://b/catalog/other"]},
            {"kind":"catalog","id":"http://b/catalog/c","title":"t","version":"1","publisher":"p","parent":"http://b/"}
        ]"#;
        let err = MetadataStore::from_json(text, "m").unwrap_err();
        assert_eq!(err.name(), "ValidationFailed");
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse_metadata_json(r#"[{"kind":"fdp_root","id":"http://b/","bogus":1}]"#)
            .unwrap_err();
        assert_eq!(err.name(), "BadMetadata");
    }

    #[test]
    fn publisher_iri_vs_name() {
        assert_eq!(
            Publisher::from_string("http://ex.org/org/x"),
            Publisher::Iri(iri("http://ex.org/org/x"))
        );
        assert_eq!(
            Publisher::from_string("Clinical FAIR Lab"),
            Publisher::Name("Clinical FAIR Lab".into())
        );
    }

    #[test]
    fn jsonld_rendering_shape() {
        let store = MetadataStore::from_json(&fixture_text(), "metadata.json").unwrap();
        let dist = store
            .record(&iri("http://fdp.local/distribution/crf-nt"))
            .unwrap();
        let json: Value = serde_json::from_str(&render_jsonld(dist)).unwrap();
        assert_eq!(json["@id"], "http://fdp.local/distribution/crf-nt");
        assert_eq!(json["@type"], "dcat:Distribution");
        assert_eq!(json["byte_size"], 131072);
        assert_eq!(json["media_type"], "application/n-triples");
        assert!(json["@context"]["dcat"].is_string());
        // deterministic bytes
        assert_eq!(render_jsonld(dist), render_jsonld(dist));
    }

    #[test]
    fn rebase_moves_internal_iris_only() {
        let store = MetadataStore::from_json(&fixture_text(), "metadata.json").unwrap();
        let rebased = store.rebase(&iri("http://127.0.0.1:9999")).unwrap();
        assert_eq!(rebased.root.as_str(), "http://127.0.0.1:9999/");
        let ds = rebased
            .record(&iri("http://127.0.0.1:9999/dataset/crf-rdf"))
            .unwrap();
        // license untouched, parent/children rebased
        assert_eq!(
            ds.license.as_ref().unwrap().as_str(),
            "https://creativecommons.org/licenses/by/4.0/"
        );
        assert_eq!(
            ds.parent.as_ref().unwrap().as_str(),
            "http://127.0.0.1:9999/catalog/covid-crf"
        );
        let dist = rebased
            .record(&iri("http://127.0.0.1:9999/distribution/crf-nt"))
            .unwrap();
        assert_eq!(
            dist.download_url.as_ref().unwrap().as_str(),
            "http://127.0.0.1:9999/distribution/crf-nt/data"
        );
        // chain still walks
        assert_eq!(rebased.walk().len(), 4);
    }
}
