//! Declarative row→triples transformation: a JSON mapping language
//! with subject URI templates, literal (data) rules, and
//! IRI-object rules with controlled vocabulary maps.
//!
//! The document is validated against the dataset's column schema up
//! front, with every CURIE pre-expanded, so transformation itself can
//! only fail on data-dependent conditions (null template inputs,
//! unmapped vocabulary values).

use std::collections::BTreeMap;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde_json::Value;
use thiserror::Error;

use crate::error::Diagnostic;
use crate::ingest::{CellValue, ColumnType, SchemaSet, TypedDataset};
use crate::rdf::{vocab, Graph, Iri, Literal, PrefixMap, RdfError, Term, Triple};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MappingError {
    #[error("{path}: {reason}")]
    SchemaViolation { path: String, reason: String },
    #[error("{path}: unknown prefix {label:?}")]
    UnknownPrefix { path: String, label: String },
    #[error("{path}: {detail}")]
    BadIri { path: String, detail: String },
    #[error("{path}: column {column:?} is not in the schema")]
    UnknownColumn { path: String, column: String },
    #[error("row {row}: template placeholder {{{column}}} is null")]
    NullInTemplate { column: String, row: usize },
    #[error("row {row}: column {column:?} value {value:?} has no mapping")]
    UnmappedValue {
        column: String,
        value: String,
        row: usize,
    },
}

impl Diagnostic for MappingError {
    fn module(&self) -> &'static str {
        "mapping-etl"
    }
    fn name(&self) -> &'static str {
        match self {
            MappingError::SchemaViolation { .. } => "SchemaViolation",
            MappingError::UnknownPrefix { .. } => "UnknownPrefix",
            MappingError::BadIri { .. } => "BadIri",
            MappingError::UnknownColumn { .. } => "UnknownColumn",
            MappingError::NullInTemplate { .. } => "NullInTemplate",
            MappingError::UnmappedValue { .. } => "UnmappedValue",
        }
    }
}

// ---------------------------------------------------------------------------
// Spec model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MappingSpec {
    pub base_iri: Iri,
    pub prefixes: PrefixMap,
    pub subject: SubjectRule,
    pub data_rules: Vec<DataRule>,
    pub object_rules: Vec<ObjectRule>,
}

#[derive(Debug, Clone)]
pub struct SubjectRule {
    pub template: String,
    /// Template split into alternating literal and placeholder parts.
    pub parts: Vec<TemplatePart>,
    pub class: Option<Iri>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePart {
    Text(String),
    Column(String),
}

#[derive(Debug, Clone)]
pub struct DataRule {
    pub column: String,
    pub predicate: Iri,
    pub target: LiteralTarget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiteralTarget {
    Datatype(Iri),
    Language(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnUnmapped {
    Error,
    Skip,
    Mint,
}

#[derive(Debug, Clone)]
pub struct ObjectRule {
    pub column: String,
    pub predicate: Iri,
    /// Canonical cell lexical → object IRI.
    pub value_map: BTreeMap<String, Iri>,
    pub on_unmapped: OnUnmapped,
}

impl MappingSpec {
    pub fn rule_count(&self) -> usize {
        self.data_rules.len() + self.object_rules.len()
    }

    /// Stable per-rule counter keys, in rule order.
    pub fn rule_keys(&self) -> Vec<String> {
        let mut keys = Vec::new();
        for (i, r) in self.data_rules.iter().enumerate() {
            keys.push(format!("data[{i}].{}", r.column));
        }
        for (i, r) in self.object_rules.iter().enumerate() {
            keys.push(format!("object[{i}].{}", r.column));
        }
        keys
    }
}

// ---------------------------------------------------------------------------
// Parsing / validation
// ---------------------------------------------------------------------------

fn violation(path: &str, reason: impl Into<String>) -> MappingError {
    MappingError::SchemaViolation {
        path: path.to_owned(),
        reason: reason.into(),
    }
}

fn as_object<'a>(
    v: &'a Value,
    path: &str,
) -> Result<&'a serde_json::Map<String, Value>, MappingError> {
    v.as_object()
        .ok_or_else(|| violation(path, "expected an object"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, MappingError> {
    v.as_str()
        .ok_or_else(|| violation(path, "expected a string"))
}

fn required<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'a Value, MappingError> {
    obj.get(key)
        .ok_or_else(|| violation(path, format!("missing required field {key:?}")))
}

fn reject_unknown(
    obj: &serde_json::Map<String, Value>,
    allowed: &[&str],
    path: &str,
) -> Result<(), MappingError> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(violation(path, format!("unknown field {k:?}")));
        }
    }
    Ok(())
}

/// Resolve a term reference: `"<iri>"` is absolute, `prefix:local` is
/// a CURIE against the spec's prefixes; anything else is rejected.
fn resolve_term_ref(s: &str, prefixes: &PrefixMap, path: &str) -> Result<Iri, MappingError> {
    if let Some(inner) = s.strip_prefix('<').and_then(|x| x.strip_suffix('>')) {
        return Iri::new(inner).map_err(|e| MappingError::BadIri {
            path: path.to_owned(),
            detail: e.to_string(),
        });
    }
    if !s.contains(':') {
        return Err(MappingError::BadIri {
            path: path.to_owned(),
            detail: format!("{s:?} is neither <iri> nor prefix:local"),
        });
    }
    prefixes.expand(s).map_err(|e| match e {
        RdfError::UnknownPrefix(label) => MappingError::UnknownPrefix {
            path: path.to_owned(),
            label,
        },
        other => MappingError::BadIri {
            path: path.to_owned(),
            detail: other.to_string(),
        },
    })
}

fn split_template(template: &str, path: &str) -> Result<Vec<TemplatePart>, MappingError> {
    let mut parts = Vec::new();
    let mut text = String::new();
    let mut chars = template.chars();
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                if !text.is_empty() {
                    parts.push(TemplatePart::Text(std::mem::take(&mut text)));
                }
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some('{') => return Err(violation(path, "nested '{' in template")),
                        Some(c) => name.push(c),
                        None => return Err(violation(path, "unclosed '{' in template")),
                    }
                }
                if name.is_empty() {
                    return Err(violation(path, "empty placeholder in template"));
                }
                parts.push(TemplatePart::Column(name));
            }
            '}' => return Err(violation(path, "unmatched '}' in template")),
            c => text.push(c),
        }
    }
    if !text.is_empty() {
        parts.push(TemplatePart::Text(text));
    }
    Ok(parts)
}

fn schema_datatype(ty: ColumnType) -> Iri {
    vocab::iri(match ty {
        ColumnType::String => vocab::XSD_STRING,
        ColumnType::Integer => vocab::XSD_INTEGER,
        ColumnType::Decimal => vocab::XSD_DECIMAL,
        ColumnType::Boolean => vocab::XSD_BOOLEAN,
        ColumnType::Date => vocab::XSD_DATE,
        ColumnType::Datetime => vocab::XSD_DATE_TIME,
    })
}

/// Parse and fully validate a mapping document against the column
/// schema: all CURIEs expanded, all placeholder/rule columns checked,
/// datatypes checked for consistency with declared column types.
pub fn parse_mapping_spec(doc: &str, schema: &SchemaSet) -> Result<MappingSpec, MappingError> {
    let root: Value =
        serde_json::from_str(doc).map_err(|e| violation("$", format!("invalid JSON: {e}")))?;
    let obj = as_object(&root, "$")?;
    reject_unknown(
        obj,
        &["base_iri", "prefixes", "subject", "data_rules", "object_rules"],
        "$",
    )?;

    let base_iri = Iri::new(as_str(required(obj, "base_iri", "$")?, "$.base_iri")?)
        .map_err(|e| MappingError::BadIri {
            path: "$.base_iri".into(),
            detail: e.to_string(),
        })?;

    let mut prefixes = PrefixMap::new();
    if let Some(v) = obj.get("prefixes") {
        let pmap = as_object(v, "$.prefixes")?;
        for (label, ns) in pmap {
            let path = format!("$.prefixes.{label}");
            let ns = Iri::new(as_str(ns, &path)?).map_err(|e| MappingError::BadIri {
                path: path.clone(),
                detail: e.to_string(),
            })?;
            prefixes
                .insert(label, ns)
                .map_err(|e| violation(&path, e.to_string()))?;
        }
    }

    // Subject rule.
    let sv = required(obj, "subject", "$")?;
    let sobj = as_object(sv, "$.subject")?;
    reject_unknown(sobj, &["template", "class"], "$.subject")?;
    let template = as_str(required(sobj, "template", "$.subject")?, "$.subject.template")?;
    if template.is_empty() {
        return Err(violation("$.subject.template", "template is empty"));
    }
    let parts = split_template(template, "$.subject.template")?;
    for p in &parts {
        if let TemplatePart::Column(c) = p {
            if schema.column(c).is_none() {
                return Err(MappingError::UnknownColumn {
                    path: "$.subject.template".into(),
                    column: c.clone(),
                });
            }
        }
    }
    let class = match sobj.get("class") {
        None => None,
        Some(v) => Some(resolve_term_ref(
            as_str(v, "$.subject.class")?,
            &prefixes,
            "$.subject.class",
        )?),
    };

    // Data rules.
    let mut data_rules = Vec::new();
    if let Some(v) = obj.get("data_rules") {
        let arr = v
            .as_array()
            .ok_or_else(|| violation("$.data_rules", "expected an array"))?;
        for (i, rv) in arr.iter().enumerate() {
            let path = format!("$.data_rules[{i}]");
            let robj = as_object(rv, &path)?;
            reject_unknown(robj, &["column", "predicate", "datatype", "language"], &path)?;
            let column = as_str(required(robj, "column", &path)?, &path)?.to_owned();
            let Some(cschema) = schema.column(&column) else {
                return Err(MappingError::UnknownColumn { path, column });
            };
            let predicate = resolve_term_ref(
                as_str(required(robj, "predicate", &path)?, &path)?,
                &prefixes,
                &format!("{path}.predicate"),
            )?;
            let target = match (robj.get("datatype"), robj.get("language")) {
                (Some(_), Some(_)) => {
                    return Err(violation(
                        &path,
                        "datatype and language are mutually exclusive",
                    ))
                }
                (Some(dt), None) => {
                    let dt_path = format!("{path}.datatype");
                    let dt = resolve_term_ref(as_str(dt, &dt_path)?, &prefixes, &dt_path)?;
                    check_datatype_consistency(&dt, cschema.column_type, &dt_path)?;
                    LiteralTarget::Datatype(dt)
                }
                (None, Some(lang)) => {
                    let lang_path = format!("{path}.language");
                    if cschema.column_type != ColumnType::String {
                        return Err(violation(
                            &lang_path,
                            "language tags are only allowed on string columns",
                        ));
                    }
                    let tag = as_str(lang, &lang_path)?;
                    // Validate + lowercase through the literal constructor.
                    let probe = Literal::lang("", tag)
                        .map_err(|e| violation(&lang_path, e.to_string()))?;
                    LiteralTarget::Language(probe.language().unwrap().to_owned())
                }
                (None, None) => LiteralTarget::Datatype(schema_datatype(cschema.column_type)),
            };
            data_rules.push(DataRule {
                column,
                predicate,
                target,
            });
        }
    }

    // Object rules.
    let mut object_rules = Vec::new();
    if let Some(v) = obj.get("object_rules") {
        let arr = v
            .as_array()
            .ok_or_else(|| violation("$.object_rules", "expected an array"))?;
        for (i, rv) in arr.iter().enumerate() {
            let path = format!("$.object_rules[{i}]");
            let robj = as_object(rv, &path)?;
            reject_unknown(robj, &["column", "predicate", "value_map", "on_unmapped"], &path)?;
            let column = as_str(required(robj, "column", &path)?, &path)?.to_owned();
            if schema.column(&column).is_none() {
                return Err(MappingError::UnknownColumn { path, column });
            }
            let predicate = resolve_term_ref(
                as_str(required(robj, "predicate", &path)?, &path)?,
                &prefixes,
                &format!("{path}.predicate"),
            )?;
            let mut value_map = BTreeMap::new();
            let vm = as_object(
                required(robj, "value_map", &path)?,
                &format!("{path}.value_map"),
            )?;
            for (cell, target) in vm {
                let vpath = format!("{path}.value_map.{cell}");
                let iri = resolve_term_ref(as_str(target, &vpath)?, &prefixes, &vpath)?;
                value_map.insert(cell.clone(), iri);
            }
            let on_unmapped = match robj.get("on_unmapped") {
                None => OnUnmapped::Error,
                Some(v) => match as_str(v, &format!("{path}.on_unmapped"))? {
                    "error" => OnUnmapped::Error,
                    "skip" => OnUnmapped::Skip,
                    "mint" => OnUnmapped::Mint,
                    other => {
                        return Err(violation(
                            &format!("{path}.on_unmapped"),
                            format!("expected error|skip|mint, got {other:?}"),
                        ))
                    }
                },
            };
            object_rules.push(ObjectRule {
                column,
                predicate,
                value_map,
                on_unmapped,
            });
        }
    }

    Ok(MappingSpec {
        base_iri,
        prefixes,
        subject: SubjectRule {
            template: template.to_owned(),
            parts,
            class,
        },
        data_rules,
        object_rules,
    })
}

fn check_datatype_consistency(
    dt: &Iri,
    ty: ColumnType,
    path: &str,
) -> Result<(), MappingError> {
    if ty == ColumnType::String {
        return Ok(()); // strings may carry any datatype
    }
    let expected = schema_datatype(ty);
    if dt == &expected {
        Ok(())
    } else {
        Err(violation(
            path,
            format!(
                "datatype <{dt}> is inconsistent with column type {ty:?} (expected <{expected}>)"
            ),
        ))
    }
}

// ---------------------------------------------------------------------------
// URI construction
// ---------------------------------------------------------------------------

/// Keep RFC 3986 unreserved characters; percent-encode everything else
/// as uppercase %XX over UTF-8 bytes.
const IRI_SEGMENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

pub fn percent_encode_segment(s: &str) -> String {
    utf8_percent_encode(s, IRI_SEGMENT).to_string()
}

fn template_is_absolute(template: &str) -> bool {
    let mut chars = template.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    for c in chars {
        match c {
            ':' => return true,
            c if c.is_ascii_alphanumeric() || c == '+' || c == '.' || c == '-' => {}
            _ => return false,
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Transformation
// ---------------------------------------------------------------------------

/// Counters accumulated across `transform_row` calls; reconciliation:
/// `skipped_nulls + skipped_unmapped + Σ per_rule == rows × rules`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransformCounters {
    pub skipped_nulls: usize,
    pub skipped_unmapped: usize,
    pub per_rule: BTreeMap<String, usize>,
}

impl TransformCounters {
    pub fn for_spec(spec: &MappingSpec) -> Self {
        TransformCounters {
            per_rule: spec.rule_keys().into_iter().map(|k| (k, 0)).collect(),
            ..Default::default()
        }
    }

    pub fn mapped_total(&self) -> usize {
        self.per_rule.values().sum()
    }
}

/// Output of transforming a whole dataset. `triples_emitted` counts
/// emissions (the counting law); `graph` is the deduplicated set.
#[derive(Debug, Clone)]
pub struct TransformOutput {
    pub graph: Graph,
    pub triples_emitted: usize,
    pub counters: TransformCounters,
}

pub struct Transformer<'a> {
    spec: &'a MappingSpec,
    /// Column name → index into a typed row, for every referenced column.
    col_idx: BTreeMap<String, usize>,
}

impl<'a> Transformer<'a> {
    pub fn new(spec: &'a MappingSpec, ds: &TypedDataset) -> Result<Self, MappingError> {
        let mut col_idx = BTreeMap::new();
        let mut need = Vec::new();
        for p in &spec.subject.parts {
            if let TemplatePart::Column(c) = p {
                need.push((c.clone(), "$.subject.template"));
            }
        }
        for r in &spec.data_rules {
            need.push((r.column.clone(), "$.data_rules"));
        }
        for r in &spec.object_rules {
            need.push((r.column.clone(), "$.object_rules"));
        }
        for (c, path) in need {
            match ds.column_index(&c) {
                Some(i) => {
                    col_idx.insert(c, i);
                }
                None => {
                    return Err(MappingError::UnknownColumn {
                        path: path.to_owned(),
                        column: c,
                    })
                }
            }
        }
        Ok(Transformer { spec, col_idx })
    }

    fn cell<'r>(&self, row: &'r [CellValue], column: &str) -> &'r CellValue {
        &row[self.col_idx[column]]
    }

    /// Expand the subject template for one row; substituted values are
    /// percent-encoded and the result is resolved against `base_iri`
    /// unless the template itself is absolute.
    pub fn expand_subject(&self, row: &[CellValue], ordinal: usize) -> Result<Iri, MappingError> {
        let mut s = String::new();
        if !template_is_absolute(&self.spec.subject.template) {
            s.push_str(self.spec.base_iri.as_str());
        }
        for part in &self.spec.subject.parts {
            match part {
                TemplatePart::Text(t) => s.push_str(t),
                TemplatePart::Column(c) => {
                    let lex = self.cell(row, c).lexical().ok_or_else(|| {
                        MappingError::NullInTemplate {
                            column: c.clone(),
                            row: ordinal,
                        }
                    })?;
                    s.push_str(&percent_encode_segment(&lex));
                }
            }
        }
        Iri::new(s).map_err(|e| MappingError::BadIri {
            path: "$.subject.template".into(),
            detail: e.to_string(),
        })
    }

    fn mint_iri(&self, column: &str, value: &str) -> Result<Iri, MappingError> {
        let base = self.spec.base_iri.as_str().trim_end_matches('/');
        let s = format!(
            "{base}/term/{}/{}",
            percent_encode_segment(column),
            percent_encode_segment(value)
        );
        Iri::new(s).map_err(|e| MappingError::BadIri {
            path: "mint".into(),
            detail: e.to_string(),
        })
    }

    /// Transform one typed row (with its 1-based source ordinal) into
    /// triples: optional class triple first, then data rules, then
    /// object rules, in spec order.
    pub fn transform_row(
        &self,
        row: &[CellValue],
        ordinal: usize,
        counters: &mut TransformCounters,
    ) -> Result<Vec<Triple>, MappingError> {
        let subject = self.expand_subject(row, ordinal)?;
        let mut triples = Vec::new();
        if let Some(class) = &self.spec.subject.class {
            triples.push(Triple::new(
                subject.clone(),
                vocab::iri(vocab::RDF_TYPE),
                Term::iri(class.clone()),
            ));
        }
        for (i, rule) in self.spec.data_rules.iter().enumerate() {
            let cell = self.cell(row, &rule.column);
            let Some(lex) = cell.lexical() else {
                counters.skipped_nulls += 1;
                continue;
            };
            let literal = match &rule.target {
                LiteralTarget::Datatype(dt) => Literal::typed(lex, dt.clone())
                    .expect("non-langString datatype validated at parse"),
                LiteralTarget::Language(tag) => {
                    Literal::lang(lex, tag).expect("language tag validated at parse")
                }
            };
            triples.push(Triple::new(
                subject.clone(),
                rule.predicate.clone(),
                Term::literal(literal),
            ));
            *counters
                .per_rule
                .get_mut(&format!("data[{i}].{}", rule.column))
                .expect("rule key preregistered") += 1;
        }
        for (i, rule) in self.spec.object_rules.iter().enumerate() {
            let cell = self.cell(row, &rule.column);
            let Some(lex) = cell.lexical() else {
                counters.skipped_nulls += 1;
                continue;
            };
            let object = match rule.value_map.get(&lex) {
                Some(iri) => Term::iri(iri.clone()),
                None => match rule.on_unmapped {
                    OnUnmapped::Error => {
                        return Err(MappingError::UnmappedValue {
                            column: rule.column.clone(),
                            value: lex,
                            row: ordinal,
                        })
                    }
                    OnUnmapped::Skip => {
                        counters.skipped_unmapped += 1;
                        continue;
                    }
                    OnUnmapped::Mint => Term::skolem(self.mint_iri(&rule.column, &lex)?),
                },
            };
            triples.push(Triple::new(subject.clone(), rule.predicate.clone(), object));
            *counters
                .per_rule
                .get_mut(&format!("object[{i}].{}", rule.column))
                .expect("rule key preregistered") += 1;
        }
        Ok(triples)
    }

    /// Transform every row; ordinals count the header as row 1.
    pub fn transform(&self, ds: &TypedDataset) -> Result<TransformOutput, MappingError> {
        let mut counters = TransformCounters::for_spec(self.spec);
        let mut graph = Graph::new();
        let mut emitted = 0usize;
        for (ri, row) in ds.rows.iter().enumerate() {
            let triples = self.transform_row(row, ri + 2, &mut counters)?;
            emitted += triples.len();
            for t in triples {
                graph.insert(t);
            }
        }
        Ok(TransformOutput {
            graph,
            triples_emitted: emitted,
            counters,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{apply_schema, parse_csv, Dialect};
    use crate::rdf::serialize_ntriples;

    const SCHEMA: &str = r#"{"columns":[
        {"name":"patient_id","type":"string","nullable":false},
        {"name":"age","type":"integer","nullable":false},
        {"name":"note","type":"string","nullable":true},
        {"name":"outcome","type":"string","nullable":true},
        {"name":"temp","type":"decimal","nullable":true}
    ]}"#;

    fn schema() -> SchemaSet {
        SchemaSet::parse(SCHEMA).unwrap()
    }

    fn spec(doc: &str) -> Result<MappingSpec, MappingError> {
        parse_mapping_spec(doc, &schema())
    }

    const FULL: &str = r#"{
        "base_iri": "http://ex.org/v/",
        "prefixes": {"crf": "http://ex.org/crf#", "xsd": "http://www.w3.org/2001/XMLSchema#"},
        "subject": {"template": "patient/{patient_id}", "class": "crf:Patient"},
        "data_rules": [
            {"column": "age", "predicate": "crf:age", "datatype": "xsd:integer"},
            {"column": "note", "predicate": "crf:note", "language": "en"},
            {"column": "temp", "predicate": "crf:temp"}
        ],
        "object_rules": [
            {"column": "outcome", "predicate": "crf:hasOutcome",
             "value_map": {"discharged": "crf:DischargedAlive"},
             "on_unmapped": "error"}
        ]
    }"#;

    fn typed(csv: &str) -> TypedDataset {
        let ds = parse_csv(csv.as_bytes(), &Dialect::default()).unwrap();
        apply_schema(&ds, &schema()).unwrap()
    }

    const HEADER: &str = "patient_id,age,note,outcome,temp\n";

    #[test]
    fn minimal_spec_with_subject_only() {
        let s = spec(r#"{"base_iri":"http://e/","subject":{"template":"r/{patient_id}"}}"#)
            .unwrap();
        assert!(s.data_rules.is_empty() && s.object_rules.is_empty());
        assert!(s.subject.class.is_none());
    }

    #[test]
    fn curie_expansion_and_errors() {
        let s = spec(FULL).unwrap();
        assert_eq!(s.data_rules[0].predicate.as_str(), "http://ex.org/crf#age");
        // Unknown prefix
        let err = spec(r#"{"base_iri":"http://e/","subject":{"template":"x","class":"nope:C"}}"#)
            .unwrap_err();
        assert_eq!(err.name(), "UnknownPrefix");
        // Bare word is BadIri
        let err = spec(r#"{"base_iri":"http://e/","subject":{"template":"x","class":"Patient"}}"#)
            .unwrap_err();
        assert_eq!(err.name(), "BadIri");
    }

    #[test]
    fn unknown_placeholder_column() {
        let err = spec(r#"{"base_iri":"http://e/","subject":{"template":"p/{patiend_id}"}}"#)
            .unwrap_err();
        match err {
            MappingError::UnknownColumn { column, .. } => assert_eq!(column, "patiend_id"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_violation_paths() {
        let err = spec(r#"{"base_iri":"http://e/"}"#).unwrap_err();
        assert_eq!(
            err.to_string(),
            "$: missing required field \"subject\""
        );
        let err = spec(
            r#"{"base_iri":"http://e/","subject":{"template":"x"},
                "data_rules":[{"column":"age","predicate":"<http://p/>","datatype":"<http://dt>","language":"en"}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("$.data_rules[0]:"));
    }

    #[test]
    fn datatype_schema_consistency() {
        // integer column with xsd:date is inconsistent
        let err = spec(
            r#"{"base_iri":"http://e/","prefixes":{"xsd":"http://www.w3.org/2001/XMLSchema#"},
                "subject":{"template":"x"},
                "data_rules":[{"column":"age","predicate":"<http://p/>","datatype":"xsd:date"}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.name(), "SchemaViolation");
        // language on a non-string column
        let err = spec(
            r#"{"base_iri":"http://e/","subject":{"template":"x"},
                "data_rules":[{"column":"age","predicate":"<http://p/>","language":"en"}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.name(), "SchemaViolation");
        // string column may carry an arbitrary datatype
        spec(
            r#"{"base_iri":"http://e/","subject":{"template":"x"},
                "data_rules":[{"column":"note","predicate":"<http://p/>","datatype":"<http://dt/custom>"}]}"#,
        )
        .unwrap();
    }

    #[test]
    fn default_datatype_from_schema() {
        let s = spec(FULL).unwrap();
        assert_eq!(
            s.data_rules[2].target,
            LiteralTarget::Datatype(vocab::iri(vocab::XSD_DECIMAL))
        );
    }

    #[test]
    fn subject_expansion_and_encoding() {
        let s = spec(FULL).unwrap();
        let ds = typed(&format!("{HEADER}a b,40,,discharged,37.50\n"));
        let tr = Transformer::new(&s, &ds).unwrap();
        let subj = tr.expand_subject(&ds.rows[0], 2).unwrap();
        assert_eq!(subj.as_str(), "http://ex.org/v/patient/a%20b");
    }

    #[test]
    fn absolute_template_ignores_base() {
        let s = spec(
            r#"{"base_iri":"http://e/","subject":{"template":"http://other.org/p/{patient_id}"}}"#,
        )
        .unwrap();
        let ds = typed(&format!("{HEADER}p1,40,,discharged,\n"));
        let tr = Transformer::new(&s, &ds).unwrap();
        let subj = tr.expand_subject(&ds.rows[0], 2).unwrap();
        assert_eq!(subj.as_str(), "http://other.org/p/p1");
    }

    #[test]
    fn null_in_template() {
        let s = spec(r#"{"base_iri":"http://e/","subject":{"template":"p/{note}"}}"#).unwrap();
        let ds = typed(&format!("{HEADER}p1,40,,discharged,\n"));
        let tr = Transformer::new(&s, &ds).unwrap();
        assert_eq!(
            tr.expand_subject(&ds.rows[0], 2).unwrap_err(),
            MappingError::NullInTemplate {
                column: "note".into(),
                row: 2
            }
        );
    }

    #[test]
    fn transform_row_counts_and_order() {
        let s = spec(FULL).unwrap();
        let ds = typed(&format!("{HEADER}p1,040,fever,discharged,37.50\n"));
        let tr = Transformer::new(&s, &ds).unwrap();
        let mut c = TransformCounters::for_spec(&s);
        let triples = tr.transform_row(&ds.rows[0], 2, &mut c).unwrap();
        assert_eq!(triples.len(), 5); // class + 3 data + 1 object
        let nt = serialize_ntriples(&Graph::from_iter(triples.clone()));
        assert!(nt.contains("\"40\"^^<http://www.w3.org/2001/XMLSchema#integer>"));
        assert!(nt.contains("\"37.5\"^^<http://www.w3.org/2001/XMLSchema#decimal>"));
        assert!(nt.contains("\"fever\"@en"));
        assert!(nt.contains("<http://ex.org/crf#DischargedAlive>"));
        // class triple emitted first, pre-sort
        assert_eq!(
            triples[0].predicate.as_str(),
            "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
        );
        assert_eq!(c.mapped_total(), 4);
    }

    #[test]
    fn null_cells_skip_and_count() {
        let s = spec(FULL).unwrap();
        let ds = typed(&format!("{HEADER}p1,40,,,\n"));
        let tr = Transformer::new(&s, &ds).unwrap();
        let out = tr.transform(&ds).unwrap();
        // class + age only
        assert_eq!(out.triples_emitted, 2);
        assert_eq!(out.counters.skipped_nulls, 3); // note, temp, outcome
        assert_eq!(
            out.counters.skipped_nulls
                + out.counters.skipped_unmapped
                + out.counters.mapped_total(),
            s.rule_count()
        );
    }

    #[test]
    fn all_nulls_class_only() {
        let s = spec(
            r#"{"base_iri":"http://e/","prefixes":{"c":"http://c#"},
                "subject":{"template":"p/{patient_id}","class":"c:P"},
                "data_rules":[{"column":"note","predicate":"c:note"}]}"#,
        )
        .unwrap();
        let ds = typed(&format!("{HEADER}p1,40,,discharged,\n"));
        let tr = Transformer::new(&s, &ds).unwrap();
        let out = tr.transform(&ds).unwrap();
        assert_eq!(out.triples_emitted, 1);
        assert_eq!(out.graph.len(), 1);
    }

    #[test]
    fn unmapped_value_modes() {
        let base = |mode: &str| {
            format!(
                r#"{{"base_iri":"http://e/v/","prefixes":{{"c":"http://c#"}},
                "subject":{{"template":"p/{{patient_id}}"}},
                "object_rules":[{{"column":"outcome","predicate":"c:out",
                  "value_map":{{"discharged":"c:D"}},"on_unmapped":"{mode}"}}]}}"#
            )
        };
        let ds = typed(&format!("{HEADER}p1,40,,transfered,\n"));

        let s = spec(&base("error")).unwrap();
        let tr = Transformer::new(&s, &ds).unwrap();
        assert_eq!(
            tr.transform(&ds).unwrap_err(),
            MappingError::UnmappedValue {
                column: "outcome".into(),
                value: "transfered".into(),
                row: 2
            }
        );

        let s = spec(&base("skip")).unwrap();
        let tr = Transformer::new(&s, &ds).unwrap();
        let out = tr.transform(&ds).unwrap();
        assert_eq!(out.triples_emitted, 0);
        assert_eq!(out.counters.skipped_unmapped, 1);

        let s = spec(&base("mint")).unwrap();
        let tr = Transformer::new(&s, &ds).unwrap();
        let out = tr.transform(&ds).unwrap();
        assert_eq!(out.triples_emitted, 1);
        let t = out.graph.iter().next().unwrap();
        assert_eq!(
            t.object,
            Term::skolem(Iri::new("http://e/v/term/outcome/transfered").unwrap())
        );
    }

    #[test]
    fn mint_percent_encodes_both_segments() {
        let s = spec(
            r#"{"base_iri":"http://e/","prefixes":{"c":"http://c#"},
                "subject":{"template":"p/{patient_id}"},
                "object_rules":[{"column":"outcome","predicate":"c:out",
                  "value_map":{},"on_unmapped":"mint"}]}"#,
        )
        .unwrap();
        let ds = typed(&format!("{HEADER}p1,40,,no match,\n"));
        let tr = Transformer::new(&s, &ds).unwrap();
        let out = tr.transform(&ds).unwrap();
        let t = out.graph.iter().next().unwrap();
        match &t.object {
            Term::Skolem(i) => assert_eq!(i.as_str(), "http://e/term/outcome/no%20match"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn row_order_does_not_change_sorted_output() {
        let s = spec(FULL).unwrap();
        let a = typed(&format!("{HEADER}p1,40,x,discharged,37.5\np2,50,y,discharged,38.0\n"));
        let b = typed(&format!("{HEADER}p2,50,y,discharged,38.0\np1,40,x,discharged,37.5\n"));
        let ta = Transformer::new(&s, &a).unwrap().transform(&a).unwrap();
        let tb = Transformer::new(&s, &b).unwrap().transform(&b).unwrap();
        assert_eq!(
            serialize_ntriples(&ta.graph),
            serialize_ntriples(&tb.graph)
        );
    }

    #[test]
    fn fixture_row1_exact_triples() {
        let csv = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/crf.csv"))
            .unwrap();
        let schema_text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/crf.schema.json"
        ))
        .unwrap();
        let map_text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/crf.mapping.json"
        ))
        .unwrap();
        let expected = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/expected/row1.nt"
        ))
        .unwrap();

        let ds = parse_csv(&csv, &Dialect::default()).unwrap();
        let sch = SchemaSet::parse(&schema_text).unwrap();
        let td = apply_schema(&ds, &sch).unwrap();
        let spec = parse_mapping_spec(&map_text, &sch).unwrap();
        let tr = Transformer::new(&spec, &td).unwrap();
        let mut c = TransformCounters::for_spec(&spec);
        let triples = tr.transform_row(&td.rows[0], 2, &mut c).unwrap();
        let nt = serialize_ntriples(&Graph::from_iter(triples));
        assert_eq!(nt, expected);
    }

    #[test]
    fn fixture_full_counting_law() {
        let csv = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/crf.csv"))
            .unwrap();
        let schema_text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/crf.schema.json"
        ))
        .unwrap();
        let map_text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/crf.mapping.json"
        ))
        .unwrap();
        let ds = parse_csv(&csv, &Dialect::default()).unwrap();
        let sch = SchemaSet::parse(&schema_text).unwrap();
        let td = apply_schema(&ds, &sch).unwrap();
        let spec = parse_mapping_spec(&map_text, &sch).unwrap();
        let out = Transformer::new(&spec, &td).unwrap().transform(&td).unwrap();
        // Frozen oracle values from the fixture generator.
        assert_eq!(td.rows.len(), 200);
        assert_eq!(out.triples_emitted, 1731);
        assert_eq!(out.counters.skipped_nulls, 69);
        assert_eq!(out.counters.skipped_unmapped, 0);
        assert_eq!(
            out.counters.skipped_nulls
                + out.counters.skipped_unmapped
                + out.counters.mapped_total(),
            200 * spec.rule_count()
        );
        assert_eq!(200 * spec.rule_count(), 1600);
    }
}
