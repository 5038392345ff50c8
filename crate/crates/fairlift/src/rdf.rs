//! RDF term model, set-semantics graphs, and bit-exact N-Triples /
//! N-Quads text.
//!
//! Design rules that everything downstream relies on:
//! - no blank nodes, ever: minted nodes are Skolem IRIs, and skolemness
//!   is a minting convention (a [`Term::Skolem`] compares equal to the
//!   same IRI written as [`Term::Iri`]), because the N-Triples grammar
//!   carries no skolem marker and round-tripping must be the identity;
//! - serialization is deterministic: statements are rendered then sorted
//!   by code-point order, literals escape exactly `\" \\ \n \r \t` and
//!   emit every other character as raw UTF-8;
//! - literals with datatype `xsd:string` have one canonical form: they
//!   serialize without a `^^` suffix and plain literals parse back to
//!   `xsd:string` (RDF 1.1 identity).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::error::Diagnostic;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("relative IRI (no scheme): {0:?}")]
    RelativeIri(String),
    #[error("illegal character {ch:?} at offset {offset} in IRI {iri:?}")]
    IllegalChar { iri: String, ch: char, offset: usize },
    #[error("unknown prefix {0:?}")]
    UnknownPrefix(String),
    #[error("bad prefix label {0:?}: must match [A-Za-z][A-Za-z0-9_-]* or be empty")]
    BadPrefixLabel(String),
    #[error("not a CURIE (missing ':'): {0:?}")]
    BadCurie(String),
    #[error("bad literal: {0}")]
    BadLiteral(String),
    #[error("syntax error at line {line}: {reason}")]
    SyntaxError { line: usize, reason: String },
}

impl Diagnostic for RdfError {
    fn module(&self) -> &'static str {
        "rdf-core"
    }
    fn name(&self) -> &'static str {
        match self {
            RdfError::RelativeIri(_) => "RelativeIri",
            RdfError::IllegalChar { .. } => "IllegalChar",
            RdfError::UnknownPrefix(_) => "UnknownPrefix",
            RdfError::BadPrefixLabel(_) => "BadPrefixLabel",
            RdfError::BadCurie(_) => "BadCurie",
            RdfError::BadLiteral(_) => "BadLiteral",
            RdfError::SyntaxError { .. } => "SyntaxError",
        }
    }
}

// ---------------------------------------------------------------------------
// IRIs
// ---------------------------------------------------------------------------

/// An absolute IRI (RFC 3987 subset), validated syntactically only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

/// Characters an IRI may never contain (beyond controls).
const IRI_FORBIDDEN: [char; 9] = [' ', '<', '>', '"', '{', '}', '|', '^', '`'];

impl Iri {
    /// Validate `s` and wrap it verbatim (no normalization).
    ///
    /// Errors: [`RdfError::RelativeIri`] when no scheme is present,
    /// [`RdfError::IllegalChar`] with the 1-based character offset of the
    /// first forbidden character.
    pub fn new(s: impl Into<String>) -> Result<Self, RdfError> {
        let s = s.into();
        for (i, ch) in s.chars().enumerate() {
            if ch == '\\' || IRI_FORBIDDEN.contains(&ch) || ch.is_control() {
                return Err(RdfError::IllegalChar {
                    iri: s.clone(),
                    ch,
                    offset: i + 1,
                });
            }
        }
        if !has_scheme(&s) {
            return Err(RdfError::RelativeIri(s));
        }
        Ok(Iri(s))
    }

    /// Construct from a compile-time constant known to be valid.
    pub(crate) fn constant(s: &str) -> Self {
        debug_assert!(Iri::new(s).is_ok(), "invalid constant IRI: {s}");
        Iri(s.to_owned())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

fn has_scheme(s: &str) -> bool {
    let mut chars = s.chars();
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

/// Validate an IRI string (operation form of [`Iri::new`]).
pub fn validate_iri(s: &str) -> Result<Iri, RdfError> {
    Iri::new(s)
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// Literals
// ---------------------------------------------------------------------------

/// A typed or language-tagged literal.
///
/// Invariant: a language tag is present iff the datatype is
/// `rdf:langString`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: Iri,
    language: Option<String>,
}

impl Literal {
    /// Plain string literal (`xsd:string`).
    pub fn string(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: vocab::iri(vocab::XSD_STRING),
            language: None,
        }
    }

    /// Typed literal. `rdf:langString` is rejected (it requires a tag);
    /// `xsd:string` yields the same value as [`Literal::string`].
    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Result<Self, RdfError> {
        if datatype.as_str() == vocab::RDF_LANG_STRING {
            return Err(RdfError::BadLiteral(
                "datatype rdf:langString requires a language tag".into(),
            ));
        }
        Ok(Literal {
            lexical: lexical.into(),
            datatype,
            language: None,
        })
    }

    /// Language-tagged literal (`rdf:langString`); the tag is validated
    /// against `[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*` and lowercased.
    pub fn lang(lexical: impl Into<String>, tag: &str) -> Result<Self, RdfError> {
        if !valid_lang_tag(tag) {
            return Err(RdfError::BadLiteral(format!(
                "invalid language tag {tag:?}"
            )));
        }
        Ok(Literal {
            lexical: lexical.into(),
            datatype: vocab::iri(vocab::RDF_LANG_STRING),
            language: Some(tag.to_ascii_lowercase()),
        })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &Iri {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }
}

fn valid_lang_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    match parts.next() {
        Some(p) if !p.is_empty() && p.len() <= 8 && p.chars().all(|c| c.is_ascii_alphabetic()) => {}
        _ => return false,
    }
    parts.all(|p| !p.is_empty() && p.len() <= 8 && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

/// An RDF term: IRI, Skolem IRI (minted by this toolkit), or literal.
///
/// Skolemness is a minting convention: `Term::Skolem(i)` and
/// `Term::Iri(i)` are the same value for equality, ordering, hashing and
/// serialization (the grammar cannot represent the difference, and the
/// round-trip law forces value identity).
#[derive(Debug, Clone)]
pub enum Term {
    Iri(Iri),
    Skolem(Iri),
    Literal(Literal),
}

/// Value view that erases skolemness.
#[derive(PartialEq, Eq, PartialOrd, Ord, Hash)]
enum TermKey<'a> {
    Iri(&'a str),
    Literal(&'a Literal),
}

impl Term {
    pub fn iri(i: Iri) -> Self {
        Term::Iri(i)
    }

    pub fn skolem(i: Iri) -> Self {
        Term::Skolem(i)
    }

    pub fn literal(l: Literal) -> Self {
        Term::Literal(l)
    }

    fn key(&self) -> TermKey<'_> {
        match self {
            Term::Iri(i) | Term::Skolem(i) => TermKey::Iri(i.as_str()),
            Term::Literal(l) => TermKey::Literal(l),
        }
    }

    /// The IRI payload, for IRI and Skolem terms.
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) | Term::Skolem(i) => Some(i),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn is_skolem(&self) -> bool {
        matches!(self, Term::Skolem(_))
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Term {}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

// ---------------------------------------------------------------------------
// Statements and graphs
// ---------------------------------------------------------------------------

/// An RDF statement. Positional invariants are enforced by types:
/// subjects and predicates are IRIs (a Skolem subject is still an IRI
/// value), so literals cannot appear where the grammar forbids them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

/// A statement in a named graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quad {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
    pub graph: Iri,
}

/// A duplicate-free set of triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<Triple>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Insert; returns true iff the triple was absent (set semantics).
    pub fn insert(&mut self, t: Triple) -> bool {
        self.triples.insert(t)
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }
}

impl Extend<Triple> for Graph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        self.triples.extend(iter)
    }
}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Graph {
            triples: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for Graph {
    type Item = Triple;
    type IntoIter = std::collections::btree_set::IntoIter<Triple>;
    fn into_iter(self) -> Self::IntoIter {
        self.triples.into_iter()
    }
}

// ---------------------------------------------------------------------------
// Prefix maps and CURIEs
// ---------------------------------------------------------------------------

/// Bindings from prefix labels to namespace IRIs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrefixMap {
    bindings: BTreeMap<String, Iri>,
}

impl PrefixMap {
    pub fn new() -> Self {
        PrefixMap::default()
    }

    /// Bind a label (`[A-Za-z][A-Za-z0-9_-]*` or the empty string) to a
    /// namespace. Rebinding an existing label replaces it.
    pub fn insert(&mut self, label: &str, namespace: Iri) -> Result<(), RdfError> {
        if !valid_prefix_label(label) {
            return Err(RdfError::BadPrefixLabel(label.to_owned()));
        }
        self.bindings.insert(label.to_owned(), namespace);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&Iri> {
        self.bindings.get(label)
    }

    /// Expand a CURIE `label:local` by concatenating the bound namespace
    /// and the local part, then validating the result as an IRI.
    pub fn expand(&self, name: &str) -> Result<Iri, RdfError> {
        let (label, local) = name
            .split_once(':')
            .ok_or_else(|| RdfError::BadCurie(name.to_owned()))?;
        let ns = self
            .get(label)
            .ok_or_else(|| RdfError::UnknownPrefix(label.to_owned()))?;
        Iri::new(format!("{}{}", ns.as_str(), local))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Iri)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

fn valid_prefix_label(label: &str) -> bool {
    if label.is_empty() {
        return true;
    }
    let mut chars = label.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Expand a CURIE against a prefix map (operation form of
/// [`PrefixMap::expand`]).
pub fn expand_curie(name: &str, prefixes: &PrefixMap) -> Result<Iri, RdfError> {
    prefixes.expand(name)
}

// ---------------------------------------------------------------------------
// Vocabulary constants
// ---------------------------------------------------------------------------

/// IRIs of every external vocabulary term this toolkit emits.
pub mod vocab {
    use super::Iri;

    pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

    pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
    pub const XSD_DATE: &str = "http://www.w3.org/2001/XMLSchema#date";
    pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

    pub const PROV_NS: &str = "http://www.w3.org/ns/prov#";
    pub const PROV_ENTITY: &str = "http://www.w3.org/ns/prov#Entity";
    pub const PROV_ACTIVITY: &str = "http://www.w3.org/ns/prov#Activity";
    pub const PROV_SOFTWARE_AGENT: &str = "http://www.w3.org/ns/prov#SoftwareAgent";
    pub const PROV_USED: &str = "http://www.w3.org/ns/prov#used";
    pub const PROV_WAS_GENERATED_BY: &str = "http://www.w3.org/ns/prov#wasGeneratedBy";
    pub const PROV_WAS_ASSOCIATED_WITH: &str = "http://www.w3.org/ns/prov#wasAssociatedWith";
    pub const PROV_WAS_DERIVED_FROM: &str = "http://www.w3.org/ns/prov#wasDerivedFrom";
    pub const PROV_HAD_PLAN: &str = "http://www.w3.org/ns/prov#hadPlan";
    pub const PROV_STARTED_AT_TIME: &str = "http://www.w3.org/ns/prov#startedAtTime";
    pub const PROV_ENDED_AT_TIME: &str = "http://www.w3.org/ns/prov#endedAtTime";

    pub const DCT_NS: &str = "http://purl.org/dc/terms/";
    pub const DCT_TITLE: &str = "http://purl.org/dc/terms/title";
    pub const DCT_DESCRIPTION: &str = "http://purl.org/dc/terms/description";
    pub const DCT_HAS_VERSION: &str = "http://purl.org/dc/terms/hasVersion";
    pub const DCT_PUBLISHER: &str = "http://purl.org/dc/terms/publisher";
    pub const DCT_LICENSE: &str = "http://purl.org/dc/terms/license";
    pub const DCT_ISSUED: &str = "http://purl.org/dc/terms/issued";
    pub const DCT_MODIFIED: &str = "http://purl.org/dc/terms/modified";
    pub const DCT_IS_PART_OF: &str = "http://purl.org/dc/terms/isPartOf";

    pub const DCAT_NS: &str = "http://www.w3.org/ns/dcat#";
    pub const DCAT_CATALOG: &str = "http://www.w3.org/ns/dcat#Catalog";
    pub const DCAT_DATASET: &str = "http://www.w3.org/ns/dcat#Dataset";
    pub const DCAT_DISTRIBUTION: &str = "http://www.w3.org/ns/dcat#Distribution";
    pub const DCAT_KEYWORD: &str = "http://www.w3.org/ns/dcat#keyword";
    pub const DCAT_MEDIA_TYPE: &str = "http://www.w3.org/ns/dcat#mediaType";
    pub const DCAT_DOWNLOAD_URL: &str = "http://www.w3.org/ns/dcat#downloadURL";
    pub const DCAT_ACCESS_URL: &str = "http://www.w3.org/ns/dcat#accessURL";
    pub const DCAT_BYTE_SIZE: &str = "http://www.w3.org/ns/dcat#byteSize";

    pub const LDP_CONTAINS: &str = "http://www.w3.org/ns/ldp#contains";
    pub const R3D_REPOSITORY: &str = "http://www.re3data.org/schema/3-0#Repository";

    /// Toolkit vocabulary for structured labels on provenance elements
    /// and the distribution checksum.
    pub const FLT_NS: &str = "https://w3id.org/fairlift#";
    pub const FLT_PATH: &str = "https://w3id.org/fairlift#path";
    pub const FLT_SHA256: &str = "https://w3id.org/fairlift#sha256";
    pub const FLT_KIND: &str = "https://w3id.org/fairlift#kind";
    pub const FLT_STEP: &str = "https://w3id.org/fairlift#step";
    pub const FLT_STATUS: &str = "https://w3id.org/fairlift#status";
    pub const FLT_NAME: &str = "https://w3id.org/fairlift#name";
    pub const FLT_VERSION: &str = "https://w3id.org/fairlift#version";
    pub const FLT_INDEX: &str = "https://w3id.org/fairlift#index";
    pub const FLT_ROWS: &str = "https://w3id.org/fairlift#rows";

    /// Constant-IRI constructor for the namespaces above.
    pub fn iri(s: &str) -> Iri {
        Iri::constant(s)
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Escape a literal lexical form per the N-Triples grammar: exactly
/// `" \ \n \r \t` are escaped; everything else is emitted raw.
pub fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Render one term in N-Triples form.
pub fn render_term(t: &Term) -> String {
    match t {
        Term::Iri(i) | Term::Skolem(i) => format!("<{i}>"),
        Term::Literal(l) => render_literal(l),
    }
}

fn render_literal(l: &Literal) -> String {
    let body = format!("\"{}\"", escape_literal(l.lexical()));
    if let Some(tag) = l.language() {
        format!("{body}@{tag}")
    } else if l.datatype().as_str() == vocab::XSD_STRING {
        body
    } else {
        format!("{body}^^<{}>", l.datatype())
    }
}

fn render_statement(t: &Triple) -> String {
    format!(
        "<{}> <{}> {} .",
        t.subject,
        t.predicate,
        render_term(&t.object)
    )
}

/// Serialize a graph as N-Triples: one statement per line, lines sorted
/// by code-point order of the serialized statement, trailing newline iff
/// the graph is non-empty.
pub fn serialize_ntriples(g: &Graph) -> String {
    let mut statements: Vec<String> = g.iter().map(render_statement).collect();
    statements.sort_unstable();
    let mut out = String::new();
    for s in statements {
        out.push_str(&s);
        out.push('\n');
    }
    out
}

/// Serialize quads as N-Quads (same contract as N-Triples with a fourth
/// graph-IRI field; duplicates collapse).
pub fn serialize_nquads<'a, I>(quads: I) -> String
where
    I: IntoIterator<Item = &'a Quad>,
{
    let statements: BTreeSet<String> = quads
        .into_iter()
        .map(|q| {
            format!(
                "<{}> <{}> {} <{}> .",
                q.subject,
                q.predicate,
                render_term(&q.object),
                q.graph
            )
        })
        .collect();
    let mut out = String::new();
    for s in statements {
        out.push_str(&s);
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse N-Triples text. Comments (`#` to end of line) and blank lines
/// are accepted; blank-node labels are rejected (Skolem IRIs only).
pub fn parse_ntriples(text: &str) -> Result<Graph, RdfError> {
    let mut graph = Graph::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(triple) = parse_line(line, i + 1)? {
            graph.insert(triple);
        }
    }
    Ok(graph)
}

struct LineParser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<Triple>, RdfError> {
    let mut p = LineParser {
        chars: line.chars().peekable(),
        line: line_no,
    };
    p.skip_ws();
    match p.chars.peek() {
        None | Some('#') => return Ok(None),
        _ => {}
    }
    let subject = p.parse_iri_term("subject")?;
    p.skip_ws();
    let predicate = p.parse_iri_term("predicate")?;
    p.skip_ws();
    let object = p.parse_object()?;
    p.skip_ws();
    match p.chars.next() {
        Some('.') => {}
        other => return Err(p.err(format!("expected '.', found {other:?}"))),
    }
    p.skip_ws();
    match p.chars.peek().copied() {
        None | Some('#') => Ok(Some(Triple::new(subject, predicate, object))),
        Some(c) => Err(p.err(format!("unexpected content after '.': {c:?}"))),
    }
}

impl<'a> LineParser<'a> {
    fn err(&self, reason: String) -> RdfError {
        RdfError::SyntaxError {
            line: self.line,
            reason,
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(' ') | Some('\t')) {
            self.chars.next();
        }
    }

    fn parse_iri_term(&mut self, position: &str) -> Result<Iri, RdfError> {
        match self.chars.peek().copied() {
            Some('<') => self.parse_iriref(),
            Some('_') => Err(self.err(format!(
                "blank node label in {position} position: blank nodes are not accepted (this toolkit emits Skolem IRIs only)"
            ))),
            Some('"') => Err(self.err(format!("literal not allowed in {position} position"))),
            other => Err(self.err(format!("expected '<' to start {position}, found {other:?}"))),
        }
    }

    fn parse_iriref(&mut self) -> Result<Iri, RdfError> {
        self.chars.next(); // consume '<'
        let mut raw = String::new();
        loop {
            match self.chars.next() {
                Some('>') => break,
                Some(c) => raw.push(c),
                None => return Err(self.err("unterminated IRI (missing '>')".into())),
            }
        }
        Iri::new(raw).map_err(|e| self.err(e.to_string()))
    }

    fn parse_object(&mut self) -> Result<Term, RdfError> {
        match self.chars.peek().copied() {
            Some('<') => Ok(Term::Iri(self.parse_iriref()?)),
            Some('"') => Ok(Term::Literal(self.parse_literal()?)),
            Some('_') => Err(self.err(
                "blank node label in object position: blank nodes are not accepted (this toolkit emits Skolem IRIs only)"
                    .into(),
            )),
            other => Err(self.err(format!("expected object term, found {other:?}"))),
        }
    }

    fn parse_literal(&mut self) -> Result<Literal, RdfError> {
        self.chars.next(); // consume '"'
        let mut lexical = String::new();
        loop {
            match self.chars.next() {
                Some('"') => break,
                Some('\\') => lexical.push(self.parse_escape()?),
                Some(c) => lexical.push(c),
                None => return Err(self.err("unterminated string literal".into())),
            }
        }
        match self.chars.peek() {
            Some('@') => {
                self.chars.next();
                let mut tag = String::new();
                while matches!(self.chars.peek(), Some(c) if c.is_ascii_alphanumeric() || *c == '-')
                {
                    tag.push(self.chars.next().unwrap());
                }
                Literal::lang(lexical, &tag).map_err(|e| self.err(e.to_string()))
            }
            Some('^') => {
                self.chars.next();
                match self.chars.next() {
                    Some('^') => {}
                    other => return Err(self.err(format!("expected '^^', found {other:?}"))),
                }
                match self.chars.peek().copied() {
                    Some('<') => {}
                    other => {
                        return Err(self.err(format!("expected datatype IRI, found {other:?}")))
                    }
                }
                let datatype = self.parse_iriref()?;
                Literal::typed(lexical, datatype).map_err(|e| self.err(e.to_string()))
            }
            _ => Ok(Literal::string(lexical)),
        }
    }

    /// Escapes accepted on input: the W3C ECHAR set plus \u/\U code
    /// points. Output uses only the five mandatory escapes.
    fn parse_escape(&mut self) -> Result<char, RdfError> {
        match self.chars.next() {
            Some('t') => Ok('\t'),
            Some('b') => Ok('\u{0008}'),
            Some('n') => Ok('\n'),
            Some('r') => Ok('\r'),
            Some('f') => Ok('\u{000C}'),
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            Some('\\') => Ok('\\'),
            Some('u') => self.parse_unicode_escape(4),
            Some('U') => self.parse_unicode_escape(8),
            other => Err(self.err(format!("invalid escape sequence \\{other:?}"))),
        }
    }

    fn parse_unicode_escape(&mut self, digits: u32) -> Result<char, RdfError> {
        let mut value: u32 = 0;
        for _ in 0..digits {
            let c = self
                .chars
                .next()
                .ok_or_else(|| self.err("truncated \\u escape".into()))?;
            let d = c
                .to_digit(16)
                .ok_or_else(|| self.err(format!("non-hex digit {c:?} in \\u escape")))?;
            value = value * 16 + d;
        }
        char::from_u32(value)
            .ok_or_else(|| self.err(format!("\\u escape U+{value:04X} is not a valid character")))
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    // --- validate_iri -----------------------------------------------------

    #[test]
    fn validate_iri_accepts_absolute() {
        assert_eq!(iri("http://example.org/p/1").as_str(), "http://example.org/p/1");
    }

    #[test]
    fn validate_iri_rejects_relative() {
        assert_eq!(
            validate_iri("p/1"),
            Err(RdfError::RelativeIri("p/1".into()))
        );
    }

    #[test]
    fn validate_iri_reports_illegal_char_position() {
        // "http://ex.org/a" is 15 characters; the space is the 16th.
        match validate_iri("http://ex.org/a b") {
            Err(RdfError::IllegalChar { ch: ' ', offset: 16, .. }) => {}
            other => panic!("expected IllegalChar at offset 16, got {other:?}"),
        }
    }

    #[test]
    fn validate_iri_rejects_controls_and_banned_set() {
        for bad in ["http://a/\u{7}", "http://a/<", "http://a/>", "http://a/\"",
                    "http://a/{", "http://a/}", "http://a/|", "http://a/^",
                    "http://a/`", "http://a/\\"] {
            assert!(matches!(validate_iri(bad), Err(RdfError::IllegalChar { .. })), "{bad:?}");
        }
        assert!(validate_iri("").is_err());
        assert!(validate_iri("1http://x").is_err(), "scheme must start alphabetic");
        assert!(validate_iri("urn:uuid:1234").is_ok());
    }

    // --- expand_curie -----------------------------------------------------

    #[test]
    fn expand_curie_concatenates() {
        let mut p = PrefixMap::new();
        p.insert("crf", iri("http://ex.org/crf#")).unwrap();
        assert_eq!(
            expand_curie("crf:Outcome", &p).unwrap().as_str(),
            "http://ex.org/crf#Outcome"
        );
    }

    #[test]
    fn expand_curie_unknown_prefix() {
        assert_eq!(
            expand_curie("zz:x", &PrefixMap::new()),
            Err(RdfError::UnknownPrefix("zz".into()))
        );
    }

    #[test]
    fn expand_curie_empty_label_allowed() {
        let mut p = PrefixMap::new();
        p.insert("", iri("http://b/")).unwrap();
        assert_eq!(expand_curie(":x", &p).unwrap().as_str(), "http://b/x");
    }

    #[test]
    fn prefix_label_validation() {
        let mut p = PrefixMap::new();
        assert!(p.insert("9x", iri("http://b/")).is_err());
        assert!(p.insert("a b", iri("http://b/")).is_err());
        assert!(p.insert("a_b-c9", iri("http://b/")).is_ok());
    }

    // --- literals ----------------------------------------------------------

    #[test]
    fn langstring_requires_tag_and_lowercases() {
        let l = Literal::lang("fever", "EN").unwrap();
        assert_eq!(l.language(), Some("en"));
        assert_eq!(l.datatype().as_str(), vocab::RDF_LANG_STRING);
        assert!(Literal::typed("x", vocab::iri(vocab::RDF_LANG_STRING)).is_err());
        assert!(Literal::lang("x", "").is_err());
        assert!(Literal::lang("x", "en-").is_err());
        assert!(Literal::lang("x", "pt-BR").is_ok());
    }

    #[test]
    fn xsd_string_typed_equals_plain() {
        let a = Literal::string("x");
        let b = Literal::typed("x", vocab::iri(vocab::XSD_STRING)).unwrap();
        assert_eq!(a, b);
    }

    // --- terms -------------------------------------------------------------

    #[test]
    fn skolem_equals_same_iri() {
        let a = Term::iri(iri("http://x/1"));
        let b = Term::skolem(iri("http://x/1"));
        assert_eq!(a, b);
        assert_eq!(a.cmp(&b), std::cmp::Ordering::Equal);
        let mut set = BTreeSet::new();
        set.insert(a);
        assert!(!set.insert(b), "skolem and plain IRI are one value");
    }

    // --- graph -------------------------------------------------------------

    #[test]
    fn graph_set_semantics() {
        let t = Triple::new(iri("http://s"), iri("http://p"), Term::iri(iri("http://o")));
        let mut g = Graph::new();
        assert!(g.insert(t.clone()));
        assert!(!g.insert(t));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn graph_n_distinct() {
        let mut g = Graph::new();
        for i in 0..10 {
            g.insert(Triple::new(
                iri(&format!("http://s/{i}")),
                iri("http://p"),
                Term::iri(iri("http://o")),
            ));
        }
        assert_eq!(g.len(), 10);
    }

    // --- serialization -----------------------------------------------------

    #[test]
    fn serialize_escapes_quote_and_newline() {
        let mut g = Graph::new();
        g.insert(Triple::new(
            iri("http://s"),
            iri("http://p"),
            Term::literal(Literal::string("a\"b\nc")),
        ));
        assert_eq!(
            serialize_ntriples(&g),
            "<http://s> <http://p> \"a\\\"b\\nc\" .\n"
        );
    }

    #[test]
    fn serialize_empty_graph_is_empty_text() {
        assert_eq!(serialize_ntriples(&Graph::new()), "");
    }

    #[test]
    fn serialize_three_triple_fixture_matches_expected_file() {
        // Hand-written from the grammar before implementation.
        let expected = include_str!("../fixtures/expected/three_triples.nt");
        let mut g = Graph::new();
        // Insert in scrambled order; serialization must sort.
        g.insert(Triple::new(
            iri("http://ex.org/s"),
            iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type"),
            Term::iri(iri("http://ex.org/T")),
        ));
        g.insert(Triple::new(
            iri("http://ex.org/s"),
            iri("http://ex.org/p"),
            Term::literal(Literal::lang("fièvre", "fr").unwrap()),
        ));
        g.insert(Triple::new(
            iri("http://ex.org/s"),
            iri("http://ex.org/p"),
            Term::literal(Literal::string("a\"b\nc")),
        ));
        assert_eq!(serialize_ntriples(&g), expected);
    }

    #[test]
    fn serialize_all_five_escapes() {
        let l = Literal::string("q\"b\\s\nn\rr\tt");
        assert_eq!(escape_literal(l.lexical()), "q\\\"b\\\\s\\nn\\rr\\tt");
    }

    // --- parsing -----------------------------------------------------------

    #[test]
    fn parse_typed_literal_object() {
        let g = parse_ntriples(
            "<http://s> <http://p> \"67\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
        )
        .unwrap();
        let t = g.iter().next().unwrap();
        let l = t.object.as_literal().unwrap();
        assert_eq!(l.lexical(), "67");
        assert_eq!(l.datatype().as_str(), vocab::XSD_INTEGER);
    }

    #[test]
    fn parse_missing_dot_reports_line() {
        match parse_ntriples("<http://a> <http://b> <http://c>") {
            Err(RdfError::SyntaxError { line: 1, .. }) => {}
            other => panic!("expected SyntaxError on line 1, got {other:?}"),
        }
    }

    #[test]
    fn parse_reports_later_line_numbers() {
        let text = "<http://a> <http://b> <http://c> .\n# comment\n\n<http://a> <http://b>\n";
        match parse_ntriples(text) {
            Err(RdfError::SyntaxError { line: 4, .. }) => {}
            other => panic!("expected SyntaxError on line 4, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_blank_nodes() {
        let err = parse_ntriples("_:b0 <http://p> <http://o> .\n").unwrap_err();
        match err {
            RdfError::SyntaxError { reason, .. } => {
                assert!(reason.contains("Skolem"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_ntriples("<http://s> <http://p> _:b0 .\n").is_err());
    }

    #[test]
    fn parse_accepts_comments_blank_lines_crlf_and_tabs() {
        let text = "# header\r\n\r\n<http://s>\t<http://p> \"x\" . # trailing\r\n";
        let g = parse_ntriples(text).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn parse_accepts_echar_and_uchar_input_forms() {
        let g = parse_ntriples("<http://s> <http://p> \"a\\u0041\\U0001F600\\f\\b\\'\" .\n").unwrap();
        let t = g.iter().next().unwrap();
        assert_eq!(t.object.as_literal().unwrap().lexical(), "aA😀\u{c}\u{8}'");
    }

    #[test]
    fn parse_rejects_literal_subject_and_predicate() {
        assert!(parse_ntriples("\"s\" <http://p> <http://o> .\n").is_err());
        assert!(parse_ntriples("<http://s> \"p\" <http://o> .\n").is_err());
    }

    #[test]
    fn parse_serialize_round_trip_spot_checks() {
        for text in [
            "",
            "<http://s> <http://p> <http://o> .\n",
            "<http://s> <http://p> \"\" .\n",
            "<http://s> <http://p> \"tab\\there\" .\n",
            "<http://s> <http://p> \"fiebre alta (38°C)\"@es .\n",
        ] {
            let g = parse_ntriples(text).unwrap();
            assert_eq!(serialize_ntriples(&g), text);
        }
    }

    #[test]
    fn round_trip_preserves_raw_controls_in_literals() {
        // Raw vertical tab (not in the escape set) survives as raw UTF-8.
        let mut g = Graph::new();
        g.insert(Triple::new(
            iri("http://s"),
            iri("http://p"),
            Term::literal(Literal::string("a\u{b}b")),
        ));
        let text = serialize_ntriples(&g);
        assert_eq!(parse_ntriples(&text).unwrap(), g);
    }

    // --- nquads ------------------------------------------------------------

    #[test]
    fn nquads_appends_graph_field() {
        let q = Quad {
            subject: iri("http://s"),
            predicate: iri("http://p"),
            object: Term::iri(iri("http://o")),
            graph: iri("http://g"),
        };
        assert_eq!(
            serialize_nquads([&q]),
            "<http://s> <http://p> <http://o> <http://g> .\n"
        );
    }

    #[test]
    fn nquads_empty_set_is_empty_text() {
        assert_eq!(serialize_nquads([]), "");
    }

    #[test]
    fn nquads_same_triple_two_graphs_distinct_lines() {
        let mk = |g: &str| Quad {
            subject: iri("http://s"),
            predicate: iri("http://p"),
            object: Term::iri(iri("http://o")),
            graph: iri(g),
        };
        let a = mk("http://g1");
        let b = mk("http://g2");
        let out = serialize_nquads([&a, &b]);
        assert_eq!(out.lines().count(), 2);
        assert!(out.contains("<http://g1>") && out.contains("<http://g2>"));
    }

    // --- property: round trip over generated graphs ------------------------

    mod prop {
        use super::*;
        use proptest::prelude::*;

        fn arb_iri() -> impl Strategy<Value = Iri> {
            "[a-z]{1,6}(/[A-Za-z0-9._~%-]{0,8}){0,3}"
                .prop_map(|path| Iri::new(format!("http://ex.org/{path}")).unwrap())
        }

        fn arb_literal() -> impl Strategy<Value = Literal> {
            let lex = ".{0,12}"; // arbitrary unicode, quotes/newlines included
            prop_oneof![
                lex.prop_map(Literal::string),
                (lex, arb_iri()).prop_map(|(l, dt)| Literal::typed(l, dt).unwrap()),
                (lex, "[a-z]{2,3}(-[a-z0-9]{1,4}){0,2}")
                    .prop_map(|(l, t)| Literal::lang(l, &t).unwrap()),
            ]
        }

        fn arb_term() -> impl Strategy<Value = Term> {
            prop_oneof![
                arb_iri().prop_map(Term::iri),
                arb_iri().prop_map(Term::skolem),
                arb_literal().prop_map(Term::literal),
            ]
        }

        fn arb_graph() -> impl Strategy<Value = Graph> {
            proptest::collection::vec((arb_iri(), arb_iri(), arb_term()), 0..25).prop_map(|v| {
                v.into_iter()
                    .map(|(s, p, o)| Triple::new(s, p, o))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn round_trip_identity(g in arb_graph()) {
                let text = serialize_ntriples(&g);
                let back = parse_ntriples(&text).unwrap();
                prop_assert_eq!(back, g);
            }

            #[test]
            fn serialization_is_deterministic(g in arb_graph()) {
                prop_assert_eq!(serialize_ntriples(&g), serialize_ntriples(&g.clone()));
            }

            #[test]
            fn every_literal_escapes_and_recovers(s in ".{0,40}") {
                let mut g = Graph::new();
                g.insert(Triple::new(
                    Iri::new("http://s").unwrap(),
                    Iri::new("http://p").unwrap(),
                    Term::literal(Literal::string(s.clone())),
                ));
                let back = parse_ntriples(&serialize_ntriples(&g)).unwrap();
                let t = back.iter().next().unwrap();
                prop_assert_eq!(t.object.as_literal().unwrap().lexical(), s.as_str());
            }
        }
    }
}
