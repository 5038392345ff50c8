//! Conjunctive (basic-graph-pattern) query language: parser, evaluator,
//! and a brute-force reference evaluator used as the correctness oracle.
//!
//! Grammar:
//! ```text
//! query   := prefix* "SELECT" var+ "WHERE" "{" pattern ("." pattern)* "."? "}"
//! prefix  := "PREFIX" label ":" "<" iri ">"
//! pattern := term term term
//! term    := "<" iri ">" | prefixed-name | literal | "?" name
//! literal := quoted string, optionally "^^" datatype or "@" langtag
//! ```
//! Keywords are case-insensitive. Offsets in errors are 1-based
//! character positions into the query text.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::error::Diagnostic;
use crate::rdf::{render_term, Iri, Literal, PrefixMap, RdfError, Term, Triple};
use crate::store::{PatternTerm, TriplePattern, TripleStore, Variable};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at offset {offset}: {reason}")]
    SyntaxError { offset: usize, reason: String },
    #[error("unknown prefix {label:?} at offset {offset}")]
    UnknownPrefix { offset: usize, label: String },
    #[error("SELECT projects no variables")]
    EmptyProjection,
    #[error("projected variable ?{0} does not occur in any pattern")]
    UnboundProjection(String),
}

impl Diagnostic for QueryError {
    fn module(&self) -> &'static str {
        "store-query"
    }
    fn name(&self) -> &'static str {
        match self {
            QueryError::SyntaxError { .. } => "SyntaxError",
            QueryError::UnknownPrefix { .. } => "UnknownPrefix",
            QueryError::EmptyProjection => "EmptyProjection",
            QueryError::UnboundProjection(_) => "UnboundProjection",
        }
    }
}

// ---------------------------------------------------------------------------
// Query model
// ---------------------------------------------------------------------------

/// A parsed conjunctive query.
#[derive(Debug, Clone)]
pub struct Query {
    pub prefixes: PrefixMap,
    pub projected: Vec<Variable>,
    pub patterns: Vec<TriplePattern>,
}

/// A deduplicated result table, rows sorted by their serialized form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultTable {
    pub header: Vec<Variable>,
    pub rows: Vec<Vec<Term>>,
}

impl ResultTable {
    /// Header line plus tab-separated term rows (N-Triples term forms,
    /// so embedded tabs/newlines stay escaped).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.header.iter().map(|v| v.to_string()).collect();
        out.push_str(&header.join("\t"));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&render_row(row));
            out.push('\n');
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn render_row(row: &[Term]) -> String {
    row.iter()
        .map(render_term)
        .collect::<Vec<_>>()
        .join("\t")
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(Iri),
    Word(String),
    Var(String),
    Literal(Literal, Option<String>), // literal with unresolved CURIE datatype
    LBrace,
    RBrace,
    Dot,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize, // 1-based char offset of the token start
}

struct Scanner {
    chars: Vec<char>,
    i: usize,
}

impl Scanner {
    fn new(text: &str) -> Self {
        Scanner {
            chars: text.chars().collect(),
            i: 0,
        }
    }

    fn offset(&self) -> usize {
        self.i + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.i + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.i += 1;
        }
        c
    }

    fn err(&self, offset: usize, reason: impl Into<String>) -> QueryError {
        QueryError::SyntaxError {
            offset,
            reason: reason.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, QueryError> {
        let mut toks = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_whitespace()) {
                self.i += 1;
            }
            let offset = self.offset();
            let Some(c) = self.peek() else { break };
            let tok = match c {
                '<' => Tok::Iri(self.scan_iriref(offset)?),
                '"' => self.scan_literal(offset)?,
                '?' => {
                    self.bump();
                    let name = self.scan_while(|c| c.is_ascii_alphanumeric() || c == '_');
                    if name.is_empty() {
                        return Err(self.err(offset, "empty variable name after '?'"));
                    }
                    Tok::Var(name)
                }
                '{' => {
                    self.bump();
                    Tok::LBrace
                }
                '}' => {
                    self.bump();
                    Tok::RBrace
                }
                '.' if self.dot_is_separator(0) => {
                    self.bump();
                    Tok::Dot
                }
                _ => {
                    let word = self.scan_word();
                    if word.is_empty() {
                        return Err(self.err(offset, format!("unexpected character {c:?}")));
                    }
                    Tok::Word(word)
                }
            };
            toks.push(Spanned { tok, offset });
        }
        Ok(toks)
    }

    /// A '.' is a pattern separator when followed by whitespace, a
    /// brace, or end of input; otherwise it belongs to the surrounding
    /// word (e.g. a version-like local name `crf:v1.0`).
    fn dot_is_separator(&self, ahead: usize) -> bool {
        match self.peek_at(ahead + 1) {
            None => true,
            Some(c) => c.is_whitespace() || c == '{' || c == '}',
        }
    }

    fn scan_while(&mut self, keep: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while matches!(self.peek(), Some(c) if keep(c)) {
            s.push(self.bump().unwrap());
        }
        s
    }

    fn scan_word(&mut self) -> String {
        let mut s = String::new();
        loop {
            match self.peek() {
                None => break,
                Some(c) if c.is_whitespace() || c == '{' || c == '}' || c == '<' || c == '"' => {
                    break
                }
                Some('.') if self.dot_is_separator(0) => break,
                Some(c) => {
                    s.push(c);
                    self.i += 1;
                }
            }
        }
        s
    }

    fn scan_iriref(&mut self, offset: usize) -> Result<Iri, QueryError> {
        self.bump(); // '<'
        let mut raw = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some(c) => raw.push(c),
                None => return Err(self.err(offset, "unterminated IRI (missing '>')")),
            }
        }
        Iri::new(raw).map_err(|e| self.err(offset, e.to_string()))
    }

    fn scan_literal(&mut self, offset: usize) -> Result<Tok, QueryError> {
        self.bump(); // '"'
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let c = self.scan_escape(offset)?;
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
                None => return Err(self.err(offset, "unterminated string literal")),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let tag = self.scan_while(|c| c.is_ascii_alphanumeric() || c == '-');
                let lit =
                    Literal::lang(lexical, &tag).map_err(|e| self.err(offset, e.to_string()))?;
                Ok(Tok::Literal(lit, None))
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return Err(self.err(offset, "expected '^^' before datatype"));
                }
                match self.peek() {
                    Some('<') => {
                        let dt = self.scan_iriref(self.offset())?;
                        let lit = Literal::typed(lexical, dt)
                            .map_err(|e| self.err(offset, e.to_string()))?;
                        Ok(Tok::Literal(lit, None))
                    }
                    _ => {
                        let word = self.scan_word();
                        if word.is_empty() {
                            return Err(self.err(offset, "expected datatype after '^^'"));
                        }
                        // CURIE datatype, resolved once prefixes are known.
                        Ok(Tok::Literal(Literal::string(lexical), Some(word)))
                    }
                }
            }
            _ => Ok(Tok::Literal(Literal::string(lexical), None)),
        }
    }

    fn scan_escape(&mut self, offset: usize) -> Result<char, QueryError> {
        match self.bump() {
            Some('t') => Ok('\t'),
            Some('b') => Ok('\u{8}'),
            Some('n') => Ok('\n'),
            Some('r') => Ok('\r'),
            Some('f') => Ok('\u{c}'),
            Some('"') => Ok('"'),
            Some('\'') => Ok('\''),
            Some('\\') => Ok('\\'),
            Some('u') => self.scan_hex(offset, 4),
            Some('U') => self.scan_hex(offset, 8),
            other => Err(self.err(offset, format!("invalid escape \\{other:?}"))),
        }
    }

    fn scan_hex(&mut self, offset: usize, digits: u32) -> Result<char, QueryError> {
        let mut v: u32 = 0;
        for _ in 0..digits {
            let c = self
                .bump()
                .ok_or_else(|| self.err(offset, "truncated \\u escape"))?;
            let d = c
                .to_digit(16)
                .ok_or_else(|| self.err(offset, format!("non-hex digit {c:?} in \\u escape")))?;
            v = v * 16 + d;
        }
        char::from_u32(v).ok_or_else(|| self.err(offset, "\\u escape is not a valid character"))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

/// Parse a query text into a [`Query`].
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let toks = Scanner::new(text).tokenize()?;
    Parser { toks, i: 0 }.parse()
}

struct Parser {
    toks: Vec<Spanned>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.i)
    }

    fn bump(&mut self) -> Option<&Spanned> {
        let t = self.toks.get(self.i);
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn end_offset(&self) -> usize {
        self.toks.last().map(|t| t.offset + 1).unwrap_or(1)
    }

    fn err_here(&self, reason: impl Into<String>) -> QueryError {
        let offset = self
            .peek()
            .map(|t| t.offset)
            .unwrap_or_else(|| self.end_offset());
        QueryError::SyntaxError {
            offset,
            reason: reason.into(),
        }
    }

    fn parse(mut self) -> Result<Query, QueryError> {
        let mut prefixes = PrefixMap::new();

        // PREFIX declarations.
        while let Some(s) = self.peek() {
            match &s.tok {
                Tok::Word(w) if w.eq_ignore_ascii_case("prefix") => {
                    self.bump();
                    let (label_tok_offset, label) = match self.bump() {
                        Some(Spanned {
                            tok: Tok::Word(w),
                            offset,
                        }) if w.ends_with(':') => (*offset, w[..w.len() - 1].to_owned()),
                        _ => {
                            return Err(QueryError::SyntaxError {
                                offset: self.toks.get(self.i - 1).map(|t| t.offset).unwrap_or(1),
                                reason: "expected 'label:' after PREFIX".into(),
                            })
                        }
                    };
                    let ns = match self.bump() {
                        Some(Spanned {
                            tok: Tok::Iri(iri), ..
                        }) => iri.clone(),
                        _ => {
                            return Err(QueryError::SyntaxError {
                                offset: label_tok_offset,
                                reason: "expected <namespace> after prefix label".into(),
                            })
                        }
                    };
                    prefixes.insert(&label, ns).map_err(|e| QueryError::SyntaxError {
                        offset: label_tok_offset,
                        reason: e.to_string(),
                    })?;
                }
                _ => break,
            }
        }

        // SELECT clause.
        match self.bump() {
            Some(Spanned { tok: Tok::Word(w), .. }) if w.eq_ignore_ascii_case("select") => {}
            _ => {
                self.i = self.i.saturating_sub(1);
                return Err(self.err_here("expected SELECT"));
            }
        }
        let mut projected = Vec::new();
        while let Some(Spanned { tok: Tok::Var(v), .. }) = self.peek() {
            let v = v.clone();
            self.bump();
            let var = Variable::new(v);
            if !projected.contains(&var) {
                projected.push(var);
            }
        }
        if projected.is_empty() {
            return Err(QueryError::EmptyProjection);
        }

        // WHERE clause.
        match self.bump() {
            Some(Spanned { tok: Tok::Word(w), .. }) if w.eq_ignore_ascii_case("where") => {}
            _ => {
                self.i = self.i.saturating_sub(1);
                return Err(self.err_here("expected WHERE"));
            }
        }
        match self.bump() {
            Some(Spanned { tok: Tok::LBrace, .. }) => {}
            _ => {
                self.i = self.i.saturating_sub(1);
                return Err(self.err_here("expected '{' after WHERE"));
            }
        }

        let mut patterns = Vec::new();
        loop {
            match self.peek().map(|s| &s.tok) {
                Some(Tok::RBrace) => {
                    self.bump();
                    break;
                }
                None => return Err(self.err_here("expected '}'")),
                _ => {}
            }
            let subject = self.parse_pattern_term(&prefixes, "subject")?;
            let predicate = self.parse_pattern_term(&prefixes, "predicate")?;
            if let PatternTerm::Term(t) = &predicate {
                if !matches!(t, Term::Iri(_)) {
                    return Err(self.err_here("literal not allowed in predicate position"));
                }
            }
            let object = self.parse_pattern_term(&prefixes, "object")?;
            patterns.push(TriplePattern::new(subject, predicate, object));
            // Separator: '.', or directly '}'.
            if let Some(Spanned { tok: Tok::Dot, .. }) = self.peek() {
                self.bump();
            }
        }
        if self.peek().is_some() {
            return Err(self.err_here("unexpected content after '}'"));
        }
        if patterns.is_empty() {
            return Err(self.err_here("WHERE block contains no patterns"));
        }

        // Every projected variable must occur in some pattern.
        let in_patterns: BTreeSet<&Variable> =
            patterns.iter().flat_map(|p| p.variables()).collect();
        for v in &projected {
            if !in_patterns.contains(v) {
                return Err(QueryError::UnboundProjection(v.name().to_owned()));
            }
        }

        Ok(Query {
            prefixes,
            projected,
            patterns,
        })
    }

    fn parse_pattern_term(
        &mut self,
        prefixes: &PrefixMap,
        position: &str,
    ) -> Result<PatternTerm, QueryError> {
        let Some(s) = self.peek().cloned() else {
            return Err(self.err_here(format!("expected {position} term")));
        };
        let offset = s.offset;
        match s.tok {
            Tok::Iri(iri) => {
                self.bump();
                Ok(PatternTerm::Term(Term::Iri(iri)))
            }
            Tok::Var(v) => {
                self.bump();
                Ok(PatternTerm::Var(Variable::new(v)))
            }
            Tok::Word(w) => {
                self.bump();
                let iri = expand_word(&w, prefixes, offset)?;
                Ok(PatternTerm::Term(Term::Iri(iri)))
            }
            Tok::Literal(lit, pending_curie) => {
                self.bump();
                let lit = match pending_curie {
                    None => lit,
                    Some(curie) => {
                        let dt = expand_word(&curie, prefixes, offset)?;
                        Literal::typed(lit.lexical().to_owned(), dt).map_err(|e| {
                            QueryError::SyntaxError {
                                offset,
                                reason: e.to_string(),
                            }
                        })?
                    }
                };
                Ok(PatternTerm::Term(Term::Literal(lit)))
            }
            Tok::LBrace | Tok::RBrace | Tok::Dot => {
                Err(self.err_here(format!("expected {position} term")))
            }
        }
    }
}

fn expand_word(word: &str, prefixes: &PrefixMap, offset: usize) -> Result<Iri, QueryError> {
    match prefixes.expand(word) {
        Ok(iri) => Ok(iri),
        Err(RdfError::UnknownPrefix(label)) => Err(QueryError::UnknownPrefix { offset, label }),
        Err(e) => Err(QueryError::SyntaxError {
            offset,
            reason: e.to_string(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

type Binding = BTreeMap<Variable, Term>;

fn substitute(pattern: &TriplePattern, binding: &Binding) -> TriplePattern {
    let subst = |pos: &PatternTerm| -> PatternTerm {
        match pos {
            PatternTerm::Var(v) => match binding.get(v) {
                Some(t) => PatternTerm::Term(t.clone()),
                None => pos.clone(),
            },
            PatternTerm::Term(_) => pos.clone(),
        }
    };
    TriplePattern {
        subject: subst(&pattern.subject),
        predicate: subst(&pattern.predicate),
        object: subst(&pattern.object),
    }
}

/// Evaluate by left-to-right binding propagation (natural join),
/// project, deduplicate, and sort rows by their serialized form.
pub fn evaluate(q: &Query, store: &TripleStore) -> ResultTable {
    let mut bindings: Vec<Binding> = vec![Binding::new()];
    for pattern in &q.patterns {
        let mut next = Vec::new();
        for b in &bindings {
            let grounded = substitute(pattern, b);
            for triple in store.match_pattern(&grounded) {
                let mut nb = b.clone();
                bind(&mut nb, &grounded.subject, Term::Iri(triple.subject.clone()));
                bind(
                    &mut nb,
                    &grounded.predicate,
                    Term::Iri(triple.predicate.clone()),
                );
                bind(&mut nb, &grounded.object, triple.object.clone());
                next.push(nb);
            }
        }
        bindings = next;
        if bindings.is_empty() {
            break;
        }
    }

    let rows: BTreeSet<Vec<Term>> = bindings
        .iter()
        .map(|b| {
            q.projected
                .iter()
                .map(|v| b.get(v).expect("projected variable bound").clone())
                .collect()
        })
        .collect();
    let mut rows: Vec<Vec<Term>> = rows.into_iter().collect();
    rows.sort_by_cached_key(|r| render_row(r));
    ResultTable {
        header: q.projected.clone(),
        rows,
    }
}

fn bind(binding: &mut Binding, position: &PatternTerm, value: Term) {
    if let PatternTerm::Var(v) = position {
        binding.insert(v.clone(), value);
    }
}

/// Reference evaluator: enumerate every assignment of candidate terms
/// (all store terms plus the query's constants) to the query's
/// variables and keep those satisfying all patterns. Exponential — this
/// is the oracle the fast evaluator is tested against, not an API for
/// real queries.
pub fn evaluate_brute_force(q: &Query, store: &TripleStore) -> ResultTable {
    let stored: BTreeSet<Triple> = store.iter().collect();
    let mut candidates: BTreeSet<Term> = store.terms().cloned().collect();
    for p in &q.patterns {
        for pos in [&p.subject, &p.predicate, &p.object] {
            if let PatternTerm::Term(t) = pos {
                candidates.insert(t.clone());
            }
        }
    }
    let candidates: Vec<Term> = candidates.into_iter().collect();
    let vars: Vec<Variable> = {
        let mut seen = Vec::new();
        for p in &q.patterns {
            for v in p.variables() {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
        }
        seen
    };

    let mut rows: BTreeSet<Vec<Term>> = BTreeSet::new();
    let mut assignment: Vec<usize> = vec![0; vars.len()];
    'outer: loop {
        let binding: Binding = vars
            .iter()
            .cloned()
            .zip(assignment.iter().map(|&i| candidates[i].clone()))
            .collect();
        if q.patterns.iter().all(|p| satisfied(p, &binding, &stored)) {
            rows.insert(
                q.projected
                    .iter()
                    .map(|v| binding[v].clone())
                    .collect::<Vec<_>>(),
            );
        }
        // Next assignment (odometer).
        for slot in (0..assignment.len()).rev() {
            assignment[slot] += 1;
            if assignment[slot] < candidates.len() {
                continue 'outer;
            }
            assignment[slot] = 0;
        }
        break;
    }

    let mut rows: Vec<Vec<Term>> = rows.into_iter().collect();
    rows.sort_by_cached_key(|r| render_row(r));
    ResultTable {
        header: q.projected.clone(),
        rows,
    }
}

fn satisfied(pattern: &TriplePattern, binding: &Binding, stored: &BTreeSet<Triple>) -> bool {
    let resolve = |pos: &PatternTerm| -> Term {
        match pos {
            PatternTerm::Term(t) => t.clone(),
            PatternTerm::Var(v) => binding[v].clone(),
        }
    };
    let s = resolve(&pattern.subject);
    let p = resolve(&pattern.predicate);
    let o = resolve(&pattern.object);
    let (Some(s), Some(p)) = (s.as_iri(), p.as_iri()) else {
        return false; // literal in subject/predicate position matches nothing
    };
    stored.contains(&Triple::new(s.clone(), p.clone(), o))
}
