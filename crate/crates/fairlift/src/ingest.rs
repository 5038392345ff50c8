//! CSV capture: strict RFC-4180 parsing into a [`TabularDataset`],
//! plus schema-driven typing into a [`TypedDataset`].
//!
//! The parser is a small state machine rather than a third-party CSV
//! reader because the contract requires strict quoting (junk after a
//! closing quote is an error, EOF inside a quote is an error) and
//! row-numbered diagnostics for both conditions.
//!
//! Row numbers everywhere in this module are 1-based physical record
//! ordinals, counting the header record as row 1.

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::Diagnostic;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("row {row}: expected {expected} cells, found {found}")]
    ArityMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: unterminated or malformed quoted field")]
    UnterminatedQuote { row: usize },
    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),
    #[error("input is not valid UTF-8 ({0})")]
    InvalidUtf8(String),
    #[error("schema column {0:?} not present in the data")]
    UnknownColumn(String),
    #[error("invalid schema: {reason}")]
    BadSchema { reason: String },
}

impl Diagnostic for IngestError {
    fn module(&self) -> &'static str {
        "ingest"
    }
    fn name(&self) -> &'static str {
        match self {
            IngestError::ArityMismatch { .. } => "ArityMismatch",
            IngestError::UnterminatedQuote { .. } => "UnterminatedQuote",
            IngestError::DuplicateColumn(_) => "DuplicateColumn",
            IngestError::InvalidUtf8(_) => "InvalidUtf8",
            IngestError::UnknownColumn(_) => "UnknownColumn",
            IngestError::BadSchema { .. } => "BadSchema",
        }
    }
}

// ---------------------------------------------------------------------------
// CSV dialect + raw dataset
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Dialect {
    pub delimiter: char,
    pub quote: char,
    pub header: bool,
}

impl Default for Dialect {
    fn default() -> Self {
        Dialect {
            delimiter: ',',
            quote: '"',
            header: true,
        }
    }
}

/// Where the bytes came from, for provenance identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Source {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct TabularDataset {
    pub columns: Vec<String>,
    /// Raw string cells; every row has exactly `columns.len()` cells.
    pub rows: Vec<Vec<String>>,
    pub source: Source,
}

impl TabularDataset {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parse CSV bytes under the given dialect. Without a header, columns
/// are named `col_1..col_N` from the first record's arity.
pub fn parse_csv(bytes: &[u8], dialect: &Dialect) -> Result<TabularDataset, IngestError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IngestError::InvalidUtf8(e.to_string()))?;
    let records = split_records(text, dialect)?;

    let mut records = records.into_iter();
    let (columns, first_data_row) = if dialect.header {
        match records.next() {
            Some(header) => {
                let mut seen = std::collections::BTreeSet::new();
                for name in &header {
                    if !seen.insert(name.clone()) {
                        return Err(IngestError::DuplicateColumn(name.clone()));
                    }
                }
                (header, 2usize)
            }
            None => (Vec::new(), 2usize),
        }
    } else {
        // Synthesize names; the first record is data.
        let mut peeked: Vec<Vec<String>> = records.collect();
        let n = peeked.first().map(|r| r.len()).unwrap_or(0);
        let columns: Vec<String> = (1..=n).map(|i| format!("col_{i}")).collect();
        let mut rows = Vec::new();
        std::mem::swap(&mut rows, &mut peeked);
        return finish_dataset(columns, rows, 1, bytes);
    };

    let rows: Vec<Vec<String>> = records.collect();
    finish_dataset(columns, rows, first_data_row, bytes)
}

fn finish_dataset(
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    first_row_ordinal: usize,
    bytes: &[u8],
) -> Result<TabularDataset, IngestError> {
    for (i, row) in rows.iter().enumerate() {
        if row.len() != columns.len() {
            return Err(IngestError::ArityMismatch {
                row: first_row_ordinal + i,
                expected: columns.len(),
                found: row.len(),
            });
        }
    }
    Ok(TabularDataset {
        columns,
        rows,
        source: Source {
            name: String::new(),
            sha256: sha256_hex(bytes),
        },
    })
}

#[derive(PartialEq)]
enum State {
    StartOfField,
    InUnquoted,
    InQuoted,
    AfterQuote,
}

/// RFC-4180 record splitter. Quoted fields may contain the delimiter,
/// CR/LF, and doubled quotes. A lone quote inside an unquoted field is
/// taken literally; any character other than the delimiter, a record
/// end, or a second quote after a closing quote is an error.
fn split_records(text: &str, dialect: &Dialect) -> Result<Vec<Vec<String>>, IngestError> {
    let mut records: Vec<Vec<String>> = Vec::new();
    let mut record: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut state = State::StartOfField;

    let current_row = |records: &Vec<Vec<String>>| records.len() + 1;

    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        // Normalize CRLF to a single record-end signal; a bare CR also
        // ends the record (lenient toward pre-OSX-style files).
        let is_newline = c == '\n' || c == '\r';
        if c == '\r' && chars.peek() == Some(&'\n') && state != State::InQuoted {
            chars.next();
        }
        match state {
            State::StartOfField => {
                if c == dialect.quote {
                    state = State::InQuoted;
                } else if c == dialect.delimiter {
                    record.push(String::new());
                } else if is_newline {
                    record.push(String::new());
                    records.push(std::mem::take(&mut record));
                } else {
                    field.push(c);
                    state = State::InUnquoted;
                }
            }
            State::InUnquoted => {
                if c == dialect.delimiter {
                    record.push(std::mem::take(&mut field));
                    state = State::StartOfField;
                } else if is_newline {
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                    state = State::StartOfField;
                } else {
                    field.push(c);
                }
            }
            State::InQuoted => {
                if c == dialect.quote {
                    state = State::AfterQuote;
                } else {
                    field.push(c);
                }
            }
            State::AfterQuote => {
                if c == dialect.quote {
                    field.push(dialect.quote); // doubled quote
                    state = State::InQuoted;
                } else if c == dialect.delimiter {
                    record.push(std::mem::take(&mut field));
                    state = State::StartOfField;
                } else if is_newline {
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                    state = State::StartOfField;
                } else {
                    return Err(IngestError::UnterminatedQuote {
                        row: current_row(&records),
                    });
                }
            }
        }
    }

    match state {
        State::InQuoted => {
            return Err(IngestError::UnterminatedQuote {
                row: current_row(&records),
            })
        }
        State::InUnquoted | State::AfterQuote => {
            record.push(field);
            records.push(record);
        }
        State::StartOfField => {
            // Only a trailing delimiter leaves a dangling empty field.
            if !record.is_empty() {
                record.push(field);
                records.push(record);
            }
        }
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Column schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    String,
    Integer,
    Decimal,
    Boolean,
    Date,
    Datetime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrfModule {
    Admission,
    Followup,
    Outcome,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(rename = "type")]
    pub column_type: ColumnType,
    pub nullable: bool,
    #[serde(default)]
    pub null_markers: Option<Vec<String>>,
    #[serde(default)]
    pub crf_module: Option<CrfModule>,
}

impl ColumnSchema {
    fn is_null_marker(&self, raw: &str) -> bool {
        match &self.null_markers {
            Some(markers) => markers.iter().any(|m| m == raw),
            None => raw.is_empty(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSet {
    pub columns: Vec<ColumnSchema>,
}

impl SchemaSet {
    pub fn parse(json_text: &str) -> Result<SchemaSet, IngestError> {
        let set: SchemaSet = serde_json::from_str(json_text)
            .map_err(|e| IngestError::BadSchema {
                reason: e.to_string(),
            })?;
        let mut seen = std::collections::BTreeSet::new();
        for c in &set.columns {
            if !seen.insert(c.name.clone()) {
                return Err(IngestError::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(set)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSchema> {
        self.columns.iter().find(|c| c.name == name)
    }
}

// ---------------------------------------------------------------------------
// Typed dataset
// ---------------------------------------------------------------------------

/// A typed cell holding the canonical lexical form for its type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellValue {
    Null,
    String(String),
    /// Canonical form: no leading zeros, no plus sign.
    Integer(i64),
    /// Canonical form: at least one digit each side of the point,
    /// no redundant zeros, e.g. `37.5`, `40.0`.
    Decimal(String),
    Boolean(bool),
    /// `YYYY-MM-DD`, validated against the proleptic Gregorian calendar.
    Date(String),
    /// RFC 3339 normalized to UTC (`Z` suffix).
    DateTime(String),
}

impl CellValue {
    pub fn is_null(&self) -> bool {
        matches!(self, CellValue::Null)
    }

    /// Canonical lexical form; `None` for null.
    pub fn lexical(&self) -> Option<String> {
        match self {
            CellValue::Null => None,
            CellValue::String(s) => Some(s.clone()),
            CellValue::Integer(i) => Some(i.to_string()),
            CellValue::Decimal(s) | CellValue::Date(s) | CellValue::DateTime(s) => {
                Some(s.clone())
            }
            CellValue::Boolean(b) => Some(b.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub row: usize,
    pub column: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct TypedDataset {
    pub schema: SchemaSet,
    /// Column names in schema order (the "relevant subset").
    pub columns: Vec<String>,
    pub rows: Vec<Vec<CellValue>>,
    pub row_errors: Vec<RowError>,
    pub source: Source,
}

impl TypedDataset {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&CellValue> {
        let ci = self.column_index(column)?;
        self.rows.get(row).map(|r| &r[ci])
    }

    pub fn summary(&self) -> String {
        let mut nulls = vec![0usize; self.columns.len()];
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if cell.is_null() {
                    nulls[i] += 1;
                }
            }
        }
        let mut out = format!(
            "rows: {}\ncolumns: {}\nrow_errors: {}\n",
            self.rows.len(),
            self.columns.len(),
            self.row_errors.len()
        );
        for (i, name) in self.columns.iter().enumerate() {
            let schema = self.schema.column(name).expect("schema column");
            out.push_str(&format!(
                "  {name}: {:?}{}{}\n",
                schema.column_type,
                if schema.nullable { " nullable" } else { "" },
                if nulls[i] > 0 {
                    format!(" ({} nulls)", nulls[i])
                } else {
                    String::new()
                }
            ));
        }
        out
    }
}

/// Project the dataset onto the schema's columns and parse each cell
/// per its declared type. Cell failures are recorded in `row_errors`
/// (the cell becomes null) rather than aborting.
pub fn apply_schema(ds: &TabularDataset, schema: &SchemaSet) -> Result<TypedDataset, IngestError> {
    let mut indices = Vec::with_capacity(schema.columns.len());
    for c in &schema.columns {
        match ds.column_index(&c.name) {
            Some(i) => indices.push(i),
            None => return Err(IngestError::UnknownColumn(c.name.clone())),
        }
    }

    let mut rows = Vec::with_capacity(ds.rows.len());
    let mut row_errors = Vec::new();
    for (ri, raw_row) in ds.rows.iter().enumerate() {
        let ordinal = ri + 2; // header is row 1
        let mut typed = Vec::with_capacity(indices.len());
        for (c, &src_i) in schema.columns.iter().zip(&indices) {
            let raw = &raw_row[src_i];
            if c.is_null_marker(raw) {
                if !c.nullable {
                    row_errors.push(RowError {
                        row: ordinal,
                        column: c.name.clone(),
                        reason: "null in non-nullable column".into(),
                    });
                }
                typed.push(CellValue::Null);
                continue;
            }
            match parse_cell(raw, c.column_type) {
                Ok(v) => typed.push(v),
                Err(reason) => {
                    row_errors.push(RowError {
                        row: ordinal,
                        column: c.name.clone(),
                        reason,
                    });
                    typed.push(CellValue::Null);
                }
            }
        }
        rows.push(typed);
    }

    Ok(TypedDataset {
        schema: schema.clone(),
        columns: schema.columns.iter().map(|c| c.name.clone()).collect(),
        rows,
        row_errors,
        source: ds.source.clone(),
    })
}

fn parse_cell(raw: &str, ty: ColumnType) -> Result<CellValue, String> {
    match ty {
        ColumnType::String => Ok(CellValue::String(raw.to_owned())),
        ColumnType::Integer => raw
            .parse::<i64>()
            .map(CellValue::Integer)
            .map_err(|_| "invalid integer".to_owned()),
        ColumnType::Decimal => canonical_decimal(raw)
            .map(CellValue::Decimal)
            .ok_or_else(|| "invalid decimal".to_owned()),
        ColumnType::Boolean => match raw {
            "true" | "1" => Ok(CellValue::Boolean(true)),
            "false" | "0" => Ok(CellValue::Boolean(false)),
            _ => Err("invalid boolean".to_owned()),
        },
        ColumnType::Date => {
            let ok = raw.len() == 10
                && raw.as_bytes()[4] == b'-'
                && raw.as_bytes()[7] == b'-'
                && chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d").is_ok();
            if ok {
                Ok(CellValue::Date(raw.to_owned()))
            } else {
                Err("invalid date".to_owned())
            }
        }
        ColumnType::Datetime => chrono::DateTime::parse_from_rfc3339(raw)
            .map(|dt| {
                CellValue::DateTime(
                    dt.with_timezone(&chrono::Utc)
                        .to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
                )
            })
            .map_err(|_| "invalid datetime".to_owned()),
    }
}

/// XSD-decimal-style canonical form: optional leading minus, integer
/// part without leading zeros, fractional part without trailing zeros,
/// at least one digit on each side of the point. Zero is `0.0`.
fn canonical_decimal(raw: &str) -> Option<String> {
    let (sign, body) = match raw.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, raw.strip_prefix('+').unwrap_or(raw)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if (int_part.is_empty() && frac_part.is_empty())
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let int_trimmed = int_part.trim_start_matches('0');
    let int_canon = if int_trimmed.is_empty() { "0" } else { int_trimmed };
    let frac_trimmed = frac_part.trim_end_matches('0');
    let frac_canon = if frac_trimmed.is_empty() { "0" } else { frac_trimmed };
    let is_zero = int_canon == "0" && frac_canon == "0";
    Some(format!(
        "{}{}.{}",
        if sign && !is_zero { "-" } else { "" },
        int_canon,
        frac_canon
    ))
}
