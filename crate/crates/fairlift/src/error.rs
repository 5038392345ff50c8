//! Crate-wide error taxonomy.
//!
//! Every module defines its own error enum; this module defines the
//! [`Diagnostic`] trait they all implement (machine-greppable
//! `module.Name` identity) and the top-level [`Error`] wrapper the CLI
//! and pipeline report through. The CLI renders every failure as a
//! single line `ERROR <module>.<name>: <detail>` on standard error.

use thiserror::Error;

/// Machine-readable identity of an error: the owning module and the
/// error name from that module's contract.
pub trait Diagnostic {
    fn module(&self) -> &'static str;
    fn name(&self) -> &'static str;
}

/// Top-level error: any module failure, or an I/O failure attributed to
/// the operation that performed it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Rdf(#[from] crate::rdf::RdfError),
    #[error(transparent)]
    Query(#[from] crate::query::QueryError),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Mapping(#[from] crate::mapping::MappingError),
    #[error(transparent)]
    Prov(#[from] crate::prov::ProvError),
    #[error(transparent)]
    Fdp(#[from] crate::fdp::FdpError),
    #[error(transparent)]
    Assess(#[from] crate::assess::AssessError),
    #[error("{detail}")]
    Io {
        /// Module on whose behalf the I/O was performed.
        module: &'static str,
        detail: String,
    },
}

impl Error {
    /// Wrap an I/O failure with the path involved and the module that
    /// was doing the work.
    pub fn io(module: &'static str, path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            module,
            detail: format!("{}: {err}", path.display()),
        }
    }
}

impl Diagnostic for Error {
    fn module(&self) -> &'static str {
        match self {
            Error::Rdf(e) => e.module(),
            Error::Query(e) => e.module(),
            Error::Ingest(e) => e.module(),
            Error::Mapping(e) => e.module(),
            Error::Prov(e) => e.module(),
            Error::Fdp(e) => e.module(),
            Error::Assess(e) => e.module(),
            Error::Io { module, .. } => module,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Error::Rdf(e) => e.name(),
            Error::Query(e) => e.name(),
            Error::Ingest(e) => e.name(),
            Error::Mapping(e) => e.name(),
            Error::Prov(e) => e.name(),
            Error::Fdp(e) => e.name(),
            Error::Assess(e) => e.name(),
            Error::Io { .. } => "Io",
        }
    }
}

/// One-line rendering used by the CLI: `ERROR <module>.<name>: <detail>`.
pub fn error_line(e: &Error) -> String {
    format!("ERROR {}.{}: {e}", e.module(), e.name())
}
