//! Injected time source.
//!
//! Every operation that stamps a time (provenance records, metadata
//! `modified` defaults) takes a [`Clock`] instead of reading the system
//! time directly, so deterministic reruns can inject a fixed instant.

use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};

/// A source of "now", injected by the caller.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

/// Wall-clock time.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock frozen at one instant (`--fixed-clock`).
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

/// Shared handle used throughout the pipeline.
pub type SharedClock = Arc<dyn Clock>;

/// System clock as a shared handle.
pub fn system_clock() -> SharedClock {
    Arc::new(SystemClock)
}

/// Fixed clock parsed from an RFC 3339 instant.
pub fn fixed_clock(instant: DateTime<Utc>) -> SharedClock {
    Arc::new(FixedClock(instant))
}

/// RFC 3339 UTC rendering at second precision with a trailing `Z`
/// (the lexical form used for every xsd:dateTime this toolkit emits).
pub fn to_xsd_datetime(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}
