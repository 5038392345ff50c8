//! `fairlift` command-line interface.
//!
//! Exit codes: 0 success; 1 usage error; 2 input/validation error;
//! 3 assessment failure (essential indicator failed or competency
//! question unanswered). Every failure prints one line to stderr in
//! the form `ERROR <module>.<name>: <detail>`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use fairlift::assess::{
    assess, load_questions, render_json, render_text, report_exit_code, AssessmentBundle,
};
use fairlift::clock::{fixed_clock, system_clock, SharedClock};
use fairlift::error::{error_line, Error};
use fairlift::fdp::{render_jsonld, MetadataStore};
use fairlift::ingest::{apply_schema, parse_csv, Dialect, SchemaSet};
use fairlift::pipeline::{run_pipeline, PipelineConfig};
use fairlift::prov::{prov_json_to_graph, Granularity};
use fairlift::query::{evaluate, parse_query};
use fairlift::rdf::{parse_ntriples, serialize_ntriples, Iri};
use fairlift::service::{spawn, ServiceConfig};
use fairlift::store::TripleStore;

#[derive(Parser)]
#[command(
    name = "fairlift",
    version,
    about = "FAIRification toolkit: CSV→RDF ETL, provenance, FAIR Data Point metadata service, maturity assessment"
)]
struct Cli {
    /// JSON file of default flag values (keys = long flag names with
    /// underscores); explicit flags override the file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Fixed ISO-8601 instant used as "now" (reproducible runs).
    #[arg(long = "fixed-clock", global = true, value_name = "ISO8601")]
    fixed_clock: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a CSV against its column schema and print a summary.
    Ingest {
        /// Input CSV file.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Column schema JSON file.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Run the full pipeline (data.nt, run-report.json, prov.nt, prov.json).
    Run {
        /// Input CSV file.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Column schema JSON file.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Mapping spec JSON file.
        #[arg(long = "map")]
        mapping: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run identifier (default: derived from input digests).
        #[arg(long = "run-id")]
        run_id: Option<String>,
        /// Provenance granularity: run, step, or record.
        #[arg(long)]
        granularity: Option<String>,
        /// Row batch size for record-granularity provenance.
        #[arg(long = "batch-size")]
        batch_size: Option<usize>,
    },
    /// Provenance document utilities.
    Prov {
        #[command(subcommand)]
        action: ProvAction,
    },
    /// Layered metadata utilities.
    Metadata {
        #[command(subcommand)]
        action: MetadataAction,
    },
    /// Serve the layered metadata over HTTP (until interrupted).
    Serve {
        /// metadata.json authoring file.
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Data file streamed from /distribution/{id}/data.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Bind address (host:port; port 0 picks a free port).
        #[arg(long, env = "FAIRLIFT_BIND")]
        bind: Option<String>,
        /// Public base URL (default: http://{bound address}/).
        #[arg(long = "base-url", env = "FAIRLIFT_BASE_URL")]
        base_url: Option<String>,
    },
    /// Evaluate one query file against an N-Triples data file.
    Query {
        /// N-Triples data file.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Query file (PREFIX/SELECT/WHERE).
        #[arg(long)]
        query: Option<PathBuf>,
    },
    /// Assess FAIR maturity over an assessment bundle.
    Assess {
        /// N-Triples data file.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Provenance document (prov.nt or prov.json).
        #[arg(long)]
        prov: Option<PathBuf>,
        /// metadata.json authoring file.
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Mapping spec (enables the vocabulary indicator).
        #[arg(long = "map")]
        mapping: Option<PathBuf>,
        /// Live service base URL (enables the networked indicators).
        #[arg(long = "service-url")]
        service_url: Option<String>,
        /// Competency questions JSON file.
        #[arg(long)]
        questions: Option<PathBuf>,
        /// Report format: text or json.
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Subcommand)]
enum ProvAction {
    /// Read a PROV-JSON document and re-serialize it.
    Export {
        /// prov.json input file.
        #[arg(long)]
        prov: Option<PathBuf>,
        /// Output format: ntriples or provjson.
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Subcommand)]
enum MetadataAction {
    /// Validate metadata.json; write metadata.nt and JSON-LD records.
    Build {
        /// metadata.json authoring file.
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A CLI failure: either a usage problem (exit 1) or a module error
/// (exit 2, rendered as `ERROR <module>.<name>: ...`).
enum Failure {
    Usage(String),
    Module(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Module(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Defaults read from --config: a flat JSON object whose keys are the
/// long flag names with underscores.
struct ConfigFile(serde_json::Map<String, serde_json::Value>);

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<ConfigFile, Failure> {
        let Some(path) = path else {
            return Ok(ConfigFile(serde_json::Map::new()));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("error: cannot read --config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| usage(format!("error: --config {} is not JSON: {e}", path.display())))?;
        match value {
            serde_json::Value::Object(map) => Ok(ConfigFile(map)),
            _ => Err(usage(format!(
                "error: --config {} must hold a JSON object",
                path.display()
            ))),
        }
    }

    fn string(&self, key: &str) -> Option<String> {
        self.0.get(key).and_then(|v| v.as_str()).map(str::to_owned)
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.string(key).map(PathBuf::from)
    }

    fn number(&self, key: &str) -> Option<u64> {
        self.0.get(key).and_then(|v| v.as_u64())
    }
}

fn require<T>(flag: Option<T>, from_config: Option<T>, name: &str) -> Result<T, Failure> {
    flag.or(from_config).ok_or_else(|| {
        usage(format!(
            "error: missing required argument --{name} (no config default either); see --help"
        ))
    })
}

fn make_clock(fixed: Option<&str>) -> Result<SharedClock, Failure> {
    match fixed {
        None => Ok(system_clock()),
        Some(s) => {
            let instant = chrono::DateTime::parse_from_rfc3339(s)
                .map_err(|e| usage(format!("error: --fixed-clock {s:?} is not ISO-8601: {e}")))?;
            Ok(fixed_clock(instant.with_timezone(&chrono::Utc)))
        }
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            1
        }
        Err(Failure::Module(e)) => {
            eprintln!("{}", error_line(&e));
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    let clock = make_clock(cli.fixed_clock.as_deref())?;
    match cli.command {
        Command::Ingest { input, schema } => {
            let input = require(input, cfg.path("in"), "in")?;
            let schema_path = require(schema, cfg.path("schema"), "schema")?;
            let bytes =
                std::fs::read(&input).map_err(|e| Error::io("ingest", &input, e))?;
            let schema_text = std::fs::read_to_string(&schema_path)
                .map_err(|e| Error::io("ingest", &schema_path, e))?;
            let tabular = parse_csv(&bytes, &Dialect::default()).map_err(Error::from)?;
            let schema = SchemaSet::parse(&schema_text).map_err(Error::from)?;
            let typed = apply_schema(&tabular, &schema).map_err(Error::from)?;
            println!("{}", typed.summary());
            Ok(0)
        }
        Command::Run {
            input,
            schema,
            mapping,
            out,
            run_id,
            granularity,
            batch_size,
        } => {
            let granularity = match granularity.or_else(|| cfg.string("granularity")) {
                None => Granularity::default(),
                Some(s) => Granularity::parse(&s).ok_or_else(|| {
                    usage(format!(
                        "error: --granularity must be run, step, or record (got {s:?})"
                    ))
                })?,
            };
            let config = PipelineConfig {
                input: require(input, cfg.path("in"), "in")?,
                schema: require(schema, cfg.path("schema"), "schema")?,
                mapping: require(mapping, cfg.path("map"), "map")?,
                out_dir: require(out, cfg.path("out"), "out")?,
                run_id: run_id.or_else(|| cfg.string("run_id")),
                granularity,
                batch_size: batch_size
                    .or_else(|| cfg.number("batch_size").map(|n| n as usize))
                    .unwrap_or(100),
                clock,
            };
            let report = run_pipeline(&config)?;
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            print!("{json}");
            Ok(0)
        }
        Command::Prov {
            action: ProvAction::Export { prov, format },
        } => {
            let prov_path = require(prov, cfg.path("prov"), "prov")?;
            let format = require(format, cfg.string("format"), "format")?;
            let text = std::fs::read_to_string(&prov_path)
                .map_err(|e| Error::io("provenance", &prov_path, e))?;
            let graph = prov_json_to_graph(&text).map_err(Error::from)?;
            match format.as_str() {
                "ntriples" => print!("{}", serialize_ntriples(&graph)),
                "provjson" => {
                    let value: serde_json::Value =
                        serde_json::from_str(&text).expect("validated above");
                    let mut out =
                        serde_json::to_string_pretty(&value).expect("JSON re-serializes");
                    out.push('\n');
                    print!("{out}");
                }
                other => {
                    return Err(usage(format!(
                        "error: --format must be ntriples or provjson (got {other:?})"
                    )))
                }
            }
            Ok(0)
        }
        Command::Metadata {
            action: MetadataAction::Build { metadata, out },
        } => {
            let metadata_path = require(metadata, cfg.path("metadata"), "metadata")?;
            let out_dir = require(out, cfg.path("out"), "out")?;
            let store = MetadataStore::load(&metadata_path).map_err(Error::from)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io("fdp-metadata", &out_dir, e))?;
            let graph = store.to_graph();
            let nt_path = out_dir.join("metadata.nt");
            std::fs::write(&nt_path, serialize_ntriples(&graph))
                .map_err(|e| Error::io("fdp-metadata", &nt_path, e))?;
            let base = store.root.as_str();
            let mut written = 0;
            for r in store.records.values() {
                let rel = r.id.as_str().strip_prefix(base).unwrap_or(r.id.as_str());
                let name = if rel.is_empty() {
                    "fdp_root".to_owned()
                } else {
                    rel.replace('/', "_")
                };
                let path = out_dir.join(format!("{name}.jsonld"));
                std::fs::write(&path, render_jsonld(r))
                    .map_err(|e| Error::io("fdp-metadata", &path, e))?;
                written += 1;
            }
            println!(
                "validated {} records; wrote metadata.nt ({} statements) and {} JSON-LD files to {}",
                store.records.len(),
                graph.len(),
                written,
                out_dir.display()
            );
            Ok(0)
        }
        Command::Serve {
            metadata,
            data,
            bind,
            base_url,
        } => {
            let metadata_path = require(metadata, cfg.path("metadata"), "metadata")?;
            let base_url = match base_url.or_else(|| cfg.string("base_url")) {
                None => None,
                Some(s) => Some(
                    Iri::new(s.clone())
                        .map_err(|e| usage(format!("error: --base-url {s:?}: {e}")))?,
                ),
            };
            let service = spawn(ServiceConfig {
                metadata_path,
                data_path: data.or_else(|| cfg.path("data")),
                bind: bind
                    .or_else(|| cfg.string("bind"))
                    .unwrap_or_else(|| "127.0.0.1:8080".to_owned()),
                base_url,
            })?;
            println!(
                "serving {} (listening on {})",
                service.base_url, service.addr
            );
            service.wait();
            Ok(0)
        }
        Command::Query { data, query } => {
            let data_path = require(data, cfg.path("data"), "data")?;
            let query_path = require(query, cfg.path("query"), "query")?;
            let data_text = std::fs::read_to_string(&data_path)
                .map_err(|e| Error::io("store-query", &data_path, e))?;
            let query_text = std::fs::read_to_string(&query_path)
                .map_err(|e| Error::io("store-query", &query_path, e))?;
            let graph = parse_ntriples(&data_text).map_err(Error::from)?;
            let parsed = parse_query(&query_text).map_err(Error::from)?;
            let table = evaluate(&parsed, &TripleStore::from_graph(&graph));
            print!("{}", table.to_tsv());
            Ok(0)
        }
        Command::Assess {
            data,
            prov,
            metadata,
            mapping,
            service_url,
            questions,
            format,
        } => {
            let bundle = AssessmentBundle {
                data_path: data.or_else(|| cfg.path("data")),
                prov_path: prov.or_else(|| cfg.path("prov")),
                metadata_path: metadata.or_else(|| cfg.path("metadata")),
                mapping_path: mapping.or_else(|| cfg.path("map")),
                service_url: service_url.or_else(|| cfg.string("service_url")),
            };
            let questions = match questions.or_else(|| cfg.path("questions")) {
                None => Vec::new(),
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| Error::io("assessor", &p, e))?;
                    load_questions(&text).map_err(Error::from)?
                }
            };
            let report = assess(&bundle, &questions).map_err(Error::from)?;
            match format
                .or_else(|| cfg.string("format"))
                .as_deref()
                .unwrap_or("text")
            {
                "json" => print!("{}", render_json(&report)),
                "text" => print!("{}", render_text(&report)),
                other => {
                    return Err(usage(format!(
                        "error: --format must be text or json (got {other:?})"
                    )))
                }
            }
            Ok(report_exit_code(&report))
        }
    }
}
