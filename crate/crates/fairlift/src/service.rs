//! Read-only HTTP service publishing the layered metadata: one route
//! per record, content-negotiated between N-Triples, fixed-context
//! JSON-LD, and a minimal HTML table, plus a data route streaming the
//! published triples file.
//!
//! Responses are prerendered from an immutable store snapshot at
//! startup, so repeated GETs are byte-identical and concurrency-safe.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Request, State};
use axum::http::{header, Method, StatusCode};
use axum::response::Response;
use axum::Router;

use crate::error::Error;
use crate::fdp::{render_jsonld, serialize_layer, LayerKind, LayerRecord, MetadataStore, Publisher};
use crate::rdf::{serialize_ntriples, Iri};

pub const MEDIA_NTRIPLES: &str = "application/n-triples";
pub const MEDIA_JSONLD: &str = "application/ld+json";
pub const MEDIA_HTML: &str = "text/html";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub metadata_path: PathBuf,
    /// Optional triples file streamed from /distribution/{id}/data.
    pub data_path: Option<PathBuf>,
    /// Bind address, e.g. "127.0.0.1:8080" ("...:0" picks a free port).
    pub bind: String,
    /// Public base URL; defaults to http://{bound address}/.
    pub base_url: Option<Iri>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    NTriples,
    JsonLd,
    Html,
}

/// First acceptable media range wins, in header order; parameters such
/// as q-values are ignored. Absent or blank Accept means N-Triples.
fn negotiate(accept: Option<&str>) -> Option<Format> {
    let Some(h) = accept else {
        return Some(Format::NTriples);
    };
    if h.trim().is_empty() {
        return Some(Format::NTriples);
    }
    for item in h.split(',') {
        let range = item.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
        match range.as_str() {
            MEDIA_NTRIPLES | "*/*" => return Some(Format::NTriples),
            MEDIA_JSONLD => return Some(Format::JsonLd),
            MEDIA_HTML => return Some(Format::Html),
            _ => {}
        }
    }
    None
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render_html(r: &LayerRecord) -> String {
    let mut rows = String::new();
    let mut row = |field: &str, value: String| {
        rows.push_str(&format!(
            "<tr><td>{}</td><td>{}</td></tr>\n",
            html_escape(field),
            value
        ));
    };
    let text = |v: &str| html_escape(v);
    let link = |v: &Iri| {
        let e = html_escape(v.as_str());
        format!("<a href=\"{e}\">{e}</a>")
    };

    row("id", link(&r.id));
    row("kind", text(r.kind.as_str()));
    if let Some(v) = &r.title {
        row("title", text(v));
    }
    if let Some(v) = &r.description {
        row("description", text(v));
    }
    if let Some(v) = &r.version {
        row("version", text(v));
    }
    match &r.publisher {
        Some(Publisher::Iri(i)) => row("publisher", link(i)),
        Some(Publisher::Name(n)) => row("publisher", text(n)),
        None => {}
    }
    if let Some(v) = &r.license {
        row("license", link(v));
    }
    if let Some(v) = &r.issued {
        row("issued", text(v));
    }
    if let Some(v) = &r.modified {
        row("modified", text(v));
    }
    if !r.keywords.is_empty() {
        row(
            "keywords",
            html_escape(&r.keywords.join(", ")),
        );
    }
    if let Some(v) = &r.parent {
        row("parent", link(v));
    }
    for c in &r.children {
        row("contains", link(c));
    }
    if let Some(v) = &r.media_type {
        row("media type", text(v));
    }
    if let Some(v) = &r.download_url {
        row("download", link(v));
    }
    if let Some(v) = &r.access_url {
        row("access", link(v));
    }
    if let Some(v) = r.byte_size {
        row("byte size", v.to_string());
    }
    if let Some(v) = &r.checksum {
        row("sha-256", text(v));
    }

    let title = html_escape(r.title.as_deref().unwrap_or(r.kind.as_str()));
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head><meta charset=\"utf-8\">\
<title>{title}</title></head>\n<body>\n<h1>{title}</h1>\n\
<table border=\"1\">\n<tr><th>field</th><th>value</th></tr>\n{rows}</table>\n\
</body>\n</html>\n"
    )
}

struct Rendered {
    nt: String,
    jsonld: String,
    html: String,
}

struct DataRoute {
    media_type: String,
    bytes: Option<Arc<Vec<u8>>>,
}

struct ServiceState {
    pages: BTreeMap<String, Rendered>,
    data: BTreeMap<String, DataRoute>,
}

fn build_state(
    store: &MetadataStore,
    base: &Iri,
    data_path: Option<&Path>,
) -> Result<ServiceState, Error> {
    let rebased = store.rebase(base)?;
    let base_str = rebased.root.as_str().to_owned();
    let data_bytes = match data_path {
        Some(p) => Some(Arc::new(
            std::fs::read(p).map_err(|e| Error::io("fdp-metadata", p, e))?,
        )),
        None => None,
    };
    let mut pages = BTreeMap::new();
    let mut data = BTreeMap::new();
    for r in rebased.records.values() {
        let rest = r
            .id
            .as_str()
            .strip_prefix(&base_str)
            .expect("rebased record ids live under the base");
        let path = format!("/{rest}");
        let graph = serialize_layer(r)?;
        pages.insert(
            path.clone(),
            Rendered {
                nt: serialize_ntriples(&graph),
                jsonld: render_jsonld(r),
                html: render_html(r),
            },
        );
        if r.kind == LayerKind::Distribution {
            data.insert(
                format!("{path}/data"),
                DataRoute {
                    media_type: r
                        .media_type
                        .clone()
                        .unwrap_or_else(|| "application/octet-stream".to_owned()),
                    bytes: data_bytes.clone(),
                },
            );
        }
    }
    Ok(ServiceState { pages, data })
}

fn respond(status: StatusCode, content_type: &str, body: Vec<u8>, head_only: bool) -> Response {
    let mut resp = Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, content_type)
        .header(header::CONTENT_LENGTH, body.len());
    if status == StatusCode::METHOD_NOT_ALLOWED {
        resp = resp.header(header::ALLOW, "GET");
    }
    let body = if head_only { Vec::new() } else { body };
    resp.body(Body::from(body)).expect("static response")
}

async fn handle(State(state): State<Arc<ServiceState>>, req: Request) -> Response {
    let head_only = req.method() == Method::HEAD;
    if req.method() != Method::GET && !head_only {
        return respond(
            StatusCode::METHOD_NOT_ALLOWED,
            "text/plain; charset=utf-8",
            b"method not allowed\n".to_vec(),
            false,
        );
    }
    let path = req.uri().path().to_owned();
    if let Some(route) = state.data.get(&path) {
        return match &route.bytes {
            Some(bytes) => respond(
                StatusCode::OK,
                &route.media_type,
                bytes.as_ref().clone(),
                head_only,
            ),
            None => respond(
                StatusCode::NOT_FOUND,
                "text/plain; charset=utf-8",
                b"no data file configured\n".to_vec(),
                head_only,
            ),
        };
    }
    let Some(page) = state.pages.get(&path) else {
        return respond(
            StatusCode::NOT_FOUND,
            "text/plain; charset=utf-8",
            b"not found\n".to_vec(),
            head_only,
        );
    };
    let accept = req
        .headers()
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok());
    match negotiate(accept) {
        Some(Format::NTriples) => respond(
            StatusCode::OK,
            MEDIA_NTRIPLES,
            page.nt.clone().into_bytes(),
            head_only,
        ),
        Some(Format::JsonLd) => respond(
            StatusCode::OK,
            MEDIA_JSONLD,
            page.jsonld.clone().into_bytes(),
            head_only,
        ),
        Some(Format::Html) => respond(
            StatusCode::OK,
            "text/html; charset=utf-8",
            page.html.clone().into_bytes(),
            head_only,
        ),
        None => respond(
            StatusCode::NOT_ACCEPTABLE,
            "text/plain; charset=utf-8",
            b"acceptable: application/n-triples, application/ld+json, text/html\n".to_vec(),
            false,
        ),
    }
}

fn router(state: Arc<ServiceState>) -> Router {
    Router::new().fallback(handle).with_state(state)
}

/// A running service; dropping the handle shuts it down.
pub struct ServiceHandle {
    pub addr: SocketAddr,
    pub base_url: Iri,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServiceHandle {
    /// Absolute URL for a service-relative path ("/" or "/catalog/x").
    pub fn url(&self, path: &str) -> String {
        format!(
            "{}{}",
            self.base_url.as_str().trim_end_matches('/'),
            path
        )
    }

    /// Block until the service exits. The shutdown trigger must stay
    /// alive while we block: dropping the sender closes the channel,
    /// which the server treats as a shutdown signal.
    pub fn wait(mut self) {
        let _keep_serving = self.shutdown.take();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Load the metadata file strictly and start serving it.
pub fn spawn(config: ServiceConfig) -> Result<ServiceHandle, Error> {
    let store = MetadataStore::load(&config.metadata_path)?;
    spawn_with_store(store, config)
}

/// Start serving an already-loaded store on a dedicated runtime thread.
pub fn spawn_with_store(
    store: MetadataStore,
    config: ServiceConfig,
) -> Result<ServiceHandle, Error> {
    let (ready_tx, ready_rx) = std::sync::mpsc::channel::<Result<(SocketAddr, Iri), Error>>();
    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("fdp-service".into())
        .spawn(move || {
            let rt = match tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
            {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = ready_tx.send(Err(Error::io(
                        "fdp-metadata",
                        Path::new("tokio-runtime"),
                        e,
                    )));
                    return;
                }
            };
            rt.block_on(async move {
                let prepared = async {
                    let listener = tokio::net::TcpListener::bind(&config.bind)
                        .await
                        .map_err(|e| Error::io("fdp-metadata", Path::new(&config.bind), e))?;
                    let addr = listener
                        .local_addr()
                        .map_err(|e| Error::io("fdp-metadata", Path::new(&config.bind), e))?;
                    let base = match &config.base_url {
                        Some(b) => b.clone(),
                        None => Iri::new(format!("http://{addr}/"))
                            .expect("socket address forms a valid IRI"),
                    };
                    let state = Arc::new(build_state(&store, &base, config.data_path.as_deref())?);
                    Ok::<_, Error>((listener, addr, base, state))
                }
                .await;
                match prepared {
                    Err(e) => {
                        let _ = ready_tx.send(Err(e));
                    }
                    Ok((listener, addr, base, state)) => {
                        let _ = ready_tx.send(Ok((addr, base)));
                        let app = router(state);
                        let _ = axum::serve(listener, app)
                            .with_graceful_shutdown(async {
                                let _ = shutdown_rx.await;
                            })
                            .await;
                    }
                }
            });
        })
        .map_err(|e| Error::io("fdp-metadata", Path::new("fdp-service"), e))?;

    match ready_rx.recv() {
        Ok(Ok((addr, base_url))) => Ok(ServiceHandle {
            addr,
            base_url,
            shutdown: Some(shutdown_tx),
            thread: Some(thread),
        }),
        Ok(Err(e)) => {
            let _ = thread.join();
            Err(e)
        }
        Err(_) => {
            let _ = thread.join();
            Err(Error::Io {
                module: "fdp-metadata",
                detail: "service thread exited before binding".to_owned(),
            })
        }
    }
}
