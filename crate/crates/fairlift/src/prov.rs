//! W3C PROV provenance: a prospective plan (plan + plan-step entities)
//! and retrospective activity records, serialized as PROV-O N-Triples
//! and as PROV-JSON.
//!
//! Identifiers are minted deterministically as
//! `{base}prov/{run_id}/{kind}/{seq}`, so a rerun with the same run id
//! and a fixed clock is byte-identical. Both serializations carry the
//! same fact set: labels become literal triples under the toolkit
//! namespace (`flt:`), and PROV-JSON's `prov:plan` field corresponds to
//! `prov:hadPlan` triples.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::clock::to_xsd_datetime;
use crate::error::Diagnostic;
use crate::rdf::{serialize_ntriples, vocab, Graph, Iri, Literal, Term, Triple};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProvError {
    #[error("pipeline has no stages")]
    EmptyPipeline,
    #[error("step label {0:?} is not in the plan")]
    UnknownPlanStep(String),
    #[error("invalid provenance document: {reason}")]
    BadDocument { reason: String },
}

impl Diagnostic for ProvError {
    fn module(&self) -> &'static str {
        "provenance"
    }
    fn name(&self) -> &'static str {
        match self {
            ProvError::EmptyPipeline => "EmptyPipeline",
            ProvError::UnknownPlanStep(_) => "UnknownPlanStep",
            ProvError::BadDocument { .. } => "BadDocument",
        }
    }
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Workflow step labels from the FAIRification process numbering.
pub const WORKFLOW_STEPS: &[&str] = &["1", "2", "3", "4a", "4b", "5a", "5b", "6", "7"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityKind {
    File,
    Dataset,
    Graph,
    Plan,
    PlanStep,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::File => "file",
            EntityKind::Dataset => "dataset",
            EntityKind::Graph => "graph",
            EntityKind::Plan => "plan",
            EntityKind::PlanStep => "plan_step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Succeeded,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Succeeded => "succeeded",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    Run,
    #[default]
    Step,
    Record,
}

impl Granularity {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "run" => Some(Granularity::Run),
            "step" => Some(Granularity::Step),
            "record" => Some(Granularity::Record),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Run => "run",
            Granularity::Step => "step",
            Granularity::Record => "record",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvEntity {
    pub id: Iri,
    pub kind: EntityKind,
    /// Label key → value; keys are locals under the toolkit namespace
    /// (`path`, `sha256`, `step`, `name`, ...).
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvActivity {
    pub id: Iri,
    pub step_label: String,
    pub started: DateTime<Utc>,
    pub ended: DateTime<Utc>,
    pub status: Status,
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvAgent {
    pub id: Iri,
    pub name: String,
    pub version: String,
}

/// Activity/agent association with an optional plan-step link
/// (`prov:hadPlan` in triples, `prov:plan` in PROV-JSON).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    pub activity: Iri,
    pub agent: Iri,
    pub plan: Option<Iri>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvDocument {
    /// Namespace all ids are minted under: `{base}prov/{run_id}/`.
    pub run_ns: Iri,
    pub run_id: String,
    pub granularity: Granularity,
    pub entities: Vec<ProvEntity>,
    pub activities: Vec<ProvActivity>,
    pub agents: Vec<ProvAgent>,
    /// (activity, entity)
    pub used: Vec<(Iri, Iri)>,
    /// (entity, activity)
    pub was_generated_by: Vec<(Iri, Iri)>,
    pub was_associated_with: Vec<Association>,
    /// (derived entity, source entity)
    pub was_derived_from: Vec<(Iri, Iri)>,
}

impl ProvDocument {
    pub fn entity(&self, id: &Iri) -> Option<&ProvEntity> {
        self.entities.iter().find(|e| &e.id == id)
    }

    /// Find the first entity whose label `key` equals `value`.
    pub fn entity_by_label(&self, key: &str, value: &str) -> Option<&ProvEntity> {
        self.entities
            .iter()
            .find(|e| e.labels.get(key).map(String::as_str) == Some(value))
    }

    pub fn plan_step_labels(&self) -> BTreeSet<String> {
        self.entities
            .iter()
            .filter(|e| e.kind == EntityKind::PlanStep)
            .filter_map(|e| e.labels.get("step").cloned())
            .collect()
    }

    pub fn executed_step_labels(&self) -> BTreeSet<String> {
        self.activities.iter().map(|a| a.step_label.clone()).collect()
    }

    /// Check the document invariants: unique ids, closed relation
    /// endpoints, generation uniqueness for file/graph entities, plan
    /// conformance, and temporal sanity.
    pub fn validate(&self) -> Result<(), ProvError> {
        let bad = |reason: String| Err(ProvError::BadDocument { reason });

        let mut ids: BTreeSet<&Iri> = BTreeSet::new();
        for id in self
            .entities
            .iter()
            .map(|e| &e.id)
            .chain(self.activities.iter().map(|a| &a.id))
            .chain(self.agents.iter().map(|a| &a.id))
        {
            if !ids.insert(id) {
                return bad(format!("duplicate id <{id}>"));
            }
        }

        let entity_ids: BTreeSet<&Iri> = self.entities.iter().map(|e| &e.id).collect();
        let activity_ids: BTreeSet<&Iri> = self.activities.iter().map(|a| &a.id).collect();
        let agent_ids: BTreeSet<&Iri> = self.agents.iter().map(|a| &a.id).collect();

        for (a, e) in &self.used {
            if !activity_ids.contains(a) || !entity_ids.contains(e) {
                return bad(format!("dangling used(<{a}>, <{e}>)"));
            }
        }
        for (e, a) in &self.was_generated_by {
            if !entity_ids.contains(e) || !activity_ids.contains(a) {
                return bad(format!("dangling wasGeneratedBy(<{e}>, <{a}>)"));
            }
        }
        for assoc in &self.was_associated_with {
            if !activity_ids.contains(&assoc.activity) || !agent_ids.contains(&assoc.agent) {
                return bad(format!(
                    "dangling wasAssociatedWith(<{}>, <{}>)",
                    assoc.activity, assoc.agent
                ));
            }
            if let Some(plan) = &assoc.plan {
                if !entity_ids.contains(plan) {
                    return bad(format!("dangling hadPlan target <{plan}>"));
                }
            }
        }
        for (d, s) in &self.was_derived_from {
            if !entity_ids.contains(d) || !entity_ids.contains(s) {
                return bad(format!("dangling wasDerivedFrom(<{d}>, <{s}>)"));
            }
        }

        for e in &self.entities {
            if matches!(e.kind, EntityKind::File | EntityKind::Graph) {
                let n = self
                    .was_generated_by
                    .iter()
                    .filter(|(ent, _)| ent == &e.id)
                    .count();
                if n != 1 {
                    return bad(format!(
                        "{} entity <{}> has {n} wasGeneratedBy edges, expected 1",
                        e.kind.as_str(),
                        e.id
                    ));
                }
            }
        }

        let plan_labels = self.plan_step_labels();
        for a in &self.activities {
            if !plan_labels.contains(&a.step_label) {
                return bad(format!(
                    "activity <{}> step label {:?} is not a plan step",
                    a.id, a.step_label
                ));
            }
            if a.started > a.ended {
                return bad(format!("activity <{}> started after it ended", a.id));
            }
        }
        Ok(())
    }

    /// Render the document as an RDF graph (the N-Triples fact set).
    pub fn to_graph(&self) -> Graph {
        let mut g = Graph::new();
        let label_triple = |id: &Iri, key: &str, value: &str| {
            let pred = Iri::new(format!("{}{key}", vocab::FLT_NS)).expect("flt label IRI");
            Triple::new(id.clone(), pred, Term::literal(Literal::string(value)))
        };

        for e in &self.entities {
            g.insert(Triple::new(
                e.id.clone(),
                vocab::iri(vocab::RDF_TYPE),
                Term::iri(vocab::iri(vocab::PROV_ENTITY)),
            ));
            g.insert(label_triple(&e.id, "kind", e.kind.as_str()));
            for (k, v) in &e.labels {
                g.insert(label_triple(&e.id, k, v));
            }
        }
        for a in &self.activities {
            g.insert(Triple::new(
                a.id.clone(),
                vocab::iri(vocab::RDF_TYPE),
                Term::iri(vocab::iri(vocab::PROV_ACTIVITY)),
            ));
            g.insert(label_triple(&a.id, "step", &a.step_label));
            g.insert(label_triple(&a.id, "status", a.status.as_str()));
            for (k, v) in &a.labels {
                g.insert(label_triple(&a.id, k, v));
            }
            let dt = |t: &DateTime<Utc>| {
                Term::literal(
                    Literal::typed(to_xsd_datetime(*t), vocab::iri(vocab::XSD_DATE_TIME))
                        .expect("dateTime literal"),
                )
            };
            g.insert(Triple::new(
                a.id.clone(),
                vocab::iri(vocab::PROV_STARTED_AT_TIME),
                dt(&a.started),
            ));
            g.insert(Triple::new(
                a.id.clone(),
                vocab::iri(vocab::PROV_ENDED_AT_TIME),
                dt(&a.ended),
            ));
        }
        for ag in &self.agents {
            g.insert(Triple::new(
                ag.id.clone(),
                vocab::iri(vocab::RDF_TYPE),
                Term::iri(vocab::iri(vocab::PROV_SOFTWARE_AGENT)),
            ));
            g.insert(label_triple(&ag.id, "name", &ag.name));
            g.insert(label_triple(&ag.id, "version", &ag.version));
        }
        for (a, e) in &self.used {
            g.insert(Triple::new(
                a.clone(),
                vocab::iri(vocab::PROV_USED),
                Term::iri(e.clone()),
            ));
        }
        for (e, a) in &self.was_generated_by {
            g.insert(Triple::new(
                e.clone(),
                vocab::iri(vocab::PROV_WAS_GENERATED_BY),
                Term::iri(a.clone()),
            ));
        }
        for assoc in &self.was_associated_with {
            g.insert(Triple::new(
                assoc.activity.clone(),
                vocab::iri(vocab::PROV_WAS_ASSOCIATED_WITH),
                Term::iri(assoc.agent.clone()),
            ));
            if let Some(plan) = &assoc.plan {
                g.insert(Triple::new(
                    assoc.activity.clone(),
                    vocab::iri(vocab::PROV_HAD_PLAN),
                    Term::iri(plan.clone()),
                ));
            }
        }
        for (d, s) in &self.was_derived_from {
            g.insert(Triple::new(
                d.clone(),
                vocab::iri(vocab::PROV_WAS_DERIVED_FROM),
                Term::iri(s.clone()),
            ));
        }
        g
    }
}

// ---------------------------------------------------------------------------
// Recorder
// ---------------------------------------------------------------------------

/// Incrementally builds a [`ProvDocument`] with deterministic ids.
pub struct ProvRecorder {
    doc: ProvDocument,
    seq: BTreeMap<&'static str, usize>,
    agent_id: Iri,
    /// step label → plan_step entity id
    plan_steps: BTreeMap<String, Iri>,
}

impl ProvRecorder {
    pub fn new(
        base: &Iri,
        run_id: &str,
        granularity: Granularity,
        agent_name: &str,
        agent_version: &str,
    ) -> Self {
        let sep = if base.as_str().ends_with('/') { "" } else { "/" };
        let run_ns = Iri::new(format!("{base}{sep}prov/{run_id}/")).expect("run namespace IRI");
        let mut rec = ProvRecorder {
            doc: ProvDocument {
                run_ns,
                run_id: run_id.to_owned(),
                granularity,
                entities: Vec::new(),
                activities: Vec::new(),
                agents: Vec::new(),
                used: Vec::new(),
                was_generated_by: Vec::new(),
                was_associated_with: Vec::new(),
                was_derived_from: Vec::new(),
            },
            seq: BTreeMap::new(),
            agent_id: Iri::constant("http://invalid.invalid/placeholder"),
            plan_steps: BTreeMap::new(),
        };
        let agent_id = rec.mint("agent");
        rec.doc.agents.push(ProvAgent {
            id: agent_id.clone(),
            name: agent_name.to_owned(),
            version: agent_version.to_owned(),
        });
        rec.agent_id = agent_id;
        rec
    }

    fn mint(&mut self, kind: &'static str) -> Iri {
        let n = self.seq.entry(kind).or_insert(0);
        let id = Iri::new(format!("{}{kind}/{n}", self.doc.run_ns)).expect("minted prov IRI");
        *n += 1;
        id
    }

    pub fn agent_id(&self) -> &Iri {
        &self.agent_id
    }

    pub fn run_ns(&self) -> &Iri {
        &self.doc.run_ns
    }

    /// Prospective half: one plan entity plus one plan-step entity per
    /// stage `(step_label, stage_name)`, chained in execution order by
    /// `wasDerivedFrom` (later step derived from earlier).
    pub fn build_plan(&mut self, stages: &[(String, String)]) -> Result<(), ProvError> {
        if stages.is_empty() {
            return Err(ProvError::EmptyPipeline);
        }
        for (label, _) in stages {
            if !WORKFLOW_STEPS.contains(&label.as_str()) {
                return Err(ProvError::BadDocument {
                    reason: format!("{label:?} is not a workflow step label"),
                });
            }
        }
        let plan_id = self.mint("plan");
        self.doc.entities.push(ProvEntity {
            id: plan_id,
            kind: EntityKind::Plan,
            labels: BTreeMap::from([("name".to_owned(), "pipeline plan".to_owned())]),
        });
        let mut prev: Option<Iri> = None;
        for (label, name) in stages {
            let id = self.mint("plan_step");
            self.doc.entities.push(ProvEntity {
                id: id.clone(),
                kind: EntityKind::PlanStep,
                labels: BTreeMap::from([
                    ("step".to_owned(), label.clone()),
                    ("name".to_owned(), name.clone()),
                ]),
            });
            if let Some(prev) = prev {
                self.doc.was_derived_from.push((id.clone(), prev));
            }
            self.plan_steps.insert(label.clone(), id.clone());
            prev = Some(id);
        }
        Ok(())
    }

    pub fn add_entity(&mut self, kind: EntityKind, labels: &[(&str, &str)]) -> Iri {
        let id = self.mint(match kind {
            EntityKind::File => "file",
            EntityKind::Dataset => "dataset",
            EntityKind::Graph => "graph",
            EntityKind::Plan => "plan",
            EntityKind::PlanStep => "plan_step",
        });
        self.doc.entities.push(ProvEntity {
            id: id.clone(),
            kind,
            labels: labels
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        });
        id
    }

    /// Retrospective half: record one executed activity with its used
    /// inputs, generated outputs, agent association, and `hadPlan` link
    /// to the plan step carrying `step_label`.
    #[allow(clippy::too_many_arguments)]
    pub fn record_activity(
        &mut self,
        step_label: &str,
        started: DateTime<Utc>,
        ended: DateTime<Utc>,
        status: Status,
        inputs: &[Iri],
        outputs: &[Iri],
        labels: &[(&str, &str)],
    ) -> Result<Iri, ProvError> {
        let Some(plan_step) = self.plan_steps.get(step_label).cloned() else {
            return Err(ProvError::UnknownPlanStep(step_label.to_owned()));
        };
        let id = self.mint("activity");
        self.doc.activities.push(ProvActivity {
            id: id.clone(),
            step_label: step_label.to_owned(),
            started,
            ended,
            status,
            labels: labels
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        });
        for e in inputs {
            self.doc.used.push((id.clone(), e.clone()));
        }
        for e in outputs {
            self.doc.was_generated_by.push((e.clone(), id.clone()));
        }
        self.doc.was_associated_with.push(Association {
            activity: id.clone(),
            agent: self.agent_id.clone(),
            plan: Some(plan_step),
        });
        Ok(id)
    }

    /// Record a retrospective derivation edge (e.g. the output file
    /// wasDerivedFrom the input dataset).
    pub fn derive(&mut self, derived: &Iri, source: &Iri) {
        self.doc.was_derived_from.push((derived.clone(), source.clone()));
    }

    pub fn into_document(self) -> ProvDocument {
        self.doc
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProvFormat {
    NTriples,
    ProvJson,
}

impl ProvFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ntriples" => Some(ProvFormat::NTriples),
            "provjson" => Some(ProvFormat::ProvJson),
            _ => None,
        }
    }
}

pub fn serialize_prov(doc: &ProvDocument, format: ProvFormat) -> String {
    match format {
        ProvFormat::NTriples => serialize_ntriples(&doc.to_graph()),
        ProvFormat::ProvJson => serialize_prov_json(doc),
    }
}

fn curie(doc: &ProvDocument, id: &Iri) -> String {
    match id.as_str().strip_prefix(doc.run_ns.as_str()) {
        Some(local) => format!("run:{local}"),
        None => id.as_str().to_owned(),
    }
}

/// PROV-JSON with sorted keys and 2-space indentation; empty sections
/// are omitted, so an empty document serializes as `{"prefix": ...}`.
pub fn serialize_prov_json(doc: &ProvDocument) -> String {
    let mut root = Map::new();
    root.insert(
        "prefix".into(),
        json!({
            "flt": vocab::FLT_NS,
            "prov": vocab::PROV_NS,
            "run": doc.run_ns.as_str(),
        }),
    );

    let mut entities = Map::new();
    for e in &doc.entities {
        let mut attrs = Map::new();
        attrs.insert("flt:kind".into(), Value::String(e.kind.as_str().to_owned()));
        for (k, v) in &e.labels {
            attrs.insert(format!("flt:{k}"), Value::String(v.clone()));
        }
        entities.insert(curie(doc, &e.id), Value::Object(attrs));
    }
    if !entities.is_empty() {
        root.insert("entity".into(), Value::Object(entities));
    }

    let mut activities = Map::new();
    for a in &doc.activities {
        let mut attrs = Map::new();
        attrs.insert("flt:status".into(), Value::String(a.status.as_str().to_owned()));
        attrs.insert("flt:step".into(), Value::String(a.step_label.clone()));
        for (k, v) in &a.labels {
            attrs.insert(format!("flt:{k}"), Value::String(v.clone()));
        }
        attrs.insert(
            "prov:endedAtTime".into(),
            Value::String(to_xsd_datetime(a.ended)),
        );
        attrs.insert(
            "prov:startedAtTime".into(),
            Value::String(to_xsd_datetime(a.started)),
        );
        activities.insert(curie(doc, &a.id), Value::Object(attrs));
    }
    if !activities.is_empty() {
        root.insert("activity".into(), Value::Object(activities));
    }

    let mut agents = Map::new();
    for ag in &doc.agents {
        agents.insert(
            curie(doc, &ag.id),
            json!({
                "flt:name": ag.name,
                "flt:version": ag.version,
            }),
        );
    }
    if !agents.is_empty() {
        root.insert("agent".into(), Value::Object(agents));
    }

    let mut used = Map::new();
    for (i, (a, e)) in doc.used.iter().enumerate() {
        used.insert(
            format!("run:u{i}"),
            json!({
                "prov:activity": curie(doc, a),
                "prov:entity": curie(doc, e),
            }),
        );
    }
    if !used.is_empty() {
        root.insert("used".into(), Value::Object(used));
    }

    let mut wgb = Map::new();
    for (i, (e, a)) in doc.was_generated_by.iter().enumerate() {
        wgb.insert(
            format!("run:g{i}"),
            json!({
                "prov:activity": curie(doc, a),
                "prov:entity": curie(doc, e),
            }),
        );
    }
    if !wgb.is_empty() {
        root.insert("wasGeneratedBy".into(), Value::Object(wgb));
    }

    let mut waw = Map::new();
    for (i, assoc) in doc.was_associated_with.iter().enumerate() {
        let mut rec = Map::new();
        rec.insert(
            "prov:activity".into(),
            Value::String(curie(doc, &assoc.activity)),
        );
        rec.insert("prov:agent".into(), Value::String(curie(doc, &assoc.agent)));
        if let Some(plan) = &assoc.plan {
            rec.insert("prov:plan".into(), Value::String(curie(doc, plan)));
        }
        waw.insert(format!("run:a{i}"), Value::Object(rec));
    }
    if !waw.is_empty() {
        root.insert("wasAssociatedWith".into(), Value::Object(waw));
    }

    let mut wdf = Map::new();
    for (i, (d, s)) in doc.was_derived_from.iter().enumerate() {
        wdf.insert(
            format!("run:d{i}"),
            json!({
                "prov:generatedEntity": curie(doc, d),
                "prov:usedEntity": curie(doc, s),
            }),
        );
    }
    if !wdf.is_empty() {
        root.insert("wasDerivedFrom".into(), Value::Object(wdf));
    }

    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("prov json");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// PROV-JSON reading (for `prov export` and the parity check)
// ---------------------------------------------------------------------------

/// Expand a PROV-JSON identifier: CURIE against the declared prefixes,
/// or an absolute IRI as-is.
fn expand_id(id: &str, prefixes: &BTreeMap<String, String>) -> Result<Iri, ProvError> {
    if let Some((label, local)) = id.split_once(':') {
        if let Some(ns) = prefixes.get(label) {
            return Iri::new(format!("{ns}{local}")).map_err(|e| ProvError::BadDocument {
                reason: format!("bad expanded id {id:?}: {e}"),
            });
        }
    }
    Iri::new(id).map_err(|e| ProvError::BadDocument {
        reason: format!("id {id:?} is neither a declared CURIE nor an IRI: {e}"),
    })
}

/// Recover the RDF fact set from a PROV-JSON document. The result
/// equals `doc.to_graph()` for documents this toolkit wrote — the
/// serialization-parity invariant.
pub fn prov_json_to_graph(text: &str) -> Result<Graph, ProvError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ProvError::BadDocument {
        reason: format!("invalid JSON: {e}"),
    })?;
    let root = root.as_object().ok_or_else(|| ProvError::BadDocument {
        reason: "top level is not an object".into(),
    })?;

    let mut prefixes = BTreeMap::new();
    if let Some(p) = root.get("prefix") {
        let p = p.as_object().ok_or_else(|| ProvError::BadDocument {
            reason: "\"prefix\" is not an object".into(),
        })?;
        for (label, ns) in p {
            let ns = ns.as_str().ok_or_else(|| ProvError::BadDocument {
                reason: format!("prefix {label:?} is not a string"),
            })?;
            prefixes.insert(label.clone(), ns.to_owned());
        }
    }

    let mut g = Graph::new();
    let section = |key: &str| -> Result<Vec<(String, Map<String, Value>)>, ProvError> {
        match root.get(key) {
            None => Ok(Vec::new()),
            Some(v) => {
                let obj = v.as_object().ok_or_else(|| ProvError::BadDocument {
                    reason: format!("{key:?} is not an object"),
                })?;
                let mut out = Vec::new();
                for (id, rec) in obj {
                    let rec = rec.as_object().ok_or_else(|| ProvError::BadDocument {
                        reason: format!("{key:?} record {id:?} is not an object"),
                    })?;
                    out.push((id.clone(), rec.clone()));
                }
                Ok(out)
            }
        }
    };
    let attr_str = |rec: &Map<String, Value>, key: &str, id: &str| -> Result<String, ProvError> {
        rec.get(key)
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| ProvError::BadDocument {
                reason: format!("record {id:?} is missing {key:?}"),
            })
    };

    // Element sections: type triple + attribute triples.
    for (section_key, type_iri) in [
        ("entity", vocab::PROV_ENTITY),
        ("activity", vocab::PROV_ACTIVITY),
        ("agent", vocab::PROV_SOFTWARE_AGENT),
    ] {
        for (id, attrs) in section(section_key)? {
            let subject = expand_id(&id, &prefixes)?;
            g.insert(Triple::new(
                subject.clone(),
                vocab::iri(vocab::RDF_TYPE),
                Term::iri(vocab::iri(type_iri)),
            ));
            for (k, v) in &attrs {
                let v = v.as_str().ok_or_else(|| ProvError::BadDocument {
                    reason: format!("attribute {k:?} of {id:?} is not a string"),
                })?;
                let object = match k.as_str() {
                    "prov:startedAtTime" | "prov:endedAtTime" => Term::literal(
                        Literal::typed(v, vocab::iri(vocab::XSD_DATE_TIME))
                            .expect("dateTime literal"),
                    ),
                    _ => Term::literal(Literal::string(v)),
                };
                let predicate = expand_id(k, &prefixes)?;
                g.insert(Triple::new(subject.clone(), predicate, object));
            }
        }
    }

    // Relation sections.
    for (id, rec) in section("used")? {
        let a = expand_id(&attr_str(&rec, "prov:activity", &id)?, &prefixes)?;
        let e = expand_id(&attr_str(&rec, "prov:entity", &id)?, &prefixes)?;
        g.insert(Triple::new(a, vocab::iri(vocab::PROV_USED), Term::iri(e)));
    }
    for (id, rec) in section("wasGeneratedBy")? {
        let a = expand_id(&attr_str(&rec, "prov:activity", &id)?, &prefixes)?;
        let e = expand_id(&attr_str(&rec, "prov:entity", &id)?, &prefixes)?;
        g.insert(Triple::new(
            e,
            vocab::iri(vocab::PROV_WAS_GENERATED_BY),
            Term::iri(a),
        ));
    }
    for (id, rec) in section("wasAssociatedWith")? {
        let a = expand_id(&attr_str(&rec, "prov:activity", &id)?, &prefixes)?;
        let ag = expand_id(&attr_str(&rec, "prov:agent", &id)?, &prefixes)?;
        g.insert(Triple::new(
            a.clone(),
            vocab::iri(vocab::PROV_WAS_ASSOCIATED_WITH),
            Term::iri(ag),
        ));
        if let Some(plan) = rec.get("prov:plan").and_then(Value::as_str) {
            let plan = expand_id(plan, &prefixes)?;
            g.insert(Triple::new(
                a,
                vocab::iri(vocab::PROV_HAD_PLAN),
                Term::iri(plan),
            ));
        }
    }
    for (id, rec) in section("wasDerivedFrom")? {
        let d = expand_id(&attr_str(&rec, "prov:generatedEntity", &id)?, &prefixes)?;
        let s = expand_id(&attr_str(&rec, "prov:usedEntity", &id)?, &prefixes)?;
        g.insert(Triple::new(
            d,
            vocab::iri(vocab::PROV_WAS_DERIVED_FROM),
            Term::iri(s),
        ));
    }

    Ok(g)
}
