//! The review API: proposed patterns with sample excerpts, candidate
//! records with their evidence, decisions and export.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::Context;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gzm_core::annotator::ConsistentSequence;
use gzm_core::corpus::Corpus;
use gzm_core::knowledge_base::KnowledgeBase;
use gzm_core::pattern_miner::{
    match_filter_patterns, patterns_tsv, records_tsv, CandidateRecord, Excerpt, FilterPattern, MatchType,
    PatternStatus, RecordRow, RecordSource,
};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::review::{self, DecisionLog, ReviewDecision, TargetKind, Verdict};

/// Characters of context shown on each side of a record's evidence.
pub const CONTEXT_CHARS: usize = 30;
const SAMPLES_PER_PATTERN: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Highlight {
    pub role: String,
    /// Offsets into the accompanying `text`, in characters.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SampleView {
    pub doc_id: String,
    pub dynasty: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub highlights: Vec<Highlight>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PatternView {
    pub id: String,
    pub sequence: Vec<String>,
    pub support: usize,
    pub status: PatternStatus,
    pub samples: Vec<SampleView>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RecordView {
    pub id: String,
    pub dynasty: Option<String>,
    pub official_name: String,
    pub style_name: Option<String>,
    pub doc_id: String,
    pub name_start: usize,
    pub source: RecordSource,
    pub match_type: Option<MatchType>,
    pub status: PatternStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EvidenceView {
    pub record_id: String,
    pub doc_id: String,
    /// Document offsets of the context window.
    pub context_start: usize,
    pub context_end: usize,
    pub text: String,
    pub highlights: Vec<Highlight>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DecisionBody {
    pub verdict: Verdict,
    pub reviewer: String,
    #[serde(default)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExportSummary {
    pub patterns_approved: usize,
    pub records_approved: usize,
    pub kb_entries: usize,
    pub kb_persons: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct RecordFilter {
    pub status: Option<String>,
    pub source: Option<String>,
    pub match_type: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

/// Everything the service reads at startup plus the live decision log.
pub struct ReviewService {
    corpus: Corpus,
    kb: KnowledgeBase,
    patterns: Vec<FilterPattern>,
    samples: BTreeMap<String, Vec<SampleView>>,
    records: Vec<(String, RecordRow)>,
    export_dir: PathBuf,
    log: Mutex<DecisionLog>,
}

impl ReviewService {
    /// `sequences` supply the sample excerpts for each pattern.
    pub fn new(
        corpus: Corpus,
        kb: KnowledgeBase,
        sequences: &[ConsistentSequence],
        patterns: Vec<FilterPattern>,
        records: Vec<RecordRow>,
        state_dir: &Path,
    ) -> anyhow::Result<Self> {
        let mut samples = BTreeMap::new();
        for p in &patterns {
            let probe = [p.clone().approved()];
            let views = match_filter_patterns(sequences, &probe, &corpus)
                .iter()
                .take(SAMPLES_PER_PATTERN)
                .map(sample_view)
                .collect();
            samples.insert(p.id.clone(), views);
        }
        let records = records.into_iter().map(|r| (review::record_id(&r.record), r)).collect();
        let log = DecisionLog::open(state_dir.join("decisions.jsonl"))?;
        Ok(ReviewService {
            corpus,
            kb,
            patterns,
            samples,
            records,
            export_dir: state_dir.join("export"),
            log: Mutex::new(log),
        })
    }

    fn verdicts(&self, kind: TargetKind) -> BTreeMap<String, Verdict> {
        self.log.lock().expect("decision log lock").status_map(kind)
    }

    pub fn patterns(&self) -> Vec<PatternView> {
        let verdicts = self.verdicts(TargetKind::Pattern);
        let mut out: Vec<PatternView> = self
            .patterns
            .iter()
            .map(|p| PatternView {
                id: p.id.clone(),
                sequence: p.sequence.iter().map(|l| l.as_str().to_string()).collect(),
                support: p.support,
                status: verdicts.get(&p.id).map_or(p.status, |v| v.status()),
                samples: self.samples.get(&p.id).cloned().unwrap_or_default(),
            })
            .collect();
        out.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.id.cmp(&b.id)));
        out
    }

    pub fn records(&self) -> Vec<RecordView> {
        let verdicts = self.verdicts(TargetKind::Record);
        self.records
            .iter()
            .map(|(id, row)| {
                let r = &row.record;
                RecordView {
                    id: id.clone(),
                    dynasty: r.dynasty.clone(),
                    official_name: r.official_name.clone(),
                    style_name: r.style_name.clone(),
                    doc_id: r.doc_id.clone(),
                    name_start: r.name_start,
                    source: r.source,
                    match_type: row.match_type,
                    status: verdicts.get(id).map_or(PatternStatus::Proposed, |v| v.status()),
                }
            })
            .collect()
    }

    fn record(&self, id: &str) -> Option<&CandidateRecord> {
        self.records.iter().find(|(rid, _)| rid == id).map(|(_, r)| &r.record)
    }

    pub fn evidence(&self, id: &str) -> Option<EvidenceView> {
        let rec = self.record(id)?;
        let doc = self.corpus.get(&rec.doc_id)?;
        let chars = doc.chars();
        let name_end = (rec.name_start + rec.official_name.chars().count()).min(chars.len());
        let style = rec.style_name.as_ref().and_then(|s| {
            let s: Vec<char> = s.chars().collect();
            (name_end..chars.len().min(name_end + 6))
                .find(|&i| chars[i..].starts_with(&s))
                .map(|i| (i, i + s.len()))
        });
        let ev_end = style.map_or(name_end, |(_, e)| e);
        let context_start = rec.name_start.saturating_sub(CONTEXT_CHARS);
        let context_end = (ev_end + CONTEXT_CHARS).min(chars.len());
        let mut highlights = vec![Highlight {
            role: "name".into(),
            start: rec.name_start - context_start,
            end: name_end - context_start,
        }];
        if let Some((s, e)) = style {
            highlights.push(Highlight {
                role: "style".into(),
                start: s - context_start,
                end: e - context_start,
            });
        }
        Some(EvidenceView {
            record_id: id.to_string(),
            doc_id: rec.doc_id.clone(),
            context_start,
            context_end,
            text: doc.slice(context_start, context_end),
            highlights,
        })
    }

    pub fn decide(&self, kind: TargetKind, id: &str, body: DecisionBody) -> Result<ReviewDecision, ApiError> {
        let known = match kind {
            TargetKind::Pattern => self.patterns.iter().any(|p| p.id == id),
            TargetKind::Record => self.record(id).is_some(),
        };
        if !known {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                format!("no {kind:?} with id `{id}`").to_lowercase(),
            ));
        }
        let decision = ReviewDecision {
            target_kind: kind,
            target_id: id.to_string(),
            verdict: body.verdict,
            reviewer: body.reviewer,
            timestamp: body.timestamp.unwrap_or_else(review::now),
        };
        self.log
            .lock()
            .expect("decision log lock")
            .append(decision.clone())
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        Ok(decision)
    }

    /// Writes the merged knowledge base, the pattern file with current
    /// statuses and the approved records.
    pub fn export(&self) -> anyhow::Result<ExportSummary> {
        let pattern_verdicts = self.verdicts(TargetKind::Pattern);
        let record_verdicts = self.verdicts(TargetKind::Record);
        let mut patterns = self.patterns.clone();
        review::apply_pattern_decisions(&mut patterns, &pattern_verdicts);
        let approved: Vec<&RecordRow> = self
            .records
            .iter()
            .filter(|(id, _)| record_verdicts.get(id) == Some(&Verdict::Approve))
            .map(|(_, r)| r)
            .collect();
        let approved_records: Vec<CandidateRecord> = approved.iter().map(|r| r.record.clone()).collect();
        let merged = self.kb.merge_records(&approved_records);

        fs::create_dir_all(&self.export_dir).with_context(|| format!("cannot create {}", self.export_dir.display()))?;
        let rows: Vec<RecordRow> = approved.into_iter().cloned().collect();
        let files = [
            ("kb_entries.tsv", merged.entries_tsv()),
            ("kb_persons.tsv", merged.persons_tsv()),
            ("patterns.tsv", patterns_tsv(&patterns)),
            ("approved_records.tsv", records_tsv(&rows)),
        ];
        let mut written = Vec::new();
        for (name, body) in files {
            let path = self.export_dir.join(name);
            fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path.display().to_string());
        }
        Ok(ExportSummary {
            patterns_approved: patterns.iter().filter(|p| p.status == PatternStatus::Approved).count(),
            records_approved: rows.len(),
            kb_entries: merged.entries().len(),
            kb_persons: merged.person_count(),
            files: written,
        })
    }
}

fn sample_view(ex: &Excerpt) -> SampleView {
    SampleView {
        doc_id: ex.doc_id.clone(),
        dynasty: ex.dynasty.clone(),
        start: ex.start,
        end: ex.end,
        text: ex.text.clone(),
        highlights: ex
            .spans
            .iter()
            .map(|s| Highlight {
                role: s.label.as_str().to_string(),
                start: s.start - ex.start,
                end: s.end - ex.start,
            })
            .collect(),
    }
}

type Shared = Arc<ReviewService>;

async fn list_patterns(State(svc): State<Shared>) -> Json<Vec<PatternView>> {
    Json(svc.patterns())
}

async fn decide_pattern(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<DecisionBody>,
) -> ApiResult<PatternView> {
    svc.decide(TargetKind::Pattern, &id, body)?;
    let view = svc
        .patterns()
        .into_iter()
        .find(|p| p.id == id)
        .expect("decided pattern exists");
    Ok(Json(view))
}

async fn list_records(State(svc): State<Shared>, Query(filter): Query<RecordFilter>) -> ApiResult<Vec<RecordView>> {
    let status = filter
        .status
        .as_deref()
        .map(str::parse::<PatternStatus>)
        .transpose()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let source = filter
        .source
        .as_deref()
        .map(str::parse::<RecordSource>)
        .transpose()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let out = svc
        .records()
        .into_iter()
        .filter(|r| status.is_none_or(|s| r.status == s))
        .filter(|r| source.is_none_or(|s| r.source == s))
        .filter(|r| {
            filter
                .match_type
                .as_deref()
                .is_none_or(|m| r.match_type.is_some_and(|t| t.to_string().eq_ignore_ascii_case(m)))
        })
        .collect();
    Ok(Json(out))
}

async fn decide_record(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<DecisionBody>,
) -> ApiResult<RecordView> {
    svc.decide(TargetKind::Record, &id, body)?;
    let view = svc
        .records()
        .into_iter()
        .find(|r| r.id == id)
        .expect("decided record exists");
    Ok(Json(view))
}

async fn excerpt(State(svc): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<EvidenceView> {
    svc.evidence(&id)
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no record with id `{id}`")))
}

async fn export(State(svc): State<Shared>) -> ApiResult<ExportSummary> {
    svc.export()
        .map(Json)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("{e:#}")))
}

const INDEX: &str = "<!doctype html><meta charset=utf-8><title>gzm review</title>\
<h1>gzm review API</h1><ul>\
<li>GET /api/patterns<li>POST /api/patterns/{id}/decision\
<li>GET /api/records?status=<li>POST /api/records/{id}/decision\
<li>GET /api/excerpts/{id}<li>POST /api/export</ul>";

/// The API routes, with `ui_dir` served as the static bundle when given.
pub fn router(service: Arc<ReviewService>, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/patterns", get(list_patterns))
        .route("/api/patterns/{id}/decision", post(decide_pattern))
        .route("/api/records", get(list_records))
        .route("/api/records/{id}/decision", post(decide_record))
        .route("/api/excerpts/{id}", get(excerpt))
        .route("/api/export", post(export))
        .with_state(service);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX) })),
    }
}

pub async fn serve(service: ReviewService, addr: SocketAddr, ui_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("cannot listen on {addr}"))?;
    eprintln!("review service listening on http://{}", listener.local_addr()?);
    let app = router(Arc::new(service), ui_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("review service stopped")
}
