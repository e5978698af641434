//! HTTP API over a built CDN directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use chrono::FixedOffset;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;
use tscdn_core::analytics::{self, ChannelRanking};
use tscdn_core::corpus::{Corpus, EventId};
use tscdn_core::index::{load_index, CoalesceConfig, InvertedIndex, ScoredEvent};
use tscdn_core::pipeline::{self, config_dir};
use tscdn_core::scoring::{adapt_categories, load_categories, term_vector, Analyzer, CategoryVector};
use tscdn_core::store::{ArchiveStats, ContentStore};
use tscdn_core::{Error, Exec};

use crate::params::{ParamError, SearchParams, DEFAULT_LIMIT};

/// Coalesced index written next to `index.json` by `tscdn index --coalesce`.
pub const COALESCED_INDEX_FILE: &str = "index.coalesced.json";

pub fn coalesced_index_path(cdn: &Path) -> PathBuf {
    cdn.join(COALESCED_INDEX_FILE)
}

/// Everything a request needs, loaded once at startup.
pub struct AppState {
    pub root: PathBuf,
    pub store: ContentStore,
    pub corpus: Corpus,
    pub index: InvertedIndex,
    pub coalesced: InvertedIndex,
    pub analyzer: Analyzer,
    pub categories: Vec<CategoryVector>,
    pub zone: FixedOffset,
}

impl AppState {
    pub fn load(root: &Path, zone: FixedOffset) -> anyhow::Result<Self> {
        let store = ContentStore::open_existing(root)
            .with_context(|| format!("{} is not a CDN directory (run `tscdn ingest` first)", root.display()))?;
        let index_path = pipeline::index_path(root);
        if !index_path.is_file() {
            bail!(
                "no search index at {}; build it with `tscdn index {}`",
                index_path.display(),
                root.display()
            );
        }
        let index = load_index(&index_path)
            .with_context(|| format!("cannot load {}; rebuild it with `tscdn index {}`", index_path.display(), root.display()))?;
        let coalesced_path = coalesced_index_path(root);
        let coalesced = if coalesced_path.is_file() {
            load_index(&coalesced_path).with_context(|| format!("cannot load {}", coalesced_path.display()))?
        } else {
            index.coalesced(CoalesceConfig::default(), Exec::default())?
        };
        let (corpus, _) = pipeline::load_corpus(root)?;
        let config = config_dir(root);
        let analyzer = Analyzer::from_config_dir(&config)?;
        let categories = load_categories(&config, &analyzer)?;
        Ok(AppState {
            root: root.to_path_buf(),
            store,
            corpus,
            index,
            coalesced,
            analyzer,
            categories,
            zone,
        })
    }

    fn index_for(&self, p: &SearchParams) -> Result<&InvertedIndex, ApiError> {
        Ok(if p.coalesced()? { &self.coalesced } else { &self.index })
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found".into(),
            message: message.into(),
        }
    }
}

impl From<ParamError> for ApiError {
    fn from(e: ParamError) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: e.code.into(),
            message: e.message,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::EmptyQuery | Error::InvalidInterval { .. } | Error::InvalidArgument(_) | Error::EmptyCorpus => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            code: e.code().into(),
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, json_bytes(&body)).into_response()
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Response {
    match serde_json::to_vec(value) {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

/// Results of `/api/search` for the given parameters.
pub fn search(state: &AppState, p: &SearchParams) -> Result<Vec<ScoredEvent>, ApiError> {
    let spec = p.to_spec(Some(DEFAULT_LIMIT))?;
    Ok(state.index_for(p)?.query(&state.analyzer, &spec)?)
}

#[derive(Debug, Serialize)]
pub struct StatsBody {
    pub objects: usize,
    pub archives: usize,
    pub channels: usize,
    pub events: usize,
    pub versions: usize,
    pub terms: usize,
    pub postings: usize,
    pub postings_coalesced: usize,
    pub built_at: chrono::DateTime<chrono::Utc>,
    pub media: ArchiveStats,
}

pub fn stats(state: &AppState) -> StatsBody {
    StatsBody {
        objects: state.store.object_count(),
        archives: state.store.dictionaries().len(),
        channels: state.corpus.channels.len(),
        events: state.corpus.event_count(),
        versions: state.corpus.version_count(),
        terms: state.index.term_count(),
        postings: state.index.entry_count(),
        postings_coalesced: state.coalesced.entry_count(),
        built_at: state.index.built_at,
        media: state.store.stats(),
    }
}

#[derive(Debug, Deserialize)]
pub struct CategoryParams {
    pub event: Option<String>,
}

pub fn categories(state: &AppState, p: &CategoryParams) -> Result<serde_json::Value, ApiError> {
    let raw = p.event.as_deref().unwrap_or_default();
    let id: EventId = raw.parse().map_err(|_| ParamError {
        code: "invalid_parameter",
        message: format!("parameter event={raw:?}: expected channel/id"),
    })?;
    let latest = state
        .corpus
        .latest(&id)
        .ok_or_else(|| ApiError::not_found(format!("no event {id}")))?;
    let vector = term_vector(&state.analyzer.terms(&latest.text), &state.index.stats)?;
    Ok(json!({
        "event": id,
        "timestamp": latest.timestamp,
        "text": latest.text,
        "scores": adapt_categories(&vector, &state.categories),
    }))
}

pub fn router(state: Arc<AppState>, ui: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/api/search", get(search_handler))
        .route("/api/trends", get(trends_handler))
        .route("/api/weekend", get(weekend_handler))
        .route("/api/daily", get(daily_handler))
        .route("/api/channels", get(channels_handler))
        .route("/api/stats", get(stats_handler))
        .route("/api/categories", get(categories_handler))
        .route("/cdn/{name}", get(cdn_handler))
        .with_state(state);
    match ui {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::not_found("no such route") }),
    }
}

type Shared = State<Arc<AppState>>;

async fn search_handler(State(s): Shared, Query(p): Query<SearchParams>) -> Result<Response, ApiError> {
    Ok(json_bytes(&search(&s, &p)?))
}

async fn trends_handler(State(s): Shared, Query(p): Query<SearchParams>) -> Result<Response, ApiError> {
    let spec = p.to_spec(None)?;
    let series = analytics::trend_series(s.index_for(&p)?, &s.analyzer, &spec, p.granularity()?)?;
    Ok(json_bytes(&series))
}

async fn weekend_handler(State(s): Shared, Query(p): Query<SearchParams>) -> Result<Response, ApiError> {
    let spec = p.to_spec(None)?;
    let window = analytics::weekend_window(s.index_for(&p)?, &s.analyzer, &spec, &p.months()?, s.zone)?;
    Ok(json_bytes(&window))
}

async fn daily_handler(State(s): Shared, Query(p): Query<SearchParams>) -> Result<Response, ApiError> {
    let spec = p.to_spec(None)?;
    Ok(json_bytes(&analytics::daily_average(s.index_for(&p)?, &s.analyzer, &spec)?))
}

async fn channels_handler(State(s): Shared) -> Response {
    let rankings: Vec<ChannelRanking> = analytics::channel_rankings(&s.corpus, &s.store);
    json_bytes(&rankings)
}

async fn stats_handler(State(s): Shared) -> Response {
    json_bytes(&stats(&s))
}

async fn categories_handler(State(s): Shared, Query(p): Query<CategoryParams>) -> Result<Response, ApiError> {
    Ok(json_bytes(&categories(&s, &p)?))
}

async fn cdn_handler(State(s): Shared, UrlPath(name): UrlPath<String>) -> Result<Response, ApiError> {
    let object = s
        .store
        .get_by_name(&name)
        .ok_or_else(|| ApiError::not_found(format!("no object {name}")))?;
    let path = s.store.object_path(&object.stored_name());
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|_| ApiError::not_found(format!("object {name} is catalogued but missing on disk")))?;
    let mime = mime_guess::from_path(&name).first_or_octet_stream();
    Ok((
        [
            (header::CONTENT_TYPE, mime.to_string()),
            (header::CACHE_CONTROL, "public, max-age=31536000, immutable".to_string()),
        ],
        bytes,
    )
        .into_response())
}
