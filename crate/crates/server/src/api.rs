//! JSON/multipart HTTP API over the comparison pipeline and the store.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Path, RawQuery, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use duet_core::diff::DiffReport;
use duet_core::feedback::{paraphrase_feedback, FeedbackBundle, Lexicon, TemplateSet};
use duet_core::gateway::{Gateway, GatewayError, Secret, MAX_IMAGE_BYTES};
use duet_core::misconception::MisconceptionTag;
use duet_core::pipeline::{compare, parse_role, CompareOptions, PipelineError, Role};
use duet_core::store::{MisconceptionStats, ReferenceRecord, Store, StoreError, SubmissionRecord};
use duet_core::{detect_kind, DiagramKind, ParseDiagnostic, ParseError};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

pub const MAX_REQUEST_BYTES: usize = 10 * 1024 * 1024;
pub const VISION_KEY_HEADER: &str = "x-duet-vision-key";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub gateway: Arc<Gateway>,
    pub templates: Arc<TemplateSet>,
    pub lexicon: Arc<Lexicon>,
}

impl AppState {
    pub fn new(store: Store, gateway: Gateway) -> Self {
        AppState {
            store: Arc::new(store),
            gateway: Arc::new(gateway),
            templates: Arc::new(TemplateSet::default()),
            lexicon: Arc::new(Lexicon::default()),
        }
    }
}

/// Body of every 4xx and 5xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<ParseDiagnostic>>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status: status.as_u16(), code: code.to_string(), message: message.into(), diagnostics: None }
    }

    fn with_diagnostics(mut self, diagnostics: &[ParseDiagnostic]) -> Self {
        self.diagnostics = Some(diagnostics.to_vec());
        self
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()).with_diagnostics(&e.diagnostics)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Parse { error, .. } => error.into(),
            PipelineError::Template(t) => ApiError::internal(t.to_string()),
            other => ApiError::new(StatusCode::BAD_REQUEST, other.code(), other.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownReference(_) | StoreError::UnknownSubmission(_) => {
                ApiError::new(StatusCode::NOT_FOUND, e.code(), e.to_string())
            }
            StoreError::InvalidReference(p) => p.into(),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        let status = match &e {
            GatewayError::OfflineMode => StatusCode::CONFLICT,
            GatewayError::UnsupportedImage(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            GatewayError::TemplateNotFound(_) | GatewayError::TemplateIo { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_GATEWAY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct CorsConfig {
    /// Allowed origins; empty allows any.
    pub origins: Vec<String>,
}

pub fn router(state: AppState, cors: &CorsConfig) -> Router {
    let origins = if cors.origins.is_empty() {
        AllowOrigin::from(Any)
    } else {
        AllowOrigin::list(cors.origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::HeaderName::from_static(VISION_KEY_HEADER)]);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/references", get(list_references).post(create_reference))
        .route("/api/references/{id}", get(get_reference))
        .route("/api/references/{id}/submissions", get(list_submissions).post(create_submission))
        .route("/api/references/{id}/batch", post(batch))
        .route("/api/references/{id}/analytics", get(analytics))
        .route("/api/submissions/{id}", get(get_submission))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this endpoint")
        })
        .layer(axum::extract::DefaultBodyLimit::max(MAX_REQUEST_BYTES))
        .layer(middleware::from_fn(access_log))
        .layer(cors)
        .with_state(state)
}

async fn access_log(request: Request, next: Next) -> Response {
    let method = request.method().clone();
    let path = request.uri().path().to_string();
    let response = next.run(request).await;
    log::info!("{method} {path} -> {}", response.status().as_u16());
    response
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    offline: bool,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health { status: "ok", offline: state.gateway.is_offline() })
}

fn parse_kind(text: &str) -> Result<DiagramKind, ApiError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "class" | "class_diagram" => Ok(DiagramKind::ClassDiagram),
        "er" | "er_diagram" => Ok(DiagramKind::ERDiagram),
        other => Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_kind", format!("unknown diagram kind `{other}`; use class or er"))),
    }
}

/// One uploaded part: a form field or a file.
struct Part {
    name: String,
    file_name: Option<String>,
    data: Bytes,
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    let status = e.status();
    let code = if status == StatusCode::PAYLOAD_TOO_LARGE { "payload_too_large" } else { "invalid_multipart" };
    ApiError::new(status, code, e.body_text())
}

fn is_multipart(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.to_ascii_lowercase().starts_with("multipart/form-data"))
}

async fn read_parts(request: Request, state: &AppState) -> Result<Vec<Part>, ApiError> {
    let mut multipart = Multipart::from_request(request, state)
        .await
        .map_err(|e| ApiError::new(e.status(), "invalid_multipart", e.body_text()))?;
    let mut parts = Vec::new();
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let data = field.bytes().await.map_err(multipart_error)?;
        parts.push(Part { name, file_name, data });
    }
    Ok(parts)
}

async fn read_json<T: serde::de::DeserializeOwned>(request: Request) -> Result<T, ApiError> {
    let bytes = axum::body::to_bytes(request.into_body(), MAX_REQUEST_BYTES)
        .await
        .map_err(|_| ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", "request body exceeds 10 MiB"))?;
    serde_json::from_slice(&bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

fn utf8(data: &[u8], what: &str) -> Result<String, ApiError> {
    String::from_utf8(data.to_vec())
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_encoding", format!("{what} is not UTF-8 text")))
}

enum DiagramInput {
    Text(String),
    Image(Bytes),
}

fn diagram_input(parts: &[Part]) -> Result<DiagramInput, ApiError> {
    if let Some(p) = parts.iter().find(|p| p.name == "image") {
        return Ok(DiagramInput::Image(p.data.clone()));
    }
    if let Some(p) = parts.iter().find(|p| p.name == "plantuml" || p.name == "file") {
        return Ok(DiagramInput::Text(utf8(&p.data, "plantuml")?));
    }
    Err(ApiError::new(StatusCode::BAD_REQUEST, "missing_diagram", "send a `plantuml` field or an `image` file"))
}

fn vision_key(headers: &HeaderMap) -> Option<Secret> {
    headers.get(VISION_KEY_HEADER).and_then(|v| v.to_str().ok()).map(|v| Secret::new(v.trim()))
}

/// Converts an uploaded image through the gateway on a blocking thread.
async fn convert(state: &AppState, image: Bytes, kind: DiagramKind, key: Option<Secret>) -> Result<String, ApiError> {
    if state.gateway.is_offline() {
        return Err(GatewayError::OfflineMode.into());
    }
    if image.len() > MAX_IMAGE_BYTES {
        return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "image_too_large", "images are limited to 10 MiB"));
    }
    let gateway = state.gateway.clone();
    blocking(move || Ok(gateway.convert_image(&image, kind, key.as_ref())?.plantuml)).await
}

#[derive(Deserialize)]
struct NewReference {
    name: String,
    #[serde(default)]
    kind: Option<String>,
    plantuml: String,
}

#[derive(Serialize)]
struct Created {
    id: String,
}

async fn create_reference(State(state): State<AppState>, headers: HeaderMap, request: Request) -> Result<Response, ApiError> {
    let (name, kind, plantuml) = if is_multipart(&headers) {
        let parts = read_parts(request, &state).await?;
        let text_field = |n: &str| parts.iter().find(|p| p.name == n).map(|p| utf8(&p.data, n)).transpose();
        let kind = text_field("kind")?.map(|k| parse_kind(&k)).transpose()?;
        let input = diagram_input(&parts)?;
        let name = match text_field("name")? {
            Some(n) => n,
            None => parts
                .iter()
                .find_map(|p| p.file_name.clone())
                .unwrap_or_else(|| "reference".to_string()),
        };
        match input {
            DiagramInput::Text(text) => (name, kind, text),
            DiagramInput::Image(image) => {
                let kind = kind.ok_or_else(|| {
                    ApiError::new(StatusCode::BAD_REQUEST, "missing_kind", "image uploads need a `kind` field (class or er)")
                })?;
                (name, Some(kind), convert(&state, image, kind, vision_key(&headers)).await?)
            }
        }
    } else {
        let body: NewReference = read_json(request).await?;
        let kind = body.kind.as_deref().map(parse_kind).transpose()?;
        (body.name, kind, body.plantuml)
    };
    let kind = match kind {
        Some(k) => k,
        None => detect_kind(&plantuml)?,
    };
    let store = state.store.clone();
    let record = blocking(move || Ok(store.put_reference(&name, kind, &plantuml)?)).await?;
    Ok((StatusCode::CREATED, Json(Created { id: record.id })).into_response())
}

async fn list_references(State(state): State<AppState>) -> Json<Vec<ReferenceRecord>> {
    Json(state.store.list_references())
}

async fn get_reference(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<ReferenceRecord>, ApiError> {
    Ok(Json(state.store.get_reference(&id)?))
}

async fn get_submission(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SubmissionRecord>, ApiError> {
    Ok(Json(state.store.get_submission(&id)?))
}

async fn list_submissions(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Vec<SubmissionRecord>>, ApiError> {
    Ok(Json(state.store.list_submissions(&id)?))
}

async fn analytics(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<MisconceptionStats>, ApiError> {
    Ok(Json(state.store.aggregate(&id)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionResponse {
    pub submission_id: String,
    pub diff_report: DiffReport,
    pub tags: Vec<MisconceptionTag>,
    pub feedback: FeedbackBundle,
}

fn paraphrase_flag(query: Option<&str>) -> Result<bool, ApiError> {
    let value = query
        .unwrap_or_default()
        .split('&')
        .filter_map(|kv| kv.split_once('=').or(Some((kv, "true"))))
        .find(|(k, _)| *k == "paraphrase")
        .map(|(_, v)| v);
    match value {
        None | Some("false") | Some("0") => Ok(false),
        Some("true") | Some("1") => Ok(true),
        Some(other) => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_query",
            format!("paraphrase must be true or false, not `{other}`"),
        )),
    }
}

#[derive(Deserialize)]
struct NewSubmission {
    plantuml: String,
}

/// Runs the pipeline for one student diagram and stores the result.
fn process_submission(
    state: &AppState,
    reference: &ReferenceRecord,
    student: &str,
    paraphrase: bool,
) -> Result<SubmissionResponse, ApiError> {
    let reference_diagram = parse_role(&reference.plantuml, Some(reference.kind), Role::Reference)?;
    let student_diagram = parse_role(student, Some(reference.kind), Role::Student)?;
    let mut comparison = compare(&reference_diagram, &student_diagram, &CompareOptions::new(&state.templates))?;
    if paraphrase {
        comparison.feedback = paraphrase_feedback(&comparison.feedback, state.gateway.as_ref(), &state.lexicon)
            .map_err(|e| ApiError::from(e.source))?;
    }
    let record = state.store.put_submission(
        &reference.id,
        student,
        comparison.diff_report,
        comparison.tags,
        comparison.feedback,
    )?;
    Ok(SubmissionResponse {
        submission_id: record.id,
        diff_report: record.diff_report,
        tags: record.tags,
        feedback: record.feedback,
    })
}

async fn create_submission(
    State(state): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
    request: Request,
) -> Result<Json<SubmissionResponse>, ApiError> {
    let reference = state.store.get_reference(&id)?;
    let paraphrase = paraphrase_flag(query.as_deref())?;
    let student = if is_multipart(&headers) {
        match diagram_input(&read_parts(request, &state).await?)? {
            DiagramInput::Text(text) => text,
            DiagramInput::Image(image) => convert(&state, image, reference.kind, vision_key(&headers)).await?,
        }
    } else {
        read_json::<NewSubmission>(request).await?.plantuml
    };
    let state = state.clone();
    blocking(move || process_submission(&state, &reference, &student, paraphrase)).await.map(Json)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submission_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ApiError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResponse {
    pub results: Vec<BatchItem>,
}

async fn batch(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    request: Request,
) -> Result<Json<BatchResponse>, ApiError> {
    let reference = state.store.get_reference(&id)?;
    if !is_multipart(&headers) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_multipart", "batch uploads are multipart/form-data"));
    }
    let parts = read_parts(request, &state).await?;
    if parts.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty_batch", "the batch contains no files"));
    }
    let state = state.clone();
    blocking(move || {
        let results = parts
            .iter()
            .enumerate()
            .map(|(i, part)| {
                let file = part.file_name.clone().unwrap_or_else(|| format!("file-{}", i + 1));
                let outcome = utf8(&part.data, &file).and_then(|text| process_submission(&state, &reference, &text, false));
                match outcome {
                    Ok(r) => BatchItem { file, submission_id: Some(r.submission_id), error: None },
                    Err(e) => BatchItem { file, submission_id: None, error: Some(e) },
                }
            })
            .collect();
        Ok(BatchResponse { results })
    })
    .await
    .map(Json)
}
