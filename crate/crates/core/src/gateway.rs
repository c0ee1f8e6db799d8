//! Clients for image-to-PlantUML conversion and text generation.
//!
//! Requests use the chat-completions JSON shape, so hosted and locally
//! served models work alike. All traffic goes through a [`Transport`]; the
//! [`Gateway`] counts every attempt, which doubles as the network sentinel
//! for offline tests.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use base64::Engine as _;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::feedback::{Audience, Paraphraser};
use crate::model::DiagramKind;

pub const MAX_IMAGE_BYTES: usize = 10 * 1024 * 1024;

/// Key material. Never printed, never serialized.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(value: impl Into<String>) -> Self {
        Secret(value.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0.is_empty() { "Secret(<empty>)" } else { "Secret(<redacted>)" })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GatewayConfig {
    pub vision_endpoint: Option<String>,
    pub vision_model: String,
    pub text_endpoint: Option<String>,
    pub text_model: String,
    #[serde(skip)]
    pub vision_key: Secret,
    #[serde(skip)]
    pub text_key: Secret,
    pub offline: bool,
    pub timeout: Duration,
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// First backoff delay; later delays double.
    pub backoff_base: Duration,
    pub templates_dir: Option<PathBuf>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            vision_endpoint: None,
            vision_model: "gpt-4o".to_string(),
            text_endpoint: None,
            text_model: "gpt-4o-mini".to_string(),
            vision_key: Secret::default(),
            text_key: Secret::default(),
            offline: false,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            backoff_base: Duration::from_secs(1),
            templates_dir: None,
        }
    }
}

impl GatewayConfig {
    /// Reads `DUET_*` variables from the process environment.
    pub fn from_env() -> Self {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Self {
        let mut c = GatewayConfig::default();
        let non_empty = |k: &str| get(k).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        c.vision_endpoint = non_empty("DUET_VISION_ENDPOINT");
        c.text_endpoint = non_empty("DUET_TEXT_ENDPOINT");
        if let Some(m) = non_empty("DUET_VISION_MODEL") {
            c.vision_model = m;
        }
        if let Some(m) = non_empty("DUET_TEXT_MODEL") {
            c.text_model = m;
        }
        c.vision_key = Secret::new(get("DUET_VISION_KEY").unwrap_or_default());
        c.text_key = Secret::new(get("DUET_TEXT_KEY").unwrap_or_default());
        c.offline = non_empty("DUET_OFFLINE").is_some_and(|v| matches!(v.to_ascii_lowercase().as_str(), "1" | "true" | "yes"));
        if let Some(secs) = non_empty("DUET_TIMEOUT_SECS").and_then(|v| v.parse::<u64>().ok()) {
            c.timeout = Duration::from_secs(secs);
        }
        if let Some(n) = non_empty("DUET_MAX_RETRIES").and_then(|v| v.parse().ok()) {
            c.max_retries = n;
        }
        c.templates_dir = non_empty("DUET_TEMPLATES_DIR").map(PathBuf::from);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionResult {
    pub plantuml: String,
    pub model_id: String,
    pub raw_response_digest: String,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("offline mode is enabled; no model calls are made")]
    OfflineMode,
    #[error("unsupported image: {0}")]
    UnsupportedImage(String),
    #[error("no {0} endpoint is configured")]
    NotConfigured(&'static str),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
    #[error("model endpoint answered HTTP {status}: {message}")]
    UpstreamRejected { status: u16, message: String },
    #[error("model response is not understood: {0}")]
    MalformedResponse(String),
    #[error("model response contains no @startuml ... @enduml block")]
    NoDiagramInResponse,
    #[error("no prompt template named `{0}`")]
    TemplateNotFound(String),
    #[error("reading prompt template {path}: {message}")]
    TemplateIo { path: String, message: String },
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::OfflineMode => "offline_mode",
            GatewayError::UnsupportedImage(_) => "unsupported_image",
            GatewayError::NotConfigured(_) => "gateway_not_configured",
            GatewayError::TransportError { .. } => "transport_error",
            GatewayError::UpstreamRejected { .. } => "upstream_rejected",
            GatewayError::MalformedResponse(_) => "malformed_response",
            GatewayError::NoDiagramInResponse => "no_diagram_in_response",
            GatewayError::TemplateNotFound(_) => "template_not_found",
            GatewayError::TemplateIo { .. } => "template_io",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
    pub timeout: Duration,
}

impl HttpRequest {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    pub fn json(&self) -> Option<Value> {
        serde_json::from_slice(&self.body).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// Connection-level failure; always retried.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct TransportFailure(pub String);

pub trait Transport: Send + Sync {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportFailure>;
}

/// Blocking HTTP transport.
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportFailure> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(request.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut builder = agent.post(&request.url);
        for (k, v) in &request.headers {
            builder = builder.header(k, v);
        }
        let mut response = builder.send(&request.body[..]).map_err(|e| TransportFailure(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_vec().map_err(|e| TransportFailure(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

type Responder = dyn Fn(&HttpRequest) -> Result<HttpResponse, TransportFailure> + Send + Sync;

/// Scripted transport for tests and offline demos. Records every request.
pub struct MockTransport {
    script: Mutex<std::collections::VecDeque<Result<HttpResponse, TransportFailure>>>,
    fallback: Option<Box<Responder>>,
    requests: Mutex<Vec<HttpRequest>>,
}

impl MockTransport {
    /// Replies with `responses` in order; further calls fail.
    pub fn scripted(responses: Vec<Result<HttpResponse, TransportFailure>>) -> Self {
        MockTransport { script: Mutex::new(responses.into()), fallback: None, requests: Mutex::new(Vec::new()) }
    }

    pub fn responder(
        f: impl Fn(&HttpRequest) -> Result<HttpResponse, TransportFailure> + Send + Sync + 'static,
    ) -> Self {
        MockTransport { script: Mutex::new(Default::default()), fallback: Some(Box::new(f)), requests: Mutex::new(Vec::new()) }
    }

    /// Replies with a chat completion whose content is the user prompt text.
    pub fn echo() -> Self {
        MockTransport::responder(|req| {
            let body = req.json().unwrap_or(Value::Null);
            let content = &body["messages"][0]["content"];
            let text = match content {
                Value::String(s) => s.clone(),
                Value::Array(parts) => parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join("\n"),
                _ => String::new(),
            };
            Ok(chat_response(&text))
        })
    }

    pub fn requests(&self) -> Vec<HttpRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl Transport for MockTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportFailure> {
        self.requests.lock().unwrap().push(request.clone());
        if let Some(next) = self.script.lock().unwrap().pop_front() {
            return next;
        }
        match &self.fallback {
            Some(f) => f(request),
            None => Err(TransportFailure("mock script exhausted".into())),
        }
    }
}

/// A 200 chat-completions response carrying `content`.
pub fn chat_response(content: &str) -> HttpResponse {
    let body = json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]});
    HttpResponse { status: 200, body: serde_json::to_vec(&body).expect("json") }
}

pub const PROMPT_KEYS: [&str; 4] = ["convert.class", "convert.er", "paraphrase.student", "paraphrase.educator"];

const DEFAULT_PROMPTS: [(&str, &str); 4] = [
    ("convert.class", include_str!("../../../templates/prompts/convert.class.prompt")),
    ("convert.er", include_str!("../../../templates/prompts/convert.er.prompt")),
    ("paraphrase.student", include_str!("../../../templates/prompts/paraphrase.student.prompt")),
    ("paraphrase.educator", include_str!("../../../templates/prompts/paraphrase.educator.prompt")),
];

/// Reads `<dir>/prompts/<key>.prompt` when a templates directory is
/// configured and the file exists, else the built-in prompt.
pub fn load_prompt_template(key: &str, templates_dir: Option<&Path>) -> Result<String, GatewayError> {
    let builtin = DEFAULT_PROMPTS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| GatewayError::TemplateNotFound(key.to_string()))?;
    if let Some(dir) = templates_dir {
        let path = dir.join("prompts").join(format!("{key}.prompt"));
        if path.exists() {
            return std::fs::read_to_string(&path)
                .map_err(|e| GatewayError::TemplateIo { path: path.display().to_string(), message: e.to_string() });
        }
    }
    Ok(builtin.to_string())
}

/// Image media type from magic bytes.
pub fn sniff_image(image: &[u8]) -> Result<&'static str, GatewayError> {
    if image.len() > MAX_IMAGE_BYTES {
        return Err(GatewayError::UnsupportedImage(format!(
            "{} bytes exceeds the {MAX_IMAGE_BYTES} byte limit",
            image.len()
        )));
    }
    if image.starts_with(&[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A]) {
        Ok("image/png")
    } else if image.starts_with(&[0xFF, 0xD8, 0xFF]) {
        Ok("image/jpeg")
    } else {
        Err(GatewayError::UnsupportedImage("only PNG and JPEG images are accepted".into()))
    }
}

/// The first `@startuml ... @enduml` span of `text`, delimiters included.
pub fn extract_plantuml(text: &str) -> Option<&str> {
    let start = text.find("@startuml")?;
    let end = text[start..].find("@enduml")? + start + "@enduml".len();
    Some(&text[start..end])
}

pub struct Gateway {
    config: GatewayConfig,
    transport: Arc<dyn Transport>,
    attempts: AtomicU64,
    retries: AtomicU64,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("config", &self.config)
            .field("attempts", &self.network_attempts())
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(config: GatewayConfig, transport: Arc<dyn Transport>) -> Self {
        Gateway { config, transport, attempts: AtomicU64::new(0), retries: AtomicU64::new(0) }
    }

    pub fn with_http(config: GatewayConfig) -> Self {
        Gateway::new(config, Arc::new(UreqTransport))
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn is_offline(&self) -> bool {
        self.config.offline
    }

    /// Transport calls made so far.
    pub fn network_attempts(&self) -> u64 {
        self.attempts.load(Ordering::SeqCst)
    }

    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::SeqCst)
    }

    pub fn prompt(&self, key: &str) -> Result<String, GatewayError> {
        load_prompt_template(key, self.config.templates_dir.as_deref())
    }

    /// Converts a diagram picture to PlantUML. `key_override` replaces the
    /// configured vision key for this call only.
    pub fn convert_image(
        &self,
        image: &[u8],
        kind: DiagramKind,
        key_override: Option<&Secret>,
    ) -> Result<ConversionResult, GatewayError> {
        if self.config.offline {
            return Err(GatewayError::OfflineMode);
        }
        let media_type = sniff_image(image)?;
        let endpoint = self.config.vision_endpoint.as_deref().ok_or(GatewayError::NotConfigured("vision"))?;
        let prompt = self.prompt(match kind {
            DiagramKind::ClassDiagram => "convert.class",
            DiagramKind::ERDiagram => "convert.er",
        })?;
        let data_url = format!("data:{media_type};base64,{}", base64::engine::general_purpose::STANDARD.encode(image));
        let body = json!({
            "model": self.config.vision_model,
            "temperature": 0,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": prompt},
                    {"type": "image_url", "image_url": {"url": data_url}},
                ],
            }],
        });
        let key = key_override.filter(|k| !k.is_empty()).unwrap_or(&self.config.vision_key);
        let raw = self.call(endpoint, key, &body)?;
        let content = completion_text(&raw)?;
        let plantuml = extract_plantuml(&content).ok_or(GatewayError::NoDiagramInResponse)?;
        Ok(ConversionResult {
            plantuml: plantuml.to_string(),
            model_id: self.config.vision_model.clone(),
            raw_response_digest: hex_digest(&raw),
        })
    }

    pub fn generate_text(&self, prompt: &str) -> Result<String, GatewayError> {
        if self.config.offline {
            return Err(GatewayError::OfflineMode);
        }
        let endpoint = self.config.text_endpoint.as_deref().ok_or(GatewayError::NotConfigured("text"))?;
        let body = json!({
            "model": self.config.text_model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let raw = self.call(endpoint, &self.config.text_key, &body)?;
        completion_text(&raw)
    }

    fn call(&self, endpoint: &str, key: &Secret, body: &Value) -> Result<Vec<u8>, GatewayError> {
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if !key.is_empty() {
            headers.push(("Authorization".to_string(), format!("Bearer {}", key.expose())));
        }
        let request = HttpRequest {
            url: endpoint.to_string(),
            headers,
            body: serde_json::to_vec(body).expect("json"),
            timeout: self.config.timeout,
        };
        let mut attempt: u32 = 0;
        loop {
            attempt += 1;
            self.attempts.fetch_add(1, Ordering::SeqCst);
            let failure = match self.transport.post(&request) {
                Ok(r) if (200..300).contains(&r.status) => return Ok(r.body),
                Ok(r) if r.status == 429 || r.status >= 500 => format!("HTTP {}", r.status),
                Ok(r) => {
                    return Err(GatewayError::UpstreamRejected {
                        status: r.status,
                        message: upstream_message(&r.body),
                    })
                }
                Err(e) => e.0,
            };
            if attempt > self.config.max_retries {
                log::warn!("model call to {endpoint} gave up after {attempt} attempt(s): {failure}");
                return Err(GatewayError::TransportError { attempts: attempt, message: failure });
            }
            let delay = self.backoff(attempt);
            log::info!("model call to {endpoint} failed ({failure}); retry {attempt} in {delay:?}");
            self.retries.fetch_add(1, Ordering::SeqCst);
            if !delay.is_zero() {
                std::thread::sleep(delay);
            }
        }
    }

    /// `base * 2^(attempt-1)` with ±20% jitter.
    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.config.backoff_base.mul_f64(f64::from(1u32 << (attempt - 1).min(16)));
        base.mul_f64(rand::thread_rng().gen_range(0.8..=1.2))
    }
}

impl Paraphraser for Gateway {
    type Error = GatewayError;

    fn is_offline(&self) -> bool {
        self.config.offline
    }

    fn paraphrase(&self, audience: Audience, text: &str) -> Result<String, GatewayError> {
        let template = self.prompt(match audience {
            Audience::Student => "paraphrase.student",
            Audience::Educator => "paraphrase.educator",
        })?;
        self.generate_text(&template.replace("{text}", text))
    }
}

fn completion_text(raw: &[u8]) -> Result<String, GatewayError> {
    let value: Value = serde_json::from_slice(raw).map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    let content = &value["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join("")),
        _ => Err(GatewayError::MalformedResponse("choices[0].message.content is missing".into())),
    }
}

fn upstream_message(body: &[u8]) -> String {
    let value: Value = serde_json::from_slice(body).unwrap_or(Value::Null);
    value["error"]["message"]
        .as_str()
        .map(str::to_string)
        .unwrap_or_else(|| String::from_utf8_lossy(&body[..body.len().min(200)]).into_owned())
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
