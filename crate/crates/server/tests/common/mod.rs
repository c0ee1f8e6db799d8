#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use duet_core::gateway::{Gateway, GatewayConfig, MockTransport, Secret};
use duet_core::store::{IdGenerator, Store};
use duet_server::{router, AppState, CorsConfig};
use serde_json::Value;
use tower::ServiceExt;

pub const LIBRARY: &str = "@startuml\nclass Library {\n  +name : String\n}\nclass Book {\n  +title : String\n}\nLibrary \"1\" *-- \"0..*\" Book\n@enduml\n";
pub const PNG: &[u8] = &[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A, 0, 0, 0, 0];

pub struct TestApp {
    pub router: Router,
    pub gateway: Arc<Gateway>,
    pub transport: Arc<MockTransport>,
    pub _dir: tempfile::TempDir,
}

pub fn config(offline: bool) -> GatewayConfig {
    GatewayConfig {
        vision_endpoint: Some("http://vision.invalid/v1/chat/completions".into()),
        text_endpoint: Some("http://text.invalid/v1/chat/completions".into()),
        vision_key: Secret::new("sk-server-configured"),
        offline,
        backoff_base: std::time::Duration::ZERO,
        ..GatewayConfig::default()
    }
}

pub fn app_with(offline: bool, transport: MockTransport) -> TestApp {
    app_with_config(config(offline), transport)
}

pub fn app_with_config(config: GatewayConfig, transport: MockTransport) -> TestApp {
    let dir = tempfile::tempdir().unwrap();
    let transport = Arc::new(transport);
    let store = Store::open_with(dir.path(), IdGenerator::deterministic(42)).unwrap();
    let state = AppState::new(store, Gateway::new(config, transport.clone()));
    let gateway = state.gateway.clone();
    TestApp { router: router(state, &CorsConfig::default()), gateway, transport, _dir: dir }
}

pub fn app(offline: bool) -> TestApp {
    app_with(offline, MockTransport::echo())
}

impl TestApp {
    pub fn store_dir(&self) -> &Path {
        self._dir.path()
    }

    pub async fn send(&self, request: Request<Body>) -> (StatusCode, Vec<u8>) {
        let response = self.router.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let body = axum::body::to_bytes(response.into_body(), usize::MAX).await.unwrap();
        (status, body.to_vec())
    }

    pub async fn call(&self, request: Request<Body>) -> (StatusCode, Value) {
        let (status, body) = self.send(request).await;
        let value = serde_json::from_slice(&body).unwrap_or_else(|_| panic!("non-JSON body: {}", String::from_utf8_lossy(&body)));
        (status, value)
    }

    pub async fn create_reference(&self, plantuml: &str) -> String {
        let (status, body) = self.call(post_json("/api/references", &serde_json::json!({"name": "ref", "plantuml": plantuml}))).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["id"].as_str().unwrap().to_string()
    }
}

pub fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

pub fn post_json(uri: &str, body: &Value) -> Request<Body> {
    Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()
}

/// (field name, file name, bytes)
pub type Field<'a> = (&'a str, Option<&'a str>, &'a [u8]);

pub fn multipart(uri: &str, fields: &[Field], headers: &[(&str, &str)]) -> Request<Body> {
    let boundary = "----duet-test-boundary";
    let mut body = Vec::new();
    for (name, file, data) in fields {
        body.extend_from_slice(format!("--{boundary}\r\n").as_bytes());
        match file {
            Some(f) => body.extend_from_slice(
                format!("Content-Disposition: form-data; name=\"{name}\"; filename=\"{f}\"\r\nContent-Type: application/octet-stream\r\n\r\n").as_bytes(),
            ),
            None => body.extend_from_slice(format!("Content-Disposition: form-data; name=\"{name}\"\r\n\r\n").as_bytes()),
        }
        body.extend_from_slice(data);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
    let mut builder = Request::post(uri).header("content-type", format!("multipart/form-data; boundary={boundary}"));
    for (k, v) in headers {
        builder = builder.header(*k, *v);
    }
    builder.body(Body::from(body)).unwrap()
}

/// Checks the error body shape: status, code and message, optional diagnostics.
pub fn assert_api_error(status: StatusCode, body: &Value) {
    assert!(status.is_client_error() || status.is_server_error());
    let obj = body.as_object().expect("error body is an object");
    assert_eq!(obj["status"].as_u64(), Some(u64::from(status.as_u16())));
    assert!(obj["code"].as_str().is_some_and(|c| !c.is_empty()));
    assert!(obj["message"].as_str().is_some_and(|m| !m.is_empty()));
    for key in obj.keys() {
        assert!(["status", "code", "message", "diagnostics"].contains(&key.as_str()), "unexpected key {key}");
    }
    if let Some(d) = obj.get("diagnostics") {
        for item in d.as_array().unwrap() {
            assert!(item["line"].as_u64().is_some() && item["column"].as_u64().is_some());
        }
    }
}
