mod common;

use std::sync::{Mutex, OnceLock};

use axum::http::StatusCode;
use common::*;
use duet_core::gateway::{chat_response, HttpResponse, MockTransport};
use log::{Level, LevelFilter, Log, Metadata, Record};

struct Capture(Mutex<Vec<String>>);

impl Log for Capture {
    fn enabled(&self, _: &Metadata) -> bool {
        true
    }

    fn log(&self, record: &Record) {
        self.0.lock().unwrap().push(format!("{} {} {}", record.level(), record.target(), record.args()));
    }

    fn flush(&self) {}
}

fn capture() -> &'static Capture {
    static LOGGER: OnceLock<&'static Capture> = OnceLock::new();
    LOGGER.get_or_init(|| {
        let logger: &'static Capture = Box::leak(Box::new(Capture(Mutex::new(Vec::new()))));
        log::set_logger(logger).unwrap();
        log::set_max_level(LevelFilter::Trace);
        logger
    })
}

#[tokio::test]
async fn vision_keys_never_reach_logs_or_store() {
    let logs = capture();
    let replies = vec![
        Err(duet_core::gateway::TransportFailure("connection reset".into())),
        Ok(HttpResponse { status: 503, body: Vec::new() }),
        Ok(chat_response(LIBRARY)),
    ];
    let app = app_with(false, MockTransport::scripted(replies));
    let request = multipart(
        "/api/references",
        &[("kind", None, b"class"), ("image", Some("d.png"), PNG)],
        &[("X-DUET-Vision-Key", "sk-header-secret-123")],
    );
    let (status, body) = app.call(request).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(app.gateway.retries(), 2);

    let lines = logs.0.lock().unwrap().clone();
    assert!(lines.iter().any(|l| l.starts_with(&Level::Info.to_string()) && l.contains("retry")), "{lines:?}");
    for secret in ["sk-header-secret-123", "sk-server-configured"] {
        assert!(lines.iter().all(|l| !l.contains(secret)), "{lines:?}");
        for entry in std::fs::read_dir(app.store_dir()).unwrap() {
            let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
            assert!(!text.contains(secret));
        }
    }
    assert!(!format!("{:?}", app.gateway).contains("sk-server-configured"));
}
