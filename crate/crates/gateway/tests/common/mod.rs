#![allow(dead_code)]

use std::path::Path;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use hine_core::Catalogs;
use hine_gateway::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

pub struct TestApp {
    pub dir: TempDir,
    pub state: AppState,
    pub router: Router,
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub headers: axum::http::HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_string()
    }
}

impl TestApp {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        Self::in_dir(dir)
    }

    pub fn in_dir(dir: TempDir) -> Self {
        let state = AppState::open(dir.path(), Catalogs::bundled(), 4096).unwrap();
        let router = router(state.clone());
        Self { dir, state, router }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub async fn send(&self, method: Method, uri: &str, body: Body, content_type: &str) -> Reply {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header(header::CONTENT_TYPE, content_type)
            .body(body)
            .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let content_type = headers
            .get(header::CONTENT_TYPE)
            .map(|v| v.to_str().unwrap().to_string());
        let bytes = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        Reply {
            status,
            content_type,
            headers,
            bytes,
        }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, Body::empty(), "application/json")
            .await
    }

    pub async fn post(&self, uri: &str, body: Value) -> Reply {
        self.send(
            Method::POST,
            uri,
            Body::from(serde_json::to_vec(&body).unwrap()),
            "application/json",
        )
        .await
    }

    pub async fn post_bytes(&self, uri: &str, bytes: Vec<u8>) -> Reply {
        self.send(
            Method::POST,
            uri,
            Body::from(bytes),
            "application/octet-stream",
        )
        .await
    }
}

pub fn patient_json(gw: u32, dob: &str) -> Value {
    json!({
        "name": "Infant A",
        "date_of_birth": dob,
        "mother_name": "Mother A",
        "father_name": "Father A",
        "gestational_week_at_birth": gw,
        "corrected_age_at_registration": gw as i32 - 40,
        "birth_weight": 2600
    })
}

/// Registers a 36-week infant born 2025-01-01 and returns its id.
pub async fn register(app: &TestApp) -> String {
    let r = app.post("/patients", patient_json(36, "2025-01-01")).await;
    assert_eq!(
        r.status,
        StatusCode::CREATED,
        "{}",
        String::from_utf8_lossy(&r.bytes)
    );
    r.json()["id"].as_str().unwrap().to_string()
}

/// Starts a neonatal session four weeks after birth (40 weeks gestational
/// age), records the first template of every item and closes it. Returns the
/// session id and the expected total.
pub async fn neonatal_exam(app: &TestApp, patient: &str) -> (String, i64) {
    let r = app
        .post(
            "/sessions",
            json!({"patient_id": patient, "category": "neonatal", "timestamp": "2025-01-29T09:00:00Z"}),
        )
        .await;
    assert_eq!(
        r.status,
        StatusCode::CREATED,
        "{}",
        String::from_utf8_lossy(&r.bytes)
    );
    let session = r.json()["id"].as_str().unwrap().to_string();

    let catalog = app.get("/catalog/neonatal").await.json();
    let mut total = 0;
    for (i, item) in catalog["items"].as_array().unwrap().iter().enumerate() {
        let templates = item["templates"].as_array().unwrap();
        let pick = &templates[i % templates.len()];
        total += pick["score"].as_i64().unwrap();
        let r = app
            .post(
                &format!("/sessions/{session}/items"),
                json!({"item_id": item["id"], "template_id": pick["id"]}),
            )
            .await;
        assert_eq!(
            r.status,
            StatusCode::OK,
            "{}",
            String::from_utf8_lossy(&r.bytes)
        );
    }
    (session, total)
}
