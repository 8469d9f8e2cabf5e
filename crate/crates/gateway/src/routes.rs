use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, FromRequest, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use chrono::{DateTime, Utc};
use hine_core::{
    CameraTag, Catalogs, Category, ExamCatalog, HistoryEntry, MediaRef, MediaStore, Patient,
    PatientInfo, Records,
};
use hine_imaging::codec::{self, ImageFormat};
use hine_imaging::{run_pipeline, PipelineConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ErrorCode};
use crate::stages::encode_stages;

/// Largest accepted request body; a 4096x4096 RGB pixmap plus headroom.
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub records: Arc<Records>,
    pub media: Arc<MediaStore>,
    pub catalogs: Arc<Catalogs>,
}

impl AppState {
    /// Opens the stores under `data_dir`: the records log at its root and
    /// media under `media/`.
    pub fn open(data_dir: &Path, catalogs: Catalogs, max_dimension: usize) -> Result<Self, String> {
        let catalogs = Arc::new(catalogs);
        let media = Arc::new(
            MediaStore::with_limit(data_dir.join("media"), max_dimension)
                .map_err(|e| format!("{}: {e}", data_dir.display()))?,
        );
        let records = Records::open(data_dir, Arc::clone(&catalogs), Arc::clone(&media))
            .map_err(|e| format!("{}: {e}", data_dir.display()))?;
        Ok(Self {
            records: Arc::new(records),
            media,
            catalogs,
        })
    }
}

/// JSON body extractor whose rejections use the API error shape.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => Err(json_rejection(rejection)),
        }
    }
}

fn json_rejection(r: JsonRejection) -> ApiError {
    if r.status() == StatusCode::PAYLOAD_TOO_LARGE {
        return ApiError::new(
            ErrorCode::PayloadTooLarge,
            format!("request body exceeds {MAX_BODY_BYTES} bytes"),
        );
    }
    ApiError::validation(r.body_text())
}

fn body(b: Result<Bytes, BytesRejection>) -> Result<Bytes, ApiError> {
    b.map_err(|r| match r.status() {
        StatusCode::PAYLOAD_TOO_LARGE => ApiError::new(
            ErrorCode::PayloadTooLarge,
            format!("request body exceeds {MAX_BODY_BYTES} bytes"),
        ),
        _ => ApiError::validation(r.body_text()),
    })
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v)
        .map_err(|r| ApiError::validation(r.body_text()))
}

/// Runs blocking store or pipeline work off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/patients", post(register_patient))
        .route("/patients/{id}", get(lookup_patient))
        .route("/patients/{id}/history", get(history))
        .route("/catalog/{category}", get(catalog))
        .route("/sessions", post(start_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/items", post(record_item))
        .route("/sessions/{id}/close", post(close_session))
        .route("/pipeline/skeletonize", post(skeletonize))
        .route("/media/frames", post(ingest_frame))
        .route("/media/{hash}", get(fetch_first))
        .route("/media/{hash}/{index}", get(fetch_frame))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

#[derive(Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub catalog_version: String,
}

async fn health(State(app): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        catalog_version: app.catalogs.version().to_string(),
    })
}

async fn register_patient(
    State(app): State<AppState>,
    ApiJson(info): ApiJson<PatientInfo>,
) -> Result<(StatusCode, Json<Patient>), ApiError> {
    let patient = blocking(move || Ok(app.records.register_patient(info)?)).await?;
    Ok((StatusCode::CREATED, Json(patient)))
}

async fn lookup_patient(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Patient>, ApiError> {
    Ok(Json(app.records.lookup_patient(&id)?))
}

#[derive(Serialize, Deserialize)]
pub struct History {
    pub patient: Patient,
    pub sessions: Vec<HistoryEntry>,
}

async fn history(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<History>, ApiError> {
    let patient = app.records.lookup_patient(&id)?;
    let sessions = app.records.history(&id)?;
    Ok(Json(History { patient, sessions }))
}

#[derive(Serialize, Deserialize)]
pub struct CatalogView {
    pub catalog_version: String,
    #[serde(flatten)]
    pub catalog: ExamCatalog,
}

async fn catalog(
    State(app): State<AppState>,
    UrlPath(category): UrlPath<String>,
) -> Result<Json<CatalogView>, ApiError> {
    let category = Category::parse(&category).ok_or_else(|| {
        ApiError::not_found(format!(
            "no catalog {category:?}; use neonatal or post_neonatal"
        ))
    })?;
    Ok(Json(CatalogView {
        catalog_version: app.catalogs.version().to_string(),
        catalog: app.catalogs.get(category).clone(),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSession {
    pub patient_id: String,
    pub category: Category,
    /// Defaults to the time the request is served.
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

async fn start_session(
    State(app): State<AppState>,
    ApiJson(req): ApiJson<StartSession>,
) -> Result<impl IntoResponse, ApiError> {
    let timestamp = req.timestamp.unwrap_or_else(Utc::now);
    let session = blocking(move || {
        Ok(app
            .records
            .start_session(&req.patient_id, req.category, timestamp)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(app.records.get_session(&id)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordItem {
    pub item_id: String,
    pub template_id: String,
    /// Content hashes of frames already in the media store.
    #[serde(default)]
    pub media: Vec<String>,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub expected_version: Option<u64>,
}

async fn record_item(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    ApiJson(req): ApiJson<RecordItem>,
) -> Result<impl IntoResponse, ApiError> {
    let recorded = blocking(move || {
        Ok(app.records.record_item(
            &id,
            &req.item_id,
            &req.template_id,
            &req.media,
            req.note,
            req.expected_version,
        )?)
    })
    .await?;
    Ok(Json(recorded))
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloseSession {
    #[serde(default)]
    pub expected_version: Option<u64>,
}

async fn close_session(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    raw: Result<Bytes, BytesRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let body = body(raw)?;
    let req: CloseSession = if body.iter().all(u8::is_ascii_whitespace) {
        CloseSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::validation(e.to_string()))?
    };
    let summary =
        blocking(move || Ok(app.records.close_session(&id, req.expected_version)?)).await?;
    Ok(Json(summary))
}

fn camera_tag(raw: Option<&str>) -> Result<Option<CameraTag>, ApiError> {
    raw.map(|s| {
        CameraTag::parse(s)
            .ok_or_else(|| ApiError::validation(format!("camera_tag {s:?} is not C1 or C2")))
    })
    .transpose()
}

/// Pipeline parameter overrides taken from the query string.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonizeQuery {
    pub sat_threshold_max: Option<f64>,
    pub sat_threshold_slope: Option<f64>,
    pub hue_bins: Option<u16>,
    pub gray_bins: Option<u16>,
    pub min_region_fraction: Option<f64>,
    pub background_value_min: Option<f64>,
    pub background_saturation_max: Option<f64>,
    pub fill_holes: Option<bool>,
    pub max_thinning_iterations: Option<usize>,
    pub remove_isolated: Option<bool>,
    pub camera_tag: Option<String>,
}

impl SkeletonizeQuery {
    pub fn config(&self) -> Result<PipelineConfig, ApiError> {
        let mut cfg = PipelineConfig::default();
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        apply!(
            sat_threshold_max,
            sat_threshold_slope,
            hue_bins,
            gray_bins,
            min_region_fraction,
            background_value_min,
            background_saturation_max,
            fill_holes,
            max_thinning_iterations,
            remove_isolated
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize, Deserialize)]
pub struct StageOutput {
    pub name: String,
    #[serde(rename = "ref")]
    pub media: MediaRef,
    /// `data:image/png;base64,...`
    pub preview: String,
}

#[derive(Serialize, Deserialize)]
pub struct SkeletonizeResponse {
    pub input: MediaRef,
    pub config: PipelineConfig,
    pub initial_region_count: usize,
    pub merged_region_count: usize,
    pub skeleton_pixels: usize,
    pub stages: Vec<StageOutput>,
}

async fn skeletonize(
    State(app): State<AppState>,
    q: Result<Query<SkeletonizeQuery>, QueryRejection>,
    raw: Result<Bytes, BytesRejection>,
) -> Result<Json<SkeletonizeResponse>, ApiError> {
    let q = query(q)?;
    let body = body(raw)?;
    let cfg = q.config()?;
    let tag = camera_tag(q.camera_tag.as_deref())?;
    blocking(move || {
        let (w, h) = codec::probe_dimensions(&body)?;
        let max = app.media.max_dimension();
        if w > max || h > max {
            return Err(hine_core::MediaError::Dimension {
                width: w,
                height: h,
                max,
            }
            .into());
        }
        let img = codec::decode(&body)?;
        let result = run_pipeline(&img, &cfg)?;
        let input = app.media.ingest_frame(&body, tag)?;
        let stages = encode_stages(&result)
            .into_iter()
            .map(|s| {
                Ok(StageOutput {
                    name: s.stage.name().to_string(),
                    media: app.media.ingest_frame(&s.bytes, tag)?,
                    preview: format!("data:image/png;base64,{}", BASE64.encode(&s.png)),
                })
            })
            .collect::<Result<Vec<_>, ApiError>>()?;
        Ok(Json(SkeletonizeResponse {
            input,
            initial_region_count: result.initial_segments.region_count(),
            merged_region_count: result.merged_segments.region_count(),
            skeleton_pixels: result.skeleton.as_mask().count(),
            config: cfg,
            stages,
        }))
    })
    .await
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestQuery {
    pub camera_tag: Option<String>,
}

async fn ingest_frame(
    State(app): State<AppState>,
    q: Result<Query<IngestQuery>, QueryRejection>,
    raw: Result<Bytes, BytesRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let tag = camera_tag(query(q)?.camera_tag.as_deref())?;
    let body = body(raw)?;
    let media = blocking(move || Ok(app.media.ingest_frame(&body, tag)?)).await?;
    Ok((StatusCode::CREATED, Json(media)))
}

async fn fetch_first(
    State(app): State<AppState>,
    UrlPath(hash): UrlPath<String>,
) -> Result<Response, ApiError> {
    fetch(app, hash, 0).await
}

async fn fetch_frame(
    State(app): State<AppState>,
    UrlPath((hash, index)): UrlPath<(String, String)>,
) -> Result<Response, ApiError> {
    let index = index
        .parse()
        .map_err(|_| ApiError::validation(format!("frame index {index:?} is not a number")))?;
    fetch(app, hash, index).await
}

async fn fetch(app: AppState, hash: String, index: usize) -> Result<Response, ApiError> {
    let etag = format!("\"{hash}-{index}\"");
    let bytes = blocking(move || Ok(app.media.fetch(&hash, index)?)).await?;
    let mime =
        ImageFormat::sniff(&bytes).map_or("application/octet-stream", ImageFormat::mime_type);
    let mut response = bytes.into_response();
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(mime));
    headers.insert(
        header::CACHE_CONTROL,
        HeaderValue::from_static("public, max-age=31536000, immutable"),
    );
    if let Ok(v) = HeaderValue::from_str(&etag) {
        headers.insert(header::ETAG, v);
    }
    Ok(response)
}
