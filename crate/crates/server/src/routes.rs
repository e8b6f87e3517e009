use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Redirect, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use artlens_core::canvas::{place, CanvasComposition};
use artlens_core::catalog::CatalogError;
use artlens_core::explore::{compute_usage, SessionEvent, UsageReport};
use artlens_core::taxonomy::Category;

use crate::docs::*;
use crate::error::ApiError;
use crate::state::AppState;

type ApiResult<T> = Result<T, ApiError>;
type Shared = State<Arc<AppState>>;

pub const API_DESCRIPTION: &str = include_str!("../api/openapi.json");

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/openapi.json", get(openapi))
        .route("/home", get(home))
        .route("/categories", get(categories))
        .route("/objects", get(objects))
        .route("/paintings/{id}", get(painting))
        .route("/paintings/{id}/image", get(painting_image))
        .route("/crops/{id}", get(crop_image))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/favorites", get(get_favorites))
        .route("/sessions/{id}/favorites/{detection_id}", post(save_favorite).delete(unsave_favorite))
        .route("/sessions/{id}/canvas", post(submit_canvas))
        .route("/generations/{job}", get(get_generation))
        .route("/generations/{job}/image", get(generation_image))
        .route("/events", post(post_event))
        .route("/reports/usage", get(usage_report))
        .fallback(|| async { ApiError::not_found("not_found", "no such endpoint") })
        .with_state(state)
}

fn malformed(e: impl std::fmt::Display) -> ApiError {
    ApiError::bad_request("malformed_request", e.to_string())
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], API_DESCRIPTION).into_response()
}

fn object_doc(state: &AppState, detection_id: &str) -> Option<ObjectDoc> {
    state.catalog.object(detection_id).map(|o| ObjectDoc::from(&o))
}

async fn home(State(state): Shared) -> Json<HomeDoc> {
    let slides = state.options.home_objects.iter().filter_map(|id| object_doc(&state, id)).collect();
    Json(HomeDoc { slides })
}

async fn categories(State(state): Shared) -> Json<CategoriesDoc> {
    let categories = state
        .catalog
        .taxonomy()
        .categories()
        .into_iter()
        .map(|category| CategoryDoc {
            category,
            object_count: state.catalog.object_count(category),
            representative: state.catalog.top_object(category).map(|o| ObjectDoc::from(&o)),
        })
        .collect();
    Json(CategoriesDoc { categories })
}

#[derive(Debug, Deserialize)]
struct ObjectsQuery {
    category: Option<String>,
    label: Option<String>,
    cursor: Option<String>,
    page_size: Option<String>,
}

async fn objects(
    State(state): Shared,
    query: Result<Query<ObjectsQuery>, QueryRejection>,
) -> ApiResult<Json<ObjectPageDoc>> {
    let Query(q) = query.map_err(malformed)?;
    let category_name = q
        .category
        .filter(|c| !c.is_empty())
        .ok_or_else(|| ApiError::bad_request("category_required", "category is required"))?;
    let category: Category = category_name.parse().map_err(|_| CatalogError::UnknownCategory(category_name.clone()))?;
    let page_size = match q.page_size.as_deref() {
        None | Some("") => state.options.default_page_size,
        Some(s) => s.parse().map_err(|_| CatalogError::InvalidPageSize)?,
    };
    let label = q.label.as_deref().filter(|l| !l.is_empty());
    let cursor = q.cursor.as_deref().filter(|c| !c.is_empty());
    let page = state.catalog.query_objects(Some(category), label, cursor, page_size)?;
    Ok(Json(ObjectPageDoc {
        items: page.items.iter().map(ObjectDoc::from).collect(),
        next_cursor: page.next_cursor,
        total: page.total,
    }))
}

async fn painting(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<PaintingDoc>> {
    let detail = state.catalog.get_painting_detail(&id)?;
    Ok(Json(PaintingDoc::from(&detail)))
}

/// Local files are served directly; remote images redirect to their source.
async fn painting_image(State(state): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let artwork = state
        .catalog
        .artwork(&id)
        .ok_or_else(|| ApiError::not_found("painting_not_found", format!("no painting {id:?}")))?;
    let source = artwork.image_ref;
    if source.starts_with("http://") || source.starts_with("https://") {
        return Ok(Redirect::temporary(&source).into_response());
    }
    let path = std::path::Path::new(&source);
    let bytes = std::fs::read(path).map_err(|e| ApiError::internal(format!("{source}: {e}")))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default().to_ascii_lowercase();
    let mime = match ext.as_str() {
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "webp" => "image/webp",
        "gif" => "image/gif",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn crop_image(State(state): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let crop =
        state.catalog.crop(&id).ok_or_else(|| ApiError::not_found("crop_not_found", format!("no crop for {id:?}")))?;
    let bytes = std::fs::read(state.catalog.crop_file(&crop)).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(png(bytes))
}

fn session_doc(state: &AppState, session_id: &str) -> ApiResult<SessionDoc> {
    let s = state.sessions.get(session_id, state.now())?;
    Ok(SessionDoc {
        session_id: s.session_id,
        created_at: s.created_at,
        favorites: s.favorites.iter().filter_map(|id| object_doc(state, id)).collect(),
    })
}

async fn create_session(State(state): Shared) -> ApiResult<(StatusCode, Json<SessionDoc>)> {
    let s = state.sessions.create(state.now())?;
    Ok((StatusCode::CREATED, Json(session_doc(&state, &s.session_id)?)))
}

async fn get_session(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<SessionDoc>> {
    Ok(Json(session_doc(&state, &id)?))
}

async fn get_favorites(State(state): Shared, Path(id): Path<String>) -> ApiResult<Json<SessionDoc>> {
    Ok(Json(session_doc(&state, &id)?))
}

async fn save_favorite(
    State(state): Shared,
    Path((id, detection_id)): Path<(String, String)>,
) -> ApiResult<Json<SessionDoc>> {
    state.sessions.get(&id, state.now())?;
    if state.catalog.object(&detection_id).is_none() {
        return Err(ApiError::not_found("object_not_found", format!("no browsable object {detection_id:?}")));
    }
    state.sessions.save(&id, &detection_id, state.now())?;
    Ok(Json(session_doc(&state, &id)?))
}

async fn unsave_favorite(
    State(state): Shared,
    Path((id, detection_id)): Path<(String, String)>,
) -> ApiResult<Json<SessionDoc>> {
    state.sessions.get(&id, state.now())?;
    if state.catalog.object(&detection_id).is_none() {
        return Err(ApiError::not_found("object_not_found", format!("no browsable object {detection_id:?}")));
    }
    state.sessions.unsave(&id, &detection_id, state.now())?;
    Ok(Json(session_doc(&state, &id)?))
}

fn invalid_composition(e: impl std::fmt::Display) -> ApiError {
    ApiError::unprocessable("invalid_composition", e.to_string())
}

async fn submit_canvas(
    State(state): Shared,
    Path(id): Path<String>,
    body: Result<Json<CanvasRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<JobDoc>)> {
    let Json(req) = body.map_err(malformed)?;
    let session = state.sessions.get(&id, state.now())?;
    for p in &req.placements {
        if !session.favorites.contains(&p.detection_id) {
            return Err(ApiError::unprocessable(
                "not_favorited",
                format!("object {:?} is not in the session's favorites", p.detection_id),
            ));
        }
    }
    let side = req.side.unwrap_or(state.options.canvas_side);
    let max = state.provider.max_side();
    if side > max {
        return Err(invalid_composition(format!("canvas side {side} exceeds provider maximum {max}")));
    }
    let mut comp = CanvasComposition::new(side).map_err(invalid_composition)?.with_prompt(req.prompt.clone());
    for p in &req.placements {
        comp = place(&comp, state.catalog.as_ref(), &p.detection_id, p.x, p.y, p.scale).map_err(invalid_composition)?;
    }
    comp.validate().map_err(invalid_composition)?;
    let prompt = comp.prompt.clone();
    let job_id = state.submit(&id, comp).ok_or_else(|| {
        ApiError::new(StatusCode::CONFLICT, "generation_in_progress", "the session already has an active generation")
    })?;
    // the state at submission; the worker may already have picked it up
    let doc = JobDoc { job_id, session_id: id, status: JobStatus::Queued, prompt, error: None, result: None };
    Ok((StatusCode::ACCEPTED, Json(doc)))
}

fn job_doc(state: &AppState, job_id: &str) -> Option<JobDoc> {
    let job = state.jobs.lock().get(job_id).cloned()?;
    let result = job.result.as_ref().map(|r| GenerationResultDoc {
        image_url: format!("/generations/{job_id}/image"),
        width: r.width,
        height: r.height,
        provider_id: r.provider_id.clone(),
        used_objects: r.used_objects.iter().filter_map(|id| object_doc(state, id)).collect(),
    });
    Some(JobDoc {
        job_id: job_id.to_string(),
        session_id: job.session_id,
        status: job.status,
        prompt: job.composition.prompt,
        error: job.error,
        result,
    })
}

async fn get_generation(State(state): Shared, Path(job): Path<String>) -> ApiResult<Json<JobDoc>> {
    job_doc(&state, &job)
        .or_else(|| {
            // finished jobs from earlier runs are still in the catalog
            let g = state.catalog.generation(&job)?;
            Some(JobDoc {
                job_id: g.job_id.clone(),
                session_id: g.session_id.clone().unwrap_or_default(),
                status: JobStatus::Done,
                prompt: g.composition.prompt.clone(),
                error: None,
                result: Some(GenerationResultDoc {
                    image_url: format!("/generations/{}/image", g.job_id),
                    width: g.width,
                    height: g.height,
                    provider_id: g.provider_id.clone(),
                    used_objects: g.used_objects.iter().filter_map(|id| object_doc(&state, id)).collect(),
                }),
            })
        })
        .map(Json)
        .ok_or_else(|| ApiError::not_found("job_not_found", format!("no generation job {job:?}")))
}

async fn generation_image(State(state): Shared, Path(job): Path<String>) -> ApiResult<Response> {
    let Some(g) = state.catalog.generation(&job) else {
        return Err(match job_doc(&state, &job) {
            Some(_) => ApiError::new(StatusCode::CONFLICT, "image_not_ready", "generation has no image"),
            None => ApiError::not_found("job_not_found", format!("no generation job {job:?}")),
        });
    };
    let bytes =
        std::fs::read(state.catalog.root().join(&g.image_path)).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(png(bytes))
}

async fn post_event(
    State(state): Shared,
    body: Result<Json<SessionEvent>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let Json(event) = body.map_err(|e| ApiError::bad_request("malformed_event", e.body_text()))?;
    state.events.append(event).map_err(|e| match e {
        artlens_core::explore::EventError::Malformed(m) => ApiError::bad_request("malformed_event", m),
        other => ApiError::internal(other.to_string()),
    })?;
    Ok((StatusCode::ACCEPTED, Json(serde_json::json!({ "accepted": 1 }))))
}

async fn usage_report(State(state): Shared) -> Json<UsageReport> {
    Json(compute_usage(&state.events.events()))
}
