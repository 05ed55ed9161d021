use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;

use super::matches::{CreateMatch, GameInfo, MatchError, MatchStore, MatchView, SubmitMove};

impl IntoResponse for MatchError {
    fn into_response(self) -> Response {
        let status = match self {
            MatchError::UnknownGame(_)
            | MatchError::InvalidSize(_)
            | MatchError::Incompatible(_)
            | MatchError::BadRequest(_) => StatusCode::BAD_REQUEST,
            MatchError::NotFound(_) => StatusCode::NOT_FOUND,
            MatchError::NotYourTurn | MatchError::Finished | MatchError::Conflict(_) => {
                StatusCode::CONFLICT
            }
            MatchError::Illegal(_) => StatusCode::UNPROCESSABLE_ENTITY,
            MatchError::Engine(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (status, Json(body)).into_response()
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, MatchError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| MatchError::BadRequest(e.body_text()))
}

/// Searches the engine's reply on the blocking pool; clients see
/// `"thinking"` until it lands.
fn schedule_engine(store: &Arc<MatchStore>, id: String) {
    let store = Arc::clone(store);
    tokio::task::spawn_blocking(move || {
        if let Err(e) = store.settle(&id) {
            log::warn!("match {id}: {e}");
        }
    });
}

async fn list_games(State(store): State<Arc<MatchStore>>) -> Json<Vec<GameInfo>> {
    Json(store.games())
}

async fn create_match(
    State(store): State<Arc<MatchStore>>,
    payload: Result<Json<CreateMatch>, JsonRejection>,
) -> Result<(StatusCode, Json<MatchView>), MatchError> {
    let (view, needs_engine) = store.create(&body(payload)?)?;
    if needs_engine {
        schedule_engine(&store, view.id.clone());
    }
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_match(
    State(store): State<Arc<MatchStore>>,
    Path(id): Path<String>,
) -> Result<Json<MatchView>, MatchError> {
    store.get(&id).map(Json)
}

async fn submit_move(
    State(store): State<Arc<MatchStore>>,
    Path(id): Path<String>,
    payload: Result<Json<SubmitMove>, JsonRejection>,
) -> Result<Json<MatchView>, MatchError> {
    let (view, needs_engine) = store.submit(&id, &body(payload)?)?;
    if needs_engine {
        schedule_engine(&store, id);
    }
    Ok(Json(view))
}

pub fn router(store: Arc<MatchStore>) -> Router {
    Router::new()
        .route("/games", get(list_games))
        .route("/matches", post(create_match))
        .route("/matches/{id}", get(get_match))
        .route("/matches/{id}/moves", post(submit_move))
        .with_state(store)
}

/// Serves the API until the process is stopped.
pub async fn run_server(store: Arc<MatchStore>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}
