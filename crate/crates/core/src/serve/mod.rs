//! Live matches between a human and a checkpoint, and the HTTP JSON API
//! that exposes them.
//!
//! | method | path                  | body                                   |
//! |--------|-----------------------|----------------------------------------|
//! | GET    | `/games`              |                                        |
//! | POST   | `/matches`            | [`CreateMatch`]                        |
//! | GET    | `/matches/{id}`       |                                        |
//! | POST   | `/matches/{id}/moves` | [`SubmitMove`]                         |
//!
//! Engine replies are searched on a blocking thread. While the engine
//! thinks, `engine` reads `"thinking"` and clients poll `GET /matches/{id}`.

mod http;
mod matches;

pub use http::{router, run_server};
pub use matches::{
    ActionJson, CellJson, CreateMatch, Engine, EngineState, GameInfo, MatchError, MatchStore,
    MatchView, SubmitMove, VisitJson,
};
