//! Read-only HTTP/JSON access to an evaluated database.
//!
//! Every endpoint borrows the database immutably; negation walkthroughs are
//! stateless, with the client re-sending the rule and bindings it has
//! collected so far.

use std::collections::BTreeMap;
use std::net::{Ipv4Addr, SocketAddr};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use provlog::explain::{ExplainError, DEFAULT_DEPTH};
use provlog::{Constant, Database, Explorer, GroundAtom, ProgramError, RuleId};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as JsonValue};
use tower_http::cors::CorsLayer;

use crate::json::{self, JsonError};
use crate::literal;

type Db = Arc<Database>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    error: &'static str,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, detail: impl ToString) -> Self {
        ApiError {
            status,
            error,
            detail: detail.to_string(),
        }
    }

    fn malformed(detail: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", detail)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.error, "detail": self.detail }))).into_response()
    }
}

impl From<ExplainError> for ApiError {
    fn from(e: ExplainError) -> Self {
        let (status, error) = match &e {
            ExplainError::UnknownTuple(_) => (StatusCode::NOT_FOUND, "unknown_tuple"),
            ExplainError::TupleExists(_) => (StatusCode::CONFLICT, "tuple_exists"),
            ExplainError::NoProvenance => (StatusCode::CONFLICT, "no_provenance"),
            ExplainError::NotFound(_) => (StatusCode::INTERNAL_SERVER_ERROR, "inconsistent_store"),
            ExplainError::UnknownRule(_) | ExplainError::HeadMismatch { .. } => (StatusCode::BAD_REQUEST, "bad_rule"),
            _ => (StatusCode::BAD_REQUEST, "bad_bindings"),
        };
        ApiError::new(status, error, e)
    }
}

impl From<JsonError> for ApiError {
    fn from(e: JsonError) -> Self {
        match e {
            JsonError::Program(ProgramError::UndeclaredRelation(r)) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_relation", format!("undeclared relation `{r}`"))
            }
            e => ApiError::malformed(e),
        }
    }
}

pub fn router(db: Db) -> Router {
    Router::new()
        .route("/relations", get(relations))
        .route("/tuples/:relation", get(tuples))
        .route("/explain", post(explain))
        .route("/expand", post(expand))
        .route("/negation/candidates", post(candidates))
        .route("/negation/evaluate", post(evaluate))
        .route("/stats", get(stats))
        .layer(CorsLayer::permissive())
        .with_state(db)
}

/// Serves on 127.0.0.1 until the process is stopped.
pub async fn serve(db: Db, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(db)).await
}

fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(ApiError::malformed)
}

fn target(db: &Database, tuple: &JsonValue) -> Result<GroundAtom, ApiError> {
    Ok(json::parse_tuple(db.program(), tuple)?)
}

#[derive(Serialize)]
struct RelationInfo {
    name: String,
    arity: usize,
    io: String,
    attributes: Vec<BTreeMap<&'static str, String>>,
    tuples: usize,
}

async fn relations(State(db): State<Db>) -> Json<Vec<RelationInfo>> {
    let p = db.program();
    Json(
        p.rel_ids()
            .map(|r| {
                let d = p.relation(r);
                RelationInfo {
                    name: d.name.clone(),
                    arity: d.arity(),
                    io: d.io().to_string(),
                    attributes: d
                        .attributes
                        .iter()
                        .map(|a| BTreeMap::from([("name", a.name.clone()), ("type", a.ty.to_string())]))
                        .collect(),
                    tuples: db.store().relation(r).len(),
                }
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct Page {
    /// Comma-separated values for the leading attributes.
    prefix: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

const DEFAULT_LIMIT: usize = 100;

async fn tuples(
    State(db): State<Db>,
    Path(relation): Path<String>,
    Query(page): Query<Page>,
) -> Result<Json<JsonValue>, ApiError> {
    let p = db.program();
    let rel = p.relation_id(&relation).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_relation", format!("undeclared relation `{relation}`"))
    })?;
    let types = db.attr_types(rel);
    let prefix: Vec<Constant> = match page.prefix.as_deref() {
        None | Some("") => Vec::new(),
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            if parts.len() > types.len() {
                return Err(ApiError::malformed(format!("prefix has {} values, `{relation}` has arity {}", parts.len(), types.len())));
            }
            parts
                .iter()
                .zip(&types)
                .map(|(s, ty)| literal::parse_constant(s, *ty).ok_or_else(|| ApiError::malformed(format!("`{s}` is not a {ty}"))))
                .collect::<Result<_, _>>()?
        }
    };
    // A prefix naming a symbol the database never saw matches nothing.
    let values = prefix.iter().map(|c| db.symbols().value_of(c)).collect::<Option<Vec<_>>>();
    let matches: Vec<_> = match values {
        None => Vec::new(),
        Some(v) => db.store().relation(rel).scan_prefix(&v).collect(),
    };
    let offset = page.offset.unwrap_or(0);
    let limit = page.limit.unwrap_or(DEFAULT_LIMIT);
    let rows: Vec<_> = matches
        .iter()
        .skip(offset)
        .take(limit)
        .map(|t| json::row(p, &db.ground(rel, &t.values), t.annotation))
        .collect();
    Ok(Json(json!({
        "relation": relation,
        "total": matches.len(),
        "offset": offset,
        "rows": rows,
    })))
}

#[derive(Deserialize)]
struct ExplainRequest {
    tuple: JsonValue,
    /// A positive level count, or `"inf"` for the whole tree.
    #[serde(default)]
    depth: Option<JsonValue>,
}

fn depth(d: Option<&JsonValue>) -> Result<usize, ApiError> {
    match d {
        None | Some(JsonValue::Null) => Ok(DEFAULT_DEPTH),
        Some(JsonValue::String(s)) if s == "inf" => Ok(usize::MAX),
        Some(j) => match j.as_u64() {
            Some(n) if n > 0 => Ok(usize::try_from(n).unwrap_or(usize::MAX)),
            _ => Err(ApiError::malformed("depth is a positive integer or \"inf\"")),
        },
    }
}

fn json_response(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn explain(State(db): State<Db>, bytes: Bytes) -> Result<Response, ApiError> {
    let req: ExplainRequest = body(&bytes)?;
    let t = target(&db, &req.tuple)?;
    let node = Explorer::new(&db).explain(&t, depth(req.depth.as_ref())?)?;
    Ok(json_response(json::proof_text(db.program(), &node)))
}

#[derive(Deserialize)]
struct TupleRequest {
    tuple: JsonValue,
}

async fn expand(State(db): State<Db>, bytes: Bytes) -> Result<Response, ApiError> {
    let req: TupleRequest = body(&bytes)?;
    let t = target(&db, &req.tuple)?;
    let node = Explorer::new(&db).expand(&t)?;
    Ok(json_response(json::proof_text(db.program(), &node)))
}

async fn candidates(State(db): State<Db>, bytes: Bytes) -> Result<Json<JsonValue>, ApiError> {
    let req: TupleRequest = body(&bytes)?;
    let t = target(&db, &req.tuple)?;
    let cs = Explorer::new(&db).negation_candidates(&t)?;
    Ok(Json(json!({
        "tuple": json::tuple(db.program(), &t),
        "candidates": json::candidates(&cs),
    })))
}

#[derive(Deserialize)]
struct EvaluateRequest {
    tuple: JsonValue,
    rule: RuleId,
    #[serde(default)]
    bindings: BTreeMap<String, JsonValue>,
}

async fn evaluate(State(db): State<Db>, bytes: Bytes) -> Result<Json<json::FailedJson>, ApiError> {
    let req: EvaluateRequest = body(&bytes)?;
    let t = target(&db, &req.tuple)?;
    let ex = Explorer::new(&db);
    let free = ex.negation_free_variables(req.rule, &t)?;
    let mut bindings = BTreeMap::new();
    for (name, value) in &req.bindings {
        let bad = || ApiError::malformed(format!("binding for {name} must be a string or an integer"));
        let c = match (value, free.iter().find(|f| &f.name == name)) {
            // Numbers typed as strings are accepted for number variables,
            // since form fields tend to produce text.
            (JsonValue::String(s), Some(f)) => literal::parse_constant(s, f.ty).ok_or_else(bad)?,
            (v, _) => json::parse_constant(v).ok_or_else(bad)?,
        };
        bindings.insert(name.clone(), c);
    }
    let fs = ex.evaluate_failed_subproof(req.rule, &t, &bindings)?;
    Ok(Json(json::failed(db.program(), &fs)))
}

async fn stats(State(db): State<Db>) -> Json<json::StatsJson> {
    Json(db.stats().into())
}
