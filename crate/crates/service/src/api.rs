//! HTTP/JSON API over a [`Store`].
//!
//! Every route except `POST /users` and `POST /login` needs an
//! `Authorization: Bearer <token>` header. Tokens live in memory only and
//! are lost on restart.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{NaiveDate, Utc};
use modcanvas_core::analysis::validate;
use modcanvas_core::condition::{parse, print};
use modcanvas_core::h5p::{
    export_composition, extract_composition, read_package, write_package, H5pPackage,
    PLAYER_MACHINE_NAME,
};
use modcanvas_core::model::{
    new_composition_with_ids, AssessmentKind, CompositionGraph, CompositionId, ContentId, ContentRef,
    Licence, ModuleDescriptor, ModuleId, NodeId, OutcomeRecord, ReviewItemId, SessionId, UserId,
    COMPOSITION_CONTENT_TYPE,
};
use modcanvas_core::registry::ModuleRegistry;
use modcanvas_core::remix::{Grant, ModuleRecord};
use modcanvas_core::scheduler::due_items;
use modcanvas_core::session::{trace_json_lines, SessionError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::accounts::{hash_password, verify_password, PublicAccount, MIN_PASSWORD_CHARS};
use crate::chat::{ChatCatalog, ChatMessage};
use crate::config::HashParams;
use crate::error::ServiceError;
use crate::state::{Effect, Favourite, Mutation};
use crate::store::Store;

type Result<T, E = ServiceError> = std::result::Result<T, E>;

pub struct Service {
    pub store: Store,
    tokens: RwLock<HashMap<String, UserId>>,
    hash: HashParams,
    default_locale: String,
}

pub type AppState = Arc<Service>;

impl Service {
    pub fn new(store: Store, hash: HashParams, default_locale: &str) -> AppState {
        Arc::new(Service {
            store,
            tokens: RwLock::new(HashMap::new()),
            hash,
            default_locale: default_locale.to_owned(),
        })
    }

    fn user(&self, headers: &HeaderMap) -> Result<UserId> {
        let token = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or(ServiceError::Unauthorized)?;
        self.tokens
            .read()
            .expect("token lock poisoned")
            .get(token.trim())
            .cloned()
            .ok_or(ServiceError::Unauthorized)
    }

    /// Commits on a blocking thread: commits sync the log to disk.
    async fn commit(self: &Arc<Self>, mutation: Mutation) -> Result<Effect> {
        let service = self.clone();
        tokio::task::spawn_blocking(move || service.store.commit(mutation))
            .await
            .map_err(|e| ServiceError::Storage(e.to_string()))?
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/users", post(register))
        .route("/login", post(login))
        .route("/users/{id}/rewards", get(rewards))
        .route("/modules", get(list_modules).post(create_module))
        .route("/modules/{id}", get(get_module))
        .route("/modules/{id}/publish", post(publish))
        .route("/modules/{id}/derive", post(derive))
        .route("/modules/{id}/like", post(like))
        .route("/modules/{id}/favourite", post(favourite_module))
        .route("/avatars/{id}/favourite", post(favourite_avatar))
        .route("/favourites", get(favourites))
        .route("/search", get(search))
        .route(
            "/compositions/{id}",
            get(get_composition).post(edit_composition).put(put_composition),
        )
        .route("/compositions/{id}/validate", post(validate_composition))
        .route("/compositions/{id}/merge", post(merge))
        .route("/compositions/{id}/export", get(export))
        .route("/conditions/parse", post(parse_condition))
        .route("/import", post(import))
        .route("/runs", post(start_run))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/outcome", post(submit))
        .route("/runs/{id}/trace", get(trace))
        .route("/reviews/due", get(reviews_due))
        .route("/reviews/{id}", post(review_item))
        .route("/chat", get(inbox).post(send_chat))
        .with_state(state)
}

/// JSON body whose rejections use the service's error format.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(value)| Body(value))
            .map_err(|e| ServiceError::BadRequest(e.body_text()))
    }
}

fn created(value: impl Serialize) -> Response {
    (StatusCode::CREATED, Json(value)).into_response()
}

// Accounts

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RegisterBody {
    logon_id: String,
    password: String,
    email: Option<String>,
    avatar_name: Option<String>,
    locale: Option<String>,
}

async fn register(State(app): State<AppState>, Body(body): Body<RegisterBody>) -> Result<Response> {
    if body.logon_id.trim().is_empty() {
        return Err(ServiceError::BadRequest("logon id must not be empty".into()));
    }
    if body.password.chars().count() < MIN_PASSWORD_CHARS {
        return Err(ServiceError::WeakPassword(MIN_PASSWORD_CHARS));
    }
    if app.store.state().logons.contains_key(&body.logon_id) {
        return Err(ServiceError::LogonIdTaken(body.logon_id));
    }
    let params = app.hash;
    let password = body.password;
    let password_hash = tokio::task::spawn_blocking(move || hash_password(&password, params))
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))?
        .map_err(ServiceError::Storage)?;
    let mutation = Mutation::Register {
        user_id: UserId::fresh(),
        avatar_name: body.avatar_name.unwrap_or_else(|| body.logon_id.clone()),
        logon_id: body.logon_id,
        password_hash,
        email: body.email,
        locale: body.locale.unwrap_or_else(|| app.default_locale.clone()),
    };
    let Effect::Registered { account, notice } = app.commit(mutation).await? else {
        unreachable!("register yields an account")
    };
    Ok(created(json!({"account": account, "notice": notice})))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct LoginBody {
    logon_id: String,
    password: String,
}

async fn login(State(app): State<AppState>, Body(body): Body<LoginBody>) -> Result<Json<Value>> {
    let account = app
        .store
        .state()
        .user_by_logon(&body.logon_id)
        .cloned()
        .ok_or(ServiceError::BadCredentials)?;
    let hash = account.password_hash.clone();
    let ok = tokio::task::spawn_blocking(move || verify_password(&body.password, &hash))
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))?;
    if !ok {
        return Err(ServiceError::BadCredentials);
    }
    let token = uuid::Uuid::new_v4().simple().to_string();
    app.tokens
        .write()
        .expect("token lock poisoned")
        .insert(token.clone(), account.user_id.clone());
    Ok(Json(json!({"token": token, "account": PublicAccount::from(&account)})))
}

async fn rewards(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<UserId>) -> Result<Response> {
    app.user(&headers)?;
    let summary = app.store.state().catalog.rewards_summary(&id)?;
    Ok(Json(summary).into_response())
}

// Modules

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ModuleView {
    #[serde(flatten)]
    descriptor: ModuleDescriptor,
    published: bool,
    likes: usize,
    reuse_count: u32,
    remix_count: u32,
}

fn module_view(state: &crate::state::State, record: &ModuleRecord) -> ModuleView {
    ModuleView {
        descriptor: record.descriptor.clone(),
        published: record.published,
        likes: state.like_count(&record.descriptor.module_id),
        reuse_count: record.lineage.reuse_count,
        remix_count: record.lineage.remix_count,
    }
}

async fn list_modules(State(app): State<AppState>, headers: HeaderMap) -> Result<Json<Vec<ModuleView>>> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    let views = state
        .catalog
        .records()
        .filter(|r| r.published || r.descriptor.author_id == user)
        .map(|r| module_view(&state, r))
        .collect();
    Ok(Json(views))
}

async fn get_module(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<ModuleId>,
) -> Result<Json<ModuleView>> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    let record = state.visible_module(&id, &user)?;
    Ok(Json(module_view(&state, record)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateModuleBody {
    title: String,
}

/// Creates an empty composition; atomic modules come from `POST /import`.
async fn create_module(
    State(app): State<AppState>,
    headers: HeaderMap,
    Body(body): Body<CreateModuleBody>,
) -> Result<Response> {
    let user = app.user(&headers)?;
    let module_id = ModuleId::fresh();
    let composition = CompositionId::new(module_id.as_str());
    let (descriptor, graph) = new_composition_with_ids(&body.title, &user, module_id, composition)?;
    app.commit(Mutation::CreateComposite {
        descriptor: descriptor.clone(),
        graph: graph.clone(),
    })
    .await?;
    Ok(created(json!({"module": descriptor, "graph": graph})))
}

fn grants_json(grants: &[Grant]) -> Value {
    json!(grants)
}

async fn publish(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<ModuleId>) -> Result<Json<Value>> {
    let actor = app.user(&headers)?;
    let Effect::Published { grants } = app
        .commit(Mutation::Publish {
            module_id: id,
            actor,
            at: Utc::now(),
        })
        .await?
    else {
        unreachable!("publish yields grants")
    };
    Ok(Json(json!({"grants": grants_json(&grants)})))
}

async fn derive(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<ModuleId>) -> Result<Response> {
    let actor = app.user(&headers)?;
    let mutation = Mutation::Derive {
        module_id: id,
        actor,
        new_id: ModuleId::fresh(),
    };
    let Effect::Module(descriptor) = app.commit(mutation).await? else {
        unreachable!("derive yields a module")
    };
    Ok(created(descriptor))
}

async fn like(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<ModuleId>) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let Effect::Liked { likes } = app.commit(Mutation::Like { user, module_id: id }).await? else {
        unreachable!("like yields a count")
    };
    Ok(Json(json!({"likes": likes})))
}

async fn favourite(app: AppState, headers: HeaderMap, target: Favourite) -> Result<StatusCode> {
    let user = app.user(&headers)?;
    app.commit(Mutation::Favourite { user, target }).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn favourite_module(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<ModuleId>,
) -> Result<StatusCode> {
    favourite(app, headers, Favourite::Module(id)).await
}

async fn favourite_avatar(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<UserId>,
) -> Result<StatusCode> {
    favourite(app, headers, Favourite::Avatar(id)).await
}

async fn favourites(State(app): State<AppState>, headers: HeaderMap) -> Result<Json<Vec<Favourite>>> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    let list = state
        .favourites
        .get(&user)
        .map(|f| f.iter().cloned().collect())
        .unwrap_or_default();
    Ok(Json(list))
}

#[derive(Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
    #[serde(rename = "type")]
    type_filter: Option<String>,
}

async fn search(
    State(app): State<AppState>,
    headers: HeaderMap,
    Query(query): Query<SearchQuery>,
) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let filter = query.type_filter.as_deref().filter(|t| !t.is_empty());
    let results = app.store.state().search(&query.q, filter, &user);
    Ok(Json(json!({"results": results})))
}

// Compositions

/// The module holding `composition`, if `user` may see it.
fn composition_module(
    state: &crate::state::State,
    composition: &CompositionId,
    user: &UserId,
) -> Result<(ModuleDescriptor, CompositionGraph)> {
    let record = state.visible_composition(composition, user)?;
    let graph = state
        .catalog
        .composition(composition)
        .expect("composition modules have graphs")
        .clone();
    Ok((record.descriptor.clone(), graph))
}

async fn get_composition(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<CompositionId>,
) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let (module, graph) = composition_module(&app.store.state(), &id, &user)?;
    Ok(Json(json!({"moduleId": module.module_id, "version": module.version, "graph": graph})))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PutBody {
    expected_version: u32,
    graph: CompositionGraph,
}

async fn save(
    app: &AppState,
    user: UserId,
    module: ModuleDescriptor,
    expected_version: u32,
    graph: CompositionGraph,
    created_nodes: Vec<NodeId>,
) -> Result<Json<Value>> {
    let report = validate(&graph, &app.store.state().catalog);
    let mutation = Mutation::UpdateComposition {
        module_id: module.module_id,
        expected_version,
        graph,
        actor: user,
        at: Utc::now(),
    };
    let Effect::Updated { version, grants } = app.commit(mutation).await? else {
        unreachable!("updates yield a version")
    };
    Ok(Json(json!({
        "version": version,
        "grants": grants_json(&grants),
        "createdNodes": created_nodes,
        "report": report,
    })))
}

async fn put_composition(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<CompositionId>,
    Body(body): Body<PutBody>,
) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let (module, _) = composition_module(&app.store.state(), &id, &user)?;
    save(&app, user, module, body.expected_version, body.graph, Vec::new()).await
}

#[derive(Deserialize)]
#[serde(tag = "op", rename_all = "camelCase", deny_unknown_fields)]
enum EditOp {
    #[serde(rename_all = "camelCase")]
    AddNode {
        module_ref: ModuleId,
        label: Option<String>,
    },
    #[serde(rename_all = "camelCase")]
    RemoveNode { node_id: NodeId },
    #[serde(rename_all = "camelCase")]
    AddEdge {
        from: NodeId,
        to: NodeId,
        condition: Option<String>,
        priority: u32,
    },
    #[serde(rename_all = "camelCase")]
    RemoveEdge { from: NodeId, priority: u32 },
    #[serde(rename_all = "camelCase")]
    SetLabel { node_id: NodeId, label: Option<String> },
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct EditBody {
    expected_version: u32,
    ops: Vec<EditOp>,
}

/// Applies edit operations to the stored graph, all or nothing.
async fn edit_composition(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<CompositionId>,
    Body(body): Body<EditBody>,
) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    let (module, mut graph) = composition_module(&state, &id, &user)?;
    let mut created_nodes = Vec::new();
    for op in body.ops {
        graph = match op {
            EditOp::AddNode { module_ref, label } => {
                let (next, node) = graph.add_node(module_ref, &state.catalog)?;
                let next = next.set_display_label(&node, label)?;
                created_nodes.push(node);
                next
            }
            EditOp::RemoveNode { node_id } => graph.remove_node(&node_id)?,
            EditOp::AddEdge {
                from,
                to,
                condition,
                priority,
            } => {
                let condition = condition
                    .map(|source| parse(&source))
                    .transpose()
                    .map_err(ServiceError::InvalidCondition)?;
                graph.add_edge(&from, &to, condition, priority)?
            }
            EditOp::RemoveEdge { from, priority } => graph.remove_edge(&from, priority)?,
            EditOp::SetLabel { node_id, label } => graph.set_display_label(&node_id, label)?,
        };
    }
    drop(state);
    save(&app, user, module, body.expected_version, graph, created_nodes).await
}

async fn validate_composition(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<CompositionId>,
) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    let (_, graph) = composition_module(&state, &id, &user)?;
    Ok(Json(json!(validate(&graph, &state.catalog))))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MergeBody {
    remix_module_id: ModuleId,
}

async fn merge(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<CompositionId>,
    Body(body): Body<MergeBody>,
) -> Result<Json<Value>> {
    let actor = app.user(&headers)?;
    let (module, _) = composition_module(&app.store.state(), &id, &actor)?;
    let mutation = Mutation::Merge {
        original: module.module_id,
        remix: body.remix_module_id,
        actor,
        at: Utc::now(),
    };
    let Effect::Merged(outcome) = app.commit(mutation).await? else {
        unreachable!("merges yield an outcome")
    };
    Ok(Json(json!({
        "merged": outcome.result.merged,
        "conflicts": outcome.result.conflicts,
        "applied": outcome.new_version.is_some(),
        "newVersion": outcome.new_version,
        "grants": grants_json(&outcome.grants),
    })))
}

async fn export(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<CompositionId>,
) -> Result<Response> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    let (_, graph) = composition_module(&state, &id, &user)?;
    let bytes = export_bytes(&graph, &state.catalog)?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{id}.h5p\""),
            ),
        ],
        bytes,
    )
        .into_response())
}

pub fn export_bytes(graph: &CompositionGraph, registry: &dyn ModuleRegistry) -> Result<Vec<u8>> {
    let exported = export_composition(graph, registry)?;
    Ok(write_package(&exported.package)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParseBody {
    source: String,
}

async fn parse_condition(
    State(app): State<AppState>,
    headers: HeaderMap,
    Body(body): Body<ParseBody>,
) -> Result<Json<Value>> {
    app.user(&headers)?;
    let condition = parse(&body.source).map_err(ServiceError::InvalidCondition)?;
    Ok(Json(json!({"canonical": print(&condition)})))
}

// Import

#[derive(Deserialize)]
pub struct ImportQuery {
    pub title: Option<String>,
    #[serde(rename = "type")]
    pub content_type: Option<String>,
}

/// Builds the mutation importing `bytes` as a module by `author`. Player
/// packages become compositions; anything else an atomic module.
pub fn import_mutation(
    bytes: &[u8],
    query: &ImportQuery,
    author: &UserId,
) -> Result<(Mutation, Option<(ContentId, H5pPackage)>)> {
    let package = read_package(bytes)?;
    let title = query
        .title
        .clone()
        .unwrap_or_else(|| package.manifest.title.clone());
    let module_id = ModuleId::fresh();
    if package.manifest.main_library == PLAYER_MACHINE_NAME {
        let composition = CompositionId::new(module_id.as_str());
        let graph = extract_composition(&package)?.with_composition_id(composition.clone());
        let descriptor = ModuleDescriptor {
            module_id,
            title,
            author_id: author.clone(),
            content: ContentRef::Composite(composition),
            content_type: COMPOSITION_CONTENT_TYPE.into(),
            licence: Licence::CcBySa,
            version: 1,
            parent_id: None,
        };
        return Ok((Mutation::CreateComposite { descriptor, graph }, None));
    }
    let content_id = ContentId::fresh();
    let content_type = query
        .content_type
        .clone()
        .unwrap_or_else(|| content_type_of(&package.manifest.main_library));
    let descriptor = ModuleDescriptor {
        module_id,
        title,
        author_id: author.clone(),
        content: ContentRef::Atomic(content_id.clone()),
        content_type,
        licence: Licence::CcBySa,
        version: 1,
        parent_id: None,
    };
    Ok((Mutation::ImportAtomic { descriptor }, Some((content_id, package))))
}

/// `H5P.MultiChoice` becomes `multichoice`.
pub fn content_type_of(machine_name: &str) -> String {
    let short = machine_name.rsplit('.').next().unwrap_or(machine_name);
    short.to_lowercase()
}

/// Commits an import built by [`import_mutation`].
pub fn commit_import(
    store: &Store,
    bytes: &[u8],
    mutation: Mutation,
    package: Option<(ContentId, H5pPackage)>,
) -> Result<Effect> {
    match package {
        Some((content_id, package)) => store.commit_with_package(&content_id, package, bytes, mutation),
        None => store.commit(mutation),
    }
}

async fn import(
    State(app): State<AppState>,
    headers: HeaderMap,
    Query(query): Query<ImportQuery>,
    bytes: axum::body::Bytes,
) -> Result<Response> {
    let author = app.user(&headers)?;
    let service = app.clone();
    let effect = tokio::task::spawn_blocking(move || {
        let (mutation, package) = import_mutation(&bytes, &query, &author)?;
        commit_import(&service.store, &bytes, mutation, package)
    })
    .await
    .map_err(|e| ServiceError::Storage(e.to_string()))??;
    let Effect::Module(descriptor) = effect else {
        unreachable!("imports yield a module")
    };
    Ok(created(descriptor))
}

// Runs

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct StartRunBody {
    composition_id: CompositionId,
}

async fn start_run(
    State(app): State<AppState>,
    headers: HeaderMap,
    Body(body): Body<StartRunBody>,
) -> Result<Response> {
    let user = app.user(&headers)?;
    let mutation = Mutation::StartRun {
        session_id: SessionId::fresh(),
        composition_id: body.composition_id,
        user,
    };
    let Effect::Run(run) = app.commit(mutation).await? else {
        unreachable!("runs yield a session")
    };
    Ok(created(run))
}

fn own_run(app: &AppState, id: &SessionId, user: &UserId) -> Result<modcanvas_core::model::SessionState> {
    app.store
        .state()
        .runs
        .get(id)
        .filter(|r| &r.user_id == user)
        .cloned()
        .ok_or_else(|| ServiceError::NotFound(format!("run {id}")))
}

async fn get_run(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<SessionId>,
) -> Result<Json<modcanvas_core::model::SessionState>> {
    let user = app.user(&headers)?;
    Ok(Json(own_run(&app, &id, &user)?))
}

async fn trace(State(app): State<AppState>, headers: HeaderMap, Path(id): Path<SessionId>) -> Result<Response> {
    let user = app.user(&headers)?;
    let run = own_run(&app, &id, &user)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], trace_json_lines(&run)).into_response())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct OutcomeBody {
    child_run_id: Option<SessionId>,
    node_id: Option<NodeId>,
    score_percent: Option<f64>,
    #[serde(default)]
    completed: bool,
    attempts: Option<u32>,
    #[serde(default)]
    duration_seconds: f64,
    assessment_kind: Option<AssessmentKind>,
}

async fn submit(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<SessionId>,
    Body(body): Body<OutcomeBody>,
) -> Result<Json<modcanvas_core::model::SessionState>> {
    let actor = app.user(&headers)?;
    let at = Utc::now();
    let outcome = match (&body.child_run_id, &body.node_id, body.score_percent) {
        (None, Some(node), Some(score)) => Some(
            OutcomeRecord::new(
                node.clone(),
                score,
                body.completed,
                body.attempts.unwrap_or(1),
                body.duration_seconds,
                body.assessment_kind.unwrap_or(AssessmentKind::Reading),
            )
            .map_err(SessionError::from)?
            .recorded_at(at),
        ),
        (Some(_), None, None) => None,
        _ => {
            return Err(ServiceError::BadRequest(
                "send either nodeId and scorePercent, or childRunId".into(),
            ))
        }
    };
    let mutation = Mutation::SubmitOutcome {
        session_id: id,
        actor,
        outcome,
        child_run: body.child_run_id,
        at,
    };
    let Effect::Run(run) = app.commit(mutation).await? else {
        unreachable!("outcomes yield a session")
    };
    Ok(Json(run))
}

// Reviews

#[derive(Deserialize)]
struct DueQuery {
    today: Option<NaiveDate>,
}

async fn reviews_due(
    State(app): State<AppState>,
    headers: HeaderMap,
    Query(query): Query<DueQuery>,
) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    let items: Vec<_> = state.account(&user)?.reviews.values().cloned().collect();
    let today = query.today.unwrap_or_else(|| Utc::now().date_naive());
    Ok(Json(json!(due_items(&items, today))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviewBody {
    grade: u8,
    today: Option<NaiveDate>,
}

async fn review_item(
    State(app): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<ReviewItemId>,
    Body(body): Body<ReviewBody>,
) -> Result<Json<Value>> {
    let user = app.user(&headers)?;
    let mutation = Mutation::Review {
        user,
        item_id: id,
        grade: body.grade,
        today: body.today.unwrap_or_else(|| Utc::now().date_naive()),
    };
    let Effect::Reviewed(item) = app.commit(mutation).await? else {
        unreachable!("reviews yield an item")
    };
    Ok(Json(json!(item)))
}

// Chat

/// The only way to send a message: a template id and module slots.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ChatBody {
    to_user: UserId,
    template_id: String,
    #[serde(default)]
    slots: BTreeMap<String, ModuleId>,
}

fn rendered(state: &crate::state::State, message: &ChatMessage, reader: &UserId) -> Result<Value> {
    let locale = state.account(reader)?.locale.clone();
    let text = ChatCatalog::shared().render(message, &locale, |m| {
        state.catalog.module(m).map(|d| d.title.clone())
    })?;
    Ok(json!({"message": message, "text": text}))
}

async fn send_chat(
    State(app): State<AppState>,
    headers: HeaderMap,
    Body(body): Body<ChatBody>,
) -> Result<Response> {
    let from_user = app.user(&headers)?;
    let message = ChatMessage {
        message_id: uuid::Uuid::new_v4().to_string(),
        from_user,
        to_user: body.to_user,
        template_id: body.template_id,
        slots: body.slots,
        sent_at: Utc::now(),
    };
    let Effect::Chat(message) = app.commit(Mutation::Chat { message }).await? else {
        unreachable!("chat yields a message")
    };
    let view = rendered(&app.store.state(), &message, &message.to_user)?;
    Ok(created(view))
}

/// Messages to and from the caller, rendered in the caller's locale.
async fn inbox(State(app): State<AppState>, headers: HeaderMap) -> Result<Json<Vec<Value>>> {
    let user = app.user(&headers)?;
    let state = app.store.state();
    state
        .chats
        .iter()
        .filter(|m| m.to_user == user || m.from_user == user)
        .map(|m| rendered(&state, m, &user))
        .collect::<Result<Vec<_>>>()
        .map(Json)
}
