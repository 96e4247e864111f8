//! An in-process client for the HTTP API.
#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use modcanvas_service::api::{router, Service};
use modcanvas_service::config::HashParams;
use modcanvas_service::store::Store;
use serde_json::{json, Value};
use tower::ServiceExt;

/// Argon2 parameters small enough for tests.
pub const CHEAP: HashParams = HashParams {
    memory_kib: 64,
    iterations: 1,
    parallelism: 1,
};

#[derive(Clone)]
pub struct Client {
    pub app: Router,
}

pub struct Reply {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or(Value::Null)
    }

    pub fn error(&self) -> String {
        self.json()["error"].as_str().unwrap_or_default().to_owned()
    }
}

impl Client {
    pub fn new() -> Client {
        Client::with_store(Store::in_memory())
    }

    pub fn with_store(store: Store) -> Client {
        Client {
            app: router(Service::new(store, CHEAP, "en")),
        }
    }

    pub async fn send(&self, method: Method, uri: &str, token: Option<&str>, body: Body, json: bool) -> Reply {
        let mut request = Request::builder().method(method).uri(uri);
        if let Some(token) = token {
            request = request.header("authorization", format!("Bearer {token}"));
        }
        if json {
            request = request.header("content-type", "application/json");
        }
        let response = self.app.clone().oneshot(request.body(body).unwrap()).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, bytes }
    }

    pub async fn get(&self, uri: &str, token: &str) -> Reply {
        self.send(Method::GET, uri, Some(token), Body::empty(), false).await
    }

    pub async fn post(&self, uri: &str, token: Option<&str>, body: Value) -> Reply {
        self.send(Method::POST, uri, token, Body::from(body.to_string()), true).await
    }

    pub async fn put(&self, uri: &str, token: &str, body: Value) -> Reply {
        self.send(Method::PUT, uri, Some(token), Body::from(body.to_string()), true).await
    }

    pub async fn post_bytes(&self, uri: &str, token: &str, bytes: Vec<u8>) -> Reply {
        self.send(Method::POST, uri, Some(token), Body::from(bytes), false).await
    }

    /// Registers `logon` (avatar named the same) and logs in.
    pub async fn user(&self, logon: &str) -> (String, String) {
        let reply = self
            .post("/users", None, json!({"logonId": logon, "password": "correct-horse"}))
            .await;
        assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.json());
        let login = self
            .post("/login", None, json!({"logonId": logon, "password": "correct-horse"}))
            .await;
        assert_eq!(login.status, StatusCode::OK);
        let body = login.json();
        (
            body["account"]["userId"].as_str().unwrap().to_owned(),
            body["token"].as_str().unwrap().to_owned(),
        )
    }

    /// Imports a package and returns the new module id.
    pub async fn import(&self, token: &str, bytes: Vec<u8>, title: &str, kind: &str) -> String {
        let reply = self
            .post_bytes(&format!("/import?title={title}&type={kind}"), token, bytes)
            .await;
        assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.json());
        reply.json()["moduleId"].as_str().unwrap().to_owned()
    }

    /// Creates an empty composition, returning (module id, composition id).
    pub async fn composition(&self, token: &str, title: &str) -> (String, String) {
        let reply = self.post("/modules", Some(token), json!({"title": title})).await;
        assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.json());
        let body = reply.json();
        (
            body["module"]["moduleId"].as_str().unwrap().to_owned(),
            body["graph"]["compositionId"].as_str().unwrap().to_owned(),
        )
    }

    /// Applies edit operations at `version`; returns the reply.
    pub async fn edit(&self, token: &str, composition: &str, version: u64, ops: Value) -> Reply {
        self.post(
            &format!("/compositions/{composition}"),
            Some(token),
            json!({"expectedVersion": version, "ops": ops}),
        )
        .await
    }

    pub async fn publish(&self, token: &str, module: &str) -> Reply {
        self.post(&format!("/modules/{module}/publish"), Some(token), json!({})).await
    }
}
