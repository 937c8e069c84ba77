mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::small_fixture;
use dialogue_workbench::corpus::load_corpus;
use dialogue_workbench::service::{
    router, ErrorBody, FeedbackResponse, OnlineUpdates, SessionService, SessionStatus, SessionTurn, TeachingSession,
};

fn service() -> Arc<SessionService> {
    let fx = small_fixture(10, 4);
    Arc::new(SessionService::new(fx.model, fx.kb))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(v) => req.body(Body::from(v.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_ok<T: DeserializeOwned>(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, T) {
    let (status, bytes) = call(app, method, uri, body).await;
    assert!(status.is_success(), "{uri}: {status} {}", String::from_utf8_lossy(&bytes));
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn error(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let (status, bytes) = call(app, method, uri, body).await;
    let body: ErrorBody = serde_json::from_slice(&bytes).unwrap();
    (status, body.error)
}

#[tokio::test]
async fn utterance_returns_normalized_beliefs_for_every_slot() {
    let app = router(service());
    let (status, s): (_, TeachingSession) = call_ok(&app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(s.status, SessionStatus::Open);
    let uri = format!("/sessions/{}/utterance", s.id);
    let (_, turn): (_, SessionTurn) =
        call_ok(&app, Method::POST, &uri, Some(json!({"text": "two tickets for inception please"}))).await;
    assert_eq!(turn.turn, 1);
    assert_eq!(turn.beliefs.len(), 5);
    for b in &turn.beliefs {
        let total: f64 = b.distribution.iter().map(|c| c.prob).sum();
        assert!((total - 1.0).abs() < 1e-9, "{} sums to {total}", b.slot);
        let best = b.distribution.iter().map(|c| c.prob).fold(0.0, f64::max);
        assert_eq!(b.prob, best);
        assert!(b.distribution.iter().any(|c| c.value == b.argmax && c.prob == best));
    }
    assert_eq!(turn.kb.encoded.len(), 5);
    assert!(!turn.system_text.is_empty());
    let (_, fetched): (_, TeachingSession) = call_ok(&app, Method::GET, &format!("/sessions/{}", s.id), None).await;
    assert_eq!(fetched.turns, vec![turn]);
}

#[tokio::test]
async fn bad_requests_map_to_404_409_and_422() {
    let app = router(service());
    let (status, _) = error(&app, Method::GET, "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = error(&app, Method::POST, "/sessions/nope/utterance", Some(json!({"text": "hi"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, s): (_, TeachingSession) = call_ok(&app, Method::POST, "/sessions", None).await;
    let base = format!("/sessions/{}", s.id);
    let (status, _) = error(&app, Method::POST, &format!("{base}/feedback"), Some(json!({"success": true}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = error(&app, Method::POST, &format!("{base}/utterance"), Some(json!({"text": "  "}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let _: (_, SessionTurn) = call_ok(&app, Method::POST, &format!("{base}/utterance"), Some(json!({"text": "hello"}))).await;

    let fix = |slot: &str, value: &str, turn: usize| Some(json!({"turn": turn, "slot": slot, "value": value}));
    let (status, msg) = error(&app, Method::POST, &format!("{base}/corrections"), fix("movie", "casablanca-9", 1)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(msg.contains("valid:") && msg.contains("<dontcare>"), "{msg}");
    let (status, msg) = error(&app, Method::POST, &format!("{base}/corrections"), fix("genre", "x", 1)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(msg.contains("theater"), "{msg}");
    let (status, _) = error(&app, Method::POST, &format!("{base}/corrections"), fix("movie", "<dontcare>", 2)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let _: (_, FeedbackResponse) =
        call_ok(&app, Method::POST, &format!("{base}/feedback"), Some(json!({"success": false}))).await;
    let (status, _) = error(&app, Method::POST, &format!("{base}/feedback"), Some(json!({"success": true}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = error(&app, Method::POST, &format!("{base}/utterance"), Some(json!({"text": "again"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = error(&app, Method::POST, &format!("{base}/corrections"), fix("movie", "<dontcare>", 1)).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn feedback_appends_one_corrected_dialogue() {
    let svc = service();
    let app = router(svc.clone());
    let (_, s): (_, TeachingSession) = call_ok(&app, Method::POST, "/sessions", None).await;
    let base = format!("/sessions/{}", s.id);
    let mut turns = Vec::new();
    for text in ["i want to see a movie", "tomorrow at seven"] {
        let (status, bytes) = call(&app, Method::POST, &format!("{base}/utterance"), Some(json!({"text": text}))).await;
        if status == StatusCode::CONFLICT {
            break;
        }
        turns.push(serde_json::from_slice::<SessionTurn>(&bytes).unwrap());
    }
    // Pick a theater value the tracker did not choose at turn 1.
    let wrong = &turns[0].beliefs[2];
    let value = wrong.distribution.iter().find(|c| c.value != wrong.argmax).unwrap().value.clone();
    let (_, after): (_, TeachingSession) = call_ok(
        &app,
        Method::POST,
        &format!("{base}/corrections"),
        Some(json!({"turn": 1, "slot": "theater", "value": value})),
    )
    .await;
    assert_eq!(after.corrections.len(), 1);

    assert!(svc.aggregated().is_empty());
    let (_, fb): (_, FeedbackResponse) =
        call_ok(&app, Method::POST, &format!("{base}/feedback"), Some(json!({"success": true}))).await;
    assert_eq!(fb.status, SessionStatus::Closed);
    assert_eq!(fb.aggregated_dialogues, 1);
    assert!(!fb.model_updated);
    let corpus = svc.aggregated();
    assert_eq!(corpus.len(), 1);
    let d = &corpus[0];
    assert_eq!(d.turns.len(), turns.len());
    for (k, (t, recorded)) in d.turns.iter().zip(&turns).enumerate() {
        assert_eq!(t.gold_labels[2], value, "correction carried to turn {}", k + 1);
        assert_eq!(t.gold_labels[0], recorded.beliefs[0].argmax);
        assert_eq!(t.action, recorded.action);
        assert!(!t.action_mask);
    }
    assert!(d.outcome.success);
}

fn flat(p: &dialogue_workbench::autodiff::ParamSet) -> Vec<f64> {
    p.iter().flat_map(|(_, _, t)| t.values().to_vec()).collect()
}

#[tokio::test]
async fn aggregation_file_persists_and_online_updates_move_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("taught.tsv");
    let fx = small_fixture(10, 4);
    let before = fx.model.clone();
    let svc = Arc::new(
        SessionService::new(fx.model, fx.kb.clone())
            .with_online_updates(Some(OnlineUpdates::default()))
            .with_aggregation_path(path.clone())
            .unwrap(),
    );
    let s = svc.create_session();
    svc.utterance(&s.id, "a movie please").unwrap();
    let fb = svc.feedback(&s.id, false).unwrap();
    assert!(fb.model_updated);
    assert_ne!(flat(svc.model().params()), flat(before.params()));
    assert_eq!(load_corpus(&path).unwrap().len(), 1);

    let reopened = SessionService::new(before, fx.kb).with_aggregation_path(path.clone()).unwrap();
    assert_eq!(reopened.aggregated().len(), 1);
    let s2 = reopened.create_session();
    reopened.utterance(&s2.id, "hello").unwrap();
    assert_eq!(reopened.feedback(&s2.id, true).unwrap().aggregated_dialogues, 2);
    assert_eq!(load_corpus(&path).unwrap().len(), 2);
}
