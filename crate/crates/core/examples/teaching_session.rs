//! A human-teaching session over the HTTP API, driven in-process: open a
//! session, talk, correct a belief, give feedback and inspect what was
//! added to the aggregation corpus.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use dialogue_workbench::corpus::generate_corpus;
use dialogue_workbench::domain::{generate_kb, KbSize};
use dialogue_workbench::model::{model_for_corpus, ModelHyper};
use dialogue_workbench::service::{router, SessionService};
use dialogue_workbench::simulator::UserSimulator;
use dialogue_workbench::trainer::{supervised_train, SlHyper};

async fn send(app: &Router, method: Method, uri: &str, body: Value) -> Value {
    let req = Request::builder()
        .method(method.clone())
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .expect("request");
    let resp = app.clone().oneshot(req).await.expect("infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    let value: Value = serde_json::from_slice(&bytes).expect("json");
    println!("{method} {uri} -> {status}");
    value
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> dialogue_workbench::Result<()> {
    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    let corpus = generate_corpus(&UserSimulator::new(kb.clone(), 7), 200)?;
    let mut model = model_for_corpus(ModelHyper::desk(), &corpus, kb.ontology(), 3)?;
    supervised_train(&mut model, &corpus, &SlHyper { epochs: 5, ..SlHyper::default() })?;
    let service = Arc::new(SessionService::new(model, kb));
    let app = router(service.clone());

    let session = send(&app, Method::POST, "/sessions", Value::Null).await;
    let id = session["id"].as_str().expect("id").to_string();
    for text in ["i would like two tickets", "the matrix tomorrow evening"] {
        let turn = send(&app, Method::POST, &format!("/sessions/{id}/utterance"), json!({ "text": text })).await;
        if let Some(err) = turn.get("error") {
            println!("  {err}");
            break;
        }
        println!("  system [{}]: {}", turn["action"], turn["system_text"]);
        for b in turn["beliefs"].as_array().expect("beliefs") {
            println!("    {:<12} {:<14} p={:.2}", b["slot"].as_str().unwrap_or(""), b["argmax"].as_str().unwrap_or(""), b["prob"].as_f64().unwrap_or(0.0));
        }
    }
    let bad = send(&app, Method::POST, &format!("/sessions/{id}/corrections"), json!({"turn": 1, "slot": "movie", "value": "jaws"})).await;
    println!("  {}", bad["error"]);
    let fixed = send(&app, Method::POST, &format!("/sessions/{id}/corrections"), json!({"turn": 1, "slot": "num_tickets", "value": "2"})).await;
    println!("  corrections: {}", fixed["corrections"]);
    let fb = send(&app, Method::POST, &format!("/sessions/{id}/feedback"), json!({"success": false})).await;
    println!("  {fb}");
    let taught = &service.aggregated()[0];
    for (k, t) in taught.turns.iter().enumerate() {
        println!("  taught turn {}: labels {:?}, system chose {} (action supervised: {})", k + 1, t.gold_labels, t.action, t.action_mask);
    }
    Ok(())
}
