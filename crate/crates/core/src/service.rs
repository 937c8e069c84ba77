//! Live teaching sessions: a person converses with the greedy agent,
//! corrects tracked slot values on past turns and closes the dialogue with
//! success feedback. Closed sessions become annotated dialogues in an
//! aggregation corpus. [`router`] exposes the service over HTTP.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamState, Graph};
use crate::corpus::{load_corpus, save_corpus, AnnotatedDialogue, AnnotatedTurn};
use crate::dialogue::{utterance_tokens, Slot, NULL_VALUE};
use crate::domain::{first_offerable, summarize_results, KnowledgeBase, SymbolicQuery, SystemNlg};
use crate::episode::tracked_tickets;
use crate::error::Error;
use crate::model::{DecodeMode, DialogueModel, ModelAgent};
use crate::simulator::{DialogueOutcome, RewardScheme, UserGoal, MAX_TURNS};
use crate::trainer::{apply_gradients, compute_returns, supervised_train, SlHyper, DEFAULT_CLIP_NORM};

/// Environment variable holding the `serve` bind address.
pub const BIND_ENV: &str = "TOD_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    /// The agent said goodbye or the turn cap was reached.
    AwaitingFeedback,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateProb {
    pub value: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotBelief {
    pub slot: Slot,
    pub argmax: String,
    pub prob: f64,
    pub distribution: Vec<CandidateProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbView {
    pub availability: bool,
    pub bucket: String,
    pub encoded: Vec<f64>,
}

/// One completed exchange of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTurn {
    pub turn: usize,
    pub user_text: String,
    pub action: String,
    pub system_text: String,
    pub beliefs: Vec<SlotBelief>,
    pub kb: KbView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    /// 1-based turn number.
    pub turn: usize,
    pub slot: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeachingSession {
    pub id: String,
    pub status: SessionStatus,
    pub turns: Vec<SessionTurn>,
    pub corrections: Vec<Correction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub id: String,
    pub status: SessionStatus,
    pub aggregated_dialogues: usize,
    pub model_updated: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Internal(#[from] Error),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

/// Per-dialogue updates applied when feedback arrives.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineUpdates {
    /// Imitation fine-tune on the corrected dialogue.
    pub imitation: SlHyper,
    /// REINFORCE step from the feedback reward.
    pub rewards: RewardScheme,
    pub gamma: f64,
    pub learning_rate: f64,
}

impl Default for OnlineUpdates {
    fn default() -> Self {
        Self {
            imitation: SlHyper {
                epochs: 1,
                batch_size: 1,
                dropout: 0.0,
                ..SlHyper::default()
            },
            rewards: RewardScheme::default(),
            gamma: 0.95,
            learning_rate: 1e-3,
        }
    }
}

pub struct SessionService {
    model: RwLock<Arc<DialogueModel>>,
    kb: Arc<KnowledgeBase>,
    nlg: SystemNlg,
    sessions: Mutex<BTreeMap<String, TeachingSession>>,
    next_id: Mutex<u64>,
    aggregated: Mutex<Vec<AnnotatedDialogue>>,
    aggregation_path: Option<PathBuf>,
    rewards: RewardScheme,
    online: Option<OnlineUpdates>,
    /// Serializes parameter updates.
    writer: Mutex<()>,
}

impl SessionService {
    pub fn new(model: DialogueModel, kb: Arc<KnowledgeBase>) -> Self {
        Self {
            model: RwLock::new(Arc::new(model)),
            kb,
            nlg: SystemNlg::default_templates(),
            sessions: Mutex::new(BTreeMap::new()),
            next_id: Mutex::new(1),
            aggregated: Mutex::new(Vec::new()),
            aggregation_path: None,
            rewards: RewardScheme::default(),
            online: None,
            writer: Mutex::new(()),
        }
    }

    /// Persists the aggregation corpus at `path` after every feedback,
    /// continuing from its current contents when the file exists.
    pub fn with_aggregation_path(mut self, path: PathBuf) -> crate::Result<Self> {
        if path.exists() {
            *self.aggregated.get_mut().expect("fresh lock") = load_corpus(&path)?;
        }
        self.aggregation_path = Some(path);
        Ok(self)
    }

    pub fn with_rewards(mut self, rewards: RewardScheme) -> Self {
        self.rewards = rewards;
        self
    }

    pub fn with_online_updates(mut self, online: Option<OnlineUpdates>) -> Self {
        self.online = online;
        self
    }

    /// The currently published model.
    pub fn model(&self) -> Arc<DialogueModel> {
        self.model.read().expect("model lock").clone()
    }

    pub fn aggregated(&self) -> Vec<AnnotatedDialogue> {
        self.aggregated.lock().expect("corpus lock").clone()
    }

    pub fn create_session(&self) -> TeachingSession {
        let mut next = self.next_id.lock().expect("id lock");
        let id = format!("s{}", *next);
        *next += 1;
        let session = TeachingSession {
            id: id.clone(),
            status: SessionStatus::Open,
            turns: Vec::new(),
            corrections: Vec::new(),
            success: None,
        };
        self.sessions.lock().expect("session lock").insert(id, session.clone());
        session
    }

    pub fn session(&self, id: &str) -> ServiceResult<TeachingSession> {
        self.sessions
            .lock()
            .expect("session lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    /// Feeds one user utterance and returns the agent's reply turn.
    pub fn utterance(&self, id: &str, text: &str) -> ServiceResult<SessionTurn> {
        let mut session = self.session(id)?;
        match session.status {
            SessionStatus::Open => {}
            SessionStatus::AwaitingFeedback => {
                return Err(ServiceError::Conflict(format!("session `{id}` has ended and awaits feedback")))
            }
            SessionStatus::Closed => return Err(ServiceError::Conflict(format!("session `{id}` is closed"))),
        }
        if text.trim().is_empty() {
            return Err(ServiceError::Invalid("utterance text is empty".into()));
        }
        let model = self.model();
        let turn = self.reply(&model, &session.turns, text)?;
        if turn.action == "bye" || turn.turn >= MAX_TURNS {
            session.status = SessionStatus::AwaitingFeedback;
        }
        session.turns.push(turn.clone());
        self.store(session)?;
        Ok(turn)
    }

    /// Replays the past turns with their recorded actions, then reads `text`.
    fn reply(&self, model: &DialogueModel, past: &[SessionTurn], text: &str) -> ServiceResult<SessionTurn> {
        let mut agent = ModelAgent::new(model, DecodeMode::Greedy);
        for t in past {
            agent.observe_text(&t.user_text)?;
            agent.force_previous_action(model.actions().index_of_label(&t.action)?)?;
        }
        let labels = agent.observe_text(text)?;
        let results = self.kb.execute(&SymbolicQuery::from_labels(&labels));
        let summary = summarize_results(&results);
        let index = agent.decide_index(&summary)?;
        let action = model.actions().action(index)?;
        let system = self
            .nlg
            .realize(action, &labels, first_offerable(&results, tracked_tickets(&labels)));
        let beliefs = agent.belief_history().last().expect("just observed");
        Ok(SessionTurn {
            turn: past.len() + 1,
            user_text: text.to_string(),
            action: system.chosen().label(),
            system_text: system.text.clone(),
            beliefs: Slot::ALL
                .iter()
                .map(|&s| {
                    let cands = &beliefs.candidates[s.index()];
                    let probs = &beliefs.probs[s.index()];
                    let best = argmax(probs);
                    SlotBelief {
                        slot: s,
                        argmax: cands[best].clone(),
                        prob: probs[best],
                        distribution: cands
                            .iter()
                            .zip(probs)
                            .map(|(v, &p)| CandidateProb { value: v.clone(), prob: p })
                            .collect(),
                    }
                })
                .collect(),
            kb: KbView {
                availability: summary.availability,
                bucket: summary.bucket.to_string(),
                encoded: summary.encoded.to_vec(),
            },
        })
    }

    /// Records a corrected value for one slot at one past turn.
    pub fn correct(&self, id: &str, correction: Correction) -> ServiceResult<TeachingSession> {
        let mut session = self.session(id)?;
        if session.status == SessionStatus::Closed {
            return Err(ServiceError::Conflict(format!("session `{id}` is closed")));
        }
        let slot: Slot = correction.slot.parse().map_err(|_| {
            ServiceError::Invalid(format!(
                "unknown slot `{}`; valid slots: {}",
                correction.slot,
                Slot::ALL.map(|s| s.to_string()).join(", ")
            ))
        })?;
        if correction.turn == 0 || correction.turn > session.turns.len() {
            return Err(ServiceError::Invalid(format!(
                "turn {} out of range 1..={}",
                correction.turn,
                session.turns.len()
            )));
        }
        self.model().candidate_index(slot, &correction.value).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        session
            .corrections
            .retain(|c| !(c.turn == correction.turn && c.slot == slot.to_string()));
        session.corrections.push(Correction {
            turn: correction.turn,
            slot: slot.to_string(),
            value: correction.value,
        });
        session.corrections.sort_by(|a, b| (a.turn, &a.slot).cmp(&(b.turn, &b.slot)));
        self.store(session.clone())?;
        Ok(session)
    }

    /// Closes the session and appends it to the aggregation corpus.
    pub fn feedback(&self, id: &str, success: bool) -> ServiceResult<FeedbackResponse> {
        let mut session = self.session(id)?;
        if session.status == SessionStatus::Closed {
            return Err(ServiceError::Conflict(format!("session `{id}` is closed")));
        }
        if session.turns.is_empty() {
            return Err(ServiceError::Invalid("feedback needs at least one turn".into()));
        }
        let dialogue = session_dialogue(&session, success, self.rewards)?;
        session.status = SessionStatus::Closed;
        session.success = Some(success);
        let aggregated_dialogues = {
            let mut corpus = self.aggregated.lock().expect("corpus lock");
            corpus.push(dialogue.clone());
            if let Some(path) = &self.aggregation_path {
                save_corpus(&corpus, path)?;
            }
            corpus.len()
        };
        let model_updated = match &self.online {
            Some(online) => {
                self.online_update(online, &dialogue)?;
                true
            }
            None => false,
        };
        self.store(session)?;
        Ok(FeedbackResponse {
            id: id.to_string(),
            status: SessionStatus::Closed,
            aggregated_dialogues,
            model_updated,
        })
    }

    fn online_update(&self, online: &OnlineUpdates, dialogue: &AnnotatedDialogue) -> ServiceResult<()> {
        let _writer = self.writer.lock().expect("writer lock");
        let mut model = (*self.model()).clone();
        supervised_train(&mut model, std::slice::from_ref(dialogue), &online.imitation)?;
        reinforce_step(&mut model, dialogue, online)?;
        *self.model.write().expect("model lock") = Arc::new(model);
        Ok(())
    }

    fn store(&self, session: TeachingSession) -> ServiceResult<()> {
        self.sessions.lock().expect("session lock").insert(session.id.clone(), session);
        Ok(())
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Per-turn labels of a taught dialogue: the tracked argmax, overridden by
/// each correction from its turn onward until a later correction of the
/// same slot.
pub fn corrected_labels(session: &TeachingSession) -> crate::Result<Vec<Vec<String>>> {
    let mut current: Vec<Option<String>> = vec![None; Slot::COUNT];
    let mut out = Vec::with_capacity(session.turns.len());
    for t in &session.turns {
        for c in session.corrections.iter().filter(|c| c.turn == t.turn) {
            let slot: Slot = c.slot.parse()?;
            current[slot.index()] = Some(c.value.clone());
        }
        out.push(
            t.beliefs
                .iter()
                .map(|b| current[b.slot.index()].clone().unwrap_or_else(|| b.argmax.clone()))
                .collect(),
        );
    }
    Ok(out)
}

/// The annotated dialogue a closed session contributes: corrected labels
/// as tracking targets, action supervision masked off.
pub fn session_dialogue(session: &TeachingSession, success: bool, scheme: RewardScheme) -> crate::Result<AnnotatedDialogue> {
    let labels = corrected_labels(session)?;
    let turns: Vec<AnnotatedTurn> = session
        .turns
        .iter()
        .zip(&labels)
        .map(|(t, gold)| AnnotatedTurn {
            user_text: t.user_text.clone(),
            tokens: utterance_tokens(&t.user_text),
            user_acts: Vec::new(),
            gold_labels: gold.clone(),
            action: t.action.clone(),
            system_text: t.system_text.clone(),
            kb_summary: t.kb.encoded.clone(),
            action_mask: false,
        })
        .collect();
    let final_labels = labels.last().cloned().unwrap_or_else(|| vec![NULL_VALUE.to_string(); Slot::COUNT]);
    let n = turns.len();
    Ok(AnnotatedDialogue {
        goal: UserGoal {
            values: final_labels,
            feasible: success,
        },
        turns,
        outcome: DialogueOutcome {
            success,
            turn_count: n,
            rewards: scheme.rewards(n, success),
            goal_matched: success,
            confirmed_and_accepted: success,
        },
    })
}

/// One REINFORCE update from a taught dialogue's recorded actions and its
/// feedback reward.
fn reinforce_step(model: &mut DialogueModel, d: &AnnotatedDialogue, online: &OnlineUpdates) -> crate::Result<()> {
    let returns = compute_returns(&online.rewards.rewards(d.len(), d.outcome.success), online.gamma)?;
    let grads = {
        let frozen: &DialogueModel = model;
        let mut g = Graph::new(frozen.params());
        let mut state = frozen.initial_state(&mut g);
        let mut prev = frozen.actions().start_index();
        let mut terms = Vec::with_capacity(d.len());
        for (turn, &r) in d.turns.iter().zip(&returns) {
            let tokens = frozen.vocab().encode(&turn.tokens);
            let out = frozen.read_turn(&mut g, state, &tokens, prev, None)?;
            let lp = frozen.policy_log_probs(&mut g, out.state.h, &out.slot_log_probs, &turn.kb_summary, None)?;
            let action = frozen.actions().index_of_label(&turn.action)?;
            let picked = g.pick(lp, action)?;
            terms.push(g.scale(picked, -r)?);
            state = out.state;
            prev = action;
        }
        let loss = g.add_n(&terms)?;
        g.backward(loss)?
    };
    let mut adam = AdamState::new(
        model.params(),
        crate::autodiff::AdamConfig {
            learning_rate: online.learning_rate,
            ..Default::default()
        },
    );
    apply_gradients(model, &grads, &mut adam, DEFAULT_CLIP_NORM, None)?;
    Ok(())
}

/// HTTP routes over a shared service.
pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/sessions", post(create_handler))
        .route("/sessions/{id}", get(get_handler))
        .route("/sessions/{id}/utterance", post(utterance_handler))
        .route("/sessions/{id}/corrections", post(correction_handler))
        .route("/sessions/{id}/feedback", post(feedback_handler))
        .with_state(service)
}

async fn create_handler(State(svc): State<Arc<SessionService>>) -> (StatusCode, Json<TeachingSession>) {
    (StatusCode::CREATED, Json(svc.create_session()))
}

async fn get_handler(
    State(svc): State<Arc<SessionService>>,
    UrlPath(id): UrlPath<String>,
) -> ServiceResult<Json<TeachingSession>> {
    svc.session(&id).map(Json)
}

async fn utterance_handler(
    State(svc): State<Arc<SessionService>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<UtteranceRequest>,
) -> ServiceResult<Json<SessionTurn>> {
    let svc = svc.clone();
    tokio::task::spawn_blocking(move || svc.utterance(&id, &req.text))
        .await
        .map_err(|e| ServiceError::Internal(Error::Invalid(format!("worker failed: {e}"))))?
        .map(Json)
}

async fn correction_handler(
    State(svc): State<Arc<SessionService>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<Correction>,
) -> ServiceResult<Json<TeachingSession>> {
    svc.correct(&id, req).map(Json)
}

async fn feedback_handler(
    State(svc): State<Arc<SessionService>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<FeedbackRequest>,
) -> ServiceResult<Json<FeedbackResponse>> {
    let svc = svc.clone();
    tokio::task::spawn_blocking(move || svc.feedback(&id, req.success))
        .await
        .map_err(|e| ServiceError::Internal(Error::Invalid(format!("worker failed: {e}"))))?
        .map(Json)
}

/// Serves `service` on `addr` until the process is stopped.
pub async fn serve(service: Arc<SessionService>, addr: &str) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Invalid(format!("cannot bind {addr}: {e}")))?;
    axum::serve(listener, router(service))
        .await
        .map_err(|e| Error::Invalid(format!("server stopped: {e}")))
}
