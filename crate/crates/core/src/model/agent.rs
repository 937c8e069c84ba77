use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::network::{DialogueModel, LstmState, TurnOutput};
use crate::autodiff::{Graph, NodeId};
use crate::dialogue::{argmax, utterance_tokens, BeliefState, SystemAction};
use crate::domain::KbResultSummary;
use crate::episode::DialogueAgent;
use crate::error::{Error, Result};
use crate::simulator::UserTurn;

/// How the agent turns a policy distribution into an action.
#[derive(Debug, Clone)]
pub enum DecodeMode {
    Greedy,
    Sample(ChaCha8Rng),
}

/// Index drawn from `probs` by inverse-CDF sampling.
pub fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Greedy (argmax, lowest index on ties) or sampled action choice.
pub fn act(probs: &[f64], mode: &mut DecodeMode) -> usize {
    match mode {
        DecodeMode::Greedy => argmax(probs),
        DecodeMode::Sample(rng) => sample_index(probs, rng),
    }
}

/// One policy decision kept on the tape for policy-gradient updates.
#[derive(Debug, Clone, Copy)]
pub struct Decision {
    pub action: usize,
    /// Log-probability vector over actions.
    pub log_probs: NodeId,
}

/// A [`DialogueModel`] driving dialogues. The whole dialogue is recorded on
/// one graph so a loss over its decisions can be differentiated afterwards.
pub struct ModelAgent<'m> {
    model: &'m DialogueModel,
    graph: Graph<'m>,
    state: Option<LstmState>,
    prev_action: usize,
    turn: Option<TurnOutput>,
    decisions: Vec<Decision>,
    beliefs: Vec<BeliefState>,
    mode: DecodeMode,
}

impl<'m> ModelAgent<'m> {
    pub fn new(model: &'m DialogueModel, mode: DecodeMode) -> Self {
        Self {
            model,
            graph: Graph::new(model.params()),
            state: None,
            prev_action: model.actions().start_index(),
            turn: None,
            decisions: Vec::new(),
            beliefs: Vec::new(),
            mode,
        }
    }

    pub fn model(&self) -> &'m DialogueModel {
        self.model
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// Belief distributions after each observed turn.
    pub fn belief_history(&self) -> &[BeliefState] {
        &self.beliefs
    }

    pub fn graph(&self) -> &Graph<'m> {
        &self.graph
    }

    /// Hands over the recorded tape and decisions, leaving a fresh graph.
    pub fn take_tape(&mut self) -> (Graph<'m>, Vec<Decision>) {
        let graph = std::mem::replace(&mut self.graph, Graph::new(self.model.params()));
        self.state = None;
        self.turn = None;
        self.prev_action = self.model.actions().start_index();
        self.beliefs.clear();
        (graph, std::mem::take(&mut self.decisions))
    }

    /// Feeds a user utterance. Returns the tracked argmax labels.
    pub fn observe_text(&mut self, text: &str) -> Result<Vec<String>> {
        let tokens = self.model.vocab().encode(&utterance_tokens(text));
        let prev = match self.state {
            Some(s) => s,
            None => self.model.initial_state(&mut self.graph),
        };
        let out = self.model.read_turn(&mut self.graph, prev, &tokens, self.prev_action, None)?;
        let labels = self.model.argmax_labels(&self.graph, &out.slot_log_probs);
        self.beliefs.push(self.model.beliefs(&self.graph, &out.slot_log_probs)?);
        self.state = Some(out.state);
        self.turn = Some(out);
        Ok(labels)
    }

    /// Policy distribution for the pending turn, then an action from `mode`.
    pub fn decide_index(&mut self, kb: &KbResultSummary) -> Result<usize> {
        let turn = self.turn.take().ok_or(Error::Invalid("decide before observe".into()))?;
        let lp = self
            .model
            .policy_log_probs(&mut self.graph, turn.state.h, &turn.slot_log_probs, &kb.encoded, None)?;
        let probs: Vec<f64> = self.graph.value(lp).iter().map(|v| v.exp()).collect();
        let action = act(&probs, &mut self.mode);
        self.decisions.push(Decision { action, log_probs: lp });
        self.prev_action = action;
        Ok(action)
    }

    /// Policy probabilities of the most recent decision.
    pub fn last_policy(&self) -> Option<Vec<f64>> {
        self.decisions
            .last()
            .map(|d| self.graph.value(d.log_probs).iter().map(|v| v.exp()).collect())
    }

    /// Forces the previous-action input (used when replaying a transcript).
    pub fn force_previous_action(&mut self, action: usize) -> Result<()> {
        if action >= self.model.actions().len() {
            return Err(Error::Invalid(format!("action index {action} out of range")));
        }
        self.prev_action = action;
        self.turn = None;
        Ok(())
    }
}

impl DialogueAgent for ModelAgent<'_> {
    fn reset(&mut self) -> Result<()> {
        self.take_tape();
        Ok(())
    }

    fn observe(&mut self, user: &UserTurn) -> Result<Vec<String>> {
        self.observe_text(&user.text)
    }

    fn decide(&mut self, kb: &KbResultSummary) -> Result<SystemAction> {
        let i = self.decide_index(kb)?;
        self.model.actions().action(i)
    }
}
