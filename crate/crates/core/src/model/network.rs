use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::hyper::{ModelHyper, SystemActionSpace};
use super::vocab::Vocabulary;
use crate::autodiff::{Graph, NodeId, ParamId, ParamSet};
use crate::dialogue::{argmax, BeliefState, Slot};
use crate::domain::KB_SUMMARY_WIDTH;
use crate::error::{Error, Result};

/// Floor applied to tracker log-probabilities before they enter the policy.
pub const LOG_PROB_FLOOR: f64 = -18.420_680_743_952_367; // ln(1e-8)

/// Parameter-name prefix of the policy network.
pub const POLICY_PREFIX: &str = "policy.";

/// LSTM weights: `w` is `[4h, input + h]` with gate blocks in the order
/// input, forget, candidate, output.
#[derive(Debug, Clone, Copy)]
struct Lstm {
    w: ParamId,
    b: ParamId,
    hidden: usize,
}

impl Lstm {
    fn init(params: &mut ParamSet, name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let w = params.weight(format!("{name}.w"), 4 * hidden, input + hidden, rng)?;
        let b = params.bias(format!("{name}.b"), 4 * hidden)?;
        params.get_mut(b).values_mut()[hidden..2 * hidden].fill(1.0);
        Ok(Self { w, b, hidden })
    }

    fn lookup(params: &ParamSet, name: &str, hidden: usize) -> Result<Self> {
        Ok(Self {
            w: params.id(&format!("{name}.w"))?,
            b: params.id(&format!("{name}.b"))?,
            hidden,
        })
    }

    fn step(&self, g: &mut Graph<'_>, x: NodeId, state: LstmState) -> Result<LstmState> {
        let h = self.hidden;
        let xh = g.concat(&[x, state.h])?;
        let w = g.param(self.w);
        let b = g.param(self.b);
        let wx = g.matmul(w, xh)?;
        let z = g.add(wx, b)?;
        let zi = g.slice(z, 0, h)?;
        let zf = g.slice(z, h, h)?;
        let zg = g.slice(z, 2 * h, h)?;
        let zo = g.slice(z, 3 * h, h)?;
        let i = g.sigmoid(zi)?;
        let f = g.sigmoid(zf)?;
        let cand = g.tanh(zg)?;
        let o = g.sigmoid(zo)?;
        let keep = g.mul(f, state.c)?;
        let write = g.mul(i, cand)?;
        let c = g.add(keep, write)?;
        let tc = g.tanh(c)?;
        let h = g.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    fn zero_state(&self, g: &mut Graph<'_>) -> LstmState {
        LstmState {
            h: g.vector(vec![0.0; self.hidden]),
            c: g.vector(vec![0.0; self.hidden]),
        }
    }
}

/// One-hidden-layer MLP `w2 · tanh(w1 · x + b1) + b2` producing logits.
#[derive(Debug, Clone, Copy)]
struct Mlp {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

impl Mlp {
    fn init(
        params: &mut ParamSet,
        name: &str,
        input: usize,
        hidden: usize,
        output: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            w1: params.weight(format!("{name}.w1"), hidden, input, rng)?,
            b1: params.bias(format!("{name}.b1"), hidden)?,
            w2: params.weight(format!("{name}.w2"), output, hidden, rng)?,
            b2: params.bias(format!("{name}.b2"), output)?,
        })
    }

    fn lookup(params: &ParamSet, name: &str) -> Result<Self> {
        Ok(Self {
            w1: params.id(&format!("{name}.w1"))?,
            b1: params.id(&format!("{name}.b1"))?,
            w2: params.id(&format!("{name}.w2"))?,
            b2: params.id(&format!("{name}.b2"))?,
        })
    }

    fn logits(&self, g: &mut Graph<'_>, x: NodeId, dropout: Option<&mut Dropout>) -> Result<NodeId> {
        let w1 = g.param(self.w1);
        let b1 = g.param(self.b1);
        let pre = g.matmul(w1, x)?;
        let pre = g.add(pre, b1)?;
        let mut hidden = g.tanh(pre)?;
        if let Some(d) = dropout {
            hidden = g.dropout(hidden, d.keep_prob, true, &mut d.rng)?;
        }
        let w2 = g.param(self.w2);
        let b2 = g.param(self.b2);
        let out = g.matmul(w2, hidden)?;
        g.add(out, b2)
    }
}

/// Training-time dropout: keep probability and the stream used for masks.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub keep_prob: f64,
    pub rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Invalid(format!("dropout rate {rate} not in [0, 1)")));
        }
        Ok(Self {
            keep_prob: 1.0 - rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

/// Hidden and cell vectors of an LSTM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmState {
    pub h: NodeId,
    pub c: NodeId,
}

#[derive(Debug, Clone)]
struct Layout {
    words: ParamId,
    actions: ParamId,
    enc_fwd: Lstm,
    enc_bwd: Lstm,
    dialogue: Lstm,
    trackers: Vec<Mlp>,
    policy: Mlp,
    values: Vec<ParamId>,
}

/// The hierarchical recurrent dialogue model: a bidirectional utterance
/// encoder, a dialogue-level LSTM, one belief tracker per slot and a policy
/// network over the system action inventory.
#[derive(Debug, Clone)]
pub struct DialogueModel {
    hyper: ModelHyper,
    vocab: Vocabulary,
    candidates: Vec<Vec<String>>,
    actions: SystemActionSpace,
    params: ParamSet,
    layout: Layout,
}

impl DialogueModel {
    pub fn new(
        hyper: ModelHyper,
        vocab: Vocabulary,
        candidates: Vec<Vec<String>>,
        actions: SystemActionSpace,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate()?;
        if candidates.len() != Slot::COUNT || candidates.iter().any(Vec::is_empty) {
            return Err(Error::Invalid(format!(
                "need {} non-empty candidate lists, got {}",
                Slot::COUNT,
                candidates.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new(seed);
        let h = hyper;
        let words = p.embedding("embedding.words", vocab.len(), h.word_embedding, &mut rng)?;
        let actions_emb = p.embedding("embedding.actions", actions.len() + 1, h.action_embedding, &mut rng)?;
        let enc_fwd = Lstm::init(&mut p, "encoder.fwd", h.word_embedding, h.encoder, &mut rng)?;
        let enc_bwd = Lstm::init(&mut p, "encoder.bwd", h.word_embedding, h.encoder, &mut rng)?;
        let dialogue = Lstm::init(
            &mut p,
            "dialogue",
            h.utterance_width() + h.action_embedding,
            h.dialogue_state,
            &mut rng,
        )?;
        let mut trackers = Vec::new();
        for (slot, cands) in Slot::ALL.iter().zip(&candidates) {
            trackers.push(Mlp::init(
                &mut p,
                &format!("tracker.{slot}"),
                h.dialogue_state,
                h.policy_hidden,
                cands.len(),
                &mut rng,
            )?);
        }
        let mut values = Vec::new();
        if h.use_value_embeddings {
            for (slot, cands) in Slot::ALL.iter().zip(&candidates) {
                values.push(p.embedding(format!("embedding.value.{slot}"), cands.len(), h.action_embedding, &mut rng)?);
            }
        }
        let policy_in = Self::policy_input_width(&h, &candidates);
        let policy = Mlp::init(&mut p, "policy", policy_in, h.policy_hidden, actions.len(), &mut rng)?;
        let layout = Layout {
            words,
            actions: actions_emb,
            enc_fwd,
            enc_bwd,
            dialogue,
            trackers,
            policy,
            values,
        };
        Ok(Self {
            hyper,
            vocab,
            candidates,
            actions,
            params: p,
            layout,
        })
    }

    fn policy_input_width(h: &ModelHyper, candidates: &[Vec<String>]) -> usize {
        let values = if h.use_value_embeddings {
            Slot::COUNT * h.action_embedding
        } else {
            0
        };
        h.dialogue_state + candidates.iter().map(Vec::len).sum::<usize>() + KB_SUMMARY_WIDTH + values
    }

    /// Rebuilds a model around stored parameters; names and shapes must
    /// match the layout implied by the other arguments.
    pub fn from_parts(
        hyper: ModelHyper,
        vocab: Vocabulary,
        candidates: Vec<Vec<String>>,
        actions: SystemActionSpace,
        params: ParamSet,
    ) -> Result<Self> {
        let template = Self::new(hyper, vocab, candidates, actions, params.seed())?;
        if template.params.len() != params.len() {
            return Err(Error::Invalid(format!(
                "expected {} parameters, found {}",
                template.params.len(),
                params.len()
            )));
        }
        for (_, name, t) in template.params.iter() {
            let stored = params.by_name(name).ok_or_else(|| Error::UnknownParam(name.to_string()))?;
            if stored.shape() != t.shape() {
                return Err(Error::shape("checkpoint", format!("{name}: {:?} vs {:?}", stored.shape(), t.shape())));
            }
        }
        let h = hyper;
        let layout = Layout {
            words: params.id("embedding.words")?,
            actions: params.id("embedding.actions")?,
            enc_fwd: Lstm::lookup(&params, "encoder.fwd", h.encoder)?,
            enc_bwd: Lstm::lookup(&params, "encoder.bwd", h.encoder)?,
            dialogue: Lstm::lookup(&params, "dialogue", h.dialogue_state)?,
            trackers: Slot::ALL
                .iter()
                .map(|s| Mlp::lookup(&params, &format!("tracker.{s}")))
                .collect::<Result<_>>()?,
            policy: Mlp::lookup(&params, "policy")?,
            values: if h.use_value_embeddings {
                Slot::ALL
                    .iter()
                    .map(|s| params.id(&format!("embedding.value.{s}")))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            },
        };
        Ok(Self {
            params,
            layout,
            ..template
        })
    }

    pub fn hyper(&self) -> &ModelHyper {
        &self.hyper
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn candidates(&self) -> &[Vec<String>] {
        &self.candidates
    }

    pub fn candidate_index(&self, slot: Slot, value: &str) -> Result<usize> {
        self.candidates[slot.index()]
            .iter()
            .position(|c| c == value)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "`{value}` is not a candidate for {slot}; valid: {}",
                    self.candidates[slot.index()].join(", ")
                ))
            })
    }

    pub fn actions(&self) -> &SystemActionSpace {
        &self.actions
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Whether a parameter belongs to the policy network.
    pub fn is_policy_param(name: &str) -> bool {
        name.starts_with(POLICY_PREFIX)
    }

    pub fn initial_state(&self, g: &mut Graph<'_>) -> LstmState {
        self.layout.dialogue.zero_state(g)
    }

    /// Utterance vector `[forward final; backward final]` of a token index sequence.
    pub fn encode_utterance(&self, g: &mut Graph<'_>, tokens: &[usize]) -> Result<NodeId> {
        if tokens.is_empty() {
            return Err(Error::Empty("utterance tokens"));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= self.vocab.len()) {
            return Err(Error::Invalid(format!("token index {bad} outside vocabulary")));
        }
        let table = g.param(self.layout.words);
        let embedded: Vec<NodeId> = tokens.iter().map(|&t| g.embedding(table, t)).collect::<Result<_>>()?;
        let mut fwd = self.layout.enc_fwd.zero_state(g);
        for &x in &embedded {
            fwd = self.layout.enc_fwd.step(g, x, fwd)?;
        }
        let mut bwd = self.layout.enc_bwd.zero_state(g);
        for &x in embedded.iter().rev() {
            bwd = self.layout.enc_bwd.step(g, x, bwd)?;
        }
        g.concat(&[fwd.h, bwd.h])
    }

    /// Dialogue-level update `s_k = LSTM(s_{k-1}, [U_k, emb(A_{k-1})])`.
    pub fn dialogue_step(
        &self,
        g: &mut Graph<'_>,
        prev: LstmState,
        utterance: NodeId,
        prev_action: usize,
    ) -> Result<LstmState> {
        if g.shape(utterance) != [self.hyper.utterance_width()] {
            return Err(Error::shape(
                "dialogue_step",
                format!("utterance {:?}, expected [{}]", g.shape(utterance), self.hyper.utterance_width()),
            ));
        }
        if prev_action > self.actions.start_index() {
            return Err(Error::Invalid(format!("previous action index {prev_action} out of range")));
        }
        let table = g.param(self.layout.actions);
        let a = g.embedding(table, prev_action)?;
        let x = g.concat(&[utterance, a])?;
        self.layout.dialogue.step(g, x, prev)
    }

    /// Per-slot log-probabilities over the candidate lists.
    pub fn track_beliefs(&self, g: &mut Graph<'_>, state: NodeId) -> Result<Vec<NodeId>> {
        self.layout
            .trackers
            .iter()
            .map(|mlp| {
                let logits = mlp.logits(g, state, None)?;
                g.log_softmax(logits)
            })
            .collect()
    }

    /// Belief distributions read from tracker log-probability nodes.
    pub fn beliefs(&self, g: &Graph<'_>, slot_log_probs: &[NodeId]) -> Result<BeliefState> {
        let probs = slot_log_probs
            .iter()
            .map(|&n| g.value(n).iter().map(|v| v.exp()).collect())
            .collect();
        BeliefState::new(self.candidates.clone(), probs)
    }

    /// Argmax candidate per slot (ties to the lowest index).
    pub fn argmax_labels(&self, g: &Graph<'_>, slot_log_probs: &[NodeId]) -> Vec<String> {
        slot_log_probs
            .iter()
            .zip(&self.candidates)
            .map(|(&n, c)| c[argmax(g.value(n))].clone())
            .collect()
    }

    /// Log-probabilities over system actions from `[s_k, v_k, E_k]`.
    pub fn policy_log_probs(
        &self,
        g: &mut Graph<'_>,
        state: NodeId,
        slot_log_probs: &[NodeId],
        kb_summary: &[f64],
        dropout: Option<&mut Dropout>,
    ) -> Result<NodeId> {
        if kb_summary.len() != KB_SUMMARY_WIDTH {
            return Err(Error::shape(
                "policy",
                format!("kb summary [{}], expected [{KB_SUMMARY_WIDTH}]", kb_summary.len()),
            ));
        }
        let mut inputs = vec![state];
        for &lp in slot_log_probs {
            inputs.push(g.clamp_min(lp, LOG_PROB_FLOOR)?);
        }
        inputs.push(g.vector(kb_summary.to_vec()));
        for (&table_id, &lp) in self.layout.values.iter().zip(slot_log_probs) {
            let best = argmax(g.value(lp));
            let table = g.param(table_id);
            inputs.push(g.embedding(table, best)?);
        }
        let x = g.concat(&inputs)?;
        let logits = self.layout.policy.logits(g, x, dropout)?;
        g.log_softmax(logits)
    }

    /// Encodes one user turn and advances the dialogue state. Training
    /// dropout, when given, is applied to the utterance vector.
    pub fn read_turn(
        &self,
        g: &mut Graph<'_>,
        prev: LstmState,
        tokens: &[usize],
        prev_action: usize,
        dropout: Option<&mut Dropout>,
    ) -> Result<TurnOutput> {
        let mut u = self.encode_utterance(g, tokens)?;
        if let Some(d) = dropout {
            u = g.dropout(u, d.keep_prob, true, &mut d.rng)?;
        }
        let state = self.dialogue_step(g, prev, u, prev_action)?;
        let slot_log_probs = self.track_beliefs(g, state.h)?;
        Ok(TurnOutput { state, slot_log_probs })
    }

    /// Sets every parameter value to zero.
    pub fn zero_all_params(&mut self) {
        let ids: Vec<ParamId> = self.params.iter().map(|(id, _, _)| id).collect();
        for id in ids {
            self.params.get_mut(id).values_mut().fill(0.0);
        }
    }
}

/// Graph nodes produced by reading one user turn.
#[derive(Debug, Clone)]
pub struct TurnOutput {
    pub state: LstmState,
    pub slot_log_probs: Vec<NodeId>,
}
