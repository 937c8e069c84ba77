use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::apply_gradients;
use crate::autodiff::{AdamConfig, AdamState, Gradients, Graph, NodeId};
use crate::corpus::AnnotatedDialogue;
use crate::dialogue::Slot;
use crate::error::{Error, Result};
use crate::model::{DialogueModel, Dropout, UNK_INDEX};

pub const DEFAULT_BATCH_SIZE: usize = 25;
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlHyper {
    /// Weight of each slot's tracking loss, in canonical slot order.
    pub slot_weights: [f64; Slot::COUNT],
    pub action_weight: f64,
    pub epochs: usize,
    /// Dialogues per update.
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Zero disables dropout.
    pub dropout: f64,
    /// Probability of replacing an input word by the unknown token while
    /// dropout is active, so the unknown embedding is trained.
    pub unk_rate: f64,
    pub clip_norm: f64,
    /// Seeds shuffling and dropout masks.
    pub seed: u64,
}

impl Default for SlHyper {
    fn default() -> Self {
        Self {
            slot_weights: [1.0; Slot::COUNT],
            action_weight: 1.0,
            epochs: 10,
            batch_size: DEFAULT_BATCH_SIZE,
            adam: AdamConfig::default(),
            dropout: 0.5,
            unk_rate: 0.1,
            clip_norm: DEFAULT_CLIP_NORM,
            seed: 0,
        }
    }
}

impl SlHyper {
    pub fn validate(&self) -> Result<()> {
        if self.slot_weights.iter().chain([&self.action_weight]).any(|w| !(*w >= 0.0)) {
            return Err(Error::Invalid("loss weights must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.unk_rate) {
            return Err(Error::Invalid(format!("unknown-word rate {} not in [0, 1)", self.unk_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Summed loss of one dialogue: weighted tracking NLL per slot plus the
/// masked action NLL, over every turn, with full backpropagation through
/// the dialogue. With `dropout` active, input words are also replaced by the
/// unknown token at `hyper.unk_rate`.
pub fn dialogue_loss(
    model: &DialogueModel,
    g: &mut Graph<'_>,
    dialogue: &AnnotatedDialogue,
    hyper: &SlHyper,
    mut dropout: Option<&mut Dropout>,
) -> Result<NodeId> {
    if dialogue.is_empty() {
        return Err(Error::Empty("dialogue turns"));
    }
    let mut state = model.initial_state(g);
    let mut prev_action = model.actions().start_index();
    let mut terms = Vec::new();
    for turn in &dialogue.turns {
        let mut tokens = model.vocab().encode(&turn.tokens);
        if let Some(d) = dropout.as_deref_mut() {
            if hyper.unk_rate > 0.0 {
                for t in &mut tokens {
                    if d.rng.gen_bool(hyper.unk_rate) {
                        *t = UNK_INDEX;
                    }
                }
            }
        }
        let out = model.read_turn(g, state, &tokens, prev_action, dropout.as_deref_mut())?;
        for (slot, &lp) in Slot::ALL.iter().zip(&out.slot_log_probs) {
            let label = model.candidate_index(*slot, &turn.gold_labels[slot.index()])?;
            let nll = g.nll(lp, label)?;
            terms.push(g.scale(nll, hyper.slot_weights[slot.index()])?);
        }
        let action = model.actions().index_of_label(&turn.action)?;
        if turn.action_mask {
            let policy = model.policy_log_probs(g, out.state.h, &out.slot_log_probs, &turn.kb_summary, dropout.as_deref_mut())?;
            let nll = g.nll(policy, action)?;
            terms.push(g.scale(nll, hyper.action_weight)?);
        }
        state = out.state;
        prev_action = action;
    }
    let total = g.add_n(&terms)?;
    g.sum(total)
}

/// Loss and gradients of one dialogue.
pub fn dialogue_gradients(
    model: &DialogueModel,
    dialogue: &AnnotatedDialogue,
    hyper: &SlHyper,
    dropout: Option<&mut Dropout>,
) -> Result<(f64, Gradients)> {
    let mut g = Graph::new(model.params());
    let loss = dialogue_loss(model, &mut g, dialogue, hyper, dropout)?;
    let value = g.scalar(loss);
    Ok((value, g.backward(loss)?))
}

/// Per-epoch mean dialogue loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
    pub updates: usize,
}

/// Mini-batch training on a fixed corpus with a fresh optimizer.
pub fn supervised_train(
    model: &mut DialogueModel,
    corpus: &[AnnotatedDialogue],
    hyper: &SlHyper,
) -> Result<Vec<EpochLoss>> {
    hyper.validate()?;
    if corpus.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    let mut adam = AdamState::new(model.params(), hyper.adam);
    let mut order_rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut dropout = if hyper.dropout > 0.0 {
        Some(Dropout::new(hyper.dropout, hyper.seed ^ 0x5eed_d809)?)
    } else {
        None
    };
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut history = Vec::with_capacity(hyper.epochs);
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        let mut updates = 0;
        for batch in order.chunks(hyper.batch_size) {
            let mut grads = Gradients::default();
            for &i in batch {
                let (loss, g) = dialogue_gradients(model, &corpus[i], hyper, dropout.as_mut())?;
                total += loss;
                grads.merge(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            apply_gradients(model, &grads, &mut adam, hyper.clip_norm, None)?;
            updates += 1;
        }
        history.push(EpochLoss {
            epoch,
            mean_loss: total / corpus.len() as f64,
            updates,
        });
    }
    Ok(history)
}
