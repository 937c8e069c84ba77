//! The hierarchical LSTM dialogue model, its vocabulary, checkpoints and
//! the agent wrapper that runs it inside dialogues.

mod agent;
mod checkpoint;
mod hyper;
mod network;
mod vocab;

pub use agent::{act, sample_index, Decision, DecodeMode, ModelAgent};
pub use checkpoint::{ModelCheckpoint, MODEL_FORMAT_VERSION};
pub use hyper::{ModelHyper, Profile, SystemActionSpace};
pub use network::{DialogueModel, Dropout, LstmState, TurnOutput, LOG_PROB_FLOOR, POLICY_PREFIX};
pub use vocab::{Vocabulary, END_TOKEN, PAD_TOKEN, SPECIAL_TOKENS, START_TOKEN, UNK_INDEX, UNK_TOKEN};

use crate::corpus::AnnotatedDialogue;
use crate::domain::Ontology;
use crate::error::Result;

/// Minimum corpus frequency for a token to get its own vocabulary entry.
pub const MIN_TOKEN_COUNT: usize = 2;

/// Vocabulary over the user utterances of a corpus.
pub fn corpus_vocabulary(corpus: &[AnnotatedDialogue]) -> Result<Vocabulary> {
    Vocabulary::build(
        corpus
            .iter()
            .flat_map(|d| d.turns.iter())
            .flat_map(|t| t.tokens.iter().map(String::as_str)),
        MIN_TOKEN_COUNT,
    )
}

/// A freshly initialized movie-booking model for `corpus` and `ontology`.
pub fn model_for_corpus(
    hyper: ModelHyper,
    corpus: &[AnnotatedDialogue],
    ontology: &Ontology,
    seed: u64,
) -> Result<DialogueModel> {
    DialogueModel::new(
        hyper,
        corpus_vocabulary(corpus)?,
        ontology.all_candidates(),
        SystemActionSpace::movie_booking(),
        seed,
    )
}
