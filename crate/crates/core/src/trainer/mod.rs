//! Learning stages: supervised pre-training, imitation learning with
//! dataset aggregation and REINFORCE from end-of-dialogue rewards.

mod imitation;
mod metrics;
mod reinforce;
mod supervised;

pub use imitation::{collect_on_policy, imitation_round, run_imitation, IlHyper, IlSnapshot};
pub use metrics::{load_metric_log, read_metric_log, save_metric_log, write_metric_log, BatchRecord, Stage};
pub use reinforce::{compute_returns, episode_policy_loss, rl_train, RlHyper, RlMode, DEFAULT_RL_LEARNING_RATE};
pub use supervised::{
    dialogue_gradients, dialogue_loss, supervised_train, EpochLoss, SlHyper, DEFAULT_BATCH_SIZE,
    DEFAULT_CLIP_NORM,
};

use crate::autodiff::{AdamState, Gradients};
use crate::error::Result;
use crate::model::DialogueModel;

/// Loads averaged gradients into the model, optionally restricts them to
/// parameters accepted by `keep`, clips the global norm and takes one Adam
/// step. Returns the pre-clip norm.
pub fn apply_gradients(
    model: &mut DialogueModel,
    grads: &Gradients,
    adam: &mut AdamState,
    clip_norm: f64,
    keep: Option<fn(&str) -> bool>,
) -> Result<f64> {
    let params = model.params_mut();
    params.zero_grad();
    params.accumulate(grads);
    if let Some(keep) = keep {
        params.mask_grads(keep);
    }
    let norm = params.clip_grad_norm(clip_norm);
    adam.step(params)?;
    Ok(norm)
}
