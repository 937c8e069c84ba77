use serde::{Deserialize, Serialize};

use super::metrics::{BatchRecord, Stage};
use super::reinforce::ACTION_STREAM_SALT;
use super::supervised::{supervised_train, SlHyper, DEFAULT_BATCH_SIZE};
use crate::corpus::AnnotatedDialogue;
use crate::domain::SystemNlg;
use crate::episode::run_episode;
use crate::error::{Error, Result};
use crate::evaluator::report_from_transcripts;
use crate::model::{DecodeMode, DialogueModel, ModelAgent};
use crate::simulator::{episode_rng, RewardScheme, Transcript, UserSimulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlHyper {
    /// Dialogues collected between retraining rounds.
    pub round_size: usize,
    /// Settings of each retraining pass over the aggregated corpus.
    pub retrain: SlHyper,
    /// Re-initialize parameters before each retraining instead of fine-tuning.
    pub from_scratch: bool,
    /// Seeds the per-episode action-sampling streams.
    pub seed: u64,
}

impl Default for IlHyper {
    fn default() -> Self {
        Self {
            round_size: DEFAULT_BATCH_SIZE,
            retrain: SlHyper {
                epochs: 2,
                dropout: 0.0,
                ..SlHyper::default()
            },
            from_scratch: false,
            seed: 0,
        }
    }
}

/// Runs the current policy with sampled actions on episodes `start..end`
/// and labels every turn with the simulator's teacher labels. Action
/// supervision is masked off.
pub fn collect_on_policy(
    model: &DialogueModel,
    sim: &UserSimulator,
    start: usize,
    end: usize,
    seed: u64,
) -> Result<(Vec<AnnotatedDialogue>, Vec<Transcript>)> {
    let nlg = SystemNlg::default_templates();
    let mut dialogues = Vec::with_capacity(end.saturating_sub(start));
    let mut transcripts = Vec::with_capacity(end.saturating_sub(start));
    for i in start..end {
        let mut user = sim.user(i as u64)?;
        let mut agent = ModelAgent::new(model, DecodeMode::Sample(episode_rng(seed ^ ACTION_STREAM_SALT, i as u64)));
        let t = run_episode(&mut agent, &mut user, sim.kb(), &nlg)?;
        dialogues.push(AnnotatedDialogue::from_transcript(&t, false, RewardScheme::default())?);
        transcripts.push(t);
    }
    Ok((dialogues, transcripts))
}

/// One aggregation round: collect episodes `start..end`, append them to
/// `corpus` and retrain on the whole aggregate.
pub fn imitation_round(
    model: &mut DialogueModel,
    sim: &UserSimulator,
    start: usize,
    end: usize,
    corpus: &mut Vec<AnnotatedDialogue>,
    hyper: &IlHyper,
) -> Result<BatchRecord> {
    let (new, transcripts) = collect_on_policy(model, sim, start, end, hyper.seed)?;
    let report = if transcripts.is_empty() {
        None
    } else {
        Some(report_from_transcripts(&transcripts, RewardScheme::default(), None, "sample")?)
    };
    corpus.extend(new);
    let mut loss = 0.0;
    if end > start {
        if hyper.from_scratch {
            let fresh = DialogueModel::new(
                *model.hyper(),
                model.vocab().clone(),
                model.candidates().to_vec(),
                model.actions().clone(),
                model.params().seed(),
            )?;
            *model = fresh;
        }
        let retrain = SlHyper {
            seed: hyper.retrain.seed ^ end as u64,
            ..hyper.retrain.clone()
        };
        let history = supervised_train(model, corpus, &retrain)?;
        loss = history.last().map_or(0.0, |h| h.mean_loss);
    }
    Ok(match report {
        Some(r) => BatchRecord {
            stage: Stage::Imitation,
            episodes: end,
            success_rate: r.success_rate,
            mean_turns: r.mean_turns,
            mean_return: r.mean_return,
            dst_joint: r.joint_accuracy,
            loss,
        },
        None => BatchRecord {
            stage: Stage::Imitation,
            episodes: end,
            success_rate: 0.0,
            mean_turns: f64::NAN,
            mean_return: 0.0,
            dst_joint: 0.0,
            loss,
        },
    })
}

/// A copy of the model taken after a given number of imitation episodes.
#[derive(Debug, Clone)]
pub struct IlSnapshot {
    pub episodes: usize,
    pub model: DialogueModel,
}

/// `n_episodes` of imitation learning in rounds of `round_size`,
/// snapshotting the model whenever the episode count hits an entry of
/// `snapshot_at`.
pub fn run_imitation(
    model: &mut DialogueModel,
    sim: &UserSimulator,
    corpus: &mut Vec<AnnotatedDialogue>,
    n_episodes: usize,
    hyper: &IlHyper,
    snapshot_at: &[usize],
) -> Result<(Vec<BatchRecord>, Vec<IlSnapshot>)> {
    if hyper.round_size == 0 {
        return Err(Error::Invalid("round size must be at least 1".into()));
    }
    let mut log = Vec::new();
    let mut snapshots = Vec::new();
    let mut start = 0;
    while start < n_episodes {
        let end = (start + hyper.round_size).min(n_episodes);
        log.push(imitation_round(model, sim, start, end, corpus, hyper)?);
        if snapshot_at.contains(&end) {
            snapshots.push(IlSnapshot {
                episodes: end,
                model: model.clone(),
            });
        }
        start = end;
    }
    Ok((log, snapshots))
}
