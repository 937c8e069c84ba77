use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{BatchRecord, Stage};
use super::supervised::{DEFAULT_BATCH_SIZE, DEFAULT_CLIP_NORM};
use super::apply_gradients;
use crate::autodiff::{AdamConfig, AdamState, Gradients, Graph, NodeId};
use crate::domain::SystemNlg;
use crate::episode::run_episode;
use crate::error::{Error, Result};
use crate::evaluator::report_from_transcripts;
use crate::model::{Decision, DecodeMode, DialogueModel, ModelAgent};
use crate::simulator::{episode_rng, judge_transcript, RewardScheme, UserSimulator};

/// REINFORCE step size. Larger steps on a weak starting policy tend to
/// find the early-goodbye optimum and stay there.
pub const DEFAULT_RL_LEARNING_RATE: f64 = 1.5e-4;

/// Keeps action-sampling streams apart from simulator streams that share a seed.
pub(crate) const ACTION_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RlMode {
    EndToEnd,
    PolicyOnly,
}

impl fmt::Display for RlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RlMode::EndToEnd => "end_to_end",
            RlMode::PolicyOnly => "policy_only",
        })
    }
}

impl FromStr for RlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "end_to_end" => Ok(RlMode::EndToEnd),
            "policy_only" => Ok(RlMode::PolicyOnly),
            other => Err(Error::Invalid(format!("unknown RL mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlHyper {
    pub gamma: f64,
    /// Episodes per update.
    pub batch_size: usize,
    pub rewards: RewardScheme,
    pub mode: RlMode,
    pub adam: AdamConfig,
    pub clip_norm: f64,
    /// Seeds the per-episode action-sampling streams.
    pub seed: u64,
}

impl Default for RlHyper {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            batch_size: DEFAULT_BATCH_SIZE,
            rewards: RewardScheme::default(),
            mode: RlMode::EndToEnd,
            adam: AdamConfig {
                learning_rate: DEFAULT_RL_LEARNING_RATE,
                ..AdamConfig::default()
            },
            clip_norm: DEFAULT_CLIP_NORM,
            seed: 0,
        }
    }
}

impl RlHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Invalid(format!("gamma {} not in [0, 1)", self.gamma)));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Discounted returns by the backward recursion `R_k = r_k + gamma * R_{k+1}`.
pub fn compute_returns(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::Empty("rewards"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Invalid(format!("gamma {gamma} not in [0, 1)")));
    }
    let mut out = vec![0.0; rewards.len()];
    let mut next = 0.0;
    for k in (0..rewards.len()).rev() {
        out[k] = if k + 1 == rewards.len() { rewards[k] } else { rewards[k] + gamma * next };
        next = out[k];
    }
    Ok(out)
}

/// `-sum_k R_k * log pi(a_k | s_k)` over one episode's decisions.
pub fn episode_policy_loss(g: &mut Graph<'_>, decisions: &[Decision], returns: &[f64]) -> Result<NodeId> {
    if decisions.len() != returns.len() || decisions.is_empty() {
        return Err(Error::Invalid(format!(
            "{} decisions but {} returns",
            decisions.len(),
            returns.len()
        )));
    }
    let mut terms = Vec::with_capacity(decisions.len());
    for (d, &r) in decisions.iter().zip(returns) {
        let lp = g.pick(d.log_probs, d.action)?;
        terms.push(g.scale(lp, -r)?);
    }
    g.add_n(&terms)
}

/// REINFORCE on simulated dialogues (episode indices `0..n_episodes` of
/// `sim`), one Adam step per batch. Returns per-batch statistics.
pub fn rl_train(
    model: &mut DialogueModel,
    sim: &UserSimulator,
    n_episodes: usize,
    hyper: &RlHyper,
) -> Result<Vec<BatchRecord>> {
    hyper.validate()?;
    let nlg = SystemNlg::default_templates();
    let mut adam = AdamState::new(model.params(), hyper.adam);
    let keep: Option<fn(&str) -> bool> = match hyper.mode {
        RlMode::EndToEnd => None,
        RlMode::PolicyOnly => Some(DialogueModel::is_policy_param),
    };
    let mut log = Vec::new();
    let mut start = 0;
    while start < n_episodes {
        let end = (start + hyper.batch_size).min(n_episodes);
        let mut grads = Gradients::default();
        let mut transcripts = Vec::with_capacity(end - start);
        let mut loss_sum = 0.0;
        {
            let frozen: &DialogueModel = model;
            for i in start..end {
                let mut user = sim.user(i as u64)?;
                let mut agent = ModelAgent::new(frozen, DecodeMode::Sample(episode_rng(hyper.seed ^ ACTION_STREAM_SALT, i as u64)));
                let transcript = run_episode(&mut agent, &mut user, sim.kb(), &nlg)?;
                let outcome = judge_transcript(&transcript, hyper.rewards)?;
                let returns = compute_returns(&outcome.rewards, hyper.gamma)?;
                let (mut g, decisions) = agent.take_tape();
                let loss = episode_policy_loss(&mut g, &decisions, &returns)?;
                loss_sum += g.scalar(loss);
                grads.merge(g.backward(loss)?);
                transcripts.push(transcript);
            }
        }
        let batch = (end - start) as f64;
        grads.scale(1.0 / batch);
        apply_gradients(model, &grads, &mut adam, hyper.clip_norm, keep)?;
        let report = report_from_transcripts(&transcripts, hyper.rewards, None, "sample")?;
        log.push(BatchRecord {
            stage: Stage::Reinforce,
            episodes: end,
            success_rate: report.success_rate,
            mean_turns: report.mean_turns,
            mean_return: report.mean_return,
            dst_joint: report.joint_accuracy,
            loss: loss_sum / batch,
        });
        start = end;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_examples() {
        assert_eq!(compute_returns(&[14.0], 0.95).unwrap(), vec![14.0]);
        let r = compute_returns(&[-1.0, -1.0, 14.0], 0.95).unwrap();
        assert_eq!(r[2], 14.0);
        assert!((r[1] - 12.3).abs() < 1e-12);
        assert!((r[0] - 10.685).abs() < 1e-12);
        assert_eq!(compute_returns(&[-1.0; 15], 0.0).unwrap(), vec![-1.0; 15]);
        assert!(compute_returns(&[], 0.5).is_err());
        assert!(compute_returns(&[1.0], 1.0).is_err());
    }
}
