//! Run configuration: one flat `key = value` file holding the model profile,
//! seeds, artifact paths and every stage's hyperparameters.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::AdamConfig;
use crate::dialogue::Slot;
use crate::domain::KbSize;
use crate::error::{Error, Result};
use crate::model::{ModelHyper, Profile};
use crate::simulator::{RewardScheme, UserProfile, UserTemplates, DEFAULT_P_INFEASIBLE};
use crate::trainer::{IlHyper, RlHyper, RlMode, SlHyper, DEFAULT_RL_LEARNING_RATE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,

    pub kb_seed: u64,
    pub corpus_seed: u64,
    pub model_seed: u64,
    pub train_seed: u64,
    /// Simulator seed for imitation and reinforcement episodes.
    pub interaction_seed: u64,
    /// Simulator seed for interactive evaluation, kept apart from training.
    pub eval_seed: u64,

    pub kb_path: PathBuf,
    pub corpus_path: PathBuf,
    /// Human-taught dialogues appended by the session service.
    pub aggregation_path: PathBuf,
    pub checkpoint_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Optional replacement user template files; bundled sets otherwise.
    pub train_templates: Option<PathBuf>,
    pub extended_templates: Option<PathBuf>,
    pub user_profiles: Option<PathBuf>,

    pub kb_movies: usize,
    pub kb_theaters: usize,
    pub kb_days: usize,
    pub kb_times: usize,
    pub p_infeasible: f64,
    pub corpus_dialogues: usize,

    pub learning_rate: f64,
    pub batch_size: usize,
    pub clip_norm: f64,

    pub sl_epochs: usize,
    pub dropout: f64,
    pub unk_rate: f64,
    pub slot_weights: [f64; Slot::COUNT],
    pub action_weight: f64,

    pub il_episodes: usize,
    pub il_round_size: usize,
    pub il_epochs: usize,
    pub il_from_scratch: bool,

    pub rl_episodes: usize,
    /// Optimizer step size for REINFORCE, separate from the supervised one.
    pub rl_learning_rate: f64,
    pub gamma: f64,
    pub rl_mode: RlMode,
    pub success_reward: f64,
    pub step_penalty: f64,

    pub eval_dialogues: usize,
    /// Lets served sessions fine-tune the live model from feedback.
    pub online_updates: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let size = KbSize::default();
        let rewards = RewardScheme::default();
        Self {
            profile: Profile::Desk,
            kb_seed: 1,
            corpus_seed: 7,
            model_seed: 3,
            train_seed: 5,
            interaction_seed: 21,
            eval_seed: 1013,
            kb_path: "run/kb.tsv".into(),
            corpus_path: "run/corpus.jsonl".into(),
            aggregation_path: "run/taught.jsonl".into(),
            checkpoint_dir: "run/checkpoints".into(),
            output_dir: "run/out".into(),
            train_templates: None,
            extended_templates: None,
            user_profiles: None,
            kb_movies: size.movies,
            kb_theaters: size.theaters,
            kb_days: size.days,
            kb_times: size.times,
            p_infeasible: DEFAULT_P_INFEASIBLE,
            corpus_dialogues: 2000,
            learning_rate: 1e-3,
            batch_size: 25,
            clip_norm: 5.0,
            sl_epochs: 30,
            dropout: 0.5,
            unk_rate: 0.1,
            slot_weights: [1.0; Slot::COUNT],
            action_weight: 1.0,
            il_episodes: 500,
            il_round_size: 25,
            il_epochs: 2,
            il_from_scratch: false,
            rl_episodes: 2000,
            rl_learning_rate: DEFAULT_RL_LEARNING_RATE,
            gamma: 0.95,
            rl_mode: RlMode::EndToEnd,
            success_reward: rewards.success_reward,
            step_penalty: rewards.step_penalty,
            eval_dialogues: 500,
            online_updates: false,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.into(),
            line: e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(format!("config serialization: {e}")))
    }

    /// Checks value ranges; path existence is checked per command by
    /// [`RunConfig::require_inputs`].
    pub fn validate(&self) -> Result<()> {
        self.sl_hyper().validate()?;
        self.il_hyper().retrain.validate()?;
        self.rl_hyper().validate()?;
        self.model_hyper().validate()?;
        if !(0.0..=1.0).contains(&self.p_infeasible) {
            return Err(Error::Invalid(format!("p_infeasible {} not in [0, 1]", self.p_infeasible)));
        }
        if self.il_round_size == 0 {
            return Err(Error::Invalid("il_round_size must be at least 1".into()));
        }
        if self.eval_dialogues == 0 || self.corpus_dialogues == 0 {
            return Err(Error::Invalid("dialogue counts must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.rl_learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::Invalid("learning_rate, rl_learning_rate and clip_norm must be positive".into()));
        }
        Ok(())
    }

    /// Fails unless every listed path and every configured template or
    /// profile file exists.
    pub fn require_inputs(&self, paths: &[&Path]) -> Result<()> {
        let optional = [&self.train_templates, &self.extended_templates, &self.user_profiles];
        for p in paths.iter().copied().chain(optional.into_iter().flatten().map(PathBuf::as_path)) {
            if !p.exists() {
                return Err(Error::Invalid(format!("required input `{}` does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn model_hyper(&self) -> ModelHyper {
        ModelHyper::for_profile(self.profile)
    }

    pub fn kb_size(&self) -> KbSize {
        KbSize {
            movies: self.kb_movies,
            theaters: self.kb_theaters,
            days: self.kb_days,
            times: self.kb_times,
        }
    }

    pub fn rewards(&self) -> RewardScheme {
        RewardScheme {
            success_reward: self.success_reward,
            step_penalty: self.step_penalty,
        }
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }

    pub fn sl_hyper(&self) -> SlHyper {
        SlHyper {
            slot_weights: self.slot_weights,
            action_weight: self.action_weight,
            epochs: self.sl_epochs,
            batch_size: self.batch_size,
            adam: self.adam(),
            dropout: self.dropout,
            unk_rate: self.unk_rate,
            clip_norm: self.clip_norm,
            seed: self.train_seed,
        }
    }

    pub fn il_hyper(&self) -> IlHyper {
        IlHyper {
            round_size: self.il_round_size,
            retrain: SlHyper {
                epochs: self.il_epochs,
                dropout: 0.0,
                ..self.sl_hyper()
            },
            from_scratch: self.il_from_scratch,
            seed: self.train_seed,
        }
    }

    pub fn rl_hyper(&self) -> RlHyper {
        RlHyper {
            gamma: self.gamma,
            batch_size: self.batch_size,
            rewards: self.rewards(),
            mode: self.rl_mode,
            adam: AdamConfig {
                learning_rate: self.rl_learning_rate,
                ..self.adam()
            },
            clip_norm: self.clip_norm,
            seed: self.train_seed,
        }
    }

    /// User templates (train, extended) and profiles, from files when
    /// configured.
    pub fn user_surface(&self) -> Result<(UserTemplates, UserTemplates, Vec<UserProfile>)> {
        let train = match &self.train_templates {
            Some(p) => UserTemplates::load(p)?,
            None => UserTemplates::default_train(),
        };
        let extended = match &self.extended_templates {
            Some(p) => UserTemplates::load(p)?,
            None => UserTemplates::default_extended(),
        };
        let profiles = match &self.user_profiles {
            Some(p) => UserProfile::load_profiles(p)?,
            None => UserProfile::default_profiles(),
        };
        Ok((train, extended, profiles))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_text() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.to_text().unwrap(), "cfg").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::parse("profile = \"full\"\nrl_episodes = 10\n", "cfg").unwrap();
        assert_eq!(cfg.profile, Profile::Full);
        assert_eq!(cfg.model_hyper().dialogue_state, 200);
        assert_eq!(cfg.rl_episodes, 10);
        assert_eq!(cfg.sl_epochs, RunConfig::default().sl_epochs);
    }

    #[test]
    fn violations_are_reported() {
        assert!(RunConfig::parse("gamma = 1.0\n", "cfg").is_err());
        assert!(RunConfig::parse("dropout = 1.5\n", "cfg").is_err());
        let err = RunConfig::parse("\n\nno_such_key = 3\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("no_such_key"), "{err}");
        let cfg = RunConfig::default();
        assert!(cfg.require_inputs(&[Path::new("/definitely/missing/kb.tsv")]).is_err());
    }
}
