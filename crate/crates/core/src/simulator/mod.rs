//! Agenda-based simulated user: goals, reaction rules, surface
//! realization, teacher labels and the dialogue judge.

mod goal;
mod judge;
mod surface;
mod user;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use goal::{sample_goal, UserGoal, P_DONTCARE};
pub use judge::{
    goal_matches, judge_dialogue, judge_transcript, Closure, DialogueOutcome, Exchange, RewardScheme,
    Transcript, MAX_TURNS,
};
pub use surface::{
    act_pattern, all_realizations, realize_user_utterance, required_patterns, TemplateSet, UserProfile,
    UserTemplates, DEFAULT_EXTENDED_TEMPLATES, DEFAULT_PROFILES, DEFAULT_TRAIN_TEMPLATES,
    MIN_FORMS_PER_PATTERN,
};
pub use user::{teacher_labels, user_respond, Agenda, SimulatedUser, UserTurn, OPENING_INFORMS};

use crate::domain::KnowledgeBase;
use crate::error::{Error, Result};

pub const DEFAULT_P_INFEASIBLE: f64 = 0.1;

/// Independent random stream for episode `index` under `seed`.
pub fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Factory for simulated users sharing one KB, template pools and profiles.
#[derive(Debug, Clone)]
pub struct UserSimulator {
    kb: Arc<KnowledgeBase>,
    train: Arc<UserTemplates>,
    extended: Arc<UserTemplates>,
    profiles: Vec<UserProfile>,
    p_infeasible: f64,
    template_override: Option<TemplateSet>,
    seed: u64,
}

impl UserSimulator {
    pub fn new(kb: Arc<KnowledgeBase>, seed: u64) -> Self {
        Self {
            kb,
            train: Arc::new(UserTemplates::default_train()),
            extended: Arc::new(UserTemplates::default_extended()),
            profiles: UserProfile::default_profiles(),
            p_infeasible: DEFAULT_P_INFEASIBLE,
            template_override: None,
            seed,
        }
    }

    pub fn with_templates(mut self, train: UserTemplates, extended: UserTemplates) -> Result<Self> {
        train.ensure_disjoint(&extended)?;
        self.train = Arc::new(train);
        self.extended = Arc::new(extended);
        Ok(self)
    }

    pub fn with_profiles(mut self, profiles: Vec<UserProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::Empty("profiles"));
        }
        self.profiles = profiles;
        Ok(self)
    }

    pub fn with_p_infeasible(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Invalid(format!("p_infeasible {p} not in [0, 1]")));
        }
        self.p_infeasible = p;
        Ok(self)
    }

    /// Forces every profile onto one template set.
    pub fn with_template_set(mut self, set: Option<TemplateSet>) -> Self {
        self.template_override = set;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kb(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    pub fn templates(&self, set: TemplateSet) -> &UserTemplates {
        match set {
            TemplateSet::Train => &self.train,
            TemplateSet::Extended => &self.extended,
        }
    }

    pub fn template_override(&self) -> Option<TemplateSet> {
        self.template_override
    }

    /// The simulated user of episode `index`; profile, goal, agenda order and
    /// every later choice come from that episode's own stream.
    pub fn user(&self, index: u64) -> Result<SimulatedUser<'_, ChaCha8Rng>> {
        let mut rng = episode_rng(self.seed, index);
        let mut profile = self.profiles.choose(&mut rng).expect("non-empty").clone();
        if let Some(set) = self.template_override {
            profile.template_set = set;
        }
        let goal = sample_goal(&self.kb, &mut rng, self.p_infeasible)?;
        let agenda = Agenda::new(goal, &mut rng);
        let templates = self.templates(profile.template_set);
        Ok(SimulatedUser::new(agenda, profile, templates, rng))
    }
}
