use serde::{Deserialize, Serialize};

use super::goal::UserGoal;
use super::user::UserTurn;
use crate::dialogue::{ActType, Slot, SystemAction};
use crate::domain::SystemTurn;
use crate::error::{Error, Result};

/// Hard cap on system turns per dialogue.
pub const MAX_TURNS: usize = 15;

/// How a dialogue ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Accepted,
    UserBye,
    TurnCap,
}

/// One system turn together with the user turn it answered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub user: UserTurn,
    /// Teacher labels after `user`.
    pub gold: Vec<String>,
    /// Tracker argmax per slot when the system acted.
    pub beliefs: Vec<String>,
    pub kb_summary: Vec<f64>,
    pub system: SystemTurn,
}

/// Full record of one simulated or live dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub goal: UserGoal,
    pub profile: String,
    pub exchanges: Vec<Exchange>,
    /// The user's reaction to the final system turn.
    pub closing: Option<UserTurn>,
    pub closure: Option<Closure>,
}

impl Transcript {
    pub fn new(goal: UserGoal, profile: &str) -> Self {
        Self {
            goal,
            profile: profile.to_string(),
            exchanges: Vec::new(),
            closing: None,
            closure: None,
        }
    }

    pub fn turn_count(&self) -> usize {
        self.exchanges.len()
    }

    /// The user turn that followed system turn `k` (0-based).
    pub fn reply_to(&self, k: usize) -> Option<&UserTurn> {
        match self.exchanges.get(k + 1) {
            Some(next) => Some(&next.user),
            None if k + 1 == self.exchanges.len() => self.closing.as_ref(),
            None => None,
        }
    }

    pub fn final_beliefs(&self) -> Option<&[String]> {
        self.exchanges.last().map(|e| e.beliefs.as_slice())
    }

    /// Slots whose `confirm_<slot>` was answered with an affirm.
    pub fn confirmed_slots(&self) -> Vec<Slot> {
        let mut out = Vec::new();
        for (k, ex) in self.exchanges.iter().enumerate() {
            if let SystemAction::Confirm(slot) = ex.system.action {
                if self.reply_to(k).is_some_and(|u| u.has(ActType::Affirm)) && !out.contains(&slot) {
                    out.push(slot);
                }
            }
        }
        out
    }

    pub fn offer_accepted(&self) -> bool {
        self.exchanges.last().is_some_and(|e| e.system.action == SystemAction::Offer)
            && self.closing.as_ref().is_some_and(|u| u.has(ActType::Accept))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScheme {
    pub success_reward: f64,
    pub step_penalty: f64,
}

impl Default for RewardScheme {
    fn default() -> Self {
        Self {
            success_reward: 15.0,
            step_penalty: -1.0,
        }
    }
}

impl RewardScheme {
    /// Per-turn rewards for a dialogue of `turns` system turns.
    pub fn rewards(&self, turns: usize, success: bool) -> Vec<f64> {
        let mut r = vec![self.step_penalty; turns];
        if success {
            if let Some(last) = r.last_mut() {
                *last += self.success_reward;
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueOutcome {
    pub success: bool,
    pub turn_count: usize,
    pub rewards: Vec<f64>,
    /// Condition (1): tracked goal equals the true goal.
    pub goal_matched: bool,
    /// Condition (2): all slots confirmed and the offer accepted.
    pub confirmed_and_accepted: bool,
}

impl DialogueOutcome {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Whether the tracked argmax per slot equals the goal (a `<dontcare>`
/// goal slot needs a `<dontcare>` belief).
pub fn goal_matches(goal: &UserGoal, beliefs: &[String]) -> bool {
    beliefs.len() == Slot::COUNT
        && Slot::ALL.iter().all(|&s| beliefs[s.index()] == goal.value(s))
}

/// Scores a closed dialogue.
pub fn judge_dialogue(
    goal: &UserGoal,
    final_beliefs: &[String],
    transcript: &Transcript,
    scheme: RewardScheme,
) -> Result<DialogueOutcome> {
    if transcript.closure.is_none() {
        return Err(Error::DialogueOpen);
    }
    let turns = transcript.turn_count();
    if turns == 0 || turns > MAX_TURNS {
        return Err(Error::Invalid(format!("dialogue has {turns} system turns")));
    }
    let goal_matched = goal_matches(goal, final_beliefs);
    let confirmed = transcript.confirmed_slots();
    let confirmed_and_accepted =
        Slot::ALL.iter().all(|s| confirmed.contains(s)) && transcript.offer_accepted();
    let success = goal_matched && confirmed_and_accepted;
    Ok(DialogueOutcome {
        success,
        turn_count: turns,
        rewards: scheme.rewards(turns, success),
        goal_matched,
        confirmed_and_accepted,
    })
}

/// Judges using the beliefs recorded at the final system turn.
pub fn judge_transcript(transcript: &Transcript, scheme: RewardScheme) -> Result<DialogueOutcome> {
    let beliefs = transcript.final_beliefs().ok_or(Error::Empty("transcript"))?;
    judge_dialogue(&transcript.goal, beliefs, transcript, scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::DialogueAct;

    fn goal() -> UserGoal {
        UserGoal {
            values: ["2", "avatar", "amc", "monday", "7pm"].map(String::from).to_vec(),
            feasible: true,
        }
    }

    fn turn(action: SystemAction) -> SystemTurn {
        SystemTurn {
            action,
            value: None,
            entity: None,
            text: String::new(),
            substituted: false,
        }
    }

    fn user(acts: Vec<DialogueAct>) -> UserTurn {
        UserTurn { acts, text: String::new() }
    }

    fn exchange(u: UserTurn, action: SystemAction) -> Exchange {
        Exchange {
            user: u,
            gold: goal().values,
            beliefs: goal().values,
            kb_summary: vec![0.0; 5],
            system: turn(action),
        }
    }

    fn successful() -> Transcript {
        let mut t = Transcript::new(goal(), "test");
        let affirm = || user(vec![DialogueAct::new(ActType::Affirm)]);
        t.exchanges.push(exchange(user(vec![]), SystemAction::Confirm(Slot::NumTickets)));
        for s in &Slot::ALL[1..] {
            t.exchanges.push(exchange(affirm(), SystemAction::Confirm(*s)));
        }
        t.exchanges.push(exchange(affirm(), SystemAction::Offer));
        t.closing = Some(user(vec![DialogueAct::new(ActType::Accept)]));
        t.closure = Some(Closure::Accepted);
        t
    }

    #[test]
    fn six_turn_success_rewards() {
        let t = successful();
        let o = judge_transcript(&t, RewardScheme::default()).unwrap();
        assert!(o.success);
        assert_eq!(o.rewards, vec![-1.0, -1.0, -1.0, -1.0, -1.0, 14.0]);
    }

    #[test]
    fn no_confirms_fails_condition_two() {
        let mut t = Transcript::new(goal(), "test");
        t.exchanges.push(exchange(user(vec![]), SystemAction::Offer));
        t.closing = Some(user(vec![DialogueAct::new(ActType::Accept)]));
        t.closure = Some(Closure::Accepted);
        let o = judge_transcript(&t, RewardScheme::default()).unwrap();
        assert!(o.goal_matched && !o.success);
        assert_eq!(o.rewards, vec![-1.0]);
    }

    #[test]
    fn wrong_belief_fails_condition_one() {
        let t = successful();
        let mut b = goal().values;
        b[Slot::Date.index()] = "tuesday".into();
        let o = judge_dialogue(&goal(), &b, &t, RewardScheme::default()).unwrap();
        assert!(!o.success && o.confirmed_and_accepted);
    }

    #[test]
    fn fifteen_turn_cap_all_penalties() {
        let mut t = Transcript::new(goal(), "test");
        for _ in 0..MAX_TURNS {
            t.exchanges.push(exchange(user(vec![]), SystemAction::Greet));
        }
        t.closing = Some(user(vec![]));
        t.closure = Some(Closure::TurnCap);
        let o = judge_transcript(&t, RewardScheme::default()).unwrap();
        assert!(!o.success);
        assert_eq!(o.rewards, vec![-1.0; 15]);
    }

    #[test]
    fn open_dialogue_rejected() {
        let mut t = successful();
        t.closure = None;
        assert!(matches!(judge_transcript(&t, RewardScheme::default()), Err(Error::DialogueOpen)));
    }
}
