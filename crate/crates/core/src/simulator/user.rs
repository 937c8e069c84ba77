use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::goal::UserGoal;
use super::surface::{realize_user_utterance, UserProfile, UserTemplates};
use crate::dialogue::{ActType, DialogueAct, Slot, SystemAction, NULL_VALUE};
use crate::domain::SystemTurn;
use crate::error::{Error, Result};

/// Number of agenda items the user states in the opening utterance.
pub const OPENING_INFORMS: usize = 2;

/// A user turn: semantic acts plus their surface realization.
/// An empty act list is a silent turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTurn {
    pub acts: Vec<DialogueAct>,
    pub text: String,
}

impl UserTurn {
    pub fn silent() -> Self {
        Self {
            acts: Vec::new(),
            text: String::new(),
        }
    }

    pub fn has(&self, act: ActType) -> bool {
        self.acts.iter().any(|a| a.act == act)
    }
}

/// Stack of pending informs (top = last element) for one goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agenda {
    pub goal: UserGoal,
    pending: Vec<Slot>,
    closed: bool,
}

impl Agenda {
    /// Pending informs in a random order.
    pub fn new<R: Rng>(goal: UserGoal, rng: &mut R) -> Self {
        let mut pending = Slot::ALL.to_vec();
        pending.shuffle(rng);
        Self {
            goal,
            pending,
            closed: false,
        }
    }

    /// Pending informs in the given order; the first slot is stated first.
    pub fn with_order(goal: UserGoal, order: &[Slot]) -> Self {
        Self {
            goal,
            pending: order.iter().rev().copied().collect(),
            closed: false,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn pending(&self) -> impl Iterator<Item = Slot> + '_ {
        self.pending.iter().rev().copied()
    }

    fn inform(&mut self, slot: Slot) -> DialogueAct {
        self.pending.retain(|&s| s != slot);
        DialogueAct::inform(slot, self.goal.value(slot))
    }

    fn pop_inform(&mut self) -> Option<DialogueAct> {
        self.pending.last().copied().map(|s| self.inform(s))
    }

    fn pending_other_than(&self, slot: Slot) -> Option<Slot> {
        self.pending.iter().rev().copied().find(|&s| s != slot)
    }

    fn maybe_extra<R: Rng>(&mut self, acts: &mut Vec<DialogueAct>, profile: &UserProfile, rng: &mut R) {
        if !self.pending.is_empty() && rng.gen_bool(profile.p_extra_inform) {
            if let Some(a) = self.pop_inform() {
                acts.push(a);
            }
        }
    }

    /// Opening utterance: the first agenda items, possibly one more.
    pub fn open<R: Rng>(&mut self, profile: &UserProfile, rng: &mut R) -> Result<Vec<DialogueAct>> {
        if self.closed {
            return Err(Error::DialogueClosed);
        }
        let mut acts: Vec<DialogueAct> = (0..OPENING_INFORMS).filter_map(|_| self.pop_inform()).collect();
        self.maybe_extra(&mut acts, profile, rng);
        Ok(acts)
    }
}

/// Agenda-based reaction to one system turn.
pub fn user_respond<R: Rng>(
    agenda: &mut Agenda,
    system: &SystemTurn,
    profile: &UserProfile,
    rng: &mut R,
) -> Result<Vec<DialogueAct>> {
    if agenda.closed {
        return Err(Error::DialogueClosed);
    }
    let mut acts = Vec::new();
    match system.action {
        SystemAction::Greet => {
            if let Some(a) = agenda.pop_inform() {
                acts.push(a);
            }
            agenda.maybe_extra(&mut acts, profile, rng);
        }
        SystemAction::Request(slot) => {
            let other = agenda.pending_other_than(slot);
            let answer = match other {
                Some(o) if rng.gen_bool(profile.p_noncooperative) => o,
                _ => slot,
            };
            acts.push(agenda.inform(answer));
            agenda.maybe_extra(&mut acts, profile, rng);
        }
        SystemAction::Confirm(slot) => {
            let said = system.value.as_deref().unwrap_or(NULL_VALUE);
            if said == agenda.goal.value(slot) {
                acts.push(DialogueAct::new(ActType::Affirm));
            } else {
                acts.push(DialogueAct::new(ActType::Negate));
                acts.push(agenda.inform(slot));
            }
        }
        SystemAction::ApiCall => {}
        SystemAction::Offer => match &system.entity {
            Some(e) if agenda.goal.accepts(e) => {
                acts.push(DialogueAct::new(ActType::Accept));
                agenda.closed = true;
            }
            _ => acts.push(DialogueAct::new(ActType::Reject)),
        },
        SystemAction::NotifyFailure | SystemAction::Bye => {
            acts.push(DialogueAct::new(ActType::Bye));
            agenda.closed = true;
        }
    }
    Ok(acts)
}

/// Gold cumulative slot labels after user turn `turn` (1-based): the goal
/// value for every slot the user has informed so far, `<null>` otherwise.
pub fn teacher_labels(goal: &UserGoal, turn: usize, history: &[Vec<DialogueAct>]) -> Vec<String> {
    let mut labels = vec![NULL_VALUE.to_string(); Slot::COUNT];
    for acts in history.iter().take(turn) {
        for a in acts {
            if let (ActType::Inform, Some(slot)) = (a.act, a.slot) {
                labels[slot.index()] = goal.value(slot).to_string();
            }
        }
    }
    labels
}

/// One simulated user for one dialogue.
pub struct SimulatedUser<'t, R> {
    agenda: Agenda,
    profile: UserProfile,
    templates: &'t UserTemplates,
    rng: R,
    history: Vec<Vec<DialogueAct>>,
}

impl<'t, R: Rng> SimulatedUser<'t, R> {
    pub fn new(agenda: Agenda, profile: UserProfile, templates: &'t UserTemplates, rng: R) -> Self {
        Self {
            agenda,
            profile,
            templates,
            rng,
            history: Vec::new(),
        }
    }

    pub fn goal(&self) -> &UserGoal {
        &self.agenda.goal
    }

    pub fn profile(&self) -> &UserProfile {
        &self.profile
    }

    pub fn is_closed(&self) -> bool {
        self.agenda.closed
    }

    /// Ends the dialogue from outside (turn cap).
    pub fn close(&mut self) {
        self.agenda.closed = true;
    }

    pub fn history(&self) -> &[Vec<DialogueAct>] {
        &self.history
    }

    /// Labels covering every user turn produced so far.
    pub fn current_labels(&self) -> Vec<String> {
        teacher_labels(&self.agenda.goal, self.history.len(), &self.history)
    }

    fn realize(&mut self, acts: Vec<DialogueAct>) -> Result<UserTurn> {
        let text = if acts.is_empty() {
            String::new()
        } else {
            realize_user_utterance(&acts, self.templates, &mut self.rng)?
        };
        self.history.push(acts.clone());
        Ok(UserTurn { acts, text })
    }

    pub fn open(&mut self) -> Result<UserTurn> {
        let acts = self.agenda.open(&self.profile, &mut self.rng)?;
        self.realize(acts)
    }

    pub fn respond(&mut self, system: &SystemTurn) -> Result<UserTurn> {
        let acts = user_respond(&mut self.agenda, system, &self.profile, &mut self.rng)?;
        self.realize(acts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::DONTCARE_VALUE;
    use crate::domain::KbEntity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn goal() -> UserGoal {
        UserGoal {
            values: ["2", "avatar", "amc", "monday", "7pm"].map(String::from).to_vec(),
            feasible: true,
        }
    }

    fn sys(action: SystemAction, value: Option<&str>) -> SystemTurn {
        SystemTurn {
            action,
            value: value.map(String::from),
            entity: None,
            text: String::new(),
            substituted: false,
        }
    }

    fn quiet() -> UserProfile {
        UserProfile::new("quiet", 0.0, 0.0, super::super::TemplateSet::Train).unwrap()
    }

    #[test]
    fn request_is_answered() {
        let mut ag = Agenda::new(goal(), &mut ChaCha8Rng::seed_from_u64(0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let acts = user_respond(&mut ag, &sys(SystemAction::Request(Slot::Date), None), &quiet(), &mut rng).unwrap();
        assert_eq!(acts, vec![DialogueAct::inform(Slot::Date, "monday")]);
    }

    #[test]
    fn wrong_confirm_is_negated_and_corrected() {
        let mut ag = Agenda::new(goal(), &mut ChaCha8Rng::seed_from_u64(0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let acts = user_respond(&mut ag, &sys(SystemAction::Confirm(Slot::Date), Some("tuesday")), &quiet(), &mut rng).unwrap();
        assert_eq!(acts, vec![DialogueAct::new(ActType::Negate), DialogueAct::inform(Slot::Date, "monday")]);
        let acts = user_respond(&mut ag, &sys(SystemAction::Confirm(Slot::Date), Some("monday")), &quiet(), &mut rng).unwrap();
        assert_eq!(acts, vec![DialogueAct::new(ActType::Affirm)]);
    }

    #[test]
    fn matching_offer_is_accepted_and_closes() {
        let mut ag = Agenda::new(goal(), &mut ChaCha8Rng::seed_from_u64(0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut offer = sys(SystemAction::Offer, None);
        offer.entity = Some(KbEntity {
            movie: "avatar".into(),
            theater: "amc".into(),
            date: "monday".into(),
            time: "7pm".into(),
            seats_available: 2,
        });
        let acts = user_respond(&mut ag, &offer, &quiet(), &mut rng).unwrap();
        assert_eq!(acts, vec![DialogueAct::new(ActType::Accept)]);
        assert!(ag.is_closed());
        assert!(matches!(
            user_respond(&mut ag, &offer, &quiet(), &mut rng),
            Err(Error::DialogueClosed)
        ));
    }

    #[test]
    fn short_on_seats_is_rejected() {
        let mut ag = Agenda::new(goal(), &mut ChaCha8Rng::seed_from_u64(0));
        let mut offer = sys(SystemAction::Offer, None);
        offer.entity = Some(KbEntity {
            movie: "avatar".into(),
            theater: "amc".into(),
            date: "monday".into(),
            time: "7pm".into(),
            seats_available: 1,
        });
        let acts = user_respond(&mut ag, &offer, &quiet(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(acts, vec![DialogueAct::new(ActType::Reject)]);
        assert!(!ag.is_closed());
    }

    #[test]
    fn labels_follow_expressed_slots() {
        let g = goal();
        let history = vec![
            vec![DialogueAct::inform(Slot::NumTickets, "2")],
            vec![DialogueAct::new(ActType::Negate), DialogueAct::inform(Slot::Date, "monday")],
        ];
        let l1 = teacher_labels(&g, 1, &history);
        assert_eq!(l1[0], "2");
        assert!(l1[1..].iter().all(|v| v == NULL_VALUE));
        let l2 = teacher_labels(&g, 2, &history);
        assert_eq!(l2[Slot::Date.index()], "monday");
    }

    #[test]
    fn dontcare_goal_is_preserved_in_labels() {
        let mut g = goal();
        g.values[Slot::Time.index()] = DONTCARE_VALUE.into();
        let history = vec![vec![DialogueAct::inform(Slot::Time, DONTCARE_VALUE)]];
        assert_eq!(teacher_labels(&g, 1, &history)[Slot::Time.index()], DONTCARE_VALUE);
    }
}
