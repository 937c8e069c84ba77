use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dialogue::{ActType, Slot, SystemAction, NULL_VALUE};
use crate::domain::KbResultSummary;
use crate::episode::DialogueAgent;
use crate::error::Result;
use crate::simulator::UserTurn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertPhase {
    Greeting,
    SlotFilling,
    Confirming,
    Offering,
    Closing,
}

/// State of the finite-state expert agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertState {
    /// Slots informed and then affirmed on confirmation.
    pub grounded: BTreeSet<Slot>,
    pub phase: ExpertPhase,
    /// Whether the offer step has been reached via `api_call`.
    pub queried: bool,
    pub last_action: Option<SystemAction>,
}

impl Default for ExpertState {
    fn default() -> Self {
        Self {
            grounded: BTreeSet::new(),
            phase: ExpertPhase::Greeting,
            queried: false,
            last_action: None,
        }
    }
}

impl ExpertState {
    /// Updates grounding from the user's reaction to the last action.
    pub fn observe(&mut self, user: &UserTurn) {
        if let Some(SystemAction::Confirm(slot)) = self.last_action {
            if user.has(ActType::Affirm) {
                self.grounded.insert(slot);
            }
        }
        for act in &user.acts {
            if let (ActType::Inform, Some(slot)) = (act.act, act.slot) {
                self.grounded.remove(&slot);
            }
        }
    }
}

/// The expert policy: greet, request missing slots in canonical order,
/// confirm each slot, query the KB, then offer or report failure.
pub fn expert_next_action(state: &mut ExpertState, labels: &[String], kb: &KbResultSummary) -> SystemAction {
    let action = if state.phase == ExpertPhase::Greeting {
        SystemAction::Greet
    } else if let Some(&slot) = Slot::ALL.iter().find(|s| labels[s.index()] == NULL_VALUE) {
        SystemAction::Request(slot)
    } else if let Some(&slot) = Slot::ALL.iter().find(|s| !state.grounded.contains(s)) {
        SystemAction::Confirm(slot)
    } else if !state.queried {
        SystemAction::ApiCall
    } else if state.phase != ExpertPhase::Closing && kb.availability {
        SystemAction::Offer
    } else if state.phase != ExpertPhase::Closing {
        SystemAction::NotifyFailure
    } else {
        SystemAction::Bye
    };
    state.phase = match action {
        SystemAction::Greet | SystemAction::Request(_) => ExpertPhase::SlotFilling,
        SystemAction::Confirm(_) => ExpertPhase::Confirming,
        SystemAction::ApiCall => ExpertPhase::Offering,
        _ => ExpertPhase::Closing,
    };
    if action == SystemAction::ApiCall {
        state.queried = true;
    }
    state.last_action = Some(action);
    action
}

/// The expert as a dialogue agent. It reads user acts directly, so its
/// tracked labels are exact.
#[derive(Debug, Clone)]
pub struct ExpertAgent {
    state: ExpertState,
    labels: Vec<String>,
}

impl ExpertAgent {
    pub fn new() -> Self {
        Self {
            state: ExpertState::default(),
            labels: vec![NULL_VALUE.to_string(); Slot::COUNT],
        }
    }

    pub fn state(&self) -> &ExpertState {
        &self.state
    }
}

impl Default for ExpertAgent {
    fn default() -> Self {
        Self::new()
    }
}

impl DialogueAgent for ExpertAgent {
    fn reset(&mut self) -> Result<()> {
        *self = Self::new();
        Ok(())
    }

    fn observe(&mut self, user: &UserTurn) -> Result<Vec<String>> {
        self.state.observe(user);
        for act in &user.acts {
            if let (ActType::Inform, Some(slot), Some(v)) = (act.act, act.slot, &act.value) {
                self.labels[slot.index()] = v.clone();
            }
        }
        Ok(self.labels.clone())
    }

    fn decide(&mut self, kb: &KbResultSummary) -> Result<SystemAction> {
        Ok(expert_next_action(&mut self.state, &self.labels, kb))
    }
}
