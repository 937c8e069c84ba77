use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dialogue::SystemAction;
use crate::error::{Error, Result};

/// Layer widths of the hierarchical model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub dialogue_state: usize,
    /// Per direction; the utterance vector is twice this wide.
    pub encoder: usize,
    pub word_embedding: usize,
    /// Width of action and slot-value embeddings.
    pub action_embedding: usize,
    /// Hidden width of the policy and of every slot tracker.
    pub policy_hidden: usize,
    /// Feeds embedded argmax slot values to the policy as well.
    #[serde(default)]
    pub use_value_embeddings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Full,
    Desk,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Full => "full",
            Profile::Desk => "desk",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Invalid(format!("unknown profile `{other}` (expected full or desk)"))),
        }
    }
}

impl ModelHyper {
    pub fn full() -> Self {
        Self {
            dialogue_state: 200,
            encoder: 150,
            word_embedding: 300,
            action_embedding: 32,
            policy_hidden: 100,
            use_value_embeddings: false,
        }
    }

    pub fn desk() -> Self {
        Self {
            dialogue_state: 64,
            encoder: 48,
            word_embedding: 64,
            action_embedding: 16,
            policy_hidden: 48,
            use_value_embeddings: false,
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Full => Self::full(),
            Profile::Desk => Self::desk(),
        }
    }

    pub fn utterance_width(&self) -> usize {
        2 * self.encoder
    }

    pub fn validate(&self) -> Result<()> {
        let widths = [
            self.dialogue_state,
            self.encoder,
            self.word_embedding,
            self.action_embedding,
            self.policy_hidden,
        ];
        if widths.contains(&0) {
            return Err(Error::Invalid(format!("model widths must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Ordered system action inventory; index `len()` is the reserved start action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SystemActionSpace {
    actions: Vec<SystemAction>,
}

impl SystemActionSpace {
    pub fn new(actions: Vec<SystemAction>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Empty("action space"));
        }
        for (i, a) in actions.iter().enumerate() {
            if actions[..i].contains(a) {
                return Err(Error::Invalid(format!("duplicate action `{}`", a.label())));
            }
        }
        Ok(Self { actions })
    }

    pub fn movie_booking() -> Self {
        Self::new(SystemAction::inventory()).expect("inventory is unique")
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Embedding row of the `<start>` pseudo-action.
    pub fn start_index(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, index: usize) -> Result<SystemAction> {
        self.actions
            .get(index)
            .copied()
            .ok_or_else(|| Error::Invalid(format!("action index {index} out of range")))
    }

    pub fn index_of(&self, action: SystemAction) -> Result<usize> {
        self.actions
            .iter()
            .position(|&a| a == action)
            .ok_or_else(|| Error::Invalid(format!("action `{}` not in action space", action.label())))
    }

    pub fn index_of_label(&self, label: &str) -> Result<usize> {
        self.index_of(label.parse()?)
    }

    pub fn labels(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.label()).collect()
    }

    pub fn actions(&self) -> &[SystemAction] {
        &self.actions
    }
}

impl TryFrom<Vec<String>> for SystemActionSpace {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(labels.iter().map(|l| l.parse()).collect::<Result<_>>()?)
    }
}

impl From<SystemActionSpace> for Vec<String> {
    fn from(s: SystemActionSpace) -> Self {
        s.labels()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        assert_eq!(ModelHyper::full().utterance_width(), 300);
        assert_eq!(ModelHyper::desk().utterance_width(), 96);
        assert_eq!("desk".parse::<Profile>().unwrap(), Profile::Desk);
        let mut h = ModelHyper::desk();
        h.encoder = 0;
        assert!(h.validate().is_err());
    }

    #[test]
    fn action_space_round_trip() {
        let s = SystemActionSpace::movie_booking();
        assert_eq!(s.len(), 15);
        assert_eq!(s.start_index(), 15);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SystemActionSpace>(&json).unwrap(), s);
        assert_eq!(s.index_of_label("confirm_date").unwrap(), s.index_of(SystemAction::Confirm(crate::dialogue::Slot::Date)).unwrap());
    }
}
