//! Types shared by the agent, the domain and the simulator: slots, dialogue
//! acts, system actions and belief states.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NULL_VALUE: &str = "<null>";
pub const DONTCARE_VALUE: &str = "<dontcare>";

/// Goal slots of the movie-booking domain, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    NumTickets,
    Movie,
    Theater,
    Date,
    Time,
}

impl Slot {
    pub const ALL: [Slot; 5] = [
        Slot::NumTickets,
        Slot::Movie,
        Slot::Theater,
        Slot::Date,
        Slot::Time,
    ];
    pub const COUNT: usize = 5;

    pub fn name(self) -> &'static str {
        match self {
            Slot::NumTickets => "num_tickets",
            Slot::Movie => "movie",
            Slot::Theater => "theater",
            Slot::Date => "date",
            Slot::Time => "time",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Slot::ALL
            .into_iter()
            .find(|slot| slot.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown slot `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActType {
    // system side
    Greet,
    Request,
    Confirm,
    ApiCall,
    Offer,
    NotifyFailure,
    Bye,
    // user side
    Inform,
    Affirm,
    Negate,
    Accept,
    Reject,
}

impl ActType {
    pub fn name(self) -> &'static str {
        match self {
            ActType::Greet => "greet",
            ActType::Request => "request",
            ActType::Confirm => "confirm",
            ActType::ApiCall => "api_call",
            ActType::Offer => "offer",
            ActType::NotifyFailure => "notify_failure",
            ActType::Bye => "bye",
            ActType::Inform => "inform",
            ActType::Affirm => "affirm",
            ActType::Negate => "negate",
            ActType::Accept => "accept",
            ActType::Reject => "reject",
        }
    }
}

/// An act type with optional slot/value arguments, e.g. `inform(date=monday)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DialogueAct {
    pub act: ActType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<Slot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

impl DialogueAct {
    pub fn new(act: ActType) -> Self {
        Self {
            act,
            slot: None,
            value: None,
        }
    }

    pub fn inform(slot: Slot, value: impl Into<String>) -> Self {
        Self {
            act: ActType::Inform,
            slot: Some(slot),
            value: Some(value.into()),
        }
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.act.name())?;
        match (&self.slot, &self.value) {
            (Some(s), Some(v)) => write!(f, "({s}={v})"),
            (Some(s), None) => write!(f, "({s})"),
            _ => Ok(()),
        }
    }
}

/// A system action label: act type crossed with slot type, or a standalone act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SystemAction {
    Greet,
    Request(Slot),
    Confirm(Slot),
    ApiCall,
    Offer,
    NotifyFailure,
    Bye,
}

impl SystemAction {
    pub fn label(self) -> String {
        match self {
            SystemAction::Greet => "greet".into(),
            SystemAction::Request(s) => format!("request_{s}"),
            SystemAction::Confirm(s) => format!("confirm_{s}"),
            SystemAction::ApiCall => "api_call".into(),
            SystemAction::Offer => "offer".into(),
            SystemAction::NotifyFailure => "notify_failure".into(),
            SystemAction::Bye => "bye".into(),
        }
    }

    pub fn act_type(self) -> ActType {
        match self {
            SystemAction::Greet => ActType::Greet,
            SystemAction::Request(_) => ActType::Request,
            SystemAction::Confirm(_) => ActType::Confirm,
            SystemAction::ApiCall => ActType::ApiCall,
            SystemAction::Offer => ActType::Offer,
            SystemAction::NotifyFailure => ActType::NotifyFailure,
            SystemAction::Bye => ActType::Bye,
        }
    }

    pub fn slot(self) -> Option<Slot> {
        match self {
            SystemAction::Request(s) | SystemAction::Confirm(s) => Some(s),
            _ => None,
        }
    }

    /// The movie-booking inventory in its fixed order (15 actions).
    pub fn inventory() -> Vec<SystemAction> {
        let mut out = vec![SystemAction::Greet];
        out.extend(Slot::ALL.iter().map(|&s| SystemAction::Request(s)));
        out.extend(Slot::ALL.iter().map(|&s| SystemAction::Confirm(s)));
        out.extend([
            SystemAction::ApiCall,
            SystemAction::Offer,
            SystemAction::NotifyFailure,
            SystemAction::Bye,
        ]);
        out
    }
}

impl fmt::Display for SystemAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for SystemAction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemAction::inventory()
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown system action `{s}`")))
    }
}

/// Per-slot probability distributions over fixed candidate lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub candidates: Vec<Vec<String>>,
    pub probs: Vec<Vec<f64>>,
}

impl BeliefState {
    pub fn new(candidates: Vec<Vec<String>>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if candidates.len() != Slot::COUNT || probs.len() != Slot::COUNT {
            return Err(Error::Invalid(format!(
                "belief state needs {} slots",
                Slot::COUNT
            )));
        }
        for (c, p) in candidates.iter().zip(&probs) {
            if c.len() != p.len() || c.is_empty() {
                return Err(Error::Invalid("candidate/probability length mismatch".into()));
            }
        }
        Ok(Self { candidates, probs })
    }

    /// Point-mass beliefs, e.g. from gold labels.
    pub fn from_labels(candidates: Vec<Vec<String>>, labels: &[String]) -> Result<Self> {
        let probs = candidates
            .iter()
            .zip(labels)
            .map(|(cands, label)| {
                let idx = cands
                    .iter()
                    .position(|c| c == label)
                    .ok_or_else(|| Error::Invalid(format!("`{label}` is not a candidate")))?;
                let mut p = vec![0.0; cands.len()];
                p[idx] = 1.0;
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(candidates, probs)
    }

    pub fn argmax_index(&self, slot: Slot) -> usize {
        argmax(&self.probs[slot.index()])
    }

    pub fn argmax(&self, slot: Slot) -> &str {
        &self.candidates[slot.index()][self.argmax_index(slot)]
    }

    pub fn argmax_labels(&self) -> Vec<String> {
        Slot::ALL.iter().map(|&s| self.argmax(s).to_string()).collect()
    }

    pub fn prob_of(&self, slot: Slot, value: &str) -> Option<f64> {
        let i = slot.index();
        self.candidates[i]
            .iter()
            .position(|c| c == value)
            .map(|j| self.probs[i][j])
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Lowercases and splits on anything that is not part of a word.
/// Apostrophes are dropped so "don't" becomes "dont".
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|&c| c != '\'')
        .map(|c| {
            if c.is_alphanumeric() || matches!(c, '<' | '>' | '_') {
                c
            } else {
                ' '
            }
        })
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Token standing in for a silent turn; the encoder needs one input.
pub const SILENT_TOKEN: &str = "<s>";

/// Tokens of a user utterance, with silence mapped to [`SILENT_TOKEN`].
pub fn utterance_tokens(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        vec![SILENT_TOKEN.to_string()]
    } else {
        tokens
    }
}
