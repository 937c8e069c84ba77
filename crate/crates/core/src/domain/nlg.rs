use serde::{Deserialize, Serialize};

use super::kb::KbEntity;
use super::templates::{display_value, fill, TemplateTable};
use crate::dialogue::{Slot, SystemAction};
use crate::error::Result;

pub const DEFAULT_SYSTEM_TEMPLATES: &str = include_str!("../../data/system_templates.tsv");

/// A realized system turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemTurn {
    /// Action actually performed (differs from the chosen one on substitution).
    pub action: SystemAction,
    /// Value filled into a confirm template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<KbEntity>,
    pub text: String,
    /// True when an `offer` had no entity and fell back to `notify_failure`.
    #[serde(default)]
    pub substituted: bool,
}

impl SystemTurn {
    /// The action the agent selected, before any substitution.
    pub fn chosen(&self) -> SystemAction {
        if self.substituted {
            SystemAction::Offer
        } else {
            self.action
        }
    }
}

/// Template NLG for system actions.
#[derive(Debug, Clone)]
pub struct SystemNlg {
    table: TemplateTable,
}

impl SystemNlg {
    /// Fails unless every action of the inventory has a template.
    pub fn new(table: TemplateTable) -> Result<Self> {
        for action in SystemAction::inventory() {
            table.require(&action.label())?;
        }
        Ok(Self { table })
    }

    pub fn default_templates() -> Self {
        Self::new(TemplateTable::parse(DEFAULT_SYSTEM_TEMPLATES, "system_templates.tsv").expect("bundled templates parse"))
            .expect("bundled templates cover the inventory")
    }

    pub fn table(&self) -> &TemplateTable {
        &self.table
    }

    /// Fills the first template of `action` from the tracked goal
    /// (`beliefs`, one argmax label per slot) or the offered entity.
    pub fn realize(
        &self,
        action: SystemAction,
        beliefs: &[String],
        top_entity: Option<&KbEntity>,
    ) -> SystemTurn {
        let template = |a: SystemAction| self.table.get(&a.label()).expect("validated")[0].clone();
        match action {
            SystemAction::Offer => match top_entity {
                Some(e) => {
                    let values: Vec<(Slot, &str)> = [Slot::Movie, Slot::Theater, Slot::Date, Slot::Time]
                        .into_iter()
                        .map(|s| (s, e.field(s).expect("kb slot")))
                        .chain(std::iter::once((Slot::NumTickets, beliefs[Slot::NumTickets.index()].as_str())))
                        .collect();
                    SystemTurn {
                        action,
                        value: None,
                        entity: Some(e.clone()),
                        text: fill(&template(action), &values),
                        substituted: false,
                    }
                }
                None => SystemTurn {
                    substituted: true,
                    ..self.realize(SystemAction::NotifyFailure, beliefs, None)
                },
            },
            SystemAction::Confirm(slot) => {
                let value = beliefs[slot.index()].clone();
                SystemTurn {
                    action,
                    text: fill(&template(action), &[(slot, &value)]),
                    value: Some(value),
                    entity: None,
                    substituted: false,
                }
            }
            _ => {
                let values: Vec<(Slot, &str)> = Slot::ALL
                    .iter()
                    .map(|&s| (s, beliefs[s.index()].as_str()))
                    .collect();
                SystemTurn {
                    action,
                    value: None,
                    entity: None,
                    text: fill(&template(action), &values),
                    substituted: false,
                }
            }
        }
    }
}

/// The value string a confirm turn inserted into its text.
pub fn confirm_surface(value: &str) -> &str {
    display_value(value)
}
