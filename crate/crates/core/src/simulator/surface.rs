use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{ActType, DialogueAct, Slot, DONTCARE_VALUE};
use crate::domain::{fill, TemplateTable};
use crate::error::{Error, Result};

pub const DEFAULT_TRAIN_TEMPLATES: &str = include_str!("../../data/user_templates_train.tsv");
pub const DEFAULT_EXTENDED_TEMPLATES: &str = include_str!("../../data/user_templates_extended.tsv");
pub const DEFAULT_PROFILES: &str = include_str!("../../data/profiles.tsv");

pub const MIN_FORMS_PER_PATTERN: usize = 3;
const JOIN: &str = "join";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateSet {
    Train,
    Extended,
}

impl fmt::Display for TemplateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateSet::Train => "train",
            TemplateSet::Extended => "extended",
        })
    }
}

impl FromStr for TemplateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(TemplateSet::Train),
            "extended" => Ok(TemplateSet::Extended),
            other => Err(Error::Invalid(format!("unknown template set `{other}`"))),
        }
    }
}

/// Simulated-user personality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub name: String,
    /// Chance of volunteering one extra unrequested slot in a turn.
    pub p_extra_inform: f64,
    /// Chance of answering a different slot than the one requested.
    pub p_noncooperative: f64,
    pub template_set: TemplateSet,
}

impl UserProfile {
    pub fn new(name: &str, p_extra_inform: f64, p_noncooperative: f64, template_set: TemplateSet) -> Result<Self> {
        for p in [p_extra_inform, p_noncooperative] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("profile {name}: probability {p} not in [0, 1]")));
            }
        }
        Ok(Self {
            name: name.to_string(),
            p_extra_inform,
            p_noncooperative,
            template_set,
        })
    }

    pub fn cooperative() -> Self {
        Self::new("cooperative", 0.3, 0.0, TemplateSet::Train).expect("valid")
    }

    /// Profile file: `name<TAB>p_extra_inform<TAB>p_noncooperative<TAB>template_set`.
    pub fn parse_profiles(text: &str, origin: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.into(),
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 fields, got {}", f.len())));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad probability `{s}`")));
            let set = f[3].parse().map_err(|e: Error| err(e.to_string()))?;
            out.push(Self::new(f[0], p(f[1])?, p(f[2])?, set).map_err(|e| err(e.to_string()))?);
        }
        if out.is_empty() {
            return Err(Error::Empty("profile file"));
        }
        Ok(out)
    }

    pub fn load_profiles(path: &Path) -> Result<Vec<Self>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_profiles(&text, &path.display().to_string())
    }

    pub fn default_profiles() -> Vec<Self> {
        Self::parse_profiles(DEFAULT_PROFILES, "profiles.tsv").expect("bundled profiles parse")
    }
}

/// Template pattern name of a single user act.
pub fn act_pattern(act: &DialogueAct) -> Result<String> {
    Ok(match (act.act, act.slot, act.value.as_deref()) {
        (ActType::Inform, Some(slot), Some(DONTCARE_VALUE)) => format!("dontcare_{slot}"),
        (ActType::Inform, Some(slot), Some(_)) => format!("inform_{slot}"),
        (ActType::Affirm | ActType::Negate | ActType::Accept | ActType::Reject | ActType::Bye, _, _) => {
            act.act.name().to_string()
        }
        _ => return Err(Error::Invalid(format!("no user surface form for `{act}`"))),
    })
}

/// Every pattern a simulated user can emit.
pub fn required_patterns() -> Vec<String> {
    let mut out: Vec<String> = Slot::ALL.iter().map(|s| format!("inform_{s}")).collect();
    out.extend(
        [Slot::Movie, Slot::Theater, Slot::Date, Slot::Time]
            .iter()
            .map(|s| format!("dontcare_{s}")),
    );
    out.extend(["affirm", "negate", "accept", "reject", "bye", JOIN].map(String::from));
    out
}

/// Surface forms for user acts, validated at load time.
#[derive(Debug, Clone)]
pub struct UserTemplates {
    table: TemplateTable,
}

impl UserTemplates {
    pub fn new(table: TemplateTable) -> Result<Self> {
        for pattern in required_patterns() {
            let forms = table.require(&pattern)?;
            if forms.len() < MIN_FORMS_PER_PATTERN {
                return Err(Error::Invalid(format!(
                    "pattern `{pattern}` needs at least {MIN_FORMS_PER_PATTERN} forms, has {}",
                    forms.len()
                )));
            }
        }
        Ok(Self { table })
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        Self::new(TemplateTable::parse(text, origin)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(TemplateTable::load(path)?)
    }

    pub fn default_train() -> Self {
        Self::parse(DEFAULT_TRAIN_TEMPLATES, "user_templates_train.tsv").expect("bundled train templates")
    }

    pub fn default_extended() -> Self {
        Self::parse(DEFAULT_EXTENDED_TEMPLATES, "user_templates_extended.tsv").expect("bundled extended templates")
    }

    pub fn table(&self) -> &TemplateTable {
        &self.table
    }

    pub fn forms(&self, pattern: &str) -> Result<&[String]> {
        self.table.require(pattern)
    }

    /// Fails if any pattern shares a surface form with `other`.
    pub fn ensure_disjoint(&self, other: &UserTemplates) -> Result<()> {
        for (pattern, forms) in self.table.iter() {
            if let Some(theirs) = other.table.get(pattern) {
                if let Some(shared) = forms.iter().find(|f| theirs.contains(f)) {
                    return Err(Error::Invalid(format!(
                        "template `{shared}` for `{pattern}` appears in both sets"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Realizes a single act with a uniformly drawn form.
    fn realize_act<R: Rng>(&self, act: &DialogueAct, rng: &mut R) -> Result<String> {
        let forms = self.forms(&act_pattern(act)?)?;
        let form = forms.choose(rng).expect("validated non-empty");
        Ok(match (act.slot, act.value.as_deref()) {
            (Some(slot), Some(v)) => fill(form, &[(slot, v)]),
            _ => form.clone(),
        })
    }
}

/// Natural-language user utterance for a non-empty act list. Multiple acts
/// are realized one by one and joined with a connector from the same set.
pub fn realize_user_utterance<R: Rng>(
    acts: &[DialogueAct],
    templates: &UserTemplates,
    rng: &mut R,
) -> Result<String> {
    if acts.is_empty() {
        return Err(Error::Empty("user acts"));
    }
    let mut out = templates.realize_act(&acts[0], rng)?;
    for act in &acts[1..] {
        let join = templates.forms(JOIN)?.choose(rng).expect("validated").clone();
        out.push(' ');
        out.push_str(&join);
        out.push(' ');
        out.push_str(&templates.realize_act(act, rng)?);
    }
    Ok(out)
}

/// Every string `realize_user_utterance` could produce for `acts`.
pub fn all_realizations(acts: &[DialogueAct], templates: &UserTemplates) -> Result<Vec<String>> {
    let mut partial: Vec<String> = vec![String::new()];
    for (i, act) in acts.iter().enumerate() {
        let forms = templates.forms(&act_pattern(act)?)?;
        let filled: Vec<String> = forms
            .iter()
            .map(|f| match (act.slot, act.value.as_deref()) {
                (Some(slot), Some(v)) => fill(f, &[(slot, v)]),
                _ => f.clone(),
            })
            .collect();
        let joins: Vec<String> = if i == 0 {
            vec![String::new()]
        } else {
            templates.forms(JOIN)?.iter().map(|j| format!(" {j} ")).collect()
        };
        let mut next = Vec::new();
        for p in &partial {
            for j in &joins {
                for f in &filled {
                    next.push(format!("{p}{j}{f}"));
                }
            }
        }
        partial = next;
    }
    Ok(partial)
}
