use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dialogue::{Slot, DONTCARE_VALUE, NULL_VALUE};
use crate::error::{Error, Result};

/// Delexicalised templates keyed by a label (system action or user act pattern).
///
/// File format: one record per line, `label<TAB>template<TAB>template...`;
/// blank lines and lines starting with `#` are ignored. Templates use
/// `<slot>` placeholders such as `<date>`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TemplateTable {
    entries: BTreeMap<String, Vec<String>>,
}

impl TemplateTable {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let label = fields.next().unwrap_or_default().trim().to_string();
            let templates: Vec<String> = fields
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect();
            if label.is_empty() || templates.is_empty() {
                return Err(Error::Parse {
                    path: origin.into(),
                    line: i + 1,
                    message: "expected `label<TAB>template...`".into(),
                });
            }
            for t in &templates {
                for ph in placeholders(t) {
                    if ph.parse::<Slot>().is_err() {
                        return Err(Error::Parse {
                            path: origin.into(),
                            line: i + 1,
                            message: format!("unknown placeholder <{ph}>"),
                        });
                    }
                }
            }
            entries.entry(label).or_default().extend(templates);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, templates) in &self.entries {
            let _ = writeln!(out, "{label}\t{}", templates.join("\t"));
        }
        out
    }

    pub fn get(&self, label: &str) -> Option<&[String]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    pub fn require(&self, label: &str) -> Result<&[String]> {
        self.get(label)
            .ok_or_else(|| Error::MissingTemplate(label.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('<') {
        let after = &rest[start + 1..];
        match after.find('>') {
            Some(end) => {
                out.push(&after[..end]);
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    out
}

/// Surface string used when a slot value is inserted into text.
pub fn display_value(value: &str) -> &str {
    match value {
        DONTCARE_VALUE => "any",
        NULL_VALUE => "unknown",
        v => v,
    }
}

/// Replaces every `<slot>` placeholder that has a value in `values`.
pub fn fill(template: &str, values: &[(Slot, &str)]) -> String {
    let mut out = template.to_string();
    for (slot, value) in values {
        out = out.replace(&format!("<{slot}>"), display_value(value));
    }
    out
}
