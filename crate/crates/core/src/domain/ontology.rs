use serde::{Deserialize, Serialize};

use crate::dialogue::{Slot, DONTCARE_VALUE, NULL_VALUE};
use crate::error::{Error, Result};

const MOVIES: &[&str] = &[
    "inception",
    "avatar",
    "arrival",
    "coco",
    "frozen",
    "moana",
    "zootopia",
    "interstellar",
    "gravity",
    "dune",
    "jaws",
    "rocky",
];
const THEATERS: &[&str] = &["regal", "amc", "cinemark", "landmark", "alamo", "harkins"];
const DATES: &[&str] = &[
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
];
const TIMES: &[&str] = &["1pm", "3pm", "5pm", "7pm", "9pm", "11pm", "2pm", "4pm"];

pub const MAX_TICKETS: u32 = 6;

/// Per-slot finite value lists of the movie-booking domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    values: Vec<Vec<String>>,
}

impl Ontology {
    pub fn new(values: Vec<Vec<String>>) -> Result<Self> {
        if values.len() != Slot::COUNT {
            return Err(Error::Invalid(format!(
                "ontology needs {} slots, got {}",
                Slot::COUNT,
                values.len()
            )));
        }
        for (slot, vals) in Slot::ALL.iter().zip(&values) {
            if vals.is_empty() {
                return Err(Error::Invalid(format!("slot {slot} has no values")));
            }
            let mut sorted = vals.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != vals.len() {
                return Err(Error::Invalid(format!("slot {slot} has duplicate values")));
            }
            if vals.iter().any(|v| v == NULL_VALUE || v == DONTCARE_VALUE || v.contains(char::is_whitespace)) {
                return Err(Error::Invalid(format!("slot {slot} has a reserved or multi-word value")));
            }
        }
        Ok(Self { values })
    }

    /// Takes the first `n` names from the built-in pools.
    pub fn sized(n_movies: usize, n_theaters: usize, n_days: usize, n_times: usize) -> Result<Self> {
        fn take(pool: &[&str], n: usize, what: &str) -> Result<Vec<String>> {
            if n == 0 || n > pool.len() {
                return Err(Error::Invalid(format!(
                    "{what} count must be in 1..={}, got {n}",
                    pool.len()
                )));
            }
            Ok(pool[..n].iter().map(|s| s.to_string()).collect())
        }
        Self::new(vec![
            (1..=MAX_TICKETS).map(|n| n.to_string()).collect(),
            take(MOVIES, n_movies, "movie")?,
            take(THEATERS, n_theaters, "theater")?,
            take(DATES, n_days, "date")?,
            take(TIMES, n_times, "time")?,
        ])
    }

    pub fn values(&self, slot: Slot) -> &[String] {
        &self.values[slot.index()]
    }

    pub fn contains(&self, slot: Slot, value: &str) -> bool {
        self.values(slot).iter().any(|v| v == value)
    }

    /// Candidate list for belief tracking: `<null>`, `<dontcare>`, then the values.
    pub fn candidates(&self, slot: Slot) -> Vec<String> {
        let mut out = vec![NULL_VALUE.to_string(), DONTCARE_VALUE.to_string()];
        out.extend(self.values(slot).iter().cloned());
        out
    }

    pub fn all_candidates(&self) -> Vec<Vec<String>> {
        Slot::ALL.iter().map(|&s| self.candidates(s)).collect()
    }
}
