use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ontology::Ontology;
use crate::dialogue::{BeliefState, Slot, DONTCARE_VALUE, NULL_VALUE};
use crate::error::{Error, Result};

const MAX_SEATS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KbEntity {
    pub movie: String,
    pub theater: String,
    pub date: String,
    pub time: String,
    pub seats_available: u32,
}

impl KbEntity {
    /// Value of a KB-backed slot; `num_tickets` is not a KB field.
    pub fn field(&self, slot: Slot) -> Option<&str> {
        match slot {
            Slot::NumTickets => None,
            Slot::Movie => Some(&self.movie),
            Slot::Theater => Some(&self.theater),
            Slot::Date => Some(&self.date),
            Slot::Time => Some(&self.time),
        }
    }

    fn key(&self) -> (&str, &str, &str, &str) {
        (&self.movie, &self.theater, &self.date, &self.time)
    }
}

/// Immutable showtime database plus the ontology its values come from.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    ontology: Ontology,
    entities: Vec<KbEntity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KbSize {
    pub movies: usize,
    pub theaters: usize,
    pub days: usize,
    pub times: usize,
}

impl Default for KbSize {
    fn default() -> Self {
        Self {
            movies: 8,
            theaters: 4,
            days: 5,
            times: 6,
        }
    }
}

impl KnowledgeBase {
    pub fn new(ontology: Ontology, mut entities: Vec<KbEntity>) -> Result<Self> {
        for e in &entities {
            for slot in [Slot::Movie, Slot::Theater, Slot::Date, Slot::Time] {
                let v = e.field(slot).expect("kb slot");
                if !ontology.contains(slot, v) {
                    return Err(Error::Invalid(format!(
                        "entity value `{v}` is not a {slot} in the ontology"
                    )));
                }
            }
        }
        entities.sort_by(|a, b| a.key().cmp(&b.key()));
        let before = entities.len();
        entities.dedup_by(|a, b| a.key() == b.key());
        if entities.len() != before {
            return Err(Error::Invalid("duplicate showtimes in knowledge base".into()));
        }
        Ok(Self { ontology, entities })
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn entities(&self) -> &[KbEntity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Entities matching every present constraint, in (movie, theater, date, time) order.
    pub fn execute(&self, query: &SymbolicQuery) -> Vec<KbEntity> {
        self.entities
            .iter()
            .filter(|e| query.matches(e))
            .cloned()
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for slot in Slot::ALL {
            let _ = writeln!(out, "#ontology\t{slot}\t{}", self.ontology.values(slot).join("\t"));
        }
        out.push_str("#movie\ttheater\tdate\ttime\tseats_available\n");
        for e in &self.entities {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                e.movie, e.theater, e.date, e.time, e.seats_available
            );
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let mut slot_values: Vec<Option<Vec<String>>> = vec![None; Slot::COUNT];
        let mut entities = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#ontology\t") {
                let mut fields = rest.split('\t');
                let slot: Slot = fields
                    .next()
                    .unwrap_or_default()
                    .parse()
                    .map_err(|e: Error| err(lineno, e.to_string()))?;
                slot_values[slot.index()] = Some(fields.map(str::to_string).collect());
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(err(lineno, format!("expected 5 fields, got {}", fields.len())));
            }
            let seats = fields[4]
                .parse()
                .map_err(|_| err(lineno, format!("bad seat count `{}`", fields[4])))?;
            entities.push(KbEntity {
                movie: fields[0].into(),
                theater: fields[1].into(),
                date: fields[2].into(),
                time: fields[3].into(),
                seats_available: seats,
            });
        }
        let values = slot_values
            .into_iter()
            .zip(Slot::ALL)
            .map(|(v, slot)| v.ok_or_else(|| err(0, format!("missing #ontology line for {slot}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Ontology::new(values)?, entities)
    }
}

/// Random showtimes: every (theater, date) pair shows a random subset of
/// movies, each at one or two random times. Deterministic for a seed.
pub fn generate_kb(seed: u64, size: KbSize) -> Result<KnowledgeBase> {
    let ontology = Ontology::sized(size.movies, size.theaters, size.days, size.times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entities = Vec::new();
    let times = ontology.values(Slot::Time).to_vec();
    for theater in ontology.values(Slot::Theater) {
        for date in ontology.values(Slot::Date) {
            for movie in ontology.values(Slot::Movie) {
                if !rng.gen_bool(0.4) {
                    continue;
                }
                let n_times = rng.gen_range(1..=2).min(times.len());
                for time in times.choose_multiple(&mut rng, n_times) {
                    entities.push(KbEntity {
                        movie: movie.clone(),
                        theater: theater.clone(),
                        date: date.clone(),
                        time: time.clone(),
                        seats_available: rng.gen_range(0..=MAX_SEATS),
                    });
                }
            }
        }
    }
    if entities.is_empty() {
        let pick = |slot: Slot, rng: &mut ChaCha8Rng| {
            ontology.values(slot).choose(rng).expect("non-empty").clone()
        };
        entities.push(KbEntity {
            movie: pick(Slot::Movie, &mut rng),
            theater: pick(Slot::Theater, &mut rng),
            date: pick(Slot::Date, &mut rng),
            time: pick(Slot::Time, &mut rng),
            seats_available: rng.gen_range(1..=MAX_SEATS),
        });
    }
    KnowledgeBase::new(ontology, entities)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    /// Slot not mentioned yet.
    Absent,
    /// User does not care; matches anything.
    Any,
    Value(String),
}

impl Constraint {
    fn from_label(label: &str) -> Self {
        match label {
            NULL_VALUE => Constraint::Absent,
            DONTCARE_VALUE => Constraint::Any,
            v => Constraint::Value(v.to_string()),
        }
    }
}

/// One constraint per slot; `num_tickets` is carried but ignored by the KB.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicQuery {
    pub constraints: Vec<Constraint>,
}

impl SymbolicQuery {
    /// Fills the query template with the best hypothesis of every slot.
    pub fn from_beliefs(beliefs: &BeliefState) -> Self {
        Self {
            constraints: Slot::ALL
                .iter()
                .map(|&s| Constraint::from_label(beliefs.argmax(s)))
                .collect(),
        }
    }

    pub fn from_labels(labels: &[String]) -> Self {
        Self {
            constraints: labels.iter().map(|l| Constraint::from_label(l)).collect(),
        }
    }

    pub fn constraint(&self, slot: Slot) -> &Constraint {
        &self.constraints[slot.index()]
    }

    pub fn without(&self, slot: Slot) -> Self {
        let mut q = self.clone();
        q.constraints[slot.index()] = Constraint::Absent;
        q
    }

    /// True when no slot carries a concrete value or wildcard.
    pub fn is_empty(&self) -> bool {
        self.constraints.iter().all(|c| *c == Constraint::Absent)
    }

    pub fn matches(&self, e: &KbEntity) -> bool {
        Slot::ALL.iter().all(|&slot| match (self.constraint(slot), e.field(slot)) {
            (_, None) => true,
            (Constraint::Value(v), Some(f)) => v == f,
            _ => true,
        })
    }
}

pub fn build_query(beliefs: &BeliefState) -> SymbolicQuery {
    SymbolicQuery::from_beliefs(beliefs)
}

pub fn execute_query(kb: &KnowledgeBase, query: &SymbolicQuery) -> Vec<KbEntity> {
    kb.execute(query)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountBucket {
    Zero,
    One,
    Few,
    Many,
}

impl CountBucket {
    pub fn of(count: usize) -> Self {
        match count {
            0 => CountBucket::Zero,
            1 => CountBucket::One,
            2..=5 => CountBucket::Few,
            _ => CountBucket::Many,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for CountBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CountBucket::Zero => "zero",
            CountBucket::One => "one",
            CountBucket::Few => "few",
            CountBucket::Many => "many",
        })
    }
}

pub const KB_SUMMARY_WIDTH: usize = 5;

/// Availability bit plus a one-hot match-count bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KbResultSummary {
    pub availability: bool,
    pub bucket: CountBucket,
    pub encoded: [f64; KB_SUMMARY_WIDTH],
}

impl KbResultSummary {
    pub fn from_count(count: usize) -> Self {
        let bucket = CountBucket::of(count);
        let mut encoded = [0.0; KB_SUMMARY_WIDTH];
        encoded[0] = if count > 0 { 1.0 } else { 0.0 };
        encoded[1 + bucket.index()] = 1.0;
        Self {
            availability: count > 0,
            bucket,
            encoded,
        }
    }
}

pub fn summarize_results(entities: &[KbEntity]) -> KbResultSummary {
    KbResultSummary::from_count(entities.len())
}

/// First ranked entity with enough free seats for `tickets`.
pub fn first_offerable(results: &[KbEntity], tickets: u32) -> Option<&KbEntity> {
    results.iter().find(|e| e.seats_available >= tickets)
}
