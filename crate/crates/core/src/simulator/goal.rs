use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{Slot, DONTCARE_VALUE};
use crate::domain::{KbEntity, KnowledgeBase, MAX_TICKETS};
use crate::error::{Error, Result};

/// Probability that each of movie/theater/date/time becomes `<dontcare>`
/// in a goal copied from a KB entity.
pub const P_DONTCARE: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserGoal {
    /// One concrete value or `<dontcare>` per slot, in canonical slot order.
    pub values: Vec<String>,
    pub feasible: bool,
}

impl UserGoal {
    pub fn value(&self, slot: Slot) -> &str {
        &self.values[slot.index()]
    }

    pub fn tickets(&self) -> u32 {
        self.value(Slot::NumTickets).parse().unwrap_or(1)
    }

    /// Whether the user would accept this showing.
    pub fn accepts(&self, e: &KbEntity) -> bool {
        let fields_match = [Slot::Movie, Slot::Theater, Slot::Date, Slot::Time]
            .into_iter()
            .all(|s| {
                let v = self.value(s);
                v == DONTCARE_VALUE || Some(v) == e.field(s)
            });
        fields_match && e.seats_available >= self.tickets()
    }

    pub fn is_satisfiable(&self, kb: &KnowledgeBase) -> bool {
        kb.entities().iter().any(|e| self.accepts(e))
    }
}

/// Samples a user goal. With probability `1 - p_infeasible` the goal is
/// copied from a random KB entity with free seats; otherwise every slot is
/// drawn uniformly from the ontology (usually unsatisfiable).
pub fn sample_goal<R: Rng>(kb: &KnowledgeBase, rng: &mut R, p_infeasible: f64) -> Result<UserGoal> {
    if kb.is_empty() {
        return Err(Error::Empty("knowledge base"));
    }
    if !(0.0..=1.0).contains(&p_infeasible) {
        return Err(Error::Invalid(format!("p_infeasible {p_infeasible} not in [0, 1]")));
    }
    let ont = kb.ontology();
    let with_seats: Vec<&KbEntity> = kb.entities().iter().filter(|e| e.seats_available > 0).collect();
    let random_combo = rng.gen_bool(p_infeasible) || with_seats.is_empty();
    let values = if random_combo {
        Slot::ALL
            .iter()
            .map(|&s| ont.values(s).choose(rng).expect("non-empty").clone())
            .collect()
    } else {
        let e = with_seats.choose(rng).expect("non-empty");
        let tickets = rng.gen_range(1..=e.seats_available.min(MAX_TICKETS));
        let mut values = vec![tickets.to_string()];
        for slot in [Slot::Movie, Slot::Theater, Slot::Date, Slot::Time] {
            if rng.gen_bool(P_DONTCARE) {
                values.push(DONTCARE_VALUE.to_string());
            } else {
                values.push(e.field(slot).expect("kb slot").to_string());
            }
        }
        values
    };
    let mut goal = UserGoal {
        values,
        feasible: false,
    };
    goal.feasible = goal.is_satisfiable(kb);
    Ok(goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate_kb, KbSize, Ontology};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn feasible_when_no_random_combos() {
        let kb = generate_kb(1, KbSize::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let g = sample_goal(&kb, &mut rng, 0.0).unwrap();
            assert!(g.feasible);
            for s in Slot::ALL {
                assert!(g.value(s) == DONTCARE_VALUE || kb.ontology().contains(s, g.value(s)));
            }
            assert_ne!(g.value(Slot::NumTickets), DONTCARE_VALUE);
        }
    }

    #[test]
    fn same_seed_same_goal() {
        let kb = generate_kb(1, KbSize::default()).unwrap();
        let a = sample_goal(&kb, &mut ChaCha8Rng::seed_from_u64(5), 0.1).unwrap();
        let b = sample_goal(&kb, &mut ChaCha8Rng::seed_from_u64(5), 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_kb_rejected() {
        let kb = KnowledgeBase::new(Ontology::sized(1, 1, 1, 1).unwrap(), vec![]).unwrap();
        assert!(sample_goal(&kb, &mut ChaCha8Rng::seed_from_u64(0), 0.1).is_err());
    }
}
