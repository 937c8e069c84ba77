//! The turn loop shared by corpus generation, training rollouts and
//! evaluation: the agent reads a user turn, the KB is queried with the
//! tracked goal, the agent picks an action and the user reacts.

use rand::Rng;

use crate::dialogue::{ActType, Slot, SystemAction};
use crate::domain::{first_offerable, summarize_results, KbResultSummary, KnowledgeBase, SymbolicQuery, SystemNlg};
use crate::error::Result;
use crate::simulator::{Closure, Exchange, SimulatedUser, Transcript, UserTurn, MAX_TURNS};

/// Anything that can hold the system side of a dialogue.
pub trait DialogueAgent {
    /// Forgets all dialogue state.
    fn reset(&mut self) -> Result<()>;

    /// Consumes one user turn and returns the tracked argmax value per slot.
    fn observe(&mut self, user: &UserTurn) -> Result<Vec<String>>;

    /// Picks the next system action given the summary of the current query.
    fn decide(&mut self, kb: &KbResultSummary) -> Result<SystemAction>;
}

/// Ticket count implied by tracked labels (1 when not yet known).
pub fn tracked_tickets(labels: &[String]) -> u32 {
    labels
        .get(Slot::NumTickets.index())
        .and_then(|v| v.parse().ok())
        .unwrap_or(1)
}

/// Runs one dialogue to closure (accept, bye or the turn cap).
pub fn run_episode<A: DialogueAgent + ?Sized, R: Rng>(
    agent: &mut A,
    user: &mut SimulatedUser<'_, R>,
    kb: &KnowledgeBase,
    nlg: &SystemNlg,
) -> Result<Transcript> {
    agent.reset()?;
    let mut transcript = Transcript::new(user.goal().clone(), &user.profile().name);
    let mut user_turn = user.open()?;
    for turn in 1..=MAX_TURNS {
        let beliefs = agent.observe(&user_turn)?;
        let gold = user.current_labels();
        let results = kb.execute(&SymbolicQuery::from_labels(&beliefs));
        let summary = summarize_results(&results);
        let action = agent.decide(&summary)?;
        let top = first_offerable(&results, tracked_tickets(&beliefs));
        let system = nlg.realize(action, &beliefs, top);
        let reply = user.respond(&system)?;
        transcript.exchanges.push(Exchange {
            user: user_turn,
            gold,
            beliefs,
            kb_summary: summary.encoded.to_vec(),
            system,
        });
        if user.is_closed() || turn == MAX_TURNS {
            transcript.closure = Some(if reply.has(ActType::Accept) {
                Closure::Accepted
            } else if user.is_closed() {
                Closure::UserBye
            } else {
                Closure::TurnCap
            });
            user.close();
            transcript.closing = Some(reply);
            break;
        }
        user_turn = reply;
    }
    Ok(transcript)
}
