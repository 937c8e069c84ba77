//! Movie-booking domain: ontology, showtime knowledge base, symbolic
//! queries, result summaries and template NLG for system turns.

mod kb;
mod nlg;
mod ontology;
mod templates;

pub use kb::{
    build_query, execute_query, first_offerable, generate_kb, summarize_results, Constraint,
    CountBucket, KbEntity, KbResultSummary, KbSize, KnowledgeBase, SymbolicQuery,
    KB_SUMMARY_WIDTH,
};
pub use nlg::{confirm_surface, SystemNlg, SystemTurn, DEFAULT_SYSTEM_TEMPLATES};
pub use ontology::{Ontology, MAX_TICKETS};
pub use templates::{display_value, fill, TemplateTable};
