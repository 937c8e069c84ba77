//! Generates an expert corpus against the simulated user and prints its
//! length and success statistics.

use std::sync::Arc;

use dialogue_workbench::corpus::generate_corpus;
use dialogue_workbench::domain::{generate_kb, KbSize};
use dialogue_workbench::simulator::{UserProfile, UserSimulator};

fn main() -> dialogue_workbench::Result<()> {
    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    println!("kb entities: {}", kb.len());
    for (label, profiles) in [
        ("cooperative", vec![UserProfile::cooperative()]),
        ("all profiles", UserProfile::default_profiles()),
    ] {
        let sim = UserSimulator::new(kb.clone(), 7).with_profiles(profiles)?;
        let corpus = generate_corpus(&sim, 500)?;
        let turns: usize = corpus.iter().map(|d| d.len()).sum();
        let feasible: Vec<_> = corpus.iter().filter(|d| d.goal.feasible).collect();
        let solved = feasible.iter().filter(|d| d.outcome.success).count();
        println!(
            "{label}: mean turns {:.2}, feasible {}/{}, feasible solved {}",
            turns as f64 / corpus.len() as f64,
            feasible.len(),
            corpus.len(),
            solved
        );
    }
    Ok(())
}
