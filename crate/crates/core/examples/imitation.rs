//! Imitation learning with dataset aggregation: a briefly pre-trained model
//! talks to users with unseen phrasings, the simulator labels every turn and
//! the model is fine-tuned on the growing aggregate after each round.
//!
//! Usage: `imitation [episodes]` (default 200).

use std::sync::Arc;

use dialogue_workbench::corpus::generate_corpus;
use dialogue_workbench::domain::{generate_kb, KbSize};
use dialogue_workbench::evaluator::evaluate_interactive;
use dialogue_workbench::model::{model_for_corpus, ModelHyper};
use dialogue_workbench::simulator::{TemplateSet, UserSimulator};
use dialogue_workbench::trainer::{run_imitation, supervised_train, IlHyper, SlHyper};

fn main() -> dialogue_workbench::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    let mut corpus = generate_corpus(&UserSimulator::new(kb.clone(), 7), 300)?;
    let mut model = model_for_corpus(ModelHyper::desk(), &corpus, kb.ontology(), 3)?;
    supervised_train(&mut model, &corpus, &SlHyper { epochs: 8, ..SlHyper::default() })?;

    let eval = UserSimulator::new(kb.clone(), 1013);
    let before = evaluate_interactive(&model, &eval, 200, TemplateSet::Extended)?;
    let sim = UserSimulator::new(kb, 21).with_template_set(Some(TemplateSet::Extended));
    let (log, _) = run_imitation(&mut model, &sim, &mut corpus, episodes, &IlHyper::default(), &[])?;
    for r in &log {
        println!(
            "after {:>4} episodes: on-policy joint {:.3}, success {:.2}, loss {:.3}",
            r.episodes, r.dst_joint, r.success_rate, r.loss
        );
    }
    let after = evaluate_interactive(&model, &eval, 200, TemplateSet::Extended)?;
    println!("aggregate holds {} dialogues", corpus.len());
    println!("extended joint {:.3} -> {:.3}", before.joint_accuracy, after.joint_accuracy);
    println!("extended success {:.2} -> {:.2}", before.success_rate, after.success_rate);
    Ok(())
}
