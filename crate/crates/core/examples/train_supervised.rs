//! Supervised pre-training on an expert corpus, then tracking accuracy on a
//! held-out corpus and in live dialogues with unseen user phrasings.
//!
//! Usage: `train_supervised [dialogues] [epochs]` (defaults 300 and 3).

use std::sync::Arc;
use std::time::Instant;

use dialogue_workbench::corpus::generate_corpus;
use dialogue_workbench::domain::{generate_kb, KbSize};
use dialogue_workbench::evaluator::{evaluate_corpus_dst, evaluate_interactive};
use dialogue_workbench::model::{model_for_corpus, ModelHyper};
use dialogue_workbench::simulator::{TemplateSet, UserSimulator};
use dialogue_workbench::trainer::{supervised_train, SlHyper};

fn main() -> dialogue_workbench::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(300);
    let epochs = args.get(1).copied().unwrap_or(3);

    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    let train = generate_corpus(&UserSimulator::new(kb.clone(), 11), n)?;
    let held_out = generate_corpus(&UserSimulator::new(kb.clone(), 12), 200)?;
    let mut model = model_for_corpus(ModelHyper::desk(), &train, kb.ontology(), 3)?;
    println!("vocabulary {} words, {} parameters", model.vocab().len(), model.params().num_scalars());

    let hyper = SlHyper {
        epochs: 1,
        ..SlHyper::default()
    };
    for epoch in 1..=epochs {
        let start = Instant::now();
        let loss = supervised_train(&mut model, &train, &SlHyper { seed: epoch as u64, ..hyper.clone() })?;
        let dst = evaluate_corpus_dst(&model, &held_out)?;
        println!(
            "epoch {epoch}: loss {:.3}, held-out joint {:.3}, {:.1}s",
            loss[0].mean_loss,
            dst.joint_accuracy,
            start.elapsed().as_secs_f64()
        );
    }
    let sim = UserSimulator::new(kb, 13);
    for set in [TemplateSet::Train, TemplateSet::Extended] {
        let r = evaluate_interactive(&model, &sim, 100, set)?;
        println!(
            "interactive {set}: success {:.2}, joint {:.3}, mean turns {:.2}",
            r.success_rate, r.joint_accuracy, r.mean_turns
        );
    }
    Ok(())
}
