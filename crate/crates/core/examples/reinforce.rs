//! REINFORCE from simulated rewards, updating every parameter or only the
//! policy network, starting from the same supervised model.
//!
//! Usage: `reinforce [episodes]` (default 1000).

use std::sync::Arc;

use dialogue_workbench::corpus::generate_corpus;
use dialogue_workbench::domain::{generate_kb, KbSize};
use dialogue_workbench::evaluator::evaluate_interactive;
use dialogue_workbench::model::{model_for_corpus, ModelHyper};
use dialogue_workbench::simulator::{TemplateSet, UserSimulator};
use dialogue_workbench::trainer::{rl_train, supervised_train, RlHyper, RlMode, SlHyper};

fn main() -> dialogue_workbench::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    let corpus = generate_corpus(&UserSimulator::new(kb.clone(), 7), 400)?;
    let mut sl = model_for_corpus(ModelHyper::desk(), &corpus, kb.ontology(), 3)?;
    supervised_train(&mut sl, &corpus, &SlHyper { epochs: 10, ..SlHyper::default() })?;

    let eval = UserSimulator::new(kb.clone(), 1013);
    let base = evaluate_interactive(&sl, &eval, 200, TemplateSet::Extended)?;
    println!("supervised: success {:.3}, mean turns {:.2}", base.success_rate, base.mean_turns);
    let sim = UserSimulator::new(kb, 21).with_template_set(Some(TemplateSet::Extended));
    for mode in [RlMode::EndToEnd, RlMode::PolicyOnly] {
        let mut model = sl.clone();
        let log = rl_train(&mut model, &sim, episodes, &RlHyper { mode, ..RlHyper::default() })?;
        let window = log.len().div_ceil(5).max(1);
        let curve: Vec<String> = log
            .chunks(window)
            .map(|c| format!("{:.2}", c.iter().map(|r| r.success_rate).sum::<f64>() / c.len() as f64))
            .collect();
        let r = evaluate_interactive(&model, &eval, 200, TemplateSet::Extended)?;
        println!(
            "{mode}: training success {}, greedy success {:.3}, mean turns {:.2}",
            curve.join(" "),
            r.success_rate,
            r.mean_turns
        );
    }
    Ok(())
}
