//! Writes the learning-curve CSV of a short REINFORCE run and reads it back.

use std::sync::Arc;

use dialogue_workbench::corpus::generate_corpus;
use dialogue_workbench::domain::{generate_kb, KbSize};
use dialogue_workbench::evaluator::{emit_learning_curves, parse_learning_curves};
use dialogue_workbench::model::{model_for_corpus, ModelHyper};
use dialogue_workbench::simulator::{TemplateSet, UserSimulator};
use dialogue_workbench::trainer::{rl_train, supervised_train, RlHyper, SlHyper};
use dialogue_workbench::Error;

fn main() -> dialogue_workbench::Result<()> {
    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    let corpus = generate_corpus(&UserSimulator::new(kb.clone(), 7), 200)?;
    let mut model = model_for_corpus(ModelHyper::desk(), &corpus, kb.ontology(), 3)?;
    supervised_train(&mut model, &corpus, &SlHyper { epochs: 5, ..SlHyper::default() })?;
    let sim = UserSimulator::new(kb, 21).with_template_set(Some(TemplateSet::Extended));
    let log = rl_train(&mut model, &sim, 250, &RlHyper::default())?;

    let path = std::env::temp_dir().join("tod_learning_curve.csv");
    emit_learning_curves(&log, &path)?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    print!("{text}");
    let points = parse_learning_curves(&text)?;
    println!("{} points written to {}", points.len(), path.display());
    Ok(())
}
