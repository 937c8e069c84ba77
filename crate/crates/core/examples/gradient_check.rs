//! Compares backpropagated gradients of the full dialogue loss with central
//! finite differences at randomly chosen parameters.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dialogue_workbench::autodiff::Graph;
use dialogue_workbench::corpus::generate_corpus;
use dialogue_workbench::domain::{generate_kb, KbSize};
use dialogue_workbench::model::{model_for_corpus, ModelHyper};
use dialogue_workbench::simulator::UserSimulator;
use dialogue_workbench::trainer::{dialogue_gradients, dialogue_loss, SlHyper};

fn main() -> dialogue_workbench::Result<()> {
    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    let corpus = generate_corpus(&UserSimulator::new(kb.clone(), 17), 3)?;
    let mut model = model_for_corpus(ModelHyper::desk(), &corpus, kb.ontology(), 17)?;
    let dialogue = &corpus[0];
    let hyper = SlHyper::default();
    let (loss, grads) = dialogue_gradients(&model, dialogue, &hyper, None)?;
    println!("loss {loss:.6} over {} turns", dialogue.len());

    let eps = 1e-4;
    let ids: Vec<_> = model.params().iter().map(|(id, _, t)| (id, t.len())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (id, len) = ids[rng.gen_range(0..ids.len())];
        let k = rng.gen_range(0..len);
        let mut eval = |delta: f64| -> dialogue_workbench::Result<f64> {
            let orig = model.params().get(id).values()[k];
            model.params_mut().get_mut(id).values_mut()[k] = orig + delta;
            let mut g = Graph::new(model.params());
            let l = dialogue_loss(&model, &mut g, dialogue, &hyper, None)?;
            let v = g.scalar(l);
            drop(g);
            model.params_mut().get_mut(id).values_mut()[k] = orig;
            Ok(v)
        };
        let numeric = (eval(eps)? - eval(-eps)?) / (2.0 * eps);
        let analytic = grads.get(id).map_or(0.0, |g| g[k]);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7);
        worst = worst.max(rel);
        println!("{:<28} [{k:>4}] analytic {analytic:>12.4e} numeric {numeric:>12.4e} rel {rel:.1e}", model.params().name(id));
    }
    println!("max relative error {worst:.2e}");
    Ok(())
}
