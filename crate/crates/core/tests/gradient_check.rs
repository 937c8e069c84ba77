mod common;

use common::fd::{full_loss_check, primitive_cases, primitive_check};
use common::{max_rel_error, small_fixture, FD_TOLERANCE};
use dialogue_workbench::trainer::{dialogue_gradients, SlHyper};

#[test]
fn every_primitive_matches_central_differences() {
    for seed in [1, 2, 3] {
        for (name, build) in primitive_cases() {
            let (worst, nonzero) = primitive_check(build, seed);
            assert!(worst < FD_TOLERANCE, "{name} (seed {seed}): max relative error {worst:e}");
            assert!(nonzero > 0, "{name} produced no gradient");
        }
    }
}

#[test]
fn full_dialogue_loss_matches_central_differences() {
    for with_dropout in [false, true] {
        let result = full_loss_check(with_dropout);
        assert!(result.len() >= 20);
        let worst = max_rel_error(&result);
        assert!(worst < FD_TOLERANCE, "dropout={with_dropout}: max relative error {worst:e}");
        assert!(result.iter().filter(|p| p.analytic.abs() > 1e-6).count() >= 10);
    }
}

#[test]
fn zero_loss_weights_give_zero_gradients() {
    let fx = small_fixture(2, 3);
    let hyper = SlHyper {
        slot_weights: [0.0; 5],
        action_weight: 0.0,
        ..SlHyper::default()
    };
    let (_, grads) = dialogue_gradients(&fx.model, &fx.corpus[0], &hyper, None).unwrap();
    for (id, name, _) in fx.model.params().iter() {
        if let Some(g) = grads.get(id) {
            assert!(g.iter().all(|&v| v == 0.0), "{name} has a nonzero gradient");
        }
    }
}
