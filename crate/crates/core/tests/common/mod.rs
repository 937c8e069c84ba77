//! Helpers shared by the integration tests: a central finite-difference
//! gradient checker, an enumeration oracle for small episodic MDPs and
//! small fixtures built from the bundled domain data.

#![allow(dead_code)]

pub mod fd;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dialogue_workbench::autodiff::{Gradients, ParamId, ParamSet};
use dialogue_workbench::corpus::{generate_corpus, AnnotatedDialogue};
use dialogue_workbench::dialogue::{SystemAction, NULL_VALUE};
use dialogue_workbench::domain::{generate_kb, KbResultSummary, KbSize, KnowledgeBase};
use dialogue_workbench::episode::DialogueAgent;
use dialogue_workbench::model::{model_for_corpus, DialogueModel, ModelHyper};
use dialogue_workbench::simulator::{UserSimulator, UserTurn};
use dialogue_workbench::Result;

pub const FD_EPSILON: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-3;
/// Gradients smaller than this in both estimates are compared absolutely.
pub const FD_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct Probe {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl Probe {
    pub fn rel_error(&self) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs()).max(FD_FLOOR);
        (self.analytic - self.numeric).abs() / scale
    }
}

/// Central differences `(L(θ+ε) − L(θ−ε)) / 2ε` against the analytic
/// gradient at each probed scalar. `eval` returns the loss and, when asked,
/// the gradients.
pub fn check_gradients<S>(
    state: &mut S,
    params: impl Fn(&mut S) -> &mut ParamSet,
    eval: impl Fn(&S, bool) -> (f64, Option<Gradients>),
    probes: &[(ParamId, usize)],
    eps: f64,
) -> Vec<Probe> {
    let (_, grads) = eval(state, true);
    let grads = grads.expect("gradients requested");
    let mut out = Vec::with_capacity(probes.len());
    for &(id, index) in probes {
        let analytic = grads.get(id).map_or(0.0, |g| g[index]);
        let orig = params(state).get(id).values()[index];
        params(state).get_mut(id).values_mut()[index] = orig + eps;
        let (plus, _) = eval(state, false);
        params(state).get_mut(id).values_mut()[index] = orig - eps;
        let (minus, _) = eval(state, false);
        params(state).get_mut(id).values_mut()[index] = orig;
        out.push(Probe {
            name: params(state).name(id).to_string(),
            index,
            analytic,
            numeric: (plus - minus) / (2.0 * eps),
        });
    }
    out
}

/// `n` probes: a tensor drawn uniformly, then a scalar within it.
pub fn random_probes<R: Rng>(params: &ParamSet, n: usize, rng: &mut R) -> Vec<(ParamId, usize)> {
    let ids: Vec<(ParamId, usize)> = params.iter().map(|(id, _, t)| (id, t.len())).collect();
    (0..n)
        .map(|_| {
            let (id, len) = ids[rng.gen_range(0..ids.len())];
            (id, rng.gen_range(0..len))
        })
        .collect()
}

/// Probes spread over every tensor whose name passes `filter`, `per_tensor` each.
pub fn covering_probes<R: Rng>(
    params: &ParamSet,
    per_tensor: usize,
    filter: impl Fn(&str) -> bool,
    rng: &mut R,
) -> Vec<(ParamId, usize)> {
    params
        .iter()
        .filter(|(_, name, _)| filter(name))
        .flat_map(|(id, _, t)| {
            let len = t.len();
            (0..per_tensor).map(move |_| (id, len)).collect::<Vec<_>>()
        })
        .map(|(id, len)| (id, rng.gen_range(0..len)))
        .collect()
}

pub fn max_rel_error(probes: &[Probe]) -> f64 {
    probes.iter().map(Probe::rel_error).fold(0.0, f64::max)
}

/// Uniformly random system actions with no tracking at all.
pub struct RandomAgent {
    rng: ChaCha8Rng,
    actions: Vec<SystemAction>,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            actions: SystemAction::inventory(),
        }
    }
}

impl DialogueAgent for RandomAgent {
    fn reset(&mut self) -> Result<()> {
        Ok(())
    }

    fn observe(&mut self, _user: &UserTurn) -> Result<Vec<String>> {
        Ok(vec![NULL_VALUE.to_string(); 5])
    }

    fn decide(&mut self, _kb: &KbResultSummary) -> Result<SystemAction> {
        Ok(self.actions[self.rng.gen_range(0..self.actions.len())])
    }
}

pub struct Fixture {
    pub kb: Arc<KnowledgeBase>,
    pub corpus: Vec<AnnotatedDialogue>,
    pub model: DialogueModel,
}

/// Desk-width model over a small expert corpus.
pub fn small_fixture(dialogues: usize, seed: u64) -> Fixture {
    let kb = Arc::new(generate_kb(1, KbSize::default()).expect("kb"));
    let corpus = generate_corpus(&UserSimulator::new(kb.clone(), seed), dialogues).expect("corpus");
    let model = model_for_corpus(ModelHyper::desk(), &corpus, kb.ontology(), seed).expect("model");
    Fixture { kb, corpus, model }
}

/// A finite-horizon MDP whose state is `(turn, previous action)`, with a
/// tabular softmax policy and a fixed reward per (turn, previous, action).
pub struct ToyMdp {
    pub turns: usize,
    pub actions: usize,
    /// `rewards[state_index(t, prev)][a]`.
    pub rewards: Vec<Vec<f64>>,
    /// Episode ends after the action `stop` when set (variable horizon).
    pub stop: Option<usize>,
}

impl ToyMdp {
    pub fn states(&self) -> usize {
        1 + (self.turns - 1) * self.actions
    }

    pub fn state_index(&self, turn: usize, prev: Option<usize>) -> usize {
        match prev {
            None => 0,
            Some(p) => 1 + (turn - 1) * self.actions + p,
        }
    }

    /// Every complete trajectory as its action sequence.
    pub fn trajectories(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            let ended = prefix.len() == self.turns || matches!((prefix.last(), self.stop), (Some(a), Some(s)) if *a == s);
            if ended {
                out.push(prefix);
                continue;
            }
            for a in 0..self.actions {
                let mut next = prefix.clone();
                next.push(a);
                stack.push(next);
            }
        }
        out
    }

    pub fn reward_sequence(&self, traj: &[usize]) -> Vec<f64> {
        traj.iter()
            .enumerate()
            .map(|(t, &a)| {
                let prev = if t == 0 { None } else { Some(traj[t - 1]) };
                self.rewards[self.state_index(t, prev)][a]
            })
            .collect()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Discounted returns written out as explicit sums `Σ_t γ^t r_{k+t}`.
pub fn returns_by_sum(rewards: &[f64], gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|k| rewards[k..].iter().enumerate().map(|(t, r)| gamma.powi(t as i32) * r).sum())
        .collect()
}

/// Comparison of the sampled REINFORCE gradient with its enumerated
/// expectation, per policy parameter.
#[derive(Debug, Clone)]
pub struct UnbiasednessReport {
    pub episodes: usize,
    pub exact: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl UnbiasednessReport {
    /// Largest |mean − exact| in units of its standard error.
    pub fn max_z(&self) -> f64 {
        self.exact
            .iter()
            .zip(&self.mean)
            .zip(&self.std_error)
            .map(|((e, m), s)| {
                let d = (m - e).abs();
                if d <= 1e-12 {
                    0.0
                } else {
                    d / s.max(1e-300)
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn within(&self, k: f64) -> bool {
        self.exact
            .iter()
            .zip(&self.mean)
            .zip(&self.std_error)
            .all(|((e, m), s)| (m - e).abs() <= k * s + 1e-12)
    }
}

/// Exact `E[Σ_k R_k ∇θ log π(a_k | s_k)]` by enumerating trajectories, with
/// the softmax score `e_a − π_s` written out by hand.
pub fn enumerated_gradient(mdp: &ToyMdp, logits: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let a_n = mdp.actions;
    let mut grad = vec![0.0; mdp.states() * a_n];
    for traj in mdp.trajectories() {
        let mut prob = 1.0;
        let mut states = Vec::with_capacity(traj.len());
        for (t, &a) in traj.iter().enumerate() {
            let s = mdp.state_index(t, if t == 0 { None } else { Some(traj[t - 1]) });
            prob *= softmax(&logits[s])[a];
            states.push(s);
        }
        let returns = returns_by_sum(&mdp.reward_sequence(&traj), gamma);
        for (k, (&s, &a)) in states.iter().zip(&traj).enumerate() {
            let pi = softmax(&logits[s]);
            for j in 0..a_n {
                let score = if j == a { 1.0 } else { 0.0 } - pi[j];
                grad[s * a_n + j] += prob * returns[k] * score;
            }
        }
    }
    grad
}

/// Expected undiscounted return by enumeration.
pub fn enumerated_value(mdp: &ToyMdp, logits: &[Vec<f64>]) -> f64 {
    mdp.trajectories()
        .iter()
        .map(|traj| {
            let mut prob = 1.0;
            for (t, &a) in traj.iter().enumerate() {
                let s = mdp.state_index(t, if t == 0 { None } else { Some(traj[t - 1]) });
                prob *= softmax(&logits[s])[a];
            }
            prob * mdp.reward_sequence(traj).iter().sum::<f64>()
        })
        .sum()
}

/// Samples `episodes` trajectories from the tabular policy, takes the
/// gradient of the crate's REINFORCE loss for each, and compares the
/// negated mean with the enumerated expectation.
pub fn reinforce_unbiasedness(
    mdp: &ToyMdp,
    logits: &[Vec<f64>],
    gamma: f64,
    episodes: usize,
    seed: u64,
) -> UnbiasednessReport {
    use dialogue_workbench::autodiff::{Graph, Tensor};
    use dialogue_workbench::model::{sample_index, Decision};
    use dialogue_workbench::trainer::{compute_returns, episode_policy_loss};

    let mut params = ParamSet::new(seed);
    let ids: Vec<ParamId> = logits
        .iter()
        .enumerate()
        .map(|(s, l)| params.insert(format!("policy.s{s}"), Tensor::vector(l.clone())).unwrap())
        .collect();
    let dim = mdp.states() * mdp.actions;
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..episodes {
        let mut g = Graph::new(&params);
        let mut decisions = Vec::new();
        let mut traj = Vec::new();
        for t in 0..mdp.turns {
            let s = mdp.state_index(t, traj.last().copied());
            let node = g.param(ids[s]);
            let lp = g.log_softmax(node).unwrap();
            let probs: Vec<f64> = g.value(lp).iter().map(|v| v.exp()).collect();
            let a = sample_index(&probs, &mut rng);
            decisions.push(Decision { action: a, log_probs: lp });
            traj.push(a);
            if mdp.stop == Some(a) {
                break;
            }
        }
        let returns = compute_returns(&mdp.reward_sequence(&traj), gamma).unwrap();
        let loss = episode_policy_loss(&mut g, &decisions, &returns).unwrap();
        let grads = g.backward(loss).unwrap();
        for (s, id) in ids.iter().enumerate() {
            for j in 0..mdp.actions {
                let v = -grads.get(*id).map_or(0.0, |g| g[j]);
                sum[s * mdp.actions + j] += v;
                sum_sq[s * mdp.actions + j] += v * v;
            }
        }
    }
    let n = episodes as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0) * n / (n - 1.0)).sqrt() / n.sqrt())
        .collect();
    UnbiasednessReport {
        episodes,
        exact: enumerated_gradient(mdp, logits, gamma),
        mean,
        std_error,
    }
}

/// The toy MDPs used for the unbiasedness checks: a two-armed bandit with
/// rewards (+1, 0) and random multi-turn problems up to 3 turns and 3
/// actions, one of them with an early-stop action.
pub fn toy_mdps(seed: u64) -> Vec<(String, ToyMdp, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![(
        "bandit 1x2".to_string(),
        ToyMdp {
            turns: 1,
            actions: 2,
            rewards: vec![vec![1.0, 0.0]],
            stop: None,
        },
        vec![vec![0.3, -0.2]],
    )];
    for (turns, actions, stop) in [(2, 3, None), (3, 2, Some(1)), (3, 3, Some(2))] {
        let probe = ToyMdp {
            turns,
            actions,
            rewards: Vec::new(),
            stop,
        };
        let states = probe.states();
        let rewards = (0..states)
            .map(|_| (0..actions).map(|_| rng.gen_range(-1.0..1.0f64).round() * 5.0 + rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let logits = (0..states)
            .map(|_| (0..actions).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        out.push((
            format!("{turns} turns x {actions} actions"),
            ToyMdp {
                turns,
                actions,
                rewards,
                stop,
            },
            logits,
        ));
    }
    out
}
