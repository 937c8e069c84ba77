//! Finite-difference suites over every graph primitive and the full
//! dialogue loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_gradients, covering_probes, max_rel_error, random_probes, small_fixture, Probe, FD_EPSILON};
use dialogue_workbench::autodiff::{Graph, NodeId, ParamId, ParamSet, Tensor};
use dialogue_workbench::model::{DialogueModel, Dropout};
use dialogue_workbench::trainer::{dialogue_gradients, dialogue_loss, SlHyper};
use dialogue_workbench::Result;

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub struct Inputs {
    params: ParamSet,
    a: ParamId,
    v: ParamId,
    x: ParamId,
    y: ParamId,
    p: ParamId,
    table: ParamId,
    weights5: Vec<f64>,
    weights3: Vec<f64>,
    weights9: Vec<f64>,
}

fn inputs(seed: u64) -> Inputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new(seed);
    let a = params.insert("a", Tensor::new(vec![3, 4], uniform(&mut rng, 12, -1.0, 1.0)).unwrap()).unwrap();
    let v = params.insert("v", Tensor::vector(uniform(&mut rng, 4, -1.0, 1.0))).unwrap();
    // Entries of x stay clear of the clamp floor at -0.5.
    let xs: Vec<f64> = uniform(&mut rng, 5, 0.0, 1.0)
        .into_iter()
        .enumerate()
        .map(|(i, u)| if i % 2 == 0 { -1.5 + 0.8 * u } else { -0.3 + 1.3 * u })
        .collect();
    let x = params.insert("x", Tensor::vector(xs)).unwrap();
    let y = params.insert("y", Tensor::vector(uniform(&mut rng, 5, -1.0, 1.0))).unwrap();
    let p = params.insert("p", Tensor::vector(uniform(&mut rng, 5, 0.2, 1.0))).unwrap();
    let table = params.insert("table", Tensor::new(vec![4, 3], uniform(&mut rng, 12, -1.0, 1.0)).unwrap()).unwrap();
    Inputs {
        params,
        a,
        v,
        x,
        y,
        p,
        table,
        weights5: uniform(&mut rng, 5, -2.0, 2.0),
        weights3: uniform(&mut rng, 3, -2.0, 2.0),
        weights9: uniform(&mut rng, 9, -2.0, 2.0),
    }
}

/// Random linear readout so every output element carries a distinct weight.
fn project(g: &mut Graph<'_>, x: NodeId, w: &[f64]) -> Result<NodeId> {
    let w = g.vector(w.to_vec());
    let m = g.mul(x, w)?;
    g.sum(m)
}

pub type Build = fn(&mut Graph<'_>, &Inputs) -> Result<NodeId>;

pub fn primitive_cases() -> Vec<(&'static str, Build)> {
    vec![
        ("matmul", |g, i| {
            let (a, v) = (g.param(i.a), g.param(i.v));
            let out = g.matmul(a, v)?;
            project(g, out, &i.weights3)
        }),
        ("add", |g, i| {
            let (x, y) = (g.param(i.x), g.param(i.y));
            let out = g.add(x, y)?;
            project(g, out, &i.weights5)
        }),
        ("add_n", |g, i| {
            let (x, y) = (g.param(i.x), g.param(i.y));
            let out = g.add_n(&[x, y, x])?;
            project(g, out, &i.weights5)
        }),
        ("mul", |g, i| {
            let (x, y) = (g.param(i.x), g.param(i.y));
            let out = g.mul(x, y)?;
            project(g, out, &i.weights5)
        }),
        ("scale", |g, i| {
            let x = g.param(i.x);
            let out = g.scale(x, -1.7)?;
            project(g, out, &i.weights5)
        }),
        ("concat", |g, i| {
            let (x, v) = (g.param(i.x), g.param(i.v));
            let out = g.concat(&[x, v])?;
            project(g, out, &i.weights9)
        }),
        ("slice", |g, i| {
            let x = g.param(i.x);
            let out = g.slice(x, 1, 3)?;
            project(g, out, &i.weights3)
        }),
        ("sigmoid", |g, i| {
            let x = g.param(i.x);
            let out = g.sigmoid(x)?;
            project(g, out, &i.weights5)
        }),
        ("tanh", |g, i| {
            let y = g.param(i.y);
            let out = g.tanh(y)?;
            project(g, out, &i.weights5)
        }),
        ("softmax", |g, i| {
            let y = g.param(i.y);
            let out = g.softmax(y)?;
            project(g, out, &i.weights5)
        }),
        ("log_softmax", |g, i| {
            let y = g.param(i.y);
            let out = g.log_softmax(y)?;
            project(g, out, &i.weights5)
        }),
        ("clamp_min", |g, i| {
            let x = g.param(i.x);
            let out = g.clamp_min(x, -0.5)?;
            project(g, out, &i.weights5)
        }),
        ("embedding", |g, i| {
            let t = g.param(i.table);
            let out = g.embedding(t, 2)?;
            project(g, out, &i.weights3)
        }),
        ("dropout", |g, i| {
            let y = g.param(i.y);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let out = g.dropout(y, 0.6, true, &mut rng)?;
            project(g, out, &i.weights5)
        }),
        ("cross_entropy", |g, i| {
            let p = g.param(i.p);
            g.cross_entropy(p, 1)
        }),
        ("pick", |g, i| {
            let y = g.param(i.y);
            let t = g.tanh(y)?;
            g.pick(t, 2)
        }),
        ("nll", |g, i| {
            let y = g.param(i.y);
            let lp = g.log_softmax(y)?;
            g.nll(lp, 3)
        }),
        ("sum", |g, i| {
            let y = g.param(i.y);
            let sq = g.mul(y, y)?;
            g.sum(sq)
        }),
    ]
}

/// Every scalar of every input probed, per primitive; returns the worst
/// relative error and the number of nonzero analytic gradients.
pub fn primitive_check(build: Build, seed: u64) -> (f64, usize) {
    let mut state = inputs(seed);
    let probes: Vec<(ParamId, usize)> = state
        .params
        .iter()
        .flat_map(|(id, _, t)| (0..t.len()).map(move |k| (id, k)))
        .collect();
    let eval = |s: &Inputs, want: bool| {
        let mut g = Graph::new(&s.params);
        let loss = build(&mut g, s).unwrap();
        let value = g.scalar(loss);
        (value, want.then(|| g.backward(loss).unwrap()))
    };
    let result = check_gradients(&mut state, |s| &mut s.params, eval, &probes, FD_EPSILON);
    (max_rel_error(&result), result.iter().filter(|p| p.analytic != 0.0).count())
}

/// 24 random probes plus one in every tensor, on one dialogue of a
/// desk-width model, with or without dropout.
pub fn full_loss_check(with_dropout: bool) -> Vec<Probe> {
    let mut fx = small_fixture(3, 17);
    let dialogue = fx.corpus[0].clone();
    let hyper = SlHyper::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut probes = random_probes(fx.model.params(), 24, &mut rng);
    probes.extend(covering_probes(fx.model.params(), 1, |_| true, &mut rng));
    let eval = |m: &DialogueModel, want: bool| {
        let mut dropout = with_dropout.then(|| Dropout::new(0.5, 11).unwrap());
        if want {
            let (loss, grads) = dialogue_gradients(m, &dialogue, &hyper, dropout.as_mut()).unwrap();
            (loss, Some(grads))
        } else {
            let mut g = Graph::new(m.params());
            let loss = dialogue_loss(m, &mut g, &dialogue, &hyper, dropout.as_mut()).unwrap();
            (g.scalar(loss), None)
        }
    };
    check_gradients(&mut fx.model, |m| m.params_mut(), eval, &probes, FD_EPSILON)
}
