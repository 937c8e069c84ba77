//! Metrics: corpus DST accuracy, interactive success / turn size / DST
//! accuracy, learning-curve tables and flat key-value reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Graph;
use crate::corpus::AnnotatedDialogue;
use crate::dialogue::Slot;
use crate::domain::SystemNlg;
use crate::episode::{run_episode, DialogueAgent};
use crate::error::{Error, Result};
use crate::model::{DecodeMode, DialogueModel, ModelAgent};
use crate::simulator::{judge_transcript, DialogueOutcome, RewardScheme, TemplateSet, Transcript, UserSimulator};
use crate::trainer::BatchRecord;

/// Turn-level tracking hit counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DstCounts {
    pub turns: usize,
    pub joint: usize,
    pub per_slot: [usize; Slot::COUNT],
}

impl DstCounts {
    pub fn add_turn(&mut self, predicted: &[String], gold: &[String]) {
        self.turns += 1;
        let mut all = true;
        for s in Slot::ALL {
            if predicted[s.index()] == gold[s.index()] {
                self.per_slot[s.index()] += 1;
            } else {
                all = false;
            }
        }
        if all {
            self.joint += 1;
        }
    }

    pub fn add_transcript(&mut self, t: &Transcript) {
        for ex in &t.exchanges {
            self.add_turn(&ex.beliefs, &ex.gold);
        }
    }

    pub fn joint_accuracy(&self) -> f64 {
        ratio(self.joint, self.turns)
    }

    pub fn slot_accuracy(&self) -> Vec<f64> {
        self.per_slot.iter().map(|&c| ratio(c, self.turns)).collect()
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DstReport {
    pub slot_accuracy: Vec<f64>,
    pub joint_accuracy: f64,
    pub turns: usize,
}

impl From<DstCounts> for DstReport {
    fn from(c: DstCounts) -> Self {
        Self {
            slot_accuracy: c.slot_accuracy(),
            joint_accuracy: c.joint_accuracy(),
            turns: c.turns,
        }
    }
}

/// Tracking accuracy on annotated dialogues, reading the recorded system
/// actions as previous-action inputs.
pub fn evaluate_corpus_dst(model: &DialogueModel, corpus: &[AnnotatedDialogue]) -> Result<DstReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("evaluation corpus"));
    }
    let mut counts = DstCounts::default();
    for d in corpus {
        let mut g = Graph::new(model.params());
        let mut state = model.initial_state(&mut g);
        let mut prev = model.actions().start_index();
        for turn in &d.turns {
            let tokens = model.vocab().encode(&turn.tokens);
            let out = model.read_turn(&mut g, state, &tokens, prev, None)?;
            counts.add_turn(&model.argmax_labels(&g, &out.slot_log_probs), &turn.gold_labels);
            state = out.state;
            prev = model.actions().index_of_label(&turn.action)?;
        }
    }
    Ok(counts.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub success_rate: f64,
    /// Mean system turns over successful dialogues; NaN when none succeeded.
    pub mean_turns: f64,
    pub slot_accuracy: Vec<f64>,
    pub joint_accuracy: f64,
    pub mean_return: f64,
    pub n_dialogues: usize,
    pub template_set: Option<TemplateSet>,
    pub decoding: String,
}

/// Aggregates judged transcripts into a report.
pub fn report_from_transcripts(
    transcripts: &[Transcript],
    scheme: RewardScheme,
    template_set: Option<TemplateSet>,
    decoding: &str,
) -> Result<EvalReport> {
    if transcripts.is_empty() {
        return Err(Error::Empty("transcripts"));
    }
    let outcomes: Vec<DialogueOutcome> = transcripts
        .iter()
        .map(|t| judge_transcript(t, scheme))
        .collect::<Result<_>>()?;
    let mut dst = DstCounts::default();
    transcripts.iter().for_each(|t| dst.add_transcript(t));
    let successes: Vec<&DialogueOutcome> = outcomes.iter().filter(|o| o.success).collect();
    let n = transcripts.len() as f64;
    Ok(EvalReport {
        success_rate: successes.len() as f64 / n,
        mean_turns: if successes.is_empty() {
            f64::NAN
        } else {
            successes.iter().map(|o| o.turn_count as f64).sum::<f64>() / successes.len() as f64
        },
        slot_accuracy: dst.slot_accuracy(),
        joint_accuracy: dst.joint_accuracy(),
        mean_return: outcomes.iter().map(DialogueOutcome::total_reward).sum::<f64>() / n,
        n_dialogues: transcripts.len(),
        template_set,
        decoding: decoding.to_string(),
    })
}

/// Runs `n` dialogues (episode indices `0..n`) with any agent.
pub fn simulate<A: DialogueAgent + ?Sized>(agent: &mut A, sim: &UserSimulator, n: usize) -> Result<Vec<Transcript>> {
    let nlg = SystemNlg::default_templates();
    (0..n as u64)
        .map(|i| {
            let mut user = sim.user(i)?;
            run_episode(agent, &mut user, sim.kb(), &nlg)
        })
        .collect()
}

/// Greedy interactive evaluation against the simulator on one template set.
pub fn evaluate_interactive(
    model: &DialogueModel,
    sim: &UserSimulator,
    n: usize,
    template_set: TemplateSet,
) -> Result<EvalReport> {
    if n == 0 {
        return Err(Error::Empty("evaluation dialogues"));
    }
    let sim = sim.clone().with_template_set(Some(template_set));
    let mut agent = ModelAgent::new(model, DecodeMode::Greedy);
    let transcripts = simulate(&mut agent, &sim, n)?;
    report_from_transcripts(&transcripts, RewardScheme::default(), Some(template_set), "greedy")
}

/// One learning-curve row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode_count: usize,
    pub success_rate: f64,
    pub mean_turns: f64,
    pub dst_joint: f64,
    pub mean_return: f64,
}

impl From<&BatchRecord> for CurvePoint {
    fn from(r: &BatchRecord) -> Self {
        Self {
            episode_count: r.episodes,
            success_rate: r.success_rate,
            mean_turns: r.mean_turns,
            dst_joint: r.dst_joint,
            mean_return: r.mean_return,
        }
    }
}

pub const CURVE_HEADER: &str = "episode_count,success_rate,mean_turns,dst_joint,mean_return";

/// Curve CSV text, rows sorted by episode count.
pub fn learning_curve_csv(points: &[CurvePoint]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Empty("metric log"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.episode_count);
    let mut out = format!("{CURVE_HEADER}\n");
    for p in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.episode_count, p.success_rate, p.mean_turns, p.dst_joint, p.mean_return
        );
    }
    Ok(out)
}

pub fn emit_learning_curves(log: &[BatchRecord], path: &Path) -> Result<()> {
    let points: Vec<CurvePoint> = log.iter().map(CurvePoint::from).collect();
    fs::write(path, learning_curve_csv(&points)?).map_err(|e| Error::io(path, e))
}

pub fn parse_learning_curves(text: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVE_HEADER) {
        return Err(Error::Parse {
            path: "curves".into(),
            line: 1,
            message: "missing curve header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let err = || Error::Parse {
                path: "curves".into(),
                line: i + 2,
                message: format!("malformed row `{l}`"),
            };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(err());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err());
            Ok(CurvePoint {
                episode_count: f[0].parse().map_err(|_| err())?,
                success_rate: num(f[1])?,
                mean_turns: num(f[2])?,
                dst_joint: num(f[3])?,
                mean_return: num(f[4])?,
            })
        })
        .collect()
}

/// Flat `key = value` report text.
pub fn report_text(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "success_rate = {}", r.success_rate);
    let _ = writeln!(out, "mean_turns = {}", r.mean_turns);
    for (s, a) in Slot::ALL.iter().zip(&r.slot_accuracy) {
        let _ = writeln!(out, "dst_{s} = {a}");
    }
    let _ = writeln!(out, "dst_joint = {}", r.joint_accuracy);
    let _ = writeln!(out, "mean_return = {}", r.mean_return);
    let _ = writeln!(out, "n_dialogues = {}", r.n_dialogues);
    if let Some(t) = r.template_set {
        let _ = writeln!(out, "template_set = {t}");
    }
    let _ = writeln!(out, "decoding = {}", r.decoding);
    out
}

/// Flat report for corpus tracking accuracy.
pub fn dst_report_text(r: &DstReport) -> String {
    let mut out = String::new();
    for (s, a) in Slot::ALL.iter().zip(&r.slot_accuracy) {
        let _ = writeln!(out, "dst_{s} = {a}");
    }
    let _ = writeln!(out, "dst_joint = {}", r.joint_accuracy);
    let _ = writeln!(out, "turns = {}", r.turns);
    out
}
