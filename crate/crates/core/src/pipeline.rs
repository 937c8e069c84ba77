//! File-backed training stages driven by a [`RunConfig`]. Every stage reads
//! its inputs from the configured paths and writes a named checkpoint, a
//! metric log or a report; the CLI is a thin layer over these functions.
//!
//! Checkpoints are named after the regimen that produced them: `sl`,
//! `sl+il500`, `sl+il500+rl`, `sl+rl_policy` and so on.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::RunConfig;
use crate::corpus::{generate_corpus, load_corpus, save_corpus, AnnotatedDialogue};
use crate::domain::{generate_kb, KnowledgeBase};
use crate::error::{Error, Result};
use crate::evaluator::{
    dst_report_text, emit_learning_curves, evaluate_corpus_dst, evaluate_interactive, report_text, DstReport,
    EvalReport,
};
use crate::model::{model_for_corpus, DialogueModel};
use crate::simulator::{TemplateSet, UserSimulator};
use crate::trainer::{
    load_metric_log, rl_train, run_imitation, save_metric_log, supervised_train, BatchRecord, RlHyper, RlMode,
    Stage,
};

pub struct Pipeline {
    pub config: RunConfig,
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Tag of the model produced by imitation on top of `base`.
pub fn il_tag(base: &str, episodes: usize) -> String {
    format!("{base}+il{episodes}")
}

/// Tag of the model produced by reinforcement on top of `base`.
pub fn rl_tag(base: &str, mode: RlMode) -> String {
    match mode {
        RlMode::EndToEnd => format!("{base}+rl"),
        RlMode::PolicyOnly => format!("{base}+rl_policy"),
    }
}

/// Stages of a named regimen such as `sl+il500+rl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetStage {
    Supervised,
    Imitation(usize),
    Reinforce(RlMode),
}

pub fn parse_preset(preset: &str) -> Result<Vec<PresetStage>> {
    let mut parts = preset.split('+');
    if parts.next() != Some("sl") {
        return Err(Error::Invalid(format!("preset `{preset}` must start with `sl`")));
    }
    let mut stages = vec![PresetStage::Supervised];
    for p in parts {
        let stage = match p {
            "rl" => PresetStage::Reinforce(RlMode::EndToEnd),
            "rl_policy" => PresetStage::Reinforce(RlMode::PolicyOnly),
            il if il.starts_with("il") => PresetStage::Imitation(
                il[2..]
                    .parse()
                    .ok()
                    .filter(|&n: &usize| n > 0)
                    .ok_or_else(|| Error::Invalid(format!("bad imitation stage `{il}` in `{preset}`")))?,
            ),
            other => return Err(Error::Invalid(format!("unknown stage `{other}` in preset `{preset}`"))),
        };
        stages.push(stage);
    }
    Ok(stages)
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn checkpoint_path(&self, tag: &str) -> PathBuf {
        self.config.checkpoint_dir.join(format!("{tag}.json"))
    }

    pub fn metric_log_path(&self, tag: &str) -> PathBuf {
        self.config.output_dir.join(format!("{tag}.metrics.tsv"))
    }

    pub fn curve_path(&self, tag: &str) -> PathBuf {
        self.config.output_dir.join(format!("{tag}.curve.csv"))
    }

    pub fn report_path(&self, tag: &str, kind: &str) -> PathBuf {
        self.config.output_dir.join(format!("{tag}.{kind}.txt"))
    }

    pub fn gen_kb(&self) -> Result<KnowledgeBase> {
        let kb = generate_kb(self.config.kb_seed, self.config.kb_size())?;
        ensure_parent(&self.config.kb_path)?;
        kb.save(&self.config.kb_path)?;
        Ok(kb)
    }

    pub fn load_kb(&self) -> Result<Arc<KnowledgeBase>> {
        self.config.require_inputs(&[&self.config.kb_path])?;
        Ok(Arc::new(KnowledgeBase::load(&self.config.kb_path)?))
    }

    /// A simulator over `kb` with the configured templates and profiles.
    pub fn simulator(&self, kb: Arc<KnowledgeBase>, seed: u64) -> Result<UserSimulator> {
        let (train, extended, profiles) = self.config.user_surface()?;
        UserSimulator::new(kb, seed)
            .with_templates(train, extended)?
            .with_profiles(profiles)?
            .with_p_infeasible(self.config.p_infeasible)
    }

    /// Simulator used for imitation and reinforcement episodes.
    pub fn interaction_simulator(&self, kb: Arc<KnowledgeBase>) -> Result<UserSimulator> {
        Ok(self
            .simulator(kb, self.config.interaction_seed)?
            .with_template_set(Some(TemplateSet::Extended)))
    }

    pub fn gen_corpus(&self, n: usize, seed: u64) -> Result<Vec<AnnotatedDialogue>> {
        let sim = self.simulator(self.load_kb()?, seed)?;
        let corpus = generate_corpus(&sim, n)?;
        ensure_parent(&self.config.corpus_path)?;
        save_corpus(&corpus, &self.config.corpus_path)?;
        Ok(corpus)
    }

    pub fn load_corpus(&self) -> Result<Vec<AnnotatedDialogue>> {
        self.config.require_inputs(&[&self.config.corpus_path])?;
        load_corpus(&self.config.corpus_path)
    }

    pub fn load_model(&self, tag: &str) -> Result<DialogueModel> {
        let path = self.checkpoint_path(tag);
        self.config.require_inputs(&[&path])?;
        DialogueModel::load(&path)
    }

    fn save_model(&self, tag: &str, model: &DialogueModel) -> Result<PathBuf> {
        let path = self.checkpoint_path(tag);
        ensure_parent(&path)?;
        model.save(&path)?;
        Ok(path)
    }

    fn save_log(&self, tag: &str, log: &[BatchRecord]) -> Result<()> {
        let path = self.metric_log_path(tag);
        ensure_parent(&path)?;
        save_metric_log(log, &path)
    }

    /// Supervised pre-training; writes checkpoint and metric log `sl`.
    pub fn train_sl(&self) -> Result<DialogueModel> {
        let kb = self.load_kb()?;
        let corpus = self.load_corpus()?;
        let mut model = model_for_corpus(self.config.model_hyper(), &corpus, kb.ontology(), self.config.model_seed)?;
        let history = supervised_train(&mut model, &corpus, &self.config.sl_hyper())?;
        let log: Vec<BatchRecord> = history
            .iter()
            .map(|h| BatchRecord {
                stage: Stage::Supervised,
                episodes: h.epoch * corpus.len(),
                success_rate: f64::NAN,
                mean_turns: f64::NAN,
                mean_return: f64::NAN,
                dst_joint: f64::NAN,
                loss: h.mean_loss,
            })
            .collect();
        self.save_model("sl", &model)?;
        self.save_log("sl", &log)?;
        Ok(model)
    }

    /// Imitation on top of checkpoint `base`. The aggregate starts from the
    /// SL corpus plus any human-taught dialogues. Writes `base+il{n}`, and
    /// also `base+il500` when it is passed on the way.
    pub fn train_il(&self, base: &str, episodes: usize) -> Result<DialogueModel> {
        if episodes == 0 {
            return Err(Error::Invalid("imitation needs at least one episode".into()));
        }
        let kb = self.load_kb()?;
        let mut corpus = self.load_corpus()?;
        if self.config.aggregation_path.exists() {
            corpus.extend(load_corpus(&self.config.aggregation_path)?);
        }
        let mut model = self.load_model(base)?;
        let sim = self.interaction_simulator(kb)?;
        let marks: Vec<usize> = [500, episodes].into_iter().filter(|&m| m <= episodes).collect();
        let (log, snapshots) = run_imitation(&mut model, &sim, &mut corpus, episodes, &self.config.il_hyper(), &marks)?;
        for s in &snapshots {
            let tag = il_tag(base, s.episodes);
            self.save_model(&tag, &s.model)?;
            let upto: Vec<BatchRecord> = log.iter().copied().filter(|r| r.episodes <= s.episodes).collect();
            self.save_log(&tag, &upto)?;
        }
        Ok(model)
    }

    /// Reinforcement on top of checkpoint `base`; writes `base+rl` (or
    /// `base+rl_policy`).
    pub fn train_rl(&self, base: &str, episodes: usize, mode: RlMode) -> Result<DialogueModel> {
        let kb = self.load_kb()?;
        let mut model = self.load_model(base)?;
        let sim = self.interaction_simulator(kb)?;
        let hyper = RlHyper {
            mode,
            ..self.config.rl_hyper()
        };
        let log = rl_train(&mut model, &sim, episodes, &hyper)?;
        let tag = rl_tag(base, mode);
        self.save_model(&tag, &model)?;
        self.save_log(&tag, &log)?;
        Ok(model)
    }

    /// Tracking accuracy of checkpoint `tag` on `corpus_path` (the
    /// configured corpus by default); writes report `tag.corpus`.
    pub fn eval_corpus(&self, tag: &str, corpus_path: Option<&Path>) -> Result<DstReport> {
        let model = self.load_model(tag)?;
        let corpus = match corpus_path {
            Some(p) => {
                self.config.require_inputs(&[p])?;
                load_corpus(p)?
            }
            None => self.load_corpus()?,
        };
        let report = evaluate_corpus_dst(&model, &corpus)?;
        write_text(&self.report_path(tag, "corpus"), &dst_report_text(&report))?;
        Ok(report)
    }

    /// Greedy interactive evaluation of checkpoint `tag`; writes report
    /// `tag.<set>`.
    pub fn eval_interactive(&self, tag: &str, set: TemplateSet, n: usize) -> Result<EvalReport> {
        let model = self.load_model(tag)?;
        let sim = self.simulator(self.load_kb()?, self.config.eval_seed)?;
        let report = evaluate_interactive(&model, &sim, n, set)?;
        write_text(&self.report_path(tag, &set.to_string()), &report_text(&report))?;
        Ok(report)
    }

    /// Curve CSV from the metric log of `tag`.
    pub fn emit_curves(&self, tag: &str, out: Option<&Path>) -> Result<PathBuf> {
        let log_path = self.metric_log_path(tag);
        self.config.require_inputs(&[&log_path])?;
        let log = load_metric_log(&log_path)?;
        let out = out.map(Path::to_path_buf).unwrap_or_else(|| self.curve_path(tag));
        ensure_parent(&out)?;
        emit_learning_curves(&log, &out)?;
        Ok(out)
    }

    /// Runs every stage of `preset` from a fresh KB and corpus, then
    /// evaluates the final model on extended templates and emits the curve
    /// of its last interactive stage. Returns the final tag.
    pub fn run_preset(&self, preset: &str) -> Result<String> {
        let stages = parse_preset(preset)?;
        self.gen_kb()?;
        self.gen_corpus(self.config.corpus_dialogues, self.config.corpus_seed)?;
        let mut tag = String::from("sl");
        let mut curve_tag = tag.clone();
        for stage in stages {
            match stage {
                PresetStage::Supervised => {
                    self.train_sl()?;
                }
                PresetStage::Imitation(n) => {
                    self.train_il(&tag, n)?;
                    tag = il_tag(&tag, n);
                    curve_tag = tag.clone();
                }
                PresetStage::Reinforce(mode) => {
                    self.train_rl(&tag, self.config.rl_episodes, mode)?;
                    tag = rl_tag(&tag, mode);
                    curve_tag = tag.clone();
                }
            }
        }
        self.eval_interactive(&tag, TemplateSet::Extended, self.config.eval_dialogues)?;
        self.emit_curves(&curve_tag, None)?;
        Ok(tag)
    }
}
