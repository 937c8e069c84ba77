//! Annotated dialogue corpora: expert-vs-simulator generation and a
//! line-delimited JSON file format.

mod expert;

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use expert::{expert_next_action, ExpertAgent, ExpertPhase, ExpertState};

use crate::dialogue::{utterance_tokens, DialogueAct};
use crate::domain::SystemNlg;
use crate::episode::run_episode;
use crate::error::{Error, Result};
use crate::simulator::{judge_transcript, DialogueOutcome, RewardScheme, Transcript, UserGoal, UserSimulator};

pub const CORPUS_FORMAT_VERSION: u32 = 1;
const CORPUS_KIND: &str = "dialogue-corpus";

/// One supervised turn: the user utterance and everything the model is
/// trained to predict after reading it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTurn {
    pub user_text: String,
    /// Tokens as strings; indices depend on the vocabulary chosen later.
    pub tokens: Vec<String>,
    pub user_acts: Vec<DialogueAct>,
    /// Gold cumulative slot labels, one per slot.
    pub gold_labels: Vec<String>,
    /// Action label the system selected at this turn.
    pub action: String,
    pub system_text: String,
    pub kb_summary: Vec<f64>,
    /// Whether the action term contributes to the supervised loss.
    pub action_mask: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDialogue {
    pub goal: UserGoal,
    pub turns: Vec<AnnotatedTurn>,
    pub outcome: DialogueOutcome,
}

impl AnnotatedDialogue {
    /// Converts a transcript; gold labels come from the transcript's teacher labels.
    pub fn from_transcript(t: &Transcript, action_mask: bool, scheme: RewardScheme) -> Result<Self> {
        let outcome = judge_transcript(t, scheme)?;
        let turns = t
            .exchanges
            .iter()
            .map(|ex| AnnotatedTurn {
                user_text: ex.user.text.clone(),
                tokens: utterance_tokens(&ex.user.text),
                user_acts: ex.user.acts.clone(),
                gold_labels: ex.gold.clone(),
                action: ex.system.chosen().label(),
                system_text: ex.system.text.clone(),
                kb_summary: ex.kb_summary.clone(),
                action_mask,
            })
            .collect();
        Ok(Self {
            goal: t.goal.clone(),
            turns,
            outcome,
        })
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

/// Simulates `n` expert dialogues, episode indices `0..n`.
pub fn generate_corpus(sim: &UserSimulator, n: usize) -> Result<Vec<AnnotatedDialogue>> {
    if n == 0 {
        return Err(Error::Empty("corpus size"));
    }
    let nlg = SystemNlg::default_templates();
    let mut expert = ExpertAgent::new();
    (0..n as u64)
        .map(|i| {
            let mut user = sim.user(i)?;
            let t = run_episode(&mut expert, &mut user, sim.kb(), &nlg)?;
            AnnotatedDialogue::from_transcript(&t, true, RewardScheme::default())
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusHeader {
    kind: String,
    version: u32,
    dialogues: usize,
}

pub fn write_corpus<W: Write>(dialogues: &[AnnotatedDialogue], mut w: W) -> Result<()> {
    let header = CorpusHeader {
        kind: CORPUS_KIND.into(),
        version: CORPUS_FORMAT_VERSION,
        dialogues: dialogues.len(),
    };
    let io = |e| Error::io("<corpus>", e);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(io)?;
    for d in dialogues {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn save_corpus(dialogues: &[AnnotatedDialogue], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(dialogues, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R, origin: &str) -> Result<Vec<AnnotatedDialogue>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.into(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| err(1, "missing header line".into()))?
        .map_err(|e| err(1, e.to_string()))?;
    let header: CorpusHeader = serde_json::from_str(&first).map_err(|e| err(1, format!("bad header: {e}")))?;
    if header.kind != CORPUS_KIND || header.version != CORPUS_FORMAT_VERSION {
        return Err(err(
            1,
            format!("unsupported corpus `{}` version {}", header.kind, header.version),
        ));
    }
    let mut out = Vec::with_capacity(header.dialogues);
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line.map_err(|e| err(n, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| err(n, e.to_string()))?);
    }
    if out.len() != header.dialogues {
        return Err(err(
            out.len() + 2,
            format!("header announces {} dialogues, found {}", header.dialogues, out.len()),
        ));
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<AnnotatedDialogue>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), &path.display().to_string())
}
