use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Supervised,
    Imitation,
    Reinforce,
    Evaluation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Supervised => "sl",
            Stage::Imitation => "il",
            Stage::Reinforce => "rl",
            Stage::Evaluation => "eval",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sl" => Ok(Stage::Supervised),
            "il" => Ok(Stage::Imitation),
            "rl" => Ok(Stage::Reinforce),
            "eval" => Ok(Stage::Evaluation),
            other => Err(Error::Invalid(format!("unknown stage `{other}`"))),
        }
    }
}

/// Statistics of one training batch (or one evaluation checkpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub stage: Stage,
    /// Dialogues consumed so far in this stage, including this batch.
    pub episodes: usize,
    pub success_rate: f64,
    /// Mean system turns of successful dialogues; NaN when none succeeded.
    pub mean_turns: f64,
    /// Mean undiscounted dialogue reward.
    pub mean_return: f64,
    pub dst_joint: f64,
    pub loss: f64,
}

const HEADER: &str = "stage\tepisodes\tsuccess_rate\tmean_turns\tmean_return\tdst_joint\tloss";

/// Tab-separated metric log with a header line. Floats use Rust's
/// shortest round-trip formatting so values parse back exactly.
pub fn write_metric_log<W: Write>(records: &[BatchRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.stage, r.episodes, r.success_rate, r.mean_turns, r.mean_return, r.dst_joint, r.loss
        )?;
    }
    Ok(())
}

pub fn save_metric_log(records: &[BatchRecord], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_metric_log(records, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_metric_log(text: &str, origin: &str) -> Result<Vec<BatchRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: origin.into(),
                line: 1,
                message: "missing metric log header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.into(),
            line: i + 1,
            message,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(err(format!("expected 7 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        out.push(BatchRecord {
            stage: f[0].parse().map_err(|e: Error| err(e.to_string()))?,
            episodes: f[1].parse().map_err(|_| err(format!("bad count `{}`", f[1])))?,
            success_rate: num(f[2])?,
            mean_turns: num(f[3])?,
            mean_return: num(f[4])?,
            dst_joint: num(f[5])?,
            loss: num(f[6])?,
        });
    }
    Ok(out)
}

pub fn load_metric_log(path: &Path) -> Result<Vec<BatchRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_metric_log(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trips_exactly() {
        let recs = vec![
            BatchRecord {
                stage: Stage::Reinforce,
                episodes: 25,
                success_rate: 0.36,
                mean_turns: 9.111111111111111,
                mean_return: -3.2,
                dst_joint: 0.1 + 0.2,
                loss: 12.5,
            },
            BatchRecord {
                stage: Stage::Imitation,
                episodes: 50,
                success_rate: 0.0,
                mean_turns: f64::NAN,
                mean_return: -15.0,
                dst_joint: 1.0 / 3.0,
                loss: 0.0,
            },
        ];
        let mut buf = Vec::new();
        write_metric_log(&recs, &mut buf).unwrap();
        let back = read_metric_log(std::str::from_utf8(&buf).unwrap(), "m").unwrap();
        assert_eq!(back[0], recs[0]);
        assert!(back[1].mean_turns.is_nan());
        assert_eq!(back[1].dst_joint.to_bits(), recs[1].dst_joint.to_bits());
    }
}
