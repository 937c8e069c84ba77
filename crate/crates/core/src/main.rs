use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use dialogue_workbench::config::RunConfig;
use dialogue_workbench::evaluator::{dst_report_text, report_text};
use dialogue_workbench::pipeline::Pipeline;
use dialogue_workbench::service::{serve, Correction, OnlineUpdates, SessionService, BIND_ENV, DEFAULT_BIND};
use dialogue_workbench::simulator::TemplateSet;
use dialogue_workbench::trainer::RlMode;
use dialogue_workbench::{Error, Result};

#[derive(Parser)]
#[command(name = "tod", version, about = "Task-oriented dialogue agent: train, evaluate, chat and serve")]
struct Cli {
    /// Run configuration file (flat key = value); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic movie knowledge base.
    GenKb,
    /// Generate an expert corpus against the simulated user.
    GenCorpus {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Supervised pre-training on the corpus; writes checkpoint `sl`.
    TrainSl,
    /// Imitation learning with dataset aggregation (presets: 500, 1000).
    TrainIl {
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value = "sl")]
        from: String,
    },
    /// REINFORCE from simulated dialogue rewards.
    TrainRl {
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long, default_value = "sl")]
        from: String,
        /// end_to_end or policy_only.
        #[arg(long)]
        mode: Option<RlMode>,
    },
    /// Tracking accuracy on an annotated corpus.
    EvalCorpus {
        #[arg(long, default_value = "sl")]
        model: String,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Greedy dialogues against the simulated user.
    EvalInteractive {
        #[arg(long, default_value = "sl")]
        model: String,
        /// train or extended.
        #[arg(long, default_value = "extended")]
        templates: TemplateSet,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Learning-curve CSV from a stage's metric log.
    EmitCurves {
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every stage of a regimen such as `sl+il500+rl`.
    Pipeline {
        #[arg(long, default_value = "sl+il500+rl")]
        preset: String,
    },
    /// Talk to a checkpoint in the terminal.
    Chat {
        #[arg(long, default_value = "sl")]
        model: String,
    },
    /// HTTP session service (bind address from TOD_BIND).
    Serve {
        #[arg(long, default_value = "sl")]
        model: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let p = Pipeline::new(config)?;
    let cfg = &p.config;
    match cli.command {
        Command::GenKb => {
            let kb = p.gen_kb()?;
            println!("wrote {} ({} entities)", cfg.kb_path.display(), kb.len());
        }
        Command::GenCorpus { n, seed } => {
            let corpus = p.gen_corpus(n.unwrap_or(cfg.corpus_dialogues), seed.unwrap_or(cfg.corpus_seed))?;
            println!("wrote {} ({} dialogues)", cfg.corpus_path.display(), corpus.len());
        }
        Command::TrainSl => {
            p.train_sl()?;
            println!("wrote {}", p.checkpoint_path("sl").display());
        }
        Command::TrainIl { episodes, from } => {
            let n = episodes.unwrap_or(cfg.il_episodes);
            p.train_il(&from, n)?;
            println!("wrote {}", p.checkpoint_path(&dialogue_workbench::pipeline::il_tag(&from, n)).display());
        }
        Command::TrainRl { episodes, from, mode } => {
            let mode = mode.unwrap_or(cfg.rl_mode);
            p.train_rl(&from, episodes.unwrap_or(cfg.rl_episodes), mode)?;
            println!("wrote {}", p.checkpoint_path(&dialogue_workbench::pipeline::rl_tag(&from, mode)).display());
        }
        Command::EvalCorpus { model, corpus } => {
            print!("{}", dst_report_text(&p.eval_corpus(&model, corpus.as_deref())?));
        }
        Command::EvalInteractive { model, templates, n } => {
            print!("{}", report_text(&p.eval_interactive(&model, templates, n.unwrap_or(cfg.eval_dialogues))?));
        }
        Command::EmitCurves { model, out } => {
            println!("wrote {}", p.emit_curves(&model, out.as_deref())?.display());
        }
        Command::Pipeline { preset } => {
            let tag = p.run_preset(&preset)?;
            print!("{}", std::fs::read_to_string(p.report_path(&tag, "extended")).map_err(|e| Error::io(&p.report_path(&tag, "extended"), e))?);
        }
        Command::Chat { model } => chat(&p, &model)?,
        Command::Serve { model } => {
            let service = service_for(&p, &model)?;
            let addr = std::env::var(BIND_ENV).unwrap_or_else(|_| DEFAULT_BIND.to_string());
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::Invalid(format!("runtime: {e}")))?;
            eprintln!("serving {model} on {addr}");
            rt.block_on(serve(Arc::new(service), &addr))?;
        }
    }
    Ok(())
}

fn service_for(p: &Pipeline, tag: &str) -> Result<SessionService> {
    let cfg = &p.config;
    let online = cfg.online_updates.then(|| OnlineUpdates {
        rewards: cfg.rewards(),
        gamma: cfg.gamma,
        learning_rate: cfg.learning_rate,
        ..OnlineUpdates::default()
    });
    SessionService::new(p.load_model(tag)?, p.load_kb()?)
        .with_rewards(cfg.rewards())
        .with_online_updates(online)
        .with_aggregation_path(cfg.aggregation_path.clone())
}

fn chat(p: &Pipeline, tag: &str) -> Result<()> {
    let service = service_for(p, tag)?;
    let id = service.create_session().id;
    println!("type a message; `:fix TURN SLOT VALUE` corrects a belief, `:done yes|no` ends");
    let stdin = io::stdin();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| Error::Invalid(format!("stdin: {e}")))?;
        let words: Vec<&str> = line.split_whitespace().collect();
        let outcome = match words.as_slice() {
            [":done", verdict] => {
                let r = service.feedback(&id, *verdict == "yes").map_err(|e| Error::Invalid(e.to_string()))?;
                println!("saved; {} taught dialogues", r.aggregated_dialogues);
                return Ok(());
            }
            [":fix", turn, slot, value] => turn
                .parse()
                .map_err(|_| Error::Invalid(format!("bad turn `{turn}`")))
                .and_then(|turn| {
                    service
                        .correct(
                            &id,
                            Correction {
                                turn,
                                slot: slot.to_string(),
                                value: value.to_string(),
                            },
                        )
                        .map_err(|e| Error::Invalid(e.to_string()))
                })
                .map(|_| println!("noted")),
            _ => service.utterance(&id, &line).map_err(|e| Error::Invalid(e.to_string())).map(|t| {
                println!("system [{}]: {}", t.action, t.system_text);
                for b in &t.beliefs {
                    print!("  {}={} ({:.2})", b.slot, b.argmax, b.prob);
                }
                println!();
            }),
        };
        if let Err(e) = outcome {
            println!("! {e}");
        }
        io::stdout().flush().ok();
    }
    Ok(())
}
